"""Voting-similarity temporal networks from roll-call records.

Records are read from a CSV with header ``t,bill,voter,state,party,vote``.
``t`` is a 1-based slice number, and ``vote`` is one of ``y``, ``n``, ``a``
(yes, no, abstain), mapped to +1, -1 and 0.

Two voters (or states) are compared on the bills both have a record for;
the weight is the fraction of those bills on which the values agree. An
abstention on both sides compares equal (0 == 0). States vote through the
sum of their members' values.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .network import TemporalNetwork

VOTE_CODES = {"y": 1, "n": -1, "a": 0}
HEADER = ("t", "bill", "voter", "state", "party", "vote")


@dataclass(frozen=True, eq=False)
class VoteTable:
    """Columnar roll-call records; ``t`` is 0-based here.

    Attributes
    ----------
    t : ndarray of int
    bill, voter, state, party : ndarray of str
    vote : ndarray of int, values in {-1, 0, 1}
    """

    t: np.ndarray
    bill: np.ndarray
    voter: np.ndarray
    state: np.ndarray
    party: np.ndarray
    vote: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        cols = {k: np.asarray(getattr(self, k), dtype=str) for k in ("bill", "voter", "state", "party")}
        vote = np.asarray(self.vote, dtype=np.int64)
        n = t.size
        if n == 0:
            raise ValidationError("the vote table is empty")
        if any(c.shape != (n,) for c in cols.values()) or vote.shape != (n,):
            raise ValidationError("vote table columns differ in length")
        if np.any(t < 0):
            raise ValidationError("slice numbers must be positive")
        if not np.all(np.isin(vote, (-1, 0, 1))):
            raise ValidationError("votes must lie in {-1, 0, 1}")
        keys = set(zip(t.tolist(), cols["bill"].tolist(), cols["voter"].tolist()))
        if len(keys) != n:
            raise ValidationError("duplicate (t, bill, voter) record")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "vote", vote)
        for k, v in cols.items():
            object.__setattr__(self, k, v)

    @property
    def T(self):
        return int(self.t.max()) + 1

    def voters(self):
        return np.unique(self.voter)

    def states(self):
        return np.unique(self.state)


def read_votes_csv(path):
    """Parse a vote CSV into a :class:`VoteTable`."""
    rows = {k: [] for k in HEADER}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != HEADER:
            raise ValidationError(f"{path}: header must be {','.join(HEADER)}")
        for line, rec in enumerate(reader, start=2):
            rec = {k.strip(): (v or "").strip() for k, v in rec.items() if k is not None}
            try:
                t = int(rec["t"])
            except ValueError:
                raise ValidationError(f"{path}:{line}: slice {rec['t']!r} is not an integer") from None
            if t < 1:
                raise ValidationError(f"{path}:{line}: slices are numbered from 1")
            code = rec["vote"].lower()
            if code not in VOTE_CODES:
                raise ValidationError(f"{path}:{line}: vote {rec['vote']!r} not in y/n/a")
            if not rec["voter"] or not rec["bill"]:
                raise ValidationError(f"{path}:{line}: empty bill or voter")
            rows["t"].append(t - 1)
            rows["vote"].append(VOTE_CODES[code])
            for k in ("bill", "voter", "state", "party"):
                rows[k].append(rec[k])
    return VoteTable(**rows)


def agreement_weights(values, mask):
    """Fraction of jointly recorded columns with equal values.

    Parameters
    ----------
    values : ndarray of shape (n, m)
        One row per voter, one column per bill.
    mask : ndarray of bool, same shape
        Which entries are recorded.
    """
    M = mask.astype(np.float64)
    common = M @ M.T
    agree = np.zeros_like(common)
    for v in np.unique(values[mask]):
        E = (mask & (values == v)).astype(np.float64)
        agree += E @ E.T
    W = np.divide(agree, common, out=np.zeros_like(agree), where=common > 0)
    np.fill_diagonal(W, 0.0)
    return W


def _slice_matrix(table, t, rows, key):
    """Values/mask of slice ``t`` for the units in ``rows`` grouped by ``key``."""
    sel = table.t == t
    bills, b_idx = np.unique(table.bill[sel], return_inverse=True)
    pos = {u: i for i, u in enumerate(rows)}
    r_idx = np.array([pos[u] for u in key[sel]], dtype=np.int64)
    values = np.zeros((len(rows), bills.size), dtype=np.int64)
    mask = np.zeros_like(values, dtype=bool)
    np.add.at(values, (r_idx, b_idx), table.vote[sel])
    mask[r_idx, b_idx] = True
    return values, mask


def senator_network(table: VoteTable) -> TemporalNetwork:
    """Voter-level network; a voter is present in every slice where they have a record.

    Vertex ``x`` is the ``x``-th voter in sorted order (see :func:`vertex_labels`).
    """
    voters = table.voters()
    ids = {v: i for i, v in enumerate(voters)}
    layers, presence = [], []
    for t in range(table.T):
        here = np.unique(table.voter[table.t == t])
        if here.size == 0:
            raise ValidationError(f"slice {t + 1} has no records")
        values, mask = _slice_matrix(table, t, here, table.voter)
        layers.append(agreement_weights(values, mask))
        presence.append(np.array([ids[v] for v in here], dtype=np.int64))
    return TemporalNetwork(N=len(voters), layers=tuple(layers), presence=tuple(presence))


def state_network(table: VoteTable) -> TemporalNetwork:
    """Multiplex state-level network built from aggregate votes."""
    states = table.states()
    missing = [(str(s), t + 1) for t in range(table.T) for s in states
               if not np.any((table.t == t) & (table.state == s))]
    if missing:
        listed = ", ".join(f"{s}@t={t}" for s, t in missing)
        raise ValidationError(f"states absent from a slice: {listed}")
    layers = []
    for t in range(table.T):
        values, mask = _slice_matrix(table, t, states, table.state)
        layers.append(agreement_weights(values, mask))
    return TemporalNetwork.from_dense(layers)


def vertex_labels(table: VoteTable, mode="senators"):
    """Rows ``(id, name, state, party)`` with 1-based ids, in vertex order.

    For voters the state and party of their latest record are reported.
    """
    if mode == "states":
        return [(i + 1, str(s), str(s), "") for i, s in enumerate(table.states())]
    if mode != "senators":
        raise ValidationError("mode must be 'senators' or 'states'")
    out = []
    for i, v in enumerate(table.voters()):
        last = np.flatnonzero(table.voter == v)[np.argmax(table.t[table.voter == v])]
        out.append((i + 1, str(v), str(table.state[last]), str(table.party[last])))
    return out


def top_voters(table: VoteTable, state, t, k=2):
    """The ``k`` voters of ``state`` with most records in slice ``t`` (0-based).

    Ties go to the lexicographically lowest voter id.
    """
    sel = (table.t == t) & (table.state == state)
    names, counts = np.unique(table.voter[sel], return_counts=True)
    order = sorted(range(names.size), key=lambda i: (-counts[i], names[i]))
    return [str(names[i]) for i in order[:k]]


def state_averages(table: VoteTable, values):
    """Average a per-voter, per-slice quantity over each state.

    Parameters
    ----------
    values : ndarray of shape (T, N)
        Indexed by slice and voter vertex id; entries for absent voters are ignored.

    Returns
    -------
    list of (t, state, mean)
        ``t`` is 1-based.
    """
    values = np.asarray(values, dtype=np.float64)
    voters = table.voters()
    ids = {v: i for i, v in enumerate(voters)}
    if values.shape != (table.T, len(voters)):
        raise ValidationError(f"expected values of shape {(table.T, len(voters))}")
    out = []
    for t in range(table.T):
        for s in table.states():
            members = np.unique(table.voter[(table.t == t) & (table.state == s)])
            if members.size:
                out.append((t + 1, str(s), float(values[t, [ids[m] for m in members]].mean())))
    return out
