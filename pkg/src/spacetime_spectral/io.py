"""File formats. All ids written to or read from disk are 1-based.

Network JSON::

    {"N": 5, "T": 2,
     "layers": [{"t": 1, "present": [1, 2, 3], "edges": [[1, 2, 1.0], ...]}, ...],
     "temporal": "chain"}            # or {"edges": [[t, s, w], ...]}

Network CSV: edge rows ``t,x,y,w`` plus a sidecar ``<stem>.presence.csv``
with rows ``t,x``. Packing JSON: ``{"K", "elements": [[[t, x], ...], ...],
"omega": [[t, x], ...]}``.
"""

import base64
import csv
import hashlib
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .assembly import SupraMatrix
from .cheeger import Packing
from .exceptions import ValidationError
from .network import TemporalNetwork, chain_weights
from .spectral import EigenSet


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj, path):
    atomic_write(path, json.dumps(obj, sort_keys=True) + "\n")


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _csv_text(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_csv(path, header):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r, None)
        if head is None or [h.strip() for h in head] != list(header):
            raise ValidationError(f"{path}: header must be {','.join(header)}")
        return [row for row in r if row]


# --------------------------------------------------------------------------
# networks


def _layer_edges(W, present):
    iu, ju = np.triu_indices(W.shape[0], k=1)
    w = W[iu, ju]
    nz = w != 0
    return [[int(present[i]) + 1, int(present[j]) + 1, float(v)]
            for i, j, v in zip(iu[nz], ju[nz], w[nz])]


def network_to_dict(net: TemporalNetwork):
    layers = [{"t": t + 1, "present": [int(x) + 1 for x in net.presence[t]],
               "edges": _layer_edges(net.layers[t], net.presence[t])} for t in range(net.T)]
    if net.temporal_weights is None:
        temporal = "chain"
    else:
        Wp = net.temporal_weights
        i, j = np.nonzero(np.triu(Wp, 1))
        temporal = {"edges": [[int(a) + 1, int(b) + 1, float(Wp[a, b])] for a, b in zip(i, j)]}
    return {"N": net.N, "T": net.T, "layers": layers, "temporal": temporal}


def _build(N, T, present, edges, temporal):
    layers = []
    for t in range(T):
        p = np.array(sorted(present[t]), dtype=np.int64)
        if p.size and (p[0] < 0 or p[-1] >= N):
            raise ValidationError(f"slice {t + 1}: vertex id outside 1..{N}")
        pos = {int(x): i for i, x in enumerate(p)}
        W = np.zeros((p.size, p.size))
        for x, y, w in edges[t]:
            if x not in pos or y not in pos:
                raise ValidationError(f"slice {t + 1}: edge ({x + 1}, {y + 1}) touches an absent vertex")
            if x == y:
                raise ValidationError(f"slice {t + 1}: self-loop at vertex {x + 1}")
            W[pos[x], pos[y]] = W[pos[y], pos[x]] = w
        layers.append(W)
        present[t] = p
    return TemporalNetwork(N=N, layers=tuple(layers), presence=tuple(present),
                           temporal_weights=temporal)


def network_from_dict(d):
    try:
        N, T = int(d["N"]), int(d["T"])
        raw = d["layers"]
        if len(raw) != T:
            raise ValidationError(f"expected {T} layers, found {len(raw)}")
        present, edges = [None] * T, [None] * T
        for L in raw:
            t = int(L["t"]) - 1
            if not 0 <= t < T or present[t] is not None:
                raise ValidationError(f"layer t={L['t']} is out of range or repeated")
            present[t] = [int(x) - 1 for x in L.get("present", range(1, N + 1))]
            edges[t] = [(int(x) - 1, int(y) - 1, float(w)) for x, y, w in L.get("edges", [])]
        temporal = d.get("temporal", "chain")
        Wp = None
        if temporal != "chain":
            Wp = np.zeros((T, T))
            for a, b, w in temporal["edges"]:
                a, b = int(a) - 1, int(b) - 1
                if not (0 <= a < T and 0 <= b < T) or a == b:
                    raise ValidationError(f"bad temporal edge ({a + 1}, {b + 1})")
                Wp[a, b] = Wp[b, a] = float(w)
            if np.array_equal(Wp, chain_weights(T)):
                Wp = None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed network document: {exc!r}") from None
    return _build(N, T, present, edges, Wp)


def presence_sidecar(path):
    p = Path(path)
    return p.with_name(p.stem + ".presence.csv")


def write_network(net: TemporalNetwork, path):
    """Write JSON, or the CSV edge list plus presence sidecar for ``*.csv``."""
    path = Path(path)
    if path.suffix.lower() != ".csv":
        dump_json(network_to_dict(net), path)
        return
    if net.temporal_weights is not None:
        raise ValidationError("the CSV format only carries chain coupling")
    rows = [(t + 1, x, y, w) for t in range(net.T)
            for x, y, w in _layer_edges(net.layers[t], net.presence[t])]
    atomic_write(path, _csv_text(("t", "x", "y", "w"), rows))
    pres = [(t + 1, int(x) + 1) for t in range(net.T) for x in net.presence[t]]
    atomic_write(presence_sidecar(path), _csv_text(("t", "x"), pres))


def read_network(path, N=None):
    """Read a network file; for CSV, ``N`` defaults to the largest id present."""
    path = Path(path)
    if path.suffix.lower() != ".csv":
        return network_from_dict(load_json(path))
    side = presence_sidecar(path)
    if not side.exists():
        raise ValidationError(f"missing presence sidecar {side}")
    try:
        pres = [(int(t) - 1, int(x) - 1) for t, x in _read_csv(side, ("t", "x"))]
        rows = [(int(t) - 1, int(x) - 1, int(y) - 1, float(w))
                for t, x, y, w in _read_csv(path, ("t", "x", "y", "w"))]
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed row ({exc})") from None
    if not pres:
        raise ValidationError(f"{side}: no vertices")
    T = max(t for t, _ in pres) + 1
    N = max(x for _, x in pres) + 1 if N is None else int(N)
    present = [[] for _ in range(T)]
    for t, x in pres:
        present[t].append(x)
    edges = [[] for _ in range(T)]
    for t, x, y, w in rows:
        if not 0 <= t < T:
            raise ValidationError(f"{path}: edge at slice {t + 1} beyond the last slice")
        edges[t].append((x, y, w))
    return _build(N, T, present, edges, None)


def write_triplets(M, path):
    """Coordinate triplets ``row,col,value`` (1-based) of a matrix."""
    if isinstance(M, SupraMatrix):
        r, c, v = M.to_triplets()
    else:
        coo = sp.coo_matrix(M)
        order = np.lexsort((coo.col, coo.row))
        r, c, v = coo.row[order], coo.col[order], coo.data[order]
    rows = [(int(i) + 1, int(j) + 1, repr(float(x))) for i, j, x in zip(r, c, v)]
    atomic_write(path, _csv_text(("row", "col", "value"), rows))


def write_slice_table(values, index_map, path, columns=None):
    """Heatmap table ``t,x,<column>...`` for vectors over the spacetime vertices."""
    V = np.asarray(values, dtype=np.float64)
    V = V[:, None] if V.ndim == 1 else V
    names = columns or [f"v{j + 1}" for j in range(V.shape[1])]
    t, x = index_map.slice_of() + 1, index_map.vertex_of() + 1
    rows = [(int(t[i]), int(x[i]), *map(repr, V[i].tolist())) for i in range(V.shape[0])]
    atomic_write(path, _csv_text(("t", "x", *names), rows))


# --------------------------------------------------------------------------
# packings


def packing_to_dict(p: Packing, index_map):
    def pairs(X):
        t, x = index_map.decode(np.asarray(X, dtype=np.int64))
        return [[int(a) + 1, int(b) + 1] for a, b in zip(np.atleast_1d(t), np.atleast_1d(x))]

    return {"K": p.K, "elements": [pairs(X) for X in p.elements], "omega": pairs(p.omega)}


def packing_from_dict(d, index_map):
    try:
        els = []
        for E in d["elements"]:
            tx = np.array(E, dtype=np.int64).reshape(-1, 2) - 1
            els.append(index_map.encode(tx[:, 0], tx[:, 1]))
        om = np.array(d.get("omega", []), dtype=np.int64).reshape(-1, 2) - 1
        omega = index_map.encode(om[:, 0], om[:, 1]) if om.size else np.zeros(0, dtype=np.int64)
        if "K" in d and int(d["K"]) != len(els):
            raise ValidationError(f"K={d['K']} but {len(els)} elements listed")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed packing document: {exc!r}") from None
    return Packing(tuple(els), omega, index_map.n)


def write_packing(p, index_map, path):
    dump_json(packing_to_dict(p, index_map), path)


def read_packing(path, index_map):
    return packing_from_dict(load_json(path), index_map)


# --------------------------------------------------------------------------
# eigen-data


def eigen_to_dict(es: EigenSet, encoding="base64"):
    """``vectors`` are row-major float64 (little endian) when base64-encoded."""
    V = np.ascontiguousarray(es.vectors, dtype="<f8")
    d = {"a": es.a, "values": es.values.tolist(), "labels": list(es.labels),
         "shape": list(V.shape), "encoding": encoding}
    if encoding == "base64":
        d["vectors"] = base64.b64encode(V.tobytes()).decode("ascii")
    elif encoding != "csv":
        raise ValidationError("encoding must be 'base64' or 'csv'")
    return d


def write_eigen(es: EigenSet, path, encoding="base64"):
    """JSON document; with ``encoding="csv"`` vectors go to ``<stem>.vectors.csv``."""
    path = Path(path)
    d = eigen_to_dict(es, encoding)
    if encoding == "csv":
        side = path.with_name(path.stem + ".vectors.csv")
        d["vectors"] = side.name
        k = es.vectors.shape[1]
        rows = [tuple(repr(float(v)) for v in row) for row in es.vectors]
        atomic_write(side, _csv_text([f"v{j + 1}" for j in range(k)], rows))
    dump_json(d, path)


def read_eigen(path):
    path = Path(path)
    d = load_json(path)
    try:
        shape = tuple(int(s) for s in d["shape"])
        if d.get("encoding", "base64") == "base64":
            V = np.frombuffer(base64.b64decode(d["vectors"]), dtype="<f8").reshape(shape)
        else:
            with open(path.with_name(d["vectors"]), newline="") as fh:
                r = csv.reader(fh)
                next(r)
                V = np.array([[float(v) for v in row] for row in r if row]).reshape(shape)
        return EigenSet(np.array(d["values"], dtype=np.float64), np.array(V),
                        tuple(d["labels"]), d.get("a"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed eigen document ({exc})") from None
