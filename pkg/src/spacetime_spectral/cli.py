"""Command-line entry point.

Every subcommand is a thin wrapper over a library call. Structured outputs
are JSON and embed the resolved configuration plus SHA-256 digests of the
inputs; plot tables are CSV. Exit status: 0 on success, 2 on invalid input,
3 on numerical failure.

A ``--config FILE`` of ``key = value`` lines supplies defaults for the
subcommand's options (keys use the option names, with ``-`` or ``_``).
The ``SPACETIME_SPECTRAL_THREADS`` environment variable caps BLAS threads.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from . import io as sio
from .assembly import build_adjacency, inflated_laplacian
from .cheeger import cheeger_ratio, packing_score
from .exceptions import ConvergenceError, ValidationError
from .ingest import read_votes_csv, senator_network, state_network, vertex_labels
from .matching import link_partitions
from .netgen import GenSpec, generate
from .partition import classify_transitions, run_multiplex, run_nonmultiplex
from .spectral import (EigenSet, classify_multiplex, critical_a_multiplex,
                       critical_a_nonmultiplex, smallest_eigenpairs)

THREADS_ENV = "SPACETIME_SPECTRAL_THREADS"
OUTPUT_KEYS = {"out", "truth", "config"}


class CliError(Exception):
    pass


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _strength(text):
    return "auto" if str(text) == "auto" else float(text)


def _count(text):
    return "auto" if str(text) == "auto" else int(text)


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    for n, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v.strip("\"'")
    return out


def _envelope(args, inputs):
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in OUTPUT_KEYS and k != "func" and v is not None}
    cfg = {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()}
    return {"config": cfg, "inputs": {str(p): sio.file_digest(p) for p in inputs},
            "version": __version__}


def _with_envelope(doc, args, inputs):
    doc = dict(doc)
    doc.update(_envelope(args, inputs))
    return doc


def _load_net(path):
    if not Path(path).exists():
        raise ValidationError(f"no such file: {path}")
    return sio.read_network(path)


def _inputs(*paths):
    csv_side = [sio.presence_sidecar(p) for p in paths if str(p).endswith(".csv")]
    return [p for p in (*paths, *csv_side) if p is not None and Path(p).exists()]


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(args):
    g = generate(GenSpec(N=args.N, T=args.T, alpha=args.alpha, s=args.s, eta=args.eta,
                         beta=args.beta, gamma=args.gamma, seed=args.seed))
    doc = _with_envelope(sio.network_to_dict(g.network), args, [])
    sio.dump_json(doc, args.out)
    if args.truth:
        truth = {"N": args.N, "T": args.T, "labels": (g.truth + 1).tolist(),
                 "note": "labels[t][x]: planted cluster (1-based), 0 = none"}
        sio.dump_json(_with_envelope(truth, args, []), args.truth)


def cmd_build(args):
    net = _load_net(args.input)
    multiplex = not args.nonmultiplex
    if args.kind == "adjacency":
        M = build_adjacency(net, args.a, multiplex=multiplex)
    else:
        M = inflated_laplacian(net, args.a, normalised=args.kind == "normalised-laplacian",
                               multiplex=multiplex)
    sio.write_triplets(M, args.out)


def _resolve_a(net, a, multiplex, bracket):
    if a != "auto":
        return a
    if net.T == 1:
        return 0.0
    return critical_a_multiplex(net, bracket) if multiplex else critical_a_nonmultiplex(net, bracket)


def cmd_eigs(args):
    net = _load_net(args.input)
    multiplex = not args.nonmultiplex
    if multiplex:
        net.require_multiplex("the multiplex eigen-solve (pass --nonmultiplex)")
    a = _resolve_a(net, args.a, multiplex, args.a_bracket)
    L = inflated_laplacian(net, a, multiplex=multiplex)
    k = min(args.k, L.n)
    es = smallest_eigenpairs(L, k, tol=args.tol, max_iter=args.max_iter)
    es = EigenSet(es.values, es.vectors, es.labels, a)
    if multiplex:
        es = classify_multiplex(es, net.N, net.T)
    sio.write_eigen(es, args.out, encoding=args.encoding)
    doc = sio.load_json(args.out)
    sio.dump_json(_with_envelope(doc, args, _inputs(args.input)), args.out)
    if args.table:
        sio.write_slice_table(es.vectors, net.index_map(), args.table)


def _run(args, net):
    common = dict(a=args.a, R=args.R, mu=args.mu, max_R=args.max_R, kappa=args.kappa,
                  theta=args.theta, fibre_rtol=args.fibre_rtol, bracket=args.a_bracket,
                  seba_tol=args.seba_tol, seba_max_iter=args.seba_max_iter)
    if args.nonmultiplex or not net.is_multiplex:
        return run_nonmultiplex(net, tau_temp=args.tau_temp, **common)
    return run_multiplex(net, **common)


def _events_doc(events):
    def lab(k):
        return "omega" if k < 0 else int(k) + 1

    return [{"t": e.t + 1, "kind": e.kind, "J": e.J, "actor": lab(e.actor),
             "targets": [lab(k) for k in e.targets], "shrinking": e.shrinking,
             "growing": e.growing} for e in events]


def cmd_cluster(args):
    net = _load_net(args.input)
    run = _run(args, net)
    imap = run.index_map
    stem = Path(args.out).with_suffix("")
    seba_csv = stem.with_name(stem.name + ".seba.csv")
    norms_csv = stem.with_name(stem.name + ".norms.csv")
    sio.write_slice_table(run.seba_vectors, imap, seba_csv,
                          columns=[f"s{j + 1}" for j in range(run.seba_vectors.shape[1])])
    norms = run.diagnostics.get("slice_norms")
    if norms is not None:
        rows = [(t + 1, *map(repr, np.asarray(norms)[:, t].tolist()))
                for t in range(np.asarray(norms).shape[1])]
        sio.atomic_write(norms_csv, sio._csv_text(
            ("t", *[f"F{r + 2}" for r in range(np.asarray(norms).shape[0])]), rows))
    W = build_adjacency(net, run.a, multiplex=run.mode == "multiplex")
    diag = {k: (np.asarray(v).tolist() if isinstance(v, (np.ndarray, list, tuple)) else v)
            for k, v in run.diagnostics.items() if k not in ("spatial_vectors",)}
    doc = {
        "a": run.a, "R": run.R, "mode": run.mode, "K": run.K,
        "packing": sio.packing_to_dict(run.packing, imap),
        "element_ratios": [cheeger_ratio(X, W) for X in run.packing.elements],
        "column_ratios": np.asarray(run.column_ratios).tolist(),
        "spurious": np.asarray(run.spurious).tolist(),
        "spurious_reasons": list(run.spurious_reasons),
        "seba_columns": np.asarray(run.seba_vectors).tolist(),
        "transitions": _events_doc(classify_transitions(run.packing, imap, args.max_J)),
        "tables": {"seba": seba_csv.name, "slice_norms": norms_csv.name if norms is not None else None},
        "diagnostics": diag,
    }
    sio.dump_json(_with_envelope(_jsonable(doc), args, _inputs(args.input)), args.out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return repr(obj)


def _packing_doc(path):
    doc = sio.load_json(path)
    return doc.get("packing", doc), doc.get("a")


def cmd_cheeger(args):
    net = _load_net(args.net)
    pdoc, a_doc = _packing_doc(args.packing)
    a = args.a if args.a is not None else a_doc
    if a is None:
        raise ValidationError("no coupling strength: pass --a")
    imap = net.index_map()
    p = sio.packing_from_dict(pdoc, imap)
    W = build_adjacency(net, a, multiplex=net.is_multiplex)
    ratios = [cheeger_ratio(X, W, args.normalised) for X in p.elements]
    doc = {"a": a, "normalised": args.normalised, "H": ratios,
           "max": packing_score(p, W, args.normalised) if p.K else None,
           "omega": cheeger_ratio(p.omega, W, args.normalised) if p.omega.size else None}
    out = _with_envelope(doc, args, _inputs(args.net, args.packing))
    if args.out:
        sio.dump_json(out, args.out)
    else:
        sys.stdout.write(sio.json.dumps(out, sort_keys=True) + "\n")


def _slice_partition(path, T):
    d = sio.load_json(path)
    try:
        t = int(d["t"]) - 1
        clusters = [[int(x) - 1 for x in X] for X in d["clusters"]]
        omega = [int(x) - 1 for x in d.get("omega", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: malformed slice partition ({exc!r})") from None
    if not 0 <= t < T:
        raise ValidationError(f"{path}: slice {t + 1} outside 1..{T}")
    return t, clusters, omega


def cmd_match(args):
    net = _load_net(args.net)
    seq, omegas = [None] * net.T, [None] * net.T
    for path in args.partitions:
        t, clusters, omega = _slice_partition(path, net.T)
        if seq[t] is not None:
            raise ValidationError(f"slice {t + 1} given twice")
        seq[t], omegas[t] = clusters, omega
    missing = [t + 1 for t in range(net.T) if seq[t] is None]
    if missing:
        raise ValidationError(f"no partition for slices {missing}")
    res = link_partitions(seq, net, args.a, omegas=omegas)
    doc = sio.packing_to_dict(res.packing, net.index_map())
    doc.update(a=args.a, slice_labels=[(np.asarray(x) + 1).tolist() for x in res.slice_labels])
    sio.dump_json(_with_envelope(doc, args, _inputs(args.net, *args.partitions)), args.out)


def cmd_votes(args):
    table = read_votes_csv(args.csv)
    net = senator_network(table) if args.mode == "senators" else state_network(table)
    sio.dump_json(_with_envelope(sio.network_to_dict(net), args, _inputs(args.csv)), args.out)
    labels = Path(args.out).with_suffix("")
    labels = labels.with_name(labels.name + ".labels.csv")
    sio.atomic_write(labels, sio._csv_text(("id", "name", "state", "party"),
                                           vertex_labels(table, args.mode)))


def cmd_transitions(args):
    net = _load_net(args.net)
    pdoc, _ = _packing_doc(args.packing)
    p = sio.packing_from_dict(pdoc, net.index_map())
    events = _events_doc(classify_transitions(p, net.index_map(), args.max_J))
    doc = _with_envelope({"events": events}, args, _inputs(args.net, args.packing))
    if args.out:
        sio.dump_json(doc, args.out)
    else:
        sys.stdout.write(sio.json.dumps(doc, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# parser


def _add_solver(p):
    p.add_argument("--a", type=_strength, default="auto", help="coupling strength or 'auto'")
    p.add_argument("--a-bracket", type=_floats, default=(1e-3, 1e3),
                   help="initial bisection bracket for 'auto', as lo,hi")
    p.add_argument("--nonmultiplex", action="store_true",
                   help="use the non-multiplex construction")


def build_parser():
    parser = argparse.ArgumentParser(prog="spacetime-spectral",
                                     description="Spacetime spectral clustering of temporal networks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthetic network with planted clusters")
    p.add_argument("--alpha", type=_ints, required=True, help="cluster counts, e.g. 0,1,2")
    p.add_argument("--s", type=_ints, required=True, help="1-based state slices, e.g. 1,40,60")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--gamma", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build", help="export a supra-matrix as triplets")
    p.add_argument("--input", required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--kind", choices=("adjacency", "laplacian", "normalised-laplacian"),
                   default="laplacian")
    p.add_argument("--nonmultiplex", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("eigs", help="smallest eigenpairs of the inflated Laplacian")
    p.add_argument("--input", required=True)
    _add_solver(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--encoding", choices=("base64", "csv"), default="base64")
    p.add_argument("--table", help="optional t,x,value heatmap CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eigs)

    p = sub.add_parser("cluster", help="spectral partitioning with SEBA")
    p.add_argument("--input", required=True)
    _add_solver(p)
    p.add_argument("--R", type=_count, default="auto")
    p.add_argument("--max-R", type=int, default=5)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--kappa", type=float, default=3.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--fibre-rtol", type=float, default=1e-6)
    p.add_argument("--tau-temp", type=float, default=0.1)
    p.add_argument("--seba-tol", type=float, default=1e-12)
    p.add_argument("--seba-max-iter", type=int, default=5000)
    p.add_argument("--max-J", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("cheeger", help="Cheeger ratios of a packing")
    p.add_argument("--packing", required=True, help="packing JSON or run.json")
    p.add_argument("--net", required=True)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--normalised", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cheeger)

    p = sub.add_parser("match", help="link per-slice partitions")
    p.add_argument("--partitions", nargs="+", required=True,
                   help='files {"t": t, "clusters": [[x, ...], ...], "omega": [x, ...]}')
    p.add_argument("--net", required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("votes", help="voting-similarity network from a roll-call CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--mode", choices=("senators", "states"), default="senators")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_votes)

    p = sub.add_parser("transitions", help="splits, merges, appearances, disappearances")
    p.add_argument("--packing", required=True, help="packing JSON or run.json")
    p.add_argument("--net", required=True)
    p.add_argument("--max-J", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_transitions)
    return parser


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        sub = parser._subparsers._group_actions[0].choices
        cmd = next((a for a in rest if a in sub), None)
        if cmd is not None:
            dests = {a.dest for a in sub[cmd]._actions}
            unknown = sorted(set(cfg) - dests)
            if unknown:
                raise ValidationError(f"unknown config keys for {cmd}: {', '.join(unknown)}")
            for a in sub[cmd]._actions:
                if a.dest in cfg:
                    a.required = False
            sub[cmd].set_defaults(**cfg)
    args = parser.parse_args(rest)
    args.config = known.config
    for k, conv in (("a_bracket", _floats), ("alpha", _ints), ("s", _ints)):
        if isinstance(getattr(args, k, None), str):
            setattr(args, k, conv(getattr(args, k)))
    if isinstance(getattr(args, "nonmultiplex", None), str):
        args.nonmultiplex = args.nonmultiplex.lower() in ("1", "true", "yes")
    return args


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        try:
            args = parse_args(argv)
        except SystemExit as exc:  # argparse: usage errors, --help, --version
            return exc.code if isinstance(exc.code, int) else 2
        threads = os.environ.get(THREADS_ENV)
        with threadpool_limits(int(threads) if threads else None):
            args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 2
    except (ConvergenceError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
