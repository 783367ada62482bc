"""Command-line front end.

One binary with subcommands ``embed | joint | match | eval | gen``.  Reads
feature matrices, distance matrices or edge lists; writes embeddings,
couplings, traces, metrics and a run manifest into the output directory.
Config precedence is defaults < JSON config file < flags.  Standard error
carries JSON-lines logs; standard output carries the human-readable summary.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dissimilarity as ds, fileio, jointmds, metrics as mt
from . import synthdata
from .errors import JointScaleError
from .jointmds import JointConfig
from .smacof import random_embedding, smacof, stress

PROG = "jointscale"


def _log(level: str, message: str, **context) -> None:
    record = {"level": level, "message": message}
    record.update(context)
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _fail(message: str, code: int = 1):
    _log("error", message)
    raise SystemExit(code)


# ---------------------------------------------------------------------------
# flags

def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=("features", "distances", "edges"),
                   default="features", help="how to interpret the input files")
    p.add_argument("--delimiter", default=",", help="matrix delimiter (default ',')")
    p.add_argument("--header", action="store_true",
                   help="skip one header line when reading matrices")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory")


def _add_dissimilarity_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--geodesic", metavar="K", type=int, default=None,
                   help="use shortest paths on a K-nearest-neighbor graph")
    p.add_argument("--graph", choices=("hop", "inv"), default=None,
                   help="edge length for edge-list inputs: hop count or 1/weight")
    p.add_argument("--rescale-mean", action="store_true",
                   help="rescale distances so the off-diagonal mean is 1")
    p.add_argument("--weight-exponent", metavar="E", type=float, default=None,
                   help="stress weights 1/d^E instead of uniform 1/n^2")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    # defaults stay None so explicitly passed flags can override a JSON config
    p.add_argument("--dim", type=int, default=None, help="embedding dimension")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="matching penalty")
    p.add_argument("--epsilon", type=float, default=None,
                   help="initial entropic regularization")
    p.add_argument("--alpha", type=float, default=None,
                   help="epsilon decay factor per outer iteration")
    p.add_argument("--iters", type=int, default=None, help="outer iterations")
    p.add_argument("--inner-smacof", type=int, default=None,
                   help="majorization steps per outer iteration")
    p.add_argument("--inner-wp", type=int, default=None,
                   help="transport/Procrustes rounds per outer iteration")
    p.add_argument("--restarts", type=int, default=None, help="random restarts")
    p.add_argument("--seed", type=int, default=None,
                   help="base seed (falls back to $JOINTSCALE_SEED, then 0)")
    p.add_argument("--gw-init", action=argparse.BooleanOptionalAction, default=None,
                   help="warm start the coupling with Gromov-Wasserstein")
    p.add_argument("--lambda-anneal", action=argparse.BooleanOptionalAction, default=None,
                   help="ramp the matching penalty over the first half of the run")
    p.add_argument("--config", metavar="FILE", default=None,
                   help="JSON config file; flags override its entries")
    p.add_argument("--threads", type=int, default=1,
                   help="restart-level parallelism (default 1)")


_CONFIG_KEYS = {
    "dim": "dim",
    "lambda": "lam",
    "epsilon": "epsilon0",
    "alpha": "alpha",
    "iters": "outer_iters",
    "inner_smacof": "inner_smacof_iters",
    "inner_wp": "inner_wp_iters",
    "restarts": "restarts",
    "seed": "seed",
    "gw_init": "gw_init",
    "lambda_anneal": "lambda_anneal",
}

_FLAG_TO_FIELD = {
    "dim": "dim",
    "lam": "lam",
    "epsilon": "epsilon0",
    "alpha": "alpha",
    "iters": "outer_iters",
    "inner_smacof": "inner_smacof_iters",
    "inner_wp": "inner_wp_iters",
    "restarts": "restarts",
    "seed": "seed",
    "gw_init": "gw_init",
    "lambda_anneal": "lambda_anneal",
}


def _build_config(args: argparse.Namespace, **overrides) -> JointConfig:
    cfg = JointConfig()
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            _fail(f"config file {args.config}: {exc}")
        for key, value in doc.items():
            field_name = _CONFIG_KEYS.get(key)
            if field_name is None:
                _fail(f"config file {args.config}: unknown key {key!r}")
            setattr(cfg, field_name, value)
    for flag, field_name in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, field_name, value)
    if getattr(args, "seed", None) is None and "seed" not in doc:
        env_seed = os.environ.get("JOINTSCALE_SEED")
        if env_seed is not None:
            cfg.seed = int(env_seed)
    for key, value in overrides.items():
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# pipeline pieces

def _load_dissimilarity(path: str, args) -> np.ndarray:
    """Input file -> validated dissimilarity matrix, per the --kind pipeline."""
    if args.kind == "edges":
        edges, n = fileio.read_edge_list(path)
        kept = [(i, j, w) for i, j, w in edges if i != j]
        if len(kept) < len(edges):
            _log("warning", "dropped self-loops", path=str(path),
                 dropped=len(edges) - len(kept))
        adj = ds.normalized_adjacency(kept, n)
        mode = "inverse-weight" if args.graph == "inv" else "hop"
        d = ds.graph_dissimilarity(adj, mode=mode)
    else:
        m = fileio.read_matrix(path, delimiter=args.delimiter, header=args.header)
        if args.kind == "features":
            d = ds.pairwise_euclidean(m)
        else:
            d = ds.validate_dissimilarity(m, str(path))
    if args.geodesic is not None:
        graph = ds.knn_graph(d, args.geodesic)
        d = ds.geodesic_distances(graph, connect=True, source=d)
    if args.rescale_mean:
        d = ds.rescale_by_mean(d)
    return d


def _weights_for(d: np.ndarray, args) -> np.ndarray:
    if getattr(args, "weight_exponent", None) is not None:
        return ds.power_weight_matrix(d, args.weight_exponent)
    return ds.uniform_weight_matrix(d.shape[0])


def _resolve_truth(spec: str, n: int) -> np.ndarray:
    if spec == "identity":
        return np.arange(n)
    truth = fileio.read_match_indices(spec)
    if truth.shape != (n,):
        _fail(f"truth file {spec} has {truth.shape[0]} entries, expected {n}")
    return truth


def _truth_matrix(truth: np.ndarray, n: int, m: int) -> np.ndarray:
    t = np.zeros((n, m), dtype=int)
    t[np.arange(n), truth] = 1
    return t


class _Manifest:
    """Collects run metadata; written atomically at the end of a command."""

    def __init__(self, out_dir: Path, argv: list[str], seed: int | None):
        self.out_dir = out_dir
        self.start = time.monotonic()
        self.doc = {
            "command": [PROG] + argv,
            "seed": seed,
            "config": None,
            "inputs": {},
            "outputs": [],
            "versions": {
                "jointscale": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
            },
            "summary": {},
        }
        import scipy

        self.doc["versions"]["scipy"] = scipy.__version__

    def add_input(self, path) -> None:
        self.doc["inputs"][str(path)] = fileio.sha256_file(path)

    def add_output(self, path) -> Path:
        self.doc["outputs"].append(str(path))
        return path

    def write(self) -> Path:
        self.doc["duration_seconds"] = time.monotonic() - self.start
        target = self.out_dir / "manifest.json"
        self.doc["outputs"].append(str(target))
        fileio.write_json(target, self.doc)
        return target


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env_seed = os.environ.get("JOINTSCALE_SEED")
    return int(env_seed) if env_seed is not None else 0


# ---------------------------------------------------------------------------
# subcommands

def cmd_embed(args) -> int:
    out = _prepare_out(args)
    manifest = _Manifest(out, args.argv, _effective_seed(args))
    manifest.add_input(args.input)
    d = _load_dissimilarity(args.input, args)
    w = _weights_for(d, args)
    dim = args.dim if args.dim is not None else 2
    if dim < 1:
        _fail(f"--dim must be >= 1, got {dim}")
    seed = _effective_seed(args)
    scale = jointmds._init_scale(d, d)
    z0 = random_embedding(d.shape[0], dim, seed, scale)
    tol = jointmds.INNER_RTOL * stress(z0, d, w)
    z, report = smacof(d, w, z0, tol=tol, max_iter=args.max_iter)
    fileio.write_embedding(manifest.add_output(out / "embedding.csv"), z,
                           delimiter=args.delimiter)
    fileio.write_trace(
        manifest.add_output(out / "trace.jsonl"),
        [{"iter": i, "stress": s} for i, s in enumerate(report.per_iteration)],
    )
    iu = np.triu_indices(d.shape[0], k=1)
    denom = float(np.sum(w[iu] * d[iu] ** 2))
    final = report.per_iteration[-1]
    manifest.doc["config"] = {"dim": dim, "seed": seed, "max_iter": args.max_iter}
    manifest.doc["summary"] = {
        "stress": final,
        "relative_stress": final / denom if denom > 0 else 0.0,
        "iterations": report.iterations_used,
        "converged": report.converged,
    }
    manifest.write()
    print(f"embedded {d.shape[0]} points into {dim}-D; "
          f"relative stress {manifest.doc['summary']['relative_stress']:.3e}")
    return 0


def _write_joint_outputs(args, out, manifest, result, d1, d2) -> None:
    fileio.write_embedding(manifest.add_output(out / "z1.csv"), result.z1,
                           delimiter=args.delimiter)
    fileio.write_embedding(manifest.add_output(out / "z2.csv"), result.z2,
                           delimiter=args.delimiter)
    if args.sparse_coupling:
        fileio.write_coupling_triplets(
            manifest.add_output(out / "coupling.txt"), result.p)
    else:
        fileio.write_matrix(manifest.add_output(out / "coupling.csv"), result.p,
                            delimiter=args.delimiter)
    fileio.write_trace(
        manifest.add_output(out / "trace.jsonl"),
        [{"iter": i + 1, "objective": v} for i, v in enumerate(result.objective_trace)],
    )


def _joint_metrics(args, manifest, out, result, labels1, labels2) -> dict:
    doc: dict = {"params": {"knn_k": 5, "topk": [3, 5]}}
    n1, n2 = result.z1.shape[0], result.z2.shape[0]
    if args.truth is not None:
        truth = _resolve_truth(args.truth, n1)
        if n1 == n2:
            doc["foscttm"] = mt.foscttm(result.z1, result.z2[truth])
        t = _truth_matrix(truth, n1, n2)
        doc["node_correctness"] = mt.node_correctness(result.p, t)
        for k in (3, 5):
            if k <= n2:
                doc[f"top{k}_accuracy"] = mt.topk_accuracy(result.p, truth, k)
    if labels1 is not None and labels2 is not None:
        predicted = mt.knn_transfer(result.z1, labels1, result.z2, k=5)
        doc["transfer_accuracy"] = mt.accuracy(predicted, labels2)
    if len(doc) > 1:
        fileio.write_json(manifest.add_output(out / "metrics.json"), doc)
    return doc


def _print_metrics(doc: dict) -> None:
    for key in ("foscttm", "node_correctness", "top3_accuracy", "top5_accuracy",
                "transfer_accuracy"):
        if key in doc:
            value = doc[key]
            if key == "node_correctness":
                print(f"{key}: {100.0 * value:.2f}%")
            else:
                print(f"{key}: {value:.4f}")


def cmd_joint(args) -> int:
    out = _prepare_out(args)
    cfg = _build_config(args)
    manifest = _Manifest(out, args.argv, cfg.seed)
    manifest.add_input(args.input1)
    manifest.add_input(args.input2)
    d1 = _load_dissimilarity(args.input1, args)
    d2 = _load_dissimilarity(args.input2, args)
    w1 = _weights_for(d1, args)
    w2 = _weights_for(d2, args)
    labels1 = labels2 = None
    if args.labels1:
        manifest.add_input(args.labels1)
        labels1 = fileio.read_labels(args.labels1)
    if args.labels2:
        manifest.add_input(args.labels2)
        labels2 = fileio.read_labels(args.labels2)

    def on_outer(restart, iteration, objective):
        _log("info", "outer iteration", restart=restart, iter=iteration,
             objective=objective)

    result = jointmds.solve(d1, d2, w1, w2, cfg, threads=args.threads,
                            on_outer=on_outer)
    _write_joint_outputs(args, out, manifest, result, d1, d2)
    doc = _joint_metrics(args, manifest, out, result, labels1, labels2)
    manifest.doc["config"] = cfg.__dict__
    manifest.doc["summary"] = {
        "final_objective": result.final_objective,
        "restart_index": result.restart_index,
    }
    manifest.write()
    print(f"joint embedding done; final objective {result.final_objective:.6g} "
          f"(restart {result.restart_index})")
    _print_metrics(doc)
    return 0


def cmd_match(args) -> int:
    args.kind = "edges"
    out = _prepare_out(args)
    if args.weight_exponent is None:
        args.weight_exponent = 4.0
    overrides = {}
    if args.gw_init is None:
        overrides["gw_init"] = True
    if args.lambda_anneal is None:
        overrides["lambda_anneal"] = True
    cfg = _build_config(args, **overrides)
    manifest = _Manifest(out, args.argv, cfg.seed)
    manifest.add_input(args.edges1)
    manifest.add_input(args.edges2)
    d1 = _load_dissimilarity(args.edges1, args)
    d2 = _load_dissimilarity(args.edges2, args)
    w1 = _weights_for(d1, args)
    w2 = _weights_for(d2, args)

    def on_outer(restart, iteration, objective):
        _log("info", "outer iteration", restart=restart, iter=iteration,
             objective=objective)

    result = jointmds.solve(d1, d2, w1, w2, cfg, threads=args.threads,
                            on_outer=on_outer)
    _write_joint_outputs(args, out, manifest, result, d1, d2)
    matches = jointmds.match_argmax(result.p)
    fileio.write_labels(manifest.add_output(out / "matches.csv"), matches)
    doc = _joint_metrics(args, manifest, out, result, None, None)
    manifest.doc["config"] = cfg.__dict__
    manifest.doc["summary"] = {
        "final_objective": result.final_objective,
        "restart_index": result.restart_index,
    }
    manifest.write()
    print(f"matched {d1.shape[0]} x {d2.shape[0]} nodes; "
          f"final objective {result.final_objective:.6g}")
    _print_metrics(doc)
    return 0


def cmd_eval(args) -> int:
    out = _prepare_out(args)
    manifest = _Manifest(out, args.argv, None)
    loaded: dict = {}
    for name in ("z1", "z2"):
        path = getattr(args, name)
        if path:
            manifest.add_input(path)
            loaded[name] = fileio.read_embedding(path, delimiter=args.delimiter)
    for name in ("d1", "d2"):
        path = getattr(args, name)
        if path:
            manifest.add_input(path)
            loaded[name] = fileio.read_matrix(path, delimiter=args.delimiter,
                                              header=args.header)
    coupling = None
    if args.coupling:
        manifest.add_input(args.coupling)
        if args.sparse_coupling or args.coupling.endswith(".txt"):
            coupling = fileio.read_coupling_triplets(args.coupling)
        else:
            coupling = fileio.read_matrix(args.coupling, delimiter=args.delimiter)
    labels1 = fileio.read_labels(args.labels1) if args.labels1 else None
    labels2 = fileio.read_labels(args.labels2) if args.labels2 else None
    truth = None
    if args.truth:
        n_rows = None
        if "z1" in loaded:
            n_rows = loaded["z1"].shape[0]
        elif coupling is not None:
            n_rows = coupling.shape[0]
        if n_rows is None:
            _fail("--truth needs --z1 or --coupling to determine the row count")
        truth = _resolve_truth(args.truth, n_rows)

    doc: dict = {"params": {"knn_k": args.knn}}
    skipped: dict = {}

    z1, z2 = loaded.get("z1"), loaded.get("z2")
    if z1 is not None and z2 is not None and z1.shape == z2.shape:
        pair = (z1, z2[truth]) if truth is not None else (z1, z2)
        doc["foscttm"] = mt.foscttm(*pair)
    else:
        skipped["foscttm"] = "needs --z1 and --z2 with equal shapes"

    if coupling is not None and truth is not None:
        t = _truth_matrix(truth, coupling.shape[0], coupling.shape[1])
        doc["node_correctness"] = mt.node_correctness(coupling, t)
        for k in (3, 5):
            if k <= coupling.shape[1]:
                doc[f"top{k}_accuracy"] = mt.topk_accuracy(coupling, truth, k)
    else:
        skipped["node_correctness"] = "needs --coupling and --truth"

    if all(key in loaded for key in ("d1", "d2")) and z1 is not None and z2 is not None \
            and truth is not None and z1.shape[0] == z2.shape[0]:
        t = _truth_matrix(truth, z1.shape[0], z2.shape[0])
        doc["rmsd_d"] = mt.rmsd_d(loaded["d1"], loaded["d2"], z1, z2, t)
    else:
        skipped["rmsd_d"] = "needs --d1 --d2 --z1 --z2 --truth with n = n'"

    if z1 is not None and z2 is not None and labels1 is not None:
        predicted = mt.knn_transfer(z1, labels1, z2, k=args.knn)
        if labels2 is not None:
            doc["transfer_accuracy"] = mt.accuracy(predicted, labels2)
        else:
            skipped["transfer_accuracy"] = "needs --labels2 as ground truth"
    else:
        skipped["transfer_accuracy"] = "needs --z1 --z2 --labels1"

    if skipped:
        doc["skipped"] = skipped
    fileio.write_json(manifest.add_output(out / "metrics.json"), doc)
    manifest.write()
    _print_metrics(doc)
    for name, reason in skipped.items():
        print(f"{name}: skipped ({reason})")
    return 0


def cmd_gen(args) -> int:
    out = _prepare_out(args)
    seed = _effective_seed(args)
    spec = synthdata.GenSpec(kind=args.kind, n=args.n, p1=args.p1, p2=args.p2,
                             noise_sigma=args.noise_sigma, seed=seed)
    manifest = _Manifest(out, args.argv, seed)
    pair = synthdata.generate(spec)
    fileio.write_matrix(manifest.add_output(out / "x1.csv"), pair.x1)
    fileio.write_matrix(manifest.add_output(out / "x2.csv"), pair.x2)
    fileio.write_labels(manifest.add_output(out / "labels.csv"), pair.labels)
    fileio.write_matrix(manifest.add_output(out / "latent.csv"), pair.latent)
    manifest.doc["config"] = {
        "kind": spec.kind, "n": spec.n, "p1": spec.p1, "p2": spec.p2,
        "noise_sigma": spec.noise_sigma, "seed": spec.seed,
    }
    manifest.write()
    print(f"generated {spec.kind} pair: {spec.n} samples, "
          f"{spec.p1}/{spec.p2} features")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Joint isometric embedding of two dissimilarity datasets "
                    "with unsupervised correspondence recovery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="metric MDS of a single dataset")
    p.add_argument("input", help="input file")
    _add_io_flags(p)
    _add_dissimilarity_flags(p)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-iter", type=int, default=300)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("joint", help="joint embedding and correspondence recovery")
    p.add_argument("input1")
    p.add_argument("input2")
    _add_io_flags(p)
    _add_dissimilarity_flags(p)
    _add_config_flags(p)
    p.add_argument("--labels1", default=None, help="class labels of dataset 1")
    p.add_argument("--labels2", default=None, help="class labels of dataset 2")
    p.add_argument("--truth", default=None,
                   help="true match file (index per row) or 'identity'")
    p.add_argument("--sparse-coupling", action="store_true",
                   help="write the coupling as sparse triplets")
    p.set_defaults(func=cmd_joint)

    p = sub.add_parser("match", help="graph matching from two edge lists")
    p.add_argument("edges1")
    p.add_argument("edges2")
    _add_io_flags(p)
    _add_dissimilarity_flags(p)
    _add_config_flags(p)
    p.add_argument("--truth", default=None,
                   help="true match file (index per row) or 'identity'")
    p.add_argument("--sparse-coupling", action="store_true")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="compute metrics from saved files")
    _add_io_flags(p)
    p.add_argument("--z1", default=None, help="first embedding CSV")
    p.add_argument("--z2", default=None, help="second embedding CSV")
    p.add_argument("--coupling", default=None, help="coupling CSV or triplet file")
    p.add_argument("--d1", default=None, help="first dissimilarity CSV")
    p.add_argument("--d2", default=None, help="second dissimilarity CSV")
    p.add_argument("--labels1", default=None)
    p.add_argument("--labels2", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--knn", type=int, default=5, help="neighbors for label transfer")
    p.add_argument("--sparse-coupling", action="store_true",
                   help="coupling file holds sparse triplets")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="generate a synthetic dataset pair")
    p.add_argument("--kind", choices=synthdata.KINDS, required=True)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--p1", type=int, default=1000)
    p.add_argument("--p2", type=int, default=2000)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", metavar="DIR", default=".")
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except JointScaleError as exc:
        _log("error", str(exc), error=type(exc).__name__)
        return 1
    except SystemExit as exc:  # _fail inside a subcommand
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
