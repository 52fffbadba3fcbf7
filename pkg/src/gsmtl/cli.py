"""Command-line entry point: ``gsmtl {synth,train,predict,evaluate,curve}``.

Every command accepts ``--config run.json`` with flat keys named after the
flags (``rho1``, ``corr_threshold`` ...). Explicit flags win over the file.
Exit codes: 0 success, 1 usage/precondition, 2 non-convergence, 3 IO.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .coefficients import CoefficientMatrix
from .data import (
    DataError,
    MultiTaskDataset,
    SyntheticSpec,
    filter_indeterminate,
    generate_synthetic,
    load_multitask_dataset,
    read_features_csv,
    save_multitask_dataset,
)
from .evaluation import DEFAULT_THRESHOLDS, run_cv, write_curve_csv
from .graph import GraphError, TaskGraph, estimate_structure, structure_matrix
from .models import FeatureScaler, default_hyperparams, graph_sparse_mtl_fit, predict, trace_mtl_solve
from .prox import NumericError, SolverConfig

log = logging.getLogger("gsmtl")

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class OutputError(Exception):
    pass


# --------------------------------------------------------------------------
# argument handling

_DEFAULTS = {
    "seed": 0,
    "n": 50,
    "d": 20,
    "m": 3,
    "sparsity": 0.25,
    "edges": "",
    "noise": 0.0,
    "raters": None,
    "task_names": None,
    "method": "graph",
    "lambda": None,
    "rho": None,
    "rho1": None,
    "rho2": None,
    "psi": "off",
    "graph": "auto",
    "corr_threshold": 0.9,
    "standardize": "auto",
    "max_iters": 5000,
    "tol": 1e-6,
    "restart": "off",
    "exclude_task": None,
    "exclude_score": 3.0,
    "k": 10,
    "target": None,
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with flat keys named after the flags")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def _add_data(p):
    p.add_argument("--features", nargs="+", help="one features CSV per task")
    p.add_argument("--scores", help="scores CSV (id,task,score)")
    p.add_argument("--raters", help="raters CSV (id,task,rater,score)")
    p.add_argument("--task-names", nargs="+", dest="task_names")
    p.add_argument("--exclude-task", dest="exclude_task", help="drop samples whose score on this task equals --exclude-score")
    p.add_argument("--exclude-score", dest="exclude_score", type=float)
    p.add_argument("--standardize", choices=["on", "off", "auto"])


def _add_model(p):
    p.add_argument("--lambda", dest="lambda", type=float, help="lasso weight used for graph estimation")
    p.add_argument("--rho", type=float, help="trace-norm weight")
    p.add_argument("--rho1", type=float, help="graph penalty weight")
    p.add_argument("--rho2", type=float, help="l1 weight")
    p.add_argument("--psi", choices=["on", "off"])
    p.add_argument("--graph", help="'auto' or a graph JSON path")
    p.add_argument("--corr-threshold", dest="corr_threshold", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--restart", choices=["on", "off"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsmtl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic multi-task dataset")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--sparsity", type=float)
    p.add_argument("--edges", help="comma separated pairs, e.g. 0-1,2-3")
    p.add_argument("--noise", type=float, help="target noise standard deviation")

    p = sub.add_parser("train", help="fit a model and write model.json")
    _add_common(p)
    _add_data(p)
    _add_model(p)
    p.add_argument("--method", choices=["graph", "trace"])

    for name, text in (("evaluate", "k-fold cross-validation report"), ("curve", "accuracy-vs-threshold curve only")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        _add_data(p)
        _add_model(p)
        p.add_argument("--k", type=int)
        p.add_argument("--target")

    p = sub.add_parser("predict", help="score a features file with a saved model")
    _add_common(p)
    p.add_argument("--model", required=False)
    p.add_argument("--features", nargs="+")
    p.add_argument("--task", help="task whose coefficients to use")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file and explicit flags."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise OSError(f"cannot read config {args.config}: {e.strerror}") from e
        except json.JSONDecodeError as e:
            raise UsageError(f"config {args.config} is not valid JSON: {e}") from e
        if not isinstance(doc, dict):
            raise UsageError(f"config {args.config} must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in doc.items()})
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k != "config"})
    return cfg


def _parse_edges(text) -> list[tuple[int, int]]:
    if not text:
        return []
    if isinstance(text, list):
        return [tuple(int(v) for v in e) for e in text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            a, b = part.split("-")
            out.append((int(a), int(b)))
        except ValueError:
            raise UsageError(f"bad edge {part!r}; expected a-b") from None
    return out


def _solver_cfg(cfg) -> SolverConfig:
    try:
        return SolverConfig(
            max_iters=int(cfg["max_iters"]), tol=float(cfg["tol"]), restart=cfg["restart"] == "on"
        )
    except ValueError as e:
        raise UsageError(str(e)) from e


def _prepare_out(path) -> Path:
    if not path:
        raise UsageError("--out is required")
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {out}: {e.strerror or e}") from e
    if not os.access(out, os.W_OK):
        raise OutputError(f"output directory {out} is not writable")
    return out


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _is_synthetic(features) -> bool:
    manifest = Path(features[0]).parent / "manifest.json"
    try:
        return bool(json.loads(manifest.read_text()).get("synthetic"))
    except (OSError, ValueError):
        return False


def _load(cfg) -> tuple[MultiTaskDataset, bool]:
    if not cfg.get("features") or not cfg.get("scores"):
        raise UsageError("--features and --scores are required")
    ds = load_multitask_dataset(cfg["features"], cfg["scores"], cfg.get("raters"), cfg.get("task_names"))
    if cfg.get("exclude_task"):
        ds = filter_indeterminate(ds, cfg["exclude_task"], float(cfg["exclude_score"]))
        for w in ds.warnings:
            log.warning(w)
        if ds.n == 0:
            raise UsageError("no samples left after filtering")
    mode = cfg["standardize"]
    standardize = mode == "on" or (mode == "auto" and not _is_synthetic(cfg["features"]))
    return ds, standardize


def _hyperparams(ds, cfg):
    psi = cfg["psi"] == "on"
    if psi and not ds.has_raters:
        raise UsageError("--psi on needs rater scores for every task; pass --raters")
    try:
        return default_hyperparams(
            ds, lam=cfg["lambda"], rho=cfg["rho"], rho1=cfg["rho1"], rho2=cfg["rho2"], psi_enabled=psi
        )
    except ValueError as e:
        raise UsageError(str(e)) from e


def _graph_arg(cfg, ds):
    spec = cfg["graph"]
    if spec == "auto":
        if ds.shared_d is None:
            raise UsageError("tasks have different feature dimensions; pass --graph <file>")
        return "auto"
    try:
        g = TaskGraph.load(spec)
    except (KeyError, ValueError, TypeError) as e:
        raise UsageError(f"bad graph file {spec}: {e}") from e
    if g.M != ds.M:
        raise UsageError(f"graph {spec} has {g.M} nodes but the data has {ds.M} tasks")
    return g


# --------------------------------------------------------------------------
# commands


def cmd_synth(cfg) -> int:
    try:
        spec = SyntheticSpec(
            n=int(cfg["n"]),
            d=int(cfg["d"]),
            M=int(cfg["m"]),
            sparsity=float(cfg["sparsity"]),
            edges=tuple(_parse_edges(cfg["edges"])),
            noise_sigma=float(cfg["noise"]),
            seed=int(cfg["seed"]),
        )
    except ValueError as e:
        raise UsageError(str(e)) from e
    out = _prepare_out(cfg.get("out"))
    ds, truth = generate_synthetic(spec)
    save_multitask_dataset(ds, out)
    truth.save(out / "truth.json")
    structure_matrix(spec.M, [e for e in spec.edges]).save(out / "graph.json")
    _write_json(
        out / "manifest.json",
        {
            "synthetic": True,
            "spec": {
                "n": spec.n,
                "d": spec.d,
                "M": spec.M,
                "sparsity": spec.sparsity,
                "edges": [list(e) for e in spec.edges],
                "noise_sigma": spec.noise_sigma,
                "seed": spec.seed,
            },
            "features": [f"{name}.csv" for name in ds.task_names],
            "scores": "scores.csv",
        },
    )
    print(f"wrote {ds.M} tasks x {ds.n} samples x d={spec.d} to {out}")
    return EXIT_OK


def cmd_train(cfg) -> int:
    ds, standardize = _load(cfg)
    hp = _hyperparams(ds, cfg)
    solver = _solver_cfg(cfg)
    method = cfg["method"]
    graph = _graph_arg(cfg, ds) if method == "graph" else None
    out = _prepare_out(cfg.get("out"))

    scaler = None
    if standardize:
        scaler = FeatureScaler.fit(ds)
        ds = scaler.transform(ds)
    if method == "trace":
        if ds.shared_d is None:
            raise UsageError("the trace-norm model needs a shared feature dimension")
        sol = trace_mtl_solve(ds, hp.rho, solver)
    else:
        if graph == "auto":
            graph = estimate_structure(ds, hp.lam or hp.rho2, float(cfg["corr_threshold"]), solver)
        sol = graph_sparse_mtl_fit(ds, graph, hp, solver)

    meta = dict(sol.W.meta)
    meta.update(
        converged=bool(sol.converged),
        iterations=int(sol.iterations),
        final_rel_change=float(sol.rel_change),
    )
    if scaler is not None:
        meta["standardization"] = scaler.to_dict()
    model = CoefficientMatrix(sol.W.values, sol.W.task_names, hp.to_dict() | {"method": method}, meta)
    model.save(out / "model.json")
    with (out / "objective_trace.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "objective"])
        for i, v in enumerate(sol.objective_trace, 1):
            w.writerow([i, repr(float(v))])
    _write_json(out / "run.json", {"command": "train", "config": _jsonable(cfg)})
    if not sol.converged:
        print(
            f"not converged after {sol.iterations} iterations; "
            f"final relative objective change {sol.rel_change:.3e}",
            file=sys.stderr,
        )
        return EXIT_NOT_CONVERGED
    print(f"converged in {sol.iterations} iterations; model written to {out / 'model.json'}")
    return EXIT_OK


def _evaluate(cfg, curve_only: bool) -> int:
    ds, standardize = _load(cfg)
    hp = _hyperparams(ds, cfg)
    solver = _solver_cfg(cfg)
    graph = _graph_arg(cfg, ds)
    target = cfg["target"] or ds.task_names[0]
    if target not in ds.task_names:
        raise UsageError(f"unknown target task {target!r}; have {list(ds.task_names)}")
    k = int(cfg["k"])
    if not 1 <= k <= ds.n:
        raise UsageError(f"--k must lie in [1, {ds.n}]")
    out = _prepare_out(cfg.get("out"))

    report = run_cv(
        ds,
        graph,
        hp,
        solver,
        target,
        k=k,
        seed=int(cfg["seed"]),
        thresholds=DEFAULT_THRESHOLDS,
        standardize=standardize,
        corr_threshold=float(cfg["corr_threshold"]),
    )
    write_curve_csv(out / "curve.csv", report.curve)
    if not curve_only:
        (out / "report.json").write_text(report.to_json())
    _write_json(out / "run.json", {"command": "curve" if curve_only else "evaluate", "config": _jsonable(cfg)})
    if not report.all_converged:
        log.warning("some folds stopped at max_iters before reaching tol")
    print(
        f"{target}: accuracy(|diff|<=1) {report.aggregate_accuracy:.4f}, "
        f"mean abs diff {report.aggregate_mean_abs_diff:.4f} over {k} folds"
    )
    return EXIT_OK


def cmd_predict(cfg) -> int:
    if not cfg.get("model") or not cfg.get("features") or not cfg.get("task"):
        raise UsageError("--model, --features and --task are required")
    try:
        model = CoefficientMatrix.load(cfg["model"])
    except (KeyError, ValueError, TypeError) as e:
        raise UsageError(f"bad model file {cfg['model']}: {e}") from e
    if cfg["task"] not in model.task_names:
        raise UsageError(f"model has no task {cfg['task']!r}; have {list(model.task_names)}")
    m = model.task_names.index(cfg["task"])
    features = cfg["features"]
    ids, X = read_features_csv(features[0] if isinstance(features, list) else features)
    if X.shape[1] != model.d:
        raise UsageError(f"features have d={X.shape[1]} but the model has d={model.d}")
    out = _prepare_out(cfg.get("out"))

    if "standardization" in model.meta:
        X = FeatureScaler.from_dict(model.meta["standardization"]).transform_task(m, X)
    scores = np.atleast_1d(predict(model, cfg["task"], X))
    with (out / "predictions.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "score"])
        for sid, s in zip(ids, scores):
            w.writerow([sid, repr(float(s))])
    print(f"wrote {len(ids)} predictions to {out / 'predictions.csv'}")
    return EXIT_OK


def _jsonable(cfg) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in ("command", "verbose", "func")}


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": lambda c: _evaluate(c, curve_only=False),
    "curve": lambda c: _evaluate(c, curve_only=True),
    "predict": cmd_predict,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, DataError, GraphError, KeyError, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (OutputError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
