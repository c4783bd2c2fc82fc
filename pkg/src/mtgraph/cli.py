"""Pipeline orchestration, CSV/pgm emission, and the command-line front end.

Subcommands: generate, train, estimate, threshold, evaluate, sweep-tau,
heatmap, pipeline. Configuration comes from a JSON file plus flag
overrides; every artifact a run produces lands in the output directory
together with a manifest that pins config, seed, versions, and per-node
wall-clock, which is enough to reproduce the run exactly.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, NumericalError
from .graphmetrics import centrality, recovery
from .modelio import load_component, save_component
from .precision import EdgeSet, GeneralizedPrecision, assemble, omega_row, tau_sweep, threshold
from .synthdata import GroundTruth, butterfly_sample, normalized_true_omega, sparse_spd_gaussian
from .training import SplitDataset, TrainConfig, select_lambda, split_standardize

_FLOAT_FMT = "%.17g"


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    """Pipeline settings; defaults follow the reference experiment setup."""

    dataset: str | None = None                 # CSV path, or None to generate
    generator: dict | None = None              # {"kind": "gaussian"|"butterfly", ...}
    train_size: int = 5000
    val_size: int = 10000
    est_size: int = 10000
    hidden: tuple[int, ...] = (64, 64, 64)
    quad_nodes: int = 21
    lambda_grid: tuple[float, ...] = (1.0, 0.1, 0.01, 0.001, 0.0)
    taus: tuple[float, ...] = (0.2, 0.1, 0.05)
    workers: int | None = None                 # None: one per CPU
    seed: int = 0
    outdir: str = "runs/out"
    max_epochs: int = 500
    patience: int = 10
    learning_rate: float = 1e-3
    batch_size: int | str | None = None

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lambda_grid=tuple(self.lambda_grid), max_epochs=self.max_epochs,
            patience=self.patience, learning_rate=self.learning_rate,
            batch_size=self.batch_size, seed=self.seed,
            hidden=tuple(self.hidden), quad_nodes=self.quad_nodes,
        )


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = RunConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.dataset is None and cfg.generator is None:
        raise ConfigError("config needs either a dataset path or generator settings")
    if not cfg.taus:
        raise ConfigError("need at least one threshold value")
    return cfg


# ---------------------------------------------------------------------------
# CSV / PGM emission

def load_dataset_csv(path):
    """Read a named-column CSV of reals; returns (matrix, names)."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"dataset not found: {path}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            names = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        names = [n.strip() for n in names]
        width = len(names)
        rows = []
        for rnum, row in enumerate(reader, start=2):
            if len(row) != width:
                raise DataError(f"{path}: row {rnum} has {len(row)} cells, expected {width}")
            vals = []
            for cnum, cell in enumerate(row, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}: non-numeric cell at row {rnum}, "
                                    f"column {cnum} ({cell!r})") from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64), names


def write_matrix_csv(path, matrix: np.ndarray, names) -> None:
    matrix = np.atleast_2d(matrix)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in matrix:
            writer.writerow([_FLOAT_FMT % v for v in row])


def write_edges_csv(path, es: EdgeSet, names, weights: np.ndarray | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target", "weight"])
        for (i, j) in sorted(es.edges):
            w = 1.0 if weights is None else weights[i, j]
            writer.writerow([names[i], names[j], _FLOAT_FMT % w])


def read_edges_csv(path, names) -> EdgeSet:
    index = {n: i for i, n in enumerate(names)}
    edges = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if len(row) < 2:
                raise DataError(f"{path}: malformed edge row {row!r}")
            try:
                edges.add((index[row[0]], index[row[1]]))
            except KeyError as exc:
                raise DataError(f"{path}: unknown node name {exc}") from None
    return EdgeSet(d=len(names), edges=frozenset(edges))


def emit_heatmap(matrix_csv, out_path) -> None:
    """Render a square matrix CSV as an 8-bit binary PGM, 0 black, max white."""
    matrix, names = load_dataset_csv(matrix_csv)
    if matrix.shape[0] != matrix.shape[1]:
        raise DataError(f"{matrix_csv}: heatmap needs a square matrix, "
                        f"got {matrix.shape[0]}x{matrix.shape[1]}")
    v = np.clip(matrix, 0.0, None)
    peak = v.max()
    if peak > 0:
        pix = np.rint(255.0 * v / peak).astype(np.uint8)
    else:
        pix = np.zeros_like(v, dtype=np.uint8)
    h, w = pix.shape
    with open(out_path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class NodeResult:
    k: int
    lam: float
    row: np.ndarray
    history: list
    component_blob: dict
    wall_seconds: float
    epochs: int
    val_nll: float


@dataclass
class PipelineResult:
    config: RunConfig
    data: SplitDataset
    gp: GeneralizedPrecision
    edge_sets: dict
    recoveries: dict
    ground_truth: GroundTruth | None
    node_lambdas: list


def _generate(cfg: RunConfig):
    opts = dict(cfg.generator or {})
    kind = opts.pop("kind", None)
    total = cfg.train_size + cfg.val_size + cfg.est_size
    if kind == "gaussian":
        d = int(opts.pop("d", 10))
        X, gt = sparse_spd_gaussian(d, total,
                                    zero_prob=float(opts.pop("zero_prob", 0.95)),
                                    value_range=tuple(opts.pop("value_range", (0.3, 0.8))),
                                    seed=cfg.seed)
    elif kind == "butterfly":
        r = int(opts.pop("r", 5))
        X, gt = butterfly_sample(r, total, seed=cfg.seed)
    else:
        raise ConfigError(f"unknown generator kind: {kind!r}")
    if opts:
        raise ConfigError(f"unknown generator options: {sorted(opts)}")
    names = [f"x{j}" for j in range(X.shape[1])]
    return X, names, gt


def _node_task(args):
    """Worker body: pick lambda, train, and estimate one precision column."""
    k, data, tcfg, limit_threads = args
    if limit_threads:
        try:
            from threadpoolctl import threadpool_limits
        except ImportError:
            threadpool_limits = None
        if threadpool_limits is not None:
            with threadpool_limits(limits=1):
                return _run_node(k, data, tcfg)
    return _run_node(k, data, tcfg)


def _run_node(k: int, data: SplitDataset, tcfg: TrainConfig) -> NodeResult:
    t0 = time.perf_counter()
    lam, mc, history, val = select_lambda(k, data, tcfg)
    row = omega_row(mc, data.estimation)
    blob = {"sizes": list(mc.params.sizes), "theta": mc.params.theta,
            "beta": mc.beta, "quad_nodes": len(mc.rule)}
    return NodeResult(k=k, lam=lam, row=row, history=history,
                      component_blob=blob, wall_seconds=time.perf_counter() - t0,
                      epochs=len(history), val_nll=val)


def _rebuild_component(blob: dict, k: int):
    from .network import NetworkParams
    from .quadrature import cc_rule
    from .component import MapComponent
    params = NetworkParams(tuple(blob["sizes"]), np.asarray(blob["theta"]))
    return MapComponent(k=k, params=params, beta=blob["beta"],
                        rule=cc_rule(blob["quad_nodes"]))


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """split -> per-node (select lambda, train, omega row) -> assemble ->
    threshold -> metrics; writes all artifacts under cfg.outdir."""
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "models").mkdir(exist_ok=True)

    gt: GroundTruth | None = None
    if cfg.dataset is not None:
        raw, names = load_dataset_csv(cfg.dataset)
    else:
        raw, names, gt = _generate(cfg)
    data = split_standardize(raw, (cfg.train_size, cfg.val_size, cfg.est_size), cfg.seed)
    data.names = names
    d = data.dim
    tcfg = cfg.train_config()

    workers = cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)
    tasks = [(k, data, tcfg, workers > 1) for k in range(d)]
    results: dict[int, NodeResult] = {}
    partial_path = outdir / "omega_rows_partial.csv"
    with open(partial_path, "w", newline="", encoding="utf-8") as partial:
        pwriter = csv.writer(partial)
        pwriter.writerow(["k", "lambda"] + names)
        try:
            if workers <= 1:
                iterator = map(_node_task, tasks)
                for res in iterator:
                    results[res.k] = res
                    pwriter.writerow([res.k, _FLOAT_FMT % res.lam]
                                     + [_FLOAT_FMT % v for v in res.row])
                    partial.flush()
            else:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for res in pool.map(_node_task, tasks):
                        results[res.k] = res
                        pwriter.writerow([res.k, _FLOAT_FMT % res.lam]
                                         + [_FLOAT_FMT % v for v in res.row])
                        partial.flush()
        except NumericalError as exc:
            raise NumericalError(f"pipeline aborted: {exc}; completed rows kept "
                                 f"in {partial_path}") from exc

    # deterministic reduction in node order, independent of completion order
    ordered = [results[k] for k in range(d)]
    gp = assemble([res.row for res in ordered])
    write_matrix_csv(outdir / "omega.csv", gp.omega, names)

    edge_sets, recoveries = {}, {}
    for tau in cfg.taus:
        es = threshold(gp, tau)
        edge_sets[tau] = es
        write_edges_csv(outdir / f"edges_tau{tau:g}.csv", es, names, weights=gp.omega)
        if gt is not None:
            recoveries[tau] = recovery(es, gt.true_edges)
    if gt is not None:
        with open(outdir / "recovery.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau", "fpr", "tpr", "precision", "recall", "f1"])
            for tau, rep in recoveries.items():
                writer.writerow([f"{tau:g}"] + [_FLOAT_FMT % v for v in
                                                (rep.fpr, rep.tpr, rep.precision,
                                                 rep.recall, rep.f1)])
        write_edges_csv(outdir / "true_edges.csv", gt.true_edges, names)
        if gt.precision is not None:
            write_matrix_csv(outdir / "true_omega.csv", normalized_true_omega(gt), names)

    table = centrality(edge_sets[cfg.taus[0]], names)
    order = table.order()
    with open(outdir / "centrality.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "degree", "closeness", "betweenness", "hub", "mean_rank"])
        for i in order:
            writer.writerow([names[i]] + [_FLOAT_FMT % v for v in
                                          (table.degree[i], table.closeness[i],
                                           table.betweenness[i], table.hub[i],
                                           table.mean_rank[i])])

    for res in ordered:
        with open(outdir / f"loss_history_node{res.k}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_total", "train_nll", "val_nll"])
            for rec in res.history:
                writer.writerow([rec.epoch] + [_FLOAT_FMT % v for v in
                                               (rec.train_total, rec.train_nll,
                                                rec.val_nll)])
        save_component(_rebuild_component(res.component_blob, res.k),
                       outdir / "models" / f"model_{res.k}.bin")

    manifest = {
        "config": dataclasses.asdict(cfg),
        "seed": cfg.seed,
        "versions": {"python": platform.python_version(),
                     "numpy": np.__version__, "mtgraph": __version__},
        "nodes": [{"k": res.k, "lambda": res.lam, "epochs": res.epochs,
                   "val_nll": res.val_nll, "wall_seconds": res.wall_seconds}
                  for res in ordered],
        "created_unix": time.time(),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    return PipelineResult(config=cfg, data=data, gp=gp, edge_sets=edge_sets,
                          recoveries=recoveries, ground_truth=gt,
                          node_lambdas=[res.lam for res in ordered])


# ---------------------------------------------------------------------------
# subcommands

def _cmd_generate(args) -> int:
    cfg = load_config(args.config, _config_overrides(args))
    X, names, gt = _generate(cfg)
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(outdir / "samples.csv", X, names)
    write_edges_csv(outdir / "true_edges.csv", gt.true_edges, names)
    if gt.precision is not None:
        write_matrix_csv(outdir / "true_omega.csv", normalized_true_omega(gt), names)
    print(f"wrote {X.shape[0]}x{X.shape[1]} samples to {outdir/'samples.csv'}")
    return 0


def _cmd_pipeline(args) -> int:
    cfg = load_config(args.config, _config_overrides(args))
    result = run_pipeline(cfg)
    for tau, es in result.edge_sets.items():
        line = f"tau={tau:g}: {len(es)} edges"
        if tau in result.recoveries:
            rep = result.recoveries[tau]
            line += f" (fpr={rep.fpr:.4f}, f1={rep.f1:.4f})"
        print(line)
    print(f"artifacts in {cfg.outdir}")
    return 0


def _cmd_train(args) -> int:
    return _cmd_pipeline(args)   # training always flows through the pipeline


def _cmd_estimate(args) -> int:
    names_matrix, names = load_dataset_csv(args.data)
    data = split_standardize(names_matrix,
                             (args.train_size, args.val_size, args.est_size),
                             args.seed)
    rows = []
    for k in range(names_matrix.shape[1]):
        mc = load_component(Path(args.models) / f"model_{k}.bin")
        rows.append(omega_row(mc, data.estimation))
    gp = assemble(rows)
    write_matrix_csv(args.out, gp.omega, names)
    print(f"wrote {args.out}")
    return 0


def _cmd_threshold(args) -> int:
    matrix, names = load_dataset_csv(args.omega)
    gp = GeneralizedPrecision(omega=matrix, normalized=True)
    es = threshold(gp, args.tau)
    write_edges_csv(args.out, es, names, weights=matrix)
    print(f"{len(es)} edges at tau={args.tau:g} -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    matrix, names = load_dataset_csv(args.omega)
    gp = GeneralizedPrecision(omega=matrix, normalized=True)
    truth = read_edges_csv(args.truth, names)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "fpr", "tpr", "precision", "recall", "f1"])
        for tau in args.tau:
            rep = recovery(threshold(gp, tau), truth)
            writer.writerow([f"{tau:g}"] + [_FLOAT_FMT % v for v in
                                            (rep.fpr, rep.tpr, rep.precision,
                                             rep.recall, rep.f1)])
    print(f"wrote {args.out}")
    return 0


def _cmd_sweep_tau(args) -> int:
    matrix, names = load_dataset_csv(args.omega)
    gp = GeneralizedPrecision(omega=matrix, normalized=True)
    taus = np.linspace(0.0, 1.0, args.count)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "edge_count"])
        for tau, count in tau_sweep(gp, taus):
            writer.writerow([_FLOAT_FMT % tau, count])
    print(f"wrote {args.out}")
    return 0


def _cmd_heatmap(args) -> int:
    emit_heatmap(args.matrix, args.out)
    print(f"wrote {args.out}")
    return 0


def _config_overrides(args) -> dict:
    keys = ("dataset", "outdir", "seed", "workers", "train_size", "val_size",
            "est_size", "max_epochs", "patience")
    return {k: getattr(args, k, None) for k in keys}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--dataset", default=None, help="CSV dataset path")
    p.add_argument("--outdir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--train-size", dest="train_size", type=int, default=None)
    p.add_argument("--val-size", dest="val_size", type=int, default=None)
    p.add_argument("--est-size", dest="est_size", type=int, default=None)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtgraph",
        description="Learn conditional-independence graphs with monotone transport maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("generate", _cmd_generate), ("pipeline", _cmd_pipeline),
                     ("train", _cmd_train)):
        p = sub.add_parser(name)
        _add_config_flags(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("estimate")
    p.add_argument("--data", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--out", default="omega.csv")
    p.add_argument("--train-size", dest="train_size", type=int, required=True)
    p.add_argument("--val-size", dest="val_size", type=int, required=True)
    p.add_argument("--est-size", dest="est_size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("threshold")
    p.add_argument("--omega", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--out", default="edges.csv")
    p.set_defaults(fn=_cmd_threshold)

    p = sub.add_parser("evaluate")
    p.add_argument("--omega", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--tau", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    p.add_argument("--out", default="recovery.csv")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("sweep-tau")
    p.add_argument("--omega", required=True)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--out", default="tau_sweep.csv")
    p.set_defaults(fn=_cmd_sweep_tau)

    p = sub.add_parser("heatmap")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_heatmap)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
