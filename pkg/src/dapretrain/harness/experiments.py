"""Experiment sweeps and their CSV output."""
import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..autoencoder import CorruptionModel, NetworkShape, batch_loss, init_weights
from ..dda.planning import plan_subdas
from ..dda.speedup import measure_speedup
from ..dda.training import run_distributed
from ..errors import ConfigError, DAError, DomainError
from ..rsg.runner import rsg_run
from ..rsg.schedules import StepSchedule
from ..streams import stream
from . import config as cfgmod
from .data import Dataset, append_bias, gen_synthetic, load_idx

COLUMNS = ("experiment", "series", "x_name", "x_value", "grad_raw", "grad_norm", "seed", "elapsed_ms")


def trailing_average(history, window=100):
    h = np.asarray(history, dtype=np.float64).ravel()
    if h.size == 0:
        raise DomainError("trailing average of an empty history")
    if window < 1:
        raise DomainError(f"window must be >= 1, got {window}")
    return float(h[-window:].mean())


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    series: str
    x_name: str
    x_value: object
    grad_raw: float
    grad_norm: float
    seed: int
    elapsed_ms: int = 0

    def row(self):
        return [self.experiment, self.series, self.x_name, _fmt(self.x_value), _fmt(self.grad_raw),
                _fmt(self.grad_norm), str(self.seed), str(self.elapsed_ms)]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def normalize(points):
    """Attach max-normalised values per series; ``points`` are (series, x_name, x, raw, seed, ms)."""
    peak = {}
    for series, _, _, raw, _, _ in points:
        if not raw > 0:
            raise DomainError(f"series {series!r} has a non-positive value {raw}")
        peak[series] = max(peak.get(series, 0.0), raw)
    return [(s, xn, x, raw, raw / peak[s], seed, ms) for s, xn, x, raw, seed, ms in points]


def make_schedule(kind, gamma=0.01, D=1.0, p=0.75):
    if kind == "constant":
        return StepSchedule.constant(gamma)
    if kind == "optimal":
        return StepSchedule.constant_optimal(D)
    if kind == "poly":
        return StepSchedule.polynomial(gamma, p)
    raise ConfigError(f"schedule must be constant, optimal or poly, got {kind!r}")


def load_data(cfg, seed, dv=None):
    """Synthetic data (seeded) or the first ``n`` rows and ``dv`` columns of an IDX file."""
    dv = dv or cfg["dv"]
    if not cfg["idx"]:
        return gen_synthetic(cfg["n"], dv, cfg["rho"], seed, bias=cfg["bias"])
    raw = load_idx(cfg["idx"]).raw
    if dv > raw.shape[1]:
        raise ConfigError(f"{cfg['idx']} has {raw.shape[1]} columns, {dv} requested")
    X = raw[:cfg["n"], :dv]
    if cfg["bias"]:
        X = append_bias(X)
    return Dataset(X, f"idx({cfg['idx']})", cfg["bias"])


def _shape(cfg, dv, dh):
    return NetworkShape(dv + 1 if cfg["bias"] else dv, dh, cfg["bias"])


def _check_positive(cfg, *keys):
    for key in keys:
        vals = cfg[key] if isinstance(cfg[key], list) else [cfg[key]]
        if not vals or any(v <= 0 for v in vals):
            raise ConfigError(f"{key} must be a nonempty list of positive values, got {cfg[key]!r}")


# Sweep points. Each returns (raw value, elapsed ms) and is a pure function of its arguments.

def _rsg_point(cfg, dv, dh, N, schedule, seed):
    t0 = time.perf_counter()
    X = load_data(cfg, seed, dv).instances
    shape = _shape(cfg, dv, dh)
    run = rsg_run(X, CorruptionModel(cfg["zeta"], cfg["bias"]), shape, schedule, N,
                  init_seed=seed, rng=seed + 100, oracle_window=cfg["window"], oracle_draws=cfg["oracle_draws"])
    return trailing_average(run.oracle_grad_history, cfg["window"]), time.perf_counter() - t0


def _dda_pair(cfg, X, shape, B, seed, w0, n_budget, window):
    """Full-network run and B-way distributed run at the same update budget."""
    schedule = make_schedule(cfg["schedule"], cfg["gamma"], cfg["D"], cfg["p"])
    if B == 1:
        plan = plan_subdas(shape, cfg["zeta"], 1.0, M=cfg.get("M", 1), rng=seed)
    else:
        plan = plan_subdas(shape, cfg["zeta"], 1.0 / B, phi=cfg.get("phi", 0.01), mode=cfg.get("mode", "disjoint"),
                           M=cfg.get("M", 1), rng=seed, relaxed=cfg["relaxed"])
    n_per = n_budget // (plan.M * plan.B)
    if n_per < 1:
        raise ConfigError(f"budget {n_budget} is too small for B={plan.B}, M={plan.M}")
    return run_distributed(plan, X, schedule, n_per, seed=seed, w0=w0, warm_start=cfg["warm_start"],
                           oracle_window=window, oracle_draws=cfg["oracle_draws"])


def _dda_point(cfg, B, seed):
    t0 = time.perf_counter()
    X = load_data(cfg, seed).instances
    shape = _shape(cfg, cfg["dv"], cfg["dh"])
    w0 = init_weights(shape, stream(seed, 9))
    res = _dda_pair(cfg, X, shape, B, seed, w0, cfg["N"], cfg["window"])
    return trailing_average(res.oracle_grad_history, cfg["window"]), time.perf_counter() - t0


def _parity_point(cfg, B, split):
    """Held-out clean reconstruction error, distributed over full network."""
    t0 = time.perf_counter()
    data = load_data(cfg, cfg["seed"]).instances
    n = data.shape[0]
    folds = np.array_split(stream(cfg["seed"], 5).permutation(n), cfg["splits"])
    test = folds[split]
    train = np.setdiff1d(np.arange(n), test)
    X, Xt = data[train], data[test]
    shape = _shape(cfg, cfg["dv"], cfg["dh"])
    w0 = init_weights(shape, stream(split, 9))
    base = _dda_pair(cfg, X, shape, 1, split, w0, cfg["N"], 0)
    dist = _dda_pair(cfg, X, shape, B, split, w0, cfg["N"], 0)
    ratio = batch_loss(dist.W, Xt, Xt).mean() / batch_loss(base.W, Xt, Xt).mean()
    return float(ratio), time.perf_counter() - t0


def _call(job):
    fn, args, label = job
    try:
        return fn(*args)
    except DAError as e:
        raise type(e)(f"sweep point {label}: {e}") from e


def _points(kind, cfg):
    """Ordered sweep as (series, x_name, x_value, seed, job)."""
    seeds = cfg["seeds"]
    tag = (lambda s: f",seed={s}") if len(seeds) > 1 else (lambda s: "")
    out = []
    if kind == "grad_vs_N":
        _check_positive(cfg, "n_values")
        if cfg["schedule"] == "optimal":
            series = [(f"D={D}", make_schedule("optimal", D=D)) for D in (cfg["D_values"] or [cfg["D"]])]
        else:
            series = [(f"gamma={g}", make_schedule(cfg["schedule"], g, cfg["D"], cfg["p"]))
                      for g in (cfg["gamma_values"] or [cfg["gamma"]])]
        for s in seeds:
            for name, sched in series:
                for N in cfg["n_values"]:
                    out.append((name + tag(s), "N", N, s, (_rsg_point, (cfg, cfg["dv"], cfg["dh"], N, sched, s))))
    elif kind == "grad_vs_shape":
        _check_positive(cfg, "dv_values", "dh_values", "N")
        sched = make_schedule(cfg["schedule"], cfg["gamma"], cfg["D"], cfg["p"])
        for s in seeds:
            for dh in cfg["dh_values"]:
                for dv in cfg["dv_values"]:
                    out.append((f"dh={dh}" + tag(s), "d_v", dv, s, (_rsg_point, (cfg, dv, dh, cfg["N"], sched, s))))
    elif kind == "grad_vs_B":
        _check_positive(cfg, "B_values", "N", "M")
        for s in seeds:
            for B in cfg["B_values"]:
                out.append((f"zeta={cfg['zeta']}" + tag(s), "B", B, s, (_dda_point, (cfg, B, s))))
    elif kind == "generalization_parity":
        _check_positive(cfg, "B_values", "N", "splits")
        if cfg["splits"] < 2:
            raise ConfigError("generalization_parity needs at least 2 splits")
        for B in cfg["B_values"]:
            if B < 2:
                raise ConfigError(f"generalization_parity compares B >= 2 against B = 1, got B={B}")
            for k in range(cfg["splits"]):
                out.append((f"B={B}", "split", k, k, (_parity_point, (cfg, B, k))))
    else:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    return out


def sweep(kind, cfg, executor=None):
    """Run the sweep; returns normalised records in sweep order."""
    if kind == "speedup":
        return _speedup(cfg)
    pts = _points(kind, cfg)
    jobs = [p[4] + (f"{p[0]} {p[1]}={p[2]}",) for p in pts]
    own = executor is None and cfg["workers"] > 1
    if own:
        executor = ProcessPoolExecutor(max_workers=cfg["workers"])
    try:
        results = list(executor.map(_call, jobs)) if executor is not None else [_call(j) for j in jobs]
    finally:
        if own:
            executor.shutdown()
    timed = cfg["record_timing"]
    raw = [(series, xn, x, val, seed, int(round(sec * 1000)) if timed else 0)
           for (series, xn, x, seed, _), (val, sec) in zip(pts, results)]
    return [ExperimentRecord(kind, *r) for r in normalize(raw)]


def _speedup(cfg):
    _check_positive(cfg, "B_values", "N")
    X = load_data(cfg, cfg["seed"]).instances
    shape = _shape(cfg, cfg["dv"], cfg["dh"])
    sched = make_schedule(cfg["schedule"], cfg["gamma"], cfg["D"], cfg["p"])
    Bs = sorted(set(cfg["B_values"]) | {1})
    rows = measure_speedup(X, shape, cfg["zeta"], sched, cfg["N"], Bs, seed=cfg["seed"],
                           backend=cfg["backend"], repeats=cfg["repeats"])
    # timing is the measurement here, so elapsed_ms is always filled in
    raw = [("workers=B", "B", r.B, r.ratio, cfg["seed"], int(round(r.seconds * 1000))) for r in rows]
    return [ExperimentRecord("speedup", *r) for r in normalize(raw)]


def to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def parity_summary(records):
    """Mean and (population) standard deviation of the ratios per B."""
    by = {}
    for r in records:
        by.setdefault(r.series, []).append(r.grad_raw)
    return [(int(s.split("=")[1]), float(np.mean(v)), float(np.std(v)), len(v)) for s, v in by.items()]


def summary_csv(summary):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("B", "mean_ratio", "std_ratio", "splits"))
    for B, mean, std, k in summary:
        w.writerow((B, repr(mean), repr(std), k))
    return buf.getvalue()


def run_experiment(kind, config=None, out_dir=None, executor=None):
    """Resolve ``config``, run the sweep and write ``<kind>.csv`` plus ``manifest.txt``.

    ``config`` is a mapping of overrides on top of the kind's defaults.
    Returns (records, csv_path or None).
    """
    cfg = cfgmod.resolve(kind, overrides=config)
    records = sweep(kind, cfg, executor)
    if out_dir is None:
        return records, None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{kind}.csv"
    path.write_text(to_csv(records))
    (out / "manifest.txt").write_text(f"experiment={kind}\n" + cfgmod.dump(cfg))
    if kind == "generalization_parity":
        (out / f"{kind}_summary.csv").write_text(summary_csv(parity_summary(records)))
    return records, path
