"""Command-line driver.

Subcommands: ``train`` (one RSG run), ``dda`` (one distributed run),
``experiment`` (a sweep written as CSV), ``estimate`` (sample sizes) and
``check`` (oracle self-checks). Settings come from defaults, then a
``--config`` file of ``key=value`` lines, then flags.
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from ..autoencoder import CorruptionModel, NetworkShape
from ..dda import dda_sample_size, plan_subdas, run_distributed
from ..errors import ConfigError, DAError, UsageError
from ..rsg import (
    LastIterate,
    MinGradTail,
    SampledStop,
    estimate_lipschitz,
    make_stopping_distribution,
    rsg_run,
    sample_size,
)
from ..streams import stream
from . import config as cfgmod
from .checks import SUITES, run_checks
from .experiments import load_data, make_schedule, run_experiment, trailing_average


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def _shared():
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    p.add_argument("--config", help="flat key=value file; flags take precedence")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dv", type=int, help="visible units (without bias)")
    p.add_argument("--dh", type=int, help="hidden units")
    p.add_argument("--zeta", type=float, help="corruption probability")
    p.add_argument("--N", type=int, help="SGD iterations (total budget for dda)")
    p.add_argument("--seed", type=int)
    p.add_argument("--schedule", choices=("constant", "optimal", "poly"))
    p.add_argument("--gamma", type=float, help="constant step, or first step of poly")
    p.add_argument("--D", type=float, help="scale of the optimal constant step")
    p.add_argument("--p", type=float, help="decay exponent of poly")
    p.add_argument("--n", type=int, help="instances to generate or read")
    p.add_argument("--rho", type=float, help="latent correlation of synthetic data")
    p.add_argument("--idx", help="IDX image file to use instead of synthetic data")
    p.add_argument("--bias", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--window", type=int, help="trailing-average window")
    p.add_argument("--set", type=_kv, action="append", default=[], metavar="KEY=VALUE",
                   help="any other config key")
    return p


def build_parser():
    shared = _shared()
    parser = _Parser(prog="dapretrain", allow_abbrev=False,
                     description="Denoising autoencoder pre-training with randomized stochastic gradients.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", parents=[shared], allow_abbrev=False, help="one RSG run")
    train.add_argument("--stopping", choices=("last", "sampled", "min_grad_tail"))

    dda = sub.add_parser("dda", parents=[shared], allow_abbrev=False, help="one distributed run")
    dda.add_argument("--tau", type=float)
    dda.add_argument("--phi", type=float)
    dda.add_argument("--B", type=int, help="sub-network count (replacement mode)")
    dda.add_argument("--mode", choices=("disjoint", "replacement"))
    dda.add_argument("--workers", type=int, help="run sub-networks in parallel on this many workers")
    dda.add_argument("--meta", type=int, help="meta-iterations M")
    dda.add_argument("--relaxed", action=argparse.BooleanOptionalAction, default=None,
                     help="clamp q to 0 when tau <= 1 - zeta instead of failing")

    exp = sub.add_parser("experiment", parents=[shared], allow_abbrev=False, help="run a sweep")
    exp.add_argument("kind", nargs="?", choices=cfgmod.KINDS)
    exp.add_argument("--workers", type=int, help="sweep points run concurrently")
    exp.add_argument("--timing", action="store_true", help="fill in elapsed_ms")

    est = sub.add_parser("estimate", allow_abbrev=False, help="sample sizes for an (epsilon, delta) solution")
    est.add_argument("--dv", type=int, required=True)
    est.add_argument("--dh", type=int, required=True)
    est.add_argument("--r", type=float, required=True)
    est.add_argument("--delta", type=float, required=True)
    est.add_argument("--epsilon", type=float, required=True)
    est.add_argument("--t", type=float, required=True)
    est.add_argument("--tau", type=float)

    chk = sub.add_parser("check", allow_abbrev=False, help="run the oracle self-checks")
    chk.add_argument("--suite", action="append", choices=tuple(SUITES))
    return parser


_NOT_CONFIG = {"command", "config", "out", "set", "kind", "timing", "suite"}


def _resolve(kind, args):
    file_values = cfgmod.read_config_file(args.config) if args.config else {}
    file_values.pop("experiment", None)
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG and v is not None}
    if "meta" in flags and kind in cfgmod.KINDS:
        flags["M"] = flags.pop("meta")
    flags.update(dict(args.set))
    if getattr(args, "timing", False):
        flags["record_timing"] = True
    return cfgmod.resolve(kind, file_values, flags)


def _emit(pairs, out=None, name=None):
    text = "".join(f"{k}={v}\n" for k, v in pairs)
    sys.stdout.write(text)
    if out and name:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text)


def cmd_train(args):
    cfg = _resolve("train", args)
    data = load_data(cfg, cfg["seed"])
    shape = NetworkShape(data.d_v, cfg["dh"], cfg["bias"])
    model = CorruptionModel(cfg["zeta"], cfg["bias"])
    schedule = make_schedule(cfg["schedule"], cfg["gamma"], cfg["D"], cfg["p"])
    lip = None
    stopping = LastIterate()
    if cfg["stopping"] == "sampled":
        lip = estimate_lipschitz(data.instances, model, shape, cfg["lip_probes"], stream(cfg["seed"], 3))
        stopping = SampledStop(make_stopping_distribution(schedule, cfg["N"], lip, shape))
    elif cfg["stopping"] == "min_grad_tail":
        stopping = MinGradTail(min(cfg["tail_window"], cfg["N"]))
    elif cfg["stopping"] != "last":
        raise ConfigError(f"stopping must be last, sampled or min_grad_tail, got {cfg['stopping']!r}")
    run = rsg_run(data.instances, model, shape, schedule, cfg["N"], stopping=stopping,
                  init_seed=cfg["seed"], rng=stream(cfg["seed"], 1), lip=lip,
                  oracle_window=min(cfg["window"], cfg["N"]), oracle_draws=cfg["oracle_draws"])
    pairs = [("N", run.N), ("R", run.R), ("f_initial", repr(float(run.f_initial))), ("f_best", repr(float(run.f_best))),
             ("grad_sq_trailing", repr(trailing_average(run.grad_norm_history, cfg["window"]))),
             ("oracle_grad_sq_trailing", repr(trailing_average(run.oracle_grad_history, cfg["window"]))),
             ("reuse", repr(run.reuse))]
    if lip is not None:
        pairs += [("L", repr(float(lip.L))), ("L_prime", repr(float(lip.L_prime)))]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        np.save(Path(args.out) / "W.npy", run.W_final)
        (Path(args.out) / "manifest.txt").write_text("experiment=train\n" + cfgmod.dump(cfg))
    _emit(pairs, args.out, "train_result.txt")
    return 0


def cmd_dda(args):
    cfg = _resolve("dda", args)
    data = load_data(cfg, cfg["seed"])
    shape = NetworkShape(data.d_v, cfg["dh"], cfg["bias"])
    schedule = make_schedule(cfg["schedule"], cfg["gamma"], cfg["D"], cfg["p"])
    plan = plan_subdas(shape, cfg["zeta"], cfg["tau"], phi=cfg["phi"], mode=cfg["mode"], M=cfg["meta"],
                       rng=stream(cfg["seed"], 4), B=cfg["B"] or None, relaxed=cfg["relaxed"])
    n_per = cfg["N"] // (plan.M * plan.B)
    if n_per < 1:
        raise ConfigError(f"N={cfg['N']} is smaller than M * B = {plan.M * plan.B}")
    parallel = cfg["workers"] > 1
    res = run_distributed(plan, data.instances, schedule, n_per,
                          execution="parallel" if parallel else "sequential",
                          workers=cfg["workers"] if parallel else None, seed=cfg["seed"], init_seed=cfg["seed"],
                          warm_start=cfg["warm_start"], oracle_window=min(cfg["window"], n_per),
                          oracle_draws=cfg["oracle_draws"], backend=cfg["backend"])
    pairs = [("q", repr(float(plan.q))), ("B", plan.B), ("M", plan.M), ("n_per_subda", n_per),
             ("mode", plan.mode), ("seconds", f"{res.seconds:.3f}"),
             ("oracle_grad_sq_trailing", repr(trailing_average(res.oracle_grad_history, cfg["window"])))]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        np.save(Path(args.out) / "W.npy", res.W)
        (Path(args.out) / "manifest.txt").write_text("experiment=dda\n" + cfgmod.dump(cfg))
    _emit(pairs, args.out, "dda_result.txt")
    return 0


def cmd_experiment(args):
    kind = args.kind
    if kind is None and args.config:
        kind = cfgmod.read_config_file(args.config).get("experiment")
    if kind is None:
        raise ConfigError("experiment kind missing (positional or experiment= in --config)")
    cfg = _resolve(kind, args)
    records, path = run_experiment(kind, cfg, args.out or "results")
    for r in records:
        print(",".join(r.row()))
    print(f"wrote {path}")
    return 0


def cmd_estimate(args):
    shape = NetworkShape(args.dv, args.dh)
    if args.tau is None:
        rep = sample_size(args.r, args.delta, args.epsilon, args.t, shape)
        _emit([("C", rep.C), ("S", rep.S), ("N_calls", rep.N_calls)])
    else:
        M, S = dda_sample_size(args.r, args.delta, args.epsilon, args.t, args.tau, shape)
        _emit([("M", M), ("S", S)])
    return 0


def cmd_check(args):
    results = run_checks(args.suite)
    for r in results:
        print(r.line())
    return 0 if all(r.ok for r in results) else 1


COMMANDS = {"train": cmd_train, "dda": cmd_dda, "experiment": cmd_experiment,
            "estimate": cmd_estimate, "check": cmd_check}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except DAError as e:
        print(f"{e.category}: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"io: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
