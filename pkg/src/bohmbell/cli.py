"""``simulate``: command-line front end.

Every command writes its CSV tables and a ``manifest.json`` into ``--out``.
Exit status is 0 on success, 1 for invalid input and 2 for runtime failures
(density underflow, I/O).
"""
from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import re
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import analysis
from .batch import PairJob, default_workers, simulate_jobs
from .config import ConfigError, config_from_mapping, config_to_mapping, default_config, load_config, readout_separation, validate
from .guidance import DensityUnderflowError, integrate_single_batch, readout_sign
from .io import SCHEMAS, write_manifest, write_table
from .sampling import setting_key, single_equilibrium_batch

__all__ = ["main", "parse_number", "build_parser"]

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}
_NAMES = {"pi": math.pi}
_FUNCS = {"sqrt": math.sqrt}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.operand))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
        return _FUNCS[node.func.id](_eval(node.args[0]))
    raise ValueError("unsupported expression")


def parse_number(text: str) -> float:
    """Parse ``"0.3"``, ``"pi/4"``, ``"3pi/8"``, ``"1/sqrt(2)"`` and the like."""
    src = str(text).strip().replace("π", "pi")
    src = re.sub(r"(\d)\s*(pi|sqrt)", r"\1*\2", src)
    try:
        value = _eval(ast.parse(src, mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _seed(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return n


def _number_list(text: str) -> list[float]:
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("need at least one value")
    return [parse_number(s) for s in items]


class _Parser(argparse.ArgumentParser):
    # usage errors share the validation exit status
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file or a previous run manifest")
    common.add_argument("--seed", type=_seed, help="master seed (overrides the config)")
    common.add_argument("--workers", type=_positive_int, help="worker processes (default: $BOHMBELL_WORKERS or 1)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config entry")

    parser = _Parser(prog="simulate", description="Pilot-wave EPR-Bell trajectory simulator.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("sg", parents=[common], help="single-particle Stern-Gerlach run")
    p.add_argument("--c-plus", type=parse_number, default=1 / math.sqrt(2))
    p.add_argument("--c-minus", type=parse_number, default=1 / math.sqrt(2))
    p.add_argument("-n", type=_positive_int, default=1000)
    p.add_argument("--stride", type=_positive_int, default=100, help="keep every stride-th step")

    p = sub.add_parser("trajectories", parents=[common], help="pair trajectories at one angle")
    p.add_argument("--gamma", type=parse_number, help="relative angle (default: beta - alpha from the config)")
    p.add_argument("-n", type=_positive_int, default=10)
    p.add_argument("--stride", type=_positive_int, default=100, help="keep every stride-th step")

    p = sub.add_parser("chsh", parents=[common], help="CHSH sweep over theta")
    p.add_argument("--theta-min", type=parse_number, default=0.0)
    p.add_argument("--theta-max", type=parse_number, default=4 * math.pi)
    p.add_argument("--n-theta", type=_positive_int, default=200)
    p.add_argument("--n-pairs", type=_positive_int, default=2000, help="pairs per setting")

    p = sub.add_parser("disk", parents=[common], help="hidden-variable disk partition")
    p.add_argument("--gamma", type=parse_number, action="append", help="repeatable (default: 0, pi/2, pi/4, 3pi/8)")
    p.add_argument("-n", type=_positive_int, default=5000)

    p = sub.add_parser("marginals", parents=[common], help="no-signalling marginals")
    p.add_argument("--gammas", type=_number_list, default="0,pi/4,pi/2,3pi/8,pi", help="comma-separated angles")
    p.add_argument("-n", type=_positive_int, default=2000)

    sub.add_parser("validate-config", parents=[common], help="check a config and print it")
    return parser


def _load(args):
    config = load_config(args.config) if args.config else default_config()
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip() if key.strip() == "seed" else parse_number(value)
    if overrides:
        config = config_from_mapping(overrides, base=config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    return validate(config)


def _cmd_sg(args, config, workers, out):
    cp, cm = args.c_plus, args.c_minus
    norm = cp**2 + cm**2
    if norm == 0:
        raise ConfigError("c_plus and c_minus cannot both be zero")
    if abs(norm - 1) > 1e-6:
        warnings.warn(f"c_plus^2 + c_minus^2 = {norm:.8g}; renormalising")
    cp, cm = cp / math.sqrt(norm), cm / math.sqrt(norm)
    z0 = single_equilibrium_batch(config.seed, 0, args.n, config.physical.sigma0, setting_key("sg"))
    res = integrate_single_batch(z0, cp, cm, config, stride=args.stride)
    n_t = res.t.size
    write_table(
        out / "sg_trajectories.csv",
        "sg_trajectories",
        {"run_id": np.tile(np.arange(args.n), n_t), "t": np.repeat(res.t, args.n), "z": res.zA.ravel()},
    )
    n_up = int(np.sum(readout_sign(res.zA[-1]) == 1))
    frac = n_up / args.n
    se = math.sqrt(frac * (1 - frac) / args.n)
    summary = {
        "n": args.n,
        "n_up": n_up,
        "fraction_up": frac,
        "expected_up": cp**2 / (cp**2 + cm**2),
        "stderr": se,
        "ci_low": max(frac - 3 * se, 0.0),
        "ci_high": min(frac + 3 * se, 1.0),
    }
    write_table(out / "sg_summary.csv", "sg_summary", {k: [v] for k, v in summary.items()})
    print(f"fraction up {frac:.4f} (expected {summary['expected_up']:.4f}, 3-sigma CI [{summary['ci_low']:.4f}, {summary['ci_high']:.4f}])")
    return {"c_plus": cp, "c_minus": cm, "n": args.n, "stride": args.stride}, ["sg_trajectories.csv", "sg_summary.csv"]


def _cmd_trajectories(args, config, workers, out):
    gamma = config.gamma if args.gamma is None else args.gamma
    # one stream for every angle, so runs at different angles start from the same points
    job = PairJob(gamma, args.n, setting_key("trajectories"))
    res = simulate_jobs(config, [job], workers=workers, stride=args.stride)[0]
    n_t = res.t.size
    write_table(
        out / "trajectories.csv",
        "trajectories",
        {
            "pair_index": np.tile(res.pair_index, n_t),
            "t": np.repeat(res.t, args.n),
            "zA": res.path_A.ravel(),
            "zB": res.path_B.ravel(),
        },
    )
    write_table(
        out / "pairs.csv",
        "pairs",
        {
            "pair_index": res.pair_index,
            "r": res.r,
            "theta": res.theta,
            "zA0": res.zA0,
            "zB0": res.zB0,
            "zA": res.zA,
            "zB": res.zB,
            "sA": res.sA,
            "sB": res.sB,
        },
    )
    E = float(np.mean(res.sA * res.sB))
    print(f"gamma={gamma:.6g}: <sA sB> = {E:+.4f} over {args.n} pairs")
    return {"gamma": gamma, "n": args.n, "stride": args.stride}, ["trajectories.csv", "pairs.csv"]


def _cmd_chsh(args, config, workers, out):
    if not args.theta_max > args.theta_min:
        raise ConfigError("theta-max must exceed theta-min")
    step = (args.theta_max - args.theta_min) / args.n_theta
    thetas = [args.theta_min + k * step for k in range(args.n_theta)]
    est = analysis.chsh_sweep(thetas, args.n_pairs, config=config, workers=workers)
    write_table(
        out / "chsh.csv",
        "chsh",
        {
            "theta": [e.theta for e in est],
            "M_hat": [e.M_hat for e in est],
            "stderr": [e.stderr for e in est],
            "M_theory": [analysis.chsh_theory(e.theta) for e in est],
        },
    )
    best = max(est, key=lambda e: abs(e.M_hat))
    print(f"max |M| = {abs(best.M_hat):.4f} +- {best.stderr:.4f} at theta = {best.theta:.4f}")
    opts = {"theta_min": args.theta_min, "theta_max": args.theta_max, "n_theta": args.n_theta, "n_pairs": args.n_pairs}
    return opts, ["chsh.csv"]


def _cmd_disk(args, config, workers, out):
    gammas = args.gamma or [0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 8]
    jobs = [PairJob(g, args.n, analysis.pairs_setting(g)) for g in gammas]
    results = simulate_jobs(config, jobs, workers=workers)
    points = {c.name: [] for c in SCHEMAS["disk_points"]}
    sep = {c.name: [] for c in SCHEMAS["separatrix"]}
    for g, res in zip(gammas, results):
        cols = dict(pair_index=res.pair_index, r=res.r, theta=res.theta, zA0=res.zA0, zB0=res.zB0, sA=res.sA, sB=res.sB)
        points["gamma"].append(np.full(args.n, g))
        for k, v in cols.items():
            points[k].append(v)
        curve = analysis.separatrix(g)
        sep["gamma"].append(np.full(curve.theta.size, g))
        sep["arc"].append(curve.arc)
        sep["theta"].append(curve.theta)
        sep["U"].append(curve.U)
        freq = analysis.joint_frequencies(res.sA, res.sB)
        print(f"gamma={g:.6g}: (++, +-, -+, --) = " + ", ".join(f"{f:.4f}" for f in freq))
    write_table(out / "disk_points.csv", "disk_points", {k: np.concatenate(v) for k, v in points.items()})
    write_table(out / "separatrix.csv", "separatrix", {k: np.concatenate(v) for k, v in sep.items()})
    palette = {f"{'+' if a > 0 else '-'}{'+' if b > 0 else '-'}": c for (a, b), c in analysis.PALETTE.items()}
    with open(out / "palette.json", "w", encoding="utf-8") as fh:
        json.dump(palette, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"gammas": gammas, "n": args.n}, ["disk_points.csv", "separatrix.csv", "palette.json"]


def _cmd_marginals(args, config, workers, out):
    gammas = args.gammas if isinstance(args.gammas, list) else _number_list(args.gammas)
    jobs = [PairJob(g, args.n, analysis.pairs_setting(g)) for g in gammas]
    results = simulate_jobs(config, jobs, workers=workers)
    rows = {c.name: [] for c in SCHEMAS["marginals"]}
    for g, res in zip(gammas, results):
        pa, pb = float(np.mean(res.sA == 1)), float(np.mean(res.sB == 1))
        sa, sb = (math.sqrt(p * (1 - p) / args.n) for p in (pa, pb))
        for k, v in dict(
            gamma=g, P_A_plus=pa, P_B_plus=pb, n=args.n, stderr_A=sa, stderr_B=sb,
            ci_A_low=max(pa - 3 * sa, 0.0), ci_A_high=min(pa + 3 * sa, 1.0),
            ci_B_low=max(pb - 3 * sb, 0.0), ci_B_high=min(pb + 3 * sb, 1.0),
        ).items():
            rows[k].append(v)
        print(f"gamma={g:.6g}: P_A(+) = {pa:.4f}, P_B(+) = {pb:.4f}")
    write_table(out / "marginals.csv", "marginals", rows)
    return {"gammas": gammas, "n": args.n}, ["marginals.csv"]


def _cmd_validate(args, config, workers, out):
    print(json.dumps(config_to_mapping(config), indent=2, sort_keys=True))
    print(f"readout separation: {readout_separation(config):.3f} packet widths")
    if readout_separation(config) < analysis.MIN_SEPARATION:
        raise ConfigError(f"branches end less than {analysis.MIN_SEPARATION:g} widths apart; readout unreliable")
    return None, []


_COMMANDS = {
    "sg": _cmd_sg,
    "trajectories": _cmd_trajectories,
    "chsh": _cmd_chsh,
    "disk": _cmd_disk,
    "marginals": _cmd_marginals,
    "validate-config": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        config = _load(args)
        workers = default_workers() if args.workers is None else args.workers
        if args.command != "validate-config" and readout_separation(config) < analysis.MIN_SEPARATION:
            warnings.warn("branches end less than 5 widths apart; signs may be unreliable", analysis.InsufficientSeparationWarning)
        out = args.out
        if args.command != "validate-config":
            out.mkdir(parents=True, exist_ok=True)
        opts, outputs = _COMMANDS[args.command](args, config, workers, out)
    except (ConfigError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"simulate: invalid input: {exc}", file=sys.stderr)
        return 1
    except (DensityUnderflowError, OSError) as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 2
    if opts is not None:
        try:
            write_manifest(out, config, args.command, opts, outputs, workers, time.perf_counter() - start)
        except OSError as exc:
            print(f"simulate: {exc}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
