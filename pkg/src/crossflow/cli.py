"""Command-line front end.

Subcommands
-----------
verify   run the inequality suite on one space and write a JSON report
flow     integrate an equivariant flow and write a CSV time series
window   tabulate the alpha window and dimension gate for a list of spaces

Options may also come from a ``key = value`` file passed with ``--config``;
keys are the long option names (``time-cap`` or ``time_cap``) and flags given
on the command line win. ``CROSSFLOW_SEED`` overrides the default seed.

Exit codes: 0 success, 1 certified violation or integration failure,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .ambient import curvature_tensor, parse_space
from .flow import (
    FlowIntegrationError,
    StopPolicy,
    comparison_lower_bound,
    evolution_residuals,
    evolve,
    monitor_report,
)
from .lab import default_grid, overall_pass, run_suite
from .profiles import geodesic_sphere, mean_curvature_profile, tube
from .shape import PinchingParams, alpha_window, dimension_gate

SEED_ENV = "CROSSFLOW_SEED"
CSV_HEADER = (
    "t",
    "r",
    "H",
    "normA2",
    "normAo2",
    "Z",
    "Q",
    "f_sigma_eta",
    "lambda1",
    "lambda1_plus_lambda2",
    "gap_ratio",
    "log_volume",
)
MAX_ROWS = 10_000

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def build_parser(seed_default: int = 0) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossflow", description="Mean curvature flow verification lab for CP^n and HP^n.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file; command-line flags override it")
    common.add_argument("--seed", type=int, default=seed_default, help=f"random seed (default from ${SEED_ENV}, else 0)")

    v = sub.add_parser("verify", parents=[common], help="certify the pointwise inequalities on one space")
    v.add_argument("--space", default="cp4")
    v.add_argument("--trials", type=int, default=100_000)
    grid = default_grid()
    v.add_argument("--eps", type=_float_list, default=grid["eps"])
    v.add_argument("--eta", type=_float_list, default=grid["eta"])
    v.add_argument("--sigma", type=_float_list, default=grid["sigma"])
    v.add_argument("--out", type=Path, help="JSON report path (default: stdout)")

    f = sub.add_parser("flow", parents=[common], help="integrate a sphere or tube flow to a CSV")
    f.add_argument("--space", default="cp4")
    f.add_argument("--family", choices=("sphere", "tube"), default="sphere")
    f.add_argument("--k", type=int, default=1, help="core dimension for tubes")
    f.add_argument("--r0", type=float, default=math.pi / 4)
    f.add_argument("--eps", type=float, default=1e-2)
    f.add_argument("--eta", type=float, default=1e-2)
    f.add_argument("--sigma", type=float, default=0.0)
    f.add_argument("--alpha", type=float, default=None, help="default: middle of the admissible window")
    stop = StopPolicy()
    f.add_argument("--curvature-cap", type=float, default=stop.curvature_cap)
    f.add_argument("--radius-floor", type=float, default=stop.radius_floor)
    f.add_argument("--time-cap", type=float, default=stop.time_cap)
    f.add_argument("--step-fraction", type=float, default=stop.step_fraction)
    f.add_argument("--rtol", type=float, default=1e-10)
    f.add_argument("--atol", type=float, default=1e-12)
    f.add_argument("--max-rows", type=int, default=MAX_ROWS)
    f.add_argument("--out", type=Path, default=Path("trajectory.csv"))

    w = sub.add_parser("window", parents=[common], help="alpha window and dimension gate per space")
    w.add_argument("spaces", nargs="*", help="labels such as cp4 hp3")
    w.add_argument("--eps", type=float, default=1e-2)
    w.add_argument("--eta", type=float, default=0.0)
    return parser


def read_config(path: Path) -> list[str]:
    """Turn ``key = value`` lines into ``--key value`` tokens."""
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    tokens: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key = key.strip().replace("_", "-")
        if key == "config":
            raise ConfigError(f"{path}:{lineno}: nested config files are not supported")
        tokens += [f"--{key}", value.strip()]
    return tokens


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser(_default_seed())
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    # Config values go first so that repeated command-line flags override them.
    argv = list(argv)
    at = argv.index(args.command) + 1
    return parser.parse_args(argv[:at] + read_config(args.config) + argv[at:])


def _write_json(payload: dict, path: Path | None) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _finite(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def cmd_verify(args: argparse.Namespace) -> int:
    space = parse_space(args.space)
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    grid = {"eps": args.eps, "eta": args.eta, "sigma": args.sigma}
    for eps in grid["eps"]:
        if not 0 < eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    if any(e < 0 for e in grid["eta"]) or any(not 0 <= s < 1 for s in grid["sigma"]):
        raise ConfigError("eta must be >= 0 and sigma in [0, 1)")
    reports = run_suite(space, grid, args.trials, args.seed)
    passed = overall_pass(reports)
    for r in reports:
        status = "ok" if r.passed else ("FAIL" if r.tier == "certified" else "flag")
        print(f"{status:4s} {r.tier:11s} {r.claim_id} violations={r.violations}/{r.trials} min_slack={r.min_slack:.3e}", file=sys.stderr)
    payload = {
        "space": space.label,
        "seed": args.seed,
        "trials": args.trials,
        "grid": {k: list(v) for k, v in grid.items()},
        "pass": passed,
        "reports": [r.to_dict() for r in reports],
    }
    _write_json(payload, args.out)
    print(f"overall: {'PASS' if passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def _downsample(n: int, max_rows: int) -> np.ndarray:
    if n <= max_rows:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, max_rows)).astype(int))


def write_csv(path: Path, columns: dict[str, np.ndarray], rows: np.ndarray) -> None:
    data = np.column_stack([columns[name] for name in CSV_HEADER])[rows]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for row in data:
            fh.write(",".join(format(float(x), ".17g") for x in row) + "\n")


def cmd_flow(args: argparse.Namespace) -> int:
    space = parse_space(args.space)
    family = geodesic_sphere(space) if args.family == "sphere" else tube(space, args.k)
    family.check_radius(args.r0)
    H0 = float(mean_curvature_profile(family, args.r0))
    if not H0 > 0:
        raise ConfigError(f"H(r0) = {H0:.6g} is not positive; the flow needs a mean-convex start")
    if args.max_rows < 2:
        raise ConfigError("--max-rows must be at least 2")
    params = PinchingParams(family.m, args.eps, args.eta, args.sigma, alpha=args.alpha)
    stop = StopPolicy(args.curvature_cap, args.radius_floor, args.time_cap, args.step_fraction)
    try:
        traj = evolve(family, args.r0, params, stop, rtol=args.rtol, atol=args.atol)
    except FlowIntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    rows = _downsample(len(traj), args.max_rows)
    write_csv(args.out, traj.columns(), rows)

    res = evolution_residuals(traj, curvature_tensor(space))
    monitor = monitor_report(traj)
    lower = comparison_lower_bound(traj.H[0], family.m, traj.t)
    footer = {
        "family": family.label,
        "space": space.label,
        "r0": args.r0,
        "seed": args.seed,
        "params": {"epsilon": params.epsilon, "eta": params.eta, "sigma": params.sigma, "alpha": params.alpha, "beta": params.beta},
        "stop": {"curvature_cap": stop.curvature_cap, "radius_floor": stop.radius_floor, "time_cap": stop.time_cap, "step_fraction": stop.step_fraction},
        "steps": len(traj),
        "rows": int(rows.size),
        "termination": traj.termination.value,
        "t_singular_estimate": _finite(traj.t_singular_estimate),
        "t_singular_upper_bound": family.m / (2.0 * traj.H[0] ** 2),
        "comparison_min_margin": float(np.min(traj.H - lower)),
        "residuals": {
            "resH": res.resH,
            "resA2": res.resA2,
            "resVol": res.resVol,
            "grad_norm_sq": res.grad_norm_sq,
            "simons": res.simons,
        },
        "monitor": monitor.to_dict(),
    }
    footer_path = Path(str(args.out) + ".json")
    _write_json(footer, footer_path)
    print(
        f"{family.label}: {len(traj)} steps, {traj.termination.value}, "
        f"T ~ {traj.t_singular_estimate:.12g}; wrote {args.out} and {footer_path}",
        file=sys.stderr,
    )
    return EXIT_OK


WINDOW_HEADER = ("field", "n", "m", "rbar", "alpha_lo", "alpha_hi", "gate_pass")


def window_rows(labels: Sequence[str], eps: float, eta: float) -> list[tuple]:
    rows = []
    for label in labels:
        space = parse_space(label)
        lo, hi, _ = alpha_window(space.m, eta)
        gate = dimension_gate(space, eps)
        rows.append((space.field.value, space.n, space.m, space.einstein, lo, hi, gate.passed))
    return rows


def cmd_window(args: argparse.Namespace) -> int:
    if not 0 < args.eps < 1 or args.eta < 0:
        raise ConfigError("need eps in (0, 1) and eta >= 0")
    rows = window_rows(args.spaces, args.eps, args.eta)
    print(" ".join(f"{h:>10s}" for h in WINDOW_HEADER))
    for fld, n, m, rbar, lo, hi, ok in rows:
        print(f"{fld:>10s} {n:>10d} {m:>10d} {rbar:>10d} {lo:>10.6f} {hi:>10.6f} {str(ok).lower():>10s}")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "flow": cmd_flow, "window": cmd_window}


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"crossflow: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        # argparse exits 2 on bad input and 0 for --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"crossflow: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
