"""Command-line entry point: ``brownmeet <command> [options]``.

Exit codes: 0 success, 1 validation failure, 2 domain error, 3 I/O error,
4 Monte Carlo truncation, 5 conditioning error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__, elliptic, encounter, mc, validation
from .errors import ConditioningError, CornerUndefined, DomainError, Truncated
from .geometry import IntervalSpec, PairState

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN, EXIT_IO, EXIT_TRUNCATED, EXIT_CONDITIONING = 0, 1, 2, 3, 4, 5
PAPER_OMEGA = 5.244115106


def fmt(x: float) -> str:
    """17-significant-digit round-trip formatting."""
    return format(float(x), ".17g")


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None = None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }

    def comment_lines(self) -> list[str]:
        return ["# manifest: " + json.dumps(self.as_dict(), sort_keys=True)]


def argv_from_manifest(manifest: dict) -> list[str]:
    """Command line that reproduces the run recorded in ``manifest``."""
    argv = [manifest["command"]]
    for key, value in sorted(manifest["parameters"].items()):
        flag = "--" + key.replace("_", "-")
        if value is None or value is False:
            continue
        if value is True:
            argv.append(flag)
        else:
            argv += [flag, fmt(value) if isinstance(value, float) else str(value)]
    return argv


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _manifest(args, command: str, *skip: str) -> RunManifest:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command", *skip)}
    return RunManifest(command, params, getattr(args, "seed", None))


def _interval(args) -> IntervalSpec:
    try:
        return IntervalSpec(args.a, args.b)
    except DomainError as exc:
        raise CliError(EXIT_DOMAIN, str(exc)) from exc


def _pair(args, iv: IntervalSpec, strict: bool = False) -> PairState:
    s = PairState(args.x1, args.x2)
    try:
        s.check(iv, strict=strict)
    except DomainError as exc:
        raise CliError(EXIT_DOMAIN, str(exc)) from exc
    return s


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {out}: {exc}") from exc


def _emit_json(payload: dict, out: str | None = None) -> None:
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def cmd_omega(args) -> int:
    w = elliptic.omega_constant()
    beta = math.gamma(0.5) * math.gamma(0.25) / math.gamma(0.75)
    delta = abs(w - beta)
    man = _manifest(args, "omega")
    if args.json:
        _emit_json({"manifest": man.as_dict(), "value": w, "beta_check_delta": delta,
                    "paper_value": PAPER_OMEGA})
    else:
        lines = man.comment_lines() + [f"omega = {w:.12f}", f"beta_check_delta = {delta:.3e}"]
        _emit("\n".join(lines) + "\n", None)
    return EXIT_OK


def cmd_prob(args) -> int:
    iv = _interval(args)
    s = _pair(args, iv)
    try:
        p = encounter.meet_probability(s, iv)
    except CornerUndefined as exc:
        raise CliError(EXIT_DOMAIN, str(exc)) from exc
    try:
        asym = encounter.asymptotic_probability(s, iv)
    except DomainError:
        asym = math.nan
    man = _manifest(args, "prob")
    if args.json:
        _emit_json({"manifest": man.as_dict(), "probability": p, "asymptotic": asym})
    else:
        lines = man.comment_lines() + [f"P = {fmt(p)}", f"asymptotic = {fmt(asym)}"]
        _emit("\n".join(lines) + "\n", None)
    return EXIT_OK


def _sim_config(args, n: int | None = None) -> mc.SimConfig:
    try:
        return mc.SimConfig(
            diffusion=args.D,
            dt=args.dt,
            n_realizations=n if n is not None else args.n,
            seed=args.seed,
            bridge_corrections=not args.no_bridge,
            threads=args.threads,
            max_steps=args.max_steps,
        )
    except DomainError as exc:
        raise CliError(EXIT_DOMAIN, str(exc)) from exc


def cmd_curve(args) -> int:
    iv = _interval(args)
    if not iv.a < args.x2 < iv.b:
        raise CliError(EXIT_DOMAIN, f"x2 must lie inside ({iv.a}, {iv.b})")
    if args.n_points < 2:
        raise CliError(EXIT_DOMAIN, "--n-points must be at least 2")
    xs = mc.curve_abscissae(args.x2, args.n_points, iv)
    closed = encounter.probability_values(xs, np.full_like(xs, args.x2), iv)
    closed = np.where(xs == args.x2, 1.0, closed)
    buf = io.StringIO()
    buf.write("\n".join(_manifest(args, "curve", "out").comment_lines()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = ["x1", "x2", "p_closed"]
    if args.with_mc:
        header += ["p_mc", "std_error", "n"]
        cfg = _sim_config(args)
        try:
            rows = mc.sweep_curve(args.x2, args.n_points, iv, cfg)
        except Truncated as exc:
            raise CliError(EXIT_TRUNCATED, str(exc)) from exc
    writer.writerow(header)
    for k, x1 in enumerate(xs):
        row = [fmt(x1), fmt(args.x2), fmt(closed[k])]
        if args.with_mc:
            _, p_hat, se = rows[k]
            row += [fmt(p_hat), fmt(se), str(cfg.n_realizations)]
        writer.writerow(row)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def density_table(s: PairState, iv: IntervalSpec, n_points: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Interior meeting positions, densities and the sqrt(2)-weighted trapezoid mass."""
    m = np.linspace(iv.a, iv.b, n_points + 2)[1:-1]
    d = encounter.density_values(s.x1, s.x2, m, iv)
    # the density vanishes at both ends of the diagonal
    mm = np.concatenate(([iv.a], m, [iv.b]))
    dd = np.concatenate(([0.0], d, [0.0]))
    mass = math.sqrt(2.0) * float(np.trapezoid(dd, mm))
    return m, d, mass


def cmd_density(args) -> int:
    iv = _interval(args)
    s = _pair(args, iv, strict=True)
    if args.n_points < 2:
        raise CliError(EXIT_DOMAIN, "--n-points must be at least 2")
    m, d, mass = density_table(s, iv, args.n_points)
    p = encounter.meet_probability(s, iv)
    buf = io.StringIO()
    buf.write("\n".join(_manifest(args, "density", "out").comment_lines()) + "\n")
    buf.write(f"# sqrt2_trapezoid_mass: {fmt(mass)}\n# probability: {fmt(p)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "density"])
    for mi, di in zip(m, d):
        writer.writerow([fmt(mi), fmt(di)])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    iv = _interval(args)
    s = _pair(args, iv)
    cfg = _sim_config(args)
    try:
        r = mc.estimate(s, iv, cfg, bins=args.bins if args.histogram else None,
                        conditional_time=args.conditional_time)
    except Truncated as exc:
        raise CliError(EXIT_TRUNCATED, str(exc)) from exc
    payload = {"manifest": _manifest(args, "simulate", "out").as_dict(), **r.to_dict()}
    if args.histogram:
        payload["histogram"]["density"] = (
            r.histogram / (r.n * np.diff(r.bin_edges))
        ).tolist()
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_meantime(args) -> int:
    iv = _interval(args)
    s = _pair(args, iv, strict=True)
    if args.D <= 0:
        raise CliError(EXIT_DOMAIN, "--D must be positive")
    if args.grid_n < 128:
        raise CliError(EXIT_DOMAIN, "--grid-n must be at least 128 (the coarse grid uses grid_n/2)")
    try:
        fine = encounter.conditional_mean_time(s, iv, args.D, args.grid_n)
        coarse = encounter.conditional_mean_time(s, iv, args.D, args.grid_n // 2)
    except ConditioningError as exc:
        raise CliError(EXIT_CONDITIONING, str(exc)) from exc
    richardson = (4.0 * fine - coarse) / 3.0
    payload = {"tau": fine, "tau_coarse": coarse, "richardson": richardson, "grid_n": args.grid_n}
    if args.with_mc:
        cfg = _sim_config(args)
        try:
            r = mc.estimate(s, iv, cfg, conditional_time=True)
        except Truncated as exc:
            raise CliError(EXIT_TRUNCATED, str(exc)) from exc
        payload.update(mc_tau=r.conditional_mean_time, mc_tau_se=r.conditional_time_se,
                       mc_met=r.met, mc_n=r.n)
    man = _manifest(args, "meantime")
    if args.json:
        _emit_json({"manifest": man.as_dict(), **payload})
    else:
        lines = man.comment_lines() + [f"{k} = {fmt(v) if isinstance(v, float) else v}" for k, v in payload.items()]
        _emit("\n".join(lines) + "\n", None)
    return EXIT_OK


def cmd_validate(args) -> int:
    t0 = time.perf_counter()
    results, grid = validation.run(level=args.level, tol_override=args.tol)
    man = _manifest(args, "validate")
    if args.dump:
        buf = io.StringIO()
        buf.write("\n".join(man.comment_lines()) + f"\n# laplace grid n={grid.n}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["i", "j", "x1", "x2", "value"])
        for i, j, x1, x2, v in grid.to_rows():
            writer.writerow([i, j, fmt(x1), fmt(x2), fmt(v)])
        _emit(buf.getvalue(), args.dump)
    lines = man.comment_lines()
    width = max(len(r.name) for r in results)
    lines.append(f"{'check':<{width}}  status  {'value':>12}  {'tolerance':>10}")
    for r in results:
        bound = ">=" if r.lower_bound else "<="
        lines.append(
            f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.value:>12.4e}  {bound}{r.tolerance:.3e}"
        )
    ok = all(r.passed for r in results)
    lines.append(f"# {sum(r.passed for r in results)}/{len(results)} passed in {time.perf_counter() - t0:.1f} s")
    _emit("\n".join(lines) + "\n", None)
    return EXIT_OK if ok else EXIT_FAIL


def _add_interval(p):
    p.add_argument("--a", type=float, default=0.0, help="left end of the interval (default 0)")
    p.add_argument("--b", type=float, default=1.0, help="right end of the interval (default 1)")


def _add_pair(p):
    p.add_argument("--x1", type=float, required=True)
    p.add_argument("--x2", type=float, required=True)


def _add_mc(p, n_default=2000):
    p.add_argument("--n", type=int, default=n_default, help="number of realizations")
    p.add_argument("--dt", type=float, default=None, help="time step (default 1e-5 L^2 / 2D)")
    p.add_argument("--D", type=float, default=1.0, help="diffusion constant")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-bridge", action="store_true", help="disable Brownian-bridge crossing corrections")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=None, help="per-realization step cap (default L^2/(D dt))")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brownmeet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("omega", help="print the constant omega")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("prob", help="closed-form meeting probability")
    _add_pair(p)
    _add_interval(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("curve", help="probability as a function of x1 at fixed x2 (CSV)")
    p.add_argument("--x2", type=float, required=True)
    p.add_argument("--n-points", type=int, default=50)
    p.add_argument("--with-mc", action="store_true", help="add Monte Carlo columns")
    p.add_argument("--out", default="-")
    _add_interval(p)
    _add_mc(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("density", help="meeting-position density (CSV)")
    _add_pair(p)
    p.add_argument("--n-points", type=int, default=2000)
    p.add_argument("--out", default="-")
    _add_interval(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("simulate", help="Monte Carlo estimate (JSON)")
    _add_pair(p)
    _add_interval(p)
    _add_mc(p)
    p.add_argument("--histogram", action="store_true", help="include meeting-position histogram")
    p.add_argument("--bins", type=int, default=40)
    p.add_argument("--conditional-time", action="store_true", help="include mean meeting time among meetings")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("meantime", help="conditional mean meeting time")
    _add_pair(p)
    _add_interval(p)
    p.add_argument("--grid-n", type=int, default=256)
    p.add_argument("--with-mc", action="store_true")
    p.add_argument("--json", action="store_true")
    _add_mc(p, n_default=100000)
    p.set_defaults(func=cmd_meantime)

    p = sub.add_parser("validate", help="run the invariant suite")
    p.add_argument("--level", choices=("fast", "full"), default="fast")
    p.add_argument("--tol", type=float, default=None, help="override every tolerance with this value")
    p.add_argument("--dump", default=None, help="write the finite-difference grid as CSV")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DomainError, CornerUndefined) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
