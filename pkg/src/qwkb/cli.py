"""Command line: ``qwkb analyze|entropy|wkb|simulate <builtin|path.qop|operator>``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .builtins import BUILTINS, Target, resolve
from .entropy import Normalization, SubsetSelection, entropy_profile, entropy_set, sigma_S
from .operator import DegenerateOperatorError, SingularEvaluationError
from .parser import OperatorSyntaxError
from .spectral import COLLISION_TOL, check_regularity, partition_arcs, track_eigenpaths

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SINGULAR = 0, 1, 2, 3


class InputError(ValueError):
    pass


@dataclass
class AnalysisConfig:
    target: str
    parametrization: str | None = None
    interval: tuple[float, float] = (0.0, 1.0)
    grid: int = 2048
    tol: float = COLLISION_TOL
    normalization: str = "raw"
    subsets: str = "all"
    alpha: float = 1.0
    out: str = "qwkb-out"
    plot_data: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid < 16:
            raise InputError("grid size must be at least 16")
        if not self.tol > 0:
            raise InputError("tolerances must be positive")
        if not 0 <= self.alpha <= 1:
            raise InputError("alpha must lie in [0, 1]")
        Normalization.parse(self.normalization)


# --------------------------------------------------------------------------
# output helpers


def write_atomic(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _json(obj) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(type(o))

    return json.dumps(obj, indent=2, default=default) + "\n"


def _parse_subsets(text: str, d: int) -> list[list[int]] | None:
    """``all`` -> all labels; ``every`` -> None (all subsets); ``1,3;2`` -> two selections."""
    text = text.strip().lower()
    if text == "all":
        return [list(range(1, d + 1))]
    if text == "every":
        return None
    out = []
    for part in text.split(";"):
        try:
            labels = [int(s) for s in part.replace(" ", "").split(",") if s]
        except ValueError:
            raise InputError(f"bad subset list {part!r}") from None
        if not labels or min(labels) < 1 or max(labels) > d:
            raise InputError(f"subset {part!r} outside branch labels 1..{d}")
        out.append(labels)
    return out


def _spectral(target: Target, cfg: AnalysisConfig):
    kind = cfg.parametrization or target.parametrization
    interval = cfg.interval if kind == "interval" else None
    if target.operator is None and target.equation is not None:
        eq = target.equation
        if cfg.interval != (0.0, 1.0) and tuple(eq.interval) != cfg.interval:
            raise InputError("the interval of a closed-form equation is fixed")
        P = eq.char_poly()
    else:
        P = target.char_poly(kind, interval)
    grid = track_eigenpaths(P, cfg.grid)
    report = check_regularity(P, grid, cfg.tol)
    partition = partition_arcs(grid, regularity=report)
    if not partition.arcs:
        raise InputError("empty arc partition")
    return P, grid, report, partition


# --------------------------------------------------------------------------
# commands


def cmd_analyze(cfg: AnalysisConfig) -> tuple[int, dict]:
    target = resolve(cfg.target)
    if target.special:
        raise InputError(f"{cfg.target} is not a difference operator with a characteristic polynomial")
    P, grid, report, partition = _spectral(target, cfg)
    out = {
        "target": target.name,
        "degree": P.degree,
        "characteristic_polynomial": P.original_text(),
        "characteristic_polynomial_primitive": P.to_text(),
        "parametrization": P.param.to_dict(),
        "regularity": report.to_dict(),
        "partition": partition.to_dict(),
        "resonance_intervals": [
            {"lo": lo, "hi": hi, "branches_by_position": [g + 1 for g in grp]}
            for lo, hi, grp in partition.resonance_intervals()
        ],
    }
    outdir = Path(cfg.out)
    write_atomic(outdir / "report.json", _json(out))
    if cfg.plot_data:
        write_atomic(outdir / "eigenpaths.csv", grid.to_csv())
    print(f"{target.name}: degree {P.degree}, {report.to_dict()['verdict']}; "
          f"{len(partition.arcs)} arcs; parametrization {P.param.describe()}")
    if report.collisions:
        print("  collisions at " + ", ".join(f"{t:.10g}" for t in report.collisions))
    for lo, hi, grp in partition.resonance_intervals():
        print(f"  resonance on [{lo:.10g}, {hi:.10g}] positions {[g + 1 for g in grp]}")
    if report.singular:
        print("  singular points " + ", ".join(f"{t:.10g} ({why})" for t, why in report.singular))
    return EXIT_OK, out


def cmd_entropy(cfg: AnalysisConfig) -> tuple[int, dict]:
    target = resolve(cfg.target)
    if target.special:
        raise InputError(f"{cfg.target} has no characteristic polynomial")
    P, grid, report, partition = _spectral(target, cfg)
    norm = Normalization.parse(cfg.normalization)
    points = int(cfg.extra.get("profile_points", 21))
    alphas = np.linspace(0.0, cfg.alpha, max(points, 2))
    subsets = _parse_subsets(cfg.subsets, P.degree)
    if subsets is None:
        profiles = entropy_set(partition, grid, alphas, None, norm)
    else:
        profiles = [entropy_profile(partition, grid, SubsetSelection.from_branches(partition, s), alphas, norm)
                    for s in subsets]
    outdir = Path(cfg.out)
    summaries = []
    for prof in profiles:
        tag = prof.label.replace("branches ", "").replace(",", "-")
        write_atomic(outdir / f"sigma_{tag}.csv", prof.to_csv())
        if cfg.plot_data:
            write_atomic(outdir / f"chi_{tag}.csv", prof.integrand_csv())
        s = prof.summary()
        s["alpha"] = float(cfg.alpha)
        s["sigma"] = float(prof.sigmas[-1])
        summaries.append(s)
        print(f"S = {{{tag.replace('-', ',')}}}: sigma({cfg.alpha:g}) = {s['sigma']:.10f}  [{norm.value}]")
    summary = {
        "target": target.name,
        "parametrization": P.param.to_dict(),
        "normalization": {"name": norm.value, "formula": norm.describe()},
        "regular": report.regular,
        "selections": summaries,
    }
    write_atomic(outdir / "entropy_summary.json", _json(summary))
    return EXIT_OK, summary


def cmd_wkb(cfg: AnalysisConfig) -> tuple[int, dict]:
    from .wkb import IrregularEquationError, eigen_grid, phi0, phi1, phi_higher

    target = resolve(cfg.target)
    if target.special:
        raise InputError(f"{cfg.target} has no eps-difference equation")
    eq = target.epsilon_equation(cfg.interval)
    order = int(cfg.extra.get("order", 1))
    grid = eigen_grid(eq, min(cfg.grid, int(cfg.extra.get("wkb_grid", 1024))))
    branches = cfg.extra.get("branch", "all")
    ms = range(grid.degree) if branches == "all" else [int(b) - 1 for b in str(branches).split(",")]
    outdir = Path(cfg.out)
    files = []
    for m in ms:
        try:
            if order == 0:
                jet = phi0(eq, grid, m)
            elif order == 1:
                jet = phi1(eq, grid, m)
            else:
                jet = phi_higher(eq, grid, m, order)
        except IrregularEquationError as err:
            raise InputError(f"{err}; run 'qwkb analyze {cfg.target}' for the evidence") from None
        path = write_atomic(outdir / f"jet_branch{m + 1}.csv", jet.to_csv())
        if cfg.plot_data:
            write_atomic(outdir / f"jet_branch{m + 1}.json", jet.to_json())
        files.append(str(path))
        flags = "" if all(jet.reliable) else f" (unreliable orders: {[s for s, r in enumerate(jet.reliable) if not r]})"
        print(f"branch {m + 1}: phi_0..phi_{jet.order} on {len(jet.x)} points -> {path}{flags}")
    return EXIT_OK, {"files": files}


def _expected_rate(target: Target, cfg: AnalysisConfig, mode: str) -> float:
    sub = AnalysisConfig(cfg.target, "circle" if mode == "q" else None, cfg.interval, cfg.grid, cfg.tol,
                         "interval", cfg.subsets, cfg.alpha, cfg.out)
    P, grid, report, partition = _spectral(target, sub)
    subsets = _parse_subsets(cfg.subsets, P.degree) or [list(range(1, P.degree + 1))]
    S = SubsetSelection.from_branches(partition, subsets[0])
    return sigma_S(partition, grid, S, cfg.alpha if mode == "q" else 1.0, Normalization.INTERVAL)[0]


def _simulate_involutions(cfg: AnalysisConfig) -> tuple[int, dict]:
    from .simulator import involution_ratio_log, involutions_exact, involutions_log

    n = int(cfg.extra.get("n", 10))
    if cfg.extra.get("exact"):
        f = involutions_exact(n)
        print(f)
        print(f"digits: {len(str(f))}")
        out = {"n": n, "f": str(f), "digits": len(str(f))}
    else:
        lf = involutions_log(n)
        print(f"log f({n}) = {lf:.12g}")
        out = {"n": n, "log_f": lf}
    if n >= 4:
        r = math.exp(involution_ratio_log(n, exact=bool(cfg.extra.get("exact"))) -
                     involution_ratio_log(n // 2, exact=bool(cfg.extra.get("exact"))))
        out["ratio_r_n_over_r_half"] = r
        print(f"r({n})/r({n // 2}) = {r:.10f}")
    write_atomic(Path(cfg.out) / "involutions.json", _json(out))
    return EXIT_OK, out


def cmd_simulate(cfg: AnalysisConfig) -> tuple[int, dict]:
    from .simulator import growth_rate, iterate_eps, iterate_q, richardson

    target = resolve(cfg.target)
    if target.special == "involutions":
        return _simulate_involutions(cfg)
    mode = cfg.extra.get("mode") or ("q" if target.operator is not None else "eps")
    if mode == "q" and target.operator is None:
        raise InputError(f"{cfg.target} has no q-difference form")
    init = cfg.extra.get("init")
    init = [complex(s) for s in init.split(",")] if init else None
    puncture = bool(cfg.extra.get("puncture"))
    prec = cfg.extra.get("prec")
    prec = int(prec) if prec else None
    if mode == "q":
        n = int(cfg.extra.get("n") or 1000)
        params = [n // 4, n // 2, n]

        def run(p):
            return iterate_q(target.operator, int(p), cfg.alpha, init, puncture, prec)
    else:
        eq = target.epsilon_equation(cfg.interval)
        eps = float(cfg.extra.get("eps") or 1e-3)
        params = [4 * eps, 2 * eps, eps]
        if cfg.extra.get("wkb_seed"):
            from .wkb import eigen_grid, phi1, wkb_seed

            jet = phi1(eq, eigen_grid(eq), 0)

            def run(p):
                seeds = np.exp(wkb_seed(jet, p, range(eq.degree)))
                return iterate_eps(eq, p, seeds, puncture, prec)
        else:
            def run(p):
                return iterate_eps(eq, p, init, puncture, prec)
    traces = [run(p) for p in params]
    table = richardson(params, [growth_rate(t) for t in traces])
    outdir = Path(cfg.out)
    write_atomic(outdir / "trace.csv", traces[-1].to_csv())
    write_atomic(outdir / "convergence.csv", table.to_csv())
    for k, msg in traces[-1].events:
        print(f"  event at k={k}: {msg}")
    print(f"growth rate {table.rates[-1]:.10f}, extrapolated {table.limit:.10f} (err est {table.error:.2e})")
    out = {"rate": table.rates[-1], "extrapolated": table.limit, "err_est": table.error, "mode": mode}
    code = EXIT_OK
    if cfg.extra.get("verify"):
        expected = _expected_rate(target, cfg, mode)
        tol = float(cfg.extra.get("verify_tol", 2e-3))
        ok = abs(table.limit - expected) <= tol
        out.update(expected=expected, tolerance=tol, verified=ok)
        print(f"verify: {'PASS' if ok else 'FAIL'} growth {table.limit:.8f} vs sigma {expected:.8f} "
              f"(|diff| = {abs(table.limit - expected):.2e}, tol {tol:g})")
        code = EXIT_OK if ok else EXIT_FAIL
    write_atomic(outdir / "simulate_summary.json", _json(out))
    return code, out


COMMANDS = {"analyze": cmd_analyze, "entropy": cmd_entropy, "wkb": cmd_wkb, "simulate": cmd_simulate}


# --------------------------------------------------------------------------
# argument handling


def _interval(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("interval must be 'lo,hi'") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("interval must be nonempty")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwkb", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("target", nargs="?", help="builtin (%s), .qop file, or operator text" % ", ".join(BUILTINS))
        p.add_argument("--config", help="flat key=value file; command-line flags override it")
        p.add_argument("--grid", type=int, default=2048)
        p.add_argument("--parametrization", choices=["circle", "angle", "half-angle", "interval"])
        p.add_argument("--interval", type=_interval, default=(0.0, 1.0))
        p.add_argument("--tol", type=float, default=COLLISION_TOL)
        p.add_argument("--normalization", default="raw")
        p.add_argument("--subsets", default="all")
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--out", default="qwkb-out")
        p.add_argument("--plot-data", action="store_true")
        if name == "entropy":
            p.add_argument("--profile-points", type=int, default=21)
        if name == "wkb":
            p.add_argument("--order", type=int, default=1)
            p.add_argument("--branch", default="all")
            p.add_argument("--wkb-grid", type=int, default=1024)
        if name == "simulate":
            p.add_argument("--mode", choices=["q", "eps"])
            p.add_argument("--n", type=int)
            p.add_argument("--eps", type=float)
            p.add_argument("--init", help="comma-separated initial values")
            p.add_argument("--wkb-seed", action="store_true")
            p.add_argument("--exact", action="store_true")
            p.add_argument("--puncture", action="store_true")
            p.add_argument("--prec", type=int, help="mantissa bits for extended precision")
            p.add_argument("--verify", action="store_true")
            p.add_argument("--verify-tol", type=float, default=2e-3)
    return parser


def _config_argv(path: str) -> list[str]:
    argv = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key == "target":
            argv.append(("target", value))
        elif value.lower() in ("true", "yes", "on"):
            argv.append(f"--{key}")
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            argv += [f"--{key}", value]
    return argv


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg_argv = _config_argv(args.config)
        target = [v for v in cfg_argv if isinstance(v, tuple)]
        flags = [v for v in cfg_argv if not isinstance(v, tuple)]
        # config first, then the original flags so they win
        args = parser.parse_args([args.command] + flags + argv[1:])
        if args.target is None and target:
            args.target = target[-1][1]
    if args.target is None:
        parser.error("a target (builtin name, .qop file or operator text) is required")
    return args


def config_from_args(args: argparse.Namespace) -> AnalysisConfig:
    common = {"target", "parametrization", "interval", "grid", "tol", "normalization", "subsets",
              "alpha", "out", "plot_data"}
    ns = vars(args)
    extra = {k: v for k, v in ns.items() if k not in common | {"command", "config"}}
    return AnalysisConfig(**{k: ns[k] for k in common}, extra=extra)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        cfg = config_from_args(args)
        code, _ = COMMANDS[args.command](cfg)
        return code
    except SystemExit as exc:  # argparse
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    except (InputError, OperatorSyntaxError, DegenerateOperatorError, FileNotFoundError, KeyError) as err:
        print(f"qwkb: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except SingularEvaluationError as err:
        print(f"qwkb: singular: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    except ArithmeticError as err:
        from .simulator import SingularStepError

        if isinstance(err, SingularStepError):
            print(f"qwkb: singular step: {err}; rerun with --puncture to step past it", file=sys.stderr)
            return EXIT_SINGULAR
        raise


if __name__ == "__main__":
    sys.exit(main())
