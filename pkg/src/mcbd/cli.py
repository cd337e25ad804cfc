"""Command-line front end.

Usage shape: ``mcbd run <experiment> [flags]`` where the experiment is
one of the canned names (fig1..fig4, long aliases accepted) or custom.
Flags override a key=value config file, which overrides the experiment's
canned defaults. Exit codes: 0 success, 1 usage error, 2 solver
non-convergence (output is still written, flagged converged=0 in its
metadata line), 3 I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence

from . import experiments
from .errors import InfeasibleConfigError, NumericFailure, UnboundedDualError
from .model import ConstraintScheme, PrecodingMode, SystemConfig

__all__ = ["main", "build_parser"]


class CliError(Exception):
    """User-facing failure with a dedicated exit code."""

    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; the CLI contract says 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise SystemExit(self._usage_exit(message))

    def _usage_exit(self, message: str) -> int:
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return 1


def _comma_ints(text: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise CliError(f"{what} must be comma-separated integers, got {text!r}", 1)


def _comma_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise CliError(f"{what} must be comma-separated numbers, got {text!r}", 1)


def _bool(text: str, what: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise CliError(f"{what} must be a boolean, got {text!r}", 1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcbd", description="Downlink precoder experiments")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    run = sub.add_parser(
        "run",
        help="run an experiment and write its CSV or JSON result",
        description=(
            "Experiments: fig1 (convergence trace), fig2 (antenna sweep), "
            "fig3 (active-constraint histogram), fig4 (power sweep), custom. "
            "Long names like fig2_miso_sweep are accepted. Rates are in nats "
            "unless --bits is given."
        ),
    )
    run.add_argument("experiment", help="fig1..fig4, their long names, or custom")
    run.add_argument("--config", metavar="FILE", help="key=value defaults; flags win")
    run.add_argument("--A", type=int, help="number of base stations")
    run.add_argument("--MB", type=int, help="antennas per base station")
    run.add_argument("--K", type=int, help="number of users")
    run.add_argument("--N", type=int, help="antennas per user")
    run.add_argument("--P", type=float, help="per-group power budget")
    run.add_argument("--weights", help="comma-separated user rate weights")
    run.add_argument("--scheme", choices=[s.value for s in ConstraintScheme])
    run.add_argument("--mode", choices=[m.value for m in PrecodingMode])
    run.add_argument(
        "--method",
        choices=["optimal", "suboptimal", "both"],
        help="which solver(s) the custom experiment runs",
    )
    run.add_argument("--seeds", type=int, metavar="COUNT", help="use seeds 1..COUNT")
    run.add_argument("--seed-list", metavar="LIST", help="explicit comma-separated seeds")
    run.add_argument("--P-grid", metavar="LIST", help="power sweep grid (fig4)")
    run.add_argument("--tol", type=float, help="dual solver tolerance")
    run.add_argument("--max-iter", type=int, help="dual solver iteration cap")
    run.add_argument("--out", metavar="PATH", help="output path; '-' for stdout")
    run.add_argument("--json", action="store_const", const=True, help="write JSON")
    run.add_argument("--bits", action="store_const", const=True, help="rates in bits")
    return parser


# config file keys share the flag spellings; underscores are accepted
_FILE_KEYS = {
    "A", "MB", "K", "N", "P", "weights", "scheme", "mode", "method",
    "seeds", "seed-list", "P-grid", "tol", "max-iter", "out", "json", "bits",
}


def _read_config_file(path: str) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("_", "-")
        if not sep or not key:
            raise CliError(f"{path}:{lineno}: expected key=value", 1)
        if key not in _FILE_KEYS:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}", 1)
        out[key] = value.strip()
    return out


def _settings(args: argparse.Namespace) -> dict:
    """Typed settings: config file first, explicit flags on top."""
    s: dict = {}
    if args.config:
        raw = _read_config_file(args.config)
        casts = {
            "A": lambda v: int(v), "MB": lambda v: int(v),
            "K": lambda v: int(v), "N": lambda v: int(v),
            "P": lambda v: float(v), "tol": lambda v: float(v),
            "max-iter": lambda v: int(v), "seeds": lambda v: int(v),
            "weights": lambda v: _comma_floats(v, "weights"),
            "seed-list": lambda v: _comma_ints(v, "seed-list"),
            "P-grid": lambda v: _comma_floats(v, "P-grid"),
            "json": lambda v: _bool(v, "json"), "bits": lambda v: _bool(v, "bits"),
        }
        for key, value in raw.items():
            try:
                s[key] = casts.get(key, lambda v: v)(value)
            except ValueError:
                raise CliError(f"bad value for {key!r}: {value!r}", 1)
    flag_values = {
        "A": args.A, "MB": args.MB, "K": args.K, "N": args.N, "P": args.P,
        "weights": None if args.weights is None else _comma_floats(args.weights, "--weights"),
        "scheme": args.scheme, "mode": args.mode, "method": args.method,
        "seeds": args.seeds,
        "seed-list": None if args.seed_list is None else _comma_ints(args.seed_list, "--seed-list"),
        "P-grid": None if args.P_grid is None else _comma_floats(args.P_grid, "--P-grid"),
        "tol": args.tol, "max-iter": args.max_iter, "out": args.out,
        "json": args.json, "bits": args.bits,
    }
    for key, value in flag_values.items():
        if value is not None:
            s[key] = value
    return s


def _config_overrides(s: dict) -> dict:
    """SystemConfig field overrides present in the settings."""
    fields = {
        "A": "num_bs", "MB": "antennas_per_bs", "K": "num_users",
        "N": "antennas_per_user", "P": "power", "weights": "weights",
    }
    out = {field: s[key] for key, field in fields.items() if key in s}
    if "scheme" in s:
        out["scheme"] = ConstraintScheme(s["scheme"])
    if "mode" in s:
        out["mode"] = PrecodingMode(s["mode"])
    return out


def _seed_selection(s: dict) -> tuple[int, ...] | None:
    if "seed-list" in s:
        return tuple(s["seed-list"])
    if "seeds" in s:
        return experiments.default_seeds(s["seeds"])
    return None


def _custom_config(s: dict) -> SystemConfig:
    required = ("A", "MB", "K", "N", "P")
    missing = [key for key in required if key not in s]
    if missing:
        raise CliError(
            "custom experiment needs --" + " --".join(missing), 1
        )
    overrides = _config_overrides(s)
    # the canned MISO check documents per-antenna budgets as the default
    overrides.setdefault("scheme", ConstraintScheme.PER_ANTENNA)
    try:
        return SystemConfig(**overrides)
    except (InfeasibleConfigError, ValueError) as exc:
        raise CliError(str(exc), 1)


def _run_experiment(name: str, s: dict) -> experiments.ExperimentResult:
    solver_opts: dict = {}
    if "tol" in s:
        solver_opts["tol"] = s["tol"]
    if "max-iter" in s:
        solver_opts["max_iter"] = s["max-iter"]
    seeds = _seed_selection(s)
    overrides = _config_overrides(s)
    try:
        if name == experiments.FIG1:
            seed = seeds[0] if seeds else 2
            return experiments.run_fig1(seed=seed, overrides=overrides or None, **solver_opts)
        if name == experiments.FIG2:
            return experiments.run_fig2(seeds=seeds, overrides=overrides or None, **solver_opts)
        if name == experiments.FIG3:
            return experiments.run_fig3(seeds=seeds, overrides=overrides or None, **solver_opts)
        if name == experiments.FIG4:
            grid = s.get("P-grid")
            kwargs = dict(solver_opts)
            if grid is not None:
                kwargs["power_grid"] = tuple(grid)
            return experiments.run_fig4(seeds=seeds, overrides=overrides or None, **kwargs)
        config = _custom_config(s)
        return experiments.run_custom(
            config,
            seeds=seeds if seeds is not None else experiments.default_seeds(10),
            method=s.get("method", "both"),
            **solver_opts,
        )
    except (InfeasibleConfigError, ValueError) as exc:
        raise CliError(str(exc), 1)
    except (NumericFailure, UnboundedDualError) as exc:
        raise CliError(f"solver failed: {exc}", 2)


def _write_result(result: experiments.ExperimentResult, s: dict) -> None:
    as_json = bool(s.get("json"))
    bits = bool(s.get("bits"))
    out = s.get("out") or f"{result.name}.{'json' if as_json else 'csv'}"
    if out == "-":
        writer = experiments.write_json if as_json else experiments.write_csv
        writer(result, sys.stdout, bits=bits)
        return
    experiments.save_result(result, out, as_json=as_json, bits=bits)
    note = "" if result.converged else " (not converged)"
    print(f"wrote {out}: {len(result.rows)} rows{note}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        name = experiments.canonical_name(args.experiment)
    except ValueError as exc:
        print(f"mcbd: error: {exc}", file=sys.stderr)
        return 1
    try:
        settings = _settings(args)
        result = _run_experiment(name, settings)
        _write_result(result, settings)
    except CliError as exc:
        print(f"mcbd: error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"mcbd: error: {exc}", file=sys.stderr)
        return 3
    return 0 if result.converged else 2


if __name__ == "__main__":
    sys.exit(main())
