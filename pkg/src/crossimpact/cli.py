"""Batch front-end: JSON model configs in, machine-readable reports out.

Subcommands
-----------
solve     optimal strategy for the configured model (best applicable solver,
          cross-checked against the generic KKT solve)
check     structure / shape property report plus the PD classification
gram      sorted Gram eigenvalues and the PSD verdict on the configured grid
refine    dyadic grid refinement: (N, cost) sequence and the finest strategy
simulate  Monte Carlo implementation-shortfall report
figures   regenerate the oscillation-sweep and round-trip example tables

Exit codes: 0 success, 2 config error, 3 model rejected as not positive
definite, 4 internal numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .grids import TimeGrid, equidistant_grid, geometric_grid
from .kernels import (
    CrossExpKernel,
    GaussianSquared,
    MatrixFunctionKernel,
    check_shape_properties,
    kernel_from_dict,
)
from .posdef import assemble_gram, check_grid_pd, classify_positive_definite
from .simulate import MartingaleModel, estimate_expected_cost
from .solver import Strategy, UnboundedCostError, refine, solve_best, solve_kkt

CONFIG_ERROR, NOT_PD_ERROR, NUMERIC_ERROR = 2, 3, 4


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    """17 significant digits: exact round trip at double precision."""
    return f"{float(x):.17g}"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _emit(document: dict, out_path=None) -> None:
    text = json.dumps(_jsonable(document), indent=2, sort_keys=True) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def _build_kernel(config: dict):
    try:
        return kernel_from_dict(config["kernel"])
    except KeyError as exc:
        raise ConfigError(f"kernel: missing field {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"kernel: {exc}") from exc


def _build_grid(config: dict) -> TimeGrid:
    spec = config.get("grid")
    if not isinstance(spec, dict):
        raise ConfigError("grid: must be an object")
    try:
        if "times" in spec:
            return TimeGrid(np.asarray(spec["times"], dtype=float))
        horizon, count = float(spec["horizon"]), int(spec["count"])
        spacing = spec.get("spacing", "equidistant")
        if spacing == "equidistant":
            return equidistant_grid(horizon, count)
        if spacing == "geometric":
            return geometric_grid(horizon, count, ratio=float(spec.get("ratio", 2.0)))
        raise ConfigError(f"grid.spacing: unknown value {spacing!r}")
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"grid: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from exc


def _build_portfolio(config: dict, dimension: int) -> np.ndarray:
    try:
        x0 = np.asarray(config["portfolio"], dtype=float).ravel()
    except KeyError as exc:
        raise ConfigError("portfolio: missing") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"portfolio: {exc}") from exc
    if x0.size != dimension:
        raise ConfigError(
            f"portfolio: has {x0.size} components but the kernel is {dimension}-dimensional"
        )
    return x0


def write_strategy_table(strategy: Strategy, path, fmt: str = "csv") -> None:
    """Strategy table with header ``t,asset_1,...,asset_K``."""
    k = strategy.dimension
    header = ["t"] + [f"asset_{i + 1}" for i in range(k)]
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for t, row in zip(strategy.grid.times, strategy.trades):
                writer.writerow([_fmt(t)] + [_fmt(v) for v in row])
    elif fmt == "json-like":
        doc = {
            "columns": header,
            "rows": [
                [_fmt(t)] + [_fmt(v) for v in row]
                for t, row in zip(strategy.grid.times, strategy.trades)
            ],
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        raise ConfigError(f"unknown table format {fmt!r}")


def read_strategy_table(path) -> Strategy:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ConfigError(f"{path}: not a strategy table (header must start with 't')")
    data = np.array([[float(v) for v in row] for row in rows[1:]])
    if data.size == 0:
        raise ConfigError(f"{path}: empty strategy table")
    return Strategy(data[:, 1:], TimeGrid(data[:, 0]))


def _result_summary(result, route: str) -> dict:
    return {
        "route": route,
        "lambda": [float(v) for v in result.lam],
        "cost": float(result.cost),
        "unique": bool(result.unique),
        "residual": float(result.residual),
        "liquidates": [float(v) for v in result.strategy.liquidates],
    }


def _verdict_doc(verdict) -> dict:
    doc = {"value": verdict.value, "method": verdict.method}
    if verdict.witness is not None:
        doc["witness"] = {
            "times": list(verdict.witness.times),
            "direction": verdict.witness.direction.tolist(),
        }
    return doc


def cmd_solve(args) -> int:
    config = load_config(args.config)
    kernel = _build_kernel(config)
    grid = _build_grid(config)
    x0 = _build_portfolio(config, kernel.dimension)
    result, route = solve_best(kernel, grid, x0, seed=args.seed or 0, cross_check=True)
    if args.out:
        write_strategy_table(result.strategy, args.out, args.format)
    _emit({"solve": _result_summary(result, route)})
    return 0


def cmd_check(args) -> int:
    config = load_config(args.config)
    kernel = _build_kernel(config)
    report = check_shape_properties(
        kernel, t_max=args.tmax, n_samples=args.samples, seed=args.seed or 0
    )
    pd_report = classify_positive_definite(kernel, seed=args.seed or 0)
    doc = {
        "properties": {
            "symmetric": report.symmetric,
            "commuting": report.commuting,
            "nonnegative": _verdict_doc(report.nonnegative),
            "nonincreasing": _verdict_doc(report.nonincreasing),
            "convex": _verdict_doc(report.convex),
            "nonconstant_forms": _verdict_doc(report.nonconstant_forms),
        },
        "positive_definite": {
            "verdict": pd_report.verdict,
            "method": pd_report.method,
            "min_eig": pd_report.min_eig,
        },
    }
    if pd_report.witness is not None:
        doc["positive_definite"]["witness"] = {
            "times": pd_report.witness.grid.times.tolist(),
            "trades": pd_report.witness.trades.tolist(),
            "value": pd_report.witness.value,
        }
    _emit(doc, args.out)
    return 0


def cmd_gram(args) -> int:
    config = load_config(args.config)
    kernel = _build_kernel(config)
    grid = _build_grid(config)
    gram = assemble_gram(kernel, grid)
    eigs = np.sort(np.linalg.eigvalsh(gram.blocks))
    res = check_grid_pd(gram)
    _emit(
        {
            "gram": {
                "eigenvalues": eigs.tolist(),
                "min_eig": res.min_eig,
                "psd": res.psd,
                "strict": res.strict,
                "size": gram.size,
                "dimension": gram.dimension,
            }
        },
        args.out,
    )
    return 0


def cmd_refine(args) -> int:
    config = load_config(args.config)
    kernel = _build_kernel(config)
    grid_spec = config.get("grid", {})
    horizon = float(grid_spec.get("horizon", 1.0))
    x0 = _build_portfolio(config, kernel.dimension)
    result = refine(kernel, horizon, x0, max_levels=args.levels, seed=args.seed or 0)
    if args.out:
        write_strategy_table(result.finest.strategy, args.out, args.format)
    _emit(
        {
            "refine": {
                "levels": [[n, c] for n, c in result.levels],
                "finest": _result_summary(result.finest, "refine"),
            }
        }
    )
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    kernel = _build_kernel(config)
    sim = config.get("simulation")
    if not isinstance(sim, dict):
        raise ConfigError("simulation: block missing")
    if args.strategy:
        strategy = read_strategy_table(args.strategy)
        grid = strategy.grid
    elif "strategy_csv" in sim:
        strategy = read_strategy_table(sim["strategy_csv"])
        grid = strategy.grid
    else:
        grid = _build_grid(config)
        x0 = _build_portfolio(config, kernel.dimension)
        strategy = solve_best(kernel, grid, x0, seed=args.seed or 0)[0].strategy
    try:
        s0 = np.asarray(sim["s0"], dtype=float).ravel()
        if s0.size != kernel.dimension:
            raise ConfigError(
                f"simulation.s0: has {s0.size} components but the kernel is "
                f"{kernel.dimension}-dimensional"
            )
        model = MartingaleModel(
            s0=s0,
            covariance=np.asarray(sim["covariance"], dtype=float),
            horizon=grid.span,
        )
        n_paths = int(args.paths if args.paths else sim.get("paths", 10_000))
        seed = int(args.seed if args.seed is not None else sim.get("seed", 0))
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"simulation: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"simulation: {exc}") from exc
    report = estimate_expected_cost(kernel, grid, strategy, model, n_paths, seed)
    _emit(
        {
            "simulation": {
                "mean_shortfall": report.mean_shortfall,
                "stderr": report.stderr,
                "n_paths": report.n_paths,
                "seed": report.seed,
                "analytic_cost": report.analytic_cost,
            }
        },
        args.out,
    )
    return 0


def cmd_figures(args) -> int:
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    # oscillation sweep: Gaussian-squared matrix-function kernel, 23 trades
    x0 = np.array([10.0, 0.0])
    best = {"rho": None, "T": None, "ratio": 0.0}
    sweep_rows = []
    for rho in [round(0.05 * i, 2) for i in range(1, 20)]:
        for horizon in range(1, 11):
            kernel = MatrixFunctionKernel([[1.0, rho], [rho, 1.0]], GaussianSquared())
            grid = equidistant_grid(float(horizon), 23)
            try:
                result = solve_kkt(kernel, grid, x0)
                ratio = float(np.max(np.abs(result.strategy.trades)) / 10.0)
            except (UnboundedCostError, ArithmeticError):
                ratio = float("nan")
            sweep_rows.append((rho, horizon, ratio))
            if np.isfinite(ratio) and ratio > best["ratio"]:
                best = {"rho": rho, "T": horizon, "ratio": ratio}
    with open(out_dir / "fig1_oscillation.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "T", "max_abs_trade_over_position"])
        for rho, horizon, ratio in sweep_rows:
            writer.writerow([_fmt(rho), horizon, _fmt(ratio)])

    # cross-asset round trip: one short position dragged by a large long one
    kernel = CrossExpKernel(kappa=1.0, kappa_tilde=1.8, rho=0.3)
    grid = equidistant_grid(5.0, 11)
    result, route = solve_best(kernel, grid, np.array([-50.0, 1.0]), cross_check=True)
    write_strategy_table(result.strategy, out_dir / "fig2_round_trip.csv")

    _emit(
        {
            "figures": {
                "oscillation_sweep": {"best": best, "table": "fig1_oscillation.csv"},
                "round_trip": {
                    "summary": _result_summary(result, route),
                    "table": "fig2_round_trip.csv",
                },
            }
        }
    )
    return 0


_COMMANDS = {
    "solve": cmd_solve,
    "check": cmd_check,
    "gram": cmd_gram,
    "refine": cmd_refine,
    "simulate": cmd_simulate,
    "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossimpact",
        description="Optimal liquidation under multivariate transient price impact.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in _COMMANDS.items():
        p = sub.add_parser(name)
        if name != "figures":
            p.add_argument("--config", required=True, help="model configuration (JSON)")
        p.add_argument("--out", default=None, help="output path (figures: directory)")
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("--paths", type=int, default=None, help="Monte Carlo paths")
        p.add_argument("--levels", type=int, default=8, help="refinement levels")
        p.add_argument("--tmax", type=float, default=20.0, help="property-check horizon")
        p.add_argument("--samples", type=int, default=400, help="property-check lag samples")
        p.add_argument(
            "--format", choices=("csv", "json-like"), default="csv", help="table format"
        )
        p.add_argument("--strategy", default=None, help="strategy table to simulate")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except UnboundedCostError as exc:
        payload = {"error": str(exc)}
        if exc.direction is not None:
            payload["direction"] = _jsonable(exc.direction)
        if exc.min_eig is not None:
            payload["min_eig"] = float(exc.min_eig)
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return NOT_PD_ERROR
    except ArithmeticError as exc:
        payload = {"error": str(exc)}
        results = getattr(exc, "results", None)
        if results:
            payload["candidates"] = [
                {"trades": r.strategy.trades.tolist(), "cost": r.cost} for r in results
            ]
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
