"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration errors, 3 when a solver or a
validation check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import distributions, oracle, sizing, stage1, stage2
from .errors import ConfigError, SolverError
from .market import MarketScenario, SupplierSpec
from .sweep import SweepConfig, build_cells, emit_results, supplier_storage_costs, timed_sweep

EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _load_json(path: str | None) -> tuple[dict[str, Any], Path]:
    if path is None:
        raise ConfigError("--config is required")
    p = Path(path)
    try:
        return json.loads(p.read_text()), p.parent
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc}") from exc


def parse_distribution(raw: Mapping[str, Any]) -> distributions.GenerationDistribution:
    """``{"uniform": [lo, hi]}``, ``{"samples": [...]}``, ``{"point_mass": c}`` or ``{"knots": {"x": .., "p": ..}}``."""
    try:
        if "uniform" in raw:
            lo, hi = raw["uniform"]
            return distributions.uniform(float(lo), float(hi))
        if "samples" in raw:
            return distributions.build_ecdf(raw["samples"])
        if "point_mass" in raw:
            return distributions.point_mass(float(raw["point_mass"]))
        if "knots" in raw:
            return distributions.from_knots(raw["knots"]["x"], raw["knots"]["p"])
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad distribution {raw}: {exc}") from exc
    raise ConfigError(f"unknown distribution {raw}")


def parse_scenario(raw: Mapping[str, Any]) -> MarketScenario:
    try:
        sups = tuple(
            SupplierSpec(i, bool(s.get("invests", False)), parse_distribution(s["distribution"]), allow_point_mass=True)
            for i, s in enumerate(raw["suppliers"])
        )
        return MarketScenario(
            float(raw["price_cap"]), float(raw["penalty"]), float(raw["demand"]), sups,
            float(raw.get("grid_price", math.inf)),
        )
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"missing scenario key {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario value: {exc}") from exc


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return None
    return obj


def equilibrium_summary(eq: stage2.PriceEquilibrium) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": eq.kind.value, "revenues": list(eq.revenues)}
    if eq.prices is not None:
        out["prices"] = list(eq.prices)
    if eq.mixed is not None:
        out["lower_support"] = eq.lower_support
        out["atoms_at_cap"] = [c.atom for c in eq.mixed]
        out["expected_prices"] = list(eq.expected_prices())
    if eq.grid_gain is not None:
        out["grid_gain"] = eq.grid_gain
        out["grid_values"] = list(eq.grid_values or ())
    return out


def _emit(payload: Mapping[str, Any], out: str | None, name: str) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    print(text)
    if out:
        d = Path(out)
        try:
            d.mkdir(parents=True, exist_ok=True)
            (d / name).write_text(text + "\n")
        except OSError as exc:
            raise ConfigError(f"cannot write {d / name}: {exc}") from exc


def _sweep_config(args: argparse.Namespace) -> SweepConfig:
    raw, base = _load_json(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.price_step is not None:
        raw["price_step"] = args.price_step
    if args.threads is not None:
        raw["threads"] = args.threads
    return SweepConfig.from_dict(raw, base)


def cmd_capacity(args: argparse.Namespace) -> None:
    cfg = _sweep_config(args)
    if cfg.sizing is None:
        raise ConfigError("capacity needs a 'sizing' block")
    sz = cfg.sizing
    month_w = {m + 1: p for m, p in enumerate(cfg.weights.month_probabilities)}
    results = []
    for i, samples in enumerate(cfg.supplier_samples()):
        cd = sizing.charge_discharge_series(samples, sz.charge_efficiency, sz.discharge_efficiency)
        res = sizing.size_capacity(cd, sz.alpha, sz.step, month_w)
        results.append({"supplier": i + 1, **res.__dict__})
    kappa = sizing.annuity_factor(sizing.StorageCostParams(1.0, sz.interest_rate, sz.lifetime_years, sz.hours_per_year))
    _emit({"capacities": results, "annuity_factor": kappa}, args.out, "capacity.json")


def cmd_stage2(args: argparse.Namespace) -> None:
    raw, _ = _load_json(args.config)
    sc = parse_scenario(raw)
    eq = stage2.solve_stage2(sc, args.price_step)
    _emit(equilibrium_summary(eq), args.out, "stage2.json")


def _single(values: Sequence[float], name: str) -> float:
    if len(values) != 1:
        raise ConfigError(f"stage1 needs a single {name} value")
    return values[0]


def cmd_stage1(args: argparse.Namespace) -> None:
    cfg = _sweep_config(args)
    demand = _single(cfg.demands, "demand")
    penalty = _single(cfg.penalties, "penalty")
    f = cfg.price_factor
    _single(cfg.costs, "cost")
    samples = cfg.supplier_samples()
    costs = supplier_storage_costs(cfg, samples)[0]
    cells = build_cells(samples, cfg.weights, cfg.price_cap * f, penalty * f, demand, cfg.grid_price * f)
    step = None if cfg.price_step is None else cfg.price_step * f
    rev = stage1.expected_subgame_revenues(cells, cfg.weights, step, cfg.threads)
    matrix = stage1.profit_matrix(rev, costs)
    eq = stage1.solve_stage1(matrix)
    payload: dict[str, Any] = {
        "revenues": {str(k): v for k, v in rev.by_profile().items()},
        "costs": list(costs),
        "profit_matrix": matrix.payoff,
        "pure_equilibria": [list(p) for p in eq.pure],
        "mixed": {"status": eq.mixed.status, "invest_probability": eq.mixed.invest_probability},
        "label": eq.label,
        "benefit_bound": list(stage1.benefit_bound(rev)),
    }
    if all(sc.demand >= stage1.high_demand_threshold(sc) for sc in cells.values()):
        payload["dominant_strategy_threshold"] = [
            stage1.dominant_strategy_threshold(cells, cfg.weights, i) for i in range(2)
        ]
    _emit(payload, args.out, "stage1.json")


def cmd_sweep(args: argparse.Namespace) -> None:
    cfg = _sweep_config(args)
    cells, elapsed = timed_sweep(cfg)
    out = args.out or "."
    csv_path, man_path = emit_results(cells, out, cfg, elapsed)
    print(f"wrote {len(cells)} rows to {csv_path} and manifest {man_path} in {elapsed:.1f}s")


def cmd_validate(args: argparse.Namespace) -> None:
    raw, _ = _load_json(args.config)
    sc = parse_scenario(raw)
    eq = stage2.solve_stage2(sc, args.price_step)
    report = stage2.verify_equilibrium(sc, eq, args.price_step)
    payload = {"equilibrium": equilibrium_summary(eq), "verification": report.__dict__}
    if sc.n_suppliers == 2:
        game = oracle.build_discrete_game(sc, args.price_step or sc.price_cap / 200)
        grid_eq = oracle.solve_grid_equilibrium(game)
        payload["grid_oracle"] = {"values": list(grid_eq.values), "gain": grid_eq.gain, "lower_price": grid_eq.lower_price}
    _emit(payload, args.out, "validate.json")
    if not report.passed:
        raise SolverError("equilibrium failed verification")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for synthetic data (overrides config)")
    common.add_argument("--price-step", type=float, help="price grid step for discretized solvers")
    common.add_argument("--threads", type=int, help="worker threads")
    parser = argparse.ArgumentParser(prog="storagemarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("capacity", cmd_capacity, "size storage from generation data"),
        ("stage2", cmd_stage2, "solve the price game for one scenario"),
        ("stage1", cmd_stage1, "solve the investment game for one demand and cost"),
        ("sweep", cmd_sweep, "run a demand x cost x penalty sweep"),
        ("validate", cmd_validate, "solve one scenario and check it with the oracle"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be nonnegative")
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return 0
