"""Data ingestion, sweep configuration, and the demand x cost x penalty sweep.

A sweep solves the market for every (penalty, demand) pair once, since the
storage cost does not enter the price game, and then solves the investment
game for every cost on that grid. Output rows are assembled in grid order,
so the CSV is identical for identical configurations and seeds regardless of
the number of worker threads.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import scipy

from . import __version__, sizing, stage1
from .distributions import GenerationSample, ScenarioWeights, build_ecdf
from .errors import ConfigError
from .market import MarketScenario, SupplierSpec

CSV_HEADER = ("demand", "cost", "penalty", "label", "profit_1", "profit_2", "eprice_1", "eprice_2")
PRICE_UNITS = {"MWh": 1.0, "kWh": 1000.0}

Samples = dict[tuple[int, int], list[float]]


# -- ingestion ---------------------------------------------------------------


def ingest_generation_csv(path: str | Path, months: int | None = None, hours: int | None = None) -> Samples:
    """Read ``month,hour,value_mw`` rows into per-(month, hour) sample lists.

    Rows for the same cell are kept in file order, which is taken as day
    order. When ``months``/``hours`` are given every cell in range must be
    present.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ConfigError(f"cannot open generation file {path}: {exc}") from exc
    out: Samples = defaultdict(list)
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["month", "hour", "value_mw"]:
            raise ConfigError(f"{path}: header must be 'month,hour,value_mw', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ConfigError(f"{path}: row {lineno} has {len(row)} fields, expected 3")
            try:
                sample = GenerationSample(int(row[0]), int(row[1]), float(row[2]))
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{path}: row {lineno} is malformed: {exc}") from exc
            out[sample.month, sample.hour].append(sample.value)
    if not out:
        raise ConfigError(f"{path}: no data rows")
    _check_coverage(dict(out), months, hours, str(path))
    return dict(sorted(out.items()))


def _check_coverage(samples: Samples, months: int | None, hours: int | None, source: str) -> None:
    if months is None and hours is None:
        return
    m_range = range(1, (months or max(m for m, _ in samples)) + 1)
    t_range = range(1, (hours or max(t for _, t in samples)) + 1)
    for m in m_range:
        if not any((m, t) in samples for t in t_range):
            raise ConfigError(f"{source}: month {m} has no samples")
        for t in t_range:
            if (m, t) not in samples:
                raise ConfigError(f"{source}: month {m}, hour {t} has no samples")
    extra = sorted(c for c in samples if c[0] not in m_range or c[1] not in t_range)
    if extra:
        raise ConfigError(f"{source}: cells {extra[:3]} are outside {len(m_range)} months x {len(t_range)} hours")


def synthetic_samples(spec: Mapping[str, Any], months: int, hours: int, rng: np.random.Generator) -> Samples:
    """Seeded synthetic generation for tests and demos.

    ``spec`` keys: ``distribution`` (``uniform``, ``beta`` or ``gamma``),
    its parameters, ``days`` per month, and an optional per-hour
    ``hour_scale`` list multiplying the draws.
    """
    kind = spec.get("distribution", "uniform")
    days = int(spec.get("days", 30))
    scale = spec.get("hour_scale", [1.0] * hours)
    if days < 2 or len(scale) != hours:
        raise ConfigError("synthetic data needs days >= 2 and one hour_scale entry per hour")
    out: Samples = {}
    for m in range(1, months + 1):
        for t in range(1, hours + 1):
            if kind == "uniform":
                draw = rng.uniform(float(spec.get("low", 0.0)), float(spec.get("high", 1.0)), days)
            elif kind == "beta":
                draw = float(spec.get("scale", 1.0)) * rng.beta(float(spec["a"]), float(spec["b"]), days)
            elif kind == "gamma":
                draw = rng.gamma(float(spec["shape"]), float(spec.get("scale", 1.0)), days)
            else:
                raise ConfigError(f"unknown synthetic distribution {kind!r}")
            out[m, t] = [float(v) for v in scale[t - 1] * draw]
    return out


# -- configuration --------------------------------------------------------------


def _grid(value: Any, name: str) -> tuple[float, ...]:
    if isinstance(value, Mapping):
        try:
            vals = np.linspace(float(value["start"]), float(value["stop"]), int(value["num"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: grid needs start, stop and num") from exc
    elif isinstance(value, (int, float)):
        vals = np.array([float(value)])
    else:
        try:
            vals = np.asarray(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: grid values must be numbers") from exc
    if vals.ndim != 1 or vals.size == 0:
        raise ConfigError(f"{name}: grid must be a nonempty list of numbers")
    if np.any(np.diff(vals) <= 0):
        raise ConfigError(f"{name}: grid must be strictly ascending")
    return tuple(float(v) for v in vals)


@dataclass(frozen=True)
class SizingConfig:
    """Capacity-based storage cost: the cost grid holds unit capacity costs."""

    interest_rate: float
    lifetime_years: int
    alpha: float
    step: float | None = None
    hours_per_year: float = 8760.0
    charge_efficiency: float = 1.0
    discharge_efficiency: float = 1.0
    degradation_unit_cost: float = 0.0


@dataclass(frozen=True)
class SweepConfig:
    suppliers: tuple[Mapping[str, Any], ...]
    weights: ScenarioWeights
    price_cap: float
    penalties: tuple[float, ...]
    demands: tuple[float, ...]
    costs: tuple[float, ...]
    grid_price: float = math.inf
    price_unit: str = "MWh"
    currency: str = ""
    sizing: SizingConfig | None = None
    price_step: float | None = None
    seed: int = 0
    threads: int = 1
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def price_factor(self) -> float:
        return PRICE_UNITS[self.price_unit]

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], base_dir: Path | str = ".") -> "SweepConfig":
        try:
            months = int(raw.get("months", 1))
            hours = int(raw["hours_per_day"])
            probs = raw.get("month_probabilities")
            weights = ScenarioWeights(tuple(probs), hours) if probs else ScenarioWeights.uniform(months, hours)
            if weights.months != months:
                raise ConfigError("month_probabilities length differs from months")
            suppliers = tuple(raw["suppliers"])
            if len(suppliers) != 2:
                raise ConfigError("a sweep needs exactly two suppliers")
            unit = raw.get("price_unit", "MWh")
            if unit not in PRICE_UNITS:
                raise ConfigError(f"price_unit must be one of {sorted(PRICE_UNITS)}")
            penalties = _grid(raw["penalty"], "penalty")
            sizing_cfg = SizingConfig(**raw["sizing"]) if raw.get("sizing") else None
            cfg = cls(
                suppliers=suppliers,
                weights=weights,
                price_cap=float(raw["price_cap"]),
                penalties=penalties,
                demands=_grid(raw["demand"], "demand"),
                costs=_grid(raw["cost"], "cost"),
                grid_price=float(raw.get("grid_price", math.inf)),
                price_unit=unit,
                currency=str(raw.get("currency", "")),
                sizing=sizing_cfg,
                price_step=raw.get("price_step"),
                seed=int(raw.get("seed", 0)),
                threads=int(raw.get("threads", 1)),
                base_dir=Path(base_dir),
            )
        except ConfigError:
            raise
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        cap = self.price_cap * self.price_factor
        if not 0 < cap < self.grid_price * self.price_factor:
            raise ConfigError("need 0 < price_cap < grid_price")
        if any(lam <= self.price_cap for lam in self.penalties):
            raise ConfigError("every penalty must exceed the price cap")
        if self.demands[0] <= 0:
            raise ConfigError("demands must be positive")
        if self.costs[0] < 0:
            raise ConfigError("costs must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.price_step is not None and self.price_step <= 0:
            raise ConfigError("price_step must be positive")

    def supplier_samples(self) -> list[Samples]:
        """Per-supplier samples, reading CSVs or drawing synthetic data from the seed."""
        out = []
        for idx, spec in enumerate(self.suppliers):
            if "generation_csv" in spec:
                path = Path(spec["generation_csv"])
                if not path.is_absolute():
                    path = self.base_dir / path
                out.append(ingest_generation_csv(path, self.weights.months, self.weights.hours_per_day))
            elif "synthetic" in spec:
                rng = np.random.default_rng([self.seed, idx])
                out.append(synthetic_samples(spec["synthetic"], self.weights.months, self.weights.hours_per_day, rng))
            else:
                raise ConfigError(f"supplier {idx + 1} needs generation_csv or synthetic")
        return out

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d["base_dir"] = str(self.base_dir)
        d["weights"] = asdict(self.weights)
        d["suppliers"] = [dict(s) for s in self.suppliers]
        d["grid_price"] = None if math.isinf(self.grid_price) else self.grid_price
        return d


# -- the sweep -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    demand: float
    cost: float
    penalty: float
    label: str
    profits: tuple[float, float]
    expected_prices: tuple[float, float]
    invest_probability: tuple[float, float] | None = None
    supplier_costs: tuple[float, float] = (0.0, 0.0)


def build_cells(
    samples: Sequence[Samples], weights: ScenarioWeights, price_cap: float, penalty: float, demand: float,
    grid_price: float = math.inf,
) -> dict[tuple[int, int], MarketScenario]:
    cells = {}
    for m in range(1, weights.months + 1):
        for t in range(1, weights.hours_per_day + 1):
            sups = tuple(
                SupplierSpec(i, False, build_ecdf(s[m, t]), allow_point_mass=True) for i, s in enumerate(samples)
            )
            cells[m, t] = MarketScenario(price_cap, penalty, demand, sups, grid_price)
    return cells


def supplier_storage_costs(cfg: SweepConfig, samples: Sequence[Samples]) -> list[tuple[float, float]]:
    """Per-supplier hourly storage cost for each value of the cost grid."""
    if cfg.sizing is None:
        return [(c, c) for c in cfg.costs]
    sz = cfg.sizing
    month_w = {m + 1: p for m, p in enumerate(cfg.weights.month_probabilities)}
    caps, degr, kappa = [], [], None
    for s in samples:
        cd = sizing.charge_discharge_series(s, sz.charge_efficiency, sz.discharge_efficiency)
        caps.append(sizing.size_capacity(cd, sz.alpha, sz.step, month_w).total)
        raw_cd = sizing.charge_discharge_series(s)
        degr.append(sizing.degradation_cost(raw_cd, sz.degradation_unit_cost, month_w))
    out = []
    for c in cfg.costs:
        params = sizing.StorageCostParams(
            c, sz.interest_rate, sz.lifetime_years, sz.hours_per_year, sz.degradation_unit_cost,
            sz.charge_efficiency, sz.discharge_efficiency,
        )
        out.append(tuple(sizing.storage_cost(caps[i], params, degr[i]) for i in range(2)))
    return out  # type: ignore[return-value]


def _cell_result(
    demand: float, cost: float, penalty: float, costs: tuple[float, float], rev: stage1.SubgameRevenues
) -> SweepCell:
    matrix = stage1.profit_matrix(rev, costs)
    eq = stage1.solve_stage1(matrix)
    prices = rev.expected_prices or {}
    if eq.pure:
        # Several pure equilibria may coexist; report the first in profile order.
        prof = eq.pure[0]
        profits = matrix.profit(prof)
        eprice = prices.get(prof, (math.nan, math.nan))
        return SweepCell(demand, cost, penalty, eq.label, profits, eprice, None, costs)
    probs = eq.mixed.invest_probability
    if probs is None:
        raise ConfigError("investment game without pure or interior mixed equilibrium")
    profit = np.zeros(2)
    eprice = np.zeros(2)
    for prof in stage1.DUOPOLY_PROFILES:
        w = (probs[0] if prof[0] else 1 - probs[0]) * (probs[1] if prof[1] else 1 - probs[1])
        profit += w * np.asarray(matrix.profit(prof))
        eprice += w * np.asarray(prices.get(prof, (math.nan, math.nan)))
    return SweepCell(
        demand, cost, penalty, eq.label, (float(profit[0]), float(profit[1])),
        (float(eprice[0]), float(eprice[1])), probs, costs,
    )


def run_sweep(cfg: SweepConfig) -> list[SweepCell]:
    """Label every (penalty, demand, cost) grid cell with its investment outcome."""
    samples = cfg.supplier_samples()
    cost_pairs = supplier_storage_costs(cfg, samples)
    factor = cfg.price_factor
    cap = cfg.price_cap * factor
    step = None if cfg.price_step is None else cfg.price_step * factor
    jobs = [(lam, d) for lam in cfg.penalties for d in cfg.demands]

    def market(job):
        lam, d = job
        cells = build_cells(samples, cfg.weights, cap, lam * factor, d, cfg.grid_price * factor)
        return stage1.expected_subgame_revenues(cells, cfg.weights, step)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            revenues = list(pool.map(market, jobs))
    else:
        revenues = [market(j) for j in jobs]

    out = []
    for (lam, d), rev in zip(jobs, revenues):
        for c, pair in zip(cfg.costs, cost_pairs):
            out.append(_cell_result(d, c, lam, pair, rev))
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_results(
    cells: Sequence[SweepCell],
    out_dir: str | Path,
    config: SweepConfig | None = None,
    elapsed: float | None = None,
) -> tuple[Path, Path]:
    """Write ``results.csv`` and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "results.csv"
        with csv_path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for c in cells:
                writer.writerow(
                    [_fmt(c.demand), _fmt(c.cost), _fmt(c.penalty), c.label, _fmt(c.profits[0]),
                     _fmt(c.profits[1]), _fmt(c.expected_prices[0]), _fmt(c.expected_prices[1])]
                )
        manifest = {
            "package_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "rows": len(cells),
            "seed": None if config is None else config.seed,
            "config": None if config is None else config.echo(),
            "price_unit": None if config is None else config.price_unit,
            "price_to_mwh_factor": None if config is None else config.price_factor,
            "currency": None if config is None else config.currency,
            "mixed_only_probabilities": [
                {"demand": c.demand, "cost": c.cost, "penalty": c.penalty, "invest_probability": c.invest_probability}
                for c in cells if c.invest_probability is not None
            ],
            "elapsed_seconds": elapsed,
        }
        man_path = out / "manifest.json"
        man_path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    except OSError as exc:
        raise ConfigError(f"cannot write results to {out}: {exc}") from exc
    return csv_path, man_path


def timed_sweep(cfg: SweepConfig) -> tuple[list[SweepCell], float]:
    start = time.perf_counter()
    cells = run_sweep(cfg)
    return cells, time.perf_counter() - start
