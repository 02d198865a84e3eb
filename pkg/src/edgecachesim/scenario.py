"""Scenario files, capacity sweeps and CSV/report output.

A scenario file is line-oriented ``key = value`` text with dotted section
keys. ``#`` starts a comment, lists are comma-separated, and mappings are
comma-separated ``key:value`` pairs. Share values may be written as
fractions (``1/3``).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .baselines import POLICY_NAMES
from .demand import (
    CONTENT_TYPES,
    InvalidInputError,
    Video,
    VideoCatalog,
    generate_catalog,
    generate_population,
)
from .placement import BRUTE_FORCE_MAX_K, brute_force_placement, solve_placement, value_table
from .simulator import ALL, DelayModel, SimulationConfig, build_periods, run_online, run_proposed, substream

log = logging.getLogger(__name__)

ALGORITHMS = ("PROPOSED",) + POLICY_NAMES
SCENARIO_DIR = Path(__file__).parent / "scenarios"
SEED_ENV = "EDGECACHESIM_SEED"

CSV_COLUMNS = (
    "scenario_id",
    "algorithm",
    "capacity",
    "day",
    "requests",
    "exact_hits",
    "transcode_hits",
    "misses",
    "empirical_hit_ratio",
    "predicted_hit_ratio",
    "backhaul_units",
    "mean_startup_delay_ms",
    "content_type",
)


class ScenarioError(Exception):
    exit_code = 1


class ScenarioFileError(ScenarioError):
    exit_code = 2


class ScenarioParseError(ScenarioError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ScenarioValidationError(ScenarioError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class SchemaError(ScenarioError):
    def __init__(self, column, message):
        super().__init__(f"column {column!r}: {message}")
        self.column = column


@dataclass(frozen=True)
class CatalogSpec:
    k: int = 21
    gamma: float = 0.6
    types: tuple = CONTENT_TYPES
    sd_size_range: tuple = (3, 32)
    hd_multiplier: float = 2.0
    size_bounds: tuple = (3, 65)
    videos: tuple = ()  # explicit (rank, type, size_hd, size_sd) rows; overrides generation


@dataclass(frozen=True)
class PopulationSpec:
    n: int = 900
    type_shares: tuple = (("sport", 0.4), ("news", 0.15), ("scene", 0.15), ("traffic", 0.15), ("person", 0.15))
    alpha_shares: tuple = ((0.2, 1 / 3), (0.5, 1 / 3), (0.8, 1 / 3))
    num_base_stations: int = 4


@dataclass(frozen=True)
class OracleSpec:
    instances: int = 1000
    max_k: int = BRUTE_FORCE_MAX_K
    max_capacity: int = 200
    size_range: tuple = (1, 65)


@dataclass(frozen=True)
class Scenario:
    id: str = "scenario"
    catalog: CatalogSpec = field(default_factory=CatalogSpec)
    population: PopulationSpec = field(default_factory=PopulationSpec)
    sim: SimulationConfig = field(default_factory=SimulationConfig)
    algorithms: tuple = ALGORITHMS
    capacities: tuple = (50, 150, 250, 350, 450, 500)
    output_dir: str = "results"
    oracle: OracleSpec = field(default_factory=OracleSpec)

    def build_catalog(self, seed=None) -> VideoCatalog:
        seed = self.sim.seed if seed is None else seed
        c = self.catalog
        if c.videos:
            videos = tuple(Video(i + 1, r, t, hd, sd) for i, (r, t, hd, sd) in enumerate(c.videos))
            return VideoCatalog(videos, c.gamma, c.types)
        return generate_catalog(
            c.k, substream(seed, "catalog"), c.gamma, c.types, c.sd_size_range, c.hd_multiplier, c.size_bounds
        )

    def build_population(self, seed=None):
        seed = self.sim.seed if seed is None else seed
        p = self.population
        return generate_population(
            p.n, substream(seed, "population"), dict(p.type_shares), dict(p.alpha_shares), p.num_base_stations
        )


# ---------------------------------------------------------------- parsing

def _number(text, key):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ScenarioValidationError(key, f"expected a number, got {text.strip()!r}") from None


def _integer(text, key):
    try:
        return int(text.strip())
    except ValueError:
        raise ScenarioValidationError(key, f"expected an integer, got {text.strip()!r}") from None


def _items(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _int_list(text, key):
    return tuple(_integer(t, key) for t in _items(text))


def _pair(text, key):
    vals = _int_list(text, key)
    if len(vals) != 2 or vals[0] > vals[1]:
        raise ScenarioValidationError(key, f"expected 'low, high' with low <= high, got {text.strip()!r}")
    return vals


def _mapping(text, key, key_type=str):
    out = []
    for item in _items(text):
        if ":" not in item:
            raise ScenarioValidationError(key, f"expected 'name:value' entries, got {item!r}")
        name, value = item.split(":", 1)
        name = _number(name, key) if key_type is float else name.strip()
        out.append((name, _number(value, key)))
    return tuple(out)


def _boolean(text, key):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ScenarioValidationError(key, f"expected true/false, got {text.strip()!r}")


def _videos(text, key):
    rows = []
    for item in _items(text):
        parts = item.split(":")
        if len(parts) != 4:
            raise ScenarioValidationError(key, f"expected 'rank:type:size_hd:size_sd', got {item!r}")
        rows.append((_integer(parts[0], key), parts[1].strip(), _integer(parts[2], key), _integer(parts[3], key)))
    return tuple(rows)


# key -> (section, field, parser)
_KEYS = {
    "scenario.id": ("root", "id", lambda t, k: t.strip()),
    "catalog.k": ("catalog", "k", _integer),
    "catalog.gamma": ("catalog", "gamma", _number),
    "catalog.types": ("catalog", "types", lambda t, k: tuple(_items(t))),
    "catalog.sd_size_range": ("catalog", "sd_size_range", _pair),
    "catalog.hd_multiplier": ("catalog", "hd_multiplier", _number),
    "catalog.size_bounds": ("catalog", "size_bounds", _pair),
    "catalog.videos": ("catalog", "videos", _videos),
    "population.n": ("population", "n", _integer),
    "population.type_shares": ("population", "type_shares", _mapping),
    "population.alpha_shares": ("population", "alpha_shares", lambda t, k: _mapping(t, k, float)),
    "population.num_base_stations": ("population", "num_base_stations", _integer),
    "sim.lambda": ("sim", "lam", _number),
    "sim.requests_per_day": ("sim", "requests_per_day", _integer),
    "sim.days": ("sim", "days", _integer),
    "sim.seed": ("sim", "seed", _integer),
    "sim.refresh_rho": ("sim", "refresh_rho", _number),
    "sim.transcode_serve": ("sim", "transcode_serve", _boolean),
    "sim.delay.hit_ms": ("delay", "hit_ms", _number),
    "sim.delay.transcode_ms": ("delay", "transcode_ms", _number),
    "sim.delay.miss_ms": ("delay", "miss_ms", _number),
    "wgdsf.half_life_days": ("sim", "wgdsf_half_life_days", _number),
    "wgdsf.type_weights": ("sim", "wgdsf_type_weights", _mapping),
    "wgdsf.cost": ("sim", "wgdsf_cost", lambda t, k: t.strip()),
    "run.algorithms": ("root", "algorithms", lambda t, k: tuple(_items(t))),
    "run.capacities": ("root", "capacities", _int_list),
    "run.output_dir": ("root", "output_dir", lambda t, k: t.strip()),
    "oracle.instances": ("oracle", "instances", _integer),
    "oracle.max_k": ("oracle", "max_k", _integer),
    "oracle.max_capacity": ("oracle", "max_capacity", _integer),
    "oracle.size_range": ("oracle", "size_range", _pair),
}


def parse_scenario(text: str) -> Scenario:
    sections = {s: {} for s in ("root", "catalog", "population", "sim", "delay", "oracle")}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ScenarioParseError(lineno, f"unknown key {key!r}")
        if key in seen:
            raise ScenarioParseError(lineno, f"duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        section, name, parser = _KEYS[key]
        sections[section][name] = parser(value, key)
    return _assemble(sections)


def _check_sim(sim: dict, delay: dict):
    checks = [
        ("sim.lambda", sim.get("lam", 1.0) > 0, "must be positive"),
        ("sim.requests_per_day", sim.get("requests_per_day", 1) >= 1, "must be at least 1"),
        ("sim.days", sim.get("days", 1) >= 1, "must be at least 1"),
        ("sim.refresh_rho", 0 <= sim.get("refresh_rho", 0.0) <= 1, "must lie in [0, 1]"),
    ]
    d = {**vars(DelayModel()), **delay}
    checks += [
        ("sim.delay.hit_ms", d["hit_ms"] >= 0, "must be non-negative"),
        ("sim.delay.transcode_ms", d["transcode_ms"] >= 0, "must be non-negative"),
        ("sim.delay.miss_ms", d["hit_ms"] + d["transcode_ms"] <= d["miss_ms"],
         "must be at least hit_ms + transcode_ms"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ScenarioValidationError(key, msg)


def _assemble(sections) -> Scenario:
    _check_sim(sections["sim"], sections["delay"])
    sim = SimulationConfig(**sections["sim"], delay=DelayModel(**sections["delay"]))
    catalog = sections["catalog"]
    if catalog.get("videos") and "k" not in catalog:
        catalog["k"] = len(catalog["videos"])
    scenario = Scenario(
        catalog=CatalogSpec(**catalog),
        population=PopulationSpec(**sections["population"]),
        sim=sim,
        oracle=OracleSpec(**sections["oracle"]),
        **sections["root"],
    )
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario) -> Scenario:
    c, p = s.catalog, s.population

    def fail(key, msg):
        raise ScenarioValidationError(key, msg)

    if not c.types or len(set(c.types)) != len(c.types):
        fail("catalog.types", "type list must be non-empty with distinct names")
    if c.videos:
        if c.k != len(c.videos):
            fail("catalog.k", f"k={c.k} disagrees with {len(c.videos)} explicit videos")
        for rank, t, hd, sd in c.videos:
            if t not in c.types:
                fail("catalog.videos", f"type {t!r} is not in catalog.types")
        try:
            s.build_catalog()
        except InvalidInputError as exc:
            fail("catalog.videos", str(exc))
    elif c.k < 1:
        fail("catalog.k", "must be at least 1")
    if c.gamma < 0:
        fail("catalog.gamma", "must be non-negative")
    if c.size_bounds[0] < 1:
        fail("catalog.size_bounds", "sizes must be at least 1")
    if c.sd_size_range[0] < 1:
        fail("catalog.sd_size_range", "sizes must be at least 1")
    if c.hd_multiplier < 1:
        fail("catalog.hd_multiplier", "must be at least 1 so HD is never smaller than SD")
    if p.n < 1:
        fail("population.n", "must be at least 1")
    if not p.type_shares:
        fail("population.type_shares", "must name at least one type")
    for t, share in p.type_shares:
        if t not in c.types:
            fail("population.type_shares", f"type {t!r} is not in catalog.types")
        if share < 0:
            fail("population.type_shares", f"share for {t!r} is negative")
    if sum(v for _, v in p.type_shares) <= 0:
        fail("population.type_shares", "shares must have a positive sum")
    if not p.alpha_shares:
        fail("population.alpha_shares", "must name at least one alpha")
    for alpha, share in p.alpha_shares:
        if not 0 <= alpha < 1:
            fail("population.alpha_shares", f"alpha {alpha} must lie in [0, 1)")
        if share < 0:
            fail("population.alpha_shares", f"share for alpha {alpha} is negative")
    if sum(v for _, v in p.alpha_shares) <= 0:
        fail("population.alpha_shares", "shares must have a positive sum")
    if p.num_base_stations < 1:
        fail("population.num_base_stations", "must be at least 1")
    if not s.algorithms:
        fail("run.algorithms", "must not be empty")
    for a in s.algorithms:
        if a not in ALGORITHMS:
            fail("run.algorithms", f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
    if len(set(s.algorithms)) != len(s.algorithms):
        fail("run.algorithms", "duplicate algorithm")
    if not s.capacities:
        fail("run.capacities", "must not be empty")
    if any(S < 0 for S in s.capacities):
        fail("run.capacities", "capacities must be non-negative")
    if s.sim.wgdsf_cost not in ("byte", "unit"):
        fail("wgdsf.cost", "must be 'byte' or 'unit'")
    if s.sim.wgdsf_half_life_days <= 0:
        fail("wgdsf.half_life_days", "must be positive")
    for t, w in s.sim.wgdsf_type_weights:
        if t not in c.types:
            fail("wgdsf.type_weights", f"type {t!r} is not in catalog.types")
        if w <= 0:
            fail("wgdsf.type_weights", f"weight for {t!r} must be positive")
    if s.sim.seed < 0 or s.sim.seed >= 2**64:
        fail("sim.seed", "must be an unsigned 64-bit integer")
    o = s.oracle
    if o.instances < 0:
        fail("oracle.instances", "must be non-negative")
    if not 1 <= o.max_k <= BRUTE_FORCE_MAX_K:
        fail("oracle.max_k", f"must lie in 1..{BRUTE_FORCE_MAX_K}")
    if o.max_capacity < 0:
        fail("oracle.max_capacity", "must be non-negative")
    if o.size_range[0] < 1:
        fail("oracle.size_range", "sizes must be at least 1")
    return s


def resolve_scenario_path(path) -> Path:
    """Path as given, else a shipped scenario of that name."""
    p = Path(path)
    if p.exists():
        return p
    for candidate in (SCENARIO_DIR / p.name, SCENARIO_DIR / f"{p.name}.scenario"):
        if candidate.exists():
            return candidate
    raise ScenarioFileError(f"scenario file not found: {path}")


def load_scenario(path) -> Scenario:
    p = resolve_scenario_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioFileError(f"cannot read {p}: {exc}") from None
    return parse_scenario(text)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_scenario(s: Scenario) -> str:
    """Serialize every key; ``parse_scenario`` of the result equals ``s``."""
    values = {
        "root": {"id": s.id, "algorithms": s.algorithms, "capacities": s.capacities, "output_dir": s.output_dir},
        "catalog": vars(s.catalog),
        "population": vars(s.population),
        "sim": {k: v for k, v in vars(s.sim).items() if k != "delay"},
        "delay": vars(s.sim.delay),
        "oracle": vars(s.oracle),
    }
    lines = []
    for key, (section, name, _) in _KEYS.items():
        value = values[section].get(name)
        if value is None or value == ():
            continue
        if key == "catalog.videos":
            text = ", ".join(":".join(map(str, row)) for row in value)
        elif isinstance(value, tuple) and value and isinstance(value[0], tuple):
            text = ", ".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in value)
        elif isinstance(value, tuple):
            text = ", ".join(_fmt(v) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = _fmt(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def resolve_seed(scenario: Scenario, cli_seed=None, environ=None) -> int:
    """CLI flag, then ``EDGECACHESIM_SEED``, then the scenario file."""
    environ = os.environ if environ is None else environ
    if cli_seed is not None:
        return int(cli_seed)
    if environ.get(SEED_ENV):
        try:
            return int(environ[SEED_ENV])
        except ValueError:
            raise ScenarioValidationError(SEED_ENV, f"expected an integer, got {environ[SEED_ENV]!r}") from None
    return scenario.sim.seed


# ---------------------------------------------------------------- running

@dataclass(frozen=True)
class ResultRow:
    scenario_id: str
    algorithm: str
    capacity: int
    day: int
    requests: int
    exact_hits: int
    transcode_hits: int
    misses: int
    empirical_hit_ratio: float
    predicted_hit_ratio: float | None
    backhaul_units: int
    mean_startup_delay_ms: float
    content_type: str

    def csv_fields(self) -> list[str]:
        return [
            self.scenario_id,
            self.algorithm,
            str(self.capacity),
            str(self.day),
            str(self.requests),
            str(self.exact_hits),
            str(self.transcode_hits),
            str(self.misses),
            f"{self.empirical_hit_ratio:.6f}",
            "" if self.predicted_hit_ratio is None else f"{self.predicted_hit_ratio:.6f}",
            str(self.backhaul_units),
            f"{self.mean_startup_delay_ms:.3f}",
            self.content_type,
        ]


@dataclass
class RunResult:
    rows: list
    placements: list  # dicts for placement.jsonl
    metrics: dict  # (algorithm, capacity) -> SimMetrics


def _run_cell(args):
    algorithm, capacity, periods, config = args
    if algorithm == "PROPOSED":
        return run_proposed(periods, capacity, config)
    return run_online(algorithm, capacity, periods, config)


def run_cells(scenario: Scenario, seed=None, jobs: int = 1):
    """Simulate every (algorithm, capacity) cell on shared per-day traces."""
    seed = scenario.sim.seed if seed is None else int(seed)
    config = replace(scenario.sim, seed=seed)
    catalog = scenario.build_catalog(seed)
    users = scenario.build_population(seed)
    periods = build_periods(catalog, users, config)
    cells = [(a, S) for a in scenario.algorithms for S in sorted(set(scenario.capacities))]
    tasks = [(a, S, periods, config) for a, S in cells]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    return periods, dict(zip(cells, results))


def run_scenario(scenario: Scenario, out_dir=None, seed=None, jobs: int = 1) -> RunResult:
    """Run the sweep; with ``out_dir`` also write results.csv and placement.jsonl."""
    periods, metrics = run_cells(scenario, seed, jobs)
    types = periods[0].catalog.types
    rows, placements = [], []
    for (algorithm, S), m in metrics.items():
        for i, day in enumerate(m.days):
            for ctype in (ALL,) + tuple(types):
                c = day.counts[ctype]
                rows.append(ResultRow(
                    scenario.id, algorithm, S, day.day, c.requests, c.exact_hits, c.transcode_hits,
                    c.misses, c.hit_ratio,
                    day.predicted_hit_ratio if ctype == ALL else None,
                    c.backhaul_units, c.mean_delay_ms, ctype,
                ))
            if m.placements:
                placements.append({"scenario_id": scenario.id, "day": day.day, **m.placements[i].to_dict()})
    result = RunResult(rows, placements, metrics)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_fields())
    return buf.getvalue()


def write_outputs(result: RunResult, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "results.csv"
        csv_path.write_text(rows_to_csv(result.rows))
        jsonl_path = out / "placement.jsonl"
        jsonl_path.write_text("".join(json.dumps(p) + "\n" for p in result.placements))
    except OSError as exc:
        raise ScenarioFileError(f"cannot write results to {out}: {exc}") from None
    return csv_path, jsonl_path


# ---------------------------------------------------------------- summaries

_INT_COLS = ("capacity", "day", "requests", "exact_hits", "transcode_hits", "misses", "backhaul_units")
_FLOAT_COLS = ("empirical_hit_ratio", "mean_startup_delay_ms")
FIGURES = ("fig2a", "fig2b", "fig3", "fig4", "fig5")


def read_results(path) -> list[dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioFileError(f"cannot read {path}: {exc}") from None
    if not text.strip():
        return []
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or ())]
    if missing:
        raise SchemaError(missing[0], "missing from header")
    records = []
    for lineno, rec in enumerate(reader, 2):
        for col in _INT_COLS:
            try:
                rec[col] = int(rec[col])
            except (TypeError, ValueError):
                raise SchemaError(col, f"line {lineno}: expected an integer, got {rec[col]!r}") from None
        for col in _FLOAT_COLS:
            try:
                rec[col] = float(rec[col])
            except (TypeError, ValueError):
                raise SchemaError(col, f"line {lineno}: expected a number, got {rec[col]!r}") from None
        records.append(rec)
    return records


@dataclass
class Table:
    title: str
    header: list
    rows: list

    def render(self) -> str:
        lines = [f"# {self.title}", ",".join(self.header)]
        for row in self.rows:
            lines.append(",".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in row))
        return "\n".join(lines)


def _aggregate(records, **match):
    """Sum counts over days for records matching every given column value."""
    agg = {"requests": 0, "hits": 0, "backhaul_units": 0, "delay": 0.0, "days": set()}
    for r in records:
        if all(r[k] == v for k, v in match.items()):
            agg["requests"] += r["requests"]
            agg["hits"] += r["exact_hits"] + r["transcode_hits"]
            agg["backhaul_units"] += r["backhaul_units"]
            agg["delay"] += r["mean_startup_delay_ms"] * r["requests"]
            agg["days"].add(r["day"])
    return agg


def _ratio(agg):
    return agg["hits"] / agg["requests"] if agg["requests"] else 0.0


def summarize(path, fixed_capacity: int = 350, sport_type: str = "sport") -> dict:
    """Plot-ready tables keyed by figure name; ratios pool all days."""
    records = read_results(path)
    if not records:
        log.warning("%s holds no result rows; summary tables are empty", path)
        return {name: Table(name, [], []) for name in FIGURES}
    algorithms = list(dict.fromkeys(r["algorithm"] for r in records))
    capacities = sorted({r["capacity"] for r in records})
    types = list(dict.fromkeys(r["content_type"] for r in records if r["content_type"] != ALL))
    S_fixed = fixed_capacity if fixed_capacity in capacities else capacities[-1]

    tables = {}
    tables["fig2a"] = Table(
        f"hit ratio by algorithm at S={S_fixed}",
        ["algorithm", "hit_ratio"],
        [[a, _ratio(_aggregate(records, algorithm=a, capacity=S_fixed, content_type=ALL))] for a in algorithms],
    )
    tables["fig2b"] = Table(
        "hit ratio vs capacity",
        ["capacity"] + algorithms,
        [[S] + [_ratio(_aggregate(records, algorithm=a, capacity=S, content_type=ALL)) for a in algorithms]
         for S in capacities],
    )
    tables["fig3"] = Table(
        "PROPOSED hit ratio per content type vs capacity",
        ["capacity"] + types,
        [[S] + [_ratio(_aggregate(records, algorithm="PROPOSED", capacity=S, content_type=t)) for t in types]
         for S in capacities] if "PROPOSED" in algorithms else [],
    )
    tables["fig4"] = Table(
        f"{sport_type} hit ratio vs capacity",
        ["capacity"] + algorithms,
        [[S] + [_ratio(_aggregate(records, algorithm=a, capacity=S, content_type=sport_type)) for a in algorithms]
         for S in capacities] if sport_type in types else [],
    )
    fig5_rows = []
    for a in algorithms:
        for S in capacities:
            agg = _aggregate(records, algorithm=a, capacity=S, content_type=ALL)
            n_days = max(len(agg["days"]), 1)
            delay = agg["delay"] / agg["requests"] if agg["requests"] else 0.0
            fig5_rows.append([a, S, agg["backhaul_units"] / n_days, delay])
    tables["fig5"] = Table(
        "backhaul load and startup delay vs capacity",
        ["algorithm", "capacity", "backhaul_units_per_day", "mean_startup_delay_ms"],
        fig5_rows,
    )
    return tables


# ---------------------------------------------------------------- oracle

def random_instance(rng: np.random.Generator, spec: OracleSpec, n_reps: int = 2):
    K = int(rng.integers(1, spec.max_k, endpoint=True))
    req = rng.random((K, n_reps))
    req /= req.sum()
    sizes = rng.integers(spec.size_range[0], spec.size_range[1], size=(K, n_reps), endpoint=True)
    S = int(rng.integers(0, spec.max_capacity, endpoint=True))
    return req, sizes, S


def oracle_check(scenario: Scenario, seed=None) -> dict:
    """Compare the DP against exhaustive search on random small instances."""
    seed = scenario.sim.seed if seed is None else int(seed)
    rng = substream(seed, "oracle")
    mismatches = []
    for i in range(scenario.oracle.instances):
        req, sizes, S = random_instance(rng, scenario.oracle)
        values = value_table(req)
        dp = solve_placement(values, sizes, S)
        bf = brute_force_placement(values, sizes, S)
        if dp.predicted_hit_ratio != bf.predicted_hit_ratio or dp.capacity_used > S:
            mismatches.append({
                "instance": i,
                "K": len(req),
                "S": S,
                "dp": dp.predicted_hit_ratio,
                "brute_force": bf.predicted_hit_ratio,
            })
    return {"instances": scenario.oracle.instances, "mismatches": mismatches}
