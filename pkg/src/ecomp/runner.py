"""Monte-Carlo experiment runner and result emission.

Each scenario kind expands into a list of sweep points; every point is
evaluated independently (optionally in parallel, see ECOMP_WORKERS) with
seeds derived from (scenario seed, point, realization), so results are
deterministic regardless of worker count.  Channel draws are shared
across sweep points where the sweep only rescales energies, which keeps
the emitted curves comparable point to point.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import solve_comm_only, solve_energy_only, solve_no_coop
from .channel import (ScenarioGeometry, generate_rayleigh,
                      strongest_channel_association, variance_matrix, zf_gains)
from .energy import EnergyState
from .profiles import EnergyProfile, bs_budgets_at, load_profiles
from .scenario import Scenario, SchemeSpec
from .solver import solve_p1

RESULT_COLUMNS = ("sweep_key", "slot", "scheme", "beta", "mean_rate", "stderr", "n")

# Three-cell geometry: equilateral triangle of stations 1 km apart whose
# hexagonal cells tile the plane (apothem 500 m, circumradius 1000/sqrt(3)).
INTER_BS_DISTANCE = 1000.0
HEX_CIRCUMRADIUS = INTER_BS_DISTANCE / math.sqrt(3.0)
MIN_MT_DISTANCE = 10.0

_BS_POSITIONS_3 = np.array([
    [0.0, 0.0],
    [INTER_BS_DISTANCE, 0.0],
    [INTER_BS_DISTANCE / 2.0, INTER_BS_DISTANCE * math.sqrt(3.0) / 2.0],
])


@dataclass(frozen=True)
class ResultRow:
    sweep_key: str
    slot: int            # -1 when the scenario is not slot-indexed
    scheme: str
    beta: float
    mean_rate: float
    stderr: float
    n: int

    def as_tuple(self):
        return (self.sweep_key, self.slot, self.scheme, self.beta,
                self.mean_rate, self.stderr, self.n)


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # (row context, message)

    def __len__(self):
        return len(self.rows)


def _aggregate(samples) -> tuple[float, float, int]:
    arr = np.asarray(samples, dtype=float)
    n = arr.size
    if n == 0:
        return math.nan, math.nan, 0
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, stderr, n


def _scheme_beta(spec: SchemeSpec) -> float:
    return 0.0 if spec.beta is None else spec.beta


def _evaluate_instance(ch, variances, budgets, specs, weights):
    """Sum-rate of each scheme on one channel/energy draw.

    Returns (rates dict, errors dict) keyed by scheme label; a failing
    scheme is recorded and does not abort the other schemes.
    """
    es = EnergyState(re=budgets)
    rates, errors = {}, {}
    joint_gains = None
    association = None
    for spec in specs:
        try:
            if spec.variant in ("joint", "comm_only"):
                if joint_gains is None:
                    joint_gains = zf_gains(ch, weights)
                if spec.variant == "joint":
                    sol = solve_p1(joint_gains, es, spec.beta)
                else:
                    sol = solve_comm_only(joint_gains, es)
            else:
                if association is None:
                    association = strongest_channel_association(variances, ch.m_ant)
                if spec.variant == "energy_only":
                    sol = solve_energy_only(ch, association, es, spec.beta, weights)
                else:
                    sol = solve_no_coop(ch, association, es, weights)
            rates[spec.label()] = sol.objective
        except Exception as exc:  # recorded per-row, never fatal to the run
            errors[spec.label()] = f"{type(exc).__name__}: {exc}"
    return rates, errors


def _collect_rows(sweep_key, slot, specs, samples, errors, table_rows, table_errors):
    for spec in specs:
        label = spec.label()
        mean, stderr, n = _aggregate(samples[label])
        table_rows.append(ResultRow(sweep_key, slot, label, _scheme_beta(spec),
                                    mean, stderr, n))
        for msg in errors[label]:
            table_errors.append((f"{sweep_key}/{slot}/{label}", msg))


def _run_realizations(scenario, specs, instances):
    """Evaluate all schemes over an iterable of (ch, variances, budgets)."""
    samples = {spec.label(): [] for spec in specs}
    errors = {spec.label(): [] for spec in specs}
    weights = scenario.weight_vector
    for ch, variances, budgets in instances:
        rates, errs = _evaluate_instance(ch, variances, budgets, specs, weights)
        for label, rate in rates.items():
            samples[label].append(rate)
        for label, msg in errs.items():
            errors[label].append(msg)
    return samples, errors


# ---------------------------------------------------------------------------
# Sweep-point expansion per scenario kind


def _two_cell_variances(scenario, rng):
    if scenario.cross_gain == "random":
        cg = rng.uniform(0.0, 1.0, size=2)
    else:
        cg = np.array([scenario.cross_gain, scenario.cross_gain], dtype=float)
    k = scenario.n_mt
    var = np.ones((2, k))
    # terminal k belongs to cell k % 2; the other station is the cross link
    for kk in range(k):
        var[1 - kk % 2, kk] = cg[kk % 2]
    return var


def _point_two_cell_sweep(scenario, profile, pi):
    e1_grid = np.linspace(0.0, scenario.sum_energy, scenario.sweep_points)
    e1 = float(e1_grid[pi])
    specs = [SchemeSpec("joint", b) for b in scenario.betas]
    budgets = np.array([e1, scenario.sum_energy - e1])

    def instances():
        for r in range(scenario.n_realizations):
            rng = np.random.default_rng([scenario.seed, r])
            var = _two_cell_variances(scenario, rng)
            ch = generate_rayleigh(2, scenario.m_ant, scenario.n_mt, var, rng,
                                   noise_var=scenario.noise)
            yield ch, var, budgets

    samples, errors = _run_realizations(scenario, specs, instances())
    rows, errs = [], []
    _collect_rows(f"{e1:g}", -1, specs, samples, errors, rows, errs)
    return rows, errs


def _point_two_cell_random(scenario, profile, pi):
    e_db = scenario.energy_db[pi]
    e_sum = 10.0 ** (e_db / 10.0)
    specs = list(scenario.schemes)

    def instances():
        for r in range(scenario.n_realizations):
            rng = np.random.default_rng([scenario.seed, r])
            var = _two_cell_variances(scenario, rng)
            # same uniforms at every sweep point, scaled by the mean energy;
            # budget_skew < 1 tilts the harvest toward station 2 while
            # keeping the expected total at e_sum
            caps = np.array([scenario.budget_skew, 2.0 - scenario.budget_skew])
            budgets = rng.uniform(0.0, 1.0, size=2) * caps * e_sum
            ch = generate_rayleigh(2, scenario.m_ant, scenario.n_mt, var, rng,
                                   noise_var=scenario.noise)
            yield ch, var, budgets

    samples, errors = _run_realizations(scenario, specs, instances())
    rows, errs = [], []
    _collect_rows(f"{e_db:g}", -1, specs, samples, errors, rows, errs)
    return rows, errs


def _sample_hex_mts(rng, n_bs, per_cell):
    """Uniform terminal positions, ``per_cell`` in each hexagonal cell."""
    normals = np.array([[math.cos(a), math.sin(a)]
                        for a in (0.0, math.pi / 3.0, 2.0 * math.pi / 3.0)])
    apothem = INTER_BS_DISTANCE / 2.0
    points = []
    for i in range(n_bs):
        center = _BS_POSITIONS_3[i]
        got = 0
        while got < per_cell:
            cand = rng.uniform(-HEX_CIRCUMRADIUS, HEX_CIRCUMRADIUS, size=2)
            if np.max(np.abs(normals @ cand)) > apothem:
                continue
            if np.linalg.norm(cand) < MIN_MT_DISTANCE:
                continue
            points.append(center + cand)
            got += 1
    return np.array(points)


def _three_cell_instance(scenario, rng, budgets):
    per_cell = scenario.n_mt // scenario.n_bs
    mt_pos = _sample_hex_mts(rng, scenario.n_bs, per_cell)
    geo = ScenarioGeometry(bs_positions=_BS_POSITIONS_3, mt_positions=mt_pos)
    var = variance_matrix(geo)
    ch = generate_rayleigh(scenario.n_bs, scenario.m_ant, scenario.n_mt, var,
                           rng, noise_var=scenario.noise)
    return ch, var, budgets


def _profile_slots(scenario, profile):
    return list(range(0, len(profile), scenario.slot_stride))


def _point_three_cell_profile(scenario, profile, pi):
    slot = _profile_slots(scenario, profile)[pi]
    budgets = bs_budgets_at(profile, slot)
    specs = list(scenario.schemes)

    def instances():
        for r in range(scenario.n_realizations):
            rng = np.random.default_rng([scenario.seed, slot, r])
            yield _three_cell_instance(scenario, rng, budgets)

    samples, errors = _run_realizations(scenario, specs, instances())
    hours = (profile.timestamps[slot] - profile.timestamps[0]).total_seconds() / 3600.0
    rows, errs = [], []
    _collect_rows(f"{hours:g}", slot, specs, samples, errors, rows, errs)
    return rows, errs


def _point_three_cell_sweep(scenario, profile, pi):
    e_db = scenario.energy_db[pi]
    ebar = 10.0 ** (e_db / 10.0)
    scaled = profile.with_mix(profile.mixes, ebar)
    specs = list(scenario.schemes)

    def instances():
        for slot in _profile_slots(scenario, scaled):
            budgets = bs_budgets_at(scaled, slot)
            for r in range(scenario.n_realizations):
                rng = np.random.default_rng([scenario.seed, slot, r])
                yield _three_cell_instance(scenario, rng, budgets)

    samples, errors = _run_realizations(scenario, specs, instances())
    rows, errs = [], []
    _collect_rows(f"{e_db:g}", -1, specs, samples, errors, rows, errs)
    return rows, errs


_POINT_FUNCS = {
    "two_cell_sweep": _point_two_cell_sweep,
    "two_cell_random": _point_two_cell_random,
    "three_cell_profile": _point_three_cell_profile,
    "three_cell_sweep": _point_three_cell_sweep,
}


def _n_points(scenario, profile):
    if scenario.kind == "two_cell_sweep":
        return scenario.sweep_points
    if scenario.kind in ("two_cell_random", "three_cell_sweep"):
        return len(scenario.energy_db)
    return len(_profile_slots(scenario, profile))


def _resolve_profile(scenario, profile):
    if not scenario.kind.startswith("three_cell"):
        return None
    if profile is None:
        profile = load_profiles(scenario.profile)
    mixes = scenario.mixes or profile.mixes
    ebar = 10.0 ** (scenario.ebar_dbw / 10.0)
    return profile.with_mix(mixes, ebar)


def _eval_point(args):
    scenario, profile, pi = args
    return pi, _POINT_FUNCS[scenario.kind](scenario, profile, pi)


def run_scenario(scenario: Scenario, profile: EnergyProfile = None) -> ResultTable:
    """Run all sweep points and realizations of a scenario.

    Deterministic for a fixed scenario (seed included); per-realization
    solver failures are recorded in ``table.errors`` and excluded from
    the row aggregates rather than aborting the run.
    """
    profile = _resolve_profile(scenario, profile)
    points = [(scenario, profile, pi) for pi in range(_n_points(scenario, profile))]
    workers = int(os.environ.get("ECOMP_WORKERS", "1"))
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_point, points))
    else:
        results = [_eval_point(p) for p in points]
    results.sort(key=lambda item: item[0])
    table = ResultTable()
    for _, (rows, errs) in results:
        table.rows.extend(rows)
        table.errors.extend(errs)
    return table


# ---------------------------------------------------------------------------
# Emission


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def emit_results(table: ResultTable, path, fmt: str = "csv") -> None:
    """Write a result table as CSV or JSON lines with stable columns."""
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {fmt!r}")
    try:
        with open(path, "w") as fh:
            if fmt == "csv":
                fh.write(",".join(RESULT_COLUMNS) + "\n")
                for row in table.rows:
                    fh.write(",".join(_format_value(v) for v in row.as_tuple()) + "\n")
            else:
                for row in table.rows:
                    record = {col: (float(f"{val:.9g}") if isinstance(val, float) else val)
                              for col, val in zip(RESULT_COLUMNS, row.as_tuple())}
                    fh.write(json.dumps(record) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def parse_results(path) -> ResultTable:
    """Read back a CSV produced by emit_results (round-trip helper)."""
    table = ResultTable()
    with open(path, "r") as fh:
        header = fh.readline().strip().split(",")
        if header != list(RESULT_COLUMNS):
            raise ValueError(f"unexpected header {header}")
        for line in fh:
            parts = line.strip().split(",")
            table.rows.append(ResultRow(parts[0], int(parts[1]), parts[2],
                                        float(parts[3]), float(parts[4]),
                                        float(parts[5]), int(parts[6])))
    return table
