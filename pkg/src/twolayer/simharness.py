"""Monte Carlo drivers for the multicast-unicast (MU) and broadcast-unicast (BU) studies.

Every realization draws its randomness from a ``SeedSequence`` keyed on
``(seed, study, K, realization)``, so results do not depend on the order or
the number of worker processes.  Realizations whose solver fails are
excluded from the means and counted in a ``failures`` column.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .allocator import BuConstraint, bu_allocate, broadcast_only, optimize_mu0
from .baselines import OmSplit, cell_edge_throughput, equal_power, om_allocate, unicast_only
from .channel_model import (DEFAULT_FADING_DRAWS, CellScenario, NoiseField, OfdmLayout,
                            attach_fading, bu_scenario, calibrate_coverage, coverage_snr_db,
                            effective_noise, fading_realization, mu_scenario, sample_cell,
                            shadowing_db, snr_db_at, snr_for_rayleigh_capacity, static_realization,
                            uniform_disc_distances)
from .config import as_bool, as_float_list, as_int_list, load_kv
from .errors import InfeasibleRateError, ScenarioError, TwoLayerError
from .utility import LN2, RateWeights

log = logging.getLogger(__name__)

MU_SCHEMES = ("two-layer-opt", "two-layer-equal", "om:0.1", "om:0.5", "om:0.9",
              "om-equal:0.1", "om-equal:0.5", "om-equal:0.9", "unicast-only")
BU_SCHEMES = ("two-layer-opt", "om:0.1", "om:0.5", "om:0.9")
TRADEOFF_SCHEMES = ("two-layer-opt", "om:0.1", "om:0.3", "om:0.5", "om:0.7", "om:0.9")
# tiny common reward: the constraint alone sets the common rate on the tradeoff curve
TRADEOFF_MU0 = 1e-6
STUDY_TAGS = {"mu": 1, "bu": 2, "tradeoff": 3, "oracle": 4}


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one simulation run (see ``from_kv`` for the file keys)."""

    use_case: str = "mu"
    k_values: tuple[int, ...] = (2, 5, 10)
    realizations: int = 5000
    seed: int = 1
    scenario_path: str | None = None
    schemes: tuple[str, ...] = ()
    bu_fractions: tuple[float, ...] = (0.9, 0.7, 0.5, 1.0)
    out: str | None = None
    M: int = 10
    power: float = 1.0
    fading_draws: int = DEFAULT_FADING_DRAWS
    cb_target: float = 2.0
    coverage: float = 0.997
    tradeoff_points: int = 21
    unicast_snr_db: float | None = None
    oracle_M: int = 2
    oracle_K: int = 2
    oracle_grid: int = 41
    oracle_snr_db: tuple[float, float] = (0.0, 20.0)
    oracle_tolerance: float = 0.01
    jobs: int = 1

    def __post_init__(self):
        if self.use_case not in STUDY_TAGS:
            raise ScenarioError(f"use_case must be one of {sorted(STUDY_TAGS)}")
        if self.realizations < 1:
            raise ScenarioError("realization count must be >= 1")
        if any(not 0.0 <= f <= 1.0 for f in self.bu_fractions):
            raise ScenarioError("BU fractions must lie in [0, 1]")
        if any(k < 1 for k in self.k_values):
            raise ScenarioError("user counts must be >= 1")
        for s in self.scheme_list:
            parse_scheme(s)

    @property
    def scheme_list(self) -> tuple[str, ...]:
        if self.schemes:
            return self.schemes
        return {"mu": MU_SCHEMES, "bu": BU_SCHEMES, "tradeoff": TRADEOFF_SCHEMES}.get(
            self.use_case, ())

    @property
    def layout(self) -> OfdmLayout:
        return OfdmLayout.equal(self.M)

    def scenario(self) -> CellScenario:
        if self.scenario_path:
            return CellScenario.from_file(self.scenario_path)
        return mu_scenario() if self.use_case in ("mu", "oracle") else bu_scenario()

    @classmethod
    def from_kv(cls, values: dict[str, str], **overrides) -> "ExperimentConfig":
        kw: dict = {}
        conv = {
            "use_case": str, "realizations": int, "seed": int, "scenario": str, "out": str,
            "M": int, "power": float, "fading_draws": int, "cb_target": float,
            "coverage": float, "tradeoff_points": int, "unicast_snr_db": float,
            "oracle_M": int, "oracle_K": int, "oracle_grid": int, "oracle_tolerance": float,
            "jobs": int,
        }
        for key, raw in values.items():
            if key in ("K", "k_values", "K_u"):
                kw["k_values"] = tuple(as_int_list(raw))
            elif key == "schemes":
                kw["schemes"] = tuple(s for s in raw.replace(",", " ").split())
            elif key == "bu_fractions":
                kw["bu_fractions"] = tuple(as_float_list(raw))
            elif key == "oracle_snr_db":
                lo, hi = as_float_list(raw)
                kw["oracle_snr_db"] = (lo, hi)
            elif key in conv:
                name = "scenario_path" if key == "scenario" else key
                kw[name] = conv[key](raw)
            elif key == "verbose":
                as_bool(raw)
            else:
                raise ScenarioError(f"unknown config key {key!r}")
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        return cls.from_kv(load_kv(path), **overrides)


def parse_scheme(name: str) -> tuple[str, float | None]:
    """Split ``"om:0.5"`` into ``("om", 0.5)``; plain names map to ``(name, None)``."""
    if name in ("two-layer-opt", "two-layer-equal", "unicast-only"):
        return name, None
    kind, sep, frac = name.partition(":")
    if sep and kind in ("om", "om-equal", "om-static"):
        try:
            value = float(frac)
        except ValueError as exc:
            raise ScenarioError(f"bad multicast fraction in scheme {name!r}") from exc
        if not 0.0 <= value <= 1.0:
            raise ScenarioError(f"multicast fraction out of range in scheme {name!r}")
        return kind, value
    raise ScenarioError(f"unknown scheme {name!r}")


def realization_seed(seed: int, study: str, K: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, STUDY_TAGS[study], K, r])


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    v = values[np.isfinite(values)]
    if v.size == 0:
        return math.nan, math.nan
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def _fmt(x: float) -> str:
    return repr(float(x))


def _map(func, tasks, jobs: int):
    """Order-preserving map, optionally over worker threads."""
    if jobs <= 1:
        return [func(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


# -- multicast-unicast ---------------------------------------------------------

def mu_instance(cfg: ExperimentConfig, scenario: CellScenario, K: int, r: int) -> NoiseField:
    """Static noise field of realization ``r``: a cell drop plus Rayleigh block gains."""
    cell_seed, gain_seed = realization_seed(cfg.seed, "mu", K, r).spawn(2)
    snr = sample_cell(scenario, K, cell_seed)
    return effective_noise(cfg.layout, static_realization(snr, cfg.layout, gain_seed))


def mu_scheme_report(scheme: str, P: float, noise: NoiseField, w: RateWeights):
    """Allocation and rate report of one MU scheme."""
    kind, frac = parse_scheme(scheme)
    if kind == "two-layer-opt":
        _, alloc, rep = optimize_mu0(P, noise, w)
    elif kind == "two-layer-equal":
        alloc, rep = equal_power(P, noise, w)
    elif kind == "unicast-only":
        alloc, rep = unicast_only(P, noise, w)
    else:
        policy = "static" if kind == "om-static" else "dynamic"
        power = "equal" if kind == "om-equal" else "optimal"
        alloc, rep = om_allocate(P, noise, OmSplit(frac, policy), w, power=power)
    return alloc, rep


def _mu_task(args):
    cfg, scenario, K, r = args
    noise = mu_instance(cfg, scenario, K, r)
    w = RateWeights.uniform(K, float(K), 1.0)
    out = {}
    try:
        for scheme in cfg.scheme_list:
            alloc, rep = mu_scheme_report(scheme, cfg.power, noise, w)
            alloc.check(noise, two_layer=scheme == "two-layer-opt")
            if "not-converged" in rep.flags:
                raise TwoLayerError(f"{scheme}: split search did not converge")
            out[scheme] = (rep.weighted_sum, cell_edge_throughput(rep, noise), rep.sum_rate)
    except (TwoLayerError, AssertionError) as exc:
        log.warning("MU realization K=%d r=%d failed: %s", K, r, exc)
        return None
    return out


MU_METRICS = ("weighted_sum", "cell_edge", "sum_rate")


@dataclass
class MuResult:
    """Per-realization MU metrics: ``values[K][scheme]`` has shape ``(n, 3)``."""

    k_values: tuple[int, ...]
    schemes: tuple[str, ...]
    values: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def metric(self, K: int, scheme: str, name: str) -> np.ndarray:
        return self.values[K][scheme][:, MU_METRICS.index(name)]

    def rows(self) -> list[list]:
        rows = []
        for K in self.k_values:
            for scheme in self.schemes:
                for name in MU_METRICS:
                    mean, se = _mean_stderr(self.metric(K, scheme, name))
                    rows.append([K, scheme, name, _fmt(mean), _fmt(se), self.failures[K]])
        return rows

    def to_csv(self) -> str:
        return _csv(["K", "scheme", "metric", "mean", "stderr", "failures"], self.rows())


def simulate_mu(cfg: ExperimentConfig) -> MuResult:
    scenario = cfg.scenario()
    schemes = cfg.scheme_list
    res = MuResult(tuple(cfg.k_values), tuple(schemes))
    for K in cfg.k_values:
        tasks = [(cfg, scenario, K, r) for r in range(cfg.realizations)]
        outs = _map(_mu_task, tasks, cfg.jobs)
        arr = {s: np.full((cfg.realizations, len(MU_METRICS)), np.nan) for s in schemes}
        for r, out in enumerate(outs):
            if out is not None:
                for s in schemes:
                    arr[s][r] = out[s]
        res.values[K] = arr
        res.failures[K] = sum(o is None for o in outs)
    return res


def run_mu(cfg: ExperimentConfig) -> str:
    """Mean and standard error of every MU metric; CSV text."""
    return simulate_mu(cfg).to_csv()


# -- broadcast-unicast ---------------------------------------------------------

@dataclass(frozen=True)
class BuSetup:
    """Calibrated cell and the receive-only edge user's average SNR."""

    scenario: CellScenario
    edge_snr: float

    @classmethod
    def build(cls, cfg: ExperimentConfig) -> "BuSetup":
        edge = snr_for_rayleigh_capacity(cfg.cb_target)
        scenario = calibrate_coverage(cfg.scenario(), cfg.coverage, 10 * math.log10(edge))
        return cls(scenario, edge)


def covered_users(scenario: CellScenario, K: int, min_snr: float, seed) -> np.ndarray:
    """``K`` average SNRs of users dropped in the cell, redrawing any below ``min_snr``."""
    rng = np.random.default_rng(seed)
    out = np.empty(0)
    for _ in range(1000):
        d = uniform_disc_distances(scenario, K, rng)
        snr = 10.0 ** (snr_db_at(scenario, d, shadowing_db(scenario, K, rng)) / 10.0)
        out = np.concatenate([out, snr[snr >= min_snr]])
        if out.size >= K:
            return out[:K]
    raise ScenarioError("coverage too low to drop users above the edge SNR")


def bu_instance(cfg: ExperimentConfig, setup: BuSetup, K_u: int, r: int, study: str = "bu",
                unicast_snr=None) -> NoiseField:
    """Fading noise field: the edge user (index 0) followed by ``K_u`` unicast users."""
    cell_seed, fading_seed = realization_seed(cfg.seed, study, K_u, r).spawn(2)
    if unicast_snr is None:
        unicast_snr = covered_users(setup.scenario, K_u, setup.edge_snr, cell_seed)
    snr = np.concatenate([[setup.edge_snr], np.asarray(unicast_snr, dtype=float)])
    noise = effective_noise(cfg.layout, fading_realization(snr, cfg.layout))
    return attach_fading(noise, fading_seed, cfg.fading_draws)


def _om_modes(scheme: str, noise: NoiseField):
    kind, frac = parse_scheme(scheme)
    if kind == "two-layer-opt":
        return None
    if kind in ("om", "om-static"):
        return OmSplit(frac, "static" if kind == "om-static" else "dynamic").modes(noise)
    raise ScenarioError(f"scheme {scheme!r} is not available with a rate constraint")


def _bu_task(args):
    cfg, setup, K_u, r = args
    noise = bu_instance(cfg, setup, K_u, r)
    w = RateWeights.uniform(noise.K, 1.0, 1.0)
    out = {}
    try:
        reference = broadcast_only(cfg.power, noise, w)
        cb = reference[2].r0
        for scheme in cfg.scheme_list:
            modes = _om_modes(scheme, noise)
            bc = reference
            if modes is not None:
                try:
                    bc = broadcast_only(cfg.power, noise, w, modes=modes)
                except InfeasibleRateError:
                    bc = None
            for frac in cfg.bu_fractions:
                r0_min = min(frac * cb, cb)
                if bc is None or r0_min > bc[2].r0 * (1 + 1e-9):
                    out[(frac, scheme)] = "infeasible"
                    continue
                alloc, rep, _ = bu_allocate(cfg.power, noise, BuConstraint(r0_min, cb), w,
                                            modes=modes, broadcast=bc if r0_min > 0 else None)
                alloc.check(noise, two_layer=modes is None)
                if rep.r0 < r0_min * (1 - 1e-9):
                    raise TwoLayerError(f"{scheme}: R0={rep.r0!r} below the floor {r0_min!r}")
                if "not-converged" in rep.flags:
                    raise TwoLayerError(f"{scheme}: split search did not converge")
                out[(frac, scheme)] = (rep.r0, float(rep.rk.sum()), rep.sum_rate, r0_min)
    except (TwoLayerError, AssertionError) as exc:
        log.warning("BU realization K_u=%d r=%d failed: %s", K_u, r, exc)
        return None
    return out


BU_METRICS = ("r0", "unicast_sum", "sum_rate")


@dataclass
class BuResult:
    """Per-realization BU metrics: ``values[K_u][(fraction, scheme)]`` is ``(n, 4)``.

    The last column is the demanded common rate; ``infeasible`` counts
    realizations where the scheme cannot reach it.
    """

    k_values: tuple[int, ...]
    fractions: tuple[float, ...]
    schemes: tuple[str, ...]
    values: dict = field(default_factory=dict)
    infeasible: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def metric(self, K_u: int, frac: float, scheme: str, name: str) -> np.ndarray:
        cols = BU_METRICS + ("r0_min",)
        return self.values[K_u][(frac, scheme)][:, cols.index(name)]

    def rows(self) -> list[list]:
        rows = []
        for K_u in self.k_values:
            for frac in self.fractions:
                for scheme in self.schemes:
                    for name in BU_METRICS:
                        mean, se = _mean_stderr(self.metric(K_u, frac, scheme, name))
                        rows.append([K_u, _fmt(frac), scheme, name, _fmt(mean), _fmt(se),
                                     self.failures[K_u], self.infeasible[K_u][(frac, scheme)]])
        return rows

    def to_csv(self) -> str:
        return _csv(["K_u", "fraction", "scheme", "metric", "mean", "stderr", "failures",
                     "infeasible"], self.rows())


def simulate_bu(cfg: ExperimentConfig) -> BuResult:
    setup = BuSetup.build(cfg)
    schemes = cfg.scheme_list
    res = BuResult(tuple(cfg.k_values), tuple(cfg.bu_fractions), tuple(schemes))
    keys = [(f, s) for f in cfg.bu_fractions for s in schemes]
    for K_u in cfg.k_values:
        tasks = [(cfg, setup, K_u, r) for r in range(cfg.realizations)]
        outs = _map(_bu_task, tasks, cfg.jobs)
        arr = {k: np.full((cfg.realizations, 4), np.nan) for k in keys}
        infeasible = {k: 0 for k in keys}
        for r, out in enumerate(outs):
            if out is None:
                continue
            for k in keys:
                if out[k] == "infeasible":
                    infeasible[k] += 1
                else:
                    arr[k][r] = out[k]
        res.values[K_u] = arr
        res.infeasible[K_u] = infeasible
        res.failures[K_u] = sum(o is None for o in outs)
    return res


def run_bu(cfg: ExperimentConfig) -> str:
    """Mean common, unicast and sum rates under each common-rate floor; CSV text."""
    return simulate_bu(cfg).to_csv()


# -- broadcast/unicast tradeoff ----------------------------------------------------

def tradeoff_curve(cfg: ExperimentConfig) -> list[tuple[str, float, float]]:
    """``(scheme, r0, unicast_rate)`` points for one unicast user and the edge user.

    The unicast user's average SNR is ``cfg.unicast_snr_db`` or, by
    default, the median SNR of the calibrated cell.
    """
    setup = BuSetup.build(cfg)
    if cfg.unicast_snr_db is None:
        snr_db = coverage_snr_db(setup.scenario, 0.5)
    else:
        snr_db = cfg.unicast_snr_db
    noise = bu_instance(cfg, setup, 1, 0, study="tradeoff", unicast_snr=[10 ** (snr_db / 10)])
    w = RateWeights.uniform(noise.K, TRADEOFF_MU0, 1.0)
    reference = broadcast_only(cfg.power, noise, w)
    cb = reference[2].r0
    grid = cb * np.linspace(0.0, 1.0, cfg.tradeoff_points)
    points = []
    for scheme in cfg.scheme_list:
        modes = _om_modes(scheme, noise)
        bc = reference if modes is None else broadcast_only(cfg.power, noise, w, modes=modes)
        for r0 in grid:
            if r0 > bc[2].r0 * (1 + 1e-9):
                break
            _, rep, _ = bu_allocate(cfg.power, noise, BuConstraint(float(r0), cb), w,
                                    modes=modes, broadcast=bc if r0 > 0 else None)
            points.append((scheme, float(r0), float(rep.rk.sum())))
    return points


def run_tradeoff(cfg: ExperimentConfig) -> str:
    return _csv(["scheme", "r0", "unicast_rate"],
                [[s, _fmt(r0), _fmt(u)] for s, r0, u in tradeoff_curve(cfg)])


# -- exhaustive grid oracle --------------------------------------------------------

def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    rows = []
    for bars in combinations_with_replacement(range(total + 1), parts - 1):
        edges = (0,) + bars + (total,)
        rows.append([edges[j + 1] - edges[j] for j in range(parts)])
    return np.asarray(rows, dtype=float).reshape(-1, parts)


def pareto_front(points: np.ndarray) -> np.ndarray:
    """Rows not weakly dominated by an earlier-kept row (all coordinates larger is better)."""
    if len(points) == 0:
        return points
    order = np.lexsort(points.T[::-1])[::-1]
    kept: list[np.ndarray] = []
    front = np.empty((0, points.shape[1]))
    for p in points[order]:
        if front.shape[0] and np.any(np.all(front >= p, axis=1)):
            continue
        kept.append(p)
        front = np.asarray(kept)
    return front


def _channel_points(z: np.ndarray, frac: float, powers: np.ndarray) -> np.ndarray:
    """Per-user common rates and the unicast rate sum for layer powers ``(P0, P_1..P_K)``.

    Written directly from the rate definitions: the common layer sees all
    unicast power as interference, user ``k``'s unicast layer sees the
    layers of users with strictly lower noise (lower index on ties).
    """
    K = z.size
    p0, pu = powers[:, 0], powers[:, 1:]
    total_u = pu.sum(1)
    out = np.empty((powers.shape[0], K + 1))
    unicast = np.zeros(powers.shape[0])
    for k in range(K):
        out[:, k] = frac * np.log1p(p0 / (z[k] + total_u)) / LN2
        better = [j for j in range(K) if z[j] < z[k] or (z[j] == z[k] and j < k)]
        interf = pu[:, better].sum(1) if better else 0.0
        unicast += frac * np.log1p(pu[:, k] / (z[k] + interf)) / LN2
    out[:, K] = unicast
    return out


def grid_search(P: float, noise: NoiseField, w: RateWeights, points: int = 41) -> float:
    """Best ``mu0 min_k R0k + mu sum(R_k)`` over a uniform grid of all layer powers.

    Every layer power of every channel takes values in ``{0, P/(points-1), ..., P}``
    with the whole budget spent.  Per-channel candidates are reduced to their
    Pareto front in (per-user common rates, unicast sum); the objective is
    nondecreasing in each of these, so the reduction is exact.
    """
    if noise.mode != "static":
        raise ScenarioError("the grid oracle evaluates static channels only")
    levels = points - 1
    K, M = noise.K, noise.M
    fracs = noise.layout.fractions
    per_channel = []
    for i in range(M):
        fronts = []
        for j in range(levels + 1):
            powers = _compositions(j, K + 1) * (P / levels)
            fronts.append(pareto_front(_channel_points(noise.z[:, i], fracs[i], powers)))
        per_channel.append(fronts)
    # table[b]: Pareto set of summed rate vectors using b budget units so far
    table = {b: per_channel[0][b] for b in range(levels + 1)}
    for i in range(1, M):
        new = {}
        # the last channel only needs the full budget
        for b in (range(levels + 1) if i < M - 1 else [levels]):
            sums = [table[a][:, None, :] + per_channel[i][b - a][None, :, :]
                    for a in range(b + 1)]
            merged = np.concatenate([s.reshape(-1, K + 1) for s in sums])
            new[b] = pareto_front(merged) if i < M - 1 else merged
        table = new
    final = table[levels]
    return float(np.max(w.mu0 * final[:, :K].min(1) + w.mu * final[:, K]))


def oracle_instance(cfg: ExperimentConfig, n: int) -> NoiseField:
    cell_seed, gain_seed = realization_seed(cfg.seed, "oracle", cfg.oracle_K, n).spawn(2)
    lo, hi = cfg.oracle_snr_db
    snr_db = np.random.default_rng(cell_seed).uniform(lo, hi, cfg.oracle_K)
    layout = OfdmLayout.equal(cfg.oracle_M)
    return effective_noise(layout, static_realization(10 ** (snr_db / 10), layout, gain_seed))


def oracle_verdicts(cfg: ExperimentConfig) -> list[dict]:
    """Algorithmic objective against the grid optimum on ``cfg.realizations`` instances."""
    if cfg.oracle_M > 3 or cfg.oracle_K > 3:
        raise ScenarioError("the grid oracle is limited to M <= 3 and K <= 3")
    out = []
    for n in range(cfg.realizations):
        noise = oracle_instance(cfg, n)
        w = RateWeights.uniform(noise.K, float(noise.K), 1.0)
        _, alloc, rep = optimize_mu0(cfg.power, noise, w)
        grid = grid_search(cfg.power, noise, w, cfg.oracle_grid)
        shortfall = max(0.0, (grid - rep.weighted_sum) / grid) if grid > 0 else 0.0
        rel_diff = abs(rep.weighted_sum - grid) / grid if grid > 0 else 0.0
        out.append({"instance": n, "algorithm": rep.weighted_sum, "grid": grid,
                    "shortfall": shortfall, "rel_diff": rel_diff,
                    "pass": shortfall <= cfg.oracle_tolerance})
    return out


def run_oracle(cfg: ExperimentConfig) -> str:
    rows = [[v["instance"], _fmt(v["algorithm"]), _fmt(v["grid"]), _fmt(v["shortfall"]),
             _fmt(v["rel_diff"]), "pass" if v["pass"] else "fail"] for v in oracle_verdicts(cfg)]
    return _csv(["instance", "algorithm", "grid", "shortfall", "rel_diff", "verdict"], rows)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


RUNNERS = {"mu": run_mu, "bu": run_bu, "tradeoff": run_tradeoff, "oracle": run_oracle}


def run(cfg: ExperimentConfig) -> str:
    return RUNNERS[cfg.use_case](cfg)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
