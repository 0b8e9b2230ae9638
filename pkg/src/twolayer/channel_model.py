"""OFDMA layouts, cell drops, fading draws and effective noise powers.

Conventions used across the package:

* users are indexed ``0..K-1`` and channels ``0..M-1``;
* per-user, per-channel arrays have shape ``(K, M)``;
* fading factors ``|Phi|^2`` have shape ``(n, M)`` (one shared draw per
  channel per fading state).
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .config import load_kv
from .errors import DimensionError, ScenarioError

log = logging.getLogger(__name__)

BOLTZMANN_DBM_HZ = -174.0
DEFAULT_FADING_DRAWS = 2000


@dataclass(frozen=True)
class OfdmLayout:
    """Partition of ``N`` resource elements into ``M`` parallel channels."""

    re_counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.re_counts)
        if len(counts) < 1:
            raise ScenarioError("layout needs at least one channel")
        if any(c < 1 for c in counts):
            raise ScenarioError(f"every channel needs at least one RE, got {counts}")
        object.__setattr__(self, "re_counts", counts)

    @classmethod
    def equal(cls, M: int, re_per_channel: int = 1) -> "OfdmLayout":
        return cls((re_per_channel,) * M)

    @property
    def M(self) -> int:
        return len(self.re_counts)

    @property
    def N(self) -> int:
        return sum(self.re_counts)

    @property
    def fractions(self) -> np.ndarray:
        """``N^(i)/N`` for every channel."""
        return np.asarray(self.re_counts, dtype=float) / self.N


@dataclass(frozen=True)
class CellScenario:
    """Single-cell link budget.

    The transmitter/receiver/environment defaults are estimates for a
    low-power low-tower rural broadcast site; override them from a scenario
    file when better link-budget tables are available.
    """

    radius_km: float = 7.5
    carrier_mhz: float = 700.0
    tx_power_dbm: float = 67.0  # EIRP over the whole channel bandwidth (~5 kW)
    shadowing_sigma_db: float = 8.0
    penetration_loss_db: float = 8.0
    noise_figure_db: float = 7.0
    bandwidth_mhz: float = 10.0
    tx_height_m: float = 100.0
    rx_height_m: float = 1.5
    rx_gain_db: float = 0.0
    environment: str = "indoor"
    min_distance_km: float = 0.1

    def __post_init__(self):
        if not self.radius_km > 0:
            raise ScenarioError(f"radius_km must be positive, got {self.radius_km}")
        if self.shadowing_sigma_db < 0:
            raise ScenarioError("shadowing_sigma_db must be >= 0")
        if not 0 < self.min_distance_km < self.radius_km:
            raise ScenarioError("min_distance_km must lie in (0, radius_km)")
        if self.bandwidth_mhz <= 0:
            raise ScenarioError("bandwidth_mhz must be positive")
        if self.environment not in ("indoor", "car"):
            raise ScenarioError(f"environment must be 'indoor' or 'car', got {self.environment!r}")

    @classmethod
    def from_kv(cls, values: dict[str, str]) -> "CellScenario":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                continue
            kwargs[key] = raw if key == "environment" else float(raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "CellScenario":
        return cls.from_kv(load_kv(path))

    def noise_dbm(self) -> float:
        return BOLTZMANN_DBM_HZ + 10 * math.log10(self.bandwidth_mhz * 1e6) + self.noise_figure_db


def mu_scenario() -> CellScenario:
    """In-car/indoor reception with 8 dB shadowing (multicast-unicast runs)."""
    return CellScenario()


def bu_scenario() -> CellScenario:
    """Car-mounted outdoor reception with 5.5 dB shadowing (broadcast-unicast runs)."""
    return CellScenario(shadowing_sigma_db=5.5, penetration_loss_db=0.0, environment="car")


@dataclass(frozen=True)
class ChannelRealization:
    """Channel gains and receiver noise for one drop.

    ``gains`` holds instantaneous ``|H|^2`` (static model).  For the fading
    model ``gain_vars`` holds the channel variances and ``phi2`` optional
    unit-mean fading samples of shape ``(n, M)``.
    """

    noise_vars: np.ndarray
    gains: np.ndarray | None = None
    gain_vars: np.ndarray | None = None
    phi2: np.ndarray | None = None

    def __post_init__(self):
        nv = np.atleast_1d(np.asarray(self.noise_vars, dtype=float))
        object.__setattr__(self, "noise_vars", nv)
        if self.gains is None and self.gain_vars is None:
            raise DimensionError("need gains (static) or gain_vars (fading)")
        for name in ("gains", "gain_vars"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.atleast_2d(np.asarray(arr, dtype=float))
            if arr.shape[0] != nv.shape[0]:
                raise DimensionError(f"{name} has {arr.shape[0]} users, noise_vars has {nv.shape[0]}")
            object.__setattr__(self, name, arr)
        if self.phi2 is not None:
            object.__setattr__(self, "phi2", np.atleast_2d(np.asarray(self.phi2, dtype=float)))

    @property
    def K(self) -> int:
        return self.noise_vars.shape[0]


@dataclass(frozen=True, eq=False)
class NoiseField:
    """Effective noise powers ``z`` (shape ``(K, M)``) and per-channel orderings.

    ``orderings[i]`` lists users of channel ``i`` from lowest to highest
    noise.  In fading mode ``z`` holds long-term averages and ``phi2`` the
    common-random-number fading sample used for expectations.
    """

    z: np.ndarray
    layout: OfdmLayout
    mode: str = "static"
    phi2: np.ndarray | None = None
    orderings: np.ndarray = field(default=None)

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.z, dtype=float))
        if z.shape[1] != self.layout.M:
            raise DimensionError(f"z has {z.shape[1]} channels, layout has {self.layout.M}")
        if not np.all(np.isfinite(z)) or np.any(z <= 0):
            raise ScenarioError("effective noise powers must be finite and positive")
        if self.mode not in ("static", "fading"):
            raise ScenarioError(f"mode must be 'static' or 'fading', got {self.mode!r}")
        object.__setattr__(self, "z", z)
        if self.phi2 is not None:
            phi2 = np.atleast_2d(np.asarray(self.phi2, dtype=float))
            if phi2.shape[1] != self.layout.M:
                raise DimensionError("phi2 must have shape (n, M)")
            if np.any(phi2 <= 0):
                raise ScenarioError("fading samples must be positive")
            object.__setattr__(self, "phi2", phi2)
        if self.orderings is None:
            object.__setattr__(self, "orderings", user_orderings(z))

    @property
    def K(self) -> int:
        return self.z.shape[0]

    @property
    def M(self) -> int:
        return self.z.shape[1]

    @property
    def best(self) -> np.ndarray:
        """Lowest-noise user of every channel."""
        return self.orderings[:, 0]

    def better_than(self, k: int, i: int) -> list[int]:
        """Users decoded and cancelled before user ``k``'s message in channel ``i``."""
        order = list(self.orderings[i])
        return order[: order.index(k)]

    def with_fading(self, phi2: np.ndarray | None) -> "NoiseField":
        return NoiseField(self.z, self.layout, "fading", phi2, self.orderings)

    def scaled(self, factor: float) -> "NoiseField":
        return NoiseField(self.z * factor, self.layout, self.mode, self.phi2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["user", "channel", "z"])
        for k in range(self.K):
            for i in range(self.M):
                writer.writerow([k, i, repr(float(self.z[k, i]))])
        return buf.getvalue()


def user_orderings(z: np.ndarray) -> np.ndarray:
    """Per-channel permutations sorting users by increasing noise.

    Ties are broken by ascending user index.
    """
    z = np.atleast_2d(z)
    orders = np.argsort(z, axis=0, kind="stable").T
    sorted_z = np.take_along_axis(z, orders.T, axis=0)
    if z.shape[0] > 1 and np.any(sorted_z[1:] == sorted_z[:-1]):
        log.warning("equal effective noise powers found; ties broken by user index")
    return orders


def effective_noise(layout: OfdmLayout, realization: ChannelRealization,
                    mode: str | None = None) -> NoiseField:
    """Effective noise ``(N_i/N) sigma_k^2 / |H_k^(i)|^2`` for every user and channel.

    In fading mode the channel variance replaces ``|H|^2`` and any fading
    sample carried by the realization is attached to the result.
    """
    if mode is None:
        mode = "static" if realization.gains is not None else "fading"
    h = realization.gains if mode == "static" else realization.gain_vars
    if h is None:
        raise DimensionError(f"realization has no {'gains' if mode == 'static' else 'gain_vars'}")
    if h.shape[1] != layout.M:
        raise DimensionError(f"realization has {h.shape[1]} channels, layout has {layout.M}")
    nv = realization.noise_vars
    if np.any(h <= 0) or np.any(nv <= 0):
        raise ScenarioError("channel gains and noise variances must be positive")
    z = layout.fractions[None, :] * nv[:, None] / h
    phi2 = realization.phi2 if mode == "fading" else None
    return NoiseField(z, layout, mode, phi2)


# -- cell drops -------------------------------------------------------------

def okumura_hata_suburban(distance_km, carrier_mhz: float, tx_height_m: float,
                          rx_height_m: float) -> np.ndarray:
    """Median suburban path loss in dB (small/medium city mobile correction)."""
    if not 150.0 <= carrier_mhz <= 1500.0:
        raise ScenarioError(f"Okumura-Hata valid for 150-1500 MHz, got {carrier_mhz}")
    if not 30.0 <= tx_height_m <= 200.0:
        raise ScenarioError(f"Okumura-Hata valid for 30-200 m transmitter height, got {tx_height_m}")
    if not 1.0 <= rx_height_m <= 10.0:
        raise ScenarioError(f"Okumura-Hata valid for 1-10 m receiver height, got {rx_height_m}")
    lf = math.log10(carrier_mhz)
    lhb = math.log10(tx_height_m)
    a_hm = (1.1 * lf - 0.7) * rx_height_m - (1.56 * lf - 0.8)
    d = np.asarray(distance_km, dtype=float)
    urban = 69.55 + 26.16 * lf - 13.82 * lhb - a_hm + (44.9 - 6.55 * lhb) * np.log10(d)
    return urban - 2.0 * math.log10(carrier_mhz / 28.0) ** 2 - 5.4


def shadowing_db(scenario: CellScenario, size, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, scenario.shadowing_sigma_db, size)


def uniform_disc_distances(scenario: CellScenario, size, rng: np.random.Generator) -> np.ndarray:
    """Distances of points uniform in the annulus ``[min_distance, radius]``."""
    r0, r1 = scenario.min_distance_km, scenario.radius_km
    u = rng.random(size)
    return np.sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0))


def snr_db_at(scenario: CellScenario, distance_km, shadow_db=0.0) -> np.ndarray:
    pl = okumura_hata_suburban(distance_km, scenario.carrier_mhz, scenario.tx_height_m,
                               scenario.rx_height_m)
    rx = (scenario.tx_power_dbm + scenario.rx_gain_db - pl - shadow_db
          - scenario.penetration_loss_db)
    return rx - scenario.noise_dbm()


def sample_cell(scenario: CellScenario, K: int, rng_seed) -> np.ndarray:
    """Average linear SNRs of ``K`` users dropped uniformly in the cell.

    The SNR is the received power over noise when the budget is spread
    uniformly over all resource elements.
    """
    if K < 1:
        raise ScenarioError("need at least one user")
    rng = np.random.default_rng(rng_seed)
    d = uniform_disc_distances(scenario, K, rng)
    shadow = shadowing_db(scenario, K, rng)
    return 10.0 ** (snr_db_at(scenario, d, shadow) / 10.0)


def coverage_snr_db(scenario: CellScenario, coverage: float, samples: int = 200_000,
                    seed: int = 20240101) -> float:
    """SNR (dB) exceeded by a ``coverage`` fraction of uniformly dropped users."""
    rng = np.random.default_rng(seed)
    d = uniform_disc_distances(scenario, samples, rng)
    s = snr_db_at(scenario, d, shadowing_db(scenario, samples, rng))
    return float(np.quantile(s, 1.0 - coverage))


def calibrate_coverage(scenario: CellScenario, coverage: float, target_snr_db: float,
                       **kw) -> CellScenario:
    """Shift the transmit power so that ``coverage`` of the cell sees ``target_snr_db``."""
    offset = target_snr_db - coverage_snr_db(scenario, coverage, **kw)
    return replace(scenario, tx_power_dbm=scenario.tx_power_dbm + offset)


def rayleigh_capacity(snr: float) -> float:
    """``E[log2(1 + snr X)]`` for ``X ~ Exp(1)``."""
    t = 1.0 / snr
    if t > 500.0:
        # asymptotic series of e^t E1(t); the direct product overflows
        scaled = (1.0 - 1.0 / t + 2.0 / t**2 - 6.0 / t**3) / t
    else:
        scaled = math.exp(t) * special.exp1(t)
    return float(scaled / math.log(2.0))


def snr_for_rayleigh_capacity(capacity: float) -> float:
    """Average SNR at which a Rayleigh link carries ``capacity`` bits/RE."""
    if capacity <= 0:
        raise ScenarioError("capacity must be positive")
    lo, hi = 1e-6, 1.0
    while rayleigh_capacity(hi) < capacity:
        hi *= 2.0
    return brentq(lambda s: rayleigh_capacity(s) - capacity, lo, hi, xtol=1e-14, rtol=1e-14)


# -- realizations -----------------------------------------------------------

def static_realization(snr: np.ndarray, layout: OfdmLayout, rng_seed) -> ChannelRealization:
    """Independent Rayleigh block gains per user and channel around the average SNR.

    The budget is normalised to ``P = 1`` with unit receiver noise, so a user
    with average SNR ``s`` has mean ``|H|^2 = s``.
    """
    rng = np.random.default_rng(rng_seed)
    snr = np.asarray(snr, dtype=float)
    gains = snr[:, None] * rng.standard_exponential((snr.size, layout.M))
    return ChannelRealization(noise_vars=np.ones(snr.size), gains=gains)


def fading_realization(snr: np.ndarray, layout: OfdmLayout) -> ChannelRealization:
    """Long-term description (no samples yet) for users with average SNR ``snr``."""
    snr = np.asarray(snr, dtype=float)
    return ChannelRealization(noise_vars=np.ones(snr.size),
                              gain_vars=np.repeat(snr[:, None], layout.M, axis=1))


def sample_fading(noise: NoiseField, rng_seed, n: int = DEFAULT_FADING_DRAWS) -> ChannelRealization:
    """Draw ``n`` fading states with one ``|Phi|^2 ~ Exp(1)`` shared by all users per channel.

    The returned realization reproduces ``noise.z`` as its long-term
    effective noise (unit receiver noise) and carries the samples in
    ``phi2``; the instantaneous effective noise in state ``j`` is
    ``z / phi2[j]``.
    """
    if noise.mode != "fading":
        raise ScenarioError("sample_fading needs a noise field in fading mode")
    rng = np.random.default_rng(rng_seed)
    phi2 = rng.standard_exponential((n, noise.M))
    gain_vars = noise.layout.fractions[None, :] / noise.z
    return ChannelRealization(noise_vars=np.ones(noise.K), gain_vars=gain_vars, phi2=phi2)


def attach_fading(noise: NoiseField, rng_seed, n: int = DEFAULT_FADING_DRAWS) -> NoiseField:
    """Fading-mode noise field carrying a fixed common-random-number sample."""
    return noise.with_fading(sample_fading(noise, rng_seed, n).phi2)
