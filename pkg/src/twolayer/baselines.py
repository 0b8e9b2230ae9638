"""Comparison schemes: orthogonal multiplexing, unicast-only and equal power.

Orthogonal multiplexing (OM) dedicates each channel either to the common
message or to the best user's unicast message.  Its optimal power split
reuses the greedy/waterline machinery with per-channel layer restrictions.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .allocator import (COMMON_ONLY, UNICAST_ONLY, PowerAllocation, RateReport, optimize_mu0,
                        rates)
from .channel_model import NoiseField
from .errors import InfeasibleRateError, ScenarioError
from .utility import RateWeights

POLICIES = ("dynamic", "static")


@dataclass(frozen=True)
class OmSplit:
    """Share of channels given to the common message and how they are chosen.

    ``dynamic`` gives the channels with the lowest best-user noise to unicast
    and the rest to multicast; ``static`` always uses the last channels for
    multicast.
    """

    multicast_fraction: float
    policy: str = "dynamic"

    def __post_init__(self):
        if not 0.0 <= self.multicast_fraction <= 1.0:
            raise ScenarioError("multicast fraction must lie in [0, 1]")
        if self.policy not in POLICIES:
            raise ScenarioError(f"policy must be one of {POLICIES}")

    def multicast_count(self, M: int) -> int:
        """Rounded channel count, halves going to multicast."""
        return int(math.floor(self.multicast_fraction * M + 0.5 + 1e-9))

    def modes(self, noise: NoiseField) -> np.ndarray:
        M = noise.M
        n_mc = self.multicast_count(M)
        modes = np.full(M, UNICAST_ONLY)
        if n_mc == 0:
            return modes
        if self.policy == "dynamic":
            zb = noise.z[noise.best, np.arange(M)]
            ranked = np.argsort(zb, kind="stable")
            modes[ranked[M - n_mc:]] = COMMON_ONLY
        else:
            modes[M - n_mc:] = COMMON_ONLY
        return modes

    @property
    def label(self) -> str:
        pct = round(100 * self.multicast_fraction)
        return f"om{pct}"


def _equal_modes_alloc(P: float, noise: NoiseField, modes: np.ndarray) -> PowerAllocation:
    share = P / noise.M
    common = np.where(modes == COMMON_ONLY, share, 0.0)
    uni = np.zeros(noise.z.shape)
    ch = np.flatnonzero(modes == UNICAST_ONLY)
    uni[noise.best[ch], ch] = share
    return PowerAllocation(common, uni, P)


def om_allocate(P: float, noise: NoiseField, split: OmSplit, w: RateWeights,
                power: str = "optimal", r0_min: float = 0.0):
    """Orthogonal multiplexing allocation.

    ``power="optimal"`` maximises the weighted sum-rate jointly over both
    channel groups; ``"equal"`` gives every channel ``P/M``.

    Raises
    ------
    InfeasibleRateError
        If a positive common rate ``r0_min`` is demanded with no multicast
        channel.
    """
    modes = split.modes(noise)
    if r0_min > 0 and not np.any(modes == COMMON_ONLY):
        raise InfeasibleRateError("common rate demanded but no channel carries the common message")
    if power == "equal":
        alloc = _equal_modes_alloc(P, noise, modes)
        return alloc, rates(alloc, noise, w)
    if power != "optimal":
        raise ValueError(f"unknown power mode {power!r}")
    _, alloc, rep = optimize_mu0(P, noise, w, modes=modes)
    return alloc, _rescore(rep, alloc, noise, w)


def _rescore(rep: RateReport, alloc: PowerAllocation, noise: NoiseField,
             w: RateWeights) -> RateReport:
    return replace(rates(alloc, noise, w), lagrangian=None, flags=rep.flags, lam=rep.lam)


def unicast_only(P: float, noise: NoiseField, w: RateWeights | None = None):
    """Water-filling of the best user's unicast layer in every channel; ``R0 = 0``."""
    if w is None:
        w = RateWeights.uniform(noise.K, 1.0, 1.0)
    return om_allocate(P, noise, OmSplit(0.0), w)


def equal_power(P: float, noise: NoiseField, w: RateWeights):
    """Two layers per channel with ``P0 = P_best = P/(2M)``."""
    half = P / (2 * noise.M)
    uni = np.zeros(noise.z.shape)
    uni[noise.best, np.arange(noise.M)] = half
    alloc = PowerAllocation(np.full(noise.M, half), uni, P)
    return alloc, rates(alloc, noise, w)


def cell_edge_user(noise: NoiseField) -> int:
    """User with the largest total effective noise over all channels."""
    return int(np.argmax(noise.z.sum(1)))


def cell_edge_throughput(report: RateReport, noise: NoiseField) -> float:
    """Common rate plus the cell-edge user's unicast rate."""
    return report.r0 + float(report.rk[cell_edge_user(noise)])


def reports_to_csv(rows: dict[str, RateReport]) -> str:
    """``scheme,metric,value`` rows for several schemes on one instance."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scheme", "metric", "value"])
    for scheme, rep in rows.items():
        for key, value in rep.metrics().items():
            writer.writerow([scheme, key, repr(float(value))])
    return buf.getvalue()
