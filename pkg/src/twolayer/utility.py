"""Marginal-utility functions of the per-channel greedy allocation.

Every utility is a function of the cumulative power ``alpha`` already
stacked in a channel.  The best user's unicast layer occupies
``[0, P_best]`` and the common layer sits on top of it, so the utilities
are marginal weighted rates per unit power, shifted by the power price
``lambda ln 2 / (mu0 N_i/N)``.

In fading mode each ``1/(Z + alpha)`` term is replaced by its expectation
``E[X/(Z + alpha X)]`` over the noise field's fading sample.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .channel_model import NoiseField
from .errors import RootFindingError, ScenarioError
from .roots import DEFAULT_TOL, newton_bisect

LN2 = math.log(2.0)
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class RateWeights:
    """Rate rewards.

    ``mu0`` rewards the common message and ``mu`` every unicast message.
    ``split`` is the common-message weight vector on the unit simplex
    (the per-user weights divided by ``mu0``).  ``mu0_bar`` is the reward
    actually used by the utilities; it exceeds ``mu0`` by the multiplier of
    a minimum common-rate constraint.
    """

    mu0: float
    mu: float
    split: np.ndarray
    mu0_bar: float | None = None

    def __post_init__(self):
        split = np.atleast_1d(np.asarray(self.split, dtype=float))
        if not self.mu0 > 0:
            raise ScenarioError("mu0 must be positive")
        if self.mu < 0:
            raise ScenarioError("mu must be nonnegative")
        if np.any(split < 0) or abs(split.sum() - 1.0) > SIMPLEX_TOL:
            raise ScenarioError("split must lie on the unit simplex")
        object.__setattr__(self, "split", split)
        if self.mu0_bar is None:
            object.__setattr__(self, "mu0_bar", float(self.mu0))
        elif self.mu0_bar < self.mu0:
            raise ScenarioError("mu0_bar must be >= mu0")

    @classmethod
    def uniform(cls, K: int, mu0: float, mu: float = 1.0) -> "RateWeights":
        return cls(mu0, mu, np.full(K, 1.0 / K))

    @property
    def K(self) -> int:
        return self.split.size

    @property
    def ratio(self) -> float:
        """``mu / mu0_bar``: below one the two-layer regime applies."""
        return self.mu / self.mu0_bar

    @property
    def lambda0(self) -> float:
        return self.mu0_bar - self.mu0

    def with_split(self, split) -> "RateWeights":
        return RateWeights(self.mu0, self.mu, split, self.mu0_bar)

    def with_reward(self, mu0_bar: float) -> "RateWeights":
        return RateWeights(self.mu0, self.mu, self.split, mu0_bar)


@dataclass(frozen=True)
class LagrangeState:
    """Power price ``lambda``; the waterline is ``1/lambda``."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ScenarioError("lambda must be positive")


@dataclass(frozen=True)
class CriticalPoints:
    """Per-channel intersection and zeros; ``nan`` marks an absent point."""

    alpha_bar: np.ndarray
    alpha0: np.ndarray
    alpha1: np.ndarray
    g0: np.ndarray


def price(noise: NoiseField, w: RateWeights, s: LagrangeState) -> np.ndarray:
    """Common asymptote ``lambda ln2 / (mu0 N_i/N)`` of all utilities, per channel."""
    return s.lam * LN2 / (w.mu0_bar * noise.layout.fractions)


# -- expectation kernel -----------------------------------------------------

def _inv(w, alpha, sampled: bool):
    """Mean of ``1/(w + alpha)`` over the last (fading-state) axis and its derivative.

    ``w`` is the noise divided by each fading state, so the mean equals
    ``E[X/(z + alpha X)]``; without samples it is plain ``1/(z + alpha)``.
    """
    if not sampled:
        d = 1.0 / (w + alpha)
        return d, -d * d
    q = w + np.expand_dims(alpha, -1)
    np.reciprocal(q, out=q)
    d = q.mean(-1)
    np.square(q, out=q)
    return d, -q.mean(-1)


class ChannelTerms:
    """Cached per-channel data for vectorised utility evaluation."""

    def __init__(self, noise: NoiseField):
        self.noise = noise
        self.M = noise.M
        self.z = noise.z
        self.sampled = noise.mode == "fading"
        # fading states laid out channel-major so averages run over contiguous memory
        self.xt = np.ascontiguousarray(noise.phi2.T) if self.sampled else None
        self.best = noise.best
        self.zb = noise.z[self.best, np.arange(noise.M)]
        self.xmean = self.xt.mean(1) if self.sampled else np.ones(noise.M)
        self.frac = noise.layout.fractions

    def scaled(self, z, ch):
        """``z / X`` per fading state (trailing axis); ``z`` itself when static."""
        if not self.sampled:
            return z
        return np.expand_dims(z, -1) / self.xt[ch]

    def best_terms(self, alpha, ch):
        return _inv(self.scaled(self.zb[ch], ch), alpha, self.sampled)

    def common_terms(self, alpha, ch, split):
        users = np.flatnonzero(split > 0)
        w = self.scaled(self.z[np.ix_(users, ch)], ch)
        return self._common(w, split[users], alpha)

    def _common(self, w, sw, alpha):
        d, dd = _inv(w, alpha, self.sampled)
        return sw @ d, sw @ dd

    # values at alpha = 0 are exact: E[X/z] = E[X]/z
    def best_at_zero(self, ch):
        return self.xmean[ch] / self.zb[ch]

    def common_at_zero(self, ch, split):
        return (split @ (1.0 / self.z[:, ch])) * self.xmean[ch]

    def g0(self, split, ch=None):
        ch = np.arange(self.M) if ch is None else ch
        return self.common_at_zero(ch, split) / self.best_at_zero(ch)

    # -- roots ---------------------------------------------------------------

    def intersections(self, split, rho, ch=None, tol=DEFAULT_TOL):
        """``alpha_bar`` per channel: ``nan`` if ``g(0) > rho``, ``inf`` if ``rho >= 1``."""
        ch = np.arange(self.M) if ch is None else np.asarray(ch)
        out = np.full(ch.size, np.nan)
        if rho >= 1.0:
            out[:] = np.inf
            return out
        users = np.flatnonzero(split > 0)
        sw = split[users]
        w_all = self.scaled(self.z[np.ix_(users, ch)], ch)
        wb_all = self.scaled(self.zb[ch], ch)
        # g(0) from the same kernel as the solver so the bracket test agrees
        g0 = self._common(w_all, sw, 0.0)[0] / _inv(wb_all, 0.0, self.sampled)[0]
        need = g0 <= rho
        out[need & (g0 == rho)] = 0.0
        need &= g0 < rho
        if not np.any(need):
            return out
        cc = ch[need]
        w_sub, wb = w_all[:, need], wb_all[need]

        def fdf(a):
            h, dh = self._common(w_sub, sw, a)
            b, db = _inv(wb, a, self.sampled)
            return h / b - rho, (dh * b - h * db) / (b * b)

        zmax = self.z[np.ix_(users, cc)].max(0)
        hi = np.maximum((rho * zmax - self.zb[cc]) / (1.0 - rho), 0.0) * (1 + 1e-9) + 1e-300
        for _ in range(200):
            f, _ = fdf(hi)
            if np.all(f >= 0):
                break
            hi = np.where(f >= 0, hi, 2.0 * hi + self.zb[cc])
        else:
            raise RootFindingError("could not bracket the utility intersection")
        out[need] = newton_bisect(fdf, np.zeros(cc.size), hi, tol=tol)
        return out

    def alpha1(self, rho, c, ch=None, tol=DEFAULT_TOL):
        """Zero of the best-user utility per channel; ``nan`` when absent."""
        ch = np.arange(self.M) if ch is None else np.asarray(ch)
        c = np.broadcast_to(c, ch.shape)
        if not self.sampled:
            a = rho / c - self.zb[ch]
            return np.where(a > 0, a, np.nan)
        out = np.full(ch.size, np.nan)
        # same kernel as the solver so the bracket test agrees to the last bit
        need = rho * self.best_terms(0.0, ch)[0] > c
        if np.any(need):
            cc, cv = ch[need], c[need]
            zb = self.zb[cc]
            wb = self.scaled(zb, cc)

            def fdf(a):
                b, db = _inv(wb, a, self.sampled)
                return rho * b - cv, rho * db

            # rho E[X/(z + aX)] < rho/a, so the sign flips by a = 2 rho/c;
            # the static root is a close start
            hi = 2.0 * rho / cv
            x0 = np.clip(rho / cv - zb, 0.0, hi)
            out[need] = newton_bisect(fdf, np.zeros(cc.size), hi, x0=x0, tol=tol, scale=cv)
        return out

    def alpha0(self, split, c, ch=None, start=None, tol=DEFAULT_TOL):
        """Zero of the common utility searched right of ``start``; ``nan`` when absent."""
        ch = np.arange(self.M) if ch is None else np.asarray(ch)
        c = np.broadcast_to(np.asarray(c, dtype=float), ch.shape)
        start = np.zeros(ch.size) if start is None else np.asarray(start, dtype=float)
        out = np.full(ch.size, np.nan)
        if ch.size == 0:
            return out
        need = self.common_terms(start, ch, split)[0] > c
        if np.any(need):
            cc, cv, st = ch[need], c[need], start[need]
            users = np.flatnonzero(split > 0)
            z_sub, sw = self.z[np.ix_(users, cc)], split[users]
            w_sub = self.scaled(z_sub, cc)

            def fdf(a):
                h, dh = self._common(w_sub, sw, a)
                return h - cv, dh

            # h(a) < 1/a, so the sign flips by a = 2/c
            hi = 2.0 / cv
            # static case (Jensen): h(a) >= 1/(sum_k s_k z_k + a), so the root
            # is right of this point; in fading mode it is a close start
            x0 = np.clip(1.0 / cv - sw @ z_sub, st, hi)
            out[need] = newton_bisect(fdf, st, hi, x0=x0, tol=tol, scale=cv)
        return out


# -- scalar API ---------------------------------------------------------------

def _z(noise: NoiseField, k: int, i: int, phi2) -> float:
    z = noise.z[k, i]
    return z / phi2 if phi2 is not None else z


def utility_user(k: int, i: int, alpha, noise: NoiseField, w: RateWeights,
                 s: LagrangeState, phi2: float | None = None):
    """Marginal utility of user ``k``'s unicast layer in channel ``i``.

    ``phi2`` selects one fading state; the instantaneous noise is then
    ``z / phi2``.
    """
    return (w.mu / w.mu0_bar) / (_z(noise, k, i, phi2) + np.asarray(alpha, dtype=float)) \
        - price(noise, w, s)[i]


def utility_common(i: int, alpha, noise: NoiseField, w: RateWeights, s: LagrangeState,
                   phi2: float | None = None):
    alpha = np.asarray(alpha, dtype=float)
    zi = noise.z[:, i] / phi2 if phi2 is not None else noise.z[:, i]
    total = sum(w.split[k] / (zi[k] + alpha) for k in range(noise.K))
    return total - price(noise, w, s)[i]


def g_eval(i: int, alpha, noise: NoiseField, w: RateWeights):
    """Ratio of the common and best-user unicast marginal rates (without price)."""
    alpha = np.asarray(alpha, dtype=float)
    order = noise.orderings[i]
    zb = noise.z[order[0], i]
    return sum(w.split[k] * (zb + alpha) / (noise.z[k, i] + alpha) for k in order)


def g_derivative(i: int, alpha, noise: NoiseField, w: RateWeights):
    alpha = np.asarray(alpha, dtype=float)
    zb = noise.z[noise.best[i], i]
    return sum(w.split[k] * (noise.z[k, i] - zb) / (noise.z[k, i] + alpha) ** 2
               for k in range(noise.K))


def find_intersection(i: int, noise: NoiseField, w: RateWeights,
                      tol: float = DEFAULT_TOL) -> float | None:
    """Crossing point of the common and best-user utilities in channel ``i``.

    Returns ``None`` when ``g(0) > mu/mu0`` (the common layer dominates
    everywhere) or when no finite crossing exists.
    """
    a = ChannelTerms(noise).intersections(w.split, w.ratio, np.array([i]), tol=tol)[0]
    return None if not np.isfinite(a) else float(a)


def zero_crossings(i: int, noise: NoiseField, w: RateWeights, s: LagrangeState,
                   tol: float = DEFAULT_TOL) -> tuple[float | None, float | None]:
    """Positive zeros ``(alpha0, alpha1)`` of the common and best-user utilities."""
    terms = ChannelTerms(noise)
    c = price(noise, w, s)[i : i + 1]
    ch = np.array([i])
    a0 = terms.alpha0(w.split, c, ch, tol=tol)[0]
    a1 = terms.alpha1(w.ratio, c, ch, tol=tol)[0]
    return (None if np.isnan(a0) else float(a0)), (None if np.isnan(a1) else float(a1))


def critical_points(noise: NoiseField, w: RateWeights, s: LagrangeState,
                    tol: float = DEFAULT_TOL) -> CriticalPoints:
    terms = ChannelTerms(noise)
    c = price(noise, w, s)
    return CriticalPoints(
        alpha_bar=terms.intersections(w.split, w.ratio, tol=tol),
        alpha0=terms.alpha0(w.split, c, tol=tol),
        alpha1=terms.alpha1(w.ratio, c, tol=tol),
        g0=terms.g0(w.split),
    )


def envelope(i: int, alpha, noise: NoiseField, w: RateWeights, s: LagrangeState):
    """Pointwise max of every user utility, the common utility and zero."""
    alpha = np.asarray(alpha, dtype=float)
    best = np.maximum(utility_common(i, alpha, noise, w, s), 0.0)
    for k in range(noise.K):
        best = np.maximum(best, utility_user(k, i, alpha, noise, w, s))
    return best


def utility_dump(i: int, noise: NoiseField, w: RateWeights, s: LagrangeState,
                 alphas) -> str:
    """CSV of ``alpha, u_0, u_1..u_K, envelope`` over ``alphas`` for channel ``i``."""
    alphas = np.asarray(alphas, dtype=float)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha", "u_0", *(f"u_{k + 1}" for k in range(noise.K)), "envelope"])
    cols = [utility_common(i, alphas, noise, w, s)]
    cols += [utility_user(k, i, alphas, noise, w, s) for k in range(noise.K)]
    cols.append(envelope(i, alphas, noise, w, s))
    for row in zip(alphas, *cols):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
