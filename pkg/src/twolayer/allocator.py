"""Greedy two-layer power allocation, waterline search and reward searches.

The per-channel greedy rule places the best user's unicast layer on the
lowest part of the cumulative-power axis and the common layer on top of
it.  A common price ``lambda`` couples the channels; it is found by a
monotone search on ``log lambda``.  The common-message split weights are
chosen by minimising the resulting Lagrangian over the probability simplex,
and a minimum common rate is met by raising the common-message reward.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .channel_model import DEFAULT_FADING_DRAWS, NoiseField, attach_fading
from .errors import BudgetError, DimensionError, InfeasibleRateError, RootFindingError
from .roots import DEFAULT_TOL, monotone_search
from .utility import LN2, ChannelTerms, LagrangeState, RateWeights, price

log = logging.getLogger(__name__)

# per-channel layer modes
TWO_LAYER, COMMON_ONLY, UNICAST_ONLY, OFF = 0, 1, 2, 3

WATERFILL_TOL = 1e-12
GAP_TOL = 1e-11
SIMPLEX_MAXITER = 500
REWARD_TOL = 1e-6
FADING_SEED = 0


@dataclass(frozen=True)
class PowerAllocation:
    """Layer powers: ``common[i]`` and ``unicast[k, i]`` under budget ``budget``."""

    common: np.ndarray
    unicast: np.ndarray
    budget: float

    @property
    def M(self) -> int:
        return self.common.size

    @property
    def K(self) -> int:
        return self.unicast.shape[0]

    @property
    def per_channel(self) -> np.ndarray:
        return self.common + self.unicast.sum(0)

    @property
    def total(self) -> float:
        return float(self.per_channel.sum())

    @property
    def p(self) -> np.ndarray:
        """``(M, K+1)`` array with the common layer in column 0."""
        return np.column_stack([self.common, self.unicast.T])

    def check(self, noise: NoiseField | None = None, two_layer: bool = False,
              rtol: float = 1e-9) -> None:
        """Assert the allocation invariants; raise ``AssertionError`` on violation."""
        assert np.all(self.common >= 0) and np.all(self.unicast >= 0), "negative power"
        assert self.total <= self.budget * (1 + rtol), "budget exceeded"
        if two_layer and noise is not None:
            active = self.unicast > 0
            assert np.all(active.sum(0) <= 1), "more than one unicast layer in a channel"
            ch = np.flatnonzero(active.any(0))
            assert np.all(active[noise.best[ch], ch]), "unicast power on a non-best user"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["channel", "layer", "user", "power"])
        for i in range(self.M):
            writer.writerow([i, "common", "", repr(float(self.common[i]))])
            for k in range(self.K):
                writer.writerow([i, "unicast", k, repr(float(self.unicast[k, i]))])
        return buf.getvalue()


@dataclass(frozen=True)
class RateReport:
    """Achieved rates in bits/RE.

    ``weighted_sum`` is ``mu0 R0 + mu sum(R_k)`` with the caller's rewards;
    ``lagrangian`` is the split-weighted objective
    ``mu0_bar sum_k split_k R0k + mu sum(R_k)`` when a split was supplied.
    """

    r0: float
    rk: np.ndarray
    r0_components: np.ndarray
    rk_components: np.ndarray
    weighted_sum: float
    lagrangian: float | None = None
    flags: tuple[str, ...] = field(default=())
    lam: float | None = None

    @property
    def sum_rate(self) -> float:
        return self.r0 + float(self.rk.sum())

    @property
    def r0_per_user(self) -> np.ndarray:
        return self.r0_components.sum(1)

    def metrics(self) -> dict[str, float]:
        out = {"r0": self.r0, "unicast_sum": float(self.rk.sum()), "sum_rate": self.sum_rate,
               "weighted_sum": self.weighted_sum}
        if self.lagrangian is not None:
            out["lagrangian"] = self.lagrangian
        for k, r in enumerate(self.rk):
            out[f"r_{k}"] = float(r)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for key, value in self.metrics().items():
            writer.writerow([key, repr(float(value))])
        return buf.getvalue()


@dataclass(frozen=True)
class BuConstraint:
    """Minimum common rate ``r0_min`` against a broadcast-only reference ``cb``."""

    r0_min: float
    cb: float

    def __post_init__(self):
        if not 0 <= self.r0_min <= self.cb * (1 + 1e-12):
            raise InfeasibleRateError(f"need 0 <= r0 <= C_B, got r0={self.r0_min}, C_B={self.cb}")

    @classmethod
    def from_fraction(cls, fraction: float, cb: float) -> "BuConstraint":
        return cls(fraction * cb, cb)

    @property
    def fraction(self) -> float:
        return self.r0_min / self.cb if self.cb > 0 else 0.0


def _with_samples(noise: NoiseField) -> NoiseField:
    if noise.mode == "fading" and noise.phi2 is None:
        return attach_fading(noise, FADING_SEED, DEFAULT_FADING_DRAWS)
    return noise


# -- rates --------------------------------------------------------------------

def _log2_1p(num, den):
    return np.log1p(num / den) / LN2


def rates(p: PowerAllocation, noise: NoiseField, weights: RateWeights | None = None) -> RateReport:
    """Common and unicast rates of an allocation.

    Common-layer rates see all unicast power of the channel as interference;
    a unicast layer sees only the layers of users with lower noise, the rest
    being cancelled.  Fading mode averages over the noise field's sample.
    With ``weights=None`` the weighted sum is the plain sum-rate.
    """
    noise = _with_samples(noise)
    if p.common.shape != (noise.M,) or p.unicast.shape != noise.z.shape:
        raise DimensionError("allocation does not match the noise field")
    frac = noise.layout.fractions
    z = noise.z
    interf = p.unicast.sum(0)
    order = noise.orderings  # (M, K)
    sorted_p = np.take_along_axis(p.unicast.T, order, axis=1)
    cum = np.cumsum(sorted_p, axis=1) - sorted_p
    better = np.empty_like(cum)
    np.put_along_axis(better, order, cum, axis=1)
    better = better.T  # (K, M)
    if noise.mode == "static":
        r0c = frac * _log2_1p(p.common, z + interf)
        rkc = frac * _log2_1p(p.unicast, z + better)
    else:
        x = noise.phi2.T  # (M, n)
        r0c = np.zeros(z.shape)
        ch = np.flatnonzero(p.common > 0)
        if ch.size:
            xc = x[ch]
            r0c[:, ch] = _log2_1p(xc * p.common[ch, None],
                                  z[:, ch, None] + xc * interf[ch, None]).mean(-1)
        r0c *= frac
        # only layers with power carry rate
        rkc = np.zeros(z.shape)
        kk, ii = np.nonzero(p.unicast > 0)
        if kk.size:
            xs = x[ii]
            rkc[kk, ii] = _log2_1p(xs * p.unicast[kk, ii, None],
                                   z[kk, ii, None] + xs * better[kk, ii, None]).mean(-1)
        rkc *= frac
    r0_user = r0c.sum(1)
    r0 = float(r0_user.min())
    rk = rkc.sum(1)
    if weights is None:
        ws, lag = r0 + float(rk.sum()), None
    else:
        ws = weights.mu0 * r0 + weights.mu * float(rk.sum())
        lag = weights.mu0_bar * float(weights.split @ r0_user) + weights.mu * float(rk.sum())
    return RateReport(r0, rk, r0c, rkc, ws, lag)


# -- per-channel greedy rule -------------------------------------------------------

class _Greedy:
    """Greedy layer powers for every channel at a given price.

    The intersection of the two utilities does not depend on the price, so it
    is computed once per split vector.
    """

    def __init__(self, noise: NoiseField, w: RateWeights, modes=None, tol=DEFAULT_TOL):
        self.noise = noise
        self.w = w
        self.terms = ChannelTerms(noise)
        self.modes = np.full(noise.M, TWO_LAYER) if modes is None else np.asarray(modes)
        self.tol = tol
        self.rho = w.ratio
        two = np.flatnonzero(self.modes == TWO_LAYER)
        self.abar = np.full(noise.M, np.nan)
        if two.size:
            self.abar[two] = self.terms.intersections(w.split, self.rho, two, tol=tol)
        self.uses_common = np.any(self.modes == COMMON_ONLY) or (
            self.rho < 1 and np.any(self.modes == TWO_LAYER))

    def price(self, lam: float) -> np.ndarray:
        return price(self.noise, self.w, LagrangeState(lam))

    def lam_max(self) -> float:
        """Price at which every channel receives zero power."""
        t = self.terms
        ch = np.arange(self.noise.M)
        top = np.maximum(self.rho * t.best_at_zero(ch), t.common_at_zero(ch, self.w.split))
        return float(np.max(top * self.w.mu0_bar * t.frac / LN2))

    def powers(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        """``(P0, P_best)`` per channel."""
        M = self.noise.M
        c = self.price(lam)
        p0 = np.zeros(M)
        p1 = np.zeros(M)
        uni = self.modes == UNICAST_ONLY
        two = self.modes == TWO_LAYER
        case1 = two & ~np.isnan(self.abar)
        a1 = np.full(M, np.nan)
        need = np.flatnonzero(uni | case1)
        if need.size:
            a1[need] = self.terms.alpha1(self.rho, c[need], need, tol=self.tol)
        p1[uni] = np.nan_to_num(a1[uni])
        a1c = np.where(np.isnan(a1), -np.inf, a1)
        below = case1 & (a1c <= self.abar)
        p1[below] = np.maximum(a1c[below], 0.0)
        stacked = case1 & ~below
        p1[stacked] = self.abar[stacked]
        from_zero = (two & np.isnan(self.abar)) | (self.modes == COMMON_ONLY)
        ch = np.flatnonzero(stacked | from_zero)
        if ch.size:
            start = np.where(stacked[ch], self.abar[ch], 0.0)
            a0 = self.terms.alpha0(self.w.split, c[ch], ch, start=start, tol=self.tol)
            p0[ch] = np.where(np.isnan(a0), 0.0, a0 - start)
        return p0, p1

    def total(self, lam: float) -> float:
        p0, p1 = self.powers(lam)
        return float(p0.sum() + p1.sum())

    def allocation(self, lam: float, budget: float) -> PowerAllocation:
        p0, p1 = self.powers(lam)
        uni = np.zeros(self.noise.z.shape)
        uni[self.noise.best, np.arange(self.noise.M)] = p1
        return PowerAllocation(p0, uni, budget)


def greedy_channel(i: int, s: LagrangeState, noise: NoiseField, w: RateWeights,
                   tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(P0, P_best)`` of channel ``i`` at price ``s.lam``.

    Below the two-layer regime (``mu >= mu0``) only the best user's unicast
    layer is used.
    """
    noise = _with_samples(noise)
    modes = np.full(noise.M, UNICAST_ONLY)
    modes[i] = TWO_LAYER
    p0, p1 = _Greedy(noise, w, modes, tol).powers(s.lam)
    return float(p0[i]), float(p1[i])


# -- waterline search -------------------------------------------------------------

def _waterfill(greedy: _Greedy, P: float, tol: float,
               lam_hint: float | None = None) -> tuple[PowerAllocation, float]:
    if not P > 0:
        raise BudgetError("power budget must be positive")
    lam_hi = greedy.lam_max()
    if not np.isfinite(lam_hi) or lam_hi <= 0:
        raise BudgetError("no channel can use power")
    t_hi = math.log(lam_hi)
    t_lo, grow = t_hi - math.log(10.0), math.log(10.0)
    if lam_hint is not None and 0 < lam_hint < lam_hi:
        t_lo, grow = math.log(lam_hint) - 1e-3, 1e-3
        t_hi = min(t_lo + 2e-3, t_hi)

    # aim at the middle of the accepted window [P (1 - tol), P]
    def excess(t):
        return (greedy.total(math.exp(t)) - P) / P + 0.5 * tol

    def accept(t, f):
        return abs(f) <= 0.5 * tol

    try:
        t, _ = monotone_search(excess, t_lo, t_hi, accept, grow=grow)
    except RootFindingError as exc:
        raise BudgetError(f"waterline search failed: {exc}") from exc
    lam = math.exp(t)
    return _spend_rest(greedy.allocation(lam, P), P), lam


def _spend_rest(alloc: PowerAllocation, P: float) -> PowerAllocation:
    """Give the power left inside the search tolerance to the top layer of the fullest channel.

    All active channels sit at the waterline, so the choice only matters
    to second order; it makes a single channel receive exactly ``P``.
    """
    rest = P - alloc.total
    if rest <= 0:
        return alloc
    i = int(np.argmax(alloc.per_channel))
    common, uni = alloc.common.copy(), alloc.unicast.copy()
    if common[i] > 0 or not np.any(uni[:, i] > 0):
        common[i] = P - (alloc.total - common[i])
    else:
        k = int(np.argmax(uni[:, i]))
        uni[k, i] = P - (alloc.total - uni[k, i])
    return PowerAllocation(common, uni, P)


def waterfill(P: float, noise: NoiseField, w: RateWeights, tol: float = WATERFILL_TOL,
              modes=None) -> PowerAllocation:
    """Greedy allocation at the price that spends the budget.

    The total allocated power is nonincreasing in the price, so the price is
    bracketed geometrically and narrowed until
    ``P (1 - tol) <= sum_i P^(i) <= P``.  ``modes`` optionally restricts
    channels to the common layer only or the unicast layer only.
    """
    noise = _with_samples(noise)
    alloc, _ = _waterfill(_Greedy(noise, w, modes), P, tol)
    return alloc


# -- split-weight minimisation -------------------------------------------------

def worst_candidates(z: np.ndarray) -> np.ndarray:
    """Users not dominated by a worse user in every channel.

    If user ``j`` has noise at least as high as user ``k`` in every channel,
    ``k``'s common rate can never be the minimum alone, and shifting split
    weight from ``k`` to ``j`` never increases the Lagrangian.
    """
    K = z.shape[0]
    keep = []
    for k in range(K):
        dominated = False
        for j in range(K):
            if j == k:
                continue
            ge = np.all(z[j] >= z[k])
            if ge and (np.any(z[j] > z[k]) or j < k):
                dominated = True
                break
        if not dominated:
            keep.append(k)
    return np.asarray(keep, dtype=int)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    r = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[r] / (r + 1.0), 0.0)


@dataclass
class _Best:
    primal: float = -np.inf
    dual: float = np.inf
    weights: RateWeights | None = None
    alloc: PowerAllocation | None = None
    report: RateReport | None = None
    evals: int = 0
    lam: float | None = None


class _Converged(Exception):
    pass


def _objective_factory(P, noise, w, modes, tol, cand, best: _Best, gap_tol):
    K = noise.K

    def evaluate(sc):
        split = np.zeros(K)
        split[cand] = project_simplex(sc)
        ww = w.with_split(split)
        alloc, lam = _waterfill(_Greedy(noise, ww, modes), P, tol, best.lam)
        best.lam = lam
        rep = replace(rates(alloc, noise, ww), lam=lam)
        lag = rep.lagrangian
        primal = w.mu0_bar * rep.r0 + w.mu * float(rep.rk.sum())
        best.evals += 1
        if primal > best.primal:
            best.primal, best.weights, best.alloc, best.report = primal, ww, alloc, rep
        best.dual = min(best.dual, lag)
        grad = w.mu0_bar * rep.r0_per_user[cand]
        return lag, grad

    def check():
        return best.dual - best.primal <= gap_tol * max(1.0, abs(best.dual))

    return evaluate, check


def _pair_descent(evaluate, converged, best: _Best, cand, rounds: int = 20,
                  xtol: float = 1e-14) -> None:
    """Exact line searches moving split weight between two users.

    Weight flows from the supported user with the highest common rate to the
    user with the lowest; along that edge the derivative of the Lagrangian is
    proportional to the rate difference and is monotone, so its zero is
    found by bisection.
    """
    split = best.weights.split[cand].copy()
    for _ in range(rounds):
        _, grad = evaluate(split)
        if converged():
            raise _Converged
        support = np.flatnonzero(split > 0)
        a = support[np.argmax(grad[support])]
        b = int(np.argmin(grad))
        if a == b:
            return
        lo, hi = 0.0, split[a]

        def moved(t):
            v = split.copy()
            v[a] -= t
            v[b] += t
            return v

        _, g_hi = evaluate(moved(hi))
        if converged():
            raise _Converged
        if g_hi[b] - g_hi[a] <= 0:
            split = moved(hi)
            continue
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            _, g = evaluate(moved(mid))
            if converged():
                raise _Converged
            if g[b] - g[a] > 0:
                hi = mid
            else:
                lo = mid
        split = moved(lo)


def optimize_mu0(P: float, noise: NoiseField, w_base: RateWeights, tol: float = WATERFILL_TOL,
                 modes=None, method: str = "slsqp", gap_tol: float = GAP_TOL,
                 maxiter: int = SIMPLEX_MAXITER, x0=None, lam_hint: float | None = None):
    """Minimise the split-weighted Lagrangian over the simplex of split weights.

    Every trial split yields a feasible allocation, and the Lagrangian at any
    split upper-bounds the achievable ``mu0_bar R0 + mu sum(R_k)``.  The
    search stops once the best allocation seen is within ``gap_tol``
    (relative) of the lowest Lagrangian seen; that allocation is returned.

    ``method`` is ``"slsqp"`` (uses the envelope gradient ``mu0_bar R0k``)
    or ``"nelder-mead"`` (derivative-free on a projected barycentric
    parametrisation).  Users that are never the common-rate bottleneck are
    dropped before the search; if a single user is the worst in every
    channel the search is skipped.  ``lam_hint`` seeds the price search.

    Returns
    -------
    (RateWeights, PowerAllocation, RateReport)
        The report carries ``"not-converged"`` in ``flags`` when the gap
        target was not met within ``maxiter`` iterations.
    """
    noise = _with_samples(noise)
    K = noise.K
    if w_base.K != K:
        raise DimensionError("weights and noise field disagree on K")
    modes_arr = np.full(noise.M, TWO_LAYER) if modes is None else np.asarray(modes)
    probe = _Greedy(noise, w_base, modes_arr)
    if not probe.uses_common:
        alloc, lam = _waterfill(probe, P, tol, lam_hint)
        return w_base, alloc, replace(rates(alloc, noise, w_base), lam=lam)
    carrying = (modes_arr == TWO_LAYER) | (modes_arr == COMMON_ONLY)
    cand = worst_candidates(noise.z[:, carrying])
    if cand.size == 1:
        split = np.zeros(K)
        split[cand[0]] = 1.0
        ww = w_base.with_split(split)
        alloc, lam = _waterfill(_Greedy(noise, ww, modes_arr), P, tol, lam_hint)
        return ww, alloc, replace(rates(alloc, noise, ww), lam=lam)

    best = _Best(lam=lam_hint)
    evaluate, converged = _objective_factory(P, noise, w_base, modes_arr, tol, cand, best, gap_tol)
    if x0 is None:
        start = np.full(cand.size, 1.0 / cand.size)
    else:
        start = project_simplex(np.asarray(x0, dtype=float)[cand] + 1e-12)

    def fun(sc):
        out = evaluate(sc)
        if converged():
            raise _Converged
        return out

    try:
        if method == "slsqp":
            minimize(fun, start, jac=True, method="SLSQP",
                     bounds=[(0.0, 1.0)] * cand.size,
                     constraints=[{"type": "eq", "fun": lambda v: v.sum() - 1.0,
                                   "jac": lambda v: np.ones_like(v)}],
                     options={"maxiter": maxiter, "ftol": 1e-15})
        elif method == "nelder-mead":
            def bary(y):
                return np.append(y, 1.0 - y.sum())

            minimize(lambda y: fun(bary(y))[0], start[:-1], method="Nelder-Mead",
                     options={"maxiter": maxiter * cand.size, "xatol": 1e-12, "fatol": 1e-15,
                              "adaptive": cand.size > 3})
        else:
            raise ValueError(f"unknown method {method!r}")
    except _Converged:
        pass
    if not converged() and method == "slsqp":
        try:
            _pair_descent(evaluate, converged, best, cand)
        except _Converged:
            pass
    flags = () if converged() else ("not-converged",)
    if flags:
        log.warning("split search stopped with relative gap %.3g after %d evaluations",
                    (best.dual - best.primal) / max(1.0, abs(best.dual)), best.evals)
    rep = replace(best.report, flags=flags)
    return best.weights, best.alloc, rep


# -- minimum common-rate constraint -------------------------------------------------

def broadcast_only(P: float, noise: NoiseField, w_base: RateWeights, tol: float = WATERFILL_TOL,
                   modes=None):
    """Max-min common rate with the whole budget on the common layer.

    With ``modes`` given, channels restricted to unicast are switched off.
    """
    if modes is None:
        bc = np.full(noise.M, COMMON_ONLY)
    else:
        bc = np.where(np.asarray(modes) == UNICAST_ONLY, OFF, COMMON_ONLY)
        if np.all(bc == OFF):
            raise InfeasibleRateError("no channel can carry the common message")
    return optimize_mu0(P, noise, w_base, tol, modes=bc)


def reward_search(solve, r0_min: float, mu0: float, rtol: float = REWARD_TOL,
                  check_monotone: bool = True):
    """Smallest common reward ``mu0_bar >= mu0`` whose optimum meets ``R0 >= r0_min``.

    ``solve(mu0_bar)`` returns ``(weights, alloc, report)``.  The accepted
    solution has ``r0_min <= R0 <= r0_min (1 + rtol)``.
    """
    cache: dict[float, tuple] = {}

    def run(t):
        if t not in cache:
            cache[t] = solve(math.exp(t))
        return cache[t]

    # aim at the middle of the accepted window [r0_min, r0_min (1 + rtol)]
    def deficit(t):
        return (r0_min - run(t)[2].r0) / r0_min + 0.5 * rtol

    def accept(t, f):
        return abs(f) <= 0.5 * rtol

    t0 = math.log(mu0)
    t, _ = monotone_search(deficit, t0, t0 + math.log(2.0), accept, grow=math.log(2.0))
    flags = []
    if check_monotone:
        pts = sorted((tt, v[2].r0) for tt, v in cache.items())
        drops = [a[1] - b[1] for a, b in zip(pts, pts[1:])]
        if drops and max(drops) > 1e-7 * max(1.0, r0_min):
            flags.append("non-monotone-reward")
            log.warning("common rate decreased by %.3g while raising the reward", max(drops))
    return math.exp(t), run(t), tuple(flags)


def bu_allocate(P: float, noise: NoiseField, constraint: BuConstraint, w_base: RateWeights,
                tol: float = REWARD_TOL, method: str = "slsqp", modes=None, broadcast=None):
    """Maximise ``mu0 R0 + mu sum(R_k)`` subject to ``R0 >= constraint.r0_min``.

    The constraint's multiplier enters as an increased common reward
    ``mu0_bar = mu0 + lambda0``; ``R0`` at the optimum is nondecreasing in
    ``mu0_bar`` so the reward is found by a monotone search.  ``modes``
    restricts channels as in :func:`waterfill` (used by the orthogonal
    baselines).  ``broadcast`` may pass a precomputed
    :func:`broadcast_only` result for the same noise field and modes.

    Returns
    -------
    (PowerAllocation, RateReport, float)
        The report's ``weighted_sum`` uses the base rewards; the last item is
        ``mu0_bar`` (``inf`` when the whole budget goes to the common layer).

    Raises
    ------
    InfeasibleRateError
        If ``r0_min`` exceeds the broadcast-only common rate.
    """
    noise = _with_samples(noise)
    r0_min = constraint.r0_min
    if r0_min > 0:
        if broadcast is None:
            broadcast = broadcast_only(P, noise, w_base, modes=modes)
        _, b_alloc, b_rep = broadcast
        if r0_min > b_rep.r0 * (1 + tol):
            raise InfeasibleRateError(
                f"r0={r0_min:.6g} exceeds broadcast-only capacity {b_rep.r0:.6g}")
        if r0_min >= b_rep.r0 * (1 - tol):
            return b_alloc, _reweigh(b_rep, b_alloc, noise, w_base), math.inf

    memo: dict[float, tuple] = {}
    last: list = []

    def solve(mu0_bar):
        mu0_bar = max(mu0_bar, w_base.mu0)
        if mu0_bar in memo:
            return memo[mu0_bar]
        hint, x0 = None, None
        if last:
            # the per-channel price lam / mu0_bar moves little between trials
            prev_bar, prev = last[-1]
            hint = prev[2].lam * mu0_bar / prev_bar if prev[2].lam else None
            x0 = prev[0].split
        out = optimize_mu0(P, noise, w_base.with_reward(mu0_bar), modes=modes, method=method,
                           x0=x0, lam_hint=hint)
        memo[mu0_bar] = out
        last.append((mu0_bar, out))
        return out

    base = solve(w_base.mu0)
    if base[2].r0 >= r0_min:
        _, alloc, rep = base
        return alloc, _reweigh(rep, alloc, noise, w_base), w_base.mu0
    mu0_bar, (_, alloc, rep), flags = reward_search(solve, r0_min, w_base.mu0, tol)
    out = _reweigh(rep, alloc, noise, w_base)
    if flags:
        out = replace(out, flags=out.flags + flags)
    return alloc, out, mu0_bar


def _reweigh(rep: RateReport, alloc: PowerAllocation, noise: NoiseField,
             w_base: RateWeights) -> RateReport:
    """Report with the caller's base rewards, keeping solver flags."""
    fresh = rates(alloc, noise, None)
    ws = w_base.mu0 * fresh.r0 + w_base.mu * float(fresh.rk.sum())
    return replace(fresh, weighted_sum=ws, flags=rep.flags, lam=rep.lam)
