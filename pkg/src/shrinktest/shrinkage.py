"""Posterior shrinkage weights and the decision threshold they induce.

For an observation x the posterior mean of the shrinkage factor
kappa = u / (1 + u) under a variance prior pi is

    m_x = int u (1+u)^{-3/2} e^{(x^2/2) u/(1+u)} pi(u) du
          ---------------------------------------------
          int   (1+u)^{-1/2} e^{(x^2/2) u/(1+u)} pi(u) du

which depends on x only through x^2, lies in [0, 1], and is
nondecreasing in |x| (the exponential family in z = u/(1+u) has a
monotone likelihood ratio).  Rewriting e^{(x^2/2) z} as
e^{x^2/2} e^{-(x^2/2)(1-z)} and cancelling the common factor keeps both
integrands bounded, so the ratio stays overflow-free far beyond the
|x| ~ 38 where the raw form leaves double precision.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from .priors import ScaleMixturePrior
from .quadrature import DEFAULT_REL_TOL, integrate_unit_vec

__all__ = [
    "AlwaysReject",
    "NoCrossing",
    "ShrinkageCurve",
    "large_signal_threshold",
]

_BISECT_VALUE_TOL = 1e-10
_BISECT_WIDTH_TOL = 1e-12
_MONOTONE_TOL = 1e-12
_MONOTONE_GRID = 65
_TINY = 1e-300


class AlwaysReject(RuntimeError):
    """m_0 >= alpha: the rule rejects every observation."""


class NoCrossing(RuntimeError):
    """m_x stays below alpha over the whole search range."""


class ShrinkageCurve:
    """Evaluator for the shrinkage weight m_x with a cached threshold map.

    Evaluations are pure; the threshold cache is guarded by a lock so a
    curve can be shared across threads.
    """

    def __init__(self, prior: ScaleMixturePrior, quad_tolerance: float = DEFAULT_REL_TOL):
        self.prior = prior
        self.quad_tolerance = quad_tolerance
        self._threshold_cache: dict[float, float] = {}
        self._lock = threading.Lock()
        self._monotone_ok: bool | None = None
        # z-scan used to normalize the integrand scale before quadrature;
        # the complement 1-z is tracked exactly through the substitutions.
        s_sq = np.linspace(1e-8, math.sqrt(0.5), 257) ** 2
        self._scan_omz = np.concatenate([1.0 - s_sq, s_sq])
        u = np.concatenate([s_sq, 1.0 - s_sq]) / self._scan_omz
        self._scan_log_base = prior.log_density_at(u) - 1.5 * np.log(self._scan_omz)

    def weight(self, x: float) -> float:
        """m_x, the posterior mean of the shrinkage factor at observation x."""
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("observation must be finite")
        half_x_sq = 0.5 * x * x
        # Normalize by the scanned maximum so both integrals stay O(1).
        scale = float(np.max(self._scan_log_base - half_x_sq * self._scan_omz))
        log_pi = self.prior.log_density

        def integrand(z: float, one_minus: float) -> np.ndarray:
            one_minus = max(one_minus, _TINY)
            u = max(z, _TINY) / one_minus
            log_w = (
                float(log_pi(u))
                - 1.5 * math.log(one_minus)
                - half_x_sq * one_minus
                - scale
            )
            # The cap is reachable only inside an integrable endpoint spike
            # whose contribution the sqrt substitution already tames.
            if log_w > 700.0:
                log_w = 700.0
            w = math.exp(log_w) if log_w > -745.0 else 0.0
            return np.array([w, z * w])

        points = ()
        if abs(x) >= 8.0:
            # The weight concentrates at z near 1 on a scale of ~(6/x)^2.
            points = (1.0 - min(0.25, 36.0 / (x * x)),)
        den, num = integrate_unit_vec(integrand, self.quad_tolerance, points)
        if den <= 0.0:
            raise ZeroDivisionError("shrinkage weight denominator underflowed")
        return float(min(max(num / den, 0.0), 1.0))

    def weights(self, xs) -> np.ndarray:
        return np.array([self.weight(x) for x in np.asarray(xs, dtype=float).ravel()])

    @property
    def threshold_cache(self) -> dict[float, float]:
        """Snapshot of the alpha -> x*(alpha) crossings computed so far."""
        with self._lock:
            return dict(self._threshold_cache)

    def posterior_mean(self, x: float) -> float:
        """Posterior mean of the signal: m_x * x (odd, contracts toward 0)."""
        return self.weight(x) * float(x)

    def search_cap(self) -> float:
        """Bisection cap tied to the universal-threshold scale sqrt(2 log(1/tau))."""
        return math.sqrt(2.0 * math.log(1.0 / self.prior.tau)) + 20.0

    def _ensure_monotone(self, cap: float) -> None:
        if self._monotone_ok:
            return
        grid = np.linspace(0.0, cap, _MONOTONE_GRID)
        vals = self.weights(grid)
        drops = np.diff(vals)
        worst = float(drops.min()) if len(drops) else 0.0
        if worst < -_MONOTONE_TOL:
            at = float(grid[int(np.argmin(drops)) + 1])
            raise RuntimeError(
                f"shrinkage weight is not monotone on [0, {cap:.3g}]: "
                f"drop of {-worst:.3e} at x={at:.6g}; refusing to bisect"
            )
        self._monotone_ok = True

    def decision_threshold(self, alpha: float) -> float:
        """The crossing x* >= 0 with m_{x*} = alpha, found by bisection.

        Raises AlwaysReject when m_0 >= alpha and NoCrossing when m stays
        below alpha up to twice the search cap.
        """
        alpha = float(alpha)
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        with self._lock:
            if alpha in self._threshold_cache:
                return self._threshold_cache[alpha]
        cap = self.search_cap()
        self._ensure_monotone(cap)
        m0 = self.weight(0.0)
        if m0 >= alpha:
            raise AlwaysReject(f"m_0 = {m0:.6g} >= alpha = {alpha:.6g}")
        lo, hi = 0.0, cap
        if self.weight(hi) < alpha:
            lo, hi = hi, 2.0 * cap
            if self.weight(hi) < alpha:
                raise NoCrossing(
                    f"m_x < alpha = {alpha:.6g} for all x up to {hi:.6g}"
                )
        while hi - lo > _BISECT_WIDTH_TOL:
            mid = 0.5 * (lo + hi)
            m_mid = self.weight(mid)
            if abs(m_mid - alpha) <= _BISECT_VALUE_TOL:
                lo = hi = mid
                break
            if m_mid > alpha:
                hi = mid
            else:
                lo = mid
        x_star = 0.5 * (lo + hi)
        with self._lock:
            self._threshold_cache[alpha] = x_star
        return x_star


def large_signal_threshold(
    prior: ScaleMixturePrior, p: float | None = None, c1: float = 0.0
) -> float:
    """Magnitude beyond which the shrinkage weight is guaranteed large.

    Returns c1 + sqrt(2 K (1 + u0) log(n/p)) from the prior's declared
    tail constants; pure arithmetic consumed by the risk bounds.
    """
    if prior.lower_exponent is None:
        raise ValueError("prior does not declare the tail exponent K")
    if c1 < 0.0:
        raise ValueError("c1 must be nonnegative")
    p = prior.p if p is None else float(p)
    if not 0.0 < p < prior.n:
        raise ValueError(f"p must lie in (0, n); got p={p}, n={prior.n}")
    k, u0 = prior.lower_exponent, prior.rv_onset
    return c1 + math.sqrt(2.0 * k * (1.0 + u0) * math.log(prior.n / p))
