"""Independent brute-force oracles used to validate the adaptive paths.

Everything here sticks to fixed-grid composite rules (trapezoid on
substituted or logarithmic grids) or extended precision, deliberately
avoiding the library's adaptive quadrature.
"""

import math

import numpy as np

_trapezoid = getattr(np, "trapezoid", None) or np.trapz  # numpy < 2 fallback

_TINY_S = 1e-150  # stand-in for the s = 0 node; keeps endpoint limits finite


def _substituted_grid(nodes: int):
    """s grid plus exact (z, 1-z) pairs for both halves of (0, 1)."""
    half = nodes // 2
    s = np.linspace(0.0, math.sqrt(0.5), half)
    s[0] = _TINY_S
    s_sq = s * s
    return s, (s_sq, 1.0 - s_sq), (1.0 - s_sq, s_sq)


class TrapezoidShrinkageOracle:
    """Fixed 1e6-node trapezoid for m_x on the z = u/(1+u) grid.

    Both halves of (0, 1) carry a square-root endpoint substitution; the
    base weight is evaluated once so a whole x-grid stays cheap.
    """

    def __init__(self, prior, nodes: int = 10**6):
        self.s, (self.z_lo, self.omz_lo), (self.z_hi, self.omz_hi) = _substituted_grid(nodes)
        self.log_lo = prior.log_density_at(self.z_lo / self.omz_lo) - 1.5 * np.log(self.omz_lo)
        self.log_hi = prior.log_density_at(self.z_hi / self.omz_hi) - 1.5 * np.log(self.omz_hi)
        self.jac = 2.0 * self.s

    def weight(self, x: float) -> float:
        half_x_sq = 0.5 * x * x
        lw_lo = self.log_lo - half_x_sq * self.omz_lo
        lw_hi = self.log_hi - half_x_sq * self.omz_hi
        scale = max(lw_lo.max(), lw_hi.max())
        w_lo = np.exp(lw_lo - scale) * self.jac
        w_hi = np.exp(lw_hi - scale) * self.jac
        den = _trapezoid(w_lo, self.s) + _trapezoid(w_hi, self.s)
        num = _trapezoid(w_lo * self.z_lo, self.s) + _trapezoid(w_hi * self.z_hi, self.s)
        return float(num / den)

    def bisect_threshold(self, alpha: float, lo: float = 0.0, hi: float = 50.0) -> float:
        if not self.weight(lo) < alpha <= self.weight(hi):
            raise ValueError("oracle bisection bracket does not straddle alpha")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.weight(mid) > alpha:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)


def trapezoid_mass_below(prior, cutoff: float = 1.0, nodes: int = 10**6) -> float:
    """Integral of pi over (0, cutoff) via u = t^2 on a uniform t grid."""
    t = np.linspace(0.0, math.sqrt(cutoff), nodes)
    t[0] = _TINY_S
    vals = np.exp(prior.log_density_at(t * t) + np.log(2.0 * t))
    return float(_trapezoid(vals, t))


def _log_grid_integral(f, a: float, b: float, nodes: int) -> float:
    """Trapezoid of f on a logarithmic grid over [a, b]."""
    t = np.linspace(math.log(a), math.log(b), nodes)
    u = np.exp(t)
    return float(_trapezoid(f(u) * u, t))


def condition3_constant(prior, nodes: int = 10**5, u_max: float = 1e9) -> float:
    """Intermediate-decay constant by composite log-grid trapezoid."""
    n, p = prior.n, prior.p
    nu_sq = math.log(n / p)
    nu = math.sqrt(nu_sq)
    s_n = (p / n) * nu_sq

    def pi(u):
        return np.exp(prior.log_density_at(u))

    i1_inner = _log_grid_integral(lambda u: u * pi(u), s_n, nu_sq, nodes)
    i1_tail = nu**3 * _log_grid_integral(lambda u: pi(u) / np.sqrt(u), nu_sq, u_max, nodes)
    i2 = nu * _log_grid_integral(lambda u: pi(u) / np.sqrt(u), 1.0, nu_sq, nodes)
    return (i1_inner + i1_tail + i2) / s_n


def trapezoid_normalization(prior, nodes: int = 10**6) -> float:
    """Total mass via the same substituted z grid as the shrinkage oracle."""
    s, lo, hi = _substituted_grid(nodes)
    log_jac = np.log(2.0 * s)
    total = 0.0
    for z, omz in (lo, hi):
        log_vals = prior.log_density_at(z / omz) - 2.0 * np.log(omz) + log_jac
        total += float(_trapezoid(np.exp(log_vals), s))
    return total


def _mp_weight(density, x: float, dps: int) -> float:
    from mpmath import mp, mpf, quad as mp_quad

    with mp.workdps(dps):
        xv = mpf(repr(x))

        def boost(u):
            return mp.e ** (xv * xv / 2 * u / (1 + u))

        pieces = [0, 1, 100, 10**4, mp.inf]
        num = mp_quad(lambda u: u * (1 + u) ** mpf("-1.5") * boost(u) * density(u), pieces)
        den = mp_quad(lambda u: (1 + u) ** mpf("-0.5") * boost(u) * density(u), pieces)
        return float(num / den)


def mp_shrinkage_weight(tau: float, x: float, dps: int = 40) -> float:
    """Extended-precision m_x for the horseshoe prior, raw (uncancelled) form."""
    from mpmath import mp, mpf

    t = mpf(repr(tau))
    return _mp_weight(lambda u: t / (mp.pi * mp.sqrt(u) * (t * t + u)), x, dps)


def mp_shrinkage_weight_exponential(rate: float, x: float, dps: int = 40) -> float:
    """Extended-precision m_x for the exponential variance prior."""
    from mpmath import mp, mpf

    r = mpf(repr(rate))
    return _mp_weight(lambda u: r * mp.e ** (-r * u), x, dps)


def step_up_reference(pvals, q: float):
    """Exhaustive step-up rule: try every k, keep the largest that passes."""
    pvals = np.asarray(pvals, dtype=float)
    n = len(pvals)
    order = np.argsort(pvals, kind="stable")
    ranked = pvals[order]
    best_k = 0
    for k in range(1, n + 1):
        if ranked[k - 1] <= q * k / n:
            best_k = k
    decisions = np.zeros(n, dtype=bool)
    decisions[order[:best_k]] = True
    return decisions


def posterior_odds_root(n: int, p_n: float, psi_sq: float) -> float:
    """|x| where the two-group posterior odds of a signal hit 1, by bisection."""
    from scipy.optimize import brentq

    prior_odds = p_n / (n - p_n)
    sd = math.sqrt(1.0 + psi_sq)

    def log_odds(x):
        log_lr = -0.5 * math.log1p(psi_sq) + 0.5 * x * x * psi_sq / (1.0 + psi_sq)
        return math.log(prior_odds) + log_lr

    return float(brentq(log_odds, 0.0, 100.0, xtol=1e-14, rtol=8.9e-16))
