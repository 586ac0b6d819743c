"""Risk evaluation for threshold tests: closed forms, bounds, Monte Carlo.

Under the two-group reference model every coordinate is tested with the
same two-sided cut, so the additive risk collapses to a closed form in
the per-test error rates; Monte Carlo versions cross-validate the whole
pipeline and estimate the FDR + FNR risk for fixed sparse signals.  The
bound evaluators return the leading terms of the theoretical guarantees
in terms of certified prior constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.stats import norm

from .priors import ScaleMixturePrior
from .rng import STREAM_NOISE, STREAM_TWO_GROUP, map_replicates, split_draws, substream
from .shrinkage import ShrinkageCurve, large_signal_threshold
from .testing import TwoGroupModel

__all__ = [
    "RiskReport",
    "SparseSignal",
    "flat_signal",
    "null_rejection_rate",
    "miss_probability",
    "bayes_risk_analytic",
    "oracle_risk",
    "bayes_risk_bound",
    "minimax_risk_bound",
    "separation_rate",
    "calibrate_signal_offset",
    "fdr_fnr_mc",
    "two_group_risk_mc",
    "oracle_comparison_mc",
    "TwoGroupComparison",
]

_RATE_SLACK = 1e-12


@dataclass(frozen=True)
class RiskReport:
    """Point estimates of the testing risks; None marks fields not computed.

    mc_standard_errors carries one entry per Monte Carlo field; analytic
    reports use zeros.
    """

    type1: float | None = None
    type2: float | None = None
    bayes_risk: float | None = None
    fdr: float | None = None
    fnr: float | None = None
    rsup: float | None = None
    mc_standard_errors: Mapping[str, float] = field(default_factory=dict)
    n_replicates: int = 0

    def __post_init__(self) -> None:
        for name in ("type1", "type2", "fdr", "fnr", "rsup"):
            val = getattr(self, name)
            if val is not None and not -_RATE_SLACK <= val <= (2.0 if name == "rsup" else 1.0) + _RATE_SLACK:
                raise ValueError(f"{name}={val!r} out of range")
        if self.bayes_risk is not None and self.bayes_risk < -_RATE_SLACK:
            raise ValueError("bayes_risk must be nonnegative")
        if self.fdr is not None and self.fnr is not None and self.rsup is not None:
            if not math.isclose(self.rsup, self.fdr + self.fnr, rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError("rsup must equal fdr + fnr")

    def se(self, name: str) -> float:
        return float(self.mc_standard_errors.get(name, 0.0))


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """A length-n mean vector that is exactly zero off the support."""

    n: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        support = np.asarray(self.support, dtype=int)
        values = np.asarray(self.values, dtype=float)
        if support.ndim != 1 or values.shape != support.shape:
            raise ValueError("support and values must be matching 1-d arrays")
        if len(support) > self.n:
            raise ValueError("support cannot exceed n")
        if len(support) and (support.min() < 0 or support.max() >= self.n):
            raise ValueError("support indices out of range")
        if len(np.unique(support)) != len(support):
            raise ValueError("support indices must be unique")
        if not np.all(np.isfinite(values)) or np.any(values == 0.0):
            raise ValueError("signal values must be finite and nonzero")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)

    @property
    def p_n(self) -> int:
        return len(self.support)

    def to_vector(self) -> np.ndarray:
        theta = np.zeros(self.n)
        theta[self.support] = self.values
        return theta


def flat_signal(n: int, p: int, magnitude: float) -> SparseSignal:
    """p signals of common magnitude on the first p coordinates."""
    if not 0 < p <= n:
        raise ValueError("need 0 < p <= n")
    return SparseSignal(n, np.arange(p), np.full(p, float(magnitude)))


# ---------------------------------------------------------------------------
# Closed forms and bounds
# ---------------------------------------------------------------------------

def null_rejection_rate(x_star: float) -> float:
    """Per-test type-I rate of the cut: 2 Phi(-x*) under N(0, 1)."""
    return 2.0 * float(norm.sf(x_star))


def miss_probability(x_star: float, magnitude: float, sd: float = 1.0) -> float:
    """Chance a signal of the given mean stays inside the cut."""
    return float(norm.cdf((x_star - magnitude) / sd) - norm.cdf((-x_star - magnitude) / sd))


def bayes_risk_analytic(model: TwoGroupModel, x_star: float) -> RiskReport:
    """Exact per-test error rates and additive risk for a shared cut x*.

    type1 = 2 Phi(-x*) under the null; type2 is the two-sided miss
    probability under the N(0, 1 + psi^2) signal marginal.
    """
    if x_star < 0.0:
        raise ValueError("x_star must be nonnegative")
    type1 = null_rejection_rate(x_star)
    type2 = 1.0 - 2.0 * float(norm.sf(x_star / model.alt_sd))
    risk = (model.n - model.p_n) * type1 + model.p_n * type2
    return RiskReport(
        type1=type1,
        type2=type2,
        bayes_risk=risk,
        mc_standard_errors={"type1": 0.0, "type2": 0.0, "bayes_risk": 0.0},
    )


def oracle_risk(model: TwoGroupModel) -> float:
    """Leading term of the optimal additive risk: p_n (2 Phi(sqrt(c_psi)) - 1)."""
    return model.p_n * (2.0 * float(norm.cdf(math.sqrt(model.c_psi))) - 1.0)


def _tail_term(prior: ScaleMixturePrior, c_psi: float, zeta: float = 0.0) -> float:
    if prior.lower_exponent is None:
        raise ValueError("prior does not declare the tail exponent K")
    k, u0 = prior.lower_exponent, prior.rv_onset
    arg = math.sqrt(2.0 * k * (u0 + 1.0) * (1.0 + zeta) * c_psi)
    return 2.0 * float(norm.cdf(arg)) - 1.0


def bayes_risk_bound(
    prior: ScaleMixturePrior,
    model: TwoGroupModel,
    alpha: float,
    cond3_constant: float,
    cond2_constant: float,
) -> float:
    """Leading term of the additive-risk guarantee:
    p_n (8 sqrt(pi) C / (c alpha) + 2 Phi(sqrt(2K(u0+1) c_psi)) - 1)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if cond3_constant is None or cond2_constant is None:
        raise ValueError("bound needs the certified constants C and c")
    if not cond2_constant > 0.0 or cond3_constant < 0.0:
        raise ValueError("need c > 0 and C >= 0")
    type1_term = 8.0 * math.sqrt(math.pi) * cond3_constant / (cond2_constant * alpha)
    return model.p_n * (type1_term + _tail_term(prior, model.c_psi))


def minimax_risk_bound(
    lam: float,
    alpha: float,
    cond3_constant: float,
    cond2_constant: float,
    v_n: float,
) -> float:
    """Leading term of the FDR + FNR guarantee at separation v_n:
    1 / (1 + lam alpha c / (8 C sqrt(pi))) + Phi(-v_n).

    lam is a free tuning fraction of guaranteed true discoveries.  The
    non-adaptive guarantee holds for any lam in (0, 1); its plug-in
    counterpart needs lam < Phi(v_n), so staying below that keeps the
    two bounds comparable.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not cond2_constant > 0.0 or cond3_constant < 0.0:
        raise ValueError("need c > 0 and C >= 0")
    if cond3_constant == 0.0:
        fdr_term = 0.0
    else:
        ratio = lam * alpha * cond2_constant / (8.0 * cond3_constant * math.sqrt(math.pi))
        fdr_term = 1.0 / (1.0 + ratio)
    return fdr_term + float(norm.cdf(-v_n))


def separation_rate(
    prior: ScaleMixturePrior,
    p: float | None = None,
    c1: float = 0.0,
    v_n: float = 0.0,
) -> float:
    """Smallest certified-detectable magnitude:
    c1 + sqrt(2K(u0+1) log(n/p)) + v_n."""
    if v_n < 0.0:
        raise ValueError("v_n must be nonnegative")
    return large_signal_threshold(prior, p, c1) + v_n


def calibrate_signal_offset(
    curve: ShrinkageCurve,
    alpha: float,
    n_grid: int = 256,
    x_max: float | None = None,
) -> float:
    """Empirical additive constant for the separation rate.

    Scans the weight on a grid, takes the smallest grid value T beyond
    which m_x >= alpha throughout, and returns the exceedance of T over
    the declared sqrt(2K(u0+1) log(n/p)) term (floored at zero).
    """
    x_max = x_max if x_max is not None else curve.search_cap()
    grid = np.linspace(0.0, x_max, n_grid)
    vals = curve.weights(grid)
    below = np.flatnonzero(vals < alpha)
    if len(below) == 0:
        t_grid = 0.0
    elif below[-1] == n_grid - 1:
        raise ValueError(f"m_x < alpha at the top of the grid (x={x_max:g})")
    else:
        t_grid = float(grid[below[-1] + 1])
    return max(0.0, t_grid - large_signal_threshold(curve.prior))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def fdr_fnr_mc(
    curve: ShrinkageCurve,
    signal: SparseSignal,
    alpha: float,
    replicates: int,
    seed: int,
    threads: int = 1,
) -> RiskReport:
    """FDR, FNR and their sum for a fixed signal under unit Gaussian noise.

    Each replicate draws fresh noise on its own (seed, replicate) stream;
    the false-discovery proportion uses the max(rejections, 1) convention.
    Results are bit-for-bit reproducible for a given seed and independent
    of how replicates are scheduled.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if signal.p_n == 0:
        raise ValueError("signal has no support: FNR is undefined")
    theta = signal.to_vector()
    null_mask = np.ones(signal.n, dtype=bool)
    null_mask[signal.support] = False
    x_star = curve.decision_threshold(alpha)

    def one(rep: int) -> tuple[float, float]:
        rng = substream(seed, rep, STREAM_NOISE)
        data = theta + rng.standard_normal(signal.n)
        rejected = np.abs(data) > x_star
        total = int(rejected.sum())
        fdp = float(rejected[null_mask].sum()) / max(total, 1)
        fnp = float(signal.p_n - rejected[~null_mask].sum()) / signal.p_n
        return fdp, fnp

    pairs = np.array(map_replicates(one, replicates, threads))
    fdp, fnp = pairs[:, 0], pairs[:, 1]
    ddof = 1 if replicates > 1 else 0
    root = math.sqrt(replicates)
    ses = {
        "fdr": float(fdp.std(ddof=ddof)) / root,
        "fnr": float(fnp.std(ddof=ddof)) / root,
        "rsup": float((fdp + fnp).std(ddof=ddof)) / root,
    }
    fdr, fnr = float(fdp.mean()), float(fnp.mean())
    return RiskReport(
        fdr=fdr, fnr=fnr, rsup=fdr + fnr,
        mc_standard_errors=ses, n_replicates=replicates,
    )


@dataclass(frozen=True)
class TwoGroupComparison:
    """Side-by-side Monte Carlo risks of the threshold rule and the oracle cut."""

    threshold: RiskReport
    oracle: RiskReport
    risk_diff: float       # threshold risk minus oracle risk, in risk units
    risk_diff_se: float


def _two_group_counts(
    model: TwoGroupModel, cuts: tuple[float, ...], draws: int, seed: int, threads: int, batches: int
) -> tuple[np.ndarray, np.ndarray, int, int]:
    per_batch = split_draws(draws, batches)

    def one(batch: int) -> tuple:
        m = per_batch[batch]
        if m == 0:
            return (0, 0) + (0, 0) * len(cuts) + (0, 0)
        rng = substream(seed, batch, STREAM_TWO_GROUP)
        is_signal = rng.random(m) < model.signal_fraction
        x = rng.standard_normal(m)
        x[is_signal] *= model.alt_sd
        abs_x = np.abs(x)
        out = [int(is_signal.sum()), m]
        losses = []
        for cut in cuts:
            reject = abs_x > cut
            fp = int((reject & ~is_signal).sum())
            fn = int((~reject & is_signal).sum())
            out.extend([fp, fn])
            losses.append((reject & ~is_signal) | (~reject & is_signal))
        if len(cuts) == 2:
            diff = losses[0].astype(np.int64) - losses[1].astype(np.int64)
            out.extend([int(diff.sum()), int(np.abs(diff).sum())])
        else:
            out.extend([0, 0])
        return tuple(out)

    rows = np.array(map_replicates(one, batches, threads), dtype=np.int64)
    totals = rows.sum(axis=0)
    n_signal, n_draws = int(totals[0]), int(totals[1])
    fp_fn = totals[2 : 2 + 2 * len(cuts)].reshape(len(cuts), 2)
    diff = totals[-2:]
    return fp_fn, diff, n_signal, n_draws


def _report_from_counts(
    model: TwoGroupModel, fp: int, fn: int, n_signal: int, n_draws: int
) -> RiskReport:
    n_null = n_draws - n_signal
    type1 = fp / n_null if n_null else 0.0
    type2 = fn / n_signal if n_signal else 0.0
    mean_loss = (fp + fn) / n_draws
    risk = model.n * mean_loss
    se_loss = math.sqrt(max(mean_loss * (1.0 - mean_loss), 0.0) / n_draws)
    ses = {
        "type1": math.sqrt(max(type1 * (1.0 - type1), 0.0) / n_null) if n_null else 0.0,
        "type2": math.sqrt(max(type2 * (1.0 - type2), 0.0) / n_signal) if n_signal else 0.0,
        "bayes_risk": model.n * se_loss,
    }
    return RiskReport(
        type1=type1, type2=type2, bayes_risk=risk,
        mc_standard_errors=ses, n_replicates=n_draws,
    )


def two_group_risk_mc(
    model: TwoGroupModel,
    x_star: float,
    draws: int = 10**6,
    seed: int = 0,
    threads: int = 1,
    batches: int = 64,
) -> RiskReport:
    """Monte Carlo additive risk of the cut x* under the two-group marginal."""
    fp_fn, _, n_signal, n_draws = _two_group_counts(
        model, (float(x_star),), draws, seed, threads, batches
    )
    return _report_from_counts(model, int(fp_fn[0, 0]), int(fp_fn[0, 1]), n_signal, n_draws)


def oracle_comparison_mc(
    model: TwoGroupModel,
    x_star: float,
    draws: int = 10**6,
    seed: int = 0,
    threads: int = 1,
    batches: int = 64,
) -> TwoGroupComparison:
    """Risks of the threshold cut and the oracle cut on common draws.

    The paired difference keeps its own standard error, so the oracle's
    optimality can be checked without between-run noise.
    """
    cuts = (float(x_star), model.oracle_cutoff())
    fp_fn, diff, n_signal, n_draws = _two_group_counts(
        model, cuts, draws, seed, threads, batches
    )
    thresh = _report_from_counts(model, int(fp_fn[0, 0]), int(fp_fn[0, 1]), n_signal, n_draws)
    oracle = _report_from_counts(model, int(fp_fn[1, 0]), int(fp_fn[1, 1]), n_signal, n_draws)
    mean_d = diff[0] / n_draws
    var_d = max(diff[1] / n_draws - mean_d * mean_d, 0.0)
    return TwoGroupComparison(
        threshold=thresh,
        oracle=oracle,
        risk_diff=model.n * mean_d,
        risk_diff_se=model.n * math.sqrt(var_d / n_draws),
    )
