"""Plug-in sparsity estimation and the adaptive testing pipeline.

The number of signals p is rarely known; the counting estimator
p_hat = #{i : |X_i| >= sqrt(2 log n)} (floored at one) replaces it
inside the prior before thresholding.  Verification utilities measure,
by simulation, how often the estimator stays inside the window the
adaptive risk guarantees require, and the bound evaluators extend the
non-adaptive ones with the window constants.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from .priors import ScaleMixturePrior, horseshoe_prior
from .rng import STREAM_ESTIMATOR, STREAM_TWO_GROUP, map_replicates, substream
from .risk import RiskReport
from .shrinkage import ShrinkageCurve, large_signal_threshold
from .testing import DecisionVector, TwoGroupModel, threshold_test

__all__ = [
    "SparsityEstimate",
    "simple_count_estimator",
    "horseshoe_family",
    "AdaptiveDecision",
    "adaptive_threshold_test",
    "Condition4Report",
    "verify_condition4",
    "adaptive_risk_replicates",
    "adaptive_bayes_risk_mc",
    "adaptive_bayes_risk_bound",
    "adaptive_minimax_risk_bound",
    "adaptive_separation_rate",
]

Estimator = Callable[[np.ndarray], "SparsityEstimate"]
PriorFamily = Callable[[int, float], ScaleMixturePrior]


@dataclass(frozen=True)
class SparsityEstimate:
    """An estimate of the number of signals, always in [1, n]."""

    p_hat: float
    rule_id: str
    threshold_used: float

    def __post_init__(self) -> None:
        if not self.p_hat >= 1.0:
            raise ValueError("p_hat must be at least 1")


def simple_count_estimator(data) -> SparsityEstimate:
    """Count exceedances of the universal threshold sqrt(2 log n), floor 1."""
    data = np.asarray(data, dtype=float)
    n = len(data)
    if n < 2:
        raise ValueError("need at least 2 observations")
    cut = math.sqrt(2.0 * math.log(n))
    count = int((np.abs(data) >= cut).sum())
    return SparsityEstimate(float(max(count, 1)), "simple_count", cut)


def horseshoe_family(n: int, p: float) -> ScaleMixturePrior:
    """The plug-in family used throughout: horseshoe with tau = p/n."""
    return horseshoe_prior(p / n, n, p)


@dataclass(frozen=True)
class AdaptiveDecision:
    """Decisions from the plug-in curve plus the estimate that built it."""

    decisions: DecisionVector
    estimate: SparsityEstimate


def adaptive_threshold_test(
    prior_family: PriorFamily,
    data,
    alpha: float,
    estimator: Estimator = simple_count_estimator,
    p_override: float | None = None,
) -> AdaptiveDecision:
    """Estimate p from the data, build the prior at p_hat, and threshold.

    ``p_override`` pins the plug-in value (e.g. to the true p) so the
    adaptive pipeline can be compared against the deterministic one.
    """
    data = np.asarray(data, dtype=float)
    n = len(data)
    if p_override is not None:
        estimate = SparsityEstimate(float(p_override), "override", math.nan)
    else:
        estimate = estimator(data)
    curve = ShrinkageCurve(prior_family(n, min(estimate.p_hat, n - 1)))
    decisions = threshold_test(curve, data, alpha)
    return AdaptiveDecision(
        decisions=DecisionVector(decisions.decisions, alpha, "adaptive_threshold"),
        estimate=estimate,
    )


# ---------------------------------------------------------------------------
# Estimator window verification
# ---------------------------------------------------------------------------

def _wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


@dataclass(frozen=True)
class Condition4Report:
    """Empirical frequencies of the estimator window events under the model."""

    freq_upper: float                 # p_hat <= C_u * p_n
    freq_lower: float                 # p_hat >= lower_bound_value
    ci_upper: tuple[float, float]
    ci_lower: tuple[float, float]
    target_upper: float
    target_lower: float
    passed_upper: bool
    passed_lower: bool
    lower_bound_value: float
    c_u: float
    c_d: float
    capital_c_d: float
    zeta: float
    n_replicates: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.passed_upper and self.passed_lower

    def to_record(self) -> dict:
        return {
            "freq_upper": self.freq_upper,
            "freq_lower": self.freq_lower,
            "ci_upper": list(self.ci_upper),
            "ci_lower": list(self.ci_lower),
            "target_upper": self.target_upper,
            "target_lower": self.target_lower,
            "passed_upper": self.passed_upper,
            "passed_lower": self.passed_lower,
            "passed": self.passed,
            "lower_bound_value": self.lower_bound_value,
            "c_u": self.c_u,
            "c_d": self.c_d,
            "capital_c_d": self.capital_c_d,
            "zeta": self.zeta,
            "replicates": self.n_replicates,
            "seed": self.seed,
        }


def verify_condition4(
    estimator: Estimator,
    model: TwoGroupModel,
    c_u: float = 2.0,
    c_d: float = 1.0,
    capital_c_d: float = 2.0,
    zeta: float = 0.0,
    replicates: int = 1000,
    seed: int = 0,
    threads: int = 1,
    k_exponent: float = 1.0,
    upper_margin: float = 10.0,
    lower_target: float = 0.95,
) -> Condition4Report:
    """Estimate how often the estimator stays inside its guarantee window.

    The upper event is p_hat <= c_u p_n, required with frequency at least
    1 - upper_margin * p_n / n (a finite-n surrogate for 1 - o(p_n/n));
    the lower event is p_hat >= c_d p_n (n/p_n)^{-zeta}
    e^{-capital_c_d sqrt(K log(n/p_n))}, required with frequency at least
    lower_target.
    """
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    log_ratio = math.log(model.n / model.p_n)
    lower_bound = (
        c_d
        * model.p_n
        * (model.n / model.p_n) ** (-zeta)
        * math.exp(-capital_c_d * math.sqrt(k_exponent * log_ratio))
    )
    upper_cut = c_u * model.p_n

    def one(rep: int) -> tuple[int, int]:
        # Own stream id: window checks must not recycle the risk MC draws.
        rng = substream(seed, rep, STREAM_ESTIMATOR)
        is_signal = rng.random(model.n) < model.signal_fraction
        x = rng.standard_normal(model.n)
        x[is_signal] *= model.alt_sd
        p_hat = estimator(x).p_hat
        return int(p_hat <= upper_cut), int(p_hat >= lower_bound)

    hits = np.array(map_replicates(one, replicates, threads), dtype=np.int64)
    n_upper, n_lower = int(hits[:, 0].sum()), int(hits[:, 1].sum())
    freq_upper, freq_lower = n_upper / replicates, n_lower / replicates
    target_upper = 1.0 - upper_margin * model.p_n / model.n
    return Condition4Report(
        freq_upper=freq_upper,
        freq_lower=freq_lower,
        ci_upper=_wilson_interval(n_upper, replicates),
        ci_lower=_wilson_interval(n_lower, replicates),
        target_upper=target_upper,
        target_lower=lower_target,
        passed_upper=freq_upper >= target_upper,
        passed_lower=freq_lower >= lower_target,
        lower_bound_value=lower_bound,
        c_u=c_u,
        c_d=c_d,
        capital_c_d=capital_c_d,
        zeta=zeta,
        n_replicates=replicates,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Adaptive risk: Monte Carlo and bounds
# ---------------------------------------------------------------------------

def adaptive_risk_replicates(
    prior_family: PriorFamily,
    model: TwoGroupModel,
    alpha: float,
    replicates: int,
    seed: int,
    estimator: Estimator = simple_count_estimator,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-replicate (loss count, p_hat) of the plug-in pipeline.

    Each replicate draws two-group data, re-estimates p, and counts its
    false positives plus false negatives.  Thresholds are cached per
    distinct p_hat, which the counting estimator keeps to a handful.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    cache: dict[float, float] = {}
    lock = threading.Lock()

    def cut_for(p_hat: float) -> float:
        with lock:
            if p_hat in cache:
                return cache[p_hat]
        curve = ShrinkageCurve(prior_family(model.n, min(p_hat, model.n - 1)))
        cut = curve.decision_threshold(alpha)
        with lock:
            cache[p_hat] = cut
        return cut

    def one(rep: int) -> tuple[float, float]:
        rng = substream(seed, rep, STREAM_TWO_GROUP)
        is_signal = rng.random(model.n) < model.signal_fraction
        x = rng.standard_normal(model.n)
        x[is_signal] *= model.alt_sd
        p_hat = estimator(x).p_hat
        reject = np.abs(x) > cut_for(p_hat)
        loss = float((reject & ~is_signal).sum() + (~reject & is_signal).sum())
        return loss, p_hat

    pairs = np.array(map_replicates(one, replicates, threads))
    return pairs[:, 0], pairs[:, 1]


def adaptive_bayes_risk_mc(
    prior_family: PriorFamily,
    model: TwoGroupModel,
    alpha: float,
    replicates: int,
    seed: int,
    estimator: Estimator = simple_count_estimator,
    threads: int = 1,
) -> RiskReport:
    """Additive risk of the plug-in pipeline under two-group draws."""
    losses, _ = adaptive_risk_replicates(
        prior_family, model, alpha, replicates, seed, estimator, threads
    )
    ddof = 1 if replicates > 1 else 0
    risk = float(losses.mean())
    se = float(losses.std(ddof=ddof)) / math.sqrt(replicates)
    return RiskReport(
        bayes_risk=risk,
        mc_standard_errors={"bayes_risk": se},
        n_replicates=replicates,
    )


def adaptive_bayes_risk_bound(
    prior: ScaleMixturePrior,
    model: TwoGroupModel,
    alpha: float,
    cond3_constant: float,
    cond2_constant: float,
    c_u: float,
    zeta: float = 0.0,
) -> float:
    """Adaptive additive-risk guarantee:
    p_n (8 sqrt(pi) C C^u / (c alpha) + 2 Phi(sqrt(2K(u0+1)(1+zeta) c_psi)) - 1)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not c_u > 0.0 or zeta < 0.0:
        raise ValueError("need C^u > 0 and zeta >= 0")
    if not cond2_constant > 0.0 or cond3_constant < 0.0:
        raise ValueError("need c > 0 and C >= 0")
    if prior.lower_exponent is None:
        raise ValueError("prior does not declare the tail exponent K")
    k, u0 = prior.lower_exponent, prior.rv_onset
    type1_term = 8.0 * math.sqrt(math.pi) * cond3_constant * c_u / (cond2_constant * alpha)
    tail = 2.0 * float(norm.cdf(math.sqrt(2.0 * k * (u0 + 1.0) * (1.0 + zeta) * model.c_psi))) - 1.0
    return model.p_n * (type1_term + tail)


def adaptive_minimax_risk_bound(
    lam: float,
    alpha: float,
    cond3_constant: float,
    cond2_constant: float,
    c_u: float,
    v_n: float,
) -> float:
    """Adaptive FDR + FNR guarantee:
    1 / (1 + lam alpha c / (8 C^u C sqrt(pi))) + Phi(-v_n).

    The plug-in guarantee is stated for 0 < lam < Phi(v_n); lam is
    accepted anywhere in (0, 1) and the caller owns the restriction.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    if not c_u > 0.0:
        raise ValueError("C^u must be positive")
    if not cond2_constant > 0.0 or cond3_constant < 0.0:
        raise ValueError("need c > 0 and C >= 0")
    if cond3_constant == 0.0:
        fdr_term = 0.0
    else:
        ratio = lam * alpha * cond2_constant / (8.0 * c_u * cond3_constant * math.sqrt(math.pi))
        fdr_term = 1.0 / (1.0 + ratio)
    return fdr_term + float(norm.cdf(-v_n))


def adaptive_separation_rate(
    prior: ScaleMixturePrior,
    gamma_n: float = 1.0,
    c1: float = 0.0,
    v_n: float = 0.0,
) -> float:
    """Separation rate with the plug-in floor gamma_n:
    c1 + sqrt(2K(u0+1) log(n/gamma_n)) + v_n.

    The counting estimator never drops below 1, so gamma_n = 1 is the
    defensible default; the rate then runs on log n instead of log(n/p).
    """
    if not 0.0 < gamma_n < prior.n:
        raise ValueError("gamma_n must lie in (0, n)")
    if v_n < 0.0:
        raise ValueError("v_n must be nonnegative")
    return large_signal_threshold(prior, gamma_n, c1) + v_n
