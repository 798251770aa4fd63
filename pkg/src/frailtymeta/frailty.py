"""Gamma-mixed Poisson (negative binomial) event-count model.

Every subject carries a latent frailty ``R ~ Gamma(alpha, rate=alpha)``
(unit mean, variance ``1/alpha``).  Given ``R``, the number of events in a
window of length ``T`` at population rate ``lam`` is Poisson with mean
``R * lam * T``.  All formulas depend on the rate and the length only
through the exposure ``s = lam * T``.

Functions accept scalars or numpy arrays for exposures and return floats
for scalar input.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .exceptions import FrailtyDomainError, UndefinedCorrelationError
from .validation import (
    as_float,
    check_count,
    check_finite,
    check_nonnegative,
    check_positive,
    clamp_probability,
)

# q values within this distance of 0 or 1 make the phi coefficient meaningless.
DEGENERATE_Q = 1e-12


@dataclass(frozen=True)
class Frailty:
    """Gamma frailty law Gamma(alpha, alpha)."""

    alpha: float

    def __post_init__(self):
        check_positive("alpha", self.alpha)

    @property
    def mean(self):
        return 1.0

    @property
    def variance(self):
        return 1.0 / self.alpha

    def sample(self, rng, size=None):
        return rng.gamma(self.alpha, 1.0 / self.alpha, size=size)


@dataclass(frozen=True)
class RateWindow:
    """A Poisson rate (events/year) observed over a window (years)."""

    rate: float
    length: float

    def __post_init__(self):
        check_nonnegative("rate", self.rate)
        check_nonnegative("length", self.length)

    @property
    def exposure(self):
        return self.rate * self.length


@dataclass(frozen=True)
class CountLaw:
    """Marginal law of the event count N for one frailty and one window."""

    frailty: Frailty
    window: RateWindow

    @property
    def alpha(self):
        return self.frailty.alpha

    @property
    def exposure(self):
        return self.window.exposure

    def sample(self, rng, size=None):
        r = self.frailty.sample(rng, size)
        return rng.poisson(r * self.exposure)


def log_laplace(alpha, s, beta=0.0):
    """log (alpha / (alpha + s)) ** (alpha + beta), stable for tiny s or huge alpha."""
    return -(alpha + beta) * np.log1p(np.asarray(s, dtype=float) / alpha)


def laplace(alpha, s, beta=0.0):
    """(alpha / (alpha + s)) ** (alpha + beta).

    With ``beta = 0`` this is E exp(-s R), the probability of no events at
    exposure ``s``.
    """
    return np.exp(log_laplace(alpha, s, beta))


def _positive_from_exposure(alpha, s):
    return -np.expm1(log_laplace(alpha, s))


def prob_positive(law: CountLaw):
    """P{N > 0} = 1 - (alpha / (alpha + lam T)) ** alpha."""
    check_finite("exposure", law.exposure)
    return as_float(_positive_from_exposure(law.alpha, law.exposure))


def positive_at(alpha, exposure):
    """prob_positive for raw (alpha, exposure) inputs; vectorised over exposure."""
    check_positive("alpha", alpha)
    check_nonnegative("exposure", exposure)
    return as_float(_positive_from_exposure(alpha, exposure))


def gamma_weighted_moment(alpha, s, k):
    """E[R**k exp(-s R)] for R ~ Gamma(alpha, alpha).

    Equals alpha**alpha * alpha (alpha+1) ... (alpha+k-1) / (alpha+s)**(alpha+k),
    evaluated in log space so large ``k`` does not overflow.
    """
    check_positive("alpha", alpha)
    check_nonnegative("s", s)
    k = check_count("k", k)
    s = np.asarray(s, dtype=float)
    log_rising = gammaln(alpha + k) - gammaln(alpha)
    # alpha**alpha / (alpha+s)**(alpha+k) = (alpha/(alpha+s))**alpha * (alpha+s)**-k
    out = log_laplace(alpha, s) - k * np.log(alpha + s) + log_rising
    return as_float(np.exp(out))


def log_count_pmf(alpha, s, k):
    """log P{N = k} at exposure ``s``; vectorised over ``s`` and ``k``."""
    s = np.asarray(s, dtype=float)
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        k_log_s = np.where(k == 0, 0.0, k * np.log(np.where(s > 0, s, 1.0)))
        k_log_s = np.where((k > 0) & (s == 0), -np.inf, k_log_s)
        return (k_log_s - gammaln(k + 1) + gammaln(alpha + k) - gammaln(alpha)
                + log_laplace(alpha, s) - k * np.log(alpha + s))


def prob_count(law: CountLaw, k):
    """P{N = k} = (lam T)**k / k! * E[R**k exp(-lam T R)]."""
    k = check_count("k", k)
    check_finite("exposure", law.exposure)
    return as_float(np.exp(log_count_pmf(law.alpha, law.exposure, k)))


def count_pmf_table(alpha, s, tail=1e-12, max_k=100_000):
    """P{N = k} for k = 0..K with K grown until the remaining mass is below ``tail``."""
    check_positive("alpha", alpha)
    check_nonnegative("s", s)
    size = 64
    while True:
        pmf = np.exp(log_count_pmf(alpha, s, np.arange(size)))
        if 1.0 - pmf.sum() < tail or size >= max_k:
            return pmf
        size *= 2


def joint_positive(frailty: Frailty, exposure1, exposure2):
    """P{N1 > 0 and N2 > 0} for two windows sharing the same frailty.

    q12 = q1 + q2 - p12 with p12 = P{N1 + N2 > 0}.
    """
    check_nonnegative("exposure1", exposure1)
    check_nonnegative("exposure2", exposure2)
    a = frailty.alpha
    e1 = np.asarray(exposure1, dtype=float)
    e2 = np.asarray(exposure2, dtype=float)
    # (1 - f(e1)) - (f(e2) - f(e1+e2)), each bracket via expm1 for tiny exposures
    log_f2 = log_laplace(a, e2)
    q1 = -np.expm1(log_laplace(a, e1))
    gap = np.exp(log_f2) * -np.expm1(log_laplace(a, e1 + e2) - log_f2)
    q12 = np.where((e1 == 0) | (e2 == 0), 0.0, q1 - gap)
    return clamp_probability(q12, "joint_positive")


def phi_correlation(q1, q2, q12):
    """Phi coefficient of two indicators with means q1, q2 and joint mean q12."""
    for name, q in (("q1", q1), ("q2", q2)):
        if not (DEGENERATE_Q < q < 1 - DEGENERATE_Q):
            raise UndefinedCorrelationError(f"{name}={q!r} makes the correlation undefined")
    lo, hi = max(0.0, q1 + q2 - 1), min(q1, q2)
    if not (lo - 1e-12 <= q12 <= hi + 1e-12):
        raise FrailtyDomainError(f"q12={q12!r} incompatible with q1={q1!r}, q2={q2!r}")
    rho = (q12 - q1 * q2) / np.sqrt(q1 * (1 - q1) * q2 * (1 - q2))
    return float(np.clip(rho, -1.0, 1.0))


def model_correlation(alpha, exposure1, exposure2):
    """Phi coefficient of {N1 > 0} and {N2 > 0} under the shared-frailty model."""
    fr = Frailty(alpha)
    q1 = positive_at(alpha, exposure1)
    q2 = positive_at(alpha, exposure2)
    return phi_correlation(q1, q2, joint_positive(fr, exposure1, exposure2))


class EffectSD(NamedTuple):
    sd: float
    correlation: float  # nan when undefined
    degenerate: bool


def counterfactual_sd_effect(frailty: Frailty, exposure_exp, exposure_con):
    """SD of 1{exp} - 1{con} when one subject counterfactually gets both arms.

    The two follow-up counts share R and are conditionally independent.
    A q within 1e-12 of 0 or 1 makes the correlation undefined; it is then
    reported as NaN, taken as 0 in the SD, and ``degenerate`` is set.
    """
    a = frailty.alpha
    q_exp = positive_at(a, exposure_exp)
    q_con = positive_at(a, exposure_con)
    v_exp, v_con = q_exp * (1 - q_exp), q_con * (1 - q_con)
    try:
        rho = phi_correlation(q_exp, q_con, joint_positive(frailty, exposure_exp, exposure_con))
        degenerate = False
    except UndefinedCorrelationError:
        rho, degenerate = float("nan"), True
    cov_term = 0.0 if degenerate else 2.0 * np.sqrt(v_exp * v_con) * rho
    var = max(v_exp + v_con - cov_term, 0.0)
    return EffectSD(float(np.sqrt(var)), rho, degenerate)
