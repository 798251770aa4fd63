"""Conditional moments under "clean" inclusion and exclusion criteria.

A clean criterion is one expressible through the modelled event process
alone (for example "at least one event in the last month").  Each function
below gives a closed-form probability or expectation for the screened
population.  Criteria that refer to an event "at" enrollment are handled
through their limits as the admission window shrinks to zero.

Spans are in years.  Wherever a baseline span ``t`` may be random (the
lifetime since risk onset), the functions also accept a window object and
average the conditional quantity over its length distribution, since the
reported ages describe the enrolled subjects.

Exposures enter only through products rate * span, and the helper
``_lf(alpha, x, beta)`` is log (alpha / (alpha + x)) ** (alpha + beta) at
exposure ``x``.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np
from scipy.special import gammaln

from .exceptions import (
    ConfigurationError,
    FrailtyDomainError,
    UndefinedConditionalError,
)
from .exposure import FixedWindow, expect_over_window
from .frailty import log_laplace
from .validation import (
    as_float,
    check_count,
    check_finite,
    check_nonnegative,
    check_positive,
    clamp_probability,
)

DEFAULT_SHB_RATE = 0.023  # events/year, population self-harm rate
DEFAULT_ATTEMPT_RATE = 0.005  # attempts/year
MEHLUM_DELTA = 16 / 52
_PMF_TAIL = 1e-9
_MAX_COUNT = 200_000


def _lf(alpha, x, beta=0.0):
    return log_laplace(alpha, x, beta)


def _f(alpha, x, beta=0.0):
    return np.exp(_lf(alpha, x, beta))


def _one_minus_f(alpha, x, beta=0.0):
    """1 - f at exposure x without cancellation for small x."""
    return -np.expm1(_lf(alpha, x, beta))


def _f_gap(alpha, x, y, beta=0.0):
    """f(x) - f(y) for y >= x, computed without cancellation."""
    lx = _lf(alpha, x, beta)
    return np.exp(lx) * -np.expm1(_lf(alpha, y, beta) - lx)


def _is_window(t):
    return hasattr(t, "nodes") and hasattr(t, "min_length")


def _span_min(t):
    return t.min_length if _is_window(t) else np.min(np.asarray(t, dtype=float))


def _average(fn, t):
    """fn(t) for numeric t; its expectation over the length law for a window."""
    if _is_window(t):
        return expect_over_window(fn, t)
    check_finite("t", t)
    return as_float(fn(np.asarray(t, dtype=float)))


def _ratio(num, den, what):
    den = np.asarray(den, dtype=float)
    if np.any(den <= 0):
        raise UndefinedConditionalError(f"conditioning event has probability 0 in {what}")
    return num / den


def _check_alpha_rate(alpha, *rates):
    check_positive("alpha", alpha)
    for i, r in enumerate(rates):
        check_nonnegative(f"rate[{i}]", r)


def f_beta(alpha, lambda1, beta, s):
    """(alpha / (alpha + lambda1 s)) ** (alpha + beta), defined for s > -alpha / lambda1."""
    check_positive("alpha", alpha)
    check_finite("s", s)
    x = lambda1 * np.asarray(s, dtype=float)
    if np.any(x <= -alpha):
        raise FrailtyDomainError(f"f_beta has a pole at s <= -alpha/lambda1 (s={s!r})")
    return as_float(_f(alpha, x, beta))


def f_beta_derivative(alpha, lambda1, beta, s):
    """d/ds f_beta(s) = -lambda1 (alpha + beta) / alpha * f_{beta+1}(s)."""
    return -lambda1 * (alpha + beta) / alpha * f_beta(alpha, lambda1, beta + 1, s)


def g_beta(alpha, lambda2, beta, T):
    """The follow-up analogue of f_beta at exposure lambda2 * T."""
    return f_beta(alpha, lambda2, beta, T)


# -- at least one baseline event ------------------------------------------------

def cond_ge2_given_ge1(alpha, lambda1, T1):
    """P{N >= 2 | N >= 1} for a baseline window of length T1.

    Equals 1 - lambda1 T1 f_1(T1) / (1 - f_0(T1)).
    """
    _check_alpha_rate(alpha, lambda1)

    def fn(t):
        x = lambda1 * t
        return 1.0 - _ratio(x * _f(alpha, x, 1.0), _one_minus_f(alpha, x),
                            "cond_ge2_given_ge1")

    return clamp_probability(_average(fn, T1), "cond_ge2_given_ge1")


def flup_pos_given_base_pos(alpha, lambda1, T1, lambda2, T2):
    """P{N2 > 0 | N1 > 0} for a baseline window T1 and follow-up window T2."""
    _check_alpha_rate(alpha, lambda1, lambda2)
    check_nonnegative("T2", T2)
    y = lambda2 * T2

    def fn(t):
        x = lambda1 * t
        return 1.0 - _ratio(_f_gap(alpha, y, x + y), _one_minus_f(alpha, x),
                            "flup_pos_given_base_pos")

    return clamp_probability(_average(fn, T1), "flup_pos_given_base_pos")


# -- zero baseline events -------------------------------------------------------

def zero_baseline_u2(alpha, lambda1, T1, lambda2, T2):
    """P{N2 > 0 | N1 = 0} = 1 - ((alpha + x) / (alpha + x + y)) ** alpha."""
    _check_alpha_rate(alpha, lambda1, lambda2)
    check_nonnegative("T2", T2)
    y = lambda2 * T2

    def fn(t):
        x = lambda1 * np.asarray(t, dtype=float)
        return -np.expm1(-alpha * np.log1p(y / (alpha + x)))

    return clamp_probability(_average(fn, T1), "zero_baseline_u2")


# -- recent event given a lifetime event ----------------------------------------

def recent_given_lifetime(alpha, lambda1, delta, lifetime):
    """P{event in the last ``delta`` years | at least one event since risk onset}.

    ``lifetime`` is a window (or a fixed span); delta must not exceed its
    shortest possible length.
    """
    _check_alpha_rate(alpha, lambda1)
    check_positive("delta", delta)
    if delta > _span_min(lifetime) * (1 + 1e-12):
        raise FrailtyDomainError(
            f"delta={delta} exceeds the shortest lifetime span {_span_min(lifetime)}")
    num = _one_minus_f(alpha, lambda1 * delta)

    def fn(t):
        return _ratio(num, _one_minus_f(alpha, lambda1 * np.asarray(t, dtype=float)),
                      "recent_given_lifetime")

    return clamp_probability(_average(fn, lifetime), "recent_given_lifetime")


# -- two events in a year, one of them recent -----------------------------------

def _check_nested(t, Delta):
    check_positive("Delta", Delta)
    if not _span_min(t) > Delta:
        raise FrailtyDomainError(f"need t > Delta, got t={t!r}, Delta={Delta}")


def _hazell_den(alpha, lambda1, t, Delta):
    # 1 - f0(Delta) - x f1(t) written as P{>=2 in Delta} + x (f1(Delta) - f1(t))
    x = lambda1 * Delta
    lt = lambda1 * t
    two_in_delta = _one_minus_f(alpha, x) - x * _f(alpha, x, 1.0)
    return two_in_delta + x * _f_gap(alpha, x, lt, 1.0)


def hazell_base_prob(alpha, lambda1, t=1.0, Delta=0.25):
    """P{M1 + M2 > 1, M2 > 0}: at least two events in [0, t], one in the last Delta.

    Equals 1 - f_0(Delta) - lambda1 Delta f_1(t).
    """
    _check_alpha_rate(alpha, lambda1)
    _check_nested(t, Delta)
    return clamp_probability(
        _average(lambda tt: _hazell_den(alpha, lambda1, tt, Delta), t), "hazell_base_prob")


def _hazell_joint(alpha, lambda1, lambda2, t, Delta, T):
    """P{N > 0, M1 + M2 > 1, M2 > 0}."""
    x = lambda1 * Delta
    y = lambda2 * T
    # E[e^{-yR} (1 - e^{-xR} - x R e^{-ltR})] = f0(y) - f0(x+y) - x f1(lt+y)
    zero_flup = _f_gap(alpha, y, x + y) - x * _f(alpha, lambda1 * t + y, 1.0)
    return _hazell_den(alpha, lambda1, t, Delta) - zero_flup


def hazell_flup_given_base(alpha, lambda1, lambda2, t=1.0, Delta=0.25, T=1.0):
    """P{N > 0 | M1 + M2 > 1, M2 > 0} for a follow-up window of length T."""
    _check_alpha_rate(alpha, lambda1, lambda2)
    _check_nested(t, Delta)
    check_nonnegative("T", T)

    def fn(tt):
        return _ratio(_hazell_joint(alpha, lambda1, lambda2, tt, Delta, T),
                      _hazell_den(alpha, lambda1, tt, Delta), "hazell_flup_given_base")

    return clamp_probability(_average(fn, t), "hazell_flup_given_base")


# -- event at enrollment with a prior event ---------------------------------------

def wood_expected_baseline_count(alpha, lambda1, t, Delta):
    """E[M | an event at t and at least one more in the prior Delta], M counting all events in [0, t].

    Equals lambda1 (alpha+1)/alpha (t - u f_2(Delta)) / (1 - f_1(Delta)) + 1
    with u = t - Delta.
    """
    _check_alpha_rate(alpha, lambda1)
    _check_nested(t, Delta)
    x = lambda1 * Delta
    den = _one_minus_f(alpha, x, 1.0)

    def fn(tt):
        u = tt - Delta
        return lambda1 * (alpha + 1) / alpha * _ratio(tt - u * _f(alpha, x, 2.0), den,
                                                      "wood_expected_baseline_count") + 1.0

    return _average(fn, t)


def wood_flup_rate_factor(alpha, lambda2, T, lambda1=None, Delta=None):
    """E[N | event at enrollment] = lambda2 T (alpha + 1) / alpha.

    Passing the baseline rate ``lambda1`` and prior span ``Delta`` also
    conditions on an earlier event within Delta, which multiplies the
    result by (1 - f_2(Delta)) / (1 - f_1(Delta)).
    """
    check_positive("alpha", alpha)
    check_nonnegative("lambda2", lambda2)
    check_nonnegative("T", T)
    out = lambda2 * T * (alpha + 1) / alpha
    if lambda1 is None and Delta is None:
        return float(out)
    if lambda1 is None or Delta is None:
        raise ConfigurationError("lambda1 and Delta must be given together")
    check_positive("lambda1", lambda1)
    check_positive("Delta", Delta)
    x = lambda1 * Delta
    return float(out * _one_minus_f(alpha, x, 2.0) / _one_minus_f(alpha, x, 1.0))


def cottrell_ge3_given_two(alpha, lambda1, t):
    """P{at least three events in [0, t] | an event at t and at least one before it}."""
    _check_alpha_rate(alpha, lambda1)

    def fn(tt):
        x = lambda1 * np.asarray(tt, dtype=float)
        den = _one_minus_f(alpha, x, 1.0)
        # 1 - f1(x) - x (alpha+1)/(alpha+x) f1(x) = P{>=2 in x} under the size-biased law
        num = den - x * (alpha + 1) / (alpha + x) * _f(alpha, x, 1.0)
        return _ratio(num, den, "cottrell_ge3_given_two")

    return clamp_probability(_average(fn, t), "cottrell_ge3_given_two")


def cottrell_flup_pos(alpha, lambda1, t, lambda2, T):
    """P{N > 0 | an event at t and at least one before it in [0, t]}.

    Equals (1 - f_1(t) - g_1 + h_1) / (1 - f_1(t)) with g_1, h_1 the
    exponent-(alpha+1) Laplace terms at lambda2 T and lambda1 t + lambda2 T.
    """
    _check_alpha_rate(alpha, lambda1, lambda2)
    check_nonnegative("T", T)
    y = lambda2 * T

    def fn(tt):
        x = lambda1 * np.asarray(tt, dtype=float)
        den = _one_minus_f(alpha, x, 1.0)
        num = den - _f_gap(alpha, y, x + y, 1.0)
        return _ratio(num, den, "cottrell_flup_pos")

    return clamp_probability(_average(fn, t), "cottrell_flup_pos")


# -- event at enrollment ----------------------------------------------------------

def donaldson_ge2_given_event_at_t(alpha, lambda1, t):
    """P{another event in [0, t) | an event at t} = 1 - f_1(t)."""
    _check_alpha_rate(alpha, lambda1)
    return clamp_probability(
        _average(lambda tt: _one_minus_f(alpha, lambda1 * tt, 1.0), t),
        "donaldson_ge2_given_event_at_t")


def donaldson_flup_pos_given_event_at_t(alpha, lambda2, T):
    """P{N > 0 | an event at enrollment} = 1 - (alpha / (alpha + lambda2 T)) ** (alpha + 1)."""
    _check_alpha_rate(alpha, lambda2)
    check_nonnegative("T", T)
    return clamp_probability(as_float(_one_minus_f(alpha, lambda2 * np.asarray(T, float), 1.0)),
                             "donaldson_flup_pos_given_event_at_t")


# -- recent event, first event recent ----------------------------------------------

def rossouw_probs(alpha, lambda1, t, Delta1, Delta2, lambda2, T):
    """(P{M1 = 0 | M2 > 0}, P{N > 0 | M2 > 0}).

    M1 counts events in [0, t - Delta1), M2 those in the last Delta2 years
    before enrollment and N those in follow-up.
    """
    _check_alpha_rate(alpha, lambda1, lambda2)
    check_positive("Delta2", Delta2)
    if not Delta1 > Delta2:
        raise FrailtyDomainError(f"need Delta1 > Delta2, got {Delta1}, {Delta2}")
    _check_nested(t, Delta1)
    check_nonnegative("T", T)
    x2 = lambda1 * Delta2
    den = _one_minus_f(alpha, x2)
    if den <= 0:
        raise UndefinedConditionalError("P{M2 > 0} = 0")

    def first(tt):
        a = lambda1 * (np.asarray(tt, dtype=float) - Delta1)
        return _f_gap(alpha, a, a + x2) / den

    y = lambda2 * T
    p_flup = (den - _f_gap(alpha, y, x2 + y)) / den
    return (clamp_probability(_average(first, t), "rossouw_first_recent"),
            clamp_probability(float(p_flup), "rossouw_flup_pos"))


# -- lifetime count distribution given two events with one recent --------------------

def _mehlum_log_pmf(alpha, lambda1, t, Delta, q):
    """log of P{M1 + M2 = q} - P{M1 = q, M2 = 0} for q >= 2."""
    t = np.asarray(t, dtype=float)
    s = lambda1 * t
    log_nb = (q * np.log(s) - gammaln(q + 1) + gammaln(alpha + q) - gammaln(alpha)
              + _lf(alpha, s) - q * np.log(alpha + s))
    # P{M1 = q, M2 = 0} = P{M1 + M2 = q} * ((t - Delta) / t) ** q
    return log_nb + np.log(-np.expm1(q * np.log1p(-Delta / t)))


def mehlum_pmf_table(alpha, lambda1, t, Delta=MEHLUM_DELTA, tail=_PMF_TAIL):
    """Conditional pmf of M1 + M2 given M1 + M2 > 1 and M2 > 0.

    Returns ``(q, pmf)`` with q = 2, 3, ... extended until the missing
    mass is below ``tail``.  For a random ``t`` the per-length pmfs are
    averaged with the window's quadrature weights.
    """
    _check_alpha_rate(alpha, lambda1)
    check_positive("lambda1", lambda1)
    _check_nested(t, Delta)
    if _is_window(t):
        nodes, weights = t.nodes()
    else:
        nodes, weights = np.atleast_1d(np.asarray(t, dtype=float)), np.array([1.0])
    den = _hazell_den(alpha, lambda1, nodes, Delta)
    if np.any(den <= 0):
        raise UndefinedConditionalError("P{M1 + M2 > 1, M2 > 0} = 0")
    size = 64
    while True:
        q = np.arange(2, 2 + size)
        logp = _mehlum_log_pmf(alpha, lambda1, nodes[:, None], Delta, q[None, :])
        pmf = weights @ (np.exp(logp) / den[:, None])
        if 1.0 - pmf.sum() < tail or size >= _MAX_COUNT:
            return q, pmf
        size *= 2


def mehlum_conditional_count_pmf(alpha, lambda1, t, Delta, q):
    """P{M1 + M2 = q | M1 + M2 > 1, M2 > 0} for an integer q >= 2."""
    q = check_count("q", q, minimum=2)
    _check_alpha_rate(alpha, lambda1)
    check_positive("lambda1", lambda1)
    _check_nested(t, Delta)

    def fn(tt):
        tt = np.asarray(tt, dtype=float)
        return np.exp(_mehlum_log_pmf(alpha, lambda1, tt, Delta, q)) / _hazell_den(
            alpha, lambda1, tt, Delta)

    return clamp_probability(_average(fn, t), "mehlum_conditional_count_pmf")


def pmf_quantile(q, pmf, p):
    """Smallest support point whose CDF reaches p (the integer quantile)."""
    cdf = np.cumsum(pmf)
    idx = np.searchsorted(cdf, p - 1e-12)
    return int(q[min(idx, len(q) - 1)])


def interpolated_quantile(q, pmf, p):
    """Quantile of the CDF interpolated linearly between adjacent integers.

    Agrees with ``pmf_quantile`` at the integers and varies continuously
    with the parameters, which a gradient-based solver needs.
    """
    cdf = np.concatenate([[0.0], np.cumsum(pmf)])
    support = np.concatenate([[q[0] - 1], q])
    idx = int(np.clip(np.searchsorted(cdf, p), 1, len(cdf) - 1))
    lo, hi = cdf[idx - 1], cdf[idx]
    frac = 0.0 if hi <= lo else (p - lo) / (hi - lo)
    return float(support[idx - 1] + frac)


def mehlum_quantiles(alpha, lambda1, t, Delta=MEHLUM_DELTA, probs=(0.5, 0.25, 0.75)):
    """Interpolated (median, q25, q75) of the conditional lifetime count.

    The pmf is built in blocks only as far as the largest requested
    probability.
    """
    _check_alpha_rate(alpha, lambda1)
    check_positive("lambda1", lambda1)
    _check_nested(t, Delta)
    if _is_window(t):
        nodes, weights = t.nodes()
    else:
        nodes, weights = np.atleast_1d(np.asarray(t, dtype=float)), np.array([1.0])
    den = _hazell_den(alpha, lambda1, nodes, Delta)
    if np.any(den <= 0):
        raise UndefinedConditionalError("P{M1 + M2 > 1, M2 > 0} = 0")
    target = max(probs)
    blocks, total, start, block = [], 0.0, 2, 64
    while total < target and start < _MAX_COUNT:
        q = np.arange(start, start + block)
        logp = _mehlum_log_pmf(alpha, lambda1, nodes[:, None], Delta, q[None, :])
        pmf = weights @ (np.exp(logp) / den[:, None])
        blocks.append(pmf)
        total += pmf.sum()
        start += block
        block *= 2
    pmf = np.concatenate(blocks)
    q = np.arange(2, 2 + len(pmf))
    return tuple(interpolated_quantile(q, pmf, p) for p in probs)


def mehlum_flup_rate(alpha, lambda1, lambda2, t, Delta, T):
    """E[N | M1 + M2 > 1, M2 > 0] / T, the screened follow-up event rate."""
    _check_alpha_rate(alpha, lambda1, lambda2)
    _check_nested(t, Delta)
    check_positive("T", T)
    x = lambda1 * Delta

    def fn(tt):
        lt = lambda1 * np.asarray(tt, dtype=float)
        # E[R (1 - e^{-xR}) - x R^2 e^{-lt R}]
        num = (_one_minus_f(alpha, x, 1.0)
               - x * _f(alpha, lt, 1.0) * (alpha + 1) / (alpha + lt))
        return lambda2 * _ratio(num, _hazell_den(alpha, lambda1, tt, Delta), "mehlum_flup_rate")

    return _average(fn, t)


# -- variant descriptor --------------------------------------------------------------

VARIANT_TAGS = (
    "Default",
    "AtLeastOneBaseline",
    "ZeroBaseline",
    "RecentGivenLifetime",
    "TwoInYearOneRecent",
    "EventAtEnrollmentWithPrior",
    "EventAtEnrollment",
    "FirstHarmRecent",
    "MedianIqrBaseline",
)

# parameter name -> default; None means required
_VARIANT_PARAMS = {
    "Default": {},
    "AtLeastOneBaseline": {},
    "ZeroBaseline": {},
    "RecentGivenLifetime": {"delta": 0.5},
    "TwoInYearOneRecent": {"t": 1.0, "Delta": 0.25},
    "EventAtEnrollmentWithPrior": {"Delta": None},
    "EventAtEnrollment": {},
    "FirstHarmRecent": {"Delta1": 0.25, "Delta2": 1 / 12},
    "MedianIqrBaseline": {"Delta": MEHLUM_DELTA},
}

# Variants for which EventAtEnrollmentWithPrior's Delta may be omitted:
# then the earlier event may fall anywhere in the baseline window.
_OPTIONAL = {("EventAtEnrollmentWithPrior", "Delta")}


@dataclass(frozen=True)
class CriteriaVariant:
    """A study's clean inclusion/exclusion regime.

    Parameters
    ----------
    tag : str
        One of ``VARIANT_TAGS``.
    params : mapping
        Variant spans in years (see ``_VARIANT_PARAMS`` for names and
        defaults).
    default_rate : float, optional
        Externally supplied baseline event rate.  When given, the baseline
        rate is held at this value instead of being estimated.
    """

    tag: str = "Default"
    params: Mapping[str, float] = field(default_factory=dict)
    default_rate: Optional[float] = None

    def __post_init__(self):
        if self.tag not in _VARIANT_PARAMS:
            raise ConfigurationError(f"unknown criteria variant {self.tag!r}")
        allowed = _VARIANT_PARAMS[self.tag]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ConfigurationError(f"{self.tag} does not take parameters {sorted(unknown)}")
        full = {}
        for name, default in allowed.items():
            value = self.params.get(name, default)
            if value is None and (self.tag, name) not in _OPTIONAL:
                raise ConfigurationError(f"{self.tag} requires parameter {name!r}")
            if value is not None:
                check_positive(f"{self.tag}.{name}", value)
                full[name] = float(value)
        if self.tag == "TwoInYearOneRecent" and not full["t"] > full["Delta"]:
            raise ConfigurationError("TwoInYearOneRecent needs t > Delta")
        if self.tag == "FirstHarmRecent" and not full["Delta1"] > full["Delta2"]:
            raise ConfigurationError("FirstHarmRecent needs Delta1 > Delta2")
        if self.default_rate is not None:
            check_positive("default_rate", self.default_rate)
        object.__setattr__(self, "params", MappingProxyType(full))

    def __getitem__(self, name):
        return self.params[name]

    def to_dict(self):
        out = {"tag": self.tag, "params": dict(self.params)}
        if self.default_rate is not None:
            out["default_rate"] = self.default_rate
        return out

    def check_window(self, baseline):
        """Raise if the baseline window is too short for the variant's spans."""
        shortest = baseline.min_length
        need = {"RecentGivenLifetime": "delta", "EventAtEnrollmentWithPrior": "Delta",
                "FirstHarmRecent": "Delta1", "MedianIqrBaseline": "Delta"}.get(self.tag)
        if need and need in self.params and not shortest > self.params[need] * (
                1 - 1e-12 if self.tag == "RecentGivenLifetime" else 1):
            raise ConfigurationError(
                f"{self.tag}: baseline window shorter than {need}={self.params[need]}")

    # Model statistics used by the fitting equations.  ``baseline`` is the
    # study's baseline window; ``T`` the arm's follow-up length.

    def base_statistic(self, alpha, lam, baseline):
        """Model value of the study's observed baseline proportion."""
        tag, p = self.tag, self.params
        if tag in ("Default", "ZeroBaseline"):
            return _average(lambda t: _one_minus_f(alpha, lam * t), baseline)
        if tag == "AtLeastOneBaseline":
            return cond_ge2_given_ge1(alpha, lam, baseline)
        if tag == "RecentGivenLifetime":
            return recent_given_lifetime(alpha, lam, p["delta"], baseline)
        if tag == "TwoInYearOneRecent":
            return hazell_base_prob(alpha, lam, p["t"], p["Delta"])
        if tag == "EventAtEnrollmentWithPrior":
            if "Delta" in p:
                raise ConfigurationError(
                    "with a prior span the baseline statistic is a mean count "
                    "(aux 'baseline_mean_count'), not a proportion")
            return cottrell_ge3_given_two(alpha, lam, baseline)
        if tag == "EventAtEnrollment":
            return donaldson_ge2_given_event_at_t(alpha, lam, baseline)
        if tag == "FirstHarmRecent":
            return rossouw_probs(alpha, lam, baseline, p["Delta1"], p["Delta2"], 0.0, 0.0)[0]
        raise ConfigurationError(f"{tag} has no proportion-valued baseline statistic")

    def flup_statistic(self, alpha, lam, mu, baseline, T):
        """Model value of an arm's observed follow-up proportion."""
        tag, p = self.tag, self.params
        if tag == "Default":
            return float(_one_minus_f(alpha, mu * T))
        if tag in ("AtLeastOneBaseline", "RecentGivenLifetime"):
            return flup_pos_given_base_pos(alpha, lam, baseline, mu, T)
        if tag == "ZeroBaseline":
            return zero_baseline_u2(alpha, lam, baseline, mu, T)
        if tag == "TwoInYearOneRecent":
            return hazell_flup_given_base(alpha, lam, mu, p["t"], p["Delta"], T)
        if tag == "EventAtEnrollmentWithPrior":
            span = FixedWindow(p["Delta"]) if "Delta" in p else baseline
            return cottrell_flup_pos(alpha, lam, span, mu, T)
        if tag == "EventAtEnrollment":
            return donaldson_flup_pos_given_event_at_t(alpha, mu, T)
        if tag == "FirstHarmRecent":
            return rossouw_probs(alpha, lam, baseline, p["Delta1"], p["Delta2"], mu, T)[1]
        if tag == "MedianIqrBaseline":
            return hazell_flup_given_base(alpha, lam, mu, baseline, p["Delta"], T)
        raise ConfigurationError(f"no follow-up statistic for {tag}")

    def flup_rate(self, alpha, lam, mu, baseline, T):
        """Model follow-up events per year among screened subjects (count-valued summaries)."""
        tag, p = self.tag, self.params
        if tag == "MedianIqrBaseline":
            return mehlum_flup_rate(alpha, lam, mu, baseline, p["Delta"], T)
        if tag == "EventAtEnrollmentWithPrior" and "Delta" in p:
            return wood_flup_rate_factor(alpha, mu, T, lam, p["Delta"]) / T
        if tag == "EventAtEnrollment":
            return wood_flup_rate_factor(alpha, mu, T) / T
        raise ConfigurationError(f"{tag} has no count-valued follow-up statistic")

    def baseline_mean_count(self, alpha, lam, baseline):
        if self.tag == "EventAtEnrollmentWithPrior" and "Delta" in self.params:
            return wood_expected_baseline_count(alpha, lam, baseline, self.params["Delta"])
        raise ConfigurationError(f"{self.tag} has no baseline mean-count statistic")

    def baseline_quantiles(self, alpha, lam, baseline):
        if self.tag == "MedianIqrBaseline":
            return mehlum_quantiles(alpha, lam, baseline, self.params["Delta"])
        raise ConfigurationError(f"{self.tag} has no baseline quantile statistic")
