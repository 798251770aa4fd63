import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frailtymeta import criteria as C
from frailtymeta.exceptions import ConfigurationError, FrailtyDomainError
from frailtymeta.exposure import FixedWindow, LifetimeWindow
from frailtymeta.frailty import CountLaw, Frailty, RateWindow, positive_at, prob_count

import poisson_limits as P
from oracles import Draw, conditional, fixed

HOMOGENEOUS = 1e6
LIFE = LifetimeWindow(12, 17, 14.8, 1.4)

alphas = st.floats(0.05, 50.0)
rates = st.floats(1e-3, 5.0)


def test_f_beta_identities():
    assert C.f_beta(1.3, 0.7, 2.0, 0.0) == 1.0
    a, lam, b, s, h = 1.2, 0.5, 1.0, 0.7, 1e-6
    fd = (C.f_beta(a, lam, b, s + h) - C.f_beta(a, lam, b, s - h)) / (2 * h)
    assert C.f_beta_derivative(a, lam, b, s) == pytest.approx(fd, rel=1e-6)
    assert C.f_beta(0.9, 0.6, 0.0, 1.0) == pytest.approx(
        prob_count(CountLaw(Frailty(0.9), RateWindow(0.6, 1.0)), 0), rel=1e-14)
    with pytest.raises(FrailtyDomainError):
        C.f_beta(1.0, 1.0, 0.0, -2.0)


def test_cond_ge2_examples():
    assert C.cond_ge2_given_ge1(1.0, 1e-8, 1.0) < 1e-6
    assert C.cond_ge2_given_ge1(HOMOGENEOUS, 1.0, 1.0) == pytest.approx(
        1 - math.exp(-1) / (1 - math.exp(-1)), abs=1e-3)
    assert C.cond_ge2_given_ge1(HOMOGENEOUS, 1.0, 1.0) == pytest.approx(0.4180, abs=1e-3)
    with pytest.raises(FrailtyDomainError):
        C.cond_ge2_given_ge1(1.0, 0.0, 1.0)


def test_flup_pos_given_base_pos_examples():
    assert C.flup_pos_given_base_pos(0.8, 0.9, 2.0, 0.0, 1.0) == 0.0
    assert C.flup_pos_given_base_pos(HOMOGENEOUS, 0.9, 2.0, 0.5, 1.0) == pytest.approx(
        P.positive(0.5), abs=1e-4)


def test_zero_baseline_examples():
    assert C.zero_baseline_u2(0.5, 0.3, 2.0, 0.0, 1.0) == 0.0
    assert C.zero_baseline_u2(0.5, 0.0, 2.0, 0.4, 1.0) == pytest.approx(positive_at(0.5, 0.4))


@given(alphas, rates, st.floats(0.1, 5.0), rates, st.floats(0.1, 2.0), st.floats(1.01, 3.0))
def test_zero_baseline_monotone(a, l1, T1, l2, T2, k):
    base = C.zero_baseline_u2(a, l1, T1, l2, T2)
    assert C.zero_baseline_u2(a, l1, T1, l2 * k, T2) >= base - 1e-12
    assert C.zero_baseline_u2(a, l1 * k, T1, l2, T2) <= base + 1e-12


def test_recent_given_lifetime_examples():
    assert C.recent_given_lifetime(0.9, 0.4, 2.0, FixedWindow(2.0)) == pytest.approx(1.0)
    assert C.recent_given_lifetime(HOMOGENEOUS, 0.4, 0.5, FixedWindow(3.0)) == pytest.approx(
        P.recent_given_lifetime(0.4, 0.5, 3.0), abs=1e-4)
    with pytest.raises(FrailtyDomainError):
        C.recent_given_lifetime(0.9, 0.4, 3.0, LIFE)


def test_hazell_examples():
    assert C.hazell_base_prob(1.0, 1e-9, 1.0, 0.25) < 1e-8
    assert C.hazell_base_prob(HOMOGENEOUS, 2.0, 1.0, 0.25) == pytest.approx(
        P.hazell_base(2.0, 1.0, 0.25), abs=1e-3)
    assert C.hazell_flup_given_base(0.7, 2.0, 0.0, 1.0, 0.25, 0.5) == 0.0
    vals = [C.hazell_flup_given_base(0.7, 2.0, l2, 1.0, 0.25, 0.5)
            for l2 in np.linspace(0.1, 3.0, 15)]
    assert np.all(np.diff(vals) > 0)


def test_hazell_flup_matches_simulation():
    a, l1, l2, t, D, T = 0.7, 2.0, 0.8, 1.0, 0.25, 0.5

    def fn(r, R, tt):
        m1, m2 = r.poisson(R * l1 * (tt - D)), r.poisson(R * l1 * D)
        return (m1 + m2 > 1) & (m2 > 0), r.poisson(R * l2 * T) > 0

    est = conditional(np.random.default_rng(21), 500_000, fixed(t), Draw(a, fn))
    assert est.agrees(C.hazell_flup_given_base(a, l1, l2, t, D, T))


def test_wood_examples():
    for a, lam, t, D in ((1.0, 1.5, 3.0, 1.0), (0.3, 0.2, 2.0, 0.5), (5.0, 4.0, 1.0, 0.1)):
        assert C.wood_expected_baseline_count(a, lam, t, D) >= 2.0
    assert C.wood_expected_baseline_count(HOMOGENEOUS, 1.5, 3.0, 1.0) == pytest.approx(
        P.wood_baseline_count(1.5, 3.0, 1.0), abs=1e-3)
    assert C.wood_flup_rate_factor(HOMOGENEOUS, 0.7, 1.3) == pytest.approx(0.91, abs=1e-4)
    assert C.wood_flup_rate_factor(0.5, 0.7, 1.0) == pytest.approx(3 * 0.7)
    with pytest.raises(ConfigurationError):
        C.wood_flup_rate_factor(0.5, 0.7, 1.0, lambda1=1.0)


@given(alphas, rates, st.floats(0.2, 5.0), st.floats(0.05, 0.95))
def test_wood_baseline_count_floor(a, lam, t, frac):
    assert C.wood_expected_baseline_count(a, lam, t, frac * t) >= 2.0 - 1e-9


def test_cottrell_examples():
    assert C.cottrell_ge3_given_two(1.0, 1e-6, 1.0) < 1e-5
    vals = [C.cottrell_ge3_given_two(0.8, x, 1.0) for x in np.geomspace(1e-3, 20, 25)]
    assert np.all(np.diff(vals) > 0)
    assert C.cottrell_flup_pos(0.8, 1.5, 2.0, 0.0, 1.0) == 0.0
    assert C.cottrell_flup_pos(HOMOGENEOUS, 1.5, 2.0, 0.6, 1.0) == pytest.approx(
        P.positive(0.6), abs=1e-3)
    assert C.cottrell_ge3_given_two(HOMOGENEOUS, 1.5, 2.0) == pytest.approx(
        P.cottrell_ge3(1.5, 2.0), abs=1e-3)


def test_donaldson_examples():
    assert C.donaldson_ge2_given_event_at_t(1.0, 1.0, 0.0) == 0.0
    assert C.donaldson_ge2_given_event_at_t(1.0, 1.0, 1.0) == pytest.approx(0.75)
    assert C.donaldson_flup_pos_given_event_at_t(1.0, 0.0, 1.0) == 0.0


@given(st.floats(0.05, 1e3), st.floats(1e-3, 10.0))
def test_donaldson_size_biased(a, x):
    assert C.donaldson_flup_pos_given_event_at_t(a, x, 1.0) > positive_at(a, x)


def test_rossouw_examples():
    first, flup = C.rossouw_probs(0.9, 50.0, 4.0, 0.25, 1 / 12, 0.5, 1.0)
    assert first < 1e-3
    assert C.rossouw_probs(0.9, 0.8, 4.0, 0.25, 1 / 12, 0.0, 1.0)[1] == 0.0
    first, flup = C.rossouw_probs(HOMOGENEOUS, 0.8, 4.0, 0.25, 1 / 12, 0.5, 1.0)
    assert first == pytest.approx(P.rossouw_first_recent(0.8, 4.0, 0.25), abs=1e-3)
    assert flup == pytest.approx(P.positive(0.5), abs=1e-3)
    with pytest.raises(FrailtyDomainError):
        C.rossouw_probs(0.9, 0.8, 4.0, 0.05, 0.1, 0.5, 1.0)


def test_rossouw_matches_simulation():
    a, l1, t, D1, D2, l2, T = 0.9, 0.8, 4.0, 0.25, 1 / 12, 0.5, 1.0

    def fn(r, R, tt):
        m1 = r.poisson(R * l1 * (tt - D1))
        _mid = r.poisson(R * l1 * (D1 - D2))
        m2 = r.poisson(R * l1 * D2)
        n = r.poisson(R * l2 * T)
        return m2 > 0, np.stack([m1 == 0, n > 0], axis=-1)

    first, flup = C.rossouw_probs(a, l1, t, D1, D2, l2, T)
    rng = np.random.default_rng(22)
    # two conditionals from one rejection run: encode both indicators in one value
    est_first = conditional(rng, 400_000, fixed(t), Draw(a, lambda r, R, tt: (
        lambda acc, v: (acc, v[:, 0]))(*fn(r, R, tt))))
    est_flup = conditional(rng, 400_000, fixed(t), Draw(a, lambda r, R, tt: (
        lambda acc, v: (acc, v[:, 1]))(*fn(r, R, tt))))
    assert est_first.agrees(first)
    assert est_flup.agrees(flup)


def test_mehlum_normalisation_and_limits():
    q, pmf = C.mehlum_pmf_table(1.0, 3.0, 5.0, 16 / 52)
    assert abs(pmf.sum() - 1) < 1e-6
    q, pmf = C.mehlum_pmf_table(0.6, 2.0, LIFE, 16 / 52)
    assert abs(pmf.sum() - 1) < 1e-6
    for k in (2, 3, 7):
        assert C.mehlum_conditional_count_pmf(HOMOGENEOUS, 3.0, 5.0, 16 / 52, k) == pytest.approx(
            P.mehlum_pmf(3.0, 5.0, 16 / 52, k), abs=1e-3)
    assert C.mehlum_flup_rate(0.6, 2.0, 0.0, 1.0, 16 / 52, 0.8) == 0.0
    assert C.mehlum_flup_rate(HOMOGENEOUS, 2.0, 0.9, 1.0, 16 / 52, 0.8) == pytest.approx(
        0.9, abs=1e-3)
    with pytest.raises(FrailtyDomainError):
        C.mehlum_conditional_count_pmf(1.0, 3.0, 5.0, 16 / 52, 1)


def test_mehlum_integer_quantiles_match_simulation():
    a, lam, t, D = 1.0, 3.0, 5.0, 16 / 52
    rng = np.random.default_rng(23)

    def fn(r, R, tt):
        m1, m2 = r.poisson(R * lam * (tt - D)), r.poisson(R * lam * D)
        return (m1 + m2 > 1) & (m2 > 0), m1 + m2

    # the raw conditional sample, by per-subject rejection
    t_all = np.full(1_000_000, t)
    pending = np.arange(t_all.size)
    values = np.empty(t_all.size)
    while pending.size:
        R = rng.gamma(a, 1 / a, pending.size)
        acc, val = fn(rng, R, t_all[pending])
        values[pending[acc]] = val[acc]
        pending = pending[~acc]
    q, pmf = C.mehlum_pmf_table(a, lam, t, D)
    cdf = np.cumsum(pmf)
    for p in (0.5, 0.25, 0.75):
        # the empirical CDF has SD about 4e-4 here; a probability closer than
        # this to a CDF step would make the integer a coin flip
        assert np.min(np.abs(cdf - p)) > 0.0015
        emp = np.sort(values)[int(math.ceil(p * values.size)) - 1]
        assert C.pmf_quantile(q, pmf, p) == int(emp)


def test_interpolated_quantile_agrees_at_integers():
    q = np.arange(2, 8)
    pmf = np.array([0.1, 0.2, 0.3, 0.2, 0.1, 0.1])
    cdf = np.cumsum(pmf)
    for k, c in zip(q, cdf):
        assert C.interpolated_quantile(q, pmf, c) == pytest.approx(k)
    assert C.interpolated_quantile(q, pmf, 0.45) == pytest.approx(4 + (0.45 - 0.3) / 0.3 - 1)


@settings(max_examples=40, deadline=None)
@given(alphas, rates, rates, st.floats(0.5, 5.0), st.floats(0.1, 2.0))
def test_probabilities_in_unit_interval(a, l1, l2, t, T):
    D = 0.2 * t
    vals = [
        C.cond_ge2_given_ge1(a, l1, t),
        C.flup_pos_given_base_pos(a, l1, t, l2, T),
        C.zero_baseline_u2(a, l1, t, l2, T),
        C.recent_given_lifetime(a, l1, D, FixedWindow(t)),
        C.hazell_base_prob(a, l1, t, D),
        C.hazell_flup_given_base(a, l1, l2, t, D, T),
        C.cottrell_ge3_given_two(a, l1, t),
        C.cottrell_flup_pos(a, l1, t, l2, T),
        C.donaldson_ge2_given_event_at_t(a, l1, t),
        C.donaldson_flup_pos_given_event_at_t(a, l2, T),
        *C.rossouw_probs(a, l1, t, D, 0.5 * D, l2, T),
        C.mehlum_conditional_count_pmf(a, l1, t, D, 2),
    ]
    for v in vals:
        assert -1e-9 <= v <= 1 + 1e-9


def test_variant_validation():
    with pytest.raises(ConfigurationError):
        C.CriteriaVariant("Nope")
    with pytest.raises(ConfigurationError):
        C.CriteriaVariant("Default", {"delta": 1.0})
    with pytest.raises(ConfigurationError):
        C.CriteriaVariant("TwoInYearOneRecent", {"t": 0.2, "Delta": 0.5})
    with pytest.raises(ConfigurationError):
        C.CriteriaVariant("RecentGivenLifetime", {"delta": 5.0}).check_window(FixedWindow(2.0))
    v = C.CriteriaVariant("FirstHarmRecent")
    assert v["Delta1"] == 0.25 and v.to_dict()["tag"] == "FirstHarmRecent"
    assert C.CriteriaVariant("EventAtEnrollmentWithPrior").params == {}


def test_variant_routing():
    a, lam, mu = 0.8, 0.4, 0.6
    base = FixedWindow(2.0)
    v = C.CriteriaVariant("ZeroBaseline")
    assert v.flup_statistic(a, lam, mu, base, 1.0) == C.zero_baseline_u2(a, lam, base, mu, 1.0)
    v = C.CriteriaVariant("EventAtEnrollment")
    assert v.flup_rate(a, lam, mu, base, 0.5) == pytest.approx(mu * (a + 1) / a)
    v = C.CriteriaVariant("MedianIqrBaseline")
    med, lo, hi = v.baseline_quantiles(a, lam, base)
    assert lo <= med <= hi
    with pytest.raises(ConfigurationError):
        C.CriteriaVariant("Default").baseline_quantiles(a, lam, base)
