"""Study templates, one per criteria variant, and a forward-inverse recovery harness."""

import warnings

import numpy as np

from frailtymeta.criteria import CriteriaVariant
from frailtymeta.exceptions import ConvergenceError
from frailtymeta.exposure import FixedWindow, LifetimeWindow
from frailtymeta.fitting import PARAM_NAMES, StudySpec, forward_spec, solve_system

LIFE = LifetimeWindow(12, 17, 14.8, 1.4)

# name -> (criteria, baseline window, aux keys to carry, relative tolerance)
TEMPLATES = {
    "Default": (CriteriaVariant(), LIFE, {}, 1e-3),
    "AtLeastOneBaseline": (CriteriaVariant("AtLeastOneBaseline"), LIFE, {}, 1e-3),
    "ZeroBaseline": (CriteriaVariant("ZeroBaseline"), LIFE, {}, 1e-3),
    "RecentGivenLifetime": (CriteriaVariant("RecentGivenLifetime", {"delta": 0.5}), LIFE, {},
                            1e-3),
    "TwoInYearOneRecent": (CriteriaVariant("TwoInYearOneRecent"), FixedWindow(1.0), {}, 1e-3),
    "EventAtEnrollmentWithPrior": (CriteriaVariant("EventAtEnrollmentWithPrior"), LIFE, {},
                                   1e-3),
    "EventAtEnrollmentWithPrior+Delta": (
        CriteriaVariant("EventAtEnrollmentWithPrior", {"Delta": 1.0}), LIFE,
        {"baseline_mean_count": 3.0}, 1e-3),
    "EventAtEnrollment": (CriteriaVariant("EventAtEnrollment"), LIFE, {}, 1e-3),
    "FirstHarmRecent": (CriteriaVariant("FirstHarmRecent"), LIFE, {}, 1e-3),
    "MedianIqrBaseline": (CriteriaVariant("MedianIqrBaseline"), LIFE,
                          {"median": 5.0, "q25": 3.0, "q75": 8.0}, 1e-2),
}

RATE_RANGE = (0.05, 2.0)
ALPHA_RANGE = (0.3, 5.0)


def template(name, n=100):
    crit, window, aux, _ = TEMPLATES[name]
    return StudySpec(f"synthetic-{name}", "SHB", n, n, 0.5, 0.5, 0.5, window,
                     FixedWindow(1.0), FixedWindow(0.5), crit, aux=aux)


def draw_truth(rng):
    lo = np.log([RATE_RANGE[0]] * 3 + [ALPHA_RANGE[0]])
    hi = np.log([RATE_RANGE[1]] * 3 + [ALPHA_RANGE[1]])
    return dict(zip(PARAM_NAMES, np.exp(rng.uniform(lo, hi)).tolist()))


def recover(name, seed):
    """Forward-evaluate at a random truth and refit; returns (max relative error, residual)."""
    rng = np.random.default_rng(seed)
    truth = draw_truth(rng)
    spec = forward_spec(truth, template(name))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            fit = solve_system(spec, compute_statistics=False)
        except ConvergenceError as exc:
            return float("inf"), exc.best.residual if exc.best else float("inf")
    err = max(abs(fit.params[k] / truth[k] - 1) for k in PARAM_NAMES)
    return err, fit.residual
