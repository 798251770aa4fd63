"""Acceptance suite: eight end-to-end criteria at their stated tolerances.

Each criterion is a ``check_*`` function returning (passed, detail); the
tests record one PASS/FAIL line per criterion, printed in the pytest
terminal summary.  Run this file directly to print the lines without pytest.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from frailtymeta import criteria as C
from frailtymeta.bootstrap import BootstrapConfig, bootstrap_se
from frailtymeta.criteria import CriteriaVariant
from frailtymeta.exposure import FixedWindow, invert_moments, truncated_moments
from frailtymeta.fitting import (
    StudySpec,
    cohen_d,
    fit_from_params,
    forward_spec,
    marginal_relative_risk,
    nr_relative_risk,
    solve_system,
)
from frailtymeta.frailty import (
    CountLaw,
    Frailty,
    RateWindow,
    gamma_weighted_moment,
    joint_positive,
    positive_at,
    prob_count,
)
from frailtymeta.io import load_descriptors

import poisson_limits as P
import variants
from oracle_grid import all_checks
from oracles import entropy_dominance

ROOT = Path(__file__).resolve().parents[1]
RESULTS = {}


def timed(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t0


def within(value, target, tol):
    return value is not None and abs(value - target) <= tol


# -- 1 ------------------------------------------------------------------------------------

def check_1():
    f = fit_from_params(0.527, 0.908, 1.161e-10, 0.911)
    d = cohen_d(0.093, 0.465, 0.535)
    mrr = marginal_relative_risk(0.093, 0.465)
    ok = (within(f.Q_base, 0.340, 1e-3) and within(f.Q_flup_con, 0.465, 3e-3)
          and within(d, -0.695, 1e-3) and within(mrr, 0.200, 1e-3))
    return ok, (f"Q_base={f.Q_base:.4f} Q_flup_con={f.Q_flup_con:.4f} d={d:.4f} "
                f"MRR={mrr:.4f}")


# -- 2 ------------------------------------------------------------------------------------

def check_2():
    f = fit_from_params(0.012, 0.099, 0.074, 0.043)
    d = cohen_d(0.042, 0.050, 0.204)
    nrr = nr_relative_risk(0.043, 0.099, 0.074)
    ok = (within(f.Q_base, 0.010, 1e-3) and within(f.Q_flup_con, 0.050, 1e-3)
          and within(f.Q_flup_exp, 0.042, 1e-3) and within(f.mrr, 0.841, 5e-3)
          and within(d, -0.039, 1e-3) and nrr.value is None)
    return ok, (f"Q=({f.Q_base:.4f}, {f.Q_flup_con:.4f}, {f.Q_flup_exp:.4f}) "
                f"MRR={f.mrr:.4f} d={d:.4f} NRR={'NA' if nrr.value is None else nrr.value}")


# -- 3 ------------------------------------------------------------------------------------

def check_3():
    checks = all_checks()
    failed = []
    for c in checks:
        ok, value, est = c.run()
        if not ok:
            failed.append(f"{c.module}:{c.name} closed={value:.6g} mc={est.mean:.6g}"
                          f"+-{est.se:.2g}")
    modules = sorted({c.module for c in checks})
    detail = f"{len(checks) - len(failed)}/{len(checks)} checks agree ({', '.join(modules)})"
    if failed:
        detail += "; failing: " + "; ".join(failed)
    return not failed, detail


# -- 4 ------------------------------------------------------------------------------------

N_RECOVERY = 50


def check_4():
    worst, bad = {}, []
    for name, (_, _, _, tol) in variants.TEMPLATES.items():
        errs = []
        for seed in range(N_RECOVERY):
            err, res = variants.recover(name, seed)
            errs.append(err)
            if not (err <= tol and res < 1e-10):
                bad.append(f"{name}#{seed} err={err:.2g} res={res:.2g}")
        worst[name] = max(errs)
    detail = (f"{N_RECOVERY} studies x {len(worst)} variants; worst relative error "
              f"{max(worst.values()):.2g}")
    if bad:
        detail += "; failing: " + ", ".join(bad[:10])
    return not bad, detail


# -- 5 ------------------------------------------------------------------------------------

A = 1e6


def homogeneous_pairs():
    life = 3.0
    yield "prob_positive", positive_at(A, 0.8), P.positive(0.8)
    for k in (0, 1, 3):
        yield (f"prob_count k={k}", prob_count(CountLaw(Frailty(A), RateWindow(0.8, 1.5)), k),
               math.exp(-1.2) * 1.2**k / math.factorial(k))
    yield "gamma_weighted_moment", gamma_weighted_moment(A, 0.7, 2), math.exp(-0.7)
    yield "joint_positive", joint_positive(Frailty(A), 0.5, 0.5), P.positive(0.5) ** 2
    yield "cond_ge2_given_ge1", C.cond_ge2_given_ge1(A, 1.0, 1.0), P.cond_ge2_given_ge1(1.0, 1.0)
    yield ("flup_pos_given_base_pos", C.flup_pos_given_base_pos(A, 0.9, 2.0, 0.5, 1.0),
           P.positive(0.5))
    yield "zero_baseline_u2", C.zero_baseline_u2(A, 0.3, 2.0, 0.4, 1.0), P.positive(0.4)
    yield ("recent_given_lifetime", C.recent_given_lifetime(A, 0.4, 0.5, FixedWindow(life)),
           P.recent_given_lifetime(0.4, 0.5, life))
    yield "hazell_base_prob", C.hazell_base_prob(A, 2.0, 1.0, 0.25), P.hazell_base(2.0, 1.0, 0.25)
    yield ("hazell_flup_given_base", C.hazell_flup_given_base(A, 2.0, 0.8, 1.0, 0.25, 0.5),
           P.positive(0.4))
    yield ("wood_expected_baseline_count", C.wood_expected_baseline_count(A, 1.5, 3.0, 1.0),
           P.wood_baseline_count(1.5, 3.0, 1.0))
    yield "wood_flup_rate_factor", C.wood_flup_rate_factor(A, 0.7, 1.0), 0.7
    yield ("wood_flup_rate_factor with prior", C.wood_flup_rate_factor(A, 0.7, 1.0, 1.5, 1.0),
           0.7)
    yield "cottrell_ge3_given_two", C.cottrell_ge3_given_two(A, 2.0, 1.0), P.cottrell_ge3(2.0, 1.0)
    yield "cottrell_flup_pos", C.cottrell_flup_pos(A, 1.5, 2.0, 0.6, 1.0), P.positive(0.6)
    yield "donaldson_ge2", C.donaldson_ge2_given_event_at_t(A, 1.0, 1.0), P.positive(1.0)
    yield "donaldson_flup_pos", C.donaldson_flup_pos_given_event_at_t(A, 0.7, 1.0), P.positive(0.7)
    first, flup = C.rossouw_probs(A, 0.8, 4.0, 0.25, 1 / 12, 0.5, 1.0)
    yield "rossouw first_recent", first, P.rossouw_first_recent(0.8, 4.0, 0.25)
    yield "rossouw flup_pos", flup, P.positive(0.5)
    for q in (2, 4):
        yield (f"mehlum pmf q={q}", C.mehlum_conditional_count_pmf(A, 3.0, 5.0, 16 / 52, q),
               P.mehlum_pmf(3.0, 5.0, 16 / 52, q))
    yield "mehlum_flup_rate", C.mehlum_flup_rate(A, 2.0, 0.9, 1.0, 16 / 52, 0.8), 0.9


def check_5():
    bad = [(n, a, b) for n, a, b in homogeneous_pairs() if not abs(a - b) <= 1e-3]
    n = sum(1 for _ in homogeneous_pairs())
    detail = f"{n - len(bad)}/{n} alpha=1e6 evaluations match Poisson formulas"
    if bad:
        detail += "; failing: " + ", ".join(f"{n} {a:.6g} vs {b:.6g}" for n, a, b in bad)
    return not bad, detail


# -- 6 ------------------------------------------------------------------------------------

def check_6():
    worst = 0.0
    lower, upper = 12.0, 17.0
    for mu in np.linspace(12.5, 16.5, 5):
        for sigma in (0.3, 1.0, 2.5, 6.0):
            m, s = truncated_moments(mu, sigma, lower, upper)
            fit = invert_moments(m, s, lower, upper)
            m2, s2 = truncated_moments(fit.mu, fit.sigma, lower, upper)
            worst = max(worst, abs(m2 - m), abs(s2 - s))
    _, flat_sd = truncated_moments(0.0, 1e6, 0.0, 1.0)
    entropy = all(entropy_dominance(m, s, lower, upper)
                  for m, s in ((14.8, 1.4), (13.5, 1.0), (15.2, 1.6), (14.5, 0.6)))
    ok = worst < 1e-6 and abs(flat_sd - 1 / math.sqrt(12)) <= 1e-3 and entropy
    return ok, (f"round-trip worst {worst:.2g}; flat SD {flat_sd:.4f}; entropy spot checks "
                f"{'pass' if entropy else 'FAIL'}")


# -- 7 ------------------------------------------------------------------------------------

def check_7():
    n_arm = 250  # q_base pools both arms: n = 500
    truth = {"lambda": 0.5, "mu_con": 0.6, "mu_exp": 0.3, "alpha": 1.2}
    tmpl = StudySpec("default", "SHB", n_arm, n_arm, 0.5, 0.5, 0.5, FixedWindow(1.0),
                     FixedWindow(1.0), FixedWindow(1.0), CriteriaVariant())
    spec = forward_spec(truth, tmpl, r_hyp=None)
    t0 = time.perf_counter()
    fit = solve_system(spec)
    bs = bootstrap_se(fit, spec, BootstrapConfig(replicates=1000, seed=2024))
    elapsed = time.perf_counter() - t0
    q = spec.q_base
    theory = math.sqrt(q * (1 - q) / (2 * n_arm))
    rel = abs(bs.se_q_base / theory - 1)
    ok = rel <= 0.15 and elapsed < 60
    return ok, (f"se(q_base)={bs.se_q_base:.4f} vs {theory:.4f} ({rel:.1%} off); "
                f"n_failed={bs.n_failed}; full bootstrap {elapsed:.1f}s")


# -- 8 ------------------------------------------------------------------------------------

def check_8():
    specs = load_descriptors(ROOT / "descriptors" / "worked_examples.json").studies
    spec = next(s for s in specs if s.study_id == "asarnow-like")
    f = fit_from_params(0.527, 0.908, 1.161e-10, 0.911, spec)
    return f.residual <= 1e-6, f"defect norm^2 at published estimates {f.residual:.3g}"


CRITERIA = [
    (1, "parameter -> statistics, first worked example", check_1, 1.0),
    (2, "parameter -> statistics, zero-baseline worked example", check_2, 5.0),
    (3, "closed forms vs Monte Carlo oracle grid", check_3, 600.0),
    (4, "forward-inverse recovery per criteria variant", check_4, 300.0),
    (5, "homogeneous limits vs Poisson formulas", check_5, None),
    (6, "truncated-Gaussian round trip, flat limit, entropy", check_6, None),
    (7, "bootstrap calibration, n=500, B=1000", check_7, 60.0),
    (8, "four-equation defect at published estimates", check_8, None),
]


def run_criterion(number):
    _, title, fn, budget = CRITERIA[number - 1]
    ok, detail, elapsed = timed(fn)
    if budget is not None and elapsed >= budget:
        ok = False
        detail += f"; runtime {elapsed:.1f}s exceeds {budget:.0f}s"
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({elapsed:.1f}s) {detail}"
    RESULTS[number] = line
    return ok, line


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA])
def test_criterion(number):
    ok, line = run_criterion(number)
    print(line)
    assert ok, line


if __name__ == "__main__":
    for number, *_ in CRITERIA:
        print(run_criterion(number)[1], flush=True)
