"""Parametric bootstrap standard errors.

Synthetic studies are drawn from the fitted model with the study's arm
sizes and windows.  Inclusion/exclusion criteria are applied as a
rejection screen, so each synthetic sample honours them, and every
synthetic study is refitted with the same pipeline as the original.

Each replicate has its own Philox stream keyed by (seed, replicate), so
results do not depend on how replicates are spread across workers.
"""

from dataclasses import dataclass, replace
from typing import Optional, Tuple
import math
import warnings

import numpy as np

from .criteria import interpolated_quantile
from .exceptions import (
    BootstrapFailureError,
    ConfigurationError,
    ConvergenceError,
    FrailtyDomainError,
    SimulationInfeasibleError,
)
from .fitting import CONVERGED_RESIDUAL, FitResult, StudySpec, solve_system
from .validation import check_count

DELTA_SIM = 1e-3  # years; admission window for "event at enrollment" screens
MIN_ACCEPTANCE = 1e-4
_MAX_BATCH = 4_000_000  # draws per vectorised screening round
_MIN_DRAWS_FOR_RATE = 200_000
FAILURE_POLICIES = ("drop-and-count", "abort-over-threshold")


def replicate_rng(seed, replicate):
    """Generator for one replicate: Philox keyed by (seed, replicate)."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(replicate) & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 1000
    seed: int = 0
    failure_policy: str = "drop-and-count"
    max_failure_fraction: float = 0.2
    n_jobs: int = 1

    def __post_init__(self):
        check_count("replicates", self.replicates, 1)
        if self.failure_policy not in FAILURE_POLICIES:
            raise ConfigurationError(f"failure_policy must be one of {FAILURE_POLICIES}")
        if not 0 <= self.max_failure_fraction <= 1:
            raise ConfigurationError("max_failure_fraction must lie in [0, 1]")


# -- simulation -------------------------------------------------------------------

def _screen(spec, rng, R, t, lam):
    """Apply the inclusion screen to a batch of subjects.

    Returns (accepted mask, baseline value per subject, screened_base),
    where screened_base means the baseline statistic is a proportion over
    everyone screened rather than over those enrolled.
    """
    crit = spec.criteria
    tag, p = crit.tag, crit.params
    pois = rng.poisson
    rl = R * lam
    if tag == "Default":
        n = pois(rl * t)
        return np.ones(len(R), bool), (n > 0).astype(float), False
    if tag == "ZeroBaseline":
        n = pois(rl * t)
        return n == 0, (n > 0).astype(float), True
    if tag == "AtLeastOneBaseline":
        n = pois(rl * t)
        return n >= 1, (n >= 2).astype(float), False
    if tag == "RecentGivenLifetime":
        d = p["delta"]
        early, recent = pois(rl * (t - d)), pois(rl * d)
        return early + recent >= 1, (recent > 0).astype(float), False
    if tag in ("TwoInYearOneRecent", "MedianIqrBaseline"):
        D = p["Delta"]
        span = p["t"] if tag == "TwoInYearOneRecent" else t
        m1, m2 = pois(rl * (span - D)), pois(rl * D)
        acc = (m1 + m2 > 1) & (m2 > 0)
        if tag == "TwoInYearOneRecent":
            return acc, acc.astype(float), True
        return acc, (m1 + m2).astype(float), False
    if tag == "EventAtEnrollmentWithPrior":
        md = pois(rl * DELTA_SIM)
        if "Delta" in p:
            D = p["Delta"]
            early, prior = pois(rl * (t - D)), pois(rl * (D - DELTA_SIM))
            return (prior > 0) & (md > 0), (early + prior + md).astype(float), False
        prior = pois(rl * (t - DELTA_SIM))
        return (prior > 0) & (md > 0), (prior + md > 2).astype(float), False
    if tag == "EventAtEnrollment":
        md = pois(rl * DELTA_SIM)
        prior = pois(rl * (t - DELTA_SIM))
        return md > 0, (prior + md > 1).astype(float), False
    if tag == "FirstHarmRecent":
        D1, D2 = p["Delta1"], p["Delta2"]
        m1, m2 = pois(rl * (t - D1)), pois(rl * D2)
        return m2 > 0, (m1 == 0).astype(float), False
    raise ConfigurationError(f"no simulator for criteria {tag!r}")


def _simulate_arm(spec, rng, n, lam, mu, T, alpha):
    """Enroll ``n`` subjects; return enrolled arrays and screen totals.

    Each enrollee's baseline length is drawn once from the window law (the
    reported ages describe enrolled subjects); frailty and counts are then
    redrawn until the screen accepts.  For criteria whose baseline
    statistic is a proportion of everyone screened, a separate screened
    sample is drawn, as large as the number of attempts needed.
    """
    t_all = spec.baseline_window.sample(rng, n)
    base = np.empty(n)
    R_enrolled = np.empty(n)
    pending = np.arange(n)
    screened = screened_base = 0.0
    drawn = accepted = 0
    while pending.size:
        if drawn >= _MIN_DRAWS_FOR_RATE and accepted / drawn < MIN_ACCEPTANCE:
            raise SimulationInfeasibleError(
                f"{spec.study_id}: acceptance rate {accepted / drawn:.2e} below "
                f"{MIN_ACCEPTANCE:g} after {drawn} draws")
        rate = accepted / drawn if accepted else 1.0 / (1 + drawn / max(n, 1))
        k = int(min(max(np.ceil(2.0 / rate), 1), max(_MAX_BATCH // pending.size, 1)))
        who = np.repeat(pending, k)
        R = rng.gamma(alpha, 1.0 / alpha, who.size)
        acc, b, from_screen = _screen(spec, rng, R, t_all[who], lam)
        acc = acc.reshape(pending.size, k)
        first = np.argmax(acc, axis=1)
        hit = acc[np.arange(pending.size), first]
        used = np.where(hit, first + 1, k)
        drawn += int(used.sum())
        rows = np.flatnonzero(hit)
        pos = rows * k + first[rows]
        base[pending[rows]] = b[pos]
        R_enrolled[pending[rows]] = R[pos]
        accepted += rows.size
        pending = pending[~hit]
    flup = rng.poisson(R_enrolled * mu * T)
    if from_screen:
        # the screened population has the window's length law, so it is drawn
        # afresh at the realised screening size rather than reusing the attempts
        for lo in range(0, drawn, _MAX_BATCH):
            size = min(_MAX_BATCH, drawn - lo)
            R = rng.gamma(alpha, 1.0 / alpha, size)
            _, b, _ = _screen(spec, rng, R, spec.baseline_window.sample(rng, size), lam)
            screened += size
            screened_base += float(b.sum())
    return base, flup, screened, screened_base, drawn


def simulate_study(fit: FitResult, spec: StudySpec, seed=0, replicate=0):
    """A synthetic StudySpec drawn from the fitted model.

    Arm sizes, windows and criteria are taken from ``spec``; observed
    summaries are replaced by their synthetic counterparts.
    """
    rng = replicate_rng(seed, replicate)
    lam = fit.lambda_hat
    alpha = fit.alpha_hat
    arms = {}
    for arm, n, mu, w in (("con", spec.n_con, fit.mu_con_hat, spec.flup_window_con),
                          ("exp", spec.n_exp, fit.mu_exp_hat, spec.flup_window_exp)):
        arms[arm] = _simulate_arm(spec, rng, n, lam, mu, w.length, alpha)

    base = np.concatenate([arms["con"][0], arms["exp"][0]])
    screened = arms["con"][2] + arms["exp"][2]
    aux = {k: v for k, v in spec.aux.items() if k not in ("n_screened", "n_history")}
    changes = {}
    tag = spec.criteria.tag
    if screened:
        q_base = (arms["con"][3] + arms["exp"][3]) / screened
    else:
        q_base = float(base.mean())
    if tag == "MedianIqrBaseline":
        counts = base.astype(int)
        q = np.arange(2, counts.max() + 1)
        pmf = np.bincount(counts, minlength=counts.max() + 1)[2:] / len(counts)
        for key, prob in (("median", 0.5), ("q25", 0.25), ("q75", 0.75)):
            aux[key] = interpolated_quantile(q, pmf, prob)
        q_base = None
    elif "baseline_mean_count" in spec.aux:
        aux["baseline_mean_count"] = float(base.mean())
        q_base = None
    if spec.criteria.default_rate is not None:
        q_base = None
    changes["q_base"] = q_base
    for arm, w in (("con", spec.flup_window_con), ("exp", spec.flup_window_exp)):
        flup = arms[arm][1]
        changes[f"q_flup_{arm}"] = float(np.mean(flup > 0))
        if f"flup_rate_{arm}" in spec.aux:
            aux[f"flup_rate_{arm}"] = float(flup.mean() / w.length)
    changes["aux"] = aux
    return replace(spec, **changes)


# -- bootstrap ------------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapResult:
    se_cohen_d: float
    se_mrr: Optional[float]
    se_nrr: Optional[float]
    n_failed: int
    n_nrr_na: int
    se_q_base: Optional[float]
    se_q_flup_con: float
    se_q_flup_exp: float
    replicates: Tuple[dict, ...]
    policy: str

    def to_dict(self):
        out = {k: getattr(self, k) for k in ("se_cohen_d", "se_mrr", "se_nrr", "n_failed",
                                             "n_nrr_na", "se_q_base", "se_q_flup_con",
                                             "se_q_flup_exp", "policy")}
        out["n_replicates"] = len(self.replicates)
        return out


def _refit(fit, synthetic):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = solve_system(synthetic, start=fit.params, n_starts=0, nm_maxiter=0)
        if out.residual >= CONVERGED_RESIDUAL:
            try:
                full = solve_system(synthetic, start=fit.params)
                if full.residual < out.residual:
                    out = full
            except ConvergenceError:
                pass
    return out


def run_replicate(fit, spec, seed, b):
    """Simulate and refit replicate ``b``; failures are reported, not raised."""
    record = {"replicate": b}
    try:
        synthetic = simulate_study(fit, spec, seed, b)
        record.update(q_base=synthetic.q_base, q_flup_con=synthetic.q_flup_con,
                      q_flup_exp=synthetic.q_flup_exp)
        refit = _refit(fit, synthetic)
    except (ConvergenceError, SimulationInfeasibleError, FrailtyDomainError,
            FloatingPointError) as exc:
        record.update(failed=True, error=f"{type(exc).__name__}: {exc}")
        return record
    record.update(failed=False, residual=refit.residual, converged=refit.converged,
                  cohen_d=refit.cohen_d, mrr=refit.mrr, nrr=refit.nrr)
    return record


def _sd(values):
    vals = np.asarray([v for v in values if v is not None and np.isfinite(v)], dtype=float)
    return float(np.std(vals, ddof=1)) if len(vals) >= 2 else None


def bootstrap_se(fit: FitResult, spec: StudySpec, config: BootstrapConfig = BootstrapConfig()):
    """Bootstrap SEs of Cohen's d, MRR and NR RR (plus the observed proportions).

    Failed replicates (simulation infeasible or refit diverged) are dropped
    and counted.  Under "abort-over-threshold" a failure fraction above
    ``max_failure_fraction`` raises BootstrapFailureError with the partial
    result; under either policy fewer than two usable replicates raises.
    NR RR values that are not available are dropped from its SE only.
    """
    if config.replicates < 2:
        raise ConfigurationError("at least two replicates are needed for a standard deviation")
    if config.n_jobs == 1:
        records = [run_replicate(fit, spec, config.seed, b) for b in range(config.replicates)]
    else:
        from joblib import Parallel, delayed

        records = Parallel(n_jobs=config.n_jobs)(
            delayed(run_replicate)(fit, spec, config.seed, b) for b in range(config.replicates))
    records.sort(key=lambda r: r["replicate"])
    ok = [r for r in records if not r["failed"]]
    n_failed = len(records) - len(ok)

    def build():
        return BootstrapResult(
            se_cohen_d=_sd(r["cohen_d"] for r in ok),
            se_mrr=_sd(r["mrr"] for r in ok),
            se_nrr=_sd(r["nrr"] for r in ok),
            n_failed=n_failed,
            n_nrr_na=sum(r["nrr"] is None for r in ok),
            se_q_base=_sd(r["q_base"] for r in records if "q_base" in r),
            se_q_flup_con=_sd(r["q_flup_con"] for r in records if "q_flup_con" in r),
            se_q_flup_exp=_sd(r["q_flup_exp"] for r in records if "q_flup_exp" in r),
            replicates=tuple(records),
            policy=config.failure_policy)

    frac = n_failed / len(records)
    if len(ok) < 2 or (config.failure_policy == "abort-over-threshold"
                       and frac > config.max_failure_fraction):
        raise BootstrapFailureError(
            f"{spec.study_id}: {n_failed} of {len(records)} replicates failed",
            partial=build() if len(ok) >= 2 else None)
    return build()
