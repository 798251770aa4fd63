"""Study-level fitting: four moment equations in (lambda, mu_con, mu_exp, alpha).

The observed baseline proportion, the two follow-up proportions and a
hypothesised baseline/control-follow-up correlation are matched by the
gamma-frailty model, with each model quantity routed through the study's
inclusion/exclusion regime.  The fitted model then yields annualised
probabilities and effect statistics.
"""

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, NamedTuple, Optional, Tuple
import math
import warnings

import numpy as np
from scipy import integrate, optimize, special, stats

from .criteria import CriteriaVariant
from .exceptions import (
    ConfigurationError,
    ConvergenceError,
    FrailtyDomainError,
    UndefinedCorrelationError,
)
from .exposure import FixedWindow, LifetimeWindow
from .frailty import Frailty, counterfactual_sd_effect, model_correlation, positive_at
from .validation import check_count, check_finite, check_proportion

OUTCOMES = ("attempt", "NSSI", "SHB", "ideation-binary")
R_HYP_SET = (0.1, 0.3, 0.5)
PARAM_NAMES = ("lambda", "mu_con", "mu_exp", "alpha")

# Search box for the log-parameterised solver.
RATE_BOUNDS = (1e-12, 1e3)
ALPHA_BOUNDS = (1e-6, 1e8)
START_BOX = (1e-3, 10.0)
N_STARTS = 16
CONVERGED_RESIDUAL = 1e-10
FAILED_RESIDUAL = 1e-2
_EXACT_RESIDUAL = 1e-26  # stop the multi-start once a start solves this well
_BOUNDARY_FACTOR = 1e3  # within this factor of a bound counts as on the boundary

# aux observation keys understood by the equation builder
AUX_KEYS = ("median", "q25", "q75", "baseline_mean_count", "flup_rate_con",
            "flup_rate_exp", "n_screened", "n_history")


@dataclass(frozen=True)
class StudySpec:
    """Observed summaries of one two-arm study.

    Parameters
    ----------
    study_id : str
    outcome : str
        One of ``OUTCOMES``.
    n_con, n_exp : int
        Arm sizes.
    q_base : float or None
        Observed baseline proportion (its meaning depends on ``criteria``).
        May be None when the baseline rate is supplied externally or the
        baseline is summarised by auxiliary observations.  With
        ``n_screened`` and ``n_history`` in ``aux`` it defaults to their
        ratio.
    q_flup_con, q_flup_exp : float
        Observed follow-up proportions.
    baseline_window : FixedWindow or LifetimeWindow
    flup_window_con, flup_window_exp : FixedWindow
    criteria : CriteriaVariant
    r_hyp : float
        Hypothesised correlation of the baseline and control follow-up
        indicators over one year.
    aux : mapping
        Variant-specific summaries, keys from ``AUX_KEYS``.
    arm : str
        Label of the experimental arm when a study has several.
    """

    study_id: str
    outcome: str
    n_con: int
    n_exp: int
    q_base: Optional[float]
    q_flup_con: float
    q_flup_exp: float
    baseline_window: object
    flup_window_con: FixedWindow
    flup_window_exp: FixedWindow
    criteria: CriteriaVariant = field(default_factory=CriteriaVariant)
    r_hyp: float = 0.3
    aux: Mapping[str, float] = field(default_factory=dict)
    arm: str = "exp"

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise FrailtyDomainError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")
        object.__setattr__(self, "n_con", check_count("n_con", self.n_con, 1))
        object.__setattr__(self, "n_exp", check_count("n_exp", self.n_exp, 1))
        unknown = set(self.aux) - set(AUX_KEYS)
        if unknown:
            raise FrailtyDomainError(f"unknown aux observations {sorted(unknown)}")
        aux = {k: float(v) for k, v in self.aux.items()}
        for k, v in aux.items():
            check_finite(f"aux.{k}", v)
        q_base = self.q_base
        if q_base is None and "n_screened" in aux and "n_history" in aux:
            if not 0 <= aux["n_history"] <= aux["n_screened"] and aux["n_screened"] > 0:
                raise FrailtyDomainError("need 0 <= n_history <= n_screened")
            q_base = aux["n_history"] / aux["n_screened"]
        if q_base is not None:
            check_proportion("q_base", q_base)
            q_base = float(q_base)
        object.__setattr__(self, "q_base", q_base)
        object.__setattr__(self, "aux", MappingProxyType(aux))
        check_proportion("q_flup_con", self.q_flup_con)
        check_proportion("q_flup_exp", self.q_flup_exp)
        check_finite("r_hyp", self.r_hyp)
        if not -1 < self.r_hyp < 1:
            raise FrailtyDomainError(f"r_hyp must lie in (-1, 1), got {self.r_hyp}")
        if not isinstance(self.baseline_window, (FixedWindow, LifetimeWindow)):
            raise FrailtyDomainError("baseline_window must be a FixedWindow or LifetimeWindow")
        for name in ("flup_window_con", "flup_window_exp"):
            w = getattr(self, name)
            if not isinstance(w, FixedWindow) or w.length <= 0:
                raise FrailtyDomainError(f"{name} must be a FixedWindow of positive length")
        if not isinstance(self.criteria, CriteriaVariant):
            raise FrailtyDomainError("criteria must be a CriteriaVariant")
        self.criteria.check_window(self.baseline_window)

    def with_observations(self, **changes):
        """Copy with replaced observed summaries (used by the bootstrap)."""
        return replace(self, **changes)


class EquationSystem(NamedTuple):
    """Defect function over log-parameters of the free unknowns."""

    names: Tuple[str, ...]  # equation labels
    free: Tuple[str, ...]  # unknowns solved for
    fixed: Mapping[str, float]  # unknowns held at external values
    observed: np.ndarray
    model: object  # callable: full params dict -> model values vector
    scale: np.ndarray

    def params_from_log(self, z):
        p = dict(self.fixed)
        p.update(zip(self.free, np.exp(np.asarray(z, dtype=float))))
        return p

    def defects(self, params):
        """model - observed at a full parameter dict, scaled per equation."""
        return (np.asarray(self.model(params), dtype=float) - self.observed) / self.scale

    def __call__(self, z):
        return self.defects(self.params_from_log(z))


def build_equation_system(spec: StudySpec) -> EquationSystem:
    """Assemble the moment equations for ``spec``.

    Defects are ordered baseline equation(s), control follow-up,
    experimental follow-up, correlation.  Quantile equations are scaled
    by their observed values; all others are raw differences.
    """
    crit = spec.criteria
    base_w = spec.baseline_window
    Tc, Te = spec.flup_window_con.length, spec.flup_window_exp.length
    aux = spec.aux
    fixed = {}
    names, observed, scale, parts = [], [], [], []

    if crit.default_rate is not None:
        fixed["lambda"] = float(crit.default_rate)
        if spec.q_base is not None:
            warnings.warn(f"{spec.study_id}: baseline rate is fixed externally; "
                          "q_base is not used", stacklevel=2)
    elif crit.tag == "MedianIqrBaseline":
        if not all(k in aux for k in ("median", "q25", "q75")):
            raise ConfigurationError(f"{spec.study_id}: MedianIqrBaseline needs aux "
                                     "median, q25 and q75")
        for k in ("median", "q25", "q75"):
            names.append(k)
            observed.append(aux[k])
            scale.append(aux[k])
        parts.append(lambda p: crit.baseline_quantiles(p["alpha"], p["lambda"], base_w))
    elif "baseline_mean_count" in aux:
        names.append("baseline_mean_count")
        observed.append(aux["baseline_mean_count"])
        scale.append(1.0)
        parts.append(lambda p: [crit.baseline_mean_count(p["alpha"], p["lambda"], base_w)])
    else:
        if spec.q_base is None:
            raise ConfigurationError(f"{spec.study_id}: no baseline observation and no "
                                     "default rate")
        crit.base_statistic(1.0, 0.1, base_w)  # surfaces unsupported combinations early
        names.append("q_base")
        observed.append(spec.q_base)
        scale.append(1.0)
        parts.append(lambda p: [crit.base_statistic(p["alpha"], p["lambda"], base_w)])

    for arm, T in (("con", Tc), ("exp", Te)):
        rate_key = f"flup_rate_{arm}"
        if rate_key in aux:
            names.append(rate_key)
            observed.append(aux[rate_key])
            scale.append(1.0)
            parts.append(lambda p, arm=arm, T=T: [
                crit.flup_rate(p["alpha"], p["lambda"], p[f"mu_{arm}"], base_w, T)])
        else:
            names.append(f"q_flup_{arm}")
            observed.append(getattr(spec, f"q_flup_{arm}"))
            scale.append(1.0)
            parts.append(lambda p, arm=arm, T=T: [
                crit.flup_statistic(p["alpha"], p["lambda"], p[f"mu_{arm}"], base_w, T)])

    names.append("r")
    observed.append(spec.r_hyp)
    scale.append(1.0)
    parts.append(lambda p: [annual_correlation(p["alpha"], p["lambda"], p["mu_con"])])

    def model(p):
        out = []
        for part in parts:
            out.extend(part(p))
        return out

    free = tuple(n for n in PARAM_NAMES if n not in fixed)
    return EquationSystem(tuple(names), free, MappingProxyType(fixed),
                          np.asarray(observed, dtype=float), model,
                          np.asarray(scale, dtype=float))


def annual_correlation(alpha, lam, mu_con):
    """Phi coefficient of any baseline event and any control follow-up event, one year each."""
    try:
        return model_correlation(alpha, lam, mu_con)
    except UndefinedCorrelationError:
        return 0.0


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters, fit quality and derived statistics for one study."""

    lambda_hat: float
    mu_con_hat: float
    mu_exp_hat: float
    alpha_hat: float
    residual: float
    converged: bool
    defects: Tuple[float, ...] = ()
    equations: Tuple[str, ...] = ()
    boundary: Tuple[str, ...] = ()
    fixed: Tuple[str, ...] = ()
    Q_base: float = math.nan
    Q_flup_con: float = math.nan
    Q_flup_exp: float = math.nan
    r_check: float = math.nan
    cohen_d: float = math.nan
    sd_effect: float = math.nan
    mrr: Optional[float] = None
    nrr: Optional[float] = None
    nrr_note: str = ""
    degenerate: bool = False
    solver_trace: Tuple[dict, ...] = ()

    @property
    def params(self):
        return {"lambda": self.lambda_hat, "mu_con": self.mu_con_hat,
                "mu_exp": self.mu_exp_hat, "alpha": self.alpha_hat}

    def to_dict(self, trace=False):
        out = {k: getattr(self, k) for k in (
            "lambda_hat", "mu_con_hat", "mu_exp_hat", "alpha_hat", "residual", "converged",
            "Q_base", "Q_flup_con", "Q_flup_exp", "r_check", "cohen_d", "sd_effect", "mrr",
            "nrr", "nrr_note", "degenerate")}
        out["defects"] = list(self.defects)
        out["equations"] = list(self.equations)
        out["boundary"] = list(self.boundary)
        out["fixed"] = list(self.fixed)
        if trace:
            out["solver_trace"] = list(self.solver_trace)
        return out


def _bounds_for(free):
    lo = [math.log(ALPHA_BOUNDS[0] if n == "alpha" else RATE_BOUNDS[0]) for n in free]
    hi = [math.log(ALPHA_BOUNDS[1] if n == "alpha" else RATE_BOUNDS[1]) for n in free]
    return np.array(lo), np.array(hi)


def start_design(n_free, n_starts=N_STARTS, seed=0):
    """Fixed quasi-random starts, log-uniform over START_BOX in each coordinate."""
    sobol = stats.qmc.Sobol(d=n_free, scramble=True, seed=seed)
    u = sobol.random(n_starts)
    lo, hi = np.log(START_BOX[0]), np.log(START_BOX[1])
    return lo + u * (hi - lo)


def _safe(system, lo, hi):
    """Defect function that maps numerical failures to a large finite vector."""
    m = len(system.observed)

    def f(z):
        z = np.clip(z, lo, hi)
        try:
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore")
                d = system(z)
        except (FrailtyDomainError, FloatingPointError, ZeroDivisionError, ValueError):
            return np.full(m, 10.0)
        if not np.all(np.isfinite(d)):
            return np.full(m, 10.0)
        return d

    return f


def _polish(fun, z, lo, hi, max_nfev):
    ls = optimize.least_squares(fun, np.clip(z, lo, hi), bounds=(lo, hi), method="trf",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
                                x_scale=1.0)
    return ls.x, float(ls.fun @ ls.fun), ls.nfev


def solve_system(spec: StudySpec, *, n_starts=N_STARTS, seed=0, start=None,
                 nm_maxiter=None, max_nfev=400, compute_statistics=True):
    """Fit (lambda, mu_con, mu_exp, alpha) to the study's moment equations.

    Each start from a fixed quasi-random design is refined by Nelder-Mead on
    the squared defect norm and then by bounded damped least squares; the
    start with the smallest residual wins.  ``start`` (a parameter dict)
    is tried first, which the bootstrap uses to warm-start replicates;
    ``nm_maxiter=0`` skips the simplex stage.

    Returns a FitResult with effect statistics filled in.  Raises
    ConvergenceError when no start gets the residual below 1e-2.
    """
    system = build_equation_system(spec)
    free = system.free
    lo, hi = _bounds_for(free)
    fun = _safe(system, lo, hi)
    if nm_maxiter is None:
        nm_maxiter = 25 * len(free)

    def objective(z):
        d = fun(z)
        return float(d @ d)

    starts = []
    if start is not None:
        starts.append(np.log([start[n] for n in free]))
    starts.extend(start_design(len(free), n_starts, seed))

    trace = []
    best_z, best_res = None, math.inf
    for i, z0 in enumerate(starts):
        z_nm, f_nm, n_nm = np.asarray(z0, dtype=float), objective(z0), 1
        if nm_maxiter > 0:
            nm = optimize.minimize(objective, z0, method="Nelder-Mead",
                                   options={"maxiter": nm_maxiter, "xatol": 1e-8,
                                            "fatol": 1e-20})
            z_nm, f_nm, n_nm = nm.x, float(nm.fun), nm.nfev
        z, res, nfev = _polish(fun, z_nm, lo, hi, max_nfev)
        if res > f_nm:
            z, res = np.clip(z_nm, lo, hi), f_nm
        trace.append({"start": i, "z0": [float(v) for v in z0], "nm_fun": f_nm,
                      "residual": res, "nfev": int(n_nm + nfev)})
        if res < best_res:
            best_z, best_res = z, res
        if best_res < _EXACT_RESIDUAL:
            break

    params = {k: float(v) for k, v in system.params_from_log(best_z).items()}
    defects = system.defects(params)
    residual = float(defects @ defects)
    boundary = tuple(n for n, z, a, b in zip(free, best_z, lo, hi)
                     if z - a < math.log(_BOUNDARY_FACTOR) or b - z < math.log(_BOUNDARY_FACTOR))
    fit = FitResult(params["lambda"], params["mu_con"], params["mu_exp"], params["alpha"],
                    residual, residual < CONVERGED_RESIDUAL, tuple(float(d) for d in defects),
                    system.names, boundary, tuple(system.fixed), solver_trace=tuple(trace))
    if residual > FAILED_RESIDUAL:
        raise ConvergenceError(
            f"{spec.study_id}: best residual {residual:.3g} after {len(trace)} starts",
            best=fit, trace=trace)
    return effect_statistics(fit, spec) if compute_statistics else fit


def annualize(fit):
    """Probabilities of at least one event in one year at the fitted rates."""
    a = fit.alpha_hat
    return tuple(float(positive_at(a, r)) for r in (fit.lambda_hat, fit.mu_con_hat,
                                                   fit.mu_exp_hat))


def marginal_relative_risk(Q_exp, Q_con):
    """Q_exp / Q_con, or None when Q_con is zero."""
    return None if Q_con <= 0 else Q_exp / Q_con


def cohen_d(Q_exp, Q_con, sd_effect, positive_good=False):
    """(Q_exp - Q_con) / sd_effect.

    Negative values mean the experimental arm has fewer events.  With
    ``positive_good`` the sign is flipped for reporting.
    """
    if not sd_effect > 0:
        raise FrailtyDomainError(f"sd_effect must be > 0, got {sd_effect}")
    d = (Q_exp - Q_con) / sd_effect
    return -d if positive_good else d


class NRResult(NamedTuple):
    value: Optional[float]
    note: str


NRR_UNRESOLVED_MASS = 1e-3
NRR_RTOL = 1e-3


def nr_relative_risk(alpha, mu_con, mu_exp):
    """E_R[(1 - exp(-R mu_exp)) / (1 - exp(-R mu_con))] over R ~ Gamma(alpha, alpha).

    The per-subject ratio is evaluated in double precision.  It is declared
    not available (value None) when more than 1e-3 of the frailty mass sits
    where R * mu_con is below machine epsilon, so that the denominator is
    unresolvable, or when adaptive quadrature reports an error estimate above
    1e-3 of the value or a warning.
    """
    if mu_con <= 0:
        return NRResult(None, "mu_con is zero")
    if mu_exp == mu_con:
        return NRResult(1.0, "")
    law = stats.gamma(alpha, scale=1.0 / alpha)
    r_eps = np.finfo(float).eps / mu_con
    unresolved = float(law.cdf(r_eps))
    if unresolved > NRR_UNRESOLVED_MASS:
        return NRResult(None, f"{unresolved:.3g} of the frailty mass has R*mu_con below "
                              "machine precision")

    def ratio(r):
        return special.expm1(-r * mu_exp) / special.expm1(-r * mu_con)

    # integrate in the probability scale to tame the R**(alpha-1) spike at 0
    def integrand(u):
        return ratio(law.ppf(u))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-8,
                                          limit=200)
        except integrate.IntegrationWarning as exc:
            return NRResult(None, f"quadrature warning: {exc}")
    if not np.isfinite(value) or err > NRR_RTOL * abs(value):
        return NRResult(None, f"quadrature error {err:.3g} exceeds tolerance")
    return NRResult(float(value), "")


def effect_statistics(fit: FitResult, spec: StudySpec = None, positive_good=False):
    """Fill annualised Q's, correlation check, SD of effect, Cohen's d, MRR and NR RR."""
    Q_base, Q_con, Q_exp = annualize(fit)
    sd = counterfactual_sd_effect(Frailty(fit.alpha_hat), fit.mu_exp_hat, fit.mu_con_hat)
    d = cohen_d(Q_exp, Q_con, sd.sd, positive_good) if sd.sd > 0 else math.nan
    nrr = nr_relative_risk(fit.alpha_hat, fit.mu_con_hat, fit.mu_exp_hat)
    return replace(fit, Q_base=Q_base, Q_flup_con=Q_con, Q_flup_exp=Q_exp,
                   r_check=annual_correlation(fit.alpha_hat, fit.lambda_hat, fit.mu_con_hat),
                   cohen_d=d, sd_effect=sd.sd, mrr=marginal_relative_risk(Q_exp, Q_con),
                   nrr=nrr.value, nrr_note=nrr.note, degenerate=sd.degenerate)


def fit_from_params(lam, mu_con, mu_exp, alpha, spec: StudySpec = None):
    """A FitResult at given parameters, with defects against ``spec`` when supplied."""
    params = {"lambda": lam, "mu_con": mu_con, "mu_exp": mu_exp, "alpha": alpha}
    defects, names = (), ()
    residual = math.nan
    if spec is not None:
        system = build_equation_system(spec)
        d = system.defects(params)
        defects, names, residual = tuple(float(v) for v in d), system.names, float(d @ d)
    fit = FitResult(lam, mu_con, mu_exp, alpha, residual,
                    bool(residual < CONVERGED_RESIDUAL), defects, names)
    return effect_statistics(fit, spec)


def forward_spec(params, template: StudySpec, r_hyp=None):
    """A copy of ``template`` whose observations are the model values at ``params``.

    With ``r_hyp`` None the correlation is set to the model value too, so
    the equations hold exactly at ``params``.
    """
    system = build_equation_system(template)
    values = dict(zip(system.names, system.model(params)))
    aux = dict(template.aux)
    changes = {}
    for name, v in values.items():
        if name in ("median", "q25", "q75", "baseline_mean_count", "flup_rate_con",
                    "flup_rate_exp"):
            aux[name] = float(v)
        elif name == "r":
            changes["r_hyp"] = float(v) if r_hyp is None else r_hyp
        else:
            changes[name] = float(v)
    if "q_base" in values:
        aux.pop("n_screened", None)
        aux.pop("n_history", None)
    changes["aux"] = aux
    return replace(template, **changes)
