"""Lognormal latent-variable model for quantitative ideation scores.

A subject's score in condition c is X_c = exp(Z + W_c), where the latent
Z ~ Normal(0, sigma**2) is shared by all of the subject's conditions and
the W_c ~ Normal(mu_c, tau_c**2) are independent.  The conditions are
"pre" (baseline, common to both arms), "con" and "exp" (follow-up under
control and under treatment).

Some studies enroll only subjects whose baseline score exceeds a
threshold x.  Moments of the enrolled population are then conditional on
Z + W_pre > log x, and are computed with Gauss-Hermite quadrature over Z.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional
import math

import numpy as np
from scipy import optimize
from scipy.special import log_ndtr, ndtr

from .exceptions import ConvergenceError, FrailtyDomainError
from .validation import check_count, check_finite, check_positive

CONDITIONS = ("pre", "con", "exp")
HERMITE_NODES = 64
MIN_TAIL = 1e-12
_HERMITE = {}


def _hermite(n):
    # probabilists' Hermite: weight exp(-x^2/2), normalised to a N(0, 1) expectation
    if n not in _HERMITE:
        x, w = np.polynomial.hermite_e.hermegauss(n)
        _HERMITE[n] = (x, w / w.sum())
    return _HERMITE[n]


@dataclass(frozen=True)
class LognormalLatent:
    """Seven parameters: sigma, and (mu, tau) for each condition."""

    sigma: float
    mu_pre: float
    tau_pre: float
    mu_con: float
    tau_con: float
    mu_exp: float
    tau_exp: float

    def __post_init__(self):
        check_positive("sigma", self.sigma)
        for c in CONDITIONS:
            check_finite(f"mu_{c}", getattr(self, f"mu_{c}"))
            check_positive(f"tau_{c}", getattr(self, f"tau_{c}"))

    def mu(self, condition):
        return getattr(self, f"mu_{_cond(condition)}")

    def tau(self, condition):
        return getattr(self, f"tau_{_cond(condition)}")

    def to_vector(self):
        """(log sigma, mu_pre, log tau_pre, mu_con, log tau_con, mu_exp, log tau_exp)."""
        return np.array([math.log(self.sigma), self.mu_pre, math.log(self.tau_pre),
                         self.mu_con, math.log(self.tau_con), self.mu_exp,
                         math.log(self.tau_exp)])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(math.exp(v[0]), float(v[1]), math.exp(v[2]), float(v[3]),
                   math.exp(v[4]), float(v[5]), math.exp(v[6]))

    def sample(self, rng, n):
        """Draw (X_pre, X_con, X_exp) for n subjects sharing Z across conditions."""
        z = rng.normal(0.0, self.sigma, n)
        return {c: np.exp(z + rng.normal(self.mu(c), self.tau(c), n)) for c in CONDITIONS}


def _cond(condition):
    aliases = {"pre": "pre", "con": "con", "post_con": "con", "exp": "exp", "post_exp": "exp"}
    if condition not in aliases:
        raise FrailtyDomainError(f"unknown condition {condition!r}")
    return aliases[condition]


def lognormal_moments(params: LognormalLatent, condition):
    """Mean and variance of X_c: exp(mu + s/2) and exp(2 mu + s) (exp(s) - 1), s = sigma^2 + tau^2."""
    s = params.sigma ** 2 + params.tau(condition) ** 2
    mu = params.mu(condition)
    return math.exp(mu + s / 2), math.exp(2 * mu + s) * math.expm1(s)


def cross_moment(params: LognormalLatent, a, b):
    """E[X_a X_b] for two distinct conditions."""
    a, b = _cond(a), _cond(b)
    if a == b:
        raise FrailtyDomainError("cross_moment needs two different conditions")
    return math.exp(params.mu(a) + params.mu(b) + 2 * params.sigma ** 2
                    + (params.tau(a) ** 2 + params.tau(b) ** 2) / 2)


def prepost_correlation(params: LognormalLatent, post="con"):
    """Pearson correlation of X_pre and X_post.

    Equals (exp(sigma^2) - 1) / sqrt((exp(s_pre) - 1)(exp(s_post) - 1)).
    """
    s2 = params.sigma ** 2
    s_pre = s2 + params.tau_pre ** 2
    s_post = s2 + params.tau(post) ** 2
    return math.expm1(s2) / math.sqrt(math.expm1(s_pre) * math.expm1(s_post))


def gaussian_exponential_moment(mu, tau, p):
    """E exp(p W) for W ~ Normal(mu, tau^2), the completed-square identity."""
    return math.exp(mu * p + p * p * tau * tau / 2)


def enrolled_probability(params: LognormalLatent, x):
    """P{X_pre > x} = P{Z + W_pre > log x}."""
    check_positive("x", x)
    sd = math.sqrt(params.sigma ** 2 + params.tau_pre ** 2)
    return float(ndtr((params.mu_pre - math.log(x)) / sd))


def _truncated_exponential(params, k, p, x, nodes=HERMITE_NODES):
    """E[exp(k Z + p W_pre) | Z + W_pre > log x]."""
    sigma, mu, tau = params.sigma, params.mu_pre, params.tau_pre
    if x is None or x <= 0:
        return math.exp(k * k * sigma * sigma / 2) * gaussian_exponential_moment(mu, tau, p)
    log_x = math.log(x)
    sd = math.sqrt(sigma ** 2 + tau ** 2)
    log_tail = float(log_ndtr((mu - log_x) / sd))
    if log_tail < math.log(MIN_TAIL):
        raise FrailtyDomainError(
            f"conditioning too extreme: P(X_pre > {x}) = {math.exp(log_tail):.3g}")
    # e^{kZ} phi(z; 0, sigma) = e^{k^2 sigma^2 / 2} phi(z; k sigma^2, sigma)
    u, w = _hermite(nodes)
    z = k * sigma ** 2 + sigma * u
    # zeta(z) = E[e^{p W} 1{W > log x - z}] = e^{p mu + p^2 tau^2 / 2} P{N(mu + p tau^2, tau) > log x - z}
    log_zeta = p * mu + p * p * tau * tau / 2 + log_ndtr((mu + p * tau * tau - log_x + z) / tau)
    vals = np.exp(log_zeta + k * k * sigma ** 2 / 2 - log_tail)
    return float(w @ vals)


def truncated_cross_moment(params: LognormalLatent, p, q, x, post="con", nodes=HERMITE_NODES):
    """E[X_pre^p X_post^q | X_pre > x] for p, q in {0, 1, 2}.

    ``x`` None or 0 gives the unconditional moment.
    """
    p = check_count("p", p)
    q = check_count("q", q)
    if p > 2 or q > 2:
        raise FrailtyDomainError("p and q must lie in {0, 1, 2}")
    post = _cond(post)
    if post == "pre":
        raise FrailtyDomainError("post must be a follow-up condition")
    prefactor = gaussian_exponential_moment(params.mu(post), params.tau(post), q)
    return prefactor * _truncated_exponential(params, p + q, p, x, nodes)


def enrolled_moments(params: LognormalLatent, x=None):
    """Means, SDs and correlations among enrolled subjects (X_pre > x when x is given).

    Returns a dict with keys mean_c, sd_c for each condition, corr_con,
    corr_exp (pre/post correlations) and cov_con_exp.
    """
    out = {}
    m1 = {"pre": _truncated_exponential(params, 1, 1, x)}
    m2 = {"pre": _truncated_exponential(params, 2, 2, x)}
    for c in ("con", "exp"):
        m1[c] = truncated_cross_moment(params, 0, 1, x, c)
        m2[c] = truncated_cross_moment(params, 0, 2, x, c)
    for c in CONDITIONS:
        out[f"mean_{c}"] = m1[c]
        out[f"sd_{c}"] = math.sqrt(max(m2[c] - m1[c] ** 2, 0.0))
    for c in ("con", "exp"):
        cov = truncated_cross_moment(params, 1, 1, x, c) - m1["pre"] * m1[c]
        out[f"corr_{c}"] = cov / (out["sd_pre"] * out[f"sd_{c}"])
    both = (gaussian_exponential_moment(params.mu_con, params.tau_con, 1)
            * gaussian_exponential_moment(params.mu_exp, params.tau_exp, 1)
            * _truncated_exponential(params, 2, 0, x))
    out["cov_con_exp"] = both - m1["con"] * m1["exp"]
    return out


class IdeationEffect(NamedTuple):
    cohen_d: float
    sd_effect: float
    mean_difference: float


def ideation_effect(params: LognormalLatent, x=None, positive_good=False):
    """Cohen's d of X_exp - X_con for a subject observed counterfactually in both arms.

    Both follow-up scores share the subject's Z, so their covariance is
    Var-type in exp(Z); with a threshold the moments are those of the
    enrolled population.
    """
    m = enrolled_moments(params, x)
    diff = m["mean_exp"] - m["mean_con"]
    var = m["sd_exp"] ** 2 + m["sd_con"] ** 2 - 2 * m["cov_con_exp"]
    sd = math.sqrt(max(var, 0.0))
    if sd == 0:
        raise FrailtyDomainError("SD of the counterfactual effect is zero")
    d = diff / sd
    return IdeationEffect(-d if positive_good else d, sd, diff)


@dataclass(frozen=True)
class IdeationSpec:
    """Observed score summaries for one study.

    ``offset`` is added to every observed mean (and to the threshold) before
    fitting, since lognormal scores cannot be zero; the SDs are unchanged.
    ``threshold`` is the minimum baseline score for enrollment, if any.
    """

    study_id: str
    mean_pre: float
    sd_pre: float
    mean_con: float
    sd_con: float
    mean_exp: float
    sd_exp: float
    n_con: int = 1
    n_exp: int = 1
    r_hyp: float = 0.3
    threshold: Optional[float] = None
    offset: float = 0.5

    def __post_init__(self):
        for c in CONDITIONS:
            check_positive(f"sd_{c}", getattr(self, f"sd_{c}"))
            check_finite(f"mean_{c}", getattr(self, f"mean_{c}"))
            if getattr(self, f"mean_{c}") + self.offset <= 0:
                raise FrailtyDomainError(f"mean_{c} + offset must be positive")
        check_count("n_con", self.n_con, 1)
        check_count("n_exp", self.n_exp, 1)
        if not 0 < self.r_hyp < 1:
            raise FrailtyDomainError(f"r_hyp must lie in (0, 1), got {self.r_hyp}")
        if self.threshold is not None:
            check_finite("threshold", self.threshold)
            if self.threshold + self.offset <= 0:
                raise FrailtyDomainError("threshold + offset must be positive")
        check_finite("offset", self.offset)

    def shifted(self, c):
        return getattr(self, f"mean_{c}") + self.offset, getattr(self, f"sd_{c}")

    @property
    def x(self):
        return None if self.threshold is None else self.threshold + self.offset


class IdeationFit(NamedTuple):
    params: LognormalLatent
    residual: float
    converged: bool
    cohen_d: float
    sd_effect: float
    correlation: float
    offset: float
    defects: tuple


def moment_start(spec: IdeationSpec):
    """Closed-form solution ignoring any threshold: a starting point for the solver."""
    s, mu = {}, {}
    for c in CONDITIONS:
        m, sd = spec.shifted(c)
        s[c] = math.log1p((sd / m) ** 2)
        mu[c] = math.log(m) - s[c] / 2
    # corr = expm1(sig2) / sqrt(expm1(s_pre) expm1(s_con))
    target = spec.r_hyp * math.sqrt(math.expm1(s["pre"]) * math.expm1(s["con"]))
    sig2 = math.log1p(target)
    sig2 = min(sig2, 0.95 * min(s.values()))
    tau = {c: math.sqrt(max(s[c] - sig2, 1e-6 * s[c])) for c in CONDITIONS}
    return LognormalLatent(math.sqrt(sig2), mu["pre"], tau["pre"], mu["con"], tau["con"],
                           mu["exp"], tau["exp"])


def ideation_defects(params: LognormalLatent, spec: IdeationSpec):
    """Relative moment defects for the six observed moments plus the correlation defect.

    The correlation constraint applies to the pre/control-follow-up
    correlation in the unscreened population.
    """
    m = enrolled_moments(params, spec.x)
    out = []
    for c in CONDITIONS:
        mean, sd = spec.shifted(c)
        out.append(m[f"mean_{c}"] / mean - 1)
        out.append(m[f"sd_{c}"] / sd - 1)
    out.append(prepost_correlation(params, "con") - spec.r_hyp)
    return np.array(out)


def fit_ideation(spec: IdeationSpec, tol=1e-10, positive_good=False):
    """Fit the seven parameters to the observed moments and the correlation hypothesis.

    Starts from the closed-form untruncated solution, refines with the
    simplex method then bounded least squares on log scales for sigma and
    the taus.  Raises ConvergenceError when the squared defect stays above 1e-2.
    """
    def fun(v):
        try:
            d = ideation_defects(LognormalLatent.from_vector(v), spec)
        except (FrailtyDomainError, OverflowError, ValueError):
            return np.full(7, 10.0)
        return d if np.all(np.isfinite(d)) else np.full(7, 10.0)

    start = moment_start(spec).to_vector()
    candidates = [start]
    if spec.x is not None:
        nm = optimize.minimize(lambda v: float(fun(v) @ fun(v)), start, method="Nelder-Mead",
                               options={"maxiter": 2000, "xatol": 1e-10, "fatol": 1e-22})
        candidates.append(nm.x)
    best, best_res = None, math.inf
    for v0 in candidates:
        ls = optimize.least_squares(fun, v0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                    max_nfev=4000)
        res = float(ls.fun @ ls.fun)
        if res < best_res:
            best, best_res = ls.x, res
    params = LognormalLatent.from_vector(best)
    defects = ideation_defects(params, spec)
    residual = float(defects @ defects)
    if residual > 1e-2:
        raise ConvergenceError(f"{spec.study_id}: ideation fit residual {residual:.3g}",
                               best=params)
    eff = ideation_effect(params, spec.x, positive_good)
    return IdeationFit(params, residual, residual < tol, eff.cohen_d, eff.sd_effect,
                       prepost_correlation(params, "con"), spec.offset,
                       tuple(float(d) for d in defects))


def forward_ideation_spec(params: LognormalLatent, study_id="synthetic", threshold=None,
                          offset=0.0, n=1):
    """IdeationSpec whose summaries are the model values at ``params``."""
    x = None if threshold is None else threshold + offset
    m = enrolled_moments(params, x)
    return IdeationSpec(study_id, m["mean_pre"] - offset, m["sd_pre"], m["mean_con"] - offset,
                        m["sd_con"], m["mean_exp"] - offset, m["sd_exp"], n, n,
                        prepost_correlation(params, "con"), threshold, offset)
