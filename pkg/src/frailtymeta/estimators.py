"""Estimator-style wrappers around the study fitters.

A "sample" here is a whole study summary rather than a design matrix, so
these classes borrow only the parameter handling and fit/predict naming of
scikit-learn estimators (``get_params``, ``set_params``, ``clone``).
"""

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .bootstrap import BootstrapConfig, bootstrap_se
from .fitting import N_STARTS, StudySpec, effect_statistics, solve_system
from .frailty import positive_at
from .ideation import IdeationSpec, enrolled_moments, fit_ideation


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class FrailtyMetaEstimator(BaseEstimator):
    """Gamma-frailty count model fitted to one study's summary proportions.

    Parameters
    ----------
    r_hyp : float or None
        Hypothesised baseline/follow-up correlation.  None keeps the value
        already in the study spec.
    n_starts : int
        Multi-start size for the solver.
    seed : int
        Seed for the start design and the bootstrap.
    positive_good : bool
        Flip the sign of Cohen's d so that positive means beneficial.
    bootstrap : int
        Number of parametric bootstrap replicates; 0 skips the bootstrap.

    Attributes
    ----------
    lambda_, mu_con_, mu_exp_, alpha_ : float
        Fitted rates (per year) and frailty shape.
    result_ : FitResult
    bootstrap_ : BootstrapResult or None
    """

    def __init__(self, r_hyp=None, n_starts=N_STARTS, seed=0, positive_good=False,
                 bootstrap=0):
        self.r_hyp = r_hyp
        self.n_starts = n_starts
        self.seed = seed
        self.positive_good = positive_good
        self.bootstrap = bootstrap

    def fit(self, X: StudySpec, y=None):
        spec = X if self.r_hyp is None else replace(X, r_hyp=float(self.r_hyp))
        fit = solve_system(spec, n_starts=self.n_starts, seed=self.seed)
        if self.positive_good:
            fit = effect_statistics(fit, spec, positive_good=True)
        self.spec_ = spec
        self.result_ = fit
        self.lambda_ = fit.lambda_hat
        self.mu_con_ = fit.mu_con_hat
        self.mu_exp_ = fit.mu_exp_hat
        self.alpha_ = fit.alpha_hat
        self.bootstrap_ = None
        if self.bootstrap:
            self.bootstrap_ = bootstrap_se(
                fit, spec, BootstrapConfig(replicates=self.bootstrap, seed=self.seed))
        return self

    def predict(self, X, arm="con"):
        """P{at least one event} over windows of the given lengths (years).

        ``arm`` is "base", "con" or "exp" and selects the rate.
        """
        _check_fitted(self, "result_")
        rate = {"base": self.lambda_, "con": self.mu_con_, "exp": self.mu_exp_}[arm]
        lengths = np.asarray(X, dtype=float)
        return positive_at(self.alpha_, rate * lengths)

    def score(self, X: StudySpec = None, y=None):
        """Negative residual of the fitted equation system."""
        _check_fitted(self, "result_")
        return -self.result_.residual


class IdeationEstimator(BaseEstimator):
    """Lognormal latent-variable model fitted to one study's score summaries.

    Attributes
    ----------
    params_ : LognormalLatent
    result_ : IdeationFit
    """

    def __init__(self, r_hyp=None, positive_good=False):
        self.r_hyp = r_hyp
        self.positive_good = positive_good

    def fit(self, X: IdeationSpec, y=None):
        spec = X if self.r_hyp is None else replace(X, r_hyp=float(self.r_hyp))
        self.spec_ = spec
        self.result_ = fit_ideation(spec, positive_good=self.positive_good)
        self.params_ = self.result_.params
        return self

    def predict(self, X=None):
        """Model means of the (offset) scores for pre, con and exp in the enrolled population."""
        _check_fitted(self, "result_")
        m = enrolled_moments(self.params_, self.spec_.x)
        return np.array([m["mean_pre"], m["mean_con"], m["mean_exp"]]) - self.spec_.offset

    def score(self, X=None, y=None):
        _check_fitted(self, "result_")
        return -self.result_.residual
