"""Gamma-frailty meta-analysis of self-harm intervention studies.

Fits a mixed-Poisson (gamma frailty) event model to each study's summary
proportions under its inclusion/exclusion criteria, and reports annualised
probabilities, Cohen's d, marginal and Neyman-Rubin relative risks with
parametric-bootstrap standard errors.  A lognormal latent-variable model
covers quantitative ideation scores.
"""

from .exceptions import (
    BootstrapFailureError,
    ConfigurationError,
    ConvergenceError,
    DescriptorValidationError,
    FrailtyDomainError,
    NumericalClampWarning,
    SimulationInfeasibleError,
    UndefinedConditionalError,
    UndefinedCorrelationError,
)
from .frailty import (
    CountLaw,
    EffectSD,
    Frailty,
    RateWindow,
    counterfactual_sd_effect,
    joint_positive,
    model_correlation,
    phi_correlation,
    positive_at,
    prob_count,
    prob_positive,
)
from .exposure import FixedWindow, LifetimeWindow, expect_over_window, invert_moments
from .criteria import VARIANT_TAGS, CriteriaVariant
from .fitting import (
    FitResult,
    StudySpec,
    annualize,
    build_equation_system,
    cohen_d,
    effect_statistics,
    fit_from_params,
    forward_spec,
    marginal_relative_risk,
    nr_relative_risk,
    solve_system,
)
from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_se, simulate_study
from .ideation import (
    IdeationFit,
    IdeationSpec,
    LognormalLatent,
    fit_ideation,
    lognormal_moments,
    prepost_correlation,
    truncated_cross_moment,
)
from .estimators import FrailtyMetaEstimator, IdeationEstimator
from .io import BatchConfig, load_descriptors, run_batch

__version__ = "0.1.0"
