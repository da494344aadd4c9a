"""Bayesian A/B testing for two binomial proportions.

The log odds ratio ``psi`` carries the test. Hypotheses H0 (psi = 0),
H1 (psi free), H+ (psi > 0) and H- (psi < 0) share a normal prior on the
grand mean ``beta``; H+ and H- use the normal psi prior truncated to one
side.
"""

from .datasets import load_seqdata, parse_sequential_csv, read_prior_json, read_trial_json
from .elicit import ElicitationError, ElicitationResult, QuantileSpec, elicit_prior, elicitation_objective
from .implied import (
    DerivedQuantity,
    QuadratureError,
    TruncationSide,
    conditional_density_p2_given_p1,
    implied_cdf,
    implied_pdf,
    implied_quantile,
    joint_density_p1p2,
    marginal_density_p,
)
from .inference import (
    ABTestResult,
    RobustnessGrid,
    SequentialTrace,
    ab_test,
    log_marginals,
    posterior_probs,
    robustness_grid,
    sequential_analysis,
)
from .laplace import LaplaceFit, ModeFindingError, find_mode, log_marginal_h0, log_marginal_h1
from .model import (
    Hypothesis,
    HypothesisProbs,
    ModelParams,
    PriorParams,
    SequentialDataset,
    TrialData,
    log_likelihood,
    params_from_probs,
    probs_from_params,
)
from .oracle import QuadratureSpec, RefinementError, oracle_log_marginals, quadrature_log_marginal
from .sampling import (
    ImportanceSamplingError,
    PosteriorSamples,
    TProposal,
    importance_sample,
    sir_sample,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "ABTestResult",
    "DerivedQuantity",
    "ElicitationError",
    "ElicitationResult",
    "Hypothesis",
    "HypothesisProbs",
    "ImportanceSamplingError",
    "LaplaceFit",
    "ModeFindingError",
    "ModelParams",
    "PosteriorSamples",
    "PriorParams",
    "QuadratureError",
    "QuadratureSpec",
    "QuantileSpec",
    "RefinementError",
    "RobustnessGrid",
    "SequentialDataset",
    "SequentialTrace",
    "TProposal",
    "TrialData",
    "TruncationSide",
    "ab_test",
    "conditional_density_p2_given_p1",
    "elicit_prior",
    "elicitation_objective",
    "find_mode",
    "implied_cdf",
    "implied_pdf",
    "implied_quantile",
    "importance_sample",
    "joint_density_p1p2",
    "load_seqdata",
    "log_likelihood",
    "log_marginal_h0",
    "log_marginal_h1",
    "log_marginals",
    "marginal_density_p",
    "oracle_log_marginals",
    "params_from_probs",
    "parse_sequential_csv",
    "posterior_probs",
    "probs_from_params",
    "quadrature_log_marginal",
    "read_prior_json",
    "read_trial_json",
    "robustness_grid",
    "sequential_analysis",
    "sir_sample",
    "summarize",
]
