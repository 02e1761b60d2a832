"""Semiparametric Bayesian inference for partially linear regression.

Fits the model Y = X'beta + eta(W) + U through its partialled-out
reparametrization Y = m1(W) + (X - m2(W))'beta + U with independent priors
on (beta, m1, m2), and ships the machinery to check that the marginal
posterior for beta is close to its Gaussian reference law: distance reports,
credible-interval coverage experiments, nuisance contraction curves, and a
comparison against the original (beta, eta) parametrization.
"""

from .dgp import DgpSpec, TrueFunctions, make_holder_function, simulate
from .diagnostics import ExperimentSetup, bvm_distance, coverage_experiment
from .frequentist import GaussianReference, feasible_robinson, oracle_reference, wald_interval
from .model import Dataset, ModelConfig, NuisanceValues, ThetaState
from .priors import MaternSpec, WaveletPriorSpec
from .samplers import ChainConfig, PosteriorDraws, gibbs_beta_eta, gibbs_beta_m, run_chain

__all__ = [
    "ChainConfig",
    "Dataset",
    "DgpSpec",
    "ExperimentSetup",
    "GaussianReference",
    "MaternSpec",
    "ModelConfig",
    "NuisanceValues",
    "PosteriorDraws",
    "ThetaState",
    "TrueFunctions",
    "WaveletPriorSpec",
    "bvm_distance",
    "coverage_experiment",
    "feasible_robinson",
    "gibbs_beta_eta",
    "gibbs_beta_m",
    "make_holder_function",
    "oracle_reference",
    "run_chain",
    "simulate",
    "wald_interval",
]

__version__ = "0.1.0"
