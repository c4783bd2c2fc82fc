"""Markov structure learning for continuous, possibly non-Gaussian data.

One monotone transport-map component is fitted per variable; the mixed
second derivatives of the implied conditional log-densities assemble into a
generalized precision matrix whose thresholded support is the estimated
conditional-independence graph.
"""

__version__ = "0.1.0"

from .component import DerivativeBundle, LinearComponent, MapComponent, eval_bundle, eval_map
from .graphmetrics import CentralityTable, RecoveryReport, centrality, recovery
from .network import NetworkParams, Tangent, forward_eval, init_network, input_jet, param_gradient
from .objective import LossReport, loss_gradient, loss_report, nll, penalty
from .precision import EdgeSet, GeneralizedPrecision, assemble, omega_row, tau_sweep, threshold
from .quadrature import QuadratureRule, cc_rule
from .synthdata import GroundTruth, butterfly_sample, normalized_true_omega, sparse_spd_gaussian
from .training import SplitDataset, TrainConfig, select_lambda, split_standardize, train_component

__all__ = [
    "CentralityTable", "DerivativeBundle", "EdgeSet", "GeneralizedPrecision",
    "GroundTruth", "LinearComponent", "LossReport", "MapComponent",
    "NetworkParams", "QuadratureRule", "RecoveryReport", "SplitDataset",
    "Tangent", "TrainConfig", "assemble", "butterfly_sample", "cc_rule",
    "centrality", "eval_bundle", "eval_map", "forward_eval", "init_network",
    "input_jet", "loss_gradient", "loss_report", "nll",
    "normalized_true_omega", "omega_row", "param_gradient", "penalty",
    "recovery", "select_lambda", "sparse_spd_gaussian", "split_standardize",
    "tau_sweep", "threshold", "train_component",
]
