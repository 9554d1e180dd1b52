"""Memory-accelerated distributed averaging.

Graph generators, consensus weight matrices, the two-tap predictive
accelerated operator with its optimal mixing parameter, a decentralized
estimator of the second-largest eigenvalue, and experiment drivers.
"""

from .accel import (
    AcceleratedOperator,
    PredictorParams,
    asymptotic_theta,
    cost_J,
    gamma,
    least_squares_theta,
    optimal_alpha,
    predicted_radius,
)
from .doi import DoiConfig, DoiResult, end_to_end_alpha, estimate_lambda2
from .engine import (
    ExperimentTrace,
    NodeStates,
    init_slope,
    init_spike,
    max_consensus,
    run_to_accuracy,
    step_accelerated,
    step_memoryless,
)
from .errors import *  # noqa: F401,F403
from .experiments import ExperimentConfig, GainReport, run_gain_sweep, run_mse_experiment, verify_theory
from .graph import Graph, diameter, from_edges, make_chain, make_complete, make_grid, make_rgg, make_star
from .spectral import gelfand_radius_estimate, phi_spectrum, rho_deviation, symmetric_eigenvalues
from .weights import WeightMatrix, check_conditions, lazy_transform, max_degree, metropolis_hastings

__version__ = "0.1.0"
