"""Nonlinear spectral decomposition of homogeneous gradient flows via time-rescaled DMD."""

from .analytic import analytic_dmd_rank1, limit_mu_tilde, paradox_bound, paradox_table
from .dmd import dmd, sdmd
from .estimators import DMD, OrthoNS, PosteriorOrthoNS
from .exceptions import (
    DivergenceError,
    HomoflowError,
    InvalidInputError,
    NonDissipativeError,
    NonUniformSequenceError,
    SteadyStateError,
    UndefinedEigenvalueError,
)
from .flow import Adaptive, FlowParams, SnapshotSequence, Uniform, evolve_adaptive, evolve_fixed, synth_eigenflow
from .operators import NormPowerOperator, OperatorConfig, p_laplacian
from .orthons import OrthoNsDecomposition, filter_modes, orthons, orthons_posterior, reconstruct_flow, spectrum

__version__ = "0.1.0"
