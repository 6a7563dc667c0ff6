"""Amplitude-based complex phase retrieval."""
from .kernels import BACKEND
from .measurements import (
    EntryDistribution,
    MeasurementSet,
    NoiseVector,
    SensingMatrix,
    chi_square_epsilon,
    empirical_moments,
    make_ensemble,
    make_noise,
    observe,
    operator_norm_estimate,
    sample_matrix,
)
from .metrics import AlignedPair, align, lifted_dist, phase_dist, residual
from .solvers import (
    DegenerateInputWarning,
    SolverConfig,
    SolverDivergence,
    SolverResult,
    alternating_projection,
    amplitude_flow,
    loss,
    spectral_init,
    stationarity_residual,
)
from .rip import (
    LiftedSample,
    RipEstimate,
    apply_lifted,
    beta0_default,
    estimate_rip_constants,
    rip_ratio,
    sample_lifted,
    strong_rip_ratio,
    trimmed_index_set,
    trimmed_lifted_ratio,
    witness_sample,
)
from .sparse import (
    SparseConfig,
    feasibility_check,
    project_l1_ball,
    project_top_k,
    sparse_amplitude_flow,
    sparse_spectral_init,
    zero_solution_check,
)

__version__ = "0.1.0"
