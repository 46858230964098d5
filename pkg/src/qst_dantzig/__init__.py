"""Pauli-measurement state tomography with entropy and nuclear-norm Dantzig estimators."""

from .estimators import (
    EstimatorConfig,
    EstimatorSolution,
    SolverConfig,
    constraint_gap,
    dantzig_entropy,
    dantzig_nuclear,
    default_epsilon,
    least_squares,
    mirror_step,
    residual,
)
from .experiments import RateFit, TrialResult, TrialSpec, compare_estimators, fit_rate, run_trial, sweep_rate
from .measurement import (
    MeasurementDataset,
    MeasurementRecord,
    full_basis_dataset,
    measure,
    noiseless_dataset,
    sample_design,
    simulate_dataset,
)
from .pauli import PauliLabel, PauliSet, SparsePauli, accumulate, build_basis, densify, inner, projector_weights, to_sparse
from .states import (
    DensityMatrix,
    PackingInstance,
    build_packing,
    entropy_and_kl,
    experiment_kl,
    mix_identity,
    project_spectrahedron,
    random_state,
    schatten_norm,
)

__version__ = "0.1.0"
