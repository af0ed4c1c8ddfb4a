"""Bayesian ground-state search with the von Mises-Fisher distribution."""

from .bayes import (
    InferenceState,
    IterationTrace,
    PosteriorUpdate,
    StoppingRule,
    StopReason,
    convergence_ratio,
    growth_condition,
    projection_ratio,
    run_inference,
    success_mass,
    update_step,
)
from .experiment import ExperimentConfig, random_hamiltonian, random_unit_vector, run_ensemble
from .hamiltonian import (
    ScaledHamiltonian,
    Spectrum,
    WMatrix,
    build_w,
    eigendecompose,
    fidelity,
    load_hamiltonian,
    parse_pauli_sum,
    prepare,
    real_embed,
    scale_to_window,
)
from .measurement import outcome_probability, sample_outcomes
from .vmf import VonMisesFisher, bessel_ratios, estimate_kappa, mle_mean, sample_vmf

__version__ = "0.1.0"
