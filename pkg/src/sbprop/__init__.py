"""Spin-boson dynamics with intensity-dressed couplings.

Builds the truncated transfer matrix for a two-level system coupled to a
single field mode, steps states with a certified Taylor-series propagator,
and cross-checks against an exact eigendecomposition reference.
"""

from .cache import (
    CacheCorruptError,
    CacheEntry,
    PropagatorCache,
    canonical_blob,
    default_cache_dir,
    propagator_fingerprint,
)
from .config import ConfigError, RunConfig, load_run_config, parse_p_values
from .model import (
    ModelParams,
    TransferMatrix,
    Truncation,
    build_transfer_matrix,
    hermiticity_check,
)
from .propagator import (
    NonFiniteState,
    NotConverged,
    PropagatorConfig,
    StepPropagator,
    build_step_propagator,
    checkpoint_powers,
    evolve,
    evolve_reusing,
    jump,
    suggest_step,
)
from .spectral import (
    GsScanResult,
    NonHermitianInput,
    SpectralDecomposition,
    diagonalize,
    gs_scan,
    level_differences,
    teee_evolve,
)
from .states import (
    CoherentSpec,
    ObservableWeights,
    SpinorFockState,
    TailMassTooLarge,
    atomic_inversion,
    coherent_state,
    energy_expectation,
    excitation_number,
    fock_state,
    inner,
    mean_photon_number,
    norm_squared,
    normalize,
    parity_expectation,
)
from .trajectory import CSV_COLUMNS, Trajectory, csv_lines

__version__ = "0.1.0"

__all__ = [
    "CSV_COLUMNS",
    "CacheCorruptError",
    "CacheEntry",
    "CoherentSpec",
    "ConfigError",
    "GsScanResult",
    "ModelParams",
    "NonFiniteState",
    "NonHermitianInput",
    "NotConverged",
    "ObservableWeights",
    "PropagatorCache",
    "PropagatorConfig",
    "RunConfig",
    "SpectralDecomposition",
    "SpinorFockState",
    "StepPropagator",
    "TailMassTooLarge",
    "Trajectory",
    "TransferMatrix",
    "Truncation",
    "atomic_inversion",
    "build_step_propagator",
    "build_transfer_matrix",
    "canonical_blob",
    "checkpoint_powers",
    "coherent_state",
    "csv_lines",
    "default_cache_dir",
    "diagonalize",
    "energy_expectation",
    "evolve",
    "evolve_reusing",
    "excitation_number",
    "fock_state",
    "gs_scan",
    "hermiticity_check",
    "inner",
    "jump",
    "level_differences",
    "load_run_config",
    "mean_photon_number",
    "norm_squared",
    "normalize",
    "parity_expectation",
    "parse_p_values",
    "propagator_fingerprint",
    "suggest_step",
    "teee_evolve",
    "__version__",
]
