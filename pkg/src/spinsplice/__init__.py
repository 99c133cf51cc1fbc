"""Cutting and stitching Heisenberg spin chains with optimized bond control."""

from ._version import __version__
from .chain import (
    ChainSpec,
    DegeneracyError,
    GroundStateSelection,
    SpectralDecomposition,
    assemble_hamiltonian,
    commutator_frobenius_norm,
    decompose,
    detached_block_hamiltonian,
    ground_state,
    pauli_site_operator,
)
from .control import (
    ControlSchedule,
    NoiseSpec,
    NoisySchedule,
    apply_noise,
    linear_baseline,
    make_schedule,
    polynomial_cut,
    polynomial_stitch,
    pulse_train,
    sine_cut,
)
from .dynamics import (
    StepPropagator,
    TrajectoryProbe,
    TrajectoryRecord,
    cut_fidelity,
    entropy,
    ground_fidelity,
    propagate,
    purity,
    reduce_density,
    step_unitary,
)
from .optimize import (
    LandscapeAxis,
    LandscapeGrid,
    OptimizationReport,
    bfgs_maximize,
    finite_difference_gradient,
    multi_start_maximize,
    scan_landscape,
)
from .process import (
    DEFAULT_TIME_STEPS,
    ChainProcess,
    ObjectiveSpec,
    build_objective,
    prepare_process,
)
from .reproduce import reproduce
from .runner import ConfigError, RunConfig, execute, load_config, parse_config

__all__ = [
    "__version__",
    "ChainSpec", "DegeneracyError", "GroundStateSelection", "SpectralDecomposition",
    "assemble_hamiltonian", "commutator_frobenius_norm", "decompose",
    "detached_block_hamiltonian", "ground_state", "pauli_site_operator",
    "ControlSchedule", "NoiseSpec", "NoisySchedule", "apply_noise", "linear_baseline",
    "make_schedule", "polynomial_cut", "polynomial_stitch", "pulse_train", "sine_cut",
    "StepPropagator", "TrajectoryProbe", "TrajectoryRecord", "cut_fidelity", "entropy",
    "ground_fidelity", "propagate", "purity", "reduce_density", "step_unitary",
    "LandscapeAxis", "LandscapeGrid", "OptimizationReport", "bfgs_maximize",
    "finite_difference_gradient", "multi_start_maximize", "scan_landscape",
    "DEFAULT_TIME_STEPS", "ChainProcess", "ObjectiveSpec", "build_objective",
    "prepare_process",
    "reproduce",
    "ConfigError", "RunConfig", "execute", "load_config", "parse_config",
]
