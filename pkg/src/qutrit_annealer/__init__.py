"""Five-qutrit quantum annealing: clustering encoding, gate sequencing,
RF pulse compilation, and full pulse-level simulation."""

__version__ = "0.1.0"

from .annealer import AnnealSchedule, IdealAnnealer, anneal, fidelity, outcome_distribution
from .clustering import (
    ClusteringInstance,
    brute_force_min,
    build_initial_hamiltonian,
    build_target_hamiltonian,
    ddi_constants,
    distance,
    initial_state,
    paper_instance,
    weight,
)
from .compiler import (
    DEFAULT_CONFIG,
    PulseEvent,
    PulseProgram,
    SpinSystemConfig,
    compile_program,
    free_interval_number,
    transition_frequency,
)
from .sequencer import (
    FreeEvolution,
    GlobalPhase,
    Program,
    TwoToneDrive,
    build_program,
    verify_step_equivalence,
)
from .simulator import evolve, free_hamiltonian, pulse_hamiltonian, two_tone_hamiltonian
from .spin_ops import SelectiveRotation, composite_z, inversion_pair, rotation_matrix, spin1_matrices
from .tensor_core import UnitaryCache, apply, embed_single_site, expm_hermitian

__all__ = [
    "AnnealSchedule",
    "ClusteringInstance",
    "DEFAULT_CONFIG",
    "FreeEvolution",
    "GlobalPhase",
    "IdealAnnealer",
    "Program",
    "PulseEvent",
    "PulseProgram",
    "SelectiveRotation",
    "SpinSystemConfig",
    "TwoToneDrive",
    "UnitaryCache",
    "anneal",
    "apply",
    "brute_force_min",
    "build_initial_hamiltonian",
    "build_program",
    "build_target_hamiltonian",
    "compile_program",
    "composite_z",
    "ddi_constants",
    "distance",
    "embed_single_site",
    "evolve",
    "expm_hermitian",
    "fidelity",
    "free_hamiltonian",
    "free_interval_number",
    "initial_state",
    "inversion_pair",
    "outcome_distribution",
    "paper_instance",
    "pulse_hamiltonian",
    "rotation_matrix",
    "spin1_matrices",
    "transition_frequency",
    "two_tone_hamiltonian",
    "verify_step_equivalence",
    "weight",
]
