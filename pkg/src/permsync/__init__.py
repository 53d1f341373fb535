"""Permutation synchronization encoded as a penalized QUBO."""

from .bench import GroundTruth, SynthConfig, accuracy, consistency_error, generate, majority_vote
from .encoder import (
    ConstraintSystem,
    QuboProblem,
    apply_penalty,
    build_constraints,
    build_objective,
    decode,
    encode,
    energy,
    fix_gauge,
)
from .model import ObservationGraph, Permutation, SyncEstimate, relative_of, unvec, validate_graph, validate_permutation, vec
from .solvers import (
    AnnealSchedule,
    SampleSet,
    greedy_descent,
    sample_sa,
    solve_exhaustive_binary,
    solve_exhaustive_permutation,
)

__version__ = "0.1.0"
