"""Counterdiabatic driving protocols learned by a physics-informed network.

The package is organised by concern: ``linalg`` (Pauli algebra and a Hermitian
eigensolver), ``problem`` (Hamiltonian pairs, including the built-in H2
STO-3G data), ``net`` (the time-to-protocol network), ``physics`` (loss terms),
``sampling``, ``train``, ``oracle`` (exact and nested-commutator references)
and ``cli``.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CdpinnError, ConfigError, DegenerateSpectrumError, DimensionError, FormatError, HermiticityError,
    IllConditionedError, NumericsError, ScopeError, StepSizeError, UnknownDistanceError, UnsupportedVersion,
    ValidationError,
)
from .linalg import hermitian_eigensystem, pauli_basis, pauli_decompose, pauli_reconstruct  # noqa: F401
from .problem import ProblemSpec, builtin_h2, load_problem, make_problem, resolve_problem  # noqa: F401
from .net import forward, forward_with_input_derivative, glorot_init  # noqa: F401
from .physics import LossBreakdown, LossWeights, total_loss  # noqa: F401
from .train import TrainConfig, load_checkpoint, train  # noqa: F401
from .oracle import evolve_fidelity, exact_gauge_potential, nc_gauge_potential  # noqa: F401
