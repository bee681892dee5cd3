"""Second-order weak-coupling master equation for arbitrary system-bath initial states.

Subpackages/modules
-------------------
- ``linalg``         small dense Hermitian algebra and state functionals
- ``bath``           spectral densities, discretisation, correlation function, packets
- ``initial_state``  Fock-space bath operators, moment coefficients, classification
- ``presets``        the three worked scenarios (V-atom, two-level mixtures)
- ``correlations``   correlation functions and analytic memory operators
- ``evolution``      RK4 integration of the component equations and observables
- ``lindblad``       jump operators, Markov rates, Lindblad-limit generator
- ``oracle``         exact truncated-Fock evolution and Bargmann-integral oracle
- ``cli``            ``oqs`` command line entry point
"""

from .linalg import (
    SpectralDecomposition,
    herm_eig,
    interaction_transform,
    trace_distance,
    von_neumann_entropy,
)
from .bath import BathModel, GaussianPacket, SpectralDensity, alpha_corr, discretize, gaussian_packet
from .initial_state import (
    Classification,
    FockOperator,
    GammaTerm,
    InitialState,
    MomentSet,
    classify,
    moments_from_fock,
)
from .presets import SystemSpec, build_example1, build_example2, build_example3
from .evolution import EvolutionConfig, Trajectory, evolve
from .lindblad import decay_rate, jump_operators, lindblad_condition, lindblad_rhs, markov_rates
from .oracle import compare, exact_reduced_dynamics, gaussian_moment_oracle

__all__ = [
    "SpectralDecomposition",
    "herm_eig",
    "interaction_transform",
    "trace_distance",
    "von_neumann_entropy",
    "BathModel",
    "GaussianPacket",
    "SpectralDensity",
    "alpha_corr",
    "discretize",
    "gaussian_packet",
    "Classification",
    "FockOperator",
    "GammaTerm",
    "InitialState",
    "MomentSet",
    "classify",
    "moments_from_fock",
    "SystemSpec",
    "build_example1",
    "build_example2",
    "build_example3",
    "EvolutionConfig",
    "Trajectory",
    "evolve",
    "decay_rate",
    "jump_operators",
    "lindblad_condition",
    "lindblad_rhs",
    "markov_rates",
    "compare",
    "exact_reduced_dynamics",
    "gaussian_moment_oracle",
]
