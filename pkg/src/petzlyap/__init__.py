"""Contraction metrics for quantum channels, Bures Lyapunov functions for
Lindblad equations, and an engineered cat-state reservoir."""

from .cat import CatReservoirParams, convergence_experiment, equilibrium_state, generator_eq16, generator_eq18
from .dynamics import KrausMap, LindbladGenerator, integrate, steady_state
from .errors import PetzLyapError, TruncationWarning
from .linalg import hermitian_eig, solve_sylvester_weighted
from .petz import PetzMeasure, bures_lyapunov, bures_lyapunov_rate, petz_norm_sq
from .states import coherent_state, distance, fidelity

__all__ = [
    "CatReservoirParams",
    "KrausMap",
    "LindbladGenerator",
    "PetzLyapError",
    "PetzMeasure",
    "TruncationWarning",
    "bures_lyapunov",
    "bures_lyapunov_rate",
    "coherent_state",
    "convergence_experiment",
    "distance",
    "equilibrium_state",
    "fidelity",
    "generator_eq16",
    "generator_eq18",
    "hermitian_eig",
    "integrate",
    "petz_norm_sq",
    "solve_sylvester_weighted",
    "steady_state",
]
