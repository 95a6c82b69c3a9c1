"""Seeded random states, perturbations, channels and generators."""

import numpy as np
from scipy.stats import unitary_group

from .dynamics import KrausMap, LindbladGenerator


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary."""
    if dim == 1:
        return np.exp(2j * np.pi * rng.uniform()) * np.ones((1, 1))
    return unitary_group.rvs(dim, random_state=rng)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = _ginibre(rng, dim, dim)
    return 0.5 * (g + g.conj().T)


def random_density(dim: int, rng: np.random.Generator, floor: float = 0.0) -> np.ndarray:
    """Full-rank density matrix from the Hilbert-Schmidt ensemble.

    ``floor`` mixes in ``floor * I / dim`` to keep the spectrum away from 0.
    """
    g = _ginibre(rng, dim, dim)
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    if floor:
        rho = (1.0 - floor) * rho + floor * np.eye(dim) / dim
    return 0.5 * (rho + rho.conj().T)


def random_tangent(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    x = random_hermitian(dim, rng)
    x -= np.trace(x).real / dim * np.eye(dim)
    return scale * x / np.linalg.norm(x)


def random_kraus(dim: int, rng: np.random.Generator, ancilla: int = 2) -> KrausMap:
    """Channel from a Haar unitary on system (x) ancilla, ancilla prepared in |0>.

    ``M_k = (I (x) <k|) U (I (x) |0>)`` is trace preserving by construction.
    """
    u = random_unitary(dim * ancilla, rng).reshape(dim, ancilla, dim, ancilla)
    return KrausMap(tuple(np.ascontiguousarray(u[:, k, :, 0]) for k in range(ancilla)))


def random_unitary_channel(dim: int, rng: np.random.Generator) -> KrausMap:
    return KrausMap((random_unitary(dim, rng),))


def random_generator(
    dim: int,
    rng: np.random.Generator,
    n_jumps: int = 2,
    hamiltonian: bool = True,
    scale: float = 1.0,
) -> LindbladGenerator:
    H = random_hermitian(dim, rng) * scale if hamiltonian else np.zeros((dim, dim), complex)
    jumps = tuple(scale * _ginibre(rng, dim, dim) / np.sqrt(2 * dim) for _ in range(n_jumps))
    return LindbladGenerator(H, jumps)
