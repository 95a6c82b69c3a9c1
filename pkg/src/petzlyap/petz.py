"""Petz family of contraction metrics and the Bures Lyapunov function.

A metric in the family is fixed by a positive finite measure on [0, 1],
stored here as weighted atoms.  Continuous measures are discretized with
Gauss-Legendre nodes.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import LindbladGenerator, Stepper, _num_steps, equilibrium_residual
from .errors import DomainViolation
from .linalg import (
    HermitianEigen,
    hermitian_eig,
    solve_lyapunov_bures,
    solve_sylvester_weighted,
)

logger = logging.getLogger(__name__)

EQUILIBRIUM_WARN_TOL = 1e-8


@dataclass(frozen=True)
class PetzMeasure:
    """Atoms ``(s_j, w_j)`` with ``s_j`` in [0, 1] and ``w_j > 0``."""

    nodes: tuple
    weights: tuple

    def __post_init__(self):
        s = tuple(float(x) for x in self.nodes)
        w = tuple(float(x) for x in self.weights)
        if not s or len(s) != len(w):
            raise DomainViolation("a measure needs at least one atom and matching weights")
        if any(not 0.0 <= x <= 1.0 for x in s):
            raise DomainViolation(f"atom locations must lie in [0, 1]: {s}")
        if any(not x > 0.0 for x in w):
            raise DomainViolation(f"atom weights must be positive: {w}")
        object.__setattr__(self, "nodes", s)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple]) -> "PetzMeasure":
        atoms = list(atoms)
        return cls(tuple(a[0] for a in atoms), tuple(a[1] for a in atoms))

    @classmethod
    def atom(cls, s: float, w: float = 1.0) -> "PetzMeasure":
        return cls((s,), (w,))

    @classmethod
    def bures(cls) -> "PetzMeasure":
        return cls.atom(1.0)

    @classmethod
    def symmetric(cls) -> "PetzMeasure":
        return cls.atom(0.0)

    @classmethod
    def from_density(cls, density: Callable[[np.ndarray], np.ndarray], n: int = 32) -> "PetzMeasure":
        """Gauss-Legendre discretization of ``m(s) ds`` on [0, 1]."""
        x, w = np.polynomial.legendre.leggauss(n)
        s = 0.5 * (x + 1.0)
        weights = 0.5 * w * np.asarray(density(s), dtype=float)
        keep = weights > 0
        return cls(tuple(s[keep]), tuple(weights[keep]))

    @property
    def atoms(self) -> list:
        return list(zip(self.nodes, self.weights))


def petz_norm_sq(
    rho: np.ndarray,
    delta: np.ndarray,
    m: PetzMeasure,
    eig: Optional[HermitianEigen] = None,
) -> float:
    """``sum_j w_j Tr(delta (X_j + X_j^dag) / 2)`` with ``s_j X_j rho + rho X_j = delta``."""
    if eig is None:
        eig = hermitian_eig(rho)
    delta = np.asarray(delta, dtype=np.complex128)
    total = 0j
    for s, w in zip(m.nodes, m.weights):
        x = solve_sylvester_weighted(rho, delta, s, eig=eig)
        total += w * np.trace(delta @ (x + x.conj().T)) / 2
    scale = max(1.0, abs(total.real))
    if abs(total.imag) > 1e-12 * scale:
        raise ArithmeticError(f"Petz norm has imaginary part {total.imag:.3e}")
    if total.real < -1e-12 * scale:
        raise ArithmeticError(f"Petz norm is negative: {total.real:.3e}")
    return float(total.real)


def operator_monotone_f(m: PetzMeasure, x: float) -> float:
    """``f(x) = 1/2 sum_j w_j (1/(s_j x + 1) + 1/(s_j + x))`` for ``x > 0``."""
    if not x > 0:
        raise DomainViolation(f"x must be positive, got {x}")
    s = np.asarray(m.nodes)
    w = np.asarray(m.weights)
    return float(0.5 * np.sum(w * (1.0 / (s * x + 1.0) + 1.0 / (s + x))))


def f_at_one(m: PetzMeasure) -> float:
    """``f(1)``, i.e. ``sum_j w_j / (1 + s_j)``; equal to 1 for a standard normalization."""
    return operator_monotone_f(m, 1.0)


def bures_lyapunov(
    rho_inf: np.ndarray, rho: np.ndarray, eig: Optional[HermitianEigen] = None
) -> tuple[float, np.ndarray]:
    """``V = Tr(rho_inf G^2)`` with ``rho_inf G + G rho_inf = rho - rho_inf``."""
    g = solve_lyapunov_bures(rho_inf, np.asarray(rho) - np.asarray(rho_inf), eig=eig)
    v = float(np.real(np.trace(np.asarray(rho_inf) @ g @ g)))
    return max(v, 0.0), g


def _commutator(a, b):
    return a @ b - b @ a


def _sandwich_sum(x: np.ndarray, rho: np.ndarray, jumps) -> float:
    # sum_k Tr([x, L_k] rho [x, L_k]^dag)
    total = 0.0
    for l in jumps:
        c = _commutator(x, l)
        total += float(np.real(np.trace(c @ rho @ c.conj().T)))
    return total


def bures_lyapunov_rate(
    rho_inf: np.ndarray,
    rho: np.ndarray,
    gen: LindbladGenerator,
    eig: Optional[HermitianEigen] = None,
    check_equilibrium: bool = False,
) -> float:
    """Analytic ``dV/dt = -sum_k Tr([G, L_k] rho_inf [G, L_k]^dag)``.

    Only the jump operators enter; ``gen.H`` is read solely by the optional
    equilibrium check, which warns when ``||L(rho_inf)||_F > 1e-8``.
    """
    if check_equilibrium:
        res = equilibrium_residual(gen, rho_inf)
        if res > EQUILIBRIUM_WARN_TOL:
            warnings.warn(f"rho_inf has Lindblad residual {res:.3e}", RuntimeWarning, stacklevel=2)
    _, g = bures_lyapunov(rho_inf, rho, eig=eig)
    return -_sandwich_sum(g, np.asarray(rho_inf), gen.jumps)


def dissipation_terms(
    rho: np.ndarray,
    delta: np.ndarray,
    s: float,
    jumps: Sequence[np.ndarray],
    eig: Optional[HermitianEigen] = None,
) -> tuple[float, float]:
    """``(D1, D2)``: the jump sandwiches of ``X_s`` and of ``X_s^dag``.

    ``X_s`` solves ``s X rho + rho X = delta``.  Along a joint Lindblad flow
    of ``(rho, delta)`` one has ``d/dt Tr(delta X_s) = -(s D1 + D2)``.
    """
    x = solve_sylvester_weighted(rho, delta, s, eig=eig)
    rho = np.asarray(rho)
    return _sandwich_sum(x, rho, jumps), _sandwich_sum(x.conj().T, rho, jumps)


@dataclass
class ContractionTrace:
    times: np.ndarray
    values: np.ndarray

    def max_increase(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(np.max(np.diff(self.values), initial=0.0))


def contraction_trace(
    gen: LindbladGenerator,
    rho0: np.ndarray,
    delta0: np.ndarray,
    m: PetzMeasure,
    t_end: float,
    h: float,
    record_every: int = 1,
) -> ContractionTrace:
    """Petz norm of a co-propagated tangent along a Lindblad trajectory.

    ``rho(t)`` must stay positive definite; ``SingularRho`` otherwise.
    """
    nsteps = _num_steps(t_end, h)
    stepper = Stepper(gen, h)
    rho = np.array(rho0, dtype=np.complex128)
    delta = np.array(delta0, dtype=np.complex128)
    times, values = [0.0], [petz_norm_sq(rho, delta, m)]
    done = 0
    while done < nsteps:
        k = min(record_every, nsteps - done)
        rho, delta = stepper.advance(rho, k, delta, t0=done * h)
        rho = 0.5 * (rho + rho.conj().T)
        delta = 0.5 * (delta + delta.conj().T)
        done += k
        times.append(done * h)
        values.append(petz_norm_sq(rho, delta, m))
    return ContractionTrace(np.asarray(times), np.asarray(values))


def random_measure(rng: np.random.Generator, n_atoms: int = 5) -> PetzMeasure:
    s = rng.uniform(0.0, 1.0, n_atoms)
    w = rng.uniform(0.1, 1.0, n_atoms)
    return PetzMeasure(tuple(s), tuple(w))
