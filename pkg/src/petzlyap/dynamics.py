"""Kraus maps, Lindblad generators, RK4 trajectories, superoperators and
steady states."""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg

from . import kernels
from .errors import (
    DimensionMismatch,
    DomainViolation,
    NonUniqueKernel,
    NoSteadyState,
    PositivityLost,
)
from .linalg import hermitian_eig, hermitize

KRAUS_TP_TOL = 1e-8
POSITIVITY_TOL = 1e-6
KERNEL_REL_TOL = 1e-8


def _square(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class KrausMap:
    """``rho -> sum_k M_k rho M_k^dag``."""

    ops: tuple

    def __post_init__(self):
        ops = tuple(_square(m, "Kraus operator") for m in self.ops)
        if not ops:
            raise DimensionMismatch("a Kraus map needs at least one operator")
        d = ops[0].shape[0]
        if any(m.shape != (d, d) for m in ops):
            raise DimensionMismatch("Kraus operators have inconsistent shapes")
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    @property
    def defect(self) -> float:
        """``||sum_k M_k^dag M_k - I||_F``."""
        s = sum(m.conj().T @ m for m in self.ops)
        return float(np.linalg.norm(s - np.eye(self.dim)))

    @property
    def trace_preserving(self) -> bool:
        return self.defect <= KRAUS_TP_TOL

    def __call__(self, rho):
        return apply_kraus(self, rho)


def apply_kraus(phi: KrausMap, rho: np.ndarray) -> np.ndarray:
    rho = _square(rho, "state")
    if rho.shape[0] != phi.dim:
        raise DimensionMismatch(f"state dim {rho.shape[0]} vs map dim {phi.dim}")
    out = sum(m @ rho @ m.conj().T for m in phi.ops)
    return 0.5 * (out + out.conj().T)


def apply_dual(phi: KrausMap, x: np.ndarray) -> np.ndarray:
    """Heisenberg-picture map ``X -> sum_k M_k^dag X M_k``."""
    x = _square(x, "observable")
    if x.shape[0] != phi.dim:
        raise DimensionMismatch(f"observable dim {x.shape[0]} vs map dim {phi.dim}")
    out = sum(m.conj().T @ x @ m for m in phi.ops)
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class LindbladGenerator:
    """Hamiltonian ``H`` and jump operators ``L_k``."""

    H: np.ndarray
    jumps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        h = hermitize(_square(self.H, "H"))
        d = h.shape[0]
        jumps = tuple(_square(l, "jump") for l in self.jumps)
        if any(l.shape != (d, d) for l in jumps):
            raise DimensionMismatch("jump operators must match H in shape")
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "jumps", jumps)

    @classmethod
    def dissipative(cls, jumps: Sequence[np.ndarray], dim: Optional[int] = None):
        if dim is None:
            dim = np.asarray(jumps[0]).shape[0]
        return cls(np.zeros((dim, dim), dtype=np.complex128), tuple(jumps))

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def with_hamiltonian(self, H: np.ndarray) -> "LindbladGenerator":
        return LindbladGenerator(H, self.jumps)

    def effective(self) -> np.ndarray:
        """``-iH - 1/2 sum L^dag L``, the non-unitary part acting from the left."""
        k = -1j * self.H
        for l in self.jumps:
            k = k - 0.5 * (l.conj().T @ l)
        return k

    def stacked_jumps(self) -> np.ndarray:
        if not self.jumps:
            return np.zeros((0, self.dim, self.dim), dtype=np.complex128)
        return np.ascontiguousarray(np.stack(self.jumps))

    def __call__(self, rho):
        return lindblad_rhs(self, rho)


def lindblad_rhs(gen: LindbladGenerator, rho: np.ndarray) -> np.ndarray:
    rho = _square(rho, "state")
    if rho.shape[0] != gen.dim:
        raise DimensionMismatch(f"state dim {rho.shape[0]} vs generator dim {gen.dim}")
    out = -1j * (gen.H @ rho - rho @ gen.H)
    for l in gen.jumps:
        ldl = l.conj().T @ l
        out += l @ rho @ l.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def equilibrium_residual(gen: LindbladGenerator, rho: np.ndarray) -> float:
    return float(np.linalg.norm(lindblad_rhs(gen, rho)))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    tangents: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _num_steps(t_end: float, h: float) -> int:
    if not h > 0:
        raise DomainViolation(f"step h must be positive, got {h}")
    if t_end < h * (1 - 1e-12):
        raise DomainViolation(f"t_end={t_end} must be at least h={h}")
    return int(math.ceil(t_end / h - 1e-9))


class Stepper:
    """Stateful RK4 driver around the compiled ``rk4_advance`` kernel."""

    def __init__(self, gen: LindbladGenerator, h: float, neg_tol: float = POSITIVITY_TOL):
        self.gen = gen
        self.h = float(h)
        self.neg_tol = float(neg_tol)
        self._k = np.ascontiguousarray(gen.effective())
        self._jumps = gen.stacked_jumps()
        self._empty = np.zeros((0, gen.dim), dtype=np.complex128)

    def advance(self, rho, nsteps: int, tangent=None, t0: float = 0.0):
        if nsteps <= 0:
            return rho, tangent
        rho = np.ascontiguousarray(rho, dtype=np.complex128)
        tan = self._empty if tangent is None else np.ascontiguousarray(tangent, dtype=np.complex128)
        rho, tan, bad = kernels.rk4_advance(
            rho, tan, self._k, self._jumps, self.h, int(nsteps), self.neg_tol
        )
        if bad:
            lam = hermitian_eig(0.5 * (rho + rho.conj().T)).eigenvalues[0]
            raise PositivityLost(
                f"min eigenvalue {lam:.3e} at t={t0 + bad * self.h:.6g} (h={self.h}); "
                "reduce the step"
            )
        return rho, (None if tangent is None else tan)


def integrate(
    gen: LindbladGenerator,
    rho0: np.ndarray,
    t_end: float,
    h: float,
    tangent0: Optional[np.ndarray] = None,
    record_every: int = 1,
) -> Trajectory:
    """Fixed-step classical RK4 on the Lindblad equation.

    A tangent perturbation, if given, is propagated by the same linear flow.
    States are recorded every ``record_every`` steps (and at the end).
    Raises ``PositivityLost`` if an eigenvalue drops below -1e-6.
    """
    nsteps = _num_steps(t_end, h)
    stepper = Stepper(gen, h)
    rho = _square(rho0, "rho0").copy()
    tan = None if tangent0 is None else _square(tangent0, "tangent0").copy()
    marks = list(range(0, nsteps + 1, record_every))
    if marks[-1] != nsteps:
        marks.append(nsteps)
    states = [rho]
    tangents = [tan] if tan is not None else None
    for prev, nxt in zip(marks[:-1], marks[1:]):
        rho, tan = stepper.advance(rho, nxt - prev, tan, t0=prev * h)
        rho = 0.5 * (rho + rho.conj().T)
        states.append(rho)
        if tangents is not None:
            tan = 0.5 * (tan + tan.conj().T)
            tangents.append(tan)
    return Trajectory(
        times=np.asarray(marks, dtype=float) * h,
        states=np.array(states),
        tangents=None if tangents is None else np.array(tangents),
    )


def step_halving_ratio(gen: LindbladGenerator, rho0, t_end: float, h: float) -> float:
    """``||x_h - x_{h/2}|| / ||x_{h/2} - x_{h/4}||`` on the final state; ~16 for RK4."""
    finals = [integrate(gen, rho0, t_end, hh, record_every=10**9).final for hh in (h, h / 2, h / 4)]
    return float(np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2]))


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def build_superoperator(gen: LindbladGenerator) -> np.ndarray:
    """Matrix ``S`` with ``vec(L(rho)) = S vec(rho)`` (column stacking)."""
    d = gen.dim
    eye = np.eye(d)
    k = gen.effective()
    # vec(A X B) = (B^T kron A) vec(X)
    s = np.kron(eye, k) + np.kron(k.conj(), eye)
    for l in gen.jumps:
        s += np.kron(l.conj(), l)
    return s


def superoperator_kernel_dimension(s: np.ndarray, rel_tol: float = KERNEL_REL_TOL) -> int:
    sv = scipy.linalg.svdvals(s)
    if sv[0] == 0:
        return s.shape[1]
    return int(np.sum(sv < rel_tol * sv[0]))


class SteadyState(NamedTuple):
    rho: np.ndarray
    kernel_dimension: int


def steady_state(gen: LindbladGenerator) -> SteadyState:
    """Unit-trace solution of ``L(rho) = 0`` by least squares.

    Solves ``[S; vec(I)^T] x = [0; 1]`` with an SVD-based least-squares
    routine and reports the numerical kernel dimension of ``S``.
    """
    d = gen.dim
    s = build_superoperator(gen)
    kdim = superoperator_kernel_dimension(s)
    trace_row = vec(np.eye(d)).conj()[None, :]
    system = np.vstack([s, trace_row])
    rhs = np.zeros(d * d + 1, dtype=np.complex128)
    rhs[-1] = 1.0
    x, *_ = scipy.linalg.lstsq(system, rhs, lapack_driver="gelsd")
    resid = float(np.linalg.norm(system @ x - rhs))
    if resid > 1e-6:
        raise NoSteadyState(f"least-squares residual {resid:.3e}")
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    lam_min = hermitian_eig(rho).eigenvalues[0]
    if kdim > 1 and lam_min < -1e-10:
        raise NonUniqueKernel(
            f"kernel dimension {kdim} and the least-squares element is not PSD "
            f"(min eigenvalue {lam_min:.3e})"
        )
    return SteadyState(rho, kdim)


def dsf_hermitian_closure(jumps: Sequence[np.ndarray], rel_tol: float = 1e-10) -> bool:
    """Whether span{I, L_1, ..., L_K} is closed under the adjoint."""
    jumps = [np.asarray(l, dtype=np.complex128) for l in jumps]
    if not jumps:
        return True
    d = jumps[0].shape[0]
    base = [vec(np.eye(d))] + [vec(l) for l in jumps]
    closed = base + [vec(l.conj().T) for l in jumps]

    def rank(vs):
        sv = np.linalg.svd(np.array(vs), compute_uv=False)
        return int(np.sum(sv >= rel_tol * sv[0])) if sv[0] > 0 else 0

    return rank(base) == rank(closed)
