"""Dense Hermitian kernels: eigendecomposition, spectral functions, and the
weighted Sylvester solves used by the Petz metrics and the Bures Lyapunov
function."""

from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kernels
from .errors import DomainViolation, NoConvergence, NotHermitian, SingularRho

HERMITIAN_TOL = 1e-12
JACOBI_REL_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
DEFAULT_PD_TOL = 1e-12


class HermitianEigen(NamedTuple):
    eigenvalues: np.ndarray
    unitary: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.unitary
        return (u * self.eigenvalues) @ u.conj().T


def hermiticity_defect(m: np.ndarray) -> float:
    """``||M - M^dag||_F / max(1, ||M||_F)``."""
    m = np.asarray(m)
    return float(np.linalg.norm(m - m.conj().T) / max(1.0, np.linalg.norm(m)))


def hermitize(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(M + M^dag)/2`` after checking ``M`` is Hermitian within ``tol``."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotHermitian("matrix has non-finite entries")
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitian(f"hermiticity defect {defect:.3e} exceeds {tol:.1e}")
    return 0.5 * (m + m.conj().T)


def hermitian_eig(m: np.ndarray) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues come back in ascending order with matching eigenvector
    columns.  Raises ``NotHermitian`` or ``NoConvergence``.
    """
    a = hermitize(m)
    tol = JACOBI_REL_TOL * np.linalg.norm(a)
    w, v, sweeps = kernels.jacobi_eigh(a, tol, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    order = np.argsort(w, kind="stable")
    return HermitianEigen(w[order], np.ascontiguousarray(v[:, order]))


def matrix_function(
    m: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    lower: Optional[float] = None,
    eig: Optional[HermitianEigen] = None,
    strict: bool = False,
) -> np.ndarray:
    """Apply a real scalar function to a Hermitian matrix spectrally.

    ``lower`` declares the domain of ``f``: eigenvalues below it by more than
    1e-12 raise ``DomainViolation``; those within the tolerance are clipped
    to ``lower``.  With ``strict=True`` the domain is open (``> lower``), as
    needed for ``log``.
    """
    if eig is None:
        eig = hermitian_eig(m)
    lam = eig.eigenvalues
    if lower is not None:
        if strict:
            if np.any(lam <= lower):
                raise DomainViolation(
                    f"eigenvalue {lam.min():.3e} not above domain bound {lower}"
                )
        else:
            if np.any(lam < lower - 1e-12):
                raise DomainViolation(
                    f"eigenvalue {lam.min():.3e} below domain bound {lower}"
                )
            lam = np.maximum(lam, lower)
    vals = np.asarray(f(lam), dtype=np.float64)
    u = eig.unitary
    out = (u * vals) @ u.conj().T
    return 0.5 * (out + out.conj().T)


def _pd_eig(rho: np.ndarray, tol: float, eig: Optional[HermitianEigen]) -> HermitianEigen:
    if eig is None:
        eig = hermitian_eig(rho)
    if eig.eigenvalues[0] <= tol:
        raise SingularRho(
            f"smallest eigenvalue {eig.eigenvalues[0]:.3e} is not above {tol:.1e}"
        )
    return eig


def solve_sylvester_weighted(
    rho: np.ndarray,
    delta: np.ndarray,
    s: float,
    tol: float = DEFAULT_PD_TOL,
    eig: Optional[HermitianEigen] = None,
) -> np.ndarray:
    """Solve ``s X rho + rho X = delta`` for ``X`` with ``rho`` positive definite.

    Works in the eigenbasis of ``rho`` where the solution is
    ``X'_ij = delta'_ij / (lam_i + s lam_j)``.  Pass ``eig`` to reuse a
    decomposition of ``rho`` across several solves.
    """
    if not 0.0 <= s <= 1.0:
        raise DomainViolation(f"s must lie in [0, 1], got {s}")
    eig = _pd_eig(rho, tol, eig)
    lam, u = eig.eigenvalues, eig.unitary
    d = u.conj().T @ np.asarray(delta, dtype=np.complex128) @ u
    x = d / (lam[:, None] + s * lam[None, :])
    return u @ x @ u.conj().T


def solve_lyapunov_bures(
    rho_inf: np.ndarray,
    delta: np.ndarray,
    tol: float = DEFAULT_PD_TOL,
    eig: Optional[HermitianEigen] = None,
) -> np.ndarray:
    """Hermitian ``G`` with ``rho_inf G + G rho_inf = delta``."""
    g = solve_sylvester_weighted(rho_inf, delta, 1.0, tol=tol, eig=eig)
    return 0.5 * (g + g.conj().T)
