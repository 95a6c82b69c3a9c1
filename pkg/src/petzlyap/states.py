"""Density matrices, truncated oscillator operators, coherent and cat kets,
and the six contractive distances between states."""

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import (
    DomainViolation,
    InvalidDimension,
    NotHermitian,
    SingularState,
    SupportMismatch,
    TruncationWarning,
)
from .linalg import HermitianEigen, hermitian_eig, hermitize, matrix_function

STATE_TOL = 1e-10
TRUNCATION_TAIL_TOL = 1e-8
SUPPORT_EIG_TOL = 1e-10
SUPPORT_ANGLE_TOL = 1e-8
SINGULAR_TOL = 1e-12
DISTANCE_KINDS = ("trace", "bures", "chernoff", "relative_entropy", "chi2", "hilbert")


def check_density(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    """Validate a density matrix and return its Hermitian part."""
    rho = np.asarray(rho, dtype=np.complex128)
    try:
        rho = hermitize(rho, tol)
    except NotHermitian as exc:
        raise DomainViolation(f"not a density matrix: {exc}") from None
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise DomainViolation(f"trace {tr:.12g} differs from 1")
    lam_min = hermitian_eig(rho).eigenvalues[0]
    if lam_min < -tol:
        raise DomainViolation(f"negative eigenvalue {lam_min:.3e}")
    return rho


def check_tangent(delta: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate a traceless Hermitian perturbation."""
    delta = hermitize(np.asarray(delta, dtype=np.complex128), tol)
    tr = np.trace(delta)
    if abs(tr) > tol * max(1.0, np.linalg.norm(delta)):
        raise DomainViolation(f"tangent has trace {abs(tr):.3e}")
    return delta


def ket_to_dm(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=np.complex128)
    return np.outer(ket, ket.conj())


def basis(dim: int, n: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[n] = 1.0
    return v


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128) / dim


@dataclass(frozen=True)
class OscillatorOps:
    """Annihilation, number and parity operators on span{|0>, ..., |nmax>}."""

    nmax: int
    a: np.ndarray
    N: np.ndarray
    parity_rotation: np.ndarray

    @property
    def dim(self) -> int:
        return self.nmax + 1

    @property
    def adag(self) -> np.ndarray:
        return self.a.conj().T

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128)


def oscillator_ops(nmax: int) -> OscillatorOps:
    if int(nmax) != nmax or nmax < 1:
        raise InvalidDimension(f"nmax must be an integer >= 1, got {nmax}")
    nmax = int(nmax)
    n = np.arange(nmax + 1)
    a = np.diag(np.sqrt(n[1:]).astype(np.complex128), 1)
    N = np.diag(n.astype(np.complex128))
    parity = np.diag(((-1.0) ** n).astype(np.complex128))
    return OscillatorOps(nmax, a, N, parity)


def coherent_tail_mass(alpha: complex, nmax: int) -> float:
    """Poisson mass above ``nmax`` for mean ``|alpha|^2``."""
    from scipy.stats import poisson

    return float(poisson.sf(nmax, abs(alpha) ** 2))


def coherent_state(alpha: complex, nmax: int) -> np.ndarray:
    """Truncated coherent ket, renormalized after truncation.

    Emits ``TruncationWarning`` when the discarded tail mass exceeds 1e-8.
    """
    if nmax < 1:
        raise InvalidDimension(f"nmax must be >= 1, got {nmax}")
    tail = coherent_tail_mass(alpha, nmax)
    if tail > TRUNCATION_TAIL_TOL:
        warnings.warn(
            f"coherent state |{alpha}> loses {tail:.2e} of its norm above n={nmax}",
            TruncationWarning,
            stacklevel=2,
        )
    n = np.arange(nmax + 1)
    alpha = complex(alpha)
    if alpha == 0:
        return basis(nmax + 1, 0)
    r = abs(alpha)
    phase = np.exp(1j * math.atan2(alpha.imag, alpha.real) * n)
    # log-space magnitudes avoid overflow of alpha^n / sqrt(n!) for large nmax
    mag = np.exp(n * math.log(r) - 0.5 * gammaln(n + 1) - 0.5 * r * r)
    ket = mag * phase
    return ket / np.linalg.norm(ket)


def cat_state(alpha: complex, coeffs: Sequence[complex], nmax: int) -> np.ndarray:
    """Normalized superposition ``sum_k c_k |alpha e^{2 i pi k / N}>``, k = 1..N."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    n_comp = len(coeffs)
    if n_comp < 1:
        raise InvalidDimension("a cat state needs at least one component")
    ket = np.zeros(nmax + 1, dtype=np.complex128)
    for k, c in enumerate(coeffs, start=1):
        ket += c * coherent_state(alpha * np.exp(2j * np.pi * k / n_comp), nmax)
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise DomainViolation("cat components cancel exactly")
    return ket / norm


def cat2_state(alpha: complex, nmax: int) -> np.ndarray:
    """``(|alpha> + i|-alpha>)`` normalized, the two-component cat."""
    return cat_state(-alpha, [1 / math.sqrt(2), 1j / math.sqrt(2)], nmax)


# -- distances ---------------------------------------------------------------


def _psd_sqrt(eig: HermitianEigen) -> np.ndarray:
    return matrix_function(None, np.sqrt, lower=0.0, eig=eig)


def fidelity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))``, clipped to [0, 1]."""
    s1 = _psd_sqrt(hermitian_eig(rho1))
    inner = s1 @ np.asarray(rho2) @ s1
    lam = hermitian_eig(0.5 * (inner + inner.conj().T)).eigenvalues
    f = float(np.sum(np.sqrt(np.maximum(lam, 0.0))))
    return min(max(f, 0.0), 1.0)


def trace_distance(rho1, rho2) -> float:
    lam = hermitian_eig(np.asarray(rho1) - np.asarray(rho2)).eigenvalues
    return 0.5 * float(np.sum(np.abs(lam)))


def bures_distance(rho1, rho2) -> float:
    return math.sqrt(max(0.0, 1.0 - fidelity(rho1, rho2)))


def _chernoff_objective_factory(rho1, rho2):
    e1, e2 = hermitian_eig(rho1), hermitian_eig(rho2)
    l1 = np.maximum(e1.eigenvalues, 0.0)
    l2 = np.maximum(e2.eigenvalues, 0.0)
    overlap = np.abs(e1.unitary.conj().T @ e2.unitary) ** 2
    pos1, pos2 = l1 > 0, l2 > 0

    def objective(s: float) -> float:
        # 0^0 is taken as 0: rho^0 is the support projector
        p1 = np.where(pos1, np.power(np.where(pos1, l1, 1.0), s), 0.0)
        p2 = np.where(pos2, np.power(np.where(pos2, l2, 1.0), 1.0 - s), 0.0)
        return float(p1 @ overlap @ p2)

    return objective


def chernoff_q(rho1, rho2, grid: int = 33, s_tol: float = 1e-6) -> tuple[float, float]:
    """``min_{s in [0,1]} Tr(rho1^s rho2^(1-s))`` and its minimizer.

    Coarse grid followed by golden-section refinement of the bracketing
    interval until its width drops below ``s_tol``.
    """
    obj = _chernoff_objective_factory(rho1, rho2)
    ss = np.linspace(0.0, 1.0, grid)
    vals = np.array([obj(s) for s in ss])
    k = int(np.argmin(vals))
    best_s, best = float(ss[k]), float(vals[k])
    lo, hi = float(ss[max(k - 1, 0)]), float(ss[min(k + 1, grid - 1)])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = obj(c), obj(d)
    while hi - lo > s_tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = obj(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = obj(d)
    for s, v in ((c, fc), (d, fd)):
        if v < best:
            best_s, best = s, v
    return best, best_s


def chernoff_distance(rho1, rho2) -> float:
    q, _ = chernoff_q(rho1, rho2)
    return math.sqrt(max(0.0, 1.0 - q))


def _support_basis(eig: HermitianEigen, tol: float) -> tuple[np.ndarray, np.ndarray]:
    mask = eig.eigenvalues > tol
    return eig.unitary[:, mask], eig.unitary[:, ~mask]


def relative_entropy(rho1, rho2) -> float:
    """``Tr rho1 (log rho1 - log rho2)`` (natural log).

    A singular ``rho2`` is accepted when the support of ``rho1`` lies inside
    it; otherwise ``SupportMismatch``.
    """
    e1, e2 = hermitian_eig(rho1), hermitian_eig(rho2)
    l1 = e1.eigenvalues
    keep1 = l1 > SUPPORT_EIG_TOL
    ent1 = float(np.sum(l1[keep1] * np.log(l1[keep1])))
    sup2, null2 = _support_basis(e2, SUPPORT_EIG_TOL)
    if null2.shape[1]:
        leak = np.linalg.norm(null2.conj().T @ np.asarray(rho1) @ null2)
        if leak > SUPPORT_EIG_TOL:
            raise SupportMismatch(f"rho1 has weight {leak:.3e} outside supp(rho2)")
    l2 = e2.eigenvalues[e2.eigenvalues > SUPPORT_EIG_TOL]
    proj = sup2.conj().T @ np.asarray(rho1) @ sup2
    cross = float(np.real(np.sum(np.diag(proj) * np.log(l2))))
    return ent1 - cross


def relative_entropy_distance(rho1, rho2) -> float:
    return math.sqrt(max(0.0, relative_entropy(rho1, rho2)))


def chi2_divergence(rho1, rho2) -> float:
    """``Tr((rho1-rho2) rho2^-1/2 (rho1-rho2) rho2^-1/2)``."""
    e2 = hermitian_eig(rho2)
    if e2.eigenvalues[0] <= SINGULAR_TOL:
        raise SingularState(f"rho2 has eigenvalue {e2.eigenvalues[0]:.3e}")
    inv_sqrt = matrix_function(None, lambda x: 1.0 / np.sqrt(x), eig=e2)
    diff = np.asarray(rho1) - np.asarray(rho2)
    return float(np.real(np.trace(diff @ inv_sqrt @ diff @ inv_sqrt)))


def chi2_distance(rho1, rho2) -> float:
    return math.sqrt(max(0.0, chi2_divergence(rho1, rho2)))


def same_support(rho1, rho2) -> tuple[bool, Optional[np.ndarray]]:
    """Numerical support comparison.

    Supports match when the null spaces (eigenvalues below 1e-10) have equal
    dimension and every principal angle between them is below 1e-8.  On a
    match the common support basis is returned (taken from ``rho2``).
    """
    sup1, null1 = _support_basis(hermitian_eig(rho1), SUPPORT_EIG_TOL)
    sup2, null2 = _support_basis(hermitian_eig(rho2), SUPPORT_EIG_TOL)
    if null1.shape[1] != null2.shape[1]:
        return False, None
    if null1.shape[1] == 0:
        return True, sup2
    # sin of the largest principal angle between the two null spaces
    resid = null2 - null1 @ (null1.conj().T @ null2)
    if np.linalg.norm(resid, 2) >= SUPPORT_ANGLE_TOL:
        return False, None
    return True, sup2


def hilbert_distance(rho1, rho2) -> float:
    """Hilbert projective metric, ``inf`` when the supports differ."""
    ok, sup = same_support(rho1, rho2)
    if not ok:
        return math.inf
    r1 = sup.conj().T @ np.asarray(rho1) @ sup
    r2 = sup.conj().T @ np.asarray(rho2) @ sup
    if r1.shape[0] == 0:
        return 0.0
    inv_sqrt = matrix_function(r2, lambda x: 1.0 / np.sqrt(x), lower=0.0, strict=True)
    lam = hermitian_eig(inv_sqrt @ r1 @ inv_sqrt).eigenvalues
    if lam[0] <= 0:
        return math.inf
    return float(math.log(lam[-1] / lam[0]))


_DISTANCES = {
    "trace": trace_distance,
    "bures": bures_distance,
    "chernoff": chernoff_distance,
    "relative_entropy": relative_entropy_distance,
    "chi2": chi2_distance,
    "hilbert": hilbert_distance,
}


def distance(kind: str, rho1, rho2) -> float:
    """One of the six contractive distances; ``kind`` in ``DISTANCE_KINDS``."""
    try:
        fn = _DISTANCES[kind]
    except KeyError:
        raise ValueError(f"unknown distance kind {kind!r}; expected one of {DISTANCE_KINDS}")
    return fn(rho1, rho2)
