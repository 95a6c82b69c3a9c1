"""Engineered reservoir stabilizing a two-component cat state.

Kraus operators of one atom-cavity interaction, the Kerr-frame change,
the continuous-time generators (with and without photon loss), the
analytic mixture-of-coherent-states equilibrium, and the convergence
certification built on the Bures Lyapunov function.
"""

import functools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special

from .dynamics import (
    KrausMap,
    LindbladGenerator,
    Stepper,
    _num_steps,
    apply_kraus,
    equilibrium_residual,
)
from .errors import DomainViolation, InvalidDimension, NonIntegrable, TruncationWarning
from .linalg import hermitian_eig
from .petz import bures_lyapunov, bures_lyapunov_rate
from .states import (
    bures_distance,
    coherent_state,
    oscillator_ops,
    trace_distance,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CatReservoirParams:
    u: float = 0.1
    theta: float = 0.1
    phi: float = math.pi
    f_phi: float = 0.0
    beta: float = 2.0
    kappa: float = 1.0
    kappa_c: float = 1.0
    nmax: int = 30

    @property
    def alpha_c(self) -> float:
        return 2.0 * self.beta / (self.kappa + self.kappa_c)

    @property
    def truncation_ok(self) -> bool:
        return self.alpha_c ** 2 < self.nmax / 4.0

    def check_truncation(self) -> bool:
        if not self.truncation_ok:
            warnings.warn(
                f"alpha_c^2 = {self.alpha_c ** 2:.3g} is not below nmax/4 = {self.nmax / 4:.3g}",
                TruncationWarning,
                stacklevel=2,
            )
        return self.truncation_ok


def _kerr_diag(nmax: int, phi: float, f_phi: float) -> np.ndarray:
    n = np.arange(nmax + 1, dtype=float)
    return phi * n * n + f_phi * n


def bar_kraus_operators(p: CatReservoirParams) -> KrausMap:
    """The two interaction Kraus operators in the Kerr-rotated frame.

    ``sin(theta sqrt(N)/2)/sqrt(N)`` is only ever applied next to a creation
    or annihilation factor, so it is built level-wise without a 0/0.
    """
    if p.nmax < 2:
        raise InvalidDimension(f"nmax must be >= 2, got {p.nmax}")
    d = p.nmax + 1
    n = np.arange(d, dtype=float)
    cu, su = math.cos(p.u / 2), math.sin(p.u / 2)
    # |n> -> sin(theta sqrt(n+1)/2) |n+1>, for n < nmax
    raise_op = np.diag(np.sin(p.theta * np.sqrt(n[1:]) / 2), -1)
    # |n> -> sin(theta sqrt(n)/2) |n-1>
    lower_op = np.diag(np.sin(p.theta * np.sqrt(n[1:]) / 2), 1)
    m1 = cu * np.diag(np.cos(p.theta * np.sqrt(n) / 2)) + su * raise_op
    m2 = su * np.diag(np.cos(p.theta * np.sqrt(n + 1) / 2)) - cu * lower_op
    return KrausMap((m1.astype(np.complex128), m2.astype(np.complex128)))


def kraus_operators(p: CatReservoirParams) -> KrausMap:
    """Lab-frame operators ``e^{-i h_N} Mbar_k e^{i h_N}``, ``h_N = phi N^2 + f N``."""
    bar = bar_kraus_operators(p)
    ph = np.exp(1j * _kerr_diag(p.nmax, p.phi, p.f_phi))
    return KrausMap(tuple((ph.conj()[:, None] * m) * ph[None, :] for m in bar.ops))


def kerr_frame(rho: np.ndarray, phi: float, f_phi: float, direction: str = "to_bar") -> np.ndarray:
    """``to_bar``: ``e^{i h_N} rho e^{-i h_N}``; ``from_bar`` is the inverse."""
    rho = np.asarray(rho, dtype=np.complex128)
    nmax = rho.shape[0] - 1
    ph = np.exp(1j * _kerr_diag(nmax, phi, f_phi))
    if direction == "from_bar":
        ph = ph.conj()
    elif direction != "to_bar":
        raise ValueError(f"direction must be 'to_bar' or 'from_bar', got {direction!r}")
    return (ph[:, None] * rho) * ph.conj()[None, :]


def generator_eq16(beta: complex, kappa: float, nmax: int, allow_complex: bool = False) -> LindbladGenerator:
    """Coherent drive plus engineered damping: ``H = i(beta a^dag - conj(beta) a)``, ``L = sqrt(kappa) a``."""
    beta = complex(beta)
    if beta.imag != 0 and not allow_complex:
        raise DomainViolation("complex beta requires allow_complex=True")
    if not kappa > 0:
        raise DomainViolation(f"kappa must be positive, got {kappa}")
    ops = oscillator_ops(nmax)
    H = 1j * (beta * ops.adag - beta.conjugate() * ops.a)
    return LindbladGenerator(H, (math.sqrt(kappa) * ops.a,))


def generator_eq18(beta: complex, kappa: float, kappa_c: float, nmax: int, allow_complex: bool = False) -> LindbladGenerator:
    """Drive, engineered damping, and photon loss seen in the Kerr frame.

    Jumps are ``sqrt(kappa) a`` and ``sqrt(kappa_c) e^{i pi N} a``.
    """
    if kappa < 0 or kappa_c < 0 or not kappa + kappa_c > 0:
        raise DomainViolation("need kappa, kappa_c >= 0 with kappa + kappa_c > 0")
    beta = complex(beta)
    if beta.imag != 0 and not allow_complex:
        raise DomainViolation("complex beta requires allow_complex=True")
    ops = oscillator_ops(nmax)
    H = 1j * (beta * ops.adag - beta.conjugate() * ops.a)
    jumps = []
    if kappa > 0:
        jumps.append(math.sqrt(kappa) * ops.a)
    if kappa_c > 0:
        jumps.append(math.sqrt(kappa_c) * (ops.parity_rotation @ ops.a))
    return LindbladGenerator(H, tuple(jumps))


def generator_from_params(p: CatReservoirParams) -> LindbladGenerator:
    return generator_eq18(p.beta, p.kappa, p.kappa_c, p.nmax)


# -- analytic equilibrium ----------------------------------------------------


def _mu_exponents(beta: float, kappa: float, kappa_c: float) -> tuple[float, float, float, float]:
    """``(alpha_c, p, e, b)`` with ``mu ~ (alpha_c - z)^e (alpha_c + z)^b exp(p z^2)``."""
    alpha_c = 2.0 * beta / (kappa + kappa_c)
    p = 2.0 * kappa_c / (kappa + kappa_c)
    b = p * alpha_c ** 2
    return alpha_c, p, b - 1.0, b


@functools.lru_cache(maxsize=64)
def _mu_normalization(beta: float, kappa: float, kappa_c: float) -> float:
    alpha_c, p, e, b = _mu_exponents(beta, kappa, kappa_c)
    if e <= -1.0:
        raise NonIntegrable(
            f"endpoint exponent {e:.3g} <= -1: the density cannot be normalized "
            "(kappa_c must be positive)"
        )
    # QAWS handles the algebraic endpoint factors (z+a)^b (a-z)^e exactly
    val, err = scipy.integrate.quad(
        lambda z: math.exp(p * z * z),
        -alpha_c,
        alpha_c,
        weight="alg",
        wvar=(b, e),
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    return 1.0 / val


def equilibrium_mu(z: float, beta: float, kappa: float, kappa_c: float) -> float:
    """Normalized weight of the real coherent state ``|z>`` in the equilibrium mixture."""
    if not kappa_c > 0:
        raise NonIntegrable("the mixture density needs kappa_c > 0")
    alpha_c, p, e, b = _mu_exponents(beta, kappa, kappa_c)
    if z < -alpha_c or z >= alpha_c:
        raise DomainViolation(f"z = {z} outside (-{alpha_c}, {alpha_c})")
    if z == -alpha_c:
        # continuous extension; the factor (alpha_c + z)^b vanishes there
        return 0.0
    mu0 = _mu_normalization(float(beta), float(kappa), float(kappa_c))
    return mu0 * (alpha_c - z) ** e * (alpha_c + z) ** b * math.exp(p * z * z)


def _coherent_real_matrix(zs: np.ndarray, nmax: int) -> np.ndarray:
    # rows: coherent kets |z_j> for real z_j, untruncated normalization
    n = np.arange(nmax + 1)
    out = np.empty((len(zs), nmax + 1))
    for j, z in enumerate(zs):
        if z == 0:
            out[j] = 0.0
            out[j, 0] = 1.0
            continue
        mag = np.exp(n * math.log(abs(z)) - 0.5 * scipy.special.gammaln(n + 1) - 0.5 * z * z)
        out[j] = mag * np.sign(z) ** n
    return out


def equilibrium_state(p: CatReservoirParams, nodes: int = 400) -> np.ndarray:
    """Quadrature of ``int mu(z) |z><z| dz`` over real coherent states.

    Gauss-Jacobi nodes absorb both algebraic endpoint factors of ``mu``, so
    the remaining integrand is smooth.  The result is renormalized to unit
    trace.
    """
    if not p.kappa_c > 0:
        raise NonIntegrable("the mixture equilibrium needs kappa_c > 0")
    alpha_c, pp, e, b = _mu_exponents(p.beta, p.kappa, p.kappa_c)
    if e <= -1.0:
        raise NonIntegrable(f"endpoint exponent {e:.3g} <= -1")
    p.check_truncation()
    # weight (1 - x)^e (1 + x)^b on [-1, 1]
    x, w = scipy.special.roots_jacobi(nodes, e, b)
    zs = alpha_c * x
    weights = w * np.exp(pp * zs * zs)
    kets = _coherent_real_matrix(zs, p.nmax)
    rho = (kets.T * weights) @ kets
    rho = rho / np.trace(rho)
    return rho.astype(np.complex128)


def mass_near_right_endpoint(beta: float, kappa: float, kappa_c: float, frac: float = 0.9) -> float:
    """Probability mass of ``mu`` on ``[frac * alpha_c, alpha_c]``."""
    alpha_c, p, e, b = _mu_exponents(beta, kappa, kappa_c)
    mu0 = _mu_normalization(float(beta), float(kappa), float(kappa_c))
    val, _ = scipy.integrate.quad(
        lambda z: math.exp(p * z * z) * (alpha_c + z) ** b,
        frac * alpha_c,
        alpha_c,
        weight="alg",
        wvar=(0.0, e),
        epsabs=0.0,
        epsrel=1e-12,
    )
    return mu0 * val


def frame_equivalence_defect(p: CatReservoirParams, rho: np.ndarray, iterations: int = 5) -> float:
    """Frobenius gap between iterating the lab-frame map and iterating the
    rotated-frame map on the rotated state, then rotating back."""
    lab, bar = kraus_operators(p), bar_kraus_operators(p)
    x = np.asarray(rho, dtype=np.complex128)
    y = kerr_frame(x, p.phi, p.f_phi, "to_bar")
    for _ in range(iterations):
        x = apply_kraus(lab, x)
        y = apply_kraus(bar, y)
    return float(np.linalg.norm(x - kerr_frame(y, p.phi, p.f_phi, "from_bar")))


# -- discrete / continuous consistency --------------------------------------


def _probe_states(nmax: int) -> list:
    from .states import basis, cat2_state, ket_to_dm

    d = nmax + 1
    kets = [basis(d, 0), basis(d, 1), coherent_state(1.0, nmax), cat2_state(1.0, nmax)]
    return [ket_to_dm(k) for k in kets]


def kraus_lindblad_consistency(
    u: float, theta: float, nmax: int = 20, steps: int = 1, kappa: float = 1.0
) -> float:
    """Trace-norm gap between ``steps`` Kraus applications and ``steps`` RK4
    steps of the drive-plus-damping generator.

    The time step and drive follow ``kappa dt = theta^2/4`` and
    ``beta dt = u theta/4``.  The defect is the largest trace distance over
    a fixed set of probe states well inside the truncation.
    """
    if theta == 0:
        return 0.0
    dt = theta ** 2 / (4.0 * kappa)
    beta = u * theta / (4.0 * dt)
    kraus = bar_kraus_operators(CatReservoirParams(u=u, theta=theta, nmax=nmax))
    gen = generator_eq16(beta, kappa, nmax)
    stepper = Stepper(gen, dt, neg_tol=0.0)
    worst = 0.0
    for rho in _probe_states(nmax):
        a = rho
        for _ in range(steps):
            a = apply_kraus(kraus, a)
        b, _ = stepper.advance(rho, steps)
        worst = max(worst, 2.0 * trace_distance(a, 0.5 * (b + b.conj().T)))
    return worst


# -- strictness ingredients --------------------------------------------------


def commutant_dimension(a: np.ndarray, rel_tol: float = 1e-10) -> int:
    """Real dimension of ``{G Hermitian : [G, A] = 0}``."""
    a = np.asarray(a, dtype=np.complex128)
    d = a.shape[0]
    cols = []
    for i in range(d):
        for j in range(i, d):
            mats = []
            if i == j:
                e = np.zeros((d, d), dtype=np.complex128)
                e[i, i] = 1.0
                mats.append(e)
            else:
                e = np.zeros((d, d), dtype=np.complex128)
                e[i, j] = e[j, i] = 1.0
                mats.append(e)
                f = np.zeros((d, d), dtype=np.complex128)
                f[i, j], f[j, i] = -1j, 1j
                mats.append(f)
            for g in mats:
                c = (g @ a - a @ g).reshape(-1)
                cols.append(np.concatenate([c.real, c.imag]))
    m = np.array(cols).T
    sv = scipy.linalg.svdvals(m)
    if sv[0] == 0:
        return m.shape[1]
    return int(m.shape[1] - np.sum(sv >= rel_tol * sv[0]))


# -- convergence experiment --------------------------------------------------


@dataclass
class TrajectoryReport:
    label: str
    times: np.ndarray
    V: np.ndarray
    rate: np.ndarray
    rate_fd: np.ndarray
    d_trace: np.ndarray
    d_bures: np.ndarray
    min_eig: np.ndarray
    trace_defect: np.ndarray
    floor: float = 1e-9

    @property
    def monotone_violation(self) -> float:
        """Largest increase of V between consecutive samples above the floor."""
        mask = self.V[:-1] > self.floor
        if not np.any(mask):
            return 0.0
        return float(np.max(np.diff(self.V)[mask], initial=0.0))

    @property
    def max_rate(self) -> float:
        """Largest analytic rate where V exceeds 1e-8 (must be negative)."""
        mask = self.V > 1e-8
        return float(np.max(self.rate[mask])) if np.any(mask) else -math.inf

    @property
    def max_rate_rel_error(self) -> float:
        mask = (self.V > 1e-8) & np.isfinite(self.rate_fd)
        if not np.any(mask):
            return 0.0
        err = np.abs(self.rate[mask] - self.rate_fd[mask]) / np.abs(self.rate[mask])
        return float(np.max(err))

    @property
    def strictly_decreasing(self) -> bool:
        return self.monotone_violation <= 0.0 and self.max_rate < 0.0

    @property
    def final_bures(self) -> float:
        return float(self.d_bures[-1])


def sampled_lyapunov_series(
    gen: LindbladGenerator,
    rho_inf: np.ndarray,
    rho0: np.ndarray,
    t_end: float,
    h: float,
    sample_every: int = 100,
    label: str = "",
    lyapunov: bool = True,
) -> TrajectoryReport:
    """Integrate and sample V, its analytic rate, and a central-difference rate.

    The finite-difference rate at a sample uses the two neighbouring RK4
    states (spacing ``h``).  With ``rho_inf`` not positive definite the
    Lyapunov columns raise ``SingularRho``, unless ``lyapunov=False`` in
    which case they are filled with NaN and only the distances are tracked.
    """
    nsteps = _num_steps(t_end, h)
    stepper = Stepper(gen, h)
    eig = hermitian_eig(rho_inf)
    if lyapunov:
        # fail before integrating rather than at the first sample
        bures_lyapunov(rho_inf, rho_inf, eig=eig)
    rows = []
    rho = np.array(rho0, dtype=np.complex128)
    prev = None
    marks = list(range(0, nsteps + 1, sample_every))
    if marks[-1] != nsteps:
        marks.append(nsteps)
    done = 0
    for mark in marks:
        if mark > done:
            # stop one step short so the FD stencil straddles the sample
            rho, _ = stepper.advance(rho, mark - done - 1, t0=done * h)
            prev = rho
            rho, _ = stepper.advance(rho, 1, t0=(mark - 1) * h)
            done = mark
        cur = 0.5 * (rho + rho.conj().T)
        if lyapunov:
            v, _ = bures_lyapunov(rho_inf, cur, eig=eig)
            rate = bures_lyapunov_rate(rho_inf, cur, gen, eig=eig)
        else:
            v = rate = math.nan
        if lyapunov and prev is not None and mark < nsteps:
            nxt, _ = stepper.advance(rho, 1)
            v_prev, _ = bures_lyapunov(rho_inf, prev, eig=eig)
            v_next, _ = bures_lyapunov(rho_inf, nxt, eig=eig)
            rate_fd = (v_next - v_prev) / (2.0 * h)
        else:
            rate_fd = math.nan
        lam = hermitian_eig(cur).eigenvalues
        rows.append(
            (
                mark * h,
                v,
                rate,
                rate_fd,
                trace_distance(cur, rho_inf),
                bures_distance(cur, rho_inf),
                lam[0],
                abs(np.trace(cur) - 1.0),
            )
        )
    arr = np.array(rows, dtype=float)
    return TrajectoryReport(label, *arr.T)


@dataclass
class ConvergenceReport:
    params: CatReservoirParams
    rho_inf: np.ndarray
    residual: float
    min_eigenvalue: float
    trajectories: list = field(default_factory=list)

    @property
    def all_strict(self) -> bool:
        return all(t.strictly_decreasing for t in self.trajectories)

    @property
    def all_converged(self) -> bool:
        return all(t.final_bures < 1e-4 for t in self.trajectories)


def convergence_experiment(
    p: CatReservoirParams,
    initial_states: Sequence,
    t_end: Optional[float] = None,
    h: float = 1e-3,
    sample_every: int = 100,
    rho_inf: Optional[np.ndarray] = None,
    labels: Optional[Sequence[str]] = None,
) -> ConvergenceReport:
    """Bures-Lyapunov certification of convergence to the reservoir equilibrium.

    ``rho_inf`` defaults to the null-space steady state of the generator and
    must be positive definite (``SingularRho`` otherwise).
    """
    from .dynamics import steady_state

    gen = generator_from_params(p)
    if rho_inf is None:
        rho_inf = steady_state(gen).rho
    if t_end is None:
        t_end = 20.0 / p.kappa
    lam_min = float(hermitian_eig(rho_inf).eigenvalues[0])
    report = ConvergenceReport(p, rho_inf, equilibrium_residual(gen, rho_inf), lam_min)
    labels = list(labels) if labels is not None else [f"state{i}" for i in range(len(initial_states))]
    for label, rho0 in zip(labels, initial_states):
        report.trajectories.append(
            sampled_lyapunov_series(gen, rho_inf, rho0, t_end, h, sample_every, label=label)
        )
    return report
