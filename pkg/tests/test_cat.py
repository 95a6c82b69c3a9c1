import math

import mpmath
import numpy as np
import pytest

from petzlyap.cat import (
    CatReservoirParams,
    bar_kraus_operators,
    commutant_dimension,
    convergence_experiment,
    equilibrium_mu,
    equilibrium_state,
    frame_equivalence_defect,
    generator_eq16,
    generator_eq18,
    generator_from_params,
    kerr_frame,
    kraus_lindblad_consistency,
    kraus_operators,
    mass_near_right_endpoint,
)
from petzlyap.dynamics import equilibrium_residual, lindblad_rhs, steady_state
from petzlyap.ensembles import random_density
from petzlyap.errors import DomainViolation, InvalidDimension, NonIntegrable, TruncationWarning
from petzlyap.states import (
    basis,
    bures_distance,
    cat2_state,
    coherent_state,
    fidelity,
    ket_to_dm,
    maximally_mixed,
    oscillator_ops,
)


def test_params_alpha_and_truncation():
    p = CatReservoirParams()
    assert p.alpha_c == 2.0 and p.truncation_ok
    with pytest.warns(TruncationWarning):
        assert not CatReservoirParams(nmax=10).check_truncation()


def test_kraus_trace_preserving_below_cutoff():
    p = CatReservoirParams(u=0.7, theta=0.4, nmax=25)
    bar = bar_kraus_operators(p)
    s = sum(m.conj().T @ m for m in bar.ops)
    # exact identity on all levels but the top one, which loses its raise
    np.testing.assert_allclose(s[:-1, :-1], np.eye(25), atol=1e-14)
    lab = kraus_operators(p)
    assert abs(lab.defect - bar.defect) < 1e-13
    with pytest.raises(InvalidDimension):
        bar_kraus_operators(CatReservoirParams(nmax=1))


def test_kraus_literal_entries():
    u, th = 0.3, 0.8
    bar = bar_kraus_operators(CatReservoirParams(u=u, theta=th, nmax=6))
    m1, m2 = bar.ops
    n = 3
    assert m1[n, n] == pytest.approx(math.cos(u / 2) * math.cos(th * math.sqrt(n) / 2))
    # sin(theta sqrt(N)/2)/sqrt(N) a^dag |n> = sin(theta sqrt(n+1)/2) |n+1>
    assert m1[n + 1, n] == pytest.approx(math.sin(u / 2) * math.sin(th * math.sqrt(n + 1) / 2))
    assert m2[n, n] == pytest.approx(math.sin(u / 2) * math.cos(th * math.sqrt(n + 1) / 2))
    assert m2[n - 1, n] == pytest.approx(-math.cos(u / 2) * math.sin(th * math.sqrt(n) / 2))


def test_frame_equivalence(rng):
    p = CatReservoirParams(nmax=15, u=0.4, theta=0.3, phi=1.1, f_phi=0.3)
    for _ in range(10):
        assert frame_equivalence_defect(p, random_density(16, rng), 5) < 1e-10
    rho = random_density(16, rng)
    back = kerr_frame(kerr_frame(rho, 1.1, 0.3, "to_bar"), 1.1, 0.3, "from_bar")
    np.testing.assert_allclose(back, rho, atol=1e-14)
    with pytest.raises(ValueError):
        kerr_frame(rho, 1.0, 0.0, "sideways")


def _eq18_literal(rho, beta, kappa, kappa_c, nmax):
    ops = oscillator_ops(nmax)
    a, ad, N = ops.a, ops.adag, ops.N
    P = np.diag(np.exp(1j * math.pi * np.arange(nmax + 1)))
    out = beta * ((ad - a) @ rho - rho @ (ad - a))
    out -= (kappa + kappa_c) / 2 * (N @ rho + rho @ N - 2 * a @ rho @ ad)
    out -= kappa_c * (a @ rho @ ad - P @ a @ rho @ ad @ P.conj().T)
    return out


def test_generators_match_literal_transcription(rng):
    rho = random_density(13, rng)
    for beta, k, kc in [(0.7, 1.0, 0.3), (1.5, 0.5, 2.0), (1.0, 1.0, 0.0)]:
        gen = generator_eq18(beta, k, kc, 12)
        np.testing.assert_allclose(lindblad_rhs(gen, rho), _eq18_literal(rho, beta, k, kc, 12), atol=1e-12)
    gen16 = generator_eq16(0.7, 1.0, 12)
    np.testing.assert_allclose(lindblad_rhs(gen16, rho), _eq18_literal(rho, 0.7, 1.0, 0.0, 12), atol=1e-12)


def test_complex_beta_gated():
    with pytest.raises(DomainViolation):
        generator_eq16(1 + 1j, 1.0, 5)
    gen = generator_eq16(1 + 1j, 1.0, 5, allow_complex=True)
    np.testing.assert_allclose(gen.H, gen.H.conj().T)
    with pytest.raises(DomainViolation):
        generator_eq18(1.0, 0.0, 0.0, 5)


def _mu_literal(z, beta, kappa, kappa_c):
    a = 2 * beta / (kappa + kappa_c)
    p = 2 * kappa_c / (kappa + kappa_c)
    return ((a * a - z * z) ** (a * a) * mpmath.e ** (z * z)) ** p / (a - z)


@pytest.mark.parametrize("beta,kappa,kappa_c", [(2.0, 1.0, 1.0), (1.0, 1.0, 0.3), (1.5, 2.0, 1.0)])
def test_mu_against_mpmath(beta, kappa, kappa_c):
    a = 2 * beta / (kappa + kappa_c)
    mpmath.mp.dps = 30
    norm = mpmath.quad(lambda z: _mu_literal(z, beta, kappa, kappa_c), [-a, 0, a])
    for z in (-0.9 * a, -0.2 * a, 0.0, 0.5 * a, 0.95 * a):
        ref = float(_mu_literal(mpmath.mpf(z), beta, kappa, kappa_c) / norm)
        assert equilibrium_mu(z, beta, kappa, kappa_c) == pytest.approx(ref, rel=1e-9)


def test_mu_endpoints_and_errors():
    assert equilibrium_mu(-2.0, 2.0, 1.0, 1.0) == 0.0
    with pytest.raises(DomainViolation):
        equilibrium_mu(2.0, 2.0, 1.0, 1.0)
    with pytest.raises(NonIntegrable):
        equilibrium_mu(0.0, 2.0, 1.0, 0.0)


def test_mass_concentrates_for_small_kappa_c():
    assert mass_near_right_endpoint(0.5 * (1 + 1e-3), 1.0, 1e-3) >= 0.99


def test_equilibrium_state_small():
    p = CatReservoirParams(beta=1.0, nmax=20)
    gen = generator_from_params(p)
    rho_eq = equilibrium_state(p, 200)
    assert equilibrium_residual(gen, rho_eq) < 1e-8
    assert bures_distance(rho_eq, steady_state(gen).rho) < 1e-6
    with pytest.raises(NonIntegrable):
        equilibrium_state(CatReservoirParams(kappa_c=0.0))


def test_pure_drive_limit():
    # kappa_c = 0: coherent steady state at alpha = 2 beta / kappa
    gen = generator_eq18(1.0, 1.0, 0.0, 30)
    ss = steady_state(gen)
    assert ss.kernel_dimension == 1
    assert fidelity(ss.rho, ket_to_dm(coherent_state(2.0, 30))) > 1 - 1e-5


def test_kraus_lindblad_consistency_scaling():
    d1 = kraus_lindblad_consistency(0.05, 0.05)
    d2 = kraus_lindblad_consistency(0.025, 0.025)
    assert d1 < 1e-4
    assert d1 / d2 >= 6


def test_commutant_dimension():
    assert commutant_dimension(oscillator_ops(12).a) == 1
    assert commutant_dimension(oscillator_ops(5).N) == 6
    assert commutant_dimension(np.eye(3)) == 9


def test_convergence_experiment_feasible_point():
    # small truncation where the equilibrium is resolvably full rank
    p = CatReservoirParams(beta=1.0, nmax=6)
    d = 7
    rng = np.random.default_rng(7)
    states = [ket_to_dm(basis(d, 0)), maximally_mixed(d)] + [random_density(d, rng) for _ in range(3)]
    rep = convergence_experiment(p, states, t_end=20.0, h=1e-3, sample_every=200)
    assert rep.min_eigenvalue > 1e-12
    assert rep.all_strict and rep.all_converged
    for t in rep.trajectories:
        assert t.max_rate_rel_error < 1e-4


def test_cat_probe_state_norms():
    psi = cat2_state(1.0, 20)
    assert abs(np.linalg.norm(psi) - 1) < 1e-14
