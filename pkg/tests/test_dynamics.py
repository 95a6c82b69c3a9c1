import math

import numpy as np
import pytest

from petzlyap.dynamics import (
    KrausMap,
    LindbladGenerator,
    apply_dual,
    apply_kraus,
    build_superoperator,
    dsf_hermitian_closure,
    equilibrium_residual,
    integrate,
    lindblad_rhs,
    steady_state,
    step_halving_ratio,
    unvec,
    vec,
)
from petzlyap.ensembles import random_density, random_generator, random_hermitian, random_kraus
from petzlyap.errors import DimensionMismatch, DomainViolation, NonUniqueKernel, PositivityLost
from petzlyap.states import basis, coherent_state, ket_to_dm, oscillator_ops


def test_kraus_tp_and_dual(rng):
    phi = random_kraus(4, rng)
    assert phi.trace_preserving and phi.defect < 1e-12
    np.testing.assert_allclose(apply_dual(phi, np.eye(4)), np.eye(4), atol=1e-12)
    rho, x = random_density(4, rng), random_hermitian(4, rng)
    lhs = np.trace(apply_kraus(phi, rho) @ x)
    rhs = np.trace(rho @ apply_dual(phi, x))
    assert abs(lhs - rhs) < 1e-12
    assert not KrausMap((0.5 * np.eye(2),)).trace_preserving
    with pytest.raises(DimensionMismatch):
        apply_kraus(phi, np.eye(3) / 3)


def test_generator_validation():
    with pytest.raises(DimensionMismatch):
        LindbladGenerator(np.zeros((2, 2)), (np.zeros((3, 3)),))


def test_lindblad_trace_and_hermiticity(rng):
    gen = random_generator(5, rng)
    rho = random_density(5, rng)
    out = lindblad_rhs(gen, rho)
    assert abs(np.trace(out)) < 1e-12
    np.testing.assert_allclose(out, out.conj().T, atol=1e-12)


def test_superoperator_matches_rhs(rng):
    gen = random_generator(4, rng)
    rho = random_density(4, rng)
    s = build_superoperator(gen)
    np.testing.assert_allclose(unvec(s @ vec(rho), 4), lindblad_rhs(gen, rho), atol=1e-12)


def test_photon_loss_steady_state_is_vacuum():
    ops = oscillator_ops(8)
    gen = LindbladGenerator.dissipative((ops.a,))
    ss = steady_state(gen)
    assert ss.kernel_dimension == 1
    np.testing.assert_allclose(ss.rho, ket_to_dm(basis(9, 0)), atol=1e-12)


def test_nonunique_kernel_detected():
    # two decoupled decays: span{|0>, |2>} is a decoherence-free block, so
    # the kernel holds both populations and both coherences
    l = np.zeros((4, 4), dtype=complex)
    l[0, 1] = l[2, 3] = 1.0
    gen = LindbladGenerator.dissipative((l,))
    ss = steady_state(gen)
    assert ss.kernel_dimension == 4
    assert np.linalg.eigvalsh(ss.rho).min() > -1e-10


def test_nonunique_non_psd_raises():
    # pure Hamiltonian with degenerate spectrum: least squares may return a
    # non-PSD combination, or a PSD one; either way the kernel is reported
    gen = LindbladGenerator(np.diag([0.0, 0.0, 1.0]).astype(complex), ())
    try:
        ss = steady_state(gen)
    except NonUniqueKernel:
        return
    assert ss.kernel_dimension > 1


def test_integrate_closed_form_decay():
    ops = oscillator_ops(15)
    gen = LindbladGenerator.dissipative((math.sqrt(0.7) * ops.a,))
    rho0 = ket_to_dm(coherent_state(1.2, 15))
    traj = integrate(gen, rho0, 3.0, 1e-2, record_every=50)
    n_t = [np.trace(ops.N @ r).real for r in traj.states]
    np.testing.assert_allclose(n_t, 1.44 * np.exp(-0.7 * traj.times) * np.trace(ops.N @ rho0).real / 1.44, rtol=1e-8)
    assert traj.times[-1] == pytest.approx(3.0)


def test_step_halving_ratio_near_16():
    ops = oscillator_ops(10)
    gen = LindbladGenerator(0.3 * (ops.a + ops.adag), (ops.a,))
    rho0 = 0.5 * ket_to_dm(basis(11, 3)) + 0.5 * np.eye(11) / 11
    r = step_halving_ratio(gen, rho0, 1.0, 0.1)
    assert 12 <= r <= 20


def test_positivity_lost_and_bad_step():
    ops = oscillator_ops(3)
    gen = LindbladGenerator.dissipative((10 * ops.a,))
    with pytest.raises(PositivityLost):
        integrate(gen, np.eye(4) / 4, 1.0, 0.5)
    with pytest.raises(DomainViolation):
        integrate(gen, np.eye(4) / 4, 1.0, 0.0)


def test_tangent_propagation_linear(rng):
    gen = random_generator(4, rng)
    r1, r2 = random_density(4, rng), random_density(4, rng)
    t = integrate(gen, r1, 1.0, 0.01, tangent0=r2 - r1, record_every=100)
    t2 = integrate(gen, r2, 1.0, 0.01, record_every=100)
    np.testing.assert_allclose(t.tangents[-1], t2.final - t.final, atol=1e-12)


def test_equilibrium_residual_zero_at_steady_state(rng):
    gen = random_generator(5, rng)
    ss = steady_state(gen)
    assert equilibrium_residual(gen, ss.rho) < 1e-10
    assert abs(np.trace(ss.rho) - 1) < 1e-12


def test_dsf_closure():
    ops = oscillator_ops(6)
    assert dsf_hermitian_closure([ops.a, ops.adag])
    assert not dsf_hermitian_closure([ops.a])
    assert dsf_hermitian_closure([ops.a + ops.adag])
