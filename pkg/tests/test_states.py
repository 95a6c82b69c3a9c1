import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from petzlyap.errors import DomainViolation, InvalidDimension, SingularState, SupportMismatch, TruncationWarning
from petzlyap.ensembles import random_density, random_unitary
from petzlyap.states import (
    DISTANCE_KINDS,
    basis,
    bures_distance,
    cat2_state,
    cat_state,
    check_density,
    chernoff_q,
    chi2_divergence,
    coherent_state,
    distance,
    fidelity,
    hilbert_distance,
    ket_to_dm,
    maximally_mixed,
    oscillator_ops,
    relative_entropy,
    same_support,
    trace_distance,
)


def test_oscillator_ops():
    ops = oscillator_ops(6)
    assert ops.dim == 7
    np.testing.assert_allclose(np.diag(ops.N), np.arange(7))
    np.testing.assert_allclose(ops.adag @ ops.a, ops.N, atol=1e-14)
    np.testing.assert_allclose(np.diag(ops.parity_rotation), (-1.0) ** np.arange(7))
    with pytest.raises(InvalidDimension):
        oscillator_ops(0)


def test_coherent_state_statistics():
    alpha = 1.3 - 0.4j
    psi = coherent_state(alpha, 40)
    assert abs(np.vdot(psi, psi) - 1) < 1e-14
    ops = oscillator_ops(40)
    assert abs(np.vdot(psi, ops.a @ psi) - alpha) < 1e-12
    assert abs(np.vdot(psi, ops.N @ psi).real - abs(alpha) ** 2) < 1e-12
    # overlap with a second coherent state, exp(-|a-b|^2 / 2) in modulus
    phi = coherent_state(-0.5, 40)
    assert abs(abs(np.vdot(phi, psi)) - math.exp(-abs(alpha + 0.5) ** 2 / 2)) < 1e-12


def test_coherent_truncation_warns():
    with pytest.warns(TruncationWarning):
        coherent_state(4.0, 10)


def test_cat_states():
    psi = cat2_state(1.5, 30)
    ref = coherent_state(1.5, 30) + 1j * coherent_state(-1.5, 30)
    ref /= np.linalg.norm(ref)
    assert abs(abs(np.vdot(ref, psi)) - 1) < 1e-13
    # N = 2 with equal weights is an even cat: only even photon numbers
    even = cat_state(1.0, [1, 1], 20)
    assert np.allclose(even[1::2], 0, atol=1e-14)


def test_check_density():
    with pytest.raises(DomainViolation):
        check_density(np.diag([0.5, 0.6]))
    with pytest.raises(DomainViolation):
        check_density(np.diag([1.5, -0.5]))
    check_density(maximally_mixed(3))


def test_pure_state_distances():
    d = 4
    a, b = ket_to_dm(basis(d, 0)), ket_to_dm(basis(d, 1))
    assert trace_distance(a, b) == pytest.approx(1.0)
    assert fidelity(a, b) == pytest.approx(0.0, abs=1e-14)
    plus = ket_to_dm((basis(d, 0) + basis(d, 1)) / math.sqrt(2))
    assert fidelity(a, plus) == pytest.approx(1 / math.sqrt(2))
    assert bures_distance(a, plus) == pytest.approx(math.sqrt(1 - 1 / math.sqrt(2)))


def test_classical_oracles(rng):
    # commuting states reduce to classical formulas
    p = rng.dirichlet(np.ones(5))
    q = rng.dirichlet(np.ones(5))
    u = random_unitary(5, rng)
    r1, r2 = u @ np.diag(p) @ u.conj().T, u @ np.diag(q) @ u.conj().T
    assert relative_entropy(r1, r2) == pytest.approx(np.sum(p * np.log(p / q)), rel=1e-10)
    assert fidelity(r1, r2) == pytest.approx(np.sum(np.sqrt(p * q)), rel=1e-10)
    assert trace_distance(r1, r2) == pytest.approx(0.5 * np.sum(np.abs(p - q)), rel=1e-10)
    assert chi2_divergence(r1, r2) == pytest.approx(np.sum((p - q) ** 2 / q), rel=1e-10)
    r = np.log(p / q)
    assert hilbert_distance(r1, r2) == pytest.approx(r.max() - r.min(), rel=1e-10)
    grid = np.linspace(0, 1, 20001)
    qmin = min(np.sum(p ** s * q ** (1 - s)) for s in grid)
    assert chernoff_q(r1, r2)[0] == pytest.approx(qmin, abs=1e-9)


def test_relative_entropy_against_logm(rng):
    r1, r2 = random_density(4, rng), random_density(4, rng)
    ref = np.trace(r1 @ (scipy.linalg.logm(r1) - scipy.linalg.logm(r2))).real
    assert relative_entropy(r1, r2) == pytest.approx(ref, rel=1e-9)


def test_support_handling():
    a = np.diag([0.5, 0.5, 0.0])
    b = np.diag([0.3, 0.7, 0.0])
    c = np.diag([0.3, 0.0, 0.7])
    assert same_support(a, b)[0]
    assert not same_support(a, c)[0]
    assert math.isfinite(hilbert_distance(a, b))
    assert hilbert_distance(a, c) == math.inf
    assert relative_entropy(a, b) >= 0
    with pytest.raises(SupportMismatch):
        relative_entropy(a, c)
    with pytest.raises(SingularState):
        chi2_divergence(a, b)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_distance_axioms(d, seed):
    rng = np.random.default_rng(seed)
    r1, r2 = random_density(d, rng), random_density(d, rng)
    for k in DISTANCE_KINDS:
        assert distance(k, r1, r1) == pytest.approx(0.0, abs=1e-6)
        assert distance(k, r1, r2) >= 0
    for k in ("trace", "bures", "chernoff", "hilbert"):
        assert distance(k, r1, r2) == pytest.approx(distance(k, r2, r1), rel=1e-8, abs=1e-12)


def test_unknown_kind():
    with pytest.raises(ValueError):
        distance("nope", np.eye(2) / 2, np.eye(2) / 2)
