"""Randomized contraction suites over seeded channels."""

import math

import numpy as np

from .dynamics import apply_dual, apply_kraus
from .ensembles import (
    random_density,
    random_generator,
    random_hermitian,
    random_kraus,
    random_tangent,
    random_unitary_channel,
)
from .linalg import hermitian_eig
from .petz import PetzMeasure, contraction_trace, petz_norm_sq, random_measure
from .states import DISTANCE_KINDS, distance

CONTRACTION_SLACK = 1e-9


def contraction_suite(
    seed: int = 0,
    channels: int = 100,
    pairs: int = 20,
    dim: int = 4,
    kinds=DISTANCE_KINDS,
    unitary_only: bool = False,
    measures: int = 5,
    dual_checks: int = 50,
    slack: float = CONTRACTION_SLACK,
) -> dict:
    """Check distance contraction, Petz-norm contraction and dual spread.

    For every kind the reported ``worst_slack`` is the largest
    ``d(Phi rho1, Phi rho2) - d(rho1, rho2)``; a violation is any value above
    ``slack``.  With ``unitary_only`` the channels are unitary and the
    largest ``|d_after - d_before|`` is reported as ``worst_isometry_defect``.
    """
    rng = np.random.default_rng(seed)
    worst = {k: -math.inf for k in kinds}
    iso = {k: 0.0 for k in kinds}
    violations = {k: 0 for k in kinds}
    petz_worst = -math.inf
    petz_violations = 0
    spread_worst = -math.inf
    spread_violations = 0
    for _ in range(channels):
        phi = random_unitary_channel(dim, rng) if unitary_only else random_kraus(dim, rng)
        for _ in range(pairs):
            r1 = random_density(dim, rng)
            r2 = random_density(dim, rng)
            m1, m2 = apply_kraus(phi, r1), apply_kraus(phi, r2)
            for k in kinds:
                before = distance(k, r1, r2)
                after = distance(k, m1, m2)
                gap = after - before
                worst[k] = max(worst[k], gap)
                iso[k] = max(iso[k], abs(gap))
                if gap > slack:
                    violations[k] += 1
        for _ in range(measures):
            m = random_measure(rng)
            rho = random_density(dim, rng)
            delta = random_tangent(dim, rng)
            before = petz_norm_sq(rho, delta, m)
            after = petz_norm_sq(apply_kraus(phi, rho), apply_kraus(phi, delta), m)
            gap = (after - before) / max(before, 1e-300)
            petz_worst = max(petz_worst, gap)
            if gap > slack:
                petz_violations += 1
        for _ in range(max(1, dual_checks // max(channels, 1))):
            x = random_hermitian(dim, rng)
            lx = hermitian_eig(x).eigenvalues
            ly = hermitian_eig(apply_dual(phi, x)).eigenvalues
            gap = (ly[-1] - ly[0]) - (lx[-1] - lx[0])
            spread_worst = max(spread_worst, gap)
            if gap > slack:
                spread_violations += 1
    out = {
        "seed": seed,
        "channels": channels,
        "pairs": pairs,
        "dim": dim,
        "unitary_only": unitary_only,
        "slack": slack,
        "distances": {
            k: {"worst_slack": worst[k], "violations": violations[k]} for k in kinds
        },
        "petz_relative_worst": petz_worst,
        "petz_violations": petz_violations,
        "dual_spread_worst": spread_worst,
        "dual_spread_violations": spread_violations,
    }
    if unitary_only:
        for k in kinds:
            out["distances"][k]["worst_isometry_defect"] = iso[k]
    out["total_violations"] = (
        sum(violations.values()) + petz_violations + spread_violations
    )
    return out


def flow_contraction_suite(
    seed: int = 0,
    measures: int = 5,
    generators: int = 5,
    dim: int = 6,
    t_end: float = 2.0,
    h: float = 1e-2,
    extra_measures=(),
    slack: float = 1e-7,
) -> dict:
    """Petz norms of co-propagated tangents along random Lindblad flows.

    Each (measure, generator) pair starts from a random full-rank state and
    a random traceless tangent.  The worst per-step increase is reported
    relative to the initial norm; a violation is anything above ``slack``.
    """
    rng = np.random.default_rng(seed)
    ms = [random_measure(rng) for _ in range(measures)] + [
        m if isinstance(m, PetzMeasure) else PetzMeasure.from_atoms(m) for m in extra_measures
    ]
    gens = [random_generator(dim, rng) for _ in range(generators)]
    worst = -math.inf
    violations = 0
    for g in gens:
        for m in ms:
            rho = random_density(dim, rng, floor=0.1)
            delta = random_tangent(dim, rng)
            tr = contraction_trace(g, rho, delta, m, t_end, h)
            rel = tr.max_increase() / tr.values[0]
            worst = max(worst, float(rel))
            if rel > slack:
                violations += 1
    return {
        "seed": seed,
        "measures": len(ms),
        "generators": generators,
        "dim": dim,
        "t_end": t_end,
        "h": h,
        "slack": slack,
        "worst_relative_increase": worst,
        "violations": violations,
    }
