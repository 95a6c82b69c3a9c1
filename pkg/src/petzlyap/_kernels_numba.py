"""Numba-compiled hot loops. Signatures mirror ``_kernels_numpy``."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def jacobi_eigh(a_in, tol, max_sweeps):
    """Cyclic complex Jacobi on a Hermitian matrix.

    Returns ``(diag, vectors, sweeps)``; ``sweeps == -1`` signals that the
    off-diagonal norm never dropped below ``tol``.
    """
    n = a_in.shape[0]
    a = a_in.copy()
    v = np.eye(n, dtype=np.complex128)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q].real ** 2 + a[p, q].imag ** 2
        if np.sqrt(2.0 * off) <= tol:
            w = np.empty(n)
            for i in range(n):
                w[i] = a[i, i].real
            return w, v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                ph = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                sp = s * ph
                sc = s * np.conj(ph)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - sc * akq
                    a[k, q] = sp * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - sp * aqk
                    a[q, k] = sc * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - sc * vkq
                    v[k, q] = sp * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i].real
    return w, v, -1


@njit(cache=True, nogil=True)
def _shifted_cholesky_ok(m, shift):
    # True iff m + shift*I admits a Cholesky factor (lower triangle read).
    n = m.shape[0]
    low = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        acc = m[j, j].real + shift
        for k in range(j):
            acc -= low[j, k].real ** 2 + low[j, k].imag ** 2
        if not acc > 0.0:
            return False
        d = np.sqrt(acc)
        low[j, j] = d
        for i in range(j + 1, n):
            z = m[i, j]
            for k in range(j):
                z -= low[i, k] * np.conj(low[j, k])
            low[i, j] = z / d
    return True


@njit(cache=True, nogil=True)
def _lindblad_apply(x, k_eff, jumps, jumps_h):
    out = np.dot(k_eff, x) + np.dot(x, k_eff.conj().T)
    for j in range(jumps.shape[0]):
        out += np.dot(np.dot(jumps[j], x), jumps_h[j])
    return out


@njit(cache=True, nogil=True)
def rk4_advance(rho, tangent, k_eff, jumps, h, nsteps, neg_tol):
    """Advance ``rho`` (and ``tangent``) by ``nsteps`` RK4 steps.

    The generator is encoded as ``k_eff = -iH - 1/2 sum L^dag L`` plus the
    stacked jump operators.  Returns ``(rho, tangent, bad_step)`` where
    ``bad_step`` is the 1-based step at which positivity failed, or 0.
    """
    jumps_h = np.empty_like(jumps)
    for j in range(jumps.shape[0]):
        jumps_h[j] = jumps[j].conj().T
    has_tangent = tangent.shape[0] > 0
    half = 0.5 * h
    sixth = h / 6.0
    for step in range(nsteps):
        k1 = _lindblad_apply(rho, k_eff, jumps, jumps_h)
        k2 = _lindblad_apply(rho + half * k1, k_eff, jumps, jumps_h)
        k3 = _lindblad_apply(rho + half * k2, k_eff, jumps, jumps_h)
        k4 = _lindblad_apply(rho + h * k3, k_eff, jumps, jumps_h)
        rho = rho + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if has_tangent:
            t1 = _lindblad_apply(tangent, k_eff, jumps, jumps_h)
            t2 = _lindblad_apply(tangent + half * t1, k_eff, jumps, jumps_h)
            t3 = _lindblad_apply(tangent + half * t2, k_eff, jumps, jumps_h)
            t4 = _lindblad_apply(tangent + h * t3, k_eff, jumps, jumps_h)
            tangent = tangent + sixth * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
        if neg_tol > 0.0 and not _shifted_cholesky_ok(rho, neg_tol):
            return rho, tangent, step + 1
    return rho, tangent, 0
