"""Pure-numpy versions of the hot loops (no compiler required)."""

import numpy as np


def jacobi_eigh(a_in, tol, max_sweeps):
    n = a_in.shape[0]
    a = np.array(a_in, dtype=np.complex128)
    v = np.eye(n, dtype=np.complex128)
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(np.abs(a[iu]) ** 2))
        if off <= tol:
            return a.diagonal().real.copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                ph = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                sp = s * ph
                sc = s * np.conj(ph)
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - sc * colq
                a[:, q] = sp * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - sp * rowq
                a[q, :] = sc * rowp + c * rowq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - sc * vq
                v[:, q] = sp * vp + c * vq
    return a.diagonal().real.copy(), v, -1


def _lindblad_apply(x, k_eff, jumps, jumps_h):
    out = k_eff @ x + x @ k_eff.conj().T
    if len(jumps):
        out += np.einsum("kij,jl,klm->im", jumps, x, jumps_h, optimize=True)
    return out


def rk4_advance(rho, tangent, k_eff, jumps, h, nsteps, neg_tol):
    jumps_h = np.conj(np.transpose(jumps, (0, 2, 1)))
    has_tangent = tangent.shape[0] > 0
    shift = neg_tol * np.eye(rho.shape[0])
    for step in range(nsteps):
        k1 = _lindblad_apply(rho, k_eff, jumps, jumps_h)
        k2 = _lindblad_apply(rho + 0.5 * h * k1, k_eff, jumps, jumps_h)
        k3 = _lindblad_apply(rho + 0.5 * h * k2, k_eff, jumps, jumps_h)
        k4 = _lindblad_apply(rho + h * k3, k_eff, jumps, jumps_h)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if has_tangent:
            t1 = _lindblad_apply(tangent, k_eff, jumps, jumps_h)
            t2 = _lindblad_apply(tangent + 0.5 * h * t1, k_eff, jumps, jumps_h)
            t3 = _lindblad_apply(tangent + 0.5 * h * t2, k_eff, jumps, jumps_h)
            t4 = _lindblad_apply(tangent + h * t3, k_eff, jumps, jumps_h)
            tangent = tangent + (h / 6.0) * (t1 + 2.0 * t2 + 2.0 * t3 + t4)
        if neg_tol > 0.0:
            try:
                np.linalg.cholesky(rho + shift)
            except np.linalg.LinAlgError:
                return rho, tangent, step + 1
    return rho, tangent, 0
