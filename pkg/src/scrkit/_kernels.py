"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment variable
``SCRKIT_DISABLE_NUMBA`` is unset (or set to ``0``/``false``). Both paths are
always importable as ``numpy_impl`` and ``numba_impl`` (the latter is ``None``
without numba) so tests and the benchmark can compare them directly.

Kernels
-------
s21_eval(f, f0, qi, qc, phi)
    Hanger transmission and its derivatives with respect to (f0, qi, qc, phi).
coulomb_energy_grad(pos)
    Dimensionless pairwise 1/r energy and gradient for an (n, d) array.
coulomb_hessian(pos)
    Hessian of the same energy, coordinates interleaved per particle.
coulomb_coefficients(pos, k)
    The (k+, k-, l) pair-coupling matrices for in-plane positions (n, 2).
"""

import os
import types

import numpy as np


def _env_disabled():
    return os.environ.get("SCRKIT_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# numpy implementations


def _s21_eval_np(f, f0, qi, qc, phi):
    x = (f - f0) / f0
    den = 1.0 + 2j * qi * x
    a = (qi / qc) * np.exp(1j * phi) / den
    s = 1.0 / (1.0 + a)
    s2 = -s * s
    jac = np.empty((f.shape[0], 4), dtype=np.complex128)
    jac[:, 0] = s2 * a * (2j * qi * f / (f0 * f0)) / den
    jac[:, 1] = s2 * a / (qi * den)
    jac[:, 2] = s2 * (-a / qc)
    jac[:, 3] = s2 * (1j * a)
    return s, jac


def _coulomb_energy_grad_np(pos):
    n = pos.shape[0]
    if n < 2:
        return 0.0, np.zeros_like(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(r2, 1.0)
    r = np.sqrt(r2)
    inv_r = 1.0 / r
    np.fill_diagonal(inv_r, 0.0)
    energy = 0.5 * inv_r.sum()
    inv_r3 = inv_r**3
    grad = -np.einsum("ij,ijk->ik", inv_r3, diff)
    return energy, grad


def _coulomb_hessian_np(pos):
    n, d = pos.shape
    diff = pos[:, None, :] - pos[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(r2, 1.0)
    inv_r = 1.0 / np.sqrt(r2)
    np.fill_diagonal(inv_r, 0.0)
    inv_r3 = inv_r**3
    inv_r5 = inv_r**5
    # pair block: (3 d_a d_b - r^2 delta_ab) / r^5
    blocks = 3.0 * np.einsum("ij,ija,ijb->ijab", inv_r5, diff, diff)
    blocks -= inv_r3[:, :, None, None] * np.eye(d)[None, None, :, :]
    h = -blocks
    diag = blocks.sum(axis=1)
    h[np.arange(n), np.arange(n)] = diag
    return h.transpose(0, 2, 1, 3).reshape(n * d, n * d)


def _coulomb_coefficients_np(pos, k):
    dx = pos[:, 0][:, None] - pos[:, 0][None, :]
    dy = pos[:, 1][:, None] - pos[:, 1][None, :]
    r2 = dx * dx + dy * dy
    n = pos.shape[0]
    np.fill_diagonal(r2, 1.0)
    inv_r3 = r2**-1.5
    np.fill_diagonal(inv_r3, 0.0)
    c2 = (dx * dx - dy * dy) / r2
    s2 = 2.0 * dx * dy / r2
    pref = 0.25 * k * inv_r3
    kplus = pref * (1.0 + 3.0 * c2)
    kminus = pref * (1.0 - 3.0 * c2)
    lmat = pref * 3.0 * s2
    for m in (kplus, kminus, lmat):
        m[np.arange(n), np.arange(n)] = 0.0
    return kplus, kminus, lmat


numpy_impl = types.SimpleNamespace(
    s21_eval=_s21_eval_np,
    coulomb_energy_grad=_coulomb_energy_grad_np,
    coulomb_hessian=_coulomb_hessian_np,
    coulomb_coefficients=_coulomb_coefficients_np,
)


# ---------------------------------------------------------------------------
# numba implementations

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


if numba is not None:

    @numba.njit(cache=True)
    def _s21_eval_nb(f, f0, qi, qc, phi):
        n = f.shape[0]
        s = np.empty(n, dtype=np.complex128)
        jac = np.empty((n, 4), dtype=np.complex128)
        rot = (qi / qc) * np.exp(1j * phi)
        for i in range(n):
            x = (f[i] - f0) / f0
            den = 1.0 + 2j * qi * x
            a = rot / den
            si = 1.0 / (1.0 + a)
            s2 = -si * si
            s[i] = si
            jac[i, 0] = s2 * a * (2j * qi * f[i] / (f0 * f0)) / den
            jac[i, 1] = s2 * a / (qi * den)
            jac[i, 2] = s2 * (-a / qc)
            jac[i, 3] = s2 * (1j * a)
        return s, jac

    @numba.njit(cache=True)
    def _coulomb_energy_grad_nb(pos):
        n, d = pos.shape
        grad = np.zeros((n, d))
        energy = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                r2 = 0.0
                for a in range(d):
                    t = pos[i, a] - pos[j, a]
                    r2 += t * t
                r = np.sqrt(r2)
                energy += 1.0 / r
                inv_r3 = 1.0 / (r2 * r)
                for a in range(d):
                    g = -(pos[i, a] - pos[j, a]) * inv_r3
                    grad[i, a] += g
                    grad[j, a] -= g
        return energy, grad

    @numba.njit(cache=True)
    def _coulomb_hessian_nb(pos):
        n, d = pos.shape
        h = np.zeros((n * d, n * d))
        for i in range(n):
            for j in range(i + 1, n):
                r2 = 0.0
                for a in range(d):
                    t = pos[i, a] - pos[j, a]
                    r2 += t * t
                r = np.sqrt(r2)
                inv_r3 = 1.0 / (r2 * r)
                inv_r5 = inv_r3 / r2
                for a in range(d):
                    da = pos[i, a] - pos[j, a]
                    for b in range(d):
                        db = pos[i, b] - pos[j, b]
                        v = 3.0 * da * db * inv_r5
                        if a == b:
                            v -= inv_r3
                        h[i * d + a, i * d + b] += v
                        h[j * d + a, j * d + b] += v
                        h[i * d + a, j * d + b] -= v
                        h[j * d + a, i * d + b] -= v
        return h

    @numba.njit(cache=True)
    def _coulomb_coefficients_nb(pos, k):
        n = pos.shape[0]
        kplus = np.zeros((n, n))
        kminus = np.zeros((n, n))
        lmat = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                r2 = dx * dx + dy * dy
                pref = 0.25 * k / (r2 * np.sqrt(r2))
                c2 = (dx * dx - dy * dy) / r2
                s2 = 2.0 * dx * dy / r2
                kp = pref * (1.0 + 3.0 * c2)
                km = pref * (1.0 - 3.0 * c2)
                lv = pref * 3.0 * s2
                kplus[i, j] = kp
                kplus[j, i] = kp
                kminus[i, j] = km
                kminus[j, i] = km
                lmat[i, j] = lv
                lmat[j, i] = lv
        return kplus, kminus, lmat

    numba_impl = types.SimpleNamespace(
        s21_eval=_s21_eval_nb,
        coulomb_energy_grad=_coulomb_energy_grad_nb,
        coulomb_hessian=_coulomb_hessian_nb,
        coulomb_coefficients=_coulomb_coefficients_nb,
    )
else:  # pragma: no cover
    numba_impl = None


USE_NUMBA = numba_impl is not None and not _env_disabled()
_active = numba_impl if USE_NUMBA else numpy_impl


def s21_eval(f, f0, qi, qc, phi):
    return _active.s21_eval(np.ascontiguousarray(f, dtype=np.float64), float(f0), float(qi), float(qc), float(phi))


def coulomb_energy_grad(pos):
    return _active.coulomb_energy_grad(np.ascontiguousarray(pos, dtype=np.float64))


def coulomb_hessian(pos):
    return _active.coulomb_hessian(np.ascontiguousarray(pos, dtype=np.float64))


def coulomb_coefficients(pos, k):
    return _active.coulomb_coefficients(np.ascontiguousarray(pos, dtype=np.float64), float(k))
