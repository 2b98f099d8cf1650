# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled 3x3 kernels: Hermitian eigensolver and time-ordered propagation.

Mirrors ``_pykernels`` function for function. Step Hamiltonians are given in
coefficient form ``alpha*I_z + beta*I_x + gamma*I_z**2``, which is real
symmetric, so the per-step eigensolver works in real arithmetic.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, cos, sin, hypot

cnp.import_array()

NAME = "cython"

cdef double SQRT_HALF = 0.7071067811865476
cdef int MAX_SWEEPS = 30

cdef extern from "complex.h" nogil:
    double complex conj(double complex)
    double cabs(double complex)
    double creal(double complex)


cdef void _cjacobi(double complex[3][3] a, double complex[3][3] v, double[3] w) noexcept nogil:
    cdef int sweep, p, q, k, pair
    cdef int pp[3]
    cdef int qq[3]
    cdef double scale = 0.0, off, r, theta, t, c, s, app, aqq
    cdef double complex ph, akp, akq, vkp, vkq
    pp[0] = 0; qq[0] = 1
    pp[1] = 0; qq[1] = 2
    pp[2] = 1; qq[2] = 2
    for p in range(3):
        for q in range(3):
            v[p][q] = 1.0 if p == q else 0.0
            scale += cabs(a[p][q]) ** 2
    scale = sqrt(scale)
    for sweep in range(MAX_SWEEPS):
        off = cabs(a[0][1]) ** 2 + cabs(a[0][2]) ** 2 + cabs(a[1][2]) ** 2
        if off <= (1e-17 * scale) ** 2 + 1e-300:
            break
        for pair in range(3):
            p = pp[pair]
            q = qq[pair]
            r = cabs(a[p][q])
            if r <= 1e-300:
                continue
            ph = a[p][q] / r
            app = creal(a[p][p])
            aqq = creal(a[q][q])
            theta = (aqq - app) / (2.0 * r)
            if theta == 0.0:
                t = 1.0
            elif theta > 0.0:
                t = 1.0 / (theta + hypot(theta, 1.0))
            else:
                t = -1.0 / (-theta + hypot(theta, 1.0))
            c = 1.0 / sqrt(t * t + 1.0)
            s = t * c
            # a <- a R, R has R[p,p]=c, R[p,q]=s, R[q,p]=-s*conj(ph), R[q,q]=c*conj(ph)
            for k in range(3):
                akp = a[k][p]
                akq = a[k][q]
                a[k][p] = c * akp - s * conj(ph) * akq
                a[k][q] = s * akp + c * conj(ph) * akq
                vkp = v[k][p]
                vkq = v[k][q]
                v[k][p] = c * vkp - s * conj(ph) * vkq
                v[k][q] = s * vkp + c * conj(ph) * vkq
            # a <- R^H a
            for k in range(3):
                akp = a[p][k]
                akq = a[q][k]
                a[p][k] = c * akp - s * ph * akq
                a[q][k] = s * akp + c * ph * akq
            a[q][p] = conj(a[p][q])
    for p in range(3):
        w[p] = creal(a[p][p])


cdef void _sort_fix(double[3] w, double complex[3][3] v) noexcept nogil:
    cdef int i, j, k, lead
    cdef double tmp, mx, m
    cdef double complex ctmp, piv
    # insertion sort, stable
    for i in range(1, 3):
        j = i
        while j > 0 and w[j - 1] > w[j]:
            tmp = w[j]; w[j] = w[j - 1]; w[j - 1] = tmp
            for k in range(3):
                ctmp = v[k][j]; v[k][j] = v[k][j - 1]; v[k][j - 1] = ctmp
            j -= 1
    for j in range(3):
        mx = 0.0
        for k in range(3):
            m = cabs(v[k][j])
            if m > mx:
                mx = m
        lead = 0
        for k in range(3):
            if cabs(v[k][j]) >= mx - 1e-12:
                lead = k
                break
        piv = conj(v[lead][j]) / cabs(v[lead][j])
        for k in range(3):
            v[k][j] = v[k][j] * piv


def eigh_batch(h):
    """Eigen-decompose a stack of Hermitian 3x3 matrices; see ``_pykernels.eigh_batch``."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] hb = np.ascontiguousarray(
        np.asarray(h, dtype=np.complex128).reshape(-1, 3, 3))
    cdef Py_ssize_t n = hb.shape[0], b
    cdef int i, j
    cdef double complex a[3][3]
    cdef double complex v[3][3]
    cdef double w[3]
    w_out = np.empty((n, 3), dtype=np.float64)
    v_out = np.empty((n, 3, 3), dtype=np.complex128)
    cdef double[:, :] wo = w_out
    cdef double complex[:, :, :] vo = v_out
    with nogil:
        for b in range(n):
            for i in range(3):
                for j in range(3):
                    a[i][j] = 0.5 * (hb[b, i, j] + conj(hb[b, j, i]))
            _cjacobi(a, v, w)
            _sort_fix(w, v)
            for i in range(3):
                wo[b, i] = w[i]
                for j in range(3):
                    vo[b, i, j] = v[i][j]
    return w_out, v_out


cdef void _rjacobi(double[3][3] a, double[3][3] v, double[3] w) noexcept nogil:
    cdef int sweep, p, q, k, pair
    cdef int pp[3]
    cdef int qq[3]
    cdef double scale = 0.0, off, r, theta, t, c, s, akp, akq
    pp[0] = 0; qq[0] = 1
    pp[1] = 0; qq[1] = 2
    pp[2] = 1; qq[2] = 2
    for p in range(3):
        for q in range(3):
            v[p][q] = 1.0 if p == q else 0.0
            scale += a[p][q] * a[p][q]
    scale = sqrt(scale)
    for sweep in range(MAX_SWEEPS):
        off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]
        if off <= (1e-17 * scale) ** 2 + 1e-300:
            break
        for pair in range(3):
            p = pp[pair]
            q = qq[pair]
            r = a[p][q]
            if fabs(r) <= 1e-300:
                continue
            theta = (a[q][q] - a[p][p]) / (2.0 * r)
            if theta == 0.0:
                t = 1.0
            elif theta > 0.0:
                t = 1.0 / (theta + hypot(theta, 1.0))
            else:
                t = -1.0 / (-theta + hypot(theta, 1.0))
            c = 1.0 / sqrt(t * t + 1.0)
            s = t * c
            for k in range(3):
                akp = a[k][p]
                akq = a[k][q]
                a[k][p] = c * akp - s * akq
                a[k][q] = s * akp + c * akq
                akp = v[k][p]
                akq = v[k][q]
                v[k][p] = c * akp - s * akq
                v[k][q] = s * akp + c * akq
            for k in range(3):
                akp = a[p][k]
                akq = a[q][k]
                a[p][k] = c * akp - s * akq
                a[q][k] = s * akp + c * akq
            a[q][p] = a[p][q]
    for p in range(3):
        w[p] = a[p][p]


cdef void _step(double al, double be, double ga, double dt, double complex[3][3] s) noexcept nogil:
    cdef double a[3][3]
    cdef double v[3][3]
    cdef double w[3]
    cdef double complex ph[3]
    cdef int i, j, k
    cdef double complex acc
    cdef double off = be * SQRT_HALF
    a[0][0] = al + ga; a[0][1] = off; a[0][2] = 0.0
    a[1][0] = off; a[1][1] = 0.0; a[1][2] = off
    a[2][0] = 0.0; a[2][1] = off; a[2][2] = ga - al
    _rjacobi(a, v, w)
    for k in range(3):
        ph[k] = cos(w[k] * dt) - 1j * sin(w[k] * dt)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc = acc + v[i][k] * ph[k] * v[j][k]
            s[i][j] = acc


cdef void _matmul_left(double complex[3][3] s, double complex[3][3] u) noexcept nogil:
    # u <- s @ u
    cdef double complex tmp[3][3]
    cdef int i, j, k
    cdef double complex acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc = acc + s[i][k] * u[k][j]
            tmp[i][j] = acc
    for i in range(3):
        for j in range(3):
            u[i][j] = tmp[i][j]


def _coefficients(alpha, beta, gamma):
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    if not (alpha.shape == beta.shape == gamma.shape) or alpha.ndim != 1:
        raise ValueError("coefficient arrays must be 1-D and of equal length")
    return alpha, beta, gamma


def propagate_coeffs(alpha, beta, gamma, double dt):
    """Ordered product of ``exp(-i H_k dt)`` over all steps, first step rightmost."""
    alpha, beta, gamma = _coefficients(alpha, beta, gamma)
    cdef double[:] al = alpha
    cdef double[:] be = beta
    cdef double[:] ga = gamma
    cdef Py_ssize_t n = al.shape[0], k
    cdef double complex u[3][3]
    cdef double complex s[3][3]
    cdef int i, j
    for i in range(3):
        for j in range(3):
            u[i][j] = 1.0 if i == j else 0.0
    with nogil:
        for k in range(n):
            _step(al[k], be[k], ga[k], dt, s)
            _matmul_left(s, u)
    out = np.empty((3, 3), dtype=np.complex128)
    cdef double complex[:, :] o = out
    for i in range(3):
        for j in range(3):
            o[i, j] = u[i][j]
    return out


def evolve_coeffs(alpha, beta, gamma, double dt, psi0):
    """State after every step; row 0 is ``psi0``, row k is the state after k steps."""
    alpha, beta, gamma = _coefficients(alpha, beta, gamma)
    cdef double[:] al = alpha
    cdef double[:] be = beta
    cdef double[:] ga = gamma
    cdef Py_ssize_t n = al.shape[0], k
    out = np.empty((n + 1, 3), dtype=np.complex128)
    out[0] = np.asarray(psi0, dtype=np.complex128)
    cdef double complex[:, :] o = out
    cdef double complex s[3][3]
    cdef double complex psi[3]
    cdef double complex nxt[3]
    cdef int i, j
    for i in range(3):
        psi[i] = o[0, i]
    with nogil:
        for k in range(n):
            _step(al[k], be[k], ga[k], dt, s)
            for i in range(3):
                nxt[i] = s[i][0] * psi[0] + s[i][1] * psi[1] + s[i][2] * psi[2]
            for i in range(3):
                psi[i] = nxt[i]
                o[k + 1, i] = psi[i]
    return out
