# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: counter-based normals, Monte Carlo path loops and the
bivariate normal CDF. Signatures mirror ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, log, exp, sin, cos, asin, erfc, fabs, M_PI, INFINITY
from libc.stdint cimport uint64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t _GAMMA = 0x9E3779B97F4A7C15ULL
cdef double _TWO53 = 1.0 / 9007199254740992.0
cdef double _TWOPI = 2.0 * M_PI
cdef double _SQRT1_2 = 0.70710678118654752440


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def stream_key(seed):
    cdef uint64_t s = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    return int(_mix(s))


cdef inline void _normal_pair(uint64_t key, uint64_t c, double* z1, double* z2) noexcept nogil:
    cdef uint64_t b1 = _mix(key + (c + 1) * _GAMMA)
    cdef uint64_t b2 = _mix(key + (c + 2) * _GAMMA)
    cdef double u1 = (<double>(b1 >> 11) + 1.0) * _TWO53
    cdef double u2 = <double>(b2 >> 11) * _TWO53
    cdef double r = sqrt(-2.0 * log(u1))
    z1[0] = r * cos(_TWOPI * u2)
    z2[0] = r * sin(_TWOPI * u2)


cdef inline void _path_noise(uint64_t key, Py_ssize_t p, Py_ssize_t n_steps, Py_ssize_t j,
                             bint antithetic, double* z1, double* z2) noexcept nogil:
    cdef uint64_t base = <uint64_t>p
    cdef double sign = 1.0
    if antithetic:
        base = base >> 1
        if p & 1:
            sign = -1.0
    _normal_pair(key, base * <uint64_t>(2 * n_steps) + <uint64_t>(2 * j), z1, z2)
    z1[0] *= sign
    z2[0] *= sign


cdef int _nthreads(int threads):
    if threads > 0:
        return threads
    import os
    env = os.environ.get("FXIP_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def std_normals(seed, Py_ssize_t n_rows, Py_ssize_t n_cols):
    if n_cols % 2:
        raise ValueError("n_cols must be even")
    cdef uint64_t key = <uint64_t>stream_key(seed)
    out = np.empty((n_rows, n_cols))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double a, b
    for i in range(n_rows):
        for j in range(0, n_cols, 2):
            _normal_pair(key, <uint64_t>(i * n_cols + j), &a, &b)
            o[i, j] = a
            o[i, j + 1] = b
    return out


def heston_qt_paths(double v0, double[::1] kb2, double[::1] kq2, double ab1,
                    double[::1] emr, double[::1] tt, double[::1] va, double[::1] vb,
                    double h, Py_ssize_t n_paths, seed, bint antithetic, int threads=0):
    cdef Py_ssize_t n_steps = kb2.shape[0]
    cdef uint64_t key = <uint64_t>stream_key(seed)
    cdef double sh = sqrt(h)
    xb_a = np.empty(n_paths)
    xq_a = np.empty(n_paths)
    v_a = np.empty(n_paths)
    vm_a = np.empty(n_paths)
    cdef double[::1] xbo = xb_a, xqo = xq_a, vo = v_a, vmo = vm_a
    cdef Py_ssize_t p, j
    cdef double v, vmin, xb, xq, sv, z1, z2, m, g2
    cdef int nt = _nthreads(threads)
    for p in prange(n_paths, nogil=True, num_threads=nt, schedule="static"):
        v = v0
        vmin = v0
        xb = 0.0
        xq = 0.0
        for j in range(n_steps):
            _path_noise(key, p, n_steps, j, antithetic, &z1, &z2)
            sv = sqrt(v)
            xb = xb + (-0.5 * v * (ab1 * ab1 + kb2[j] * kb2[j]) * h
                       + sv * sh * (ab1 * z1 + kb2[j] * z2))
            xq = xq + (-0.5 * v * (ab1 * ab1 + kq2[j] * kq2[j]) * h
                       + sv * sh * (-ab1 * z1 + kq2[j] * z2))
            m = tt[j] + (v - tt[j]) * emr[j]
            g2 = log(1.0 + (va[j] * v + vb[j]) / (m * m))
            v = m * exp(-0.5 * g2 + sqrt(g2) * z2)
            if v < vmin:
                vmin = v
        xbo[p] = xb
        xqo[p] = xq
        vo[p] = v
        vmo[p] = vmin
    return xb_a, xq_a, v_a, vm_a


def heston_qx_paths(double v0, double drift, double c1, double c2,
                    double[::1] emr, double[::1] tt, double[::1] va, double[::1] vb,
                    double h, double rbar, Py_ssize_t n_paths, seed, bint antithetic,
                    int threads=0):
    cdef Py_ssize_t n_steps = tt.shape[0]
    cdef uint64_t key = <uint64_t>stream_key(seed)
    cdef double sh = sqrt(h)
    y_a = np.empty(n_paths)
    i_a = np.empty(n_paths)
    v_a = np.empty(n_paths)
    vm_a = np.empty(n_paths)
    cdef double[::1] yo = y_a, io = i_a, vo = v_a, vmo = vm_a
    cdef Py_ssize_t p, j
    cdef double v, vn, vmin, y, integ, sv, z1, z2, m, g2
    cdef int nt = _nthreads(threads)
    for p in prange(n_paths, nogil=True, num_threads=nt, schedule="static"):
        v = v0
        vmin = v0
        y = 0.0
        integ = 0.0
        for j in range(n_steps):
            _path_noise(key, p, n_steps, j, antithetic, &z1, &z2)
            sv = sqrt(v)
            y = y + drift * h + sv * sh * (c1 * z1 + c2 * z2)
            m = tt[j] + (v - tt[j]) * emr[j]
            g2 = log(1.0 + (va[j] * v + vb[j]) / (m * m))
            vn = m * exp(-0.5 * g2 + sqrt(g2) * z2)
            integ = integ + (rbar + (v + vn) / 16.0) * h
            v = vn
            if v < vmin:
                vmin = v
        yo[p] = y
        io[p] = integ
        vo[p] = v
        vmo[p] = vmin
    return y_a, i_a, v_a, vm_a


def sabr_qx_paths(double alpha0, double nu, double rho, double drift, double rbar,
                  double h, Py_ssize_t n_steps, Py_ssize_t n_paths, seed,
                  bint antithetic, int threads=0):
    cdef uint64_t key = <uint64_t>stream_key(seed)
    cdef double sh = sqrt(h)
    cdef double rc = sqrt(1.0 - rho * rho)
    y_a = np.empty(n_paths)
    i_a = np.empty(n_paths)
    s_a = np.empty(n_paths)
    cdef double[::1] yo = y_a, io = i_a, so = s_a
    cdef Py_ssize_t p, j
    cdef double s, sn, y, integ, z1, z2
    cdef int nt = _nthreads(threads)
    for p in prange(n_paths, nogil=True, num_threads=nt, schedule="static"):
        s = alpha0
        y = 0.0
        integ = 0.0
        for j in range(n_steps):
            _path_noise(key, p, n_steps, j, antithetic, &z1, &z2)
            y = y + drift * h + 0.5 * s * sh * (rc * z1 + rho * z2)
            sn = s * exp(-0.5 * nu * nu * h + nu * sh * z2)
            integ = integ + (rbar + (s * s + sn * sn) / 16.0) * h
            s = sn
        yo[p] = y
        io[p] = integ
        so[p] = log(s)
    return y_a, i_a, s_a


# Gauss-Legendre half-nodes on [-1, 1] for 6, 12 and 20 points.
cdef double[3] W6 = [0.1713244923791705, 0.3607615730481384, 0.4679139345726904]
cdef double[3] X6 = [-0.9324695142031522, -0.6612093864662647, -0.2386191860831970]
cdef double[6] W12 = [0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                      0.2031674267230659, 0.2334925365383547, 0.2491470458134029]
cdef double[6] X12 = [-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
                      -0.5873179542866171, -0.3678314989981802, -0.1252334085114692]
cdef double[10] W20 = [0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                       0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
                       0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
                       0.1527533871307259]
cdef double[10] X20 = [-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
                       -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
                       -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
                       -0.07652652113349733]


cdef inline double _phi(double x) noexcept nogil:
    return 0.5 * erfc(-x * _SQRT1_2)


cdef double _bvnu(double h, double k, double r) noexcept nogil:
    cdef double* w
    cdef double* x
    cdef int lg, i
    cdef double hk, hs, asr, sn, bvn = 0.0, a_s, a, bs, c, d, b, xs, rs, s
    cdef double ar = fabs(r)
    if ar < 0.3:
        w = W6
        x = X6
        lg = 3
    elif ar < 0.75:
        w = W12
        x = X12
        lg = 6
    else:
        w = W20
        x = X20
        lg = 10
    hk = h * k
    if ar < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = asin(r)
        for i in range(lg):
            sn = sin(asr * (x[i] + 1.0) * 0.5)
            bvn = bvn + w[i] * exp((sn * hk - hs) / (1.0 - sn * sn))
            sn = sin(asr * (1.0 - x[i]) * 0.5)
            bvn = bvn + w[i] * exp((sn * hk - hs) / (1.0 - sn * sn))
        return bvn * asr / (4.0 * M_PI) + _phi(-h) * _phi(-k)
    if r < 0.0:
        k = -k
        hk = -hk
    if ar < 1.0:
        a_s = (1.0 - r) * (1.0 + r)
        a = sqrt(a_s)
        bs = (h - k) * (h - k)
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        bvn = a * exp(-(bs / a_s + hk) / 2.0) * (
            1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_s * a_s / 5.0)
        if hk > -160.0:
            b = sqrt(bs)
            bvn = bvn - (exp(-hk / 2.0) * sqrt(_TWOPI) * _phi(-b / a) * b
                         * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0))
        a = a / 2.0
        for i in range(lg):
            for s in (-1.0, 1.0):
                xs = (a * (s * x[i] + 1.0)) * (a * (s * x[i] + 1.0))
                rs = sqrt(1.0 - xs)
                bvn = bvn + a * w[i] * (exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs
                                        - exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)))
        bvn = -bvn / _TWOPI
    if r > 0.0:
        bvn = bvn + _phi(-(h if h > k else k))
    else:
        bvn = -bvn
        if k > h:
            bvn = bvn + _phi(k) - _phi(h)
    return bvn


def bvn_cdf(x, y, rho, int threads=0):
    cdef double[::1] xv = np.clip(np.ascontiguousarray(x, dtype=np.float64), -37.0, 37.0)
    cdef double[::1] yv = np.clip(np.ascontiguousarray(y, dtype=np.float64), -37.0, 37.0)
    cdef double[::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double p
    cdef int nt = _nthreads(threads)
    for i in prange(n, nogil=True, num_threads=nt, schedule="static"):
        p = _bvnu(-xv[i], -yv[i], rv[i])
        if p < 0.0:
            p = 0.0
        elif p > 1.0:
            p = 1.0
        o[i] = p
    return out
