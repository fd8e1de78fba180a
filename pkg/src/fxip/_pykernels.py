"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Both consume the same counter-based random stream, so for a given seed the two
backends produce the same paths up to floating-point rounding.
"""

import math

import numpy as np
from scipy.special import ndtr

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 1.0 / 9007199254740992.0
_TWOPI = 2.0 * math.pi

BACKEND = "python"


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed):
    """Scramble a user seed into a 64-bit stream key."""
    s = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return int(_mix(s)[0])


def _uniform_bits(key, counters):
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (counters + np.uint64(1)) * _GAMMA
        return _mix(z)


def normal_pair(key, counters):
    """Two standard normals per counter via Box-Muller on consecutive draws.

    ``counters`` holds the index of the first of the two uniforms.
    """
    b1 = _uniform_bits(key, counters)
    b2 = _uniform_bits(key, counters + np.uint64(1))
    u1 = ((b1 >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO53
    u2 = (b2 >> np.uint64(11)).astype(np.float64) * _TWO53
    r = np.sqrt(-2.0 * np.log(u1))
    a = _TWOPI * u2
    return r * np.cos(a), r * np.sin(a)


def _path_noise(key, n_paths, n_steps, step, antithetic):
    """Normals (z1, z2) for all paths at one time step."""
    p = np.arange(n_paths, dtype=np.uint64)
    if antithetic:
        base = p >> np.uint64(1)
        sign = np.where(p & np.uint64(1), -1.0, 1.0)
    else:
        base = p
        sign = None
    c = base * np.uint64(2 * n_steps) + np.uint64(2 * step)
    z1, z2 = normal_pair(key, c)
    if sign is not None:
        z1 *= sign
        z2 *= sign
    return z1, z2


def std_normals(seed, n_rows, n_cols):
    """Matrix of standard normals from the counter stream (n_cols even)."""
    if n_cols % 2:
        raise ValueError("n_cols must be even")
    key = stream_key(seed)
    half = n_cols // 2
    c = (np.arange(n_rows, dtype=np.uint64)[:, None] * np.uint64(n_cols)
         + np.uint64(2) * np.arange(half, dtype=np.uint64)[None, :])
    z1, z2 = normal_pair(key, c)
    out = np.empty((n_rows, n_cols))
    out[:, 0::2] = z1
    out[:, 1::2] = z2
    return out


def heston_qt_paths(v0, kb2, kq2, ab1, emr, tt, va, vb, h, n_paths, seed,
                    antithetic, threads=0):
    """Log-forward paths under the T-forward measure of the pseudo-bond.

    Per-step arrays: ``kb2``/``kq2`` are the W2 loadings of the two log
    forwards, ``emr`` = exp(-k_j h), ``tt`` the reverting level, and the
    conditional variance of v is ``va*v + vb``. ``ab1`` is the W1 loading of
    the base forward; the quote forward carries ``-ab1``.

    Returns (log-forward increments base, quote, v(T), min v).
    """
    n_steps = len(kb2)
    key = stream_key(seed)
    sh = math.sqrt(h)
    v = np.full(n_paths, float(v0))
    vmin = v.copy()
    xb = np.zeros(n_paths)
    xq = np.zeros(n_paths)
    for j in range(n_steps):
        z1, z2 = _path_noise(key, n_paths, n_steps, j, antithetic)
        sv = np.sqrt(v)
        xb += -0.5 * v * (ab1 * ab1 + kb2[j] * kb2[j]) * h + sv * sh * (ab1 * z1 + kb2[j] * z2)
        xq += -0.5 * v * (ab1 * ab1 + kq2[j] * kq2[j]) * h + sv * sh * (-ab1 * z1 + kq2[j] * z2)
        m = tt[j] + (v - tt[j]) * emr[j]
        g2 = np.log1p((va[j] * v + vb[j]) / (m * m))
        v = m * np.exp(-0.5 * g2 + np.sqrt(g2) * z2)
        np.minimum(vmin, v, out=vmin)
    return xb, xq, v, vmin


def heston_qx_paths(v0, drift, c1, c2, emr, tt, va, vb, h, rbar, n_paths, seed,
                    antithetic, threads=0):
    """Paths of log sqrt(f) and the integrated pseudo short rate under Q^X.

    ``drift`` is the deterministic drift of log sqrt(f); ``c1``/``c2`` its W1
    and W2 loadings per unit sqrt(v). Variance moments use constant scalars.
    Returns (log sqrt(f(T)/f0), integral of r_X, v(T), min v).
    """
    n_steps = len(tt)
    key = stream_key(seed)
    sh = math.sqrt(h)
    v = np.full(n_paths, float(v0))
    vmin = v.copy()
    y = np.zeros(n_paths)
    integ = np.zeros(n_paths)
    for j in range(n_steps):
        z1, z2 = _path_noise(key, n_paths, n_steps, j, antithetic)
        sv = np.sqrt(v)
        y += drift * h + sv * sh * (c1 * z1 + c2 * z2)
        m = tt[j] + (v - tt[j]) * emr[j]
        g2 = np.log1p((va[j] * v + vb[j]) / (m * m))
        vn = m * np.exp(-0.5 * g2 + np.sqrt(g2) * z2)
        integ += (rbar + (v + vn) / 16.0) * h
        v = vn
        np.minimum(vmin, v, out=vmin)
    return y, integ, v, vmin


def sabr_qx_paths(alpha0, nu, rho, drift, rbar, h, n_steps, n_paths, seed,
                  antithetic, threads=0):
    """SABR (beta=1) paths of log sqrt(f), integrated r_X and log sigma(T)."""
    key = stream_key(seed)
    sh = math.sqrt(h)
    rc = math.sqrt(1.0 - rho * rho)
    s = np.full(n_paths, float(alpha0))
    y = np.zeros(n_paths)
    integ = np.zeros(n_paths)
    for j in range(n_steps):
        z1, z2 = _path_noise(key, n_paths, n_steps, j, antithetic)
        y += drift * h + 0.5 * s * sh * (rc * z1 + rho * z2)
        sn = s * np.exp(-0.5 * nu * nu * h + nu * sh * z2)
        integ += (rbar + (s * s + sn * sn) / 16.0) * h
        s = sn
    return y, integ, np.log(s)


# Gauss-Legendre half-nodes on [-1, 1] for 6, 12 and 20 points.
_GL_W = (
    np.array([0.1713244923791705, 0.3607615730481384, 0.4679139345726904]),
    np.array([0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
              0.2031674267230659, 0.2334925365383547, 0.2491470458134029]),
    np.array([0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
              0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
              0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
              0.1527533871307259]),
)
_GL_X = (
    np.array([-0.9324695142031522, -0.6612093864662647, -0.2386191860831970]),
    np.array([-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
              -0.5873179542866171, -0.3678314989981802, -0.1252334085114692]),
    np.array([-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
              -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
              -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
              -0.07652652113349733]),
)


def _bvn_low(h, k, r, ng):
    w, x = _GL_W[ng], _GL_X[ng]
    hk = (h * k)[:, None]
    hs = (0.5 * (h * h + k * k))[:, None]
    asr = np.arcsin(r)[:, None]
    sn1 = np.sin(asr * (x + 1.0) * 0.5)
    sn2 = np.sin(asr * (1.0 - x) * 0.5)
    s = (np.exp((sn1 * hk - hs) / (1.0 - sn1 * sn1))
         + np.exp((sn2 * hk - hs) / (1.0 - sn2 * sn2))) @ w
    return s * asr[:, 0] / (4.0 * math.pi) + ndtr(-h) * ndtr(-k)


def _bvn_high(h, k, r):
    w, x = _GL_W[2], _GL_X[2]
    k = np.where(r < 0.0, -k, k)
    hk = h * k
    bvn = np.zeros_like(h)
    inner = np.abs(r) < 1.0
    if inner.any():
        hi, ki, hki, ri = h[inner], k[inner], hk[inner], r[inner]
        a_s = (1.0 - ri) * (1.0 + ri)
        a = np.sqrt(a_s)
        bs = (hi - ki) ** 2
        c = (4.0 - hki) / 8.0
        d = (12.0 - hki) / 16.0
        b = a * np.exp(-(bs / a_s + hki) / 2.0) * (
            1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_s * a_s / 5.0)
        sb = np.sqrt(bs)
        tail = (np.exp(-np.maximum(hki, -160.0) / 2.0) * math.sqrt(_TWOPI) * ndtr(-sb / a) * sb
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0))
        b = b - np.where(hki > -160.0, tail, 0.0)
        a2 = (a / 2.0)[:, None]
        for s in (-1.0, 1.0):
            xs = (a2 * (s * x + 1.0)) ** 2
            rs = np.sqrt(1.0 - xs)
            term = (np.exp(-bs[:, None] / (2.0 * xs) - hki[:, None] / (1.0 + rs)) / rs
                    - np.exp(-(bs[:, None] / xs + hki[:, None]) / 2.0)
                    * (1.0 + c[:, None] * xs * (1.0 + d[:, None] * xs)))
            b = b + a2[:, 0] * (term @ w)
        bvn[inner] = -b / _TWOPI
    pos = r > 0.0
    out = np.where(pos, bvn + ndtr(-np.maximum(h, k)), -bvn)
    neg_add = (~pos) & (k > h)
    out = np.where(neg_add, out + ndtr(k) - ndtr(h), out)
    return out


def bvn_cdf(x, y, rho, threads=0):
    """Bivariate normal CDF N2(x, y; rho) over 1-d float arrays (Genz)."""
    x = np.clip(np.asarray(x, dtype=np.float64), -37.0, 37.0)
    y = np.clip(np.asarray(y, dtype=np.float64), -37.0, 37.0)
    r = np.asarray(rho, dtype=np.float64)
    h, k = -x, -y
    out = np.empty(h.shape[0])
    ar = np.abs(r)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        for ng, m in enumerate((ar < 0.3, (ar >= 0.3) & (ar < 0.75), (ar >= 0.75) & (ar < 0.925))):
            if m.any():
                out[m] = _bvn_low(h[m], k[m], r[m], ng)
        m = ar >= 0.925
        if m.any():
            out[m] = _bvn_high(h[m], k[m], r[m])
    return np.clip(out, 0.0, 1.0)
