"""Univariate and bivariate standard normal distribution functions."""

import numpy as np
from scipy.special import ndtr, ndtri

from ._backend import kernels, threads

_INV_SQRT_2PI = 0.3989422804014327


def norm_cdf(x):
    return ndtr(x)


def norm_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def norm_ppf(p):
    return ndtri(p)


def bvn_cdf(x, y, rho):
    """P(X < x, Y < y) for standard normals with correlation ``rho``.

    Arguments broadcast against each other; scalars give a float back.
    """
    x, y, rho = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                    np.asarray(y, dtype=np.float64),
                                    np.asarray(rho, dtype=np.float64))
    shape = x.shape
    out = kernels.bvn_cdf(np.ascontiguousarray(x).ravel(),
                          np.ascontiguousarray(y).ravel(),
                          np.ascontiguousarray(rho).ravel(), threads())
    out = np.asarray(out).reshape(shape)
    return float(out) if out.ndim == 0 else out
