"""Upper incomplete gamma function for complex shift and argument, in log space.

``Gamma(a, z) = int_z^inf e^{-x} x^{a-1} dx`` with the path running to infinity
inside the right half-plane. Two evaluation routes, chosen per element:

* ``|z| < |a|``: power series of the lower function, ``Gamma(a) - gamma(a, z)``;
* otherwise: Legendre continued fraction (modified Lentz).

Both routes are vectorised over broadcast arrays. Only ``Re z > 0`` is supported.
"""
from __future__ import annotations

import numpy as np
from scipy.special import loggamma

_TINY = 1e-300


def _log_lower_series(a: np.ndarray, z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """log gamma(a, z) = a log z - z + log sum_j z^j / (a)_{j+1}."""
    term = 1.0 / a
    total = term.copy()
    active = np.ones(a.shape, dtype=bool)
    for j in range(1, max_iter):
        term = np.where(active, term * z / (a + j), 0)
        total += term
        active &= np.abs(term) > tol * np.abs(total)
        if not active.any():
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return a * np.log(z) - z + np.log(total)


def _log_upper_fraction(a: np.ndarray, z: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    b = z + 1 - a
    c = np.full(a.shape, 1 / _TINY, dtype=complex)
    d = 1 / b
    h = d.copy()
    active = np.ones(a.shape, dtype=bool)
    for i in range(1, max_iter):
        an = -i * (i - a)
        b = b + 2
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1 / d
        delta = c * d
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1) > tol
        if not active.any():
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return a * np.log(z) - z + np.log(h)


def log_upper_gamma(a, z, tol: float = 1e-16, max_iter: int = 5000) -> np.ndarray:
    """Complex ``log Gamma(a, z)`` (any branch of the log) for ``Re z > 0``."""
    a, z = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(z, dtype=complex))
    if np.any(z.real <= 0):
        raise ValueError("log_upper_gamma needs Re z > 0")
    out = np.empty(a.shape, dtype=complex)
    use_series = np.abs(z) < np.abs(a)
    if use_series.any():
        aa, zz = a[use_series], z[use_series]
        lg = loggamma(aa)
        ratio = np.exp(_log_lower_series(aa, zz, tol, max_iter) - lg)
        out[use_series] = lg + np.log(1 - ratio)
    rest = ~use_series
    if rest.any():
        out[rest] = _log_upper_fraction(a[rest], z[rest], tol, max_iter)
    return out
