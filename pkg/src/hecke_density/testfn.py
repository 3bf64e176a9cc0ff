"""Even test functions whose Fourier transform has compact support.

Convention: ``fhat(u) = int f(x) exp(-2 pi i x u) dx``. Two kinds are offered:

* ``Fejer(sigma)``: ``fhat(u) = max(0, 1 - |u|/sigma)``, ``f(x) = sigma sinc(sigma x)^2``;
* ``SampledFourier``: ``fhat`` given on a symmetric grid, interpolated by a cubic
  spline; ``f`` is recovered by cosine quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

QUAD_ABS_TOL = 1e-10
QUAD_LIMIT = 200


class TestFunctionKind(str, Enum):
    FEJER = "Fejer"
    SAMPLED = "SampledFourier"


@dataclass(frozen=True, eq=False)
class TestFunctionPair:
    kind: TestFunctionKind
    sigma: float
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("support radius sigma must be positive")

    @property
    def label(self) -> str:
        return f"{self.kind.value}({self.sigma:g})"


def fejer(sigma: float) -> TestFunctionPair:
    return TestFunctionPair(TestFunctionKind.FEJER, float(sigma))


def sampled_fourier(grid, values) -> TestFunctionPair:
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 4:
        raise ValueError("need matching one-dimensional grid and values with >= 4 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly ascending")
    if not np.allclose(grid, -grid[::-1], atol=1e-12):
        raise ValueError("grid must be symmetric about 0")
    if not np.allclose(values, values[::-1], atol=1e-12):
        raise ValueError("fhat samples must be even")
    return TestFunctionPair(TestFunctionKind.SAMPLED, float(grid[-1]), grid, values)


def load_sampled_csv(path: str | Path) -> TestFunctionPair:
    """Two-column CSV ``u, fhat(u)`` (header optional), ``u`` ascending and symmetric."""
    data = np.genfromtxt(path, delimiter=",")
    if np.isnan(data[0]).any():
        data = data[1:]
    return sampled_fourier(data[:, 0], data[:, 1])


def _spline(tf: TestFunctionPair) -> CubicSpline:
    spline = getattr(tf, "_spline_cache", None)
    if spline is None:
        spline = CubicSpline(tf.grid, tf.values)
        object.__setattr__(tf, "_spline_cache", spline)
    return spline


def fhat_eval(tf: TestFunctionPair, u):
    """Fourier transform; vectorised, zero outside ``(-sigma, sigma)``."""
    u = np.abs(np.asarray(u, dtype=float))
    if tf.kind is TestFunctionKind.FEJER:
        out = np.maximum(0.0, 1.0 - u / tf.sigma)
    else:
        inside = u < tf.sigma
        out = np.where(inside, _spline(tf)(np.minimum(u, tf.sigma)), 0.0)
    return out if out.ndim else float(out)


def f_eval(tf: TestFunctionPair, x):
    """The test function itself; vectorised."""
    x = np.asarray(x, dtype=float)
    if tf.kind is TestFunctionKind.FEJER:
        out = tf.sigma * np.sinc(tf.sigma * x) ** 2
        return out if out.ndim else float(out)
    flat = np.abs(np.atleast_1d(x)).ravel()
    res = np.empty(flat.shape)
    for i, xi in enumerate(flat):
        g = lambda u: fhat_eval(tf, u)  # noqa: E731
        if xi == 0:
            val = quad(g, 0, tf.sigma, epsabs=QUAD_ABS_TOL, limit=QUAD_LIMIT)[0]
        else:
            val = quad(g, 0, tf.sigma, weight="cos", wvar=2 * math.pi * xi,
                       epsabs=QUAD_ABS_TOL, limit=QUAD_LIMIT)[0]
        res[i] = 2 * val
    res = res.reshape(x.shape)
    return res if res.ndim else float(res)


def fhat_integral(tf: TestFunctionPair, a: float, b: float) -> float:
    """``int_a^b fhat(u) du`` for ``0 <= a <= b``."""
    if tf.kind is TestFunctionKind.FEJER:
        lo, hi = min(a, tf.sigma), min(b, tf.sigma)
        prim = lambda u: u - u * u / (2 * tf.sigma)  # noqa: E731
        return prim(hi) - prim(lo)
    hi = min(b, tf.sigma)
    if hi <= a:
        return 0.0
    breaks = [u for u in tf.grid if a < u < hi]
    return quad(lambda u: fhat_eval(tf, u), a, hi, points=breaks[:QUAD_LIMIT // 2] or None,
                epsabs=QUAD_ABS_TOL, limit=QUAD_LIMIT)[0]


def main_term(tf: TestFunctionPair) -> float:
    """``int f(x) (1 - sin(2 pi x)/(2 pi x)) dx = fhat(0) - (1/2) int_{-1}^{1} fhat``."""
    return float(fhat_eval(tf, 0.0)) - fhat_integral(tf, 0.0, 1.0)
