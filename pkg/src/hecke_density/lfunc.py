"""Completed L-functions, their functional equation, and critical-line zeros.

``Lambda_k(s) = q^s Gamma(s + N k) L_k(s)`` with ``q = sqrt|D| / (2 pi)`` satisfies
``Lambda_k(s) = Lambda_k(1 - s)``. It is evaluated through the smoothed
approximate functional equation

    Lambda(s) = sum_n A(n) [ (q/n)^s Gamma(s+kappa, n delta/q)
                           + (q/n)^{1-s} Gamma(1-s+kappa, n/(q delta)) ],

valid for any ``delta`` with ``|arg delta| < pi/2``. Taking ``arg delta`` equal
to ``arg(s + kappa)`` puts each incomplete gamma contour through its saddle
point, which removes the ``exp(pi |t| / 2)`` cancellation of the real-axis
choice.

Since ``|Gamma(s + kappa)|`` reaches 1e100 and beyond, every value is returned
divided by ``exp(norm_log(spec, s))``, where
``norm_log = Re log Gamma(1/2 + kappa + i Im s) + log(q)/2``. On the critical
line the normalised value is the real function ``Z_k(t)`` with ``|Z_k(t)| = |L_k(1/2+it)|``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import loggamma

from ._incgamma import log_upper_gamma
from .errors import InsufficientTerms, PoleHit
from .heckecoeff import CoeffTable, build_coeffs
from .quadfield import FieldConfig

TERM_CHUNK = 48


@dataclass(frozen=True)
class LSpec:
    field: FieldConfig
    k: int
    mu_shift: int
    q_scale: float

    @classmethod
    def of(cls, field: FieldConfig, k: int) -> LSpec:
        if k < 1:
            raise ValueError("k must be a positive integer")
        return cls(field, k, field.freq_mult * k, field.q_scale)


def count_asymptotic(k: float, T: float) -> float:
    """Leading-order count ``2 T log k / pi`` of zeros with ``|gamma| <= T``."""
    if k < 2 or T <= 0:
        raise ValueError("count_asymptotic needs k >= 2 and T > 0")
    return 2.0 * T * math.log(k) / math.pi


def _is_pole(w: complex) -> bool:
    return w.imag == 0 and w.real <= 0 and float(w.real).is_integer()


def x_factor(spec: LSpec, s: complex) -> complex:
    """``X_k(s) = Gamma(1-s+kappa)/Gamma(s+kappa) |D|^{1/2-s} (2 pi)^{2s-1}``, so ``L(s) = X(s) L(1-s)``."""
    s = complex(s)
    kappa = spec.mu_shift
    if _is_pole(1 - s + kappa) or _is_pole(s + kappa):
        raise PoleHit(f"gamma factor pole at s={s}")
    log_x = (loggamma(1 - s + kappa) - loggamma(s + kappa)
             + (0.5 - s) * math.log(spec.field.abs_disc) + (2 * s - 1) * math.log(2 * math.pi))
    return complex(np.exp(log_x))


def norm_log(spec: LSpec, s) -> np.ndarray:
    """Log of the scale dividing every value returned by :func:`lambda_complete`."""
    t = np.imag(np.asarray(s, dtype=complex))
    return loggamma(0.5 + spec.mu_shift + 1j * t).real + 0.5 * math.log(spec.q_scale)


def default_rotation(spec: LSpec, s: np.ndarray) -> np.ndarray:
    """Contour angle balancing the saddle directions of both incomplete gammas."""
    kappa = spec.mu_shift
    return 0.5 * (np.angle(s + kappa) - np.angle(1 - s + kappa))


def _divisor_bound(n: np.ndarray) -> np.ndarray:
    # |A_k(n)| <= r(n) <= d(n) <= 2 sqrt(n)
    return 2 * np.sqrt(n)


def lambda_batch(spec: LSpec, s, coeffs: CoeffTable, eps: float = 1e-8,
                 rotation=None) -> np.ndarray:
    """Normalised ``Lambda_k`` at every point of ``s``.

    ``rotation`` overrides the contour angle ``arg delta`` (scalar or per-point);
    the result does not depend on it beyond rounding, which the tests exploit.
    Raises :class:`InsufficientTerms` when the coefficient table ends before the
    term envelope drops below ``eps / 10``.
    """
    if coeffs.k != spec.k:
        raise ValueError(f"coefficient table is for k={coeffs.k}, not k={spec.k}")
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    kappa = spec.mu_shift
    q = spec.q_scale
    phi = default_rotation(spec, s) if rotation is None else np.broadcast_to(
        np.asarray(rotation, dtype=float), s.shape)
    if np.any(np.abs(phi) >= math.pi / 2):
        raise ValueError("contour rotation must satisfy |arg delta| < pi/2")
    delta = np.exp(1j * phi)[:, None]
    shift = norm_log(spec, s)[:, None]
    sc = s[:, None]
    log_q = math.log(q)

    total = np.zeros(len(s), dtype=complex)
    start = 1
    while True:
        stop = start + TERM_CHUNK
        if start > coeffs.n_max:
            raise InsufficientTerms(
                f"coefficients up to n={coeffs.n_max} do not reach the eps={eps:g} cutoff")
        n = np.arange(start, min(stop, coeffs.n_max + 1))
        log_n = np.log(n)[None, :]
        first = sc * (log_q - log_n) + log_upper_gamma(sc + kappa, n[None, :] * delta / q) - shift
        second = ((1 - sc) * (log_q - log_n)
                  + log_upper_gamma(1 - sc + kappa, n[None, :] / (q * delta)) - shift)
        e1, e2 = np.exp(first), np.exp(second)
        total += (e1 + e2) @ coeffs.A[n]
        envelope = np.max(np.abs(e1) + np.abs(e2), axis=0) * _divisor_bound(n)
        past_peak = n[-1] / q > abs(kappa) + 2 * np.max(np.abs(s)) + 2
        if past_peak and envelope[-1] < eps / 10 and np.all(np.diff(envelope[-4:]) <= 0):
            if envelope[-1] == 0:
                return total
            ratio = envelope[-1] / envelope[-2] if len(n) > 1 else 0.5
            if ratio < 1 and envelope[-1] * ratio / (1 - ratio) < eps / 10:
                return total
        start = stop


def lambda_complete(spec: LSpec, s: complex, coeffs: CoeffTable, eps: float = 1e-8,
                    rotation: float | None = None) -> complex:
    """Normalised ``Lambda_k(s)``; multiply by ``exp(norm_log(spec, s))`` for the raw value."""
    return complex(lambda_batch(spec, [s], coeffs, eps, rotation)[0])


def hardy_z(spec: LSpec, t, coeffs: CoeffTable, eps: float = 1e-8) -> np.ndarray:
    """Real function ``t -> Lambda_k(1/2 + i t)`` (normalised)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return lambda_batch(spec, 0.5 + 1j * t, coeffs, eps).real


def l_value(spec: LSpec, s: complex, coeffs: CoeffTable, eps: float = 1e-8) -> complex:
    """``L_k(s)`` recovered from the completed function."""
    s = complex(s)
    log_scale = float(norm_log(spec, s)) - (s * math.log(spec.q_scale) + loggamma(s + spec.mu_shift))
    return lambda_complete(spec, s, coeffs, eps) * complex(np.exp(log_scale))


def scan_step(k: int) -> float:
    """Sign-scan resolution: a quarter of the mean zero spacing ``pi / (2 log k)``."""
    return math.pi / (8 * math.log(max(k, 3)))


@dataclass
class ZeroSet:
    k: int
    T: float
    gammas: np.ndarray
    zero_at_center: bool
    precision: float
    complete: bool
    residuals: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    eps: float = 1e-8
    d: int = 0
    N: int = 0

    @property
    def count(self) -> int:
        """Zeros with ``|gamma| <= T`` counted with both signs; a central zero counts once."""
        return 2 * len(self.gammas) + int(self.zero_at_center)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "gamma", "residual"])
            if self.zero_at_center:
                w.writerow([self.k, repr(0.0), ""])
            for g, r in zip(self.gammas, self.residuals):
                w.writerow([self.k, repr(float(g)), repr(float(r))])

    def manifest(self) -> dict:
        return {"d": self.d, "N": self.N, "k": self.k, "T": self.T, "eps": self.eps,
                "complete": self.complete, "zero_at_center": self.zero_at_center,
                "n_zeros": len(self.gammas), "precision": self.precision}

    @classmethod
    def from_files(cls, csv_path: str | Path, manifest: dict) -> ZeroSet:
        gammas, residuals = [], []
        with open(csv_path, newline="") as fh:
            for row in csv.DictReader(fh):
                if float(row["gamma"]) == 0.0 and row["residual"] == "":
                    continue
                gammas.append(float(row["gamma"]))
                residuals.append(float(row["residual"]))
        return cls(manifest["k"], manifest["T"], np.array(gammas), manifest["zero_at_center"],
                   manifest["precision"], manifest["complete"], np.array(residuals),
                   manifest["eps"], manifest["d"], manifest["N"])

    def write(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.to_csv(directory / f"zeros_k{self.k}.csv")
        (directory / f"zeros_k{self.k}.json").write_text(json.dumps(self.manifest(), indent=2))


def find_zeros(spec: LSpec, coeffs: CoeffTable, T: float, eps: float = 1e-8,
               step: float | None = None) -> ZeroSet:
    """Positive ordinates of sign changes of ``Z_k`` on ``(0, T]``, refined by Brent's method.

    Zeros of even order (apart from the centre) are invisible to the scan; the
    ``complete`` flag compares the count with :func:`count_asymptotic`.
    """
    d, N = spec.field.d, spec.field.freq_mult
    if T <= 0:
        return ZeroSet(spec.k, T, np.zeros(0), False, eps, True, np.zeros(0), eps, d, N)
    step = scan_step(spec.k) if step is None else step
    centre = abs(hardy_z(spec, 0.0, coeffs, eps)[0])
    at_centre = bool(centre < eps)
    n_pts = max(int(math.ceil(T / step)), 1)
    grid = np.linspace(0.0, T, n_pts + 1)
    values = hardy_z(spec, grid, coeffs, eps)
    if at_centre:
        # Z is even, so the sign near 0 is taken just off the centre
        values[0] = hardy_z(spec, grid[1] * 1e-3, coeffs, eps)[0]

    def z_at(t: float) -> float:
        return float(hardy_z(spec, t, coeffs, eps)[0])

    gammas = []
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        lo, hi = grid[i], grid[i + 1]
        if i == 0 and at_centre:
            lo = grid[1] * 1e-3
        gammas.append(brentq(z_at, lo, hi, xtol=min(eps, 1e-12), rtol=4 * np.finfo(float).eps))
    for i in np.flatnonzero(values[1:] == 0):
        gammas.append(grid[i + 1])
    gammas = np.unique(np.array(gammas, dtype=float))
    residuals = np.abs(hardy_z(spec, gammas, coeffs, eps)) if len(gammas) else np.zeros(0)
    count = 2 * len(gammas) + int(at_centre)
    complete = spec.k < 5 or abs(count / count_asymptotic(spec.k, T) - 1) <= 0.25
    precision = float(max(eps, residuals.max(initial=0.0)))
    return ZeroSet(spec.k, float(T), gammas, at_centre, precision, bool(complete), residuals,
                   eps, d, N)


def zeros_with_growing_table(field: FieldConfig, k: int, T: float, eps: float = 1e-8,
                             n_start: int = 4000, n_limit: int = 2_000_000) -> tuple[ZeroSet, CoeffTable]:
    """Run :func:`find_zeros`, doubling the coefficient table until the cutoff is reached."""
    spec = LSpec.of(field, k)
    n_max = n_start
    while True:
        coeffs = build_coeffs(field, k, n_max)
        try:
            return find_zeros(spec, coeffs, T, eps), coeffs
        except InsufficientTerms:
            if n_max >= n_limit:
                raise
            n_max *= 2
