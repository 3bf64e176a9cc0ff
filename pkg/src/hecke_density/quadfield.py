"""Arithmetic of the eight imaginary quadratic fields Q(sqrt(-d)) of class number one (d != 1).

Elements of the ring of integers are stored as integer pairs ``(a, b)`` meaning

* ``a + b*sqrt(-2)``           for d = 2,
* ``a + b*(1 + sqrt(-d))/2``   for d = 3 (mod 4).

All unit reductions act on these integer coordinates exactly; floating point
only enters when an angle is finally taken.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadFrequency, DegenerateLattice, RejectedField, ZeroElement
from .primes import Sieve, shared_sieve

HEEGNER = (2, 3, 7, 11, 19, 43, 67, 163)
DEFAULT_SIEVE_BOUND = 10**6


@dataclass(frozen=True)
class FieldConfig:
    d: int
    disc: int
    unit_order: int
    freq_mult: int
    # columns are the images of (1, 0) and (0, 1) in C = R^2
    basis: tuple[tuple[float, float], tuple[float, float]]
    norm_coeffs: tuple[int, int, int]
    # (overall scale, diagonal a, shear n) of the SL2 decomposition
    iwasawa: tuple[float, float, float]

    @property
    def abs_disc(self) -> int:
        return -self.disc

    @property
    def q_scale(self) -> float:
        """Analytic conductor scale sqrt|D| / (2 pi)."""
        return math.sqrt(self.abs_disc) / (2 * math.pi)

    def basis_matrix(self) -> np.ndarray:
        return np.array(self.basis, dtype=float)


class SplitTag(str, Enum):
    RAMIFIED = "Ramified"
    SPLIT = "Split"
    INERT = "Inert"


@dataclass(frozen=True)
class SplitClass:
    tag: SplitTag
    chi: int


@dataclass(frozen=True)
class LatticePoint:
    a: int
    b: int
    norm: int
    angle: float


def make_field(d: int, N: int) -> FieldConfig:
    """Build the field constants for Q(sqrt(-d)) with character frequency multiplier ``N``."""
    if d not in HEEGNER:
        raise RejectedField(f"d={d} is not one of the supported Heegner numbers {HEEGNER}")
    w = 6 if d == 3 else 2
    if N <= 0 or N % w:
        raise BadFrequency(f"N={N} must be a positive multiple of the unit order {w} for d={d}")
    if d % 4 == 3:
        disc = -d
        basis = ((1.0, 0.5), (0.0, math.sqrt(d) / 2))
        norm_coeffs = (1, 1, (d + 1) // 4)
        iwasawa = (d**0.25 * 2**-0.5, 2**-0.5 * d**-0.25, 0.5)
    else:
        disc = -4 * d
        basis = ((1.0, 0.0), (0.0, math.sqrt(d)))
        norm_coeffs = (1, 0, d)
        iwasawa = (2**0.25, 2**-0.25, 0.0)
    return FieldConfig(d, disc, w, N, basis, norm_coeffs, iwasawa)


def iwasawa_matrix(field: FieldConfig) -> np.ndarray:
    """``scale * diag(a, 1/a) @ [[1, 0], [n, 1]]``; generates the same lattice as ``field.basis``."""
    scale, a, n = field.iwasawa
    return scale * np.diag([a, 1 / a]) @ np.array([[1.0, 0.0], [n, 1.0]])


# -- Kronecker symbol ------------------------------------------------------

def _legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _kronecker_two(a: int) -> int:
    if a % 2 == 0:
        return 0
    return 1 if a % 8 in (1, 7) else -1


def kronecker(a: int, n: int, sieve: Sieve | None = None) -> int:
    """Kronecker symbol (a/n) for ``n >= 1``, factoring ``n`` through ``sieve``."""
    if n < 1:
        raise ValueError("kronecker symbol needs n >= 1")
    if n == 1:
        return 1
    sieve = sieve or shared_sieve(max(DEFAULT_SIEVE_BOUND, 1))
    result = 1
    for p, e in sieve.factor(n):
        sym = _kronecker_two(a) if p == 2 else _legendre(a, p)
        if sym == 0:
            return 0
        if sym == -1 and e % 2:
            result = -result
    return result


def character_table(field: FieldConfig) -> np.ndarray:
    """Values of chi(n) = (-d/n) on residues ``0 .. |D|-1`` (chi has period |D|)."""
    m = field.abs_disc
    table = np.zeros(m, dtype=np.int64)
    for r in range(1, m):
        table[r] = kronecker(-field.d, r)
    return table


def chi_values(field: FieldConfig, n: np.ndarray) -> np.ndarray:
    return character_table(field)[np.asarray(n) % field.abs_disc]


def classify_prime(p: int, field: FieldConfig) -> SplitClass:
    """Splitting type of the rational prime ``p`` in the field."""
    if p == 2:
        chi = _kronecker_two(-field.d)
    else:
        chi = _legendre(-field.d, p)
    tag = {0: SplitTag.RAMIFIED, 1: SplitTag.SPLIT, -1: SplitTag.INERT}[chi]
    return SplitClass(tag, chi)


# -- lattice geometry ------------------------------------------------------

def norm_form(a, b, field: FieldConfig):
    """Norm of the element with coordinates ``(a, b)``; works elementwise on integer arrays."""
    caa, cab, cbb = field.norm_coeffs
    return caa * a * a + cab * a * b + cbb * b * b


def embed(a, b, field: FieldConfig):
    """Cartesian coordinates ``(x, y)`` of the element ``(a, b)``."""
    (b11, b12), (b21, b22) = field.basis
    return b11 * a + b12 * b, b21 * a + b22 * b


def unit_rotate(a, b, field: FieldConfig):
    """Multiply by the generator of the unit group (-1, or the sixth root of unity for d = 3)."""
    if field.unit_order == 2:
        return -a, -b
    return -b, a + b


def _in_window(a, b, field: FieldConfig):
    # argument in [0, 2 pi / w)
    if field.unit_order == 2:
        return (b > 0) | ((b == 0) & (a > 0))
    return (a > 0) & (b >= 0)


def reduce_generator(a, b, field: FieldConfig):
    """Unit multiple of ``(a, b)`` whose argument lies in ``[0, 2 pi / w)``; vectorised."""
    a = np.array(a, dtype=np.int64, copy=True)
    b = np.array(b, dtype=np.int64, copy=True)
    if np.any((a == 0) & (b == 0)):
        raise ZeroElement("the zero element generates no ideal")
    for _ in range(field.unit_order):
        bad = ~_in_window(a, b, field)
        if not bad.any():
            break
        ra, rb = unit_rotate(a[bad], b[bad], field)
        a[bad], b[bad] = ra, rb
    return a, b


def element_angle(a, b, field: FieldConfig):
    x, y = embed(np.asarray(a, dtype=float), np.asarray(b, dtype=float), field)
    return np.mod(np.arctan2(y, x), 2 * math.pi)


def ideal_angle(a: int, b: int, field: FieldConfig) -> float:
    """Angle of the ideal generated by ``(a, b)``, taken in ``[0, 2 pi / w)``."""
    ra, rb = reduce_generator(a, b, field)
    return float(element_angle(ra, rb, field))


def lattice_point(a: int, b: int, field: FieldConfig) -> LatticePoint:
    return LatticePoint(a, b, int(norm_form(a, b, field)), float(element_angle(a, b, field)))


def lattice_box(field: FieldConfig, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """All coordinate pairs whose embedded length is at most ``radius`` (origin included)."""
    (b11, b12), (_, b22) = field.basis
    bmax = int(math.floor(radius / b22)) + 1
    amax = int(math.floor(radius + abs(b12) * bmax / b11)) + 1
    a, b = np.meshgrid(np.arange(-amax, amax + 1), np.arange(-bmax, bmax + 1), indexing="ij")
    a, b = a.ravel(), b.ravel()
    keep = norm_form(a, b, field) <= radius * radius + 1e-9
    return a[keep], b[keep]


def angle_bound_scan(field: FieldConfig, N: int, R: float, Q: int, axes_only: bool = False,
                     on_line_tol: float = 1e-14) -> float:
    """Minimum of ``|v|^Q * alpha(v)`` over lattice points ``0 < |v| <= R`` off the lines.

    The lines pass through the origin at angles ``pi*m/(2N)``, ``m = 0 .. 2N-1``
    (or only the two coordinate axes when ``axes_only``); ``alpha(v)`` is the
    angle between ``v`` and the nearest line. Returns ``inf`` when every point
    in the ball lies on a line.
    """
    det = np.linalg.det(field.basis_matrix())
    if abs(det) < 1e-12:
        raise DegenerateLattice("lattice basis is singular")
    a, b = lattice_box(field, R)
    nonzero = (a != 0) | (b != 0)
    a, b = a[nonzero], b[nonzero]
    x, y = embed(a.astype(float), b.astype(float), field)
    length = np.hypot(x, y)
    theta = np.mod(np.arctan2(y, x), math.pi)
    step = math.pi / 2 if axes_only else math.pi / (2 * N)
    r = np.mod(theta, step)
    alpha = np.minimum(r, step - r)
    off = alpha >= on_line_tol
    if not off.any():
        return math.inf
    return float(np.min(length[off] ** Q * alpha[off]))
