"""Ideal enumeration and Dirichlet coefficients of the angular Hecke L-functions.

For the character psi_k(<alpha>) = exp(2 i N k theta_alpha) the module provides

* ``A_k(n)``  - coefficients of L_k(s),
* ``mu_k(n)`` - coefficients of 1/L_k(s),
* ``c_k(n)``  - coefficients of -L_k'/L_k(s),

built from closed forms on prime powers and extended multiplicatively. The
brute-force route (sum over enumerated ideals, Dirichlet inverse) lives here
as well and serves as the test oracle.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityExceeded, GeneratorSearchFailed, OutOfRange
from .primes import shared_sieve
from .quadfield import (
    FieldConfig,
    _in_window,
    character_table,
    element_angle,
    lattice_box,
    norm_form,
)

CACHE_VERSION = 1
MAX_LATTICE_POINTS = 60_000_000


@dataclass(frozen=True)
class IdealClassTable:
    """Nonzero ideals of norm ``<= n_max``, one window generator each, sorted by norm."""

    d: int
    n_max: int
    norms: np.ndarray
    angles: np.ndarray
    gen_a: np.ndarray
    gen_b: np.ndarray
    offsets: np.ndarray  # ideals of norm n are [offsets[n], offsets[n+1])

    @property
    def r(self) -> np.ndarray:
        """Ideal counts r(n), ``r[0] = 0``."""
        return np.diff(self.offsets)

    def angles_of_norm(self, n: int) -> np.ndarray:
        if not 1 <= n <= self.n_max:
            raise OutOfRange(f"norm {n} outside table range [1, {self.n_max}]")
        return self.angles[self.offsets[n] : self.offsets[n + 1]]

    def save(self, path: str | Path) -> None:
        np.savez(path, version=CACHE_VERSION, d=self.d, n_max=self.n_max, norms=self.norms,
                 angles=self.angles, gen_a=self.gen_a, gen_b=self.gen_b, offsets=self.offsets)

    @classmethod
    def load(cls, path: str | Path) -> IdealClassTable:
        with np.load(path) as z:
            if int(z["version"]) != CACHE_VERSION:
                raise ValueError(f"cache version {int(z['version'])} != {CACHE_VERSION}")
            return cls(int(z["d"]), int(z["n_max"]), z["norms"], z["angles"], z["gen_a"],
                       z["gen_b"], z["offsets"])


@dataclass(frozen=True)
class CoeffTable:
    k: int
    n_max: int
    A: np.ndarray
    mu: np.ndarray
    c: np.ndarray

    def save(self, path: str | Path) -> None:
        np.savez(path, version=CACHE_VERSION, k=self.k, n_max=self.n_max, A=self.A, mu=self.mu,
                 c=self.c)

    @classmethod
    def load(cls, path: str | Path) -> CoeffTable:
        with np.load(path) as z:
            if int(z["version"]) != CACHE_VERSION:
                raise ValueError(f"cache version {int(z['version'])} != {CACHE_VERSION}")
            return cls(int(z["k"]), int(z["n_max"]), z["A"], z["mu"], z["c"])


@dataclass(frozen=True)
class SplitAngleTable:
    p: np.ndarray
    theta: np.ndarray
    a: np.ndarray
    b: np.ndarray
    p_max: int = 0  # every split prime up to this bound is present

    def __len__(self) -> int:
        return len(self.p)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "theta_p", "a", "b"])
            for row in zip(self.p, self.theta, self.a, self.b):
                w.writerow([int(row[0]), repr(float(row[1])), int(row[2]), int(row[3])])

    @classmethod
    def from_csv(cls, path: str | Path) -> SplitAngleTable:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding=None)
        data = np.atleast_1d(data)
        p = data["p"].astype(np.int64)
        return cls(p, data["theta_p"].astype(float), data["a"].astype(np.int64),
                   data["b"].astype(np.int64), int(p[-1]) if len(p) else 0)


def _window_points(field: FieldConfig, n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    radius = math.sqrt(n_max)
    est = (2 * radius + 3) ** 2 / abs(np.linalg.det(field.basis_matrix()))
    if est > MAX_LATTICE_POINTS:
        raise CapacityExceeded(f"n_max={n_max} needs ~{est:.3g} lattice points")
    a, b = lattice_box(field, radius)
    keep = _in_window(a, b, field)
    a, b = a[keep], b[keep]
    nrm = norm_form(a, b, field)
    keep = nrm <= n_max
    return a[keep], b[keep], nrm[keep]


def enumerate_ideals(field: FieldConfig, n_max: int) -> IdealClassTable:
    """Every nonzero ideal of norm ``<= n_max`` via its unique generator in the unit window."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a, b, nrm = _window_points(field, n_max)
    order = np.lexsort((b, a, nrm))
    a, b, nrm = a[order], b[order], nrm[order]
    counts = np.bincount(nrm, minlength=n_max + 1)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    return IdealClassTable(field.d, n_max, nrm, element_angle(a, b, field), a, b, offsets)


def cached_ideals(field: FieldConfig, n_max: int, cache_dir: str | Path | None) -> IdealClassTable:
    if cache_dir is None:
        return enumerate_ideals(field, n_max)
    path = Path(cache_dir) / f"ideals_d{field.d}_n{n_max}.npz"
    if path.exists():
        try:
            table = IdealClassTable.load(path)
            if table.d == field.d and table.n_max == n_max:
                return table
        except (ValueError, KeyError, OSError):
            pass
    table = enumerate_ideals(field, n_max)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.save(path)
    return table


# -- brute-force route -----------------------------------------------------

def coeff_A_direct(field: FieldConfig, k: int, n: int, table: IdealClassTable) -> complex:
    """Sum of psi_k over ideals of norm ``n``, straight from the enumeration."""
    theta = table.angles_of_norm(n)
    return complex(np.exp(2j * field.freq_mult * k * theta).sum())


def direct_A_array(field: FieldConfig, k: int, table: IdealClassTable) -> np.ndarray:
    phase = np.exp(2j * field.freq_mult * k * table.angles)
    A = np.zeros(table.n_max + 1, dtype=complex)
    np.add.at(A, table.norms, phase)
    return A


def dirichlet_inverse(f: np.ndarray) -> np.ndarray:
    """Dirichlet inverse of ``f`` (index 0 unused, ``f[1]`` must be nonzero)."""
    n_max = len(f) - 1
    g = np.zeros_like(f)
    g[1] = 1 / f[1]
    # running sums of f(d) g(n/d) over proper divisor pairs
    acc = np.zeros_like(f)
    for m in range(1, n_max + 1):
        if m > 1:
            g[m] = -acc[m] / f[1]
        # g[m] is final: push its contribution f(j) g(m) into n = j*m, j >= 2
        if g[m] != 0:
            acc[2 * m :: m] += f[2 : n_max // m + 1] * g[m]
    return g


def dirichlet_convolve(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    n_max = len(f) - 1
    h = np.zeros(n_max + 1, dtype=np.result_type(f, g))
    for d in range(1, n_max + 1):
        if f[d] != 0:
            h[d :: d] += f[d] * g[1 : n_max // d + 1]
    return h


def direct_coeff_arrays(field: FieldConfig, k: int, table: IdealClassTable):
    """(A, mu, c) by enumeration and Dirichlet algebra only: mu = A^{-1}, c = (A log) * mu."""
    A = direct_A_array(field, k, table)
    mu = dirichlet_inverse(A)
    logs = np.zeros(table.n_max + 1)
    logs[1:] = np.log(np.arange(1, table.n_max + 1))
    c = dirichlet_convolve(A * logs, mu)
    return A, mu, c


# -- closed forms ----------------------------------------------------------

def split_angles(field: FieldConfig, p_max: int) -> SplitAngleTable:
    """One angle in (0, pi) per split prime ``p <= p_max``: the smallest argument of a generator
    of a prime above ``p`` lying in the open upper half-plane."""
    sieve = shared_sieve(max(p_max, 10))
    chi = character_table(field)
    primes = sieve.primes(p_max) if p_max >= 2 else np.zeros(0, dtype=np.int64)
    split = primes[chi[primes % field.abs_disc] == 1]
    if len(split) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return SplitAngleTable(empty, np.zeros(0), empty, empty, p_max)
    a, b, nrm = _window_points(field, int(split[-1]))
    is_split = np.isin(nrm, split)
    a, b, nrm = a[is_split], b[is_split], nrm[is_split]
    theta = element_angle(a, b, field)
    order = np.lexsort((theta, nrm))
    a, b, nrm, theta = a[order], b[order], nrm[order], theta[order]
    first = np.concatenate([[True], nrm[1:] != nrm[:-1]])
    a, b, nrm, theta = a[first], b[first], nrm[first], theta[first]
    if len(nrm) != len(split) or np.any(nrm != split):
        missing = np.setdiff1d(split, nrm)
        raise GeneratorSearchFailed(f"no generator of norm p found for split primes {missing[:5]}")
    if np.any(norm_form(a, b, field) != nrm):
        raise GeneratorSearchFailed("generator norm mismatch")
    return SplitAngleTable(nrm, theta, a, b, p_max)


def _prime_power_values(field: FieldConfig, k: int, p: np.ndarray, e: np.ndarray,
                        theta_of: np.ndarray):
    """Closed-form A, mu and c at the prime powers ``p**e`` (arrays, e >= 1)."""
    chi = character_table(field)[p % field.abs_disc]
    logp = np.log(p.astype(float))
    x = 2.0 * field.freq_mult * k * theta_of[p]
    x = np.mod(x, 2 * math.pi)
    A = np.zeros(len(p))
    c = np.zeros(len(p))
    mu = np.zeros(len(p))

    sp = chi == 1
    emax = int(e.max()) if len(e) else 0
    acc = np.zeros(len(p))
    for j in range(emax + 1):
        use = sp & (j <= e)
        acc[use] += np.cos((2 * j - e[use]) * x[use])
    A[sp] = acc[sp]
    c[sp] = 2 * np.cos(e[sp] * x[sp]) * logp[sp]

    inert = chi == -1
    A[inert] = (e[inert] % 2 == 0).astype(float)
    c[inert] = np.where(e[inert] % 2 == 0, 2 * logp[inert], 0.0)

    ram = chi == 0
    A[ram] = 1.0
    c[ram] = logp[ram]

    mu[e == 1] = -A[e == 1]
    two = e == 2
    mu[two & sp] = 1.0
    mu[two & inert] = -1.0
    mu[two & ram] = 0.0
    return A, mu, c


def build_coeffs(field: FieldConfig, k: int, n_max: int,
                 splits: SplitAngleTable | None = None) -> CoeffTable:
    """A_k, mu_k, c_k for ``n <= n_max`` from prime-power closed forms and multiplicativity."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if splits is None or splits.p_max < n_max:
        splits = split_angles(field, n_max)
    theta_of = np.zeros(n_max + 1)
    inside = splits.p <= n_max
    theta_of[splits.p[inside]] = splits.theta[inside]

    sieve = shared_sieve(max(n_max, 10))
    p, e, m = sieve.prime_power_split(n_max)
    idx = np.arange(2, n_max + 1)
    Ape, mupe, cpe = _prime_power_values(field, k, p[idx], e[idx], theta_of)

    A = np.zeros(n_max + 1)
    mu = np.zeros(n_max + 1)
    c = np.zeros(n_max + 1)
    A[1] = mu[1] = 1.0
    A[idx], mu[idx] = Ape, mupe
    cofactor = m[idx]
    composite = cofactor > 1
    # each pass fixes numbers with one more distinct prime factor
    while True:
        newA = Ape * A[cofactor]
        newmu = mupe * mu[cofactor]
        if np.array_equal(newA, A[idx]) and np.array_equal(newmu, mu[idx]):
            break
        A[idx], mu[idx] = newA, newmu
    c[idx] = np.where(composite, 0.0, cpe)
    return CoeffTable(k, n_max, A, mu, c)


def _closed_form_at(field: FieldConfig, k: int, n: int, table: IdealClassTable):
    """Closed-form (A, mu, c) at a single ``n``, with split angles read off the ideal table."""
    if not 1 <= n <= table.n_max:
        raise OutOfRange(f"n={n} outside table range [1, {table.n_max}]")
    if n == 1:
        return 1.0, 1.0, 0.0
    factors = shared_sieve(max(table.n_max, 10)).factor(n)
    p = np.array([f[0] for f in factors], dtype=np.int64)
    e = np.array([f[1] for f in factors], dtype=np.int64)
    theta_of = np.zeros(int(p.max()) + 1)
    for q in p:
        ang = table.angles_of_norm(int(q))
        if len(ang):
            # any window angle of a prime above q gives the same cosines
            theta_of[q] = ang[0]
    A, mu, c = _prime_power_values(field, k, p, e, theta_of)
    return float(np.prod(A)), float(np.prod(mu)), float(c[0]) if len(p) == 1 else 0.0


def _coeff(field, k, n, table, which: int) -> float:
    if isinstance(table, CoeffTable):
        if not 1 <= n <= table.n_max:
            raise OutOfRange(f"n={n} outside coefficient range [1, {table.n_max}]")
        return float((table.A, table.mu, table.c)[which][n])
    if which == 0:
        return coeff_A_direct(field, k, n, table).real
    return _closed_form_at(field, k, n, table)[which]


def coeff_A(field: FieldConfig, k: int, n: int, table: IdealClassTable | CoeffTable) -> float:
    """A_k(n): a lookup in a CoeffTable, or the sum of psi_k over an IdealClassTable."""
    return _coeff(field, k, n, table, 0)


def coeff_mu(field: FieldConfig, k: int, n: int, table: IdealClassTable | CoeffTable) -> float:
    return _coeff(field, k, n, table, 1)


def coeff_c(field: FieldConfig, k: int, n: int, table: IdealClassTable | CoeffTable) -> float:
    return _coeff(field, k, n, table, 2)


def dirichlet_kernel_sum(K: int, n: int, theta: float, N: int, pole_tol: float = 1e-12) -> float:
    """``sum_{k=1}^K 2 cos(2 N n k theta)`` in closed form ``-1 + D_K(2 N n theta)``.

    At the kernel pole (``2 N n theta`` a multiple of ``2 pi``) the exact limit ``2K`` is returned.
    """
    x = math.fmod(2.0 * N * n * theta, 2 * math.pi)
    half = math.sin(x / 2)
    if abs(half) < pole_tol:
        return 2.0 * K
    return -1.0 + math.sin((K + 0.5) * x) / half


def character_sum_bruteforce(K: int, n: int, theta: float, N: int) -> float:
    x = math.fmod(2.0 * N * n * theta, 2 * math.pi)
    k = np.arange(1, K + 1)
    return float(2 * np.cos(k * x).sum())
