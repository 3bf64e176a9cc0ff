"""Sieve utilities: smallest prime factors, primes, von Mangoldt values."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import SieveRangeError


def smallest_prime_factor(n_max: int) -> np.ndarray:
    """Return ``spf`` with ``spf[n]`` the least prime dividing ``n`` (``spf[0] = spf[1] = 0``)."""
    n_max = max(int(n_max), 2)
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in range(2, math.isqrt(n_max) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[:2] = 0
    return spf


def primes_up_to(n_max: int) -> np.ndarray:
    if n_max < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n_max + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(n_max) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p)


def von_mangoldt(n_max: int) -> np.ndarray:
    """Array ``lam`` with ``lam[n] = Λ(n)`` for ``0 <= n <= n_max``."""
    lam = np.zeros(n_max + 1)
    for p in primes_up_to(n_max):
        logp = math.log(p)
        q = int(p)
        while q <= n_max:
            lam[q] = logp
            q *= int(p)
    return lam


class Sieve:
    """Factorisation table up to a fixed bound.

    Queries past ``bound`` raise :class:`SieveRangeError`; the table is never
    silently extended by trial division.
    """

    def __init__(self, bound: int):
        self.bound = int(bound)
        self.spf = smallest_prime_factor(self.bound)

    def _check(self, n: int) -> None:
        if n < 1 or n > self.bound:
            raise SieveRangeError(f"{n} outside sieve range [1, {self.bound}]")

    def factor(self, n: int) -> list[tuple[int, int]]:
        self._check(n)
        out = []
        while n > 1:
            p = int(self.spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def is_prime(self, n: int) -> bool:
        self._check(n)
        return n > 1 and int(self.spf[n]) == n

    def primes(self, upto: int | None = None) -> np.ndarray:
        upto = self.bound if upto is None else upto
        if upto > self.bound:
            raise SieveRangeError(f"{upto} outside sieve range [1, {self.bound}]")
        idx = np.arange(2, upto + 1)
        return idx[self.spf[2 : upto + 1] == idx]

    def prime_power_split(self, n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For every ``2 <= n <= n_max`` write ``n = p^e * m`` with ``p = spf(n)``, ``p ∤ m``.

        Returns arrays ``(p, e, m)`` indexed by ``n`` (entries 0 and 1 are zero).
        """
        if n_max > self.bound:
            raise SieveRangeError(f"{n_max} outside sieve range [1, {self.bound}]")
        n = np.arange(n_max + 1)
        p = self.spf[: n_max + 1].copy()
        e = np.zeros(n_max + 1, dtype=np.int64)
        m = n.copy()
        active = p > 1
        while active.any():
            idx = np.flatnonzero(active)
            divisible = m[idx] % p[idx] == 0
            hit = idx[divisible]
            m[hit] //= p[hit]
            e[hit] += 1
            active[idx[~divisible]] = False
        m[:2] = 0
        return p, e, m


@lru_cache(maxsize=8)
def shared_sieve(bound: int) -> Sieve:
    return Sieve(bound)
