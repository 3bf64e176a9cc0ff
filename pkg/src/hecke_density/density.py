"""One-level density of the family {L_k : 1 <= k <= K}: explicit-formula pieces,
lower-order constants, the ratios-recipe kernel J(r), and the empirical sum over zeros.

Scaling throughout: a zero at height ``gamma`` enters as ``f(gamma log K / pi)``,
and ``fhat`` arguments carry ``log n / log K``. Every prime sum below is finite
because ``fhat`` vanishes outside ``[-sigma, sigma]``; no tolerance truncation is used.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import mpmath as mp
import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import digamma

from .errors import (
    ConsistencyFailure,
    LowerHalfPlane,
    SieveTooSmall,
    TailTooLarge,
    TruncationTooCoarse,
)
from .heckecoeff import SplitAngleTable, dirichlet_kernel_sum, split_angles
from .lfunc import ZeroSet
from .primes import primes_up_to, von_mangoldt
from .quadfield import FieldConfig, character_table
from .testfn import TestFunctionPair, f_eval, fhat_eval, main_term

EULER_GAMMA = float(mp.euler)
PSI_INTEGRAL_LIMIT = -1.0 - EULER_GAMMA
INERT_SUM_BOUND = 10**7
L1_BLOCKS = 10**7


def _two_inert_indicator(field: FieldConfig) -> int:
    """1 when the prime 2 is inert, i.e. ``d`` not in {2, 7}; this is ``-a`` in the H-terms."""
    return 0 if field.d in (2, 7) else 1


def _support_bound(tf: TestFunctionPair, K: int, scale: float = 1.0) -> int:
    """Largest integer ``n`` with ``log n / (scale log K) < sigma``."""
    return int(math.floor(math.exp(tf.sigma * scale * math.log(K)))) + 1


def _check_sieve(sieve_bound: int | None, needed: int) -> int:
    """The support cutoff ``needed``, after checking that a caller-imposed sieve covers it."""
    if sieve_bound is not None and sieve_bound < needed:
        raise SieveTooSmall(f"sieve bound {sieve_bound} < required support {needed}")
    return needed


def required_sieve(tf: TestFunctionPair, K: int) -> int:
    """Largest prime any explicit-formula sum can touch (the split sums reach furthest)."""
    return _support_bound(tf, K, 2.0)


# -- psi integral and character sums --------------------------------------

def psi_integral(T: float) -> float:
    """``int_1^T (psi(t) - t)/t^2 dt``, exactly, with ``psi`` constant between prime powers.

    Equals ``sum_{n<=T} Lambda(n)(1/n - 1/T) - log T``.
    """
    if T < 1:
        raise ValueError("psi_integral needs T >= 1")
    n_max = int(math.floor(T))
    lam = von_mangoldt(max(n_max, 2))[: n_max + 1]
    n = np.arange(1, n_max + 1)
    return float(np.sum(lam[1:] / n) - lam.sum() / T - math.log(T))


def l_at_one_blocks(field: FieldConfig, blocks: int = L1_BLOCKS, chunk: int = 2_000_000) -> float:
    """``L(1, chi)`` summed over ``blocks`` complete periods of the character."""
    m = field.abs_disc
    chi = character_table(field)
    residues = np.flatnonzero(chi)
    total = 0.0
    for start in range(0, blocks, chunk):
        j = np.arange(start, min(start + chunk, blocks), dtype=float) * m
        acc = np.zeros(len(j))
        for a in residues:
            acc += chi[a] / (j + a)
        total += float(np.sum(acc))
    return total


def class_number_value(field: FieldConfig) -> float:
    """``L(1, chi) = 2 pi / (w sqrt|D|)`` for class number one."""
    return 2 * math.pi / (field.unit_order * math.sqrt(field.abs_disc))


def dirichlet_l(field: FieldConfig, s, dps: int = 40):
    """``L(s, chi)`` through Hurwitz zeta values (mpmath); ``s = 1`` uses the digamma form."""
    m = field.abs_disc
    chi = character_table(field)
    with mp.workdps(dps):
        s = mp.mpmathify(s)
        if s == 1:
            return -mp.fsum(int(chi[a]) * mp.digamma(mp.mpf(a) / m) for a in range(1, m)) / m
        return mp.power(m, -s) * mp.fsum(int(chi[a]) * mp.zeta(s, mp.mpf(a) / m)
                                         for a in range(1, m) if chi[a])


def lprime_ratio_oracle(field: FieldConfig, h: float = 1e-15, dps: int = 50) -> float:
    """``L'(1,chi)/L(1,chi)`` by a central difference of the Hurwitz representation."""
    with mp.workdps(dps):
        hh = mp.mpf(h)
        up, down = dirichlet_l(field, 1 + hh, dps), dirichlet_l(field, 1 - hh, dps)
        return float(((up - down) / (2 * hh)) / ((up + down) / 2))


def dedekind_eta(tau: complex, cutoff: float = 1e-18) -> complex:
    """``eta(tau) = e^{pi i tau/12} prod_{n>=1} (1 - e^{2 pi i n tau})``."""
    tau = complex(tau)
    if tau.imag <= 0.1:
        raise LowerHalfPlane(f"need Im(tau) > 0.1, got {tau.imag}")
    q = np.exp(2j * np.pi * tau)
    prod = 1.0 + 0j
    qn = q
    while abs(qn) >= cutoff:
        prod *= 1 - qn
        qn *= q
    return complex(np.exp(1j * np.pi * tau / 12) * prod)


def cm_point(field: FieldConfig) -> complex:
    if field.d == 2:
        return 1j * math.sqrt(2)
    return complex(-0.5, math.sqrt(field.d) / 2)


def lprime_ratio(field: FieldConfig) -> float:
    """``L'(1,chi)/L(1,chi)`` from the Kronecker limit formula at the CM point."""
    tau0 = cm_point(field)
    return (EULER_GAMMA - math.log(2) - 0.5 * math.log(field.abs_disc) - math.log(tau0.imag)
            - 4 * math.log(abs(dedekind_eta(tau0))))


def inert_sum(field: FieldConfig, bound: int = INERT_SUM_BOUND) -> tuple[float, float]:
    """``sum_{3 <= p <= bound, p inert} log p / (p^2 - 1)`` and an estimate of the missing tail.

    Inert primes carry half the prime density, so the tail is about ``1 / (2 bound)``.
    """
    p = primes_up_to(bound)
    p = p[p >= 3]
    inert = p[character_table(field)[p % field.abs_disc] == -1].astype(float)
    return float(np.sum(np.log(inert) / (inert * inert - 1))), 1.0 / (2 * bound)


# -- constants ------------------------------------------------------------

@dataclass
class ConstantsBundle:
    d: int
    N: int
    psi_integral: float
    psi_T: float
    lprime_ratio: float
    inert_sum: float
    inert_sum_tail: float
    ell0: float
    ell1: float
    l1_chi: float
    l1_blocks: int
    provenance: dict = dc_field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _common_terms(field: FieldConfig) -> float:
    d = field.d
    return math.sqrt(d) * math.log(d) / (d - 1) + (2 * math.log(2) / 3) * _two_inert_indicator(field)


def ell0_value(field: FieldConfig, lprime: float, inert: float) -> float:
    return ((1 + EULER_GAMMA) - lprime - 2 * inert + 0.5 * math.log(field.abs_disc)
            - math.log(2 * math.pi) + math.log(field.freq_mult) - 2 - _common_terms(field))


def ell1_value(field: FieldConfig, lprime: float, inert: float) -> float:
    return (lprime + 2 * inert
            + math.log(2 * math.pi * math.e / (field.freq_mult * math.sqrt(field.abs_disc)))
            + _common_terms(field) - EULER_GAMMA)


def constants(field: FieldConfig, psi_T: float = 1e6, psi_band: float = 0.05,
              inert_bound: int = INERT_SUM_BOUND, l1_blocks: int = L1_BLOCKS) -> ConstantsBundle:
    """Lower-order constants; the psi-integral enters through its exact limit ``-1 - gamma``,
    and the truncated integral at ``psi_T`` is only a consistency check."""
    psi_val = psi_integral(psi_T)
    if abs(psi_val - PSI_INTEGRAL_LIMIT) > psi_band:
        raise ConsistencyFailure(
            f"psi integral at T={psi_T:g} is {psi_val:.6f}, outside {psi_band} of {PSI_INTEGRAL_LIMIT:.6f}")
    lp = lprime_ratio(field)
    inert, tail = inert_sum(field, inert_bound)
    e0, e1 = ell0_value(field, lp, inert), ell1_value(field, lp, inert)
    l1 = l_at_one_blocks(field, l1_blocks) if l1_blocks > 0 else class_number_value(field)
    return ConstantsBundle(
        field.d, field.freq_mult, psi_val, psi_T, lp, inert, tail, e0, e1, l1, l1_blocks,
        provenance={
            "psi_integral": f"exact piecewise sum to T={psi_T:g}; ell0 uses the limit -1-gamma",
            "lprime_ratio": "Kronecker limit formula with Dedekind eta at the CM point",
            "inert_sum": f"prime sieve to {inert_bound}, tail about {tail:.1e} not added",
            "l1_chi": (f"{l1_blocks} complete character periods" if l1_blocks > 0
                       else "class number formula"),
        })


# -- explicit-formula sums ------------------------------------------------

def s_x(K: int, tf: TestFunctionPair, field: FieldConfig) -> float:
    """Leading asymptotic of the gamma-factor term."""
    L = math.log(K)
    return float(fhat_eval(tf, 0.0)) * (1 + (0.5 * math.log(field.abs_disc) - math.log(2 * math.pi)
                                             + math.log(field.freq_mult) - 1) / L)


def s_x_exact(K: int, tf: TestFunctionPair, field: FieldConfig) -> float:
    """Gamma-factor term without asymptotics:

    ``(1/(K log K)) sum_k int f(tau) (log q + Re digamma(1/2 + N k + i pi tau / log K)) dtau``.

    The digamma integral representation turns the tau-integral into a finite
    integral against ``fhat``.
    """
    L = math.log(K)
    f0 = float(fhat_eval(tf, 0.0))
    edge = 2 * L * tf.sigma
    total = 0.0
    for k in range(1, K + 1):
        a = 0.5 + field.freq_mult * k
        body = lambda t: math.exp(-a * t) * (f0 - fhat_eval(tf, t / (2 * L))) / -math.expm1(-t)  # noqa: E731
        inner = quad(body, 0, edge, epsabs=1e-13, limit=200)[0]
        inner += quad(lambda t: f0 * math.exp(-a * t) / -math.expm1(-t), edge, np.inf,
                      epsabs=1e-13)[0]
        total += f0 * (math.log(field.q_scale) + digamma(a)) + inner
    return total / (K * L)


def s_inert(K: int, tf: TestFunctionPair, field: FieldConfig, sieve_bound: int | None = None) -> float:
    L = math.log(K)
    bound = _check_sieve(sieve_bound, _support_bound(tf, K))
    p = primes_up_to(bound)
    p = p[character_table(field)[p % field.abs_disc] == -1]
    total = 0.0
    for n in range(1, int(tf.sigma * L / math.log(2)) + 2):
        u = n * np.log(p) / L
        total += float(np.sum(np.log(p) / p.astype(float) ** n * fhat_eval(tf, u)))
    return -2.0 / L * total


def s_ram(K: int, tf: TestFunctionPair, field: FieldConfig) -> float:
    L, d = math.log(K), field.d
    total, n = 0.0, 1
    while n * math.log(d) / (2 * L) < tf.sigma:
        total += math.log(d) / d ** (n / 2) * float(fhat_eval(tf, n * math.log(d) / (2 * L)))
        n += 1
    return -total / L


def _split_terms(K: int, tf: TestFunctionPair, field: FieldConfig, splits: SplitAngleTable | None,
                 sieve_bound: int | None):
    L = math.log(K)
    bound = _check_sieve(sieve_bound, _support_bound(tf, K, 2.0))
    if splits is None or splits.p_max < bound:
        splits = split_angles(field, bound)
    keep = splits.p <= bound
    for p, theta in zip(splits.p[keep], splits.theta[keep]):
        n = 1
        while n * math.log(p) / (2 * L) < tf.sigma:
            weight = math.log(p) / p ** (n / 2) * float(fhat_eval(tf, n * math.log(p) / (2 * L)))
            yield int(p), n, float(theta), weight
            n += 1


def s_split(K: int, tf: TestFunctionPair, field: FieldConfig, splits: SplitAngleTable | None = None,
            sieve_bound: int | None = None, bruteforce: bool = False) -> float:
    """Split-prime term; the family sum over k uses the Dirichlet-kernel closed form unless
    ``bruteforce`` asks for the per-k cosine sum."""
    L = math.log(K)
    N = field.freq_mult
    total = 0.0
    for _, n, theta, weight in _split_terms(K, tf, field, splits, sieve_bound):
        if bruteforce:
            k = np.arange(1, K + 1)
            char_sum = float(np.sum(2 * np.cos(2 * N * n * k * theta)))
        else:
            char_sum = dirichlet_kernel_sum(K, n, theta, N)
        total += weight * char_sum
    return -total / (K * L)


@dataclass
class RCTerms:
    s_zeta: float
    s_L: float
    s_Aprime: float
    s_d: float
    s_H: float

    @property
    def total(self) -> float:
        return self.s_zeta + self.s_L + self.s_Aprime + self.s_d + self.s_H


def rc_terms(K: int, tf: TestFunctionPair, field: FieldConfig, sieve_bound: int | None = None) -> RCTerms:
    L = math.log(K)
    bound = _check_sieve(sieve_bound, _support_bound(tf, K))
    lam = von_mangoldt(bound)
    n = np.arange(1, bound + 1)
    weights = lam[1:] / n * fhat_eval(tf, np.log(n) / L)
    chi = character_table(field)[n % field.abs_disc]
    s_zeta = -float(np.sum(weights)) / L
    s_L = float(np.sum(weights * chi)) / L

    p = primes_up_to(bound)
    p = p[(p >= 3) & (character_table(field)[p % field.abs_disc] == -1)]
    s_a = 0.0
    for j in range(1, int(tf.sigma * L / (2 * math.log(3))) + 2):
        s_a += float(np.sum(np.log(p) / p.astype(float) ** (2 * j) * fhat_eval(tf, 2 * j * np.log(p) / L)))
    s_a *= -2.0 / L

    d = field.d
    s_d, j = 0.0, 0
    while (0.5 + j) * math.log(d) / L < tf.sigma:
        s_d += d ** (-j) * float(fhat_eval(tf, (0.5 + j) * math.log(d) / L))
        j += 1
    s_d *= -math.log(d) / (math.sqrt(d) * L)

    a = -_two_inert_indicator(field)
    s_h, j = 0.0, 0
    while a and (2 * j + 2) * math.log(2) / L < tf.sigma:
        s_h += 4.0 ** (-j) * float(fhat_eval(tf, (2 * j + 2) * math.log(2) / L))
        j += 1
    s_h *= a / 2 * math.log(2) / L
    return RCTerms(s_zeta, s_L, s_a, s_d, s_h)


# -- predictions ----------------------------------------------------------

def rc_prediction(K: int, tf: TestFunctionPair, field: FieldConfig, consts: ConstantsBundle) -> float:
    return main_term(tf) + consts.ell0 * (float(fhat_eval(tf, 0.0)) - float(fhat_eval(tf, 1.0))) / math.log(K)


def unconditional_prediction(K: int, tf: TestFunctionPair, field: FieldConfig,
                             consts: ConstantsBundle) -> float:
    return main_term(tf) + consts.ell0 * float(fhat_eval(tf, 0.0)) / math.log(K)


# -- ratios kernel --------------------------------------------------------

@dataclass
class RatiosValue:
    value: complex
    log_tail_bound: float


def _euler_logs(field: FieldConfig, r: complex, p_max: int) -> tuple[complex, complex]:
    p = primes_up_to(p_max)
    p = p[p >= 3]
    chi = character_table(field)[p % field.abs_disc]
    pf = p.astype(float)
    y = np.exp(-2 * r * np.log(pf))  # p^{-2r}
    sp, inert = chi == 1, chi == -1
    log_a1 = np.sum(np.log1p(-((1 - y[sp]) ** 2) / (pf[sp] - 1) ** 2))
    log_am1 = np.sum(np.log1p(-(y[inert] ** 2) / pf[inert] ** 2) - np.log1p(-1 / pf[inert] ** 2))
    return complex(log_a1), complex(log_am1)


def local_factors(field: FieldConfig, r: complex, p_max: int = 10**5) -> tuple[complex, complex, complex, complex]:
    """``(F_d, H_2, A_1, A_{-1})`` at ``(alpha, gamma) = (-r, r)``, Euler products cut at ``p_max``."""
    r = complex(r)
    d = field.d
    f_d = 1 + (d ** (0.5 + r) - d ** (0.5 - r)) / (d - 1)
    if d == 2:
        h2 = 1.0 + 0j
    elif d == 7:
        h2 = 2 ** (1 - 2 * r) * (1 - 2 ** (-1 - 2 * r))
    else:
        h2 = (4 / 3) * (1 - 2 ** (-2 * (2 * r + 1)))
    log_a1, log_am1 = _euler_logs(field, r, p_max)
    return complex(f_d), complex(h2), complex(np.exp(log_a1)), complex(np.exp(log_am1))


def ratios_J(field: FieldConfig, r: complex, K: int, p_max: int = 10**5, dps: int = 30) -> RatiosValue:
    """``J(r) = -zeta(1-2r) L(1+2r,chi)/L(1,chi) (1-2r)^{-1} (2 pi/(K N sqrt|D|))^{2r}
    F_d(-r,r) H_2(-r,r) A_1(-r,r) A_{-1}(-r,r)`` with Euler products cut at ``p_max``."""
    if p_max < 10**5:
        raise TruncationTooCoarse(f"p_max={p_max} below the 1e5 floor for the Euler products")
    r = complex(r)
    with mp.workdps(dps):
        rr = mp.mpc(r.real, r.imag)
        lead = -mp.zeta(1 - 2 * rr) * dirichlet_l(field, 1 + 2 * rr, dps) / dirichlet_l(field, 1, dps)
        lead = complex(lead)
    lead /= 1 - 2 * r
    lead *= np.exp(2 * r * math.log(2 * math.pi / (K * field.freq_mult * math.sqrt(field.abs_disc))))
    f_d, h2, a1, am1 = local_factors(field, r, p_max)
    # per-prime log terms are O(1/p^2) with numerators bounded by 6 when Re r >= 0
    tail = 6.0 / (p_max * math.log(p_max))
    return RatiosValue(complex(lead * f_d * h2 * a1 * am1), tail)


def j_limit_probe(field: FieldConfig, x: float, K: int, p_max: int = 10**5) -> complex:
    """``e^{2 pi i tau} J(pi i tau / log K) - 1/x`` at ``x = 2 pi i tau / log K``, which tends to ``ell1``."""
    J = ratios_J(field, x / 2, K, p_max).value
    return complex(K ** x * J - 1 / x)


# -- empirical side -------------------------------------------------------

def zero_tail_bound(tf: TestFunctionPair, K: int, T: float, field: FieldConfig) -> float:
    """Bound on the contribution of zeros above ``T``, averaged over the family.

    Uses ``|f(x)| <= C/x^2`` and the zero density ``(1/pi) log(q (N k + T))`` per unit height
    (each side of the centre).
    """
    L = math.log(K)
    c = _decay_constant(tf)
    total = 0.0
    for k in range(1, K + 1):
        density = max(math.log(field.q_scale * (field.freq_mult * k + T)), 1.0) / math.pi
        total += 2 * density * c * (math.pi / L) ** 2 / T
    return total / K


def _decay_constant(tf: TestFunctionPair) -> float:
    # Fejer: f(x) <= 1/(pi^2 sigma x^2); sampled pairs use the Fejer value at the same support
    return 1.0 / (math.pi**2 * tf.sigma)


def default_height(tf: TestFunctionPair, K: int, field: FieldConfig, tail_tol: float = 0.01) -> float:
    """Smallest height at which :func:`zero_tail_bound` drops to ``tail_tol``."""
    lo, hi = 1.0, 2.0
    while zero_tail_bound(tf, K, hi, field) > tail_tol:
        lo, hi = hi, 2 * hi
    return float(brentq(lambda T: zero_tail_bound(tf, K, T, field) - tail_tol, lo, hi, xtol=1e-6)) + 1e-5


def empirical_density(zerosets: list[ZeroSet], tf: TestFunctionPair, K: int) -> float:
    """``(1/K) sum_k sum_{+-gamma} f(gamma log K / pi)``; a centre zero is counted once."""
    if K < 2:
        raise ValueError("K must be >= 2")
    L = math.log(K)
    total = 0.0
    for zs in sorted(zerosets, key=lambda z: z.k):
        if len(zs.gammas):
            total += 2 * float(np.sum(f_eval(tf, np.asarray(zs.gammas) * L / math.pi)))
        if zs.zero_at_center:
            total += float(f_eval(tf, 0.0))
    return total / K


@dataclass
class DensityReport:
    d: int
    N: int
    K: int
    tf: str
    T: float
    empirical: float
    s_x: float
    s_x_exact: float
    s_inert: float
    s_split: float
    s_ram: float
    rc_terms: dict
    main_term: float
    rc_prediction: float
    unconditional_prediction: float
    identity_residual: float
    explicit_formula_residual: float
    tail_bound: float
    ell0: float
    ell1: float
    notes: dict = dc_field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def csv_row(self) -> dict:
        row = {k: v for k, v in asdict(self).items() if not isinstance(v, dict)}
        row.update({f"rc_{k}": v for k, v in self.rc_terms.items()})
        return row

    def write(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "density_report.json").write_text(self.to_json())
        row = self.csv_row()
        with open(directory / "density_report.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            w.writeheader()
            w.writerow(row)


def density_report(zerosets: list[ZeroSet], tf: TestFunctionPair, field: FieldConfig, K: int,
                   consts: ConstantsBundle, tail_tol: float = 0.01,
                   sieve_bound: int | None = None) -> DensityReport:
    T = min(zs.T for zs in zerosets)
    tail = zero_tail_bound(tf, K, T, field)
    if tail > tail_tol:
        raise TailTooLarge(f"zero tail bound {tail:.3g} at T={T:g} exceeds {tail_tol}; raise T")
    emp = empirical_density(zerosets, tf, K)
    sx, sx_exact = s_x(K, tf, field), s_x_exact(K, tf, field)
    si = s_inert(K, tf, field, sieve_bound)
    ss = s_split(K, tf, field, sieve_bound=sieve_bound)
    sr = s_ram(K, tf, field)
    rc = rc_terms(K, tf, field, sieve_bound)
    return DensityReport(
        d=field.d, N=field.freq_mult, K=K, tf=tf.label, T=T, empirical=emp,
        s_x=sx, s_x_exact=sx_exact, s_inert=si, s_split=ss, s_ram=sr,
        rc_terms={k: float(v) for k, v in asdict(rc).items()},
        main_term=main_term(tf),
        rc_prediction=rc_prediction(K, tf, field, consts),
        unconditional_prediction=unconditional_prediction(K, tf, field, consts),
        identity_residual=abs((si + sr) - rc.total),
        explicit_formula_residual=emp - (sx_exact + si + ss + sr),
        tail_bound=tail, ell0=consts.ell0, ell1=consts.ell1,
        notes={"incomplete_k": [zs.k for zs in zerosets if not zs.complete],
               "even_order_zeros": "invisible to sign scanning; only the count check guards them"},
    )
