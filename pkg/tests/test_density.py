import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import digamma

from hecke_density import density as dens
from hecke_density.errors import LowerHalfPlane, SieveTooSmall, TailTooLarge, TruncationTooCoarse
from hecke_density.heckecoeff import enumerate_ideals
from hecke_density.lfunc import ZeroSet
from hecke_density.primes import von_mangoldt
from hecke_density.quadfield import HEEGNER, SplitTag, classify_prime, make_field
from hecke_density.testfn import f_eval, fejer, fhat_eval, main_term, sampled_fourier

FIELDS = [make_field(d, 6 if d == 3 else 2) for d in HEEGNER]
F7 = make_field(7, 2)
GAMMA = float(mp.euler)


# -- psi integral -----------------------------------------------------------

def test_psi_integral_examples():
    assert dens.psi_integral(1) == 0.0
    assert dens.PSI_INTEGRAL_LIMIT == pytest.approx(-1.5772156649, abs=1e-10)


def test_psi_integral_matches_interval_sum():
    # int over [n, n+1) of (psi(n) - t)/t^2, summed interval by interval
    T = 3000
    lam = von_mangoldt(T)
    psi, total = 0.0, 0.0
    for n in range(1, T):
        psi += lam[n]
        total += psi * (1 / n - 1 / (n + 1)) - math.log((n + 1) / n)
    assert dens.psi_integral(T) == pytest.approx(total, abs=1e-9)


@pytest.mark.parametrize("T", [1e5, 3e5, 1e6])
def test_psi_integral_band(T):
    assert abs(dens.psi_integral(T) - dens.PSI_INTEGRAL_LIMIT) <= 0.05


# -- eta and the Kronecker limit formula ------------------------------------

def test_eta_at_i():
    with mp.workdps(30):
        closed = mp.gamma(0.25) / (2 * mp.pi ** 0.75)
        product = mp.exp(-mp.pi / 12) * mp.qp(mp.exp(-2 * mp.pi))
    assert float(closed) == pytest.approx(0.768225422326, abs=1e-12)
    assert float(product) == pytest.approx(float(closed), abs=1e-15)
    assert dens.dedekind_eta(1j) == pytest.approx(float(closed), abs=1e-14)


@given(st.floats(-3, 3), st.floats(0.2, 4))
def test_eta_modulus_invariant_under_translation(x, y):
    assert abs(dens.dedekind_eta(complex(x + 1, y))) == pytest.approx(abs(dens.dedekind_eta(complex(x, y))), rel=1e-12)


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f"d{f.d}")
def test_eta_at_cm_point_against_q_pochhammer(f):
    tau = dens.cm_point(f)
    got = dens.dedekind_eta(tau)
    with mp.workdps(30):
        t = mp.mpc(tau.real, tau.imag)
        want = complex(mp.exp(1j * mp.pi * t / 12) * mp.qp(mp.exp(2j * mp.pi * t)))
    assert got != 0 and math.isfinite(abs(got))
    assert abs(got - want) < 1e-14


def test_cm_points():
    assert dens.cm_point(make_field(2, 2)) == pytest.approx(1j * math.sqrt(2))
    for f in FIELDS[1:]:
        assert dens.cm_point(f) == pytest.approx(complex(-0.5, math.sqrt(f.d) / 2))


def test_eta_refuses_points_near_real_axis():
    with pytest.raises(LowerHalfPlane):
        dens.dedekind_eta(0.3 + 0.05j)


def test_l_at_one_d7():
    assert dens.class_number_value(F7) == pytest.approx(math.pi / math.sqrt(7), abs=1e-15)
    assert float(dens.dirichlet_l(F7, 1)) == pytest.approx(math.pi / math.sqrt(7), abs=1e-14)
    assert dens.l_at_one_blocks(F7, 10**5) == pytest.approx(math.pi / math.sqrt(7), abs=1e-4)


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f"d{f.d}")
def test_lprime_ratio_against_derivative_oracle(f):
    assert dens.lprime_ratio(f) == pytest.approx(dens.lprime_ratio_oracle(f), abs=1e-4)


def test_hurwitz_route_against_mpmath_dirichlet():
    chi = [int(dens.character_table(F7)[a]) for a in range(7)]
    for s in (2, 1.5 + 2j, 0.7):
        assert complex(dens.dirichlet_l(F7, s)) == pytest.approx(complex(mp.dirichlet(s, chi)), abs=1e-14)


# -- lower-order constants ---------------------------------------------------

def _ell0_by_hand(f, lp, inert):
    d = f.d
    two_inert = 0 if d in (2, 7) else 1
    return ((1 + GAMMA) - lp - 2 * inert + math.log(math.sqrt(f.abs_disc)) - math.log(2 * math.pi)
            + math.log(f.freq_mult) - 2 - math.sqrt(d) * math.log(d) / (d - 1) - (2 * math.log(2) / 3) * two_inert)


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f"d{f.d}")
def test_constants_bundle(f):
    c = dens.constants(f, psi_T=1e5, inert_bound=10**5, l1_blocks=0)
    assert c.ell0 == pytest.approx(_ell0_by_hand(f, c.lprime_ratio, c.inert_sum), abs=1e-14)
    assert abs(c.ell0 + c.ell1) <= 1e-12
    assert c.l1_chi == pytest.approx(2 * math.pi / (f.unit_order * math.sqrt(f.abs_disc)))
    assert set(c.provenance) >= {"psi_integral", "lprime_ratio", "inert_sum", "l1_chi"}


def test_two_log_two_term_only_when_two_is_inert():
    for f in FIELDS:
        with_term = dens._common_terms(f) - math.sqrt(f.d) * math.log(f.d) / (f.d - 1)
        two_inert = classify_prime(2, f).tag is SplitTag.INERT
        assert with_term == pytest.approx(2 * math.log(2) / 3 if two_inert else 0.0, abs=1e-15)
    assert {f.d for f in FIELDS if classify_prime(2, f).tag is not SplitTag.INERT} == {2, 7}


def test_inert_sum_tail_estimate():
    full, _ = dens.inert_sum(F7, 10**6)
    part, tail = dens.inert_sum(F7, 10**5)
    assert 0 < full - part < 3 * tail


# -- explicit-formula pieces -------------------------------------------------

def test_s_x_examples():
    zero_at_origin = sampled_fourier(np.linspace(-0.5, 0.5, 41), np.linspace(-0.5, 0.5, 41) ** 2)
    assert dens.s_x(40, zero_at_origin, F7) == 0.0
    K = math.e**4
    want = 1 + (math.log(math.sqrt(7)) - math.log(2 * math.pi) + math.log(2) - 1) / 4
    assert dens.s_x(K, fejer(0.6), F7) == pytest.approx(want, abs=1e-15)
    assert dens.s_x(1e300, fejer(0.6), F7) == pytest.approx(1.0, abs=1e-2)


def _s_x_by_tau_integral(K, tf, f):
    L = math.log(K)
    total = 0.0
    for k in range(1, K + 1):
        a = 0.5 + f.freq_mult * k
        g = lambda t: f_eval(tf, t) * (math.log(f.q_scale) + digamma(a + 1j * math.pi * t / L).real)  # noqa: E731
        X = 400.0
        body = sum(quad(g, j, j + 1, epsabs=1e-13)[0] for j in range(int(X)))
        # f averages 1/(2 pi^2 sigma t^2); the digamma factor is near log(pi t / L) out there
        tail = quad(lambda t: (math.log(f.q_scale) + math.log(math.hypot(a, math.pi * t / L)))
                    / (2 * math.pi**2 * tf.sigma * t * t), X, np.inf)[0]
        total += 2 * (body + tail)
    return total / (K * L)


def test_s_x_exact_against_tau_side_integral():
    tf = fejer(0.6)
    assert dens.s_x_exact(3, tf, F7) == pytest.approx(_s_x_by_tau_integral(3, tf, F7), abs=2e-5)


def test_s_x_exact_approaches_asymptotic():
    tf = fejer(0.6)
    gaps = [abs(dens.s_x_exact(K, tf, F7) - dens.s_x(K, tf, F7)) for K in (10, 100, 1000)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_prime_sums_vanish_when_support_excludes_every_prime():
    # split and ramified arguments carry log p / (2 log K): exclusion needs 2 sigma log K < log 2
    K = 10
    tf = fejer(0.9 * math.log(2) / (2 * math.log(K)))
    for f in FIELDS:
        assert dens.s_inert(K, tf, f) == 0.0
        assert dens.s_split(K, tf, f) == 0.0
        assert dens.s_ram(K, tf, f) == 0.0


@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f"d{f.d}")
def test_s_ram_first_term(f):
    K = 40
    L = math.log(K)
    d = f.d
    # support admits n = 1 only
    sigma = 1.5 * math.log(d) / (2 * L)
    tf = fejer(sigma)
    want = -(math.log(d) / (math.sqrt(d) * L)) * fhat_eval(tf, math.log(d) / (2 * L))
    assert dens.s_ram(K, tf, f) == pytest.approx(want, rel=1e-14)


def test_s_inert_against_direct_double_sum():
    K, tf = 40, fejer(0.8)
    L = math.log(K)
    total = 0.0
    for p in range(2, 2000):
        if all(p % q for q in range(2, int(p**0.5) + 1)) and classify_prime(p, F7).tag is SplitTag.INERT:
            n = 1
            while n * math.log(p) / L < tf.sigma:
                total += math.log(p) / p**n * fhat_eval(tf, n * math.log(p) / L)
                n += 1
    assert dens.s_inert(K, tf, F7) == pytest.approx(-2 / L * total, abs=1e-14)


@settings(max_examples=12)
@given(st.sampled_from(FIELDS), st.integers(2, 50), st.floats(0.2, 1.4))
def test_s_split_kernel_matches_per_k_sum(f, K, sigma):
    tf = fejer(sigma)
    assert dens.s_split(K, tf, f) == pytest.approx(dens.s_split(K, tf, f, bruteforce=True), abs=1e-9)


def test_s_split_against_ideal_enumeration():
    # independent route: psi_k summed over both ideals above each split prime
    K, tf, f = 20, fejer(0.9), F7
    L = math.log(K)
    pmax = int(math.exp(2 * tf.sigma * L)) + 1
    table = enumerate_ideals(f, pmax)
    total = 0.0
    for p in range(2, pmax + 1):
        if table.r[p] != 2 or any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
            continue
        angles = table.angles_of_norm(p)
        n = 1
        while n * math.log(p) / (2 * L) < tf.sigma:
            w = math.log(p) / p ** (n / 2) * fhat_eval(tf, n * math.log(p) / (2 * L))
            chars = sum(cmath.exp(2j * f.freq_mult * k * n * th) for k in range(1, K + 1) for th in angles)
            total += w * chars.real
            n += 1
    assert dens.s_split(K, tf, f) == pytest.approx(-total / (K * L), abs=1e-12)


def test_sieve_too_small():
    with pytest.raises(SieveTooSmall):
        dens.s_inert(40, fejer(0.6), F7, sieve_bound=5)
    with pytest.raises(SieveTooSmall):
        dens.rc_terms(40, fejer(0.6), F7, sieve_bound=5)


def test_rc_term_examples():
    assert dens.rc_terms(40, fejer(1.2), make_field(2, 2)).s_H == 0.0
    assert dens.rc_terms(40, fejer(1.2), F7).s_H == 0.0
    assert dens.rc_terms(40, fejer(1.2), make_field(11, 2)).s_H != 0.0
    # support below log 2 / log K keeps only n = 1, which carries Lambda(1) = 0
    assert dens.rc_terms(40, fejer(0.9 * math.log(2) / math.log(40)), F7).s_zeta == 0.0


@settings(max_examples=25)
@given(st.sampled_from(FIELDS), st.integers(2, 300), st.floats(0.1, 2.0))
def test_inert_plus_ramified_equals_rc_terms(f, K, sigma):
    tf = fejer(sigma)
    lhs = dens.s_inert(K, tf, f) + dens.s_ram(K, tf, f)
    assert abs(lhs - dens.rc_terms(K, tf, f).total) <= 1e-10


# -- predictions ------------------------------------------------------------

@pytest.fixture(scope="module")
def consts7():
    return dens.constants(F7, psi_T=1e5, inert_bound=10**6, l1_blocks=0)


def test_prediction_examples(consts7):
    tf = fejer(0.6)
    assert dens.rc_prediction(40, tf, F7, consts7) == dens.unconditional_prediction(40, tf, F7, consts7)
    zero = dens.ConstantsBundle(7, 2, 0, 0, 0, 0, 0, 0.0, 0.0, 0, 0)
    assert dens.rc_prediction(40, tf, F7, zero) == pytest.approx(0.7, abs=1e-15)
    wide = fejer(1.5)
    gap = dens.unconditional_prediction(40, wide, F7, consts7) - dens.rc_prediction(40, wide, F7, consts7)
    assert gap == pytest.approx(consts7.ell0 * (1 / 3) / math.log(40), abs=1e-14)


@given(st.floats(0.05, 0.999), st.integers(2, 10**6))
def test_predictions_coincide_below_unit_support(sigma, K):
    c = dens.ConstantsBundle(7, 2, 0, 0, 0, 0, 0, -1.97, 1.97, 0, 0)
    tf = fejer(sigma)
    assert dens.rc_prediction(K, tf, F7, c) == dens.unconditional_prediction(K, tf, F7, c)


# -- ratios kernel ----------------------------------------------------------

@pytest.mark.parametrize("f", FIELDS, ids=lambda f: f"d{f.d}")
def test_local_factors_are_one_on_the_diagonal(f):
    # (alpha, gamma) = (-r, r) with r = 0 is the diagonal point alpha = gamma
    for value in dens.local_factors(f, 0.0):
        assert value == pytest.approx(1.0, abs=1e-12)


@given(st.complex_numbers(max_magnitude=0.25, allow_nan=False, allow_infinity=False))
def test_h2_is_one_for_d2(r):
    assert dens.local_factors(make_field(2, 2), r)[1] == 1.0


def test_ratios_truncation_floor():
    with pytest.raises(TruncationTooCoarse):
        dens.ratios_J(F7, 0.1, 40, p_max=10**4)


@pytest.mark.parametrize("r", [0.05, 0.1 + 0.3j, 0.2])
def test_ratios_stable_when_euler_cut_doubles(r):
    a = dens.ratios_J(F7, r, 40, p_max=10**5)
    b = dens.ratios_J(F7, r, 40, p_max=2 * 10**5)
    assert abs(a.value - b.value) <= a.log_tail_bound * abs(a.value)


def test_j_limit_probe_trend(consts7):
    # the probe error shrinks linearly with x
    errs = [abs(dens.j_limit_probe(F7, x, 40) - consts7.ell1) for x in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[0] == pytest.approx(0.1, rel=0.1)


# -- empirical side ---------------------------------------------------------

def _zs(k, gammas, centre=False, T=30.0):
    g = np.asarray(gammas, dtype=float)
    return ZeroSet(k, T, g, centre, 1e-8, True, np.zeros(len(g)), 1e-8, 7, 2)


def test_empirical_examples():
    tf = fejer(0.6)
    assert dens.empirical_density([_zs(k, []) for k in range(1, 11)], tf, 10) == 0.0
    K, g = 10, 1.3
    got = dens.empirical_density([_zs(1, [g])] + [_zs(k, []) for k in range(2, 11)], tf, K)
    assert got == pytest.approx(2 * f_eval(tf, g * math.log(K) / math.pi) / K, rel=1e-15)
    centre = dens.empirical_density([_zs(1, [], centre=True)], tf, 2)
    assert centre == pytest.approx(f_eval(tf, 0.0) / 2)


@given(st.floats(1, 200), st.floats(1.01, 4))
def test_tail_bound_decreasing_in_height(T, factor):
    tf = fejer(0.6)
    assert dens.zero_tail_bound(tf, 40, T * factor, F7) < dens.zero_tail_bound(tf, 40, T, F7)


def test_default_height_meets_tail_tolerance():
    tf = fejer(0.6)
    T = dens.default_height(tf, 40, F7)
    assert dens.zero_tail_bound(tf, 40, T, F7) <= 0.01
    assert dens.zero_tail_bound(tf, 40, T - 0.01, F7) > 0.01


def test_report_refuses_short_height(consts7):
    sets = [_zs(k, [], T=2.0) for k in range(1, 11)]
    with pytest.raises(TailTooLarge):
        dens.density_report(sets, fejer(0.6), F7, 10, consts7)


def test_main_term_consistent_with_report_fields(consts7):
    sets = [_zs(k, [], T=200.0) for k in range(1, 11)]
    rep = dens.density_report(sets, fejer(0.6), F7, 10, consts7)
    assert rep.main_term == main_term(fejer(0.6))
    assert rep.identity_residual <= 1e-10
    assert rep.explicit_formula_residual == pytest.approx(-(rep.s_x_exact + rep.s_inert + rep.s_split + rep.s_ram))
    row = rep.csv_row()
    assert "rc_s_zeta" in row and "notes" not in row
