
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from menusize.corpus import random_corpus
from menusize.duality import (certify_gap_coarse, certify_gap_exact, column_balance,
                              deviation_measure, empty_menu_column_slack, exclusion_boundary, g_density,
                              instance_constants, s_curve, t_contour, theorem_lower_constants)
from menusize.model import Menu, MenuEntry, menu_size
from menusize.scurve import C_DIAG, S, PLContour, S_inverse, S_prime, S_second, radius_of_curvature

IC = instance_constants()


def test_s_curve_examples():
    assert s_curve(0.0) == 0.5
    assert s_curve(IC.x_prime) == pytest.approx(C_DIAG - IC.x_prime, abs=1e-7)
    with pytest.raises(ValueError):
        s_curve(0.2)


def test_s_derivatives_match_finite_differences():
    for x in np.linspace(0, IC.x_prime, 7):
        h = 1e-5
        assert S_prime(x) == pytest.approx((S(x + h) - S(x - h)) / (2 * h), rel=1e-7)
        assert S_second(x) == pytest.approx((S(x + h) - 2 * S(x) + S(x - h)) / h**2, rel=1e-4)
        assert S_second(x) < 0
        # the two curved branches are inverses of each other
        assert S_inverse(S(x)) == pytest.approx(x, abs=1e-14)


def test_x_prime_by_root_finding():
    root = optimize.brentq(lambda x: S(x) + x - C_DIAG, 0.0, 0.2, xtol=1e-15)
    assert IC.x_prime == pytest.approx(root, abs=1e-13)
    assert IC.x_prime == pytest.approx(0.06187679, abs=1e-7)


def test_radius_of_curvature():
    xs = np.linspace(0, IC.x_prime, 2001)
    rs = (1 + S_prime(xs) ** 2) ** 1.5 / np.abs(S_second(xs))
    assert IC.r == pytest.approx(rs.max(), rel=1e-12)
    assert IC.r_argmax == 0.0
    assert IC.r == pytest.approx(3.2754, abs=1e-3)
    assert radius_of_curvature(0.0) == pytest.approx(IC.r)


def test_density_floor_audit():
    # d is a floor for -g on a strip around S, checked here on an independent grid
    xs = np.linspace(0, IC.x_prime, 301)
    for w in np.linspace(-IC.delta_max, IC.delta_max, 41):
        assert np.all(g_density(xs, S(xs) + w) < -IC.d)


def test_g_examples_and_sign():
    assert g_density(0.0, 0.5) == pytest.approx(-4.0, abs=1e-14)
    xs = np.linspace(1e-6, IC.x_prime, 50)
    for x in xs:
        ys = np.linspace(1e-9, exclusion_boundary(x), 50)
        assert np.all(g_density(x, ys) < 0)


def test_g_is_transformed_density():
    # g = -(3 f + x . grad f) for f = 4 (1 - x1)(1 - x2)
    rng = np.random.default_rng(0)
    x1 = rng.uniform(0, IC.x_prime, 1000)
    x2 = rng.uniform(0, 1, 1000)
    f = 4 * (1 - x1) * (1 - x2)
    grad = -4 * (1 - x2) * x1 - 4 * (1 - x1) * x2
    assert np.max(np.abs(g_density(x1, x2) + 3 * f + grad)) <= 1e-12


def test_exclusion_boundary():
    assert exclusion_boundary(0.0) == 0.5
    assert exclusion_boundary(C_DIAG / 2) == pytest.approx(C_DIAG / 2, abs=1e-15)


@pytest.mark.parametrize("x1", [0.0, 0.03, IC.x_prime])
def test_column_balance_closed_form(x1):
    assert abs(column_balance(x1)) <= 1e-10
    val, _ = integrate.quad(lambda y: g_density(x1, y), S(x1), 1, epsabs=1e-13)
    assert abs(val) <= 1e-10


def test_column_balance_many_columns():
    assert max(abs(column_balance(x)) for x in np.linspace(0, IC.x_prime, 50)) <= 1e-8


def test_t_contour_examples():
    assert t_contour(Menu([])).segments() == PLContour.constant(1.0, 0.0, IC.x_prime).segments()
    T = t_contour(Menu([MenuEntry(1, 1, 0.5)]))
    for x in np.linspace(0, IC.x_prime, 5):
        assert T(x) == pytest.approx(0.5 - x, abs=1e-14)
    assert t_contour(Menu([MenuEntry(0, 0.5, 0.1)]))(0.03) == 1.0


def test_deviation_measure_examples():
    T = t_contour(Menu([MenuEntry(1, 1, 0.5)]))
    root = optimize.brentq(lambda x: S(x) - (0.5 - x) - 0.01, 0.0, IC.x_prime)
    # |S - T| <= 0.01 exactly on [0, root]
    assert deviation_measure(T, 0.01) == pytest.approx(IC.x_prime - root, abs=1e-12)
    assert deviation_measure(T, 0.01) == pytest.approx(0.0504, abs=1e-4)
    assert deviation_measure(PLContour.constant(1.0, 0.0, IC.x_prime), 0.3) == pytest.approx(IC.x_prime)
    chord = PLContour.from_breakpoints([0.0, IC.x_prime], [S(0.0), S(IC.x_prime)])
    assert deviation_measure(chord, 0.01) == 0.0


def test_coarse_certificate_empty_menu():
    cert = certify_gap_coarse(Menu([]), 1e-3)
    expected = (1e-3 / 4) * (1e-3 / 2) * IC.x_prime * IC.d
    assert cert.certified_gap == pytest.approx(expected, rel=1e-12)
    assert cert.certified_gap == pytest.approx(2.7e-8, rel=0.02)
    with pytest.raises(ValueError):
        certify_gap_coarse(Menu([]), 0.5)


def test_exact_certificate_empty_menu():
    # per-column closed form (8/3) a^3 / (5a - 1)^2 with a = 1 - x1
    f = lambda x: (8 / 3) * (1 - x) ** 3 / (5 * (1 - x) - 1) ** 2
    oracle, _ = integrate.quad(f, 0, IC.x_prime, epsabs=1e-14)
    for x in (0.0, 0.02, IC.x_prime):
        assert empty_menu_column_slack(x) == pytest.approx(f(x), rel=1e-12)
    cert = certify_gap_exact(Menu([]))
    assert cert.audit["z_term"] == 0.0
    assert cert.certified_gap == pytest.approx(oracle, abs=1e-10)
    assert oracle == pytest.approx(0.0101, abs=1e-4)
    with pytest.raises(ValueError):
        certify_gap_exact(Menu([]), quad_n=8)


def test_exact_certificate_against_quadrature():
    # Z-term: -integral over Z of u g; A-term: integral over A of (x2 - u) g, each by scipy dblquad
    from menusize.model import induced_utility
    M = Menu([MenuEntry(1, 1, 0.52), MenuEntry(0.3, 1, 0.49)])
    u = lambda x, y: induced_utility(M, np.array([[x, y]]))[0]
    z, _ = integrate.dblquad(lambda y, x: -u(x, y) * g_density(x, y), 0, IC.x_prime, 0, lambda x: S(x),
                             epsabs=1e-12)
    a, _ = integrate.dblquad(lambda y, x: (y - u(x, y)) * g_density(x, y), 0, IC.x_prime, lambda x: S(x), 1,
                             epsabs=1e-12)
    cert = certify_gap_exact(M)
    assert cert.audit["z_term"] == pytest.approx(z, abs=1e-8)
    assert cert.audit["a_term"] == pytest.approx(a, abs=1e-8)
    assert cert.certified_gap <= z + a + 1e-8


def test_slack_grows_with_pointwise_larger_utility():
    base = Menu([MenuEntry(1, 1, 0.5)])
    more = Menu([MenuEntry(1, 1, 0.5), MenuEntry(0.5, 0.5, 0.2)])
    assert certify_gap_exact(more).audit["z_term"] >= certify_gap_exact(base).audit["z_term"]


def test_theorem_lower_constants():
    c = theorem_lower_constants(1e-12)
    assert c.delta == pytest.approx(6.115e-6, rel=1e-3)
    assert c.C == pytest.approx(1.728, rel=1e-3)
    for eps in (1e-14, 1e-12, 3e-11):
        c = theorem_lower_constants(eps)
        lhs = (c.delta / 4) * (c.delta / 2) * (IC.x_prime / 2) * IC.d
        assert lhs == pytest.approx(eps / 2, rel=1e-12)
        assert theorem_lower_constants(eps / 16).C == pytest.approx(2 * c.C, rel=1e-9)


corpus = random_corpus(30, seed=5)


@pytest.mark.parametrize("M", corpus[:30])
def test_exact_dominates_coarse(M):
    ce = certify_gap_exact(M)
    assert ce.certified_gap >= 0
    for d in (1e-4, 1e-3, 5e-3, 0.02):
        assert ce.certified_gap >= certify_gap_coarse(M, d).certified_gap


@pytest.mark.parametrize("M", corpus[:30])
def test_contour_segment_count(M):
    assert t_contour(M).num_segments <= menu_size(M)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.4, 0.7), st.floats(0.0, 1.0), st.floats(0.35, 0.65))
def test_certificate_nonnegative(p, q, t):
    M = Menu([MenuEntry(1, 1, p), MenuEntry(q, 1, t)])
    assert certify_gap_exact(M).certified_gap >= 0.0
