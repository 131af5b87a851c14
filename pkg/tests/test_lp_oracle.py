import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from menusize.dist import beta12, iid, poly_marginal, uniform
from menusize.lp import DenseLP
from menusize.model import Menu, MenuEntry, best_response, menu_size
from menusize.oracle import (GridMechanism, baselines, brute_force_deterministic, bundle_revenue, curve,
                             discrete_lp, opt_grid_lp, opt_menu_search, opt_upper_bound)
from menusize.revenue import revenue_exact


# -- simplex against HiGHS ------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12), st.integers(1, 15))
def test_simplex_matches_highs(seed, n, m):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    b = rng.uniform(0, 2, m)
    # box rows keep the LP bounded
    A = np.vstack([A, np.eye(n)])
    b = np.concatenate([b, np.ones(n)])
    lp = DenseLP(c, A, b)
    val = lp.solve()
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    assert val == pytest.approx(-ref.fun, abs=1e-8)
    assert lp.max_violation() <= 1e-9
    assert lp.dual_bound(np.ones(n)) >= val - 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_rows_added_after_solve(seed):
    rng = np.random.default_rng(seed)
    n = 6
    c = rng.uniform(0, 1, n)
    A1, b1 = np.eye(n), np.ones(n)
    A2, b2 = rng.normal(size=(5, n)), rng.uniform(-0.5, 1, 5)
    lp = DenseLP(c, A1, b1)
    lp.solve()
    lp.add_rows(A2, b2)
    A, b = np.vstack([A1, A2]), np.concatenate([b1, b2])
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
    if ref.status == 2:  # infeasible after the cut; nothing to compare
        return
    assert lp.solve() == pytest.approx(-ref.fun, abs=1e-8)


def test_degenerate_lp_terminates():
    # many constraints through the same vertex
    n = 4
    A = np.vstack([np.ones((30, n)), np.eye(n)])
    b = np.concatenate([np.ones(30), np.ones(n)])
    lp = DenseLP(np.ones(n), A, b)
    assert lp.solve() == pytest.approx(1.0)


# -- mechanisms -------------------------------------------------------------------

def test_single_good_two_values():
    vals = [[0.5, 0.0], [1.0, 0.0]]
    res = discrete_lp(vals, [0.5, 0.5])
    assert res.value == pytest.approx(0.5, abs=1e-9)
    assert res.mechanism.ic_violation() <= 1e-8


def test_two_by_two_matches_brute_force():
    vals = [[a, b] for a in (0.5, 1.0) for b in (0.5, 1.0)]
    probs = [0.25] * 4
    res = discrete_lp(vals, probs)
    bf = brute_force_deterministic(vals, probs)
    assert res.value == pytest.approx(bf, abs=1e-9)
    assert bf == pytest.approx(1.125)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_lp_dominates_deterministic(seed):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(0, 1, (4, 2))
    probs = rng.dirichlet(np.ones(4))
    res = discrete_lp(vals, probs)
    assert res.value >= brute_force_deterministic(vals, probs) - 1e-9
    assert res.residual <= 1e-8


def test_grid_mechanism_csv_round_trip(tmp_path):
    res = opt_grid_lp(iid(uniform()), 4)
    res.mechanism.to_csv(tmp_path / "m.csv")
    back = GridMechanism.from_csv(tmp_path / "m.csv", res.mechanism.probs)
    assert np.array_equal(back.t, res.mechanism.t)
    assert back.revenue() == res.mechanism.revenue()
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "v1,v2,q1,q2,t"


def test_lp_beats_spot_menus():
    D = iid(beta12())
    n = 6
    res = opt_grid_lp(D, n)
    mech = res.mechanism
    for M in (Menu([MenuEntry(1, 1, 0.55)]), Menu([MenuEntry(1, 0, 1 / 3), MenuEntry(0, 1, 1 / 3)])):
        # the menu restricted to the grid types is an IC, IR grid mechanism
        choice = [best_response(M, v) for v in mech.values]
        q = np.array([[e.q1, e.q2] for e in choice])
        t = np.array([e.t for e in choice])
        spot = GridMechanism(mech.values, q, t, mech.probs)
        assert spot.ic_violation() <= 1e-12
        assert res.value >= spot.revenue() - 1e-9


def test_grid_size_cap():
    with pytest.raises(ValueError):
        opt_grid_lp(iid(uniform()), 3)
    with pytest.raises(ValueError):
        opt_grid_lp(iid(uniform()), 21)


# -- upper bound --------------------------------------------------------------------

def test_upper_bound_trivial_grid():
    assert opt_upper_bound(iid(beta12()), 1) == pytest.approx(2.0, abs=1e-9)


def test_upper_bound_against_highs():
    # the full cell-averaged relaxation written out densely
    D = iid(beta12())
    from menusize.oracle import _cell_stats
    n = 4
    e, p, m = _cell_stats(D.m1, n)
    hi = np.array([[e[i + 1], e[j + 1]] for i in range(n) for j in range(n)])
    mean = np.array([[m[i], m[j]] for i in range(n) for j in range(n)])
    probs = np.outer(p, p).ravel()
    N = n * n
    rows, rhs = [], []
    for c in range(N):
        for d in range(N):
            r = np.zeros(3 * N)
            if c != d:
                # Q_d . mean_c - T_d - Q_c . hi_c + T_c <= 0
                r[2 * d: 2 * d + 2] += mean[c]
                r[2 * N + d] -= 1
                r[2 * c: 2 * c + 2] -= hi[c]
                r[2 * N + c] += 1
                rows.append(r)
                rhs.append(0.0)
        r = np.zeros(3 * N)
        r[2 * c: 2 * c + 2] -= hi[c]
        r[2 * N + c] += 1
        rows.append(r)
        rhs.append(0.0)
    obj = np.concatenate([np.zeros(2 * N), probs])
    bounds = [(0, 1)] * (2 * N) + [(0, None)] * N
    ref = linprog(-obj, A_ub=np.array(rows), b_ub=rhs, bounds=bounds, method="highs")
    assert opt_upper_bound(D, n) == pytest.approx(-ref.fun, abs=1e-8)
    assert opt_upper_bound(D, n) >= -ref.fun


def test_upper_bound_sweep_monotone():
    D = iid(beta12())
    vals = [opt_upper_bound(D, n) for n in (4, 6, 8)]
    assert vals[0] >= vals[1] >= vals[2]


def test_upper_bound_above_best_uniform_menu():
    D = iid(uniform())
    ub = opt_upper_bound(D, 8)
    best = opt_menu_search(D, 3, restarts=1, seed=0)
    assert ub >= best.revenue


# -- baselines and search ----------------------------------------------------------

def test_baselines():
    B = baselines(iid(beta12()))
    assert B.srev == pytest.approx(8 / 27, abs=1e-12)
    U = baselines(iid(uniform()))
    # p (1 - p^2 / 2) on [0, 1] peaks at p = sqrt(2/3)
    p = np.sqrt(2 / 3)
    assert U.brev_price == pytest.approx(p, abs=1e-6)
    assert U.brev == pytest.approx(p * (1 - p * p / 2), abs=1e-12)
    scan = max(bundle_revenue(iid(uniform()), q) for q in np.linspace(0.01, 2, 400))
    assert U.brev >= scan


def test_search_recovers_myerson_single_good():
    # good 2 is almost valueless: uniform on [0, 1e-6]
    low = poly_marginal([1.0], 0.0, 1e-6, normalize=True)
    from menusize.dist import ProductDistribution
    D = ProductDistribution(beta12(), low)
    res = opt_menu_search(D, 2, restarts=2, seed=1)
    assert res.revenue == pytest.approx(4 / 27, abs=1e-6)
    (e,) = res.menu.entries
    assert e.t == pytest.approx(1 / 3, abs=1e-3)


def test_search_beats_baselines_and_is_deterministic():
    D = iid(beta12())
    B = baselines(D)
    r2 = opt_menu_search(D, 2, restarts=1, seed=3)
    assert r2.revenue >= B.brev - 1e-12
    assert menu_size(r2.menu) <= 2
    again = opt_menu_search(D, 2, restarts=1, seed=3)
    assert again.revenue == r2.revenue and again.menu.entries == r2.menu.entries
    assert revenue_exact(r2.menu, D) == pytest.approx(r2.revenue, abs=1e-14)


def test_curve_nondecreasing_small():
    rows = curve(iid(beta12()), 3, seed=1, restarts=1, n_grid=4, certify=False)
    revs = [r.revenue for r in rows]
    assert revs == sorted(revs)
    assert rows[0].revenue == 0.0
    assert all(menu_size(r.menu) <= r.C for r in rows)
