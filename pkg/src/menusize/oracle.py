"""Reference values for OPT: discretized mechanism LPs, menu search and simple baselines."""

from __future__ import annotations

import csv
import itertools
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

from .dist import Marginal, ProductDistribution, myerson_price
from .lp import DenseLP
from .model import Menu, MenuEntry, menu_size
from .revenue import revenue_exact, revenue_with_mass

IC_TOL = 1e-8
MAX_GRID = 20


@dataclass(frozen=True)
class GridMechanism:
    values: np.ndarray  # (N, 2) types
    q: np.ndarray  # (N, 2) allocation probabilities
    t: np.ndarray  # (N,) payments
    probs: np.ndarray  # (N,) type probabilities

    def revenue(self) -> float:
        return float(self.probs @ self.t)

    def ic_violation(self) -> float:
        v, q, t = self.values, self.q, self.t
        own = (q * v).sum(axis=1) - t
        cross = v @ q.T - t[None, :]  # cross[i, j]: type i reporting j
        return float(max(0.0, (cross - own[:, None]).max(), (-own).max()))

    def to_csv(self, path):
        path = os.fspath(path)
        tmp = path + ".tmp"
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["v1", "v2", "q1", "q2", "t"])
            for (v1, v2), (q1, q2), tt in zip(self.values, self.q, self.t):
                w.writerow([repr(float(v1)), repr(float(v2)), repr(float(q1)), repr(float(q2)), repr(float(tt))])
        os.replace(tmp, path)

    @classmethod
    def from_csv(cls, path, probs=None) -> "GridMechanism":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        v = np.array([[float(r["v1"]), float(r["v2"])] for r in rows]).reshape(-1, 2)
        q = np.array([[float(r["q1"]), float(r["q2"])] for r in rows]).reshape(-1, 2)
        t = np.array([float(r["t"]) for r in rows])
        if probs is None:
            probs = np.full(len(t), 1.0 / max(len(t), 1))
        return cls(v, q, t, np.asarray(probs, dtype=float))


@dataclass(frozen=True)
class LPResult:
    mechanism: GridMechanism
    value: float
    residual: float
    rounds: int
    rows: int
    dual_bound: float  # certified upper bound on the LP optimum


def mechanism_lp(own, cross, probs, neighbours=None, batch: int = 4, max_rounds: int = 500) -> LPResult:
    """Revenue LP over N type classes.

    Variables per class c: q_c (two goods) and t_c. Constraints:
        q_c . own_c - t_c >= q_d . cross_c - t_d   for all d != c   (IC)
        q_c . own_c - t_c >= 0                                      (IR)
        q_c <= 1
    With own = cross = the type itself this is the ordinary discrete
    mechanism LP. IC rows are added lazily: the most violated ones for each
    class, then a dual-simplex re-solve, until none is violated.
    """
    own = np.asarray(own, float)
    cross = np.asarray(cross, float)
    probs = np.asarray(probs, float)
    N = len(probs)
    nv = 3 * N
    # variable layout: q1 (N), q2 (N), t (N)
    c = np.concatenate([np.zeros(2 * N), probs])
    rows, rhs = [], []
    for k in range(N):
        for g in range(2):
            r = np.zeros(nv)
            r[g * N + k] = 1.0
            rows.append(r)
            rhs.append(1.0)
        r = np.zeros(nv)
        r[k], r[N + k], r[2 * N + k] = -own[k, 0], -own[k, 1], 1.0
        rows.append(r)
        rhs.append(0.0)

    def ic_row(k, d):
        r = np.zeros(nv)
        r[k] -= own[k, 0]
        r[N + k] -= own[k, 1]
        r[2 * N + k] += 1.0
        r[d] += cross[k, 0]
        r[N + d] += cross[k, 1]
        r[2 * N + d] -= 1.0
        return r

    if neighbours:
        for k, d in neighbours:
            if k != d:
                rows.append(ic_row(k, d))
                rhs.append(0.0)
    lp = DenseLP(c, np.array(rows), np.array(rhs))
    added = set(neighbours or ())
    rounds = 0
    while True:
        lp.solve()
        rounds += 1
        x = lp.solution()
        q1, q2, t = x[:N], x[N : 2 * N], x[2 * N :]
        own_u = q1 * own[:, 0] + q2 * own[:, 1] - t
        dev = cross[:, 0:1] * q1[None, :] + cross[:, 1:2] * q2[None, :] - t[None, :]
        viol = dev - own_u[:, None]
        np.fill_diagonal(viol, -np.inf)
        if viol.max() <= IC_TOL or rounds >= max_rounds:
            break
        new = []
        order = np.argsort(-viol, axis=1)[:, :batch]
        for k in range(N):
            for d in order[k]:
                if viol[k, d] > IC_TOL and (k, int(d)) not in added:
                    added.add((k, int(d)))
                    new.append(ic_row(k, int(d)))
        if not new:
            break
        lp.add_rows(np.array(new), np.zeros(len(new)))
    x = lp.solution()
    q = np.column_stack([x[:N], x[N : 2 * N]])
    t = x[2 * N :]
    mech = GridMechanism(np.asarray(own), q, t, probs)
    own_u = (q * own).sum(axis=1) - t
    dev = cross @ q.T - t[None, :]
    np.fill_diagonal(dev, -np.inf)
    resid = float(max(0.0, (dev - own_u[:, None]).max(), (-own_u).max(), (q - 1.0).max()))
    # IR caps each payment at q . own <= own_1 + own_2, so the box below loses nothing
    upper = np.concatenate([np.ones(2 * N), own.sum(axis=1)])
    return LPResult(mech, float(probs @ t), resid, rounds, lp.m, lp.dual_bound(upper))


def discrete_lp(values, probs) -> LPResult:
    """Optimal revenue when types take finitely many values."""
    values = np.asarray(values, float).reshape(-1, 2)
    return mechanism_lp(values, values, probs)


def _grid_neighbours(n):
    out = []
    for i in range(n):
        for j in range(n):
            k = i * n + j
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < n and 0 <= b < n:
                    out.append((k, a * n + b))
    return out


def _cell_stats(m: Marginal, n: int):
    """Cell edges, masses and conditional means of a marginal on an n-cell grid."""
    edges = np.linspace(m.lo, m.hi, n + 1)
    F = m.cdf_poly(edges)
    mass = np.diff(F)
    xf = (Polynomial([0.0, 1.0]) * m.density).integ(lbnd=m.lo)
    first = np.diff(xf(edges))
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(mass > 0, first / np.where(mass > 0, mass, 1.0), 0.5 * (edges[:-1] + edges[1:]))
    mean = np.clip(mean, edges[:-1], edges[1:])
    return edges, np.maximum(mass, 0.0), mean


def _check_grid(n_grid, lo=1):
    if not lo <= n_grid <= MAX_GRID:
        raise ValueError(f"n_grid must lie in [{lo}, {MAX_GRID}]")


def opt_grid_lp(D: ProductDistribution, n_grid: int) -> LPResult:
    """LP optimum when every type is moved down to its cell's lower-left corner."""
    _check_grid(n_grid, 4)
    e1, p1, _ = _cell_stats(D.m1, n_grid)
    e2, p2, _ = _cell_stats(D.m2, n_grid)
    V1, V2 = np.meshgrid(e1[:-1], e2[:-1], indexing="ij")
    vals = np.column_stack([V1.ravel(), V2.ravel()])
    probs = np.outer(p1, p2).ravel()
    return mechanism_lp(vals, vals, probs, neighbours=_grid_neighbours(n_grid))


@lru_cache(maxsize=32)  # the n_grid=12 solve takes tens of seconds and is reused across a run
def opt_upper_bound(D: ProductDistribution, n_grid: int) -> float:
    """Certified upper bound on OPT(D) from a cell-averaged relaxation.

    For any IC, IR mechanism let Q_c, T_c be the average allocation and
    payment over cell c. Averaging IC over a type v in c and a report drawn
    from cell d, and using q . v <= q . hi_c inside c, gives
        Q_c . hi_c - T_c >= Q_d . mean_c - T_d,    Q_c . hi_c - T_c >= 0,
    with hi_c the upper-right corner and mean_c the conditional mean. The
    LP over (Q, T) therefore bounds OPT from above.
    """
    _check_grid(n_grid, 1)
    e1, p1, m1 = _cell_stats(D.m1, n_grid)
    e2, p2, m2 = _cell_stats(D.m2, n_grid)
    H1, H2 = np.meshgrid(e1[1:], e2[1:], indexing="ij")
    M1, M2 = np.meshgrid(m1, m2, indexing="ij")
    own = np.column_stack([H1.ravel(), H2.ravel()])
    cross = np.column_stack([M1.ravel(), M2.ravel()])
    probs = np.outer(p1, p2).ravel()
    res = mechanism_lp(own, cross, probs, neighbours=_grid_neighbours(n_grid) if n_grid > 1 else None)
    # weak duality on the rows actually generated bounds the full LP from above
    return res.dual_bound + 1e-12


# -- deterministic brute force ---------------------------------------------------

def _max_payments(values, alloc):
    """Largest IC, IR payments for a fixed deterministic allocation, or None if none exist.

    t_c <= t_d + (q_c - q_d) . v_c and t_c <= q_c . v_c: shortest paths from
    a virtual zero-allocation source, by Bellman-Ford.
    """
    N = len(values)
    dist = np.array([float(alloc[c] @ values[c]) for c in range(N)])
    w = np.array([[float((alloc[c] - alloc[d]) @ values[c]) for c in range(N)] for d in range(N)])  # w[d, c]
    for _ in range(N + 1):
        cand = (dist[:, None] + w).min(axis=0)
        new = np.minimum(dist, cand)
        if np.allclose(new, dist, atol=0, rtol=0):
            return dist
        dist = new
    return None


def brute_force_deterministic(values, probs) -> float:
    """Best revenue over deterministic IC mechanisms (allocations in {0,1}^2); small N only."""
    values = np.asarray(values, float).reshape(-1, 2)
    probs = np.asarray(probs, float)
    N = len(values)
    if N > 6:
        raise ValueError("brute force is limited to 6 types")
    bundles = [np.array(b, float) for b in itertools.product((0.0, 1.0), repeat=2)]
    best = 0.0
    for alloc in itertools.product(bundles, repeat=N):
        t = _max_payments(values, alloc)
        if t is not None:
            best = max(best, float(probs @ t))
    return best


# -- baselines -------------------------------------------------------------------

@dataclass(frozen=True)
class Baselines:
    srev: float
    brev: float
    brev_price: float
    prices: tuple


def bundle_revenue(D: ProductDistribution, p: float) -> float:
    return revenue_exact(Menu([MenuEntry(1.0, 1.0, p)]), D) if p > 0 else 0.0


def baselines(D: ProductDistribution) -> Baselines:
    a, b = myerson_price(D.m1), myerson_price(D.m2)
    lo, hi = D.m1.lo + D.m2.lo, D.m1.hi + D.m2.hi
    grid = np.linspace(lo, hi, 801)
    vals = [bundle_revenue(D, p) for p in grid]
    i = int(np.argmax(vals))
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda p: -bundle_revenue(D, p), bounds=(left, right), method="bounded",
                          options={"xatol": 1e-12})
    p_best, v_best = (float(res.x), float(-res.fun)) if -res.fun >= vals[i] else (float(grid[i]), float(vals[i]))
    return Baselines(a.revenue + b.revenue, v_best, p_best, (a.price, b.price))


def baseline_menus(D: ProductDistribution, C: int):
    """Simple menus of size at most C, used to seed the search."""
    base = baselines(D)
    p1, p2 = base.prices
    out = []
    if C >= 2:
        out.append(Menu([MenuEntry(1.0, 1.0, base.brev_price)]))
        out.append(Menu([MenuEntry(1.0, 0.0, p1)]))
        out.append(Menu([MenuEntry(0.0, 1.0, p2)]))
    if C >= 3:
        out.append(Menu([MenuEntry(1.0, 0.0, p1), MenuEntry(0.0, 1.0, p2)]))
        out.append(Menu([MenuEntry(1.0, 0.0, p1), MenuEntry(1.0, 1.0, base.brev_price)]))
    if C >= 4:
        out.append(Menu([MenuEntry(1.0, 0.0, p1), MenuEntry(0.0, 1.0, p2), MenuEntry(1.0, 1.0, p1 + p2)]))
    return [m for m in out if menu_size(m) <= C and all(e.t > 0 for e in m)]


# -- menu search -------------------------------------------------------------------

STEPS = (0.1, 0.05, 0.02, 0.01, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 3e-7)


def _menu_from(x) -> Menu:
    x = np.asarray(x, float).reshape(-1, 3)
    return Menu(MenuEntry(float(q1), float(q2), float(t)) for q1, q2, t in x)


def _clip(x, tmax):
    x = x.reshape(-1, 3).copy()
    x[:, :2] = np.clip(x[:, :2], 0.0, 1.0)
    x[:, 2] = np.clip(x[:, 2], 0.0, tmax)
    return x.ravel()


def _local_search(x, D, tmax, steps=STEPS, cache=None):
    """Coordinate search with a shrinking step; returns (x, revenue)."""

    def f(z):
        key = z.tobytes()
        if cache is not None and key in cache:
            return cache[key]
        v, mass = revenue_with_mass(_menu_from(z), D)
        if abs(mass - 1.0) > 1e-9:  # broken partition: never accept such a point
            v = -math.inf
        if cache is not None:
            cache[key] = v
        return v

    x = _clip(np.asarray(x, float), tmax)
    best = f(x)
    for h in steps:
        improved = True
        while improved:
            improved = False
            for i in range(x.size):
                for s in (h, -h):
                    z = x.copy()
                    z[i] += s
                    z = _clip(z, tmax)
                    if np.array_equal(z, x):
                        continue
                    v = f(z)
                    if v > best + 1e-15:
                        x, best, improved = z, v, True
                        break
    return x, best


@dataclass(frozen=True)
class SearchResult:
    menu: Menu
    revenue: float


def opt_menu_search(D: ProductDistribution, C: int, restarts: int = 3, seed: int = 0, warm: Menu | None = None,
                    steps=STEPS) -> SearchResult:
    """Best menu with menu_size <= C found by seeded multi-start coordinate search.

    Starting points: the baseline menus that fit, the warm-start menu (for
    instance the result for C - 1), and ``restarts`` random menus. After the
    local search each candidate tries a remove, a merge and an add move.
    """
    if C < 1:
        raise ValueError("C must be at least 1")
    if C == 1:
        return SearchResult(Menu(), 0.0)
    k_max = C - 1
    tmax = D.m1.hi + D.m2.hi
    rng = np.random.default_rng(seed)
    starts = [m.as_array().ravel() for m in baseline_menus(D, C)]
    if warm is not None and 0 < len(warm) <= k_max:
        starts.insert(0, warm.as_array().ravel())
    for _ in range(restarts):
        k = int(rng.integers(1, k_max + 1))
        z = np.column_stack([rng.uniform(0, 1, k), rng.uniform(0, 1, k), rng.uniform(0.1, 0.6, k) * tmax])
        starts.append(z.ravel())
    cache: dict = {}
    best_x, best_v = None, -1.0
    for x0 in starts:
        x, v = _local_search(x0, D, tmax, steps, cache)
        x, v = _moves(x, v, D, tmax, k_max, rng, steps, cache)
        if v > best_v + 1e-15:
            best_x, best_v = x, v
    menu = _menu_from(best_x)
    # drop entries nobody buys: same revenue, smaller menu
    used = Menu(e for e in menu if _has_mass(menu, e, D))
    rev = revenue_exact(used, D)
    if rev >= best_v - 1e-14:
        menu, best_v = used, rev
    return SearchResult(menu, float(best_v))


def _has_mass(menu, e, D):
    from .revenue import entry_masses

    return entry_masses(menu, D).get(e, 0.0) > 0.0


def _moves(x, v, D, tmax, k_max, rng, steps, cache):
    X = x.reshape(-1, 3)
    k = len(X)
    # remove: a cheaper menu that earns as much frees budget for an add
    for i in range(k):
        if k <= 1:
            break
        z = np.delete(X, i, axis=0).ravel()
        vz = revenue_exact(_menu_from(z), D)
        if vz >= v - 1e-15:
            X, v = z.reshape(-1, 3), vz
            k -= 1
            break
    # merge the two closest entries, then re-optimize
    if k >= 2:
        d = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2) + np.eye(k) * 1e9
        i, j = np.unravel_index(int(np.argmin(d)), d.shape)
        Z = np.delete(X, max(i, j), axis=0)
        Z[min(i, j)] = 0.5 * (X[i] + X[j])
        z, vz = _local_search(Z.ravel(), D, tmax, steps, cache)
        if vz > v + 1e-15:
            X, v = z.reshape(-1, 3), vz
            k = len(X)
    # add: split an entry into two nearby ones
    if k < k_max:
        i = int(rng.integers(k))
        new = X[i] + rng.normal(0.0, 0.05, 3)
        z, vz = _local_search(np.vstack([X, new]).ravel(), D, tmax, steps, cache)
        if vz > v + 1e-15:
            X, v = z.reshape(-1, 3), vz
    return X.ravel(), v


@dataclass(frozen=True)
class CurveRow:
    C: int
    revenue: float
    gap_vs_upper_bound: float
    cert_exact: float | None
    menu: Menu


def curve(D: ProductDistribution, cmax: int, seed: int = 0, restarts: int = 2, n_grid: int = 12,
          certify: bool = True, upper: float | None = None):
    """Best found revenue for C = 1..cmax, each search warm-started from the previous one."""
    from .duality import certify_gap_exact

    if upper is None:
        upper = opt_upper_bound(D, n_grid)
    rows = []
    prev = None
    prev_rev = 0.0
    for C in range(1, cmax + 1):
        res = opt_menu_search(D, C, restarts=restarts, seed=seed + C, warm=prev)
        if res.revenue < prev_rev:  # never worse than the smaller budget
            res = SearchResult(prev, prev_rev)
        cert = certify_gap_exact(res.menu).certified_gap if certify else None
        rows.append(CurveRow(C, res.revenue, upper - res.revenue, cert, res.menu))
        prev, prev_rev = res.menu, res.revenue
    return rows


def loglog_slope(xs, ys) -> float:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    ok = (xs > 0) & (ys > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)[0])
