"""Exact expected revenue of a menu under a polynomial product density.

The buyer's utility is the upper envelope of finitely many planes, so each
outcome is chosen on a convex polygon. We cut those polygons out of the
support rectangle by half-plane clipping and integrate the density over each
one exactly with Green's theorem (the integrand is polynomial along every
edge, so a Gauss-Legendre rule of matching order is exact).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dist import ProductDistribution, sample_array
from .model import NULL, Menu, payments

CLIP_TOL = 1e-12
SNAP_TOL = 1e-12


@dataclass(frozen=True)
class Polygon:
    vertices: tuple  # counterclockwise ((x, y), ...)

    def area(self) -> float:
        return polygon_area(self.vertices)

    def centroid(self) -> tuple[float, float]:
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = cr.sum() / 2.0
        if abs(a) < 1e-300:
            return float(x.mean()), float(y.mean())
        return float(((x + xn) * cr).sum() / (6 * a)), float(((y + yn) * cr).sum() / (6 * a))

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class RegionDecomposition:
    support: tuple  # (lo1, hi1, lo2, hi2)
    regions: tuple  # ((MenuEntry, Polygon), ...); null region uses model.NULL

    def total_area(self) -> float:
        return sum(p.area() for _, p in self.regions)

    def vertices_x(self) -> np.ndarray:
        xs = [x for _, p in self.regions for x, _ in p.vertices]
        return np.unique(np.asarray(xs, dtype=float))


def polygon_area(verts) -> float:
    if len(verts) < 3:
        return 0.0
    s = 0.0
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def clip_halfplane(verts, a: float, b: float, c: float):
    """Keep the part of a convex polygon where a*x + b*y <= c (Sutherland-Hodgman)."""
    if not verts:
        return []
    # tolerance is a distance to the line, so nearly parallel entries stay well posed
    scale = math.hypot(a, b)
    out = []
    n = len(verts)
    vals = [a * x + b * y - c for x, y in verts]
    for i in range(n):
        p, q = verts[i], verts[(i + 1) % n]
        fp, fq = vals[i], vals[(i + 1) % n]
        p_in = fp <= CLIP_TOL * scale
        q_in = fq <= CLIP_TOL * scale
        if p_in:
            out.append(p)
        if p_in != q_in and abs(fp) > CLIP_TOL * scale and abs(fq) > CLIP_TOL * scale:
            s = fp / (fp - fq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    return _dedupe(out)


def _dedupe(verts):
    out = []
    for v in verts:
        if out and abs(v[0] - out[-1][0]) <= SNAP_TOL and abs(v[1] - out[-1][1]) <= SNAP_TOL:
            continue
        out.append(v)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= SNAP_TOL and abs(out[0][1] - out[-1][1]) <= SNAP_TOL:
        out.pop()
    return out


def rectangle(lo1, hi1, lo2, hi2):
    return [(lo1, lo2), (hi1, lo2), (hi1, hi2), (lo1, hi2)]


def regions(menu: Menu, support=(0.0, 1.0, 0.0, 1.0)) -> RegionDecomposition:
    """Best-response regions of ``menu`` (null included) as convex polygons."""
    lo1, hi1, lo2, hi2 = support
    rect = rectangle(lo1, hi1, lo2, hi2)
    area_floor = 1e-15 * (hi1 - lo1) * (hi2 - lo2)
    outcomes = (NULL,) + menu.entries
    # clip in sorted order so each polygon is independent of entry order
    canonical = sorted(outcomes)
    out = []
    for e in outcomes:
        poly = list(rect)
        for f in canonical:
            if f == e:
                continue
            # region of e lies where u_f - u_e <= 0
            a, b, c = f.q1 - e.q1, f.q2 - e.q2, f.t - e.t
            if a == 0.0 and b == 0.0:
                if c < 0.0:  # f has the same bundle at a lower price
                    poly = []
                    break
                continue
            poly = clip_halfplane(poly, a, b, c)
            if len(poly) < 3:
                break
        if len(poly) >= 3 and polygon_area(poly) > area_floor:
            out.append((e, Polygon(tuple(poly))))
    return RegionDecomposition(tuple(support), tuple(out))


# -- exact polynomial integration -------------------------------------------

@lru_cache(maxsize=None)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _edge_arrays(polys):
    x0, y0, x1, y1, owner = [], [], [], [], []
    for k, verts in enumerate(polys):
        n = len(verts)
        if n < 3:
            continue
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            x0.append(a[0])
            y0.append(a[1])
            x1.append(b[0])
            y1.append(b[1])
            owner.append(k)
    return (np.array(x0), np.array(y0), np.array(x1), np.array(y1), np.array(owner, dtype=np.int64))


def polygons_mass(polys, dist: ProductDistribution) -> np.ndarray:
    """Exact density mass of each polygon (vertices CCW) in one vectorized pass.

    Green's theorem: integral over P of f1(x) f2(y) = contour integral of
    F1(x) f2(y) dy, with F1 the CDF polynomial of the first marginal.
    """
    polys = [p.vertices if isinstance(p, Polygon) else p for p in polys]
    out = np.zeros(len(polys))
    if not polys:
        return out
    x0, y0, x1, y1, owner = _edge_arrays(polys)
    if x0.size == 0:
        return out
    F1 = dist.m1.cdf_poly
    f2 = dist.m2.density
    deg = (dist.m1.degree + 1) + dist.m2.degree
    s, w = _gauss01(deg // 2 + 1)
    X = x0[:, None] + (x1 - x0)[:, None] * s[None, :]
    Y = y0[:, None] + (y1 - y0)[:, None] * s[None, :]
    vals = (F1(X) * f2(Y)) @ w * (y1 - y0)
    np.add.at(out, owner, vals)
    return out


def polygon_mass(poly, dist: ProductDistribution) -> float:
    verts = poly.vertices if isinstance(poly, Polygon) else poly
    if len(verts) < 3 or abs(polygon_area(verts)) <= 0.0:
        return 0.0
    return float(polygons_mass([verts], dist)[0])


def region_masses(dec: RegionDecomposition, dist: ProductDistribution) -> np.ndarray:
    return polygons_mass([p.vertices for _, p in dec.regions], dist)


def revenue_with_mass(menu: Menu, dist: ProductDistribution, dec: RegionDecomposition | None = None):
    """(revenue, total probability mass of all regions); the mass should be 1."""
    if len(menu) == 0:
        return 0.0, 1.0
    if dec is None:
        dec = regions(menu, dist.support)
    masses = region_masses(dec, dist)
    prices = np.array([e.t for e, _ in dec.regions])
    # fixed summation order (sorted by entry) keeps the result permutation-invariant
    order = sorted(range(len(prices)), key=lambda i: dec.regions[i][0])
    return float(math.fsum(prices[i] * masses[i] for i in order)), float(math.fsum(masses))


def revenue_exact(menu: Menu, dist: ProductDistribution, dec: RegionDecomposition | None = None) -> float:
    return revenue_with_mass(menu, dist, dec)[0]


@dataclass(frozen=True)
class MCResult:
    estimate: float
    stderr: float
    n: int


def revenue_mc(menu: Menu, dist: ProductDistribution, n: int, seed: int, chunk: int = 250_000) -> MCResult:
    """Monte Carlo revenue: mean payment over ``n`` sampled types and its standard error."""
    if n < 2:
        raise ValueError("need at least two samples")
    types = sample_array(dist, n, seed)
    total = 0.0
    total_sq = 0.0
    for i in range(0, n, chunk):
        pay = payments(menu, types[i : i + chunk])
        total += float(pay.sum())
        total_sq += float((pay * pay).sum())
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return MCResult(mean, math.sqrt(var / n), n)


def entry_masses(menu: Menu, dist: ProductDistribution) -> dict:
    """Probability that each outcome (null included) is chosen."""
    dec = regions(menu, dist.support)
    masses = region_masses(dec, dist)
    return {e: float(m) for (e, _), m in zip(dec.regions, masses)}
