"""Duality-gap certificates for two i.i.d. Beta(1,2) goods.

On R = [0, x'] x [0, 1] the transformed measure is a unit atom at the origin
plus the signed density

    g(x1, x2) = f(x1) f(x2) (1/(1-x1) + 1/(1-x2) - 5),   f(x) = 2(1-x).

Writing a = 1 - x1, g is affine in x2: g = (4 - 16a) + (20a - 4) x2. Below the
curve S (region Z) the atom is spread over the negative density at zero cost;
above S (region A) positive mass moves straight down inside its column. A
finite menu cannot satisfy complementary slackness for this coupling, and the
amount by which it fails is a lower bound on OPT - Rev.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .model import NULL, Menu, menu_size
from .revenue import regions
from .scurve import (
    C_DIAG,
    X_PRIME_REFERENCE,
    PLContour,
    S,
    S_inverse,
    contour_close_measure,
    radius_of_curvature,
    s_line_crossings,
)

# Half-width of the audited strip around S; also the largest usable delta.
STRIP_HALF_WIDTH = 0.02


class AuditError(RuntimeError):
    """A numeric audit of the instance constants failed."""


@dataclass(frozen=True)
class InstanceConstants:
    x_prime: float
    c_diag: float
    r: float
    r_argmax: float
    d: float
    delta_max: float
    audit: dict = field(default_factory=dict, compare=False)


def g_density(x1, x2):
    """Density of the transformed measure on R minus the origin."""
    a = 1.0 - np.asarray(x1, dtype=float)
    b = 1.0 - np.asarray(x2, dtype=float)
    return 4.0 * a + 4.0 * b - 20.0 * a * b


def _g_coeffs(x1):
    """(g0, g1) with g(x1, x2) = g0 + g1 * x2."""
    a = 1.0 - np.asarray(x1, dtype=float)
    return 4.0 - 16.0 * a, 20.0 * a - 4.0


@lru_cache(maxsize=1)
def instance_constants() -> InstanceConstants:
    xp = brentq(lambda x: S(x) + x - C_DIAG, 0.0, 0.5, xtol=1e-16, rtol=4 * np.finfo(float).eps)

    # curvature radius: grid then bounded polish
    xs = np.linspace(0.0, xp, 2001)
    rad = radius_of_curvature(xs)
    i = int(np.argmax(rad))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    res = minimize_scalar(lambda x: -radius_of_curvature(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14})
    r_x, r_val = (float(res.x), float(-res.fun)) if -res.fun > rad[i] else (float(xs[i]), float(rad[i]))

    # On S the density equals -4a, and g grows in x2, so over the strip
    # |x2 - S| <= w its maximum is -4a + (20a - 4) w, largest at a = 1 - x'.
    w = STRIP_HALF_WIDTH
    a_min = 1.0 - xp
    d = 4.0 * a_min - (20.0 * a_min - 4.0) * w - 1e-9
    if d <= 0:
        raise AuditError("no positive density floor on the strip")

    # independent grid audit of the strip and of Z inside R
    gx = np.linspace(0.0, xp, 401)
    off = np.linspace(-w, w, 81)
    X1, OFF = np.meshgrid(gx, off, indexing="ij")
    X2 = S(X1) + OFF
    strip_max = float(g_density(X1, X2).max())
    if not strip_max < -d:
        raise AuditError(f"strip audit failed: max g = {strip_max} not below {-d}")
    if not (np.all(X2 >= 0.0) and np.all(X2 <= 1.0)):
        raise AuditError("strip leaves the unit square")
    zs = np.linspace(0.0, 1.0, 201)[None, :] * S(gx)[:, None]
    zmax = float(g_density(gx[:, None] + 0 * zs, zs)[:, 1:].max())
    if not zmax < 0.0:
        raise AuditError("density is not negative throughout Z")

    audit = {
        "strip_half_width": w,
        "strip_grid_max_g": strip_max,
        "z_grid_max_g": zmax,
        "x_prime_vs_reference": xp - X_PRIME_REFERENCE,
    }
    return InstanceConstants(xp, C_DIAG, r_val, r_x, d, w, audit)


def _check_range(x, lo, hi, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < lo - 1e-12) or np.any(arr > hi + 1e-12) or np.any(~np.isfinite(arr)):
        raise ValueError(f"{name} outside [{lo}, {hi}]")
    return arr


def s_curve(x1):
    xp = instance_constants().x_prime
    x = _check_range(x1, 0.0, xp, "x1")
    out = S(x)
    return float(out) if np.ndim(out) == 0 else out


def exclusion_boundary(x1):
    """Upper edge of the exclusion region: min of S, its mirror image and the diagonal."""
    x = _check_range(x1, 0.0, C_DIAG, "x1")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.minimum(np.minimum(S(x), S_inverse(x)), C_DIAG - x)
    return float(out) if np.ndim(out) == 0 else out


def column_balance(x1) -> float:
    """Integral of g(x1, .) over [S(x1), 1]; zero for every column of R."""
    x1 = float(_check_range(x1, 0.0, instance_constants().x_prime, "x1"))
    g0, g1 = _g_coeffs(x1)
    s = S(x1)
    return float(g0 * (1.0 - s) + g1 * (1.0 - s * s) / 2.0)


def empty_menu_column_slack(x1):
    """Closed form of the A-term column integral for the empty menu: (8/3) a^3 / (5a - 1)^2."""
    a = 1.0 - np.asarray(x1, dtype=float)
    return 8.0 / 3.0 * a**3 / (5.0 * a - 1.0) ** 2


# -- contour of a menu --------------------------------------------------------

def _contour_lines(menu: Menu):
    """Lines x2 = slope * x1 + icpt where a high (q2 > 1/2) entry ties a low one."""
    outcomes = (NULL,) + menu.entries
    low = [e for e in outcomes if e.q2 <= 0.5]
    high = [e for e in outcomes if e.q2 > 0.5]
    if not high:
        return None
    slope = np.array([[-(f.q1 - e.q1) / (f.q2 - e.q2) for e in low] for f in high])
    icpt = np.array([[(f.t - e.t) / (f.q2 - e.q2) for e in low] for f in high])
    return slope, icpt


def _contour_eval(slope, icpt, x):
    """min over high entries of max over low entries, clipped to [0, 1]."""
    x = np.asarray(x, dtype=float)
    vals = slope[None, :, :] * x[:, None, None] + icpt[None, :, :]
    return np.clip(vals.max(axis=2).min(axis=1), 0.0, 1.0)


def t_contour(menu: Menu) -> PLContour:
    """Height above which the chosen entry awards good 2 with probability > 1/2."""
    xp = instance_constants().x_prime
    lines = _contour_lines(menu)
    if lines is None:
        return PLContour.constant(1.0, 0.0, xp)
    slope, icpt = lines
    A, B = slope.ravel(), icpt.ravel()
    # every kink of T is where two lines cross or a line meets 0 or 1
    cands = [0.0, xp]
    with np.errstate(divide="ignore", invalid="ignore"):
        for level in (0.0, 1.0):
            xc = (level - B) / A
            cands.extend(xc[np.isfinite(xc)])
        dA = A[:, None] - A[None, :]
        xc = (B[None, :] - B[:, None]) / dA
    cands.extend(xc[np.isfinite(xc)].ravel())
    cands = np.asarray(cands)
    cands = np.unique(cands[(cands >= 0.0) & (cands <= xp)])
    keep = np.concatenate([[True], np.diff(cands) > 1e-13])
    cands = cands[keep]
    cands[-1] = xp

    mids = 0.5 * (cands[:-1] + cands[1:])
    piece_lines = [_active_line(slope, icpt, m) for m in mids]
    segs = []
    for (xa, xb), (a, b) in zip(zip(cands[:-1], cands[1:]), piece_lines):
        if segs and abs(segs[-1][4] - a) <= 1e-12 * max(1.0, abs(a)) and abs(segs[-1][5] - b) <= 1e-12:
            segs[-1][1] = xb
            continue
        segs.append([xa, xb, 0.0, 0.0, a, b])
    out = [(s[0], s[1], s[4] * s[0] + s[5], s[4] * s[1] + s[5]) for s in segs]
    return PLContour.from_segments(out)


def _active_line(slope, icpt, x):
    """(slope, intercept) of the piece of T in force at x."""
    vals = slope * x + icpt
    j = vals.argmax(axis=1)
    rows = np.arange(slope.shape[0])
    inner = vals[rows, j]
    i = int(inner.argmin())
    v = inner[i]
    if v >= 1.0:
        return 0.0, 1.0
    if v <= 0.0:
        return 0.0, 0.0
    return float(slope[i, j[i]]), float(icpt[i, j[i]])


def deviation_measure(T: PLContour, delta: float) -> float:
    """Measure of {x1 in [0, x'] : |S(x1) - T(x1)| > delta}."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    xp = instance_constants().x_prime
    # columns of [0, x'] the contour does not cover count as far from S
    close = contour_close_measure(T, delta, 0.0, xp)
    return float(max(0.0, xp - close))


# -- certificates -------------------------------------------------------------

@dataclass(frozen=True)
class GapCertificate:
    kind: str
    delta: float | None
    deviation_measure: float | None
    certified_gap: float
    audit: dict = field(default_factory=dict)


def certify_gap_coarse(menu: Menu, delta: float) -> GapCertificate:
    """Gap bound that only counts slack inside delta-strips where T strays from S."""
    ic = instance_constants()
    if not 0.0 < delta <= ic.delta_max:
        raise ValueError(f"delta must lie in (0, {ic.delta_max}]; larger strips leave the audited neighbourhood")
    T = t_contour(menu)
    m = deviation_measure(T, delta)
    gap = (delta / 4.0) * (delta / 2.0) * m * ic.d
    return GapCertificate("coarse", delta, m, gap, {"d": ic.d, "x_prime": ic.x_prime,
                                                    "segments": T.num_segments})


@dataclass(frozen=True)
class LowerConstants:
    epsilon: float
    delta: float
    C: float
    budget_ok: bool


def theorem_lower_constants(epsilon: float) -> LowerConstants:
    """delta = sqrt(8 eps / (x' d)) and C = x' / (8 sqrt(r delta))."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    ic = instance_constants()
    delta = math.sqrt(8.0 * epsilon / (ic.x_prime * ic.d))
    if delta > ic.delta_max:
        raise ValueError(
            f"epsilon={epsilon} gives delta={delta:.4g} > {ic.delta_max}; the bound only applies to small epsilon"
        )
    C = ic.x_prime / (8.0 * math.sqrt(ic.r * delta))
    return LowerConstants(epsilon, delta, C, C >= 1.0)


# exact certificate ----------------------------------------------------------

def _envelope(s, c):
    """Upper envelope of lines s*x + c over [0, 1]: active indices in order."""
    v0 = c.copy()
    best = v0.max()
    cand = np.flatnonzero(v0 >= best - 1e-15)
    k = int(cand[np.argmax(s[cand])])
    active = [k]
    x = 0.0
    while True:
        steeper = np.flatnonzero(s > s[k])
        if steeper.size == 0:
            break
        xc = (c[k] - c[steeper]) / (s[steeper] - s[k])
        xc = np.maximum(xc, x)
        m = xc.min()
        if m >= 1.0:
            break
        tie = steeper[xc <= m + 1e-15]
        k = int(tie[np.argmax(s[tie])])
        active.append(k)
        x = m
    return tuple(active)


def _poly_integral(p0, p1, g0, g1, lo, hi):
    """Integral over [lo, hi] of (p0 + p1 x)(g0 + g1 x)."""
    return (p0 * g0 * (hi - lo) + (p0 * g1 + p1 * g0) * (hi * hi - lo * lo) / 2.0
            + p1 * g1 * (hi**3 - lo**3) / 3.0)


def _column_terms(q1, q2, t, active, x1):
    """Z-term and A-term column integrals for nodes x1 sharing one envelope structure."""
    g0, g1 = _g_coeffs(x1)
    s_val = S(x1)
    ks = list(active)
    # breakpoints between consecutive active lines, linear in x1
    bps = [np.zeros_like(x1)]
    for ka, kb in zip(ks[:-1], ks[1:]):
        bps.append(((q1[ka] - q1[kb]) * x1 - (t[ka] - t[kb])) / (q2[kb] - q2[ka]))
    bps.append(np.ones_like(x1))
    z = np.zeros_like(x1)
    a_term = np.zeros_like(x1)
    for i, k in enumerate(ks):
        lo = np.clip(bps[i], 0.0, 1.0)
        hi = np.clip(bps[i + 1], 0.0, 1.0)
        alpha = q1[k] * x1 - t[k]
        beta = q2[k]
        zlo, zhi = lo, np.minimum(hi, s_val)
        z -= np.where(zhi > zlo, _poly_integral(alpha, beta, g0, g1, zlo, zhi), 0.0)
        alo, ahi = np.maximum(lo, s_val), hi
        a_term += np.where(ahi > alo, _poly_integral(-alpha, 1.0 - beta, g0, g1, alo, ahi), 0.0)
    return z, a_term


@lru_cache(maxsize=None)
def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _structure(q1, q2, t, x1):
    return _envelope(q2, q1 * x1 - t)


def _s_crossing_abscissae(menu: Menu, xp: float):
    outcomes = (NULL,) + menu.entries
    out = []
    for i, e in enumerate(outcomes):
        for f in outcomes[i + 1:]:
            dq2 = f.q2 - e.q2
            if dq2 == 0.0:
                continue
            a = -(f.q1 - e.q1) / dq2
            b = (f.t - e.t) / dq2
            out.extend(s_line_crossings(a, b, 0.0, 0.0, xp))
    return out


def certify_gap_exact(menu: Menu, quad_n: int = 64) -> GapCertificate:
    """Lower bound on OPT - Rev from the full complementary-slackness violation on R.

    Z-term: integral over Z of u |g|. A-term: per column, integral over
    [S, 1] of (x2 - u) g. Columns are integrated exactly (u is piecewise
    linear and g affine in x2); across columns Gauss-Legendre is applied on
    pieces where the column structure is fixed, and the difference between
    quad_n and 2*quad_n nodes is subtracted as the error allowance.
    """
    if quad_n < 64:
        raise ValueError("quad_n must be at least 64")
    ic = instance_constants()
    xp = ic.x_prime
    outcomes = (NULL,) + menu.entries
    q1 = np.array([e.q1 for e in outcomes])
    q2 = np.array([e.q2 for e in outcomes])
    t = np.array([e.t for e in outcomes])

    dec = regions(menu, (0.0, 1.0, 0.0, 1.0))
    cuts = [0.0, xp]
    cuts += [x for x in dec.vertices_x() if 0.0 < x < xp]
    cuts += _s_crossing_abscissae(menu, xp)
    cuts = np.unique(np.asarray(cuts))

    sn, wn = _gauss(quad_n)
    s2, w2 = _gauss(2 * quad_n)
    z_tot, a_tot, err, skipped = [], [], 0.0, 0.0
    stack = [(float(a), float(b), 0) for a, b in zip(cuts[:-1], cuts[1:])][::-1]
    # integrand bound per column: |u| <= 2, |x2 - u| <= 3, |g| <= 12
    col_bound = 36.0
    pieces = 0
    while stack:
        xa, xb, depth = stack.pop()
        if xb - xa <= 1e-13:
            skipped += (xb - xa) * col_bound
            continue
        st = _structure(q1, q2, t, 0.5 * (xa + xb))
        x_2n = xa + (xb - xa) * s2
        ok = _structure(q1, q2, t, x_2n[0]) == st and _structure(q1, q2, t, x_2n[-1]) == st
        if not ok and depth < 40:
            xm = 0.5 * (xa + xb)
            stack.append((xm, xb, depth + 1))
            stack.append((xa, xm, depth + 1))
            continue
        if not ok:
            skipped += (xb - xa) * col_bound
            continue
        pieces += 1
        h = xb - xa
        z1, a1 = _column_terms(q1, q2, t, st, xa + h * sn)
        z2, a2 = _column_terms(q1, q2, t, st, x_2n)
        zi_n, ai_n = h * float(z1 @ wn), h * float(a1 @ wn)
        zi, ai = h * float(z2 @ w2), h * float(a2 @ w2)
        z_tot.append(zi)
        a_tot.append(ai)
        err += abs(zi - zi_n) + abs(ai - ai_n)
    Z = math.fsum(z_tot)
    A = math.fsum(a_tot)
    # roundoff allowance on top of the quadrature difference
    err += skipped + 1e-14 * (pieces + 1)
    gap = max(0.0, Z + A - err)
    audit = {"z_term": Z, "a_term": A, "quad_error": err, "pieces": pieces, "quad_n": quad_n}
    return GapCertificate("exact", None, None, gap, audit)


def contour_segments_ok(menu: Menu) -> bool:
    return t_contour(menu).num_segments <= menu_size(menu)
