"""The separating curve S(x) = (2 - 3x) / (4 - 5x) and piecewise-linear contours.

S is a rational function, so ``S(x) - (a*x + b) = c`` reduces to a quadratic
and the set of abscissae where a line stays within ``delta`` of S can be
found in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Intercept of the diagonal piece of the exclusion boundary, and a reference
# value for the abscissa where it meets S (the right edge of region A).
C_DIAG = 0.5534938
X_PRIME_REFERENCE = 0.06187679


def S(x):
    return (2.0 - 3.0 * x) / (4.0 - 5.0 * x)


def S_prime(x):
    return -2.0 / (4.0 - 5.0 * x) ** 2


def S_second(x):
    return -20.0 / (4.0 - 5.0 * x) ** 3


def S_inverse(y):
    """Inverse branch: x with S(x) = y, i.e. (2 - 4y) / (3 - 5y)."""
    return (2.0 - 4.0 * y) / (3.0 - 5.0 * y)


def radius_of_curvature(x):
    return (1.0 + S_prime(x) ** 2) ** 1.5 / np.abs(S_second(x))


@dataclass(frozen=True)
class PLContour:
    """Piecewise-linear function given as a list of segments.

    Segment k covers [x0[k], x1[k]] and runs linearly from y0[k] to y1[k].
    Segments are sorted, abut, and may jump at shared endpoints.
    """

    x0: tuple
    x1: tuple
    y0: tuple
    y1: tuple

    @classmethod
    def from_segments(cls, segs) -> "PLContour":
        segs = sorted(segs)
        return cls(*(tuple(float(s[i]) for s in segs) for i in range(4)))

    @classmethod
    def from_breakpoints(cls, xs, ys) -> "PLContour":
        xs, ys = list(xs), list(ys)
        return cls(tuple(xs[:-1]), tuple(xs[1:]), tuple(ys[:-1]), tuple(ys[1:]))

    @classmethod
    def constant(cls, value: float, lo: float, hi: float) -> "PLContour":
        return cls((lo,), (hi,), (value,), (value,))

    @property
    def num_segments(self) -> int:
        return len(self.x0)

    def segments(self):
        return list(zip(self.x0, self.x1, self.y0, self.y1))

    def slope_intercept(self, k: int) -> tuple[float, float]:
        return line_through(self.x0[k], self.x1[k], self.y0[k], self.y1[k])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        x0 = np.asarray(self.x0)
        k = np.clip(np.searchsorted(x0, x, side="right") - 1, 0, len(x0) - 1)
        xa, xb = x0[k], np.asarray(self.x1)[k]
        ya, yb = np.asarray(self.y0)[k], np.asarray(self.y1)[k]
        w = np.where(xb > xa, (x - xa) / np.where(xb > xa, xb - xa, 1.0), 0.0)
        return ya + w * (yb - ya)

    def merged(self, tol: float = 1e-12) -> "PLContour":
        """Fuse neighbouring segments that lie on one line and meet continuously."""
        segs = self.segments()
        if not segs:
            return self
        out = [list(segs[0])]
        for xa, xb, ya, yb in segs[1:]:
            px0, px1, py0, py1 = out[-1]
            if xb - xa <= tol:
                continue
            if abs(ya - py1) <= tol:
                a1, b1 = line_through(px0, px1, py0, py1)
                a2, b2 = line_through(xa, xb, ya, yb)
                # same line: slopes agree and the extension reaches the far end
                if abs(a1 - a2) <= 1e-9 * max(1.0, abs(a1)) and abs(a1 * xb + b1 - yb) <= 1e-10:
                    out[-1] = [px0, xb, py0, yb]
                    continue
            out.append([xa, xb, ya, yb])
        return PLContour.from_segments(out)


def line_through(xa, xb, ya, yb) -> tuple[float, float]:
    if xb == xa:
        return 0.0, ya
    a = (yb - ya) / (xb - xa)
    return a, ya - a * xa


def _quadratic_roots(A: float, B: float, C: float) -> list[float]:
    if A == 0.0:
        return [] if B == 0.0 else [-C / B]
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        if disc > -1e-14 * max(B * B, 1e-300):
            disc = 0.0
        else:
            return []
    sq = math.sqrt(disc)
    q = -0.5 * (B + math.copysign(sq, B))
    roots = [q / A]
    if q != 0.0:
        roots.append(C / q)
    return roots


def s_line_crossings(a: float, b: float, c: float, lo: float, hi: float) -> list[float]:
    """Abscissae in (lo, hi) with S(x) - (a*x + b) = c.

    Multiplying through by (4 - 5x) > 0 gives
    -5a x^2 + (4a - 5(b + c) + 3) x + (4(b + c) - 2) = 0.
    """
    bc = b + c
    roots = _quadratic_roots(-5.0 * a, 4.0 * a - 5.0 * bc + 3.0, 4.0 * bc - 2.0)
    out = []
    for r in roots:
        # far-away roots of a near-degenerate quadratic are irrelevant, and S has a pole at 0.8
        if not lo - 1.0 < r < min(hi + 1.0, 0.75):
            continue
        # two Newton steps on the original rational equation tidy up cancellation
        for _ in range(2):
            h = S(r) - a * r - b - c
            dh = S_prime(r) - a
            if dh != 0.0:
                r = r - h / dh
        if lo < r < hi:
            out.append(r)
    return sorted(out)


def close_measure(a: float, b: float, lo: float, hi: float, delta: float) -> float:
    """Lebesgue measure of {x in [lo, hi] : |S(x) - (a x + b)| <= delta}."""
    if hi <= lo:
        return 0.0
    cuts = [lo, hi]
    cuts += s_line_crossings(a, b, delta, lo, hi)
    cuts += s_line_crossings(a, b, -delta, lo, hi)
    cuts = sorted(cuts)
    total = 0.0
    for xa, xb in zip(cuts[:-1], cuts[1:]):
        if xb <= xa:
            continue
        xm = 0.5 * (xa + xb)
        if abs(S(xm) - (a * xm + b)) <= delta:
            total += xb - xa
    return total


def contour_close_measure(T: PLContour, delta: float, lo: float, hi: float) -> float:
    total = 0.0
    for k in range(T.num_segments):
        xa, xb = max(T.x0[k], lo), min(T.x1[k], hi)
        if xb <= xa:
            continue
        a, b = T.slope_intercept(k)
        total += close_measure(a, b, xa, xb, delta)
    return total


def sagitta(xa: float, xb: float) -> float:
    """Largest vertical gap between S and its chord on [xa, xb] (S concave)."""
    if xb <= xa:
        return 0.0
    m = (S(xb) - S(xa)) / (xb - xa)
    # S'(x) = m  <=>  (4 - 5x)^2 = -2/m
    xs = (4.0 - math.sqrt(-2.0 / m)) / 5.0 if m < 0 else xa
    xs = min(max(xs, xa), xb)
    return float(S(xs) - (S(xa) + m * (xs - xa)))
