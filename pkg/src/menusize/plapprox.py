"""Piecewise-linear approximation of S: chord bounds and adversarial contours.

A line can stay within delta of a curve whose radius of curvature is at most
r only over a stretch of length about 4 sqrt(r delta). So a contour with few
segments must leave the delta-band around S on a large part of [0, x'].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .duality import deviation_measure, instance_constants
from .scurve import PLContour, S, S_prime, close_measure, sagitta


@dataclass(frozen=True)
class ChordBound:
    exact: float
    bound: float


def chord_bound(r: float, delta: float) -> ChordBound:
    """Chord of a radius-r circle whose sagitta is 2 delta: sqrt(16 r delta - 16 delta^2) <= 4 sqrt(r delta)."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if delta > r:
        raise ValueError("delta must not exceed r")
    return ChordBound(math.sqrt(16.0 * r * delta - 16.0 * delta * delta), 4.0 * math.sqrt(r * delta))


@dataclass(frozen=True)
class Segment:
    x0: float
    x1: float
    slope: float
    intercept: float

    def __call__(self, x):
        return self.slope * x + self.intercept


def segment_close_measure(seg: Segment, delta: float) -> float:
    """Measure of x in [seg.x0, seg.x1] with |S(x) - seg(x)| <= delta."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    return close_measure(seg.slope, seg.intercept, seg.x0, seg.x1, delta)


def segment_budget(delta: float) -> float:
    ic = instance_constants()
    return ic.x_prime / (8.0 * math.sqrt(ic.r * delta))


def greedy_pl_approx(delta: float) -> PLContour:
    """Sup-norm delta-approximation of S on [0, x'] built left to right.

    Each piece is the chord over the longest interval whose sagitta is below
    2 delta, lifted by half the sagitta, so it deviates from S by at most delta.
    Pieces need not join continuously.
    """
    ic = instance_constants()
    if not 0.0 < delta <= ic.delta_max:
        raise ValueError(f"delta must lie in (0, {ic.delta_max}]")
    xp = ic.x_prime
    # margin well above the roundoff of evaluating S near 0.5
    target = 2.0 * delta * (1.0 - 1e-6) - 1e-13
    segs = []
    a = 0.0
    while a < xp:
        if sagitta(a, xp) <= target:
            b = xp
        else:
            lo, hi = a, xp
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if sagitta(a, mid) <= target:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-15 * max(1.0, hi):
                    break
            b = lo
            if b <= a:
                raise RuntimeError("greedy approximation made no progress")
        lift = 0.5 * sagitta(a, b)
        segs.append((a, b, S(a) + lift, S(b) + lift))
        a = b
    return PLContour.from_segments(segs)


def sup_deviation(T: PLContour, samples_per_segment: int = 64) -> float:
    """Sampled sup |S - T|, including the exact interior maximum of each piece."""
    worst = 0.0
    for k in range(T.num_segments):
        xa, xb = T.x0[k], T.x1[k]
        a, b = T.slope_intercept(k)
        xs = list(np.linspace(xa, xb, samples_per_segment))
        # S - line is concave; its maximum sits where S' = a
        if a < 0:
            xs.append(min(max((4.0 - math.sqrt(-2.0 / a)) / 5.0, xa), xb))
        xs = np.asarray(xs)
        worst = max(worst, float(np.max(np.abs(S(xs) - (a * xs + b)))))
    return worst


@dataclass(frozen=True)
class PropCheck:
    vacuous: bool
    budget: float
    segments: int
    deviation: float
    holds: bool


def prop_approx_check(T: PLContour, delta: float) -> PropCheck:
    """Does a contour with at most the segment budget stray from S on half of [0, x']?"""
    xp = instance_constants().x_prime
    budget = segment_budget(delta)
    dev = deviation_measure(T, delta)
    if budget < 1.0:
        return PropCheck(True, budget, T.num_segments, dev, True)
    within = T.num_segments <= math.floor(budget)
    return PropCheck(False, budget, T.num_segments, dev, (not within) or dev >= xp / 2.0)


# -- adversaries -------------------------------------------------------------

def _finish(segs, xp):
    """Stretch the last segment so the contour covers [0, x']."""
    xa, xb, a, b = segs[-1]
    segs[-1] = (xa, xp, a, b)
    return PLContour.from_segments([(x0, x1, a * x0 + b, a * x1 + b) for x0, x1, a, b in segs])


def adversary_greedy_truncated(delta: float, k: int, extend: bool = True) -> PLContour:
    """First pieces of the greedy approximation, then the rest covered cheaply.

    extend=True carries the k-th greedy line to x'; otherwise k-1 greedy
    pieces are kept and a constant at S's value finishes the contour.
    """
    xp = instance_constants().x_prime
    G = greedy_pl_approx(delta)
    segs = []
    keep = k if extend else k - 1
    for j in range(min(keep, G.num_segments)):
        a, b = G.slope_intercept(j)
        segs.append((G.x0[j], G.x1[j], a, b))
    if not extend or not segs:
        start = segs[-1][1] if segs else 0.0
        if start < xp:
            segs.append((start, xp, 0.0, float(S(start))))
    return _finish(segs, xp)


def adversary_osculating(delta: float, k: int) -> PLContour:
    """k lines tangent to S and lowered by delta, laid end to end.

    A lowered tangent keeps S within delta over the longest possible stretch,
    about 4 sqrt(rho delta), so these tiles are the near-extremal case.
    """
    xp = instance_constants().x_prime

    def gap(c, x):  # tangent at c minus S, at x (nonnegative since S is concave)
        return S(c) + S_prime(c) * (x - c) - S(x)

    segs = []
    left = 0.0
    for _ in range(k):
        if left >= xp:
            break
        # tangent point c whose 2-delta gap window starts at `left`
        f = lambda c: gap(c, left) - 2.0 * delta
        hi = left + 1e-3
        while f(hi) < 0 and hi < 0.7:
            hi = left + 2.0 * (hi - left)
        c = brentq(f, left, min(hi, 0.7), xtol=1e-15) if f(min(hi, 0.7)) > 0 else left
        g = lambda x: gap(c, x) - 2.0 * delta
        hi = c + 1e-3
        while g(hi) < 0 and hi < 0.7:
            hi = c + 2.0 * (hi - c)
        right = brentq(g, c, min(hi, 0.7), xtol=1e-15) if g(min(hi, 0.7)) > 0 else xp
        right = min(right, xp)
        slope = float(S_prime(c))
        segs.append((left, right, slope, float(S(c) - slope * c - delta)))
        left = right
    # _finish stretches the last tile to x'
    return _finish(segs, xp)


def adversary_random(delta: float, k: int, seed: int) -> PLContour:
    """k pieces at random breakpoints, each a perturbed tangent of S."""
    xp = instance_constants().x_prime
    rng = np.random.default_rng(seed)
    cuts = np.sort(rng.uniform(0.0, xp, size=k - 1)) if k > 1 else np.array([])
    xs = np.concatenate([[0.0], cuts, [xp]])
    segs = []
    for xa, xb in zip(xs[:-1], xs[1:]):
        c = rng.uniform(xa, xb) if xb > xa else xa
        slope = float(S_prime(c)) * (1.0 + rng.normal(0.0, 0.05))
        icpt = float(S(c) - slope * c + rng.normal(0.0, delta))
        segs.append((float(xa), float(xb), slope, icpt))
    return _finish(segs, xp)


def adversaries(delta: float, seed: int = 0, n_random: int = 20):
    """All adversary contours within the segment budget for ``delta``."""
    B = int(math.floor(segment_budget(delta)))
    if B < 1:
        return []
    out = [
        ("greedy_extend", adversary_greedy_truncated(delta, B, extend=True)),
        ("greedy_const", adversary_greedy_truncated(delta, B, extend=False)),
        ("osculating", adversary_osculating(delta, B)),
    ]
    rng = np.random.default_rng(seed)
    for i in range(n_random):
        k = int(rng.integers(1, B + 1))
        out.append((f"random{i}", adversary_random(delta, k, int(rng.integers(2**63)))))
    return out


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def random_segments(n: int, seed: int):
    """Random short segments near S, the population for the per-segment lemma."""
    xp = instance_constants().x_prime
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        xa, xb = np.sort(rng.uniform(0.0, xp, 2))
        c = rng.uniform(xa, xb)
        slope = float(S_prime(c)) + rng.normal(0.0, 0.01)
        icpt = float(S(c) - slope * c + rng.normal(0.0, 1e-6))
        out.append(Segment(float(xa), float(xb), slope, icpt))
    return out
