"""Fast invariant checks behind ``menusize selftest``.

Each check returns True on success. The set is small enough to run in a few
seconds; the full property suites live in the test directory.
"""

from __future__ import annotations

import math

import numpy as np

from .corpus import boundary_corpus, random_corpus
from .dist import beta12, iid, myerson_price, uniform
from .duality import (certify_gap_coarse, certify_gap_exact, column_balance, instance_constants,
                      t_contour, theorem_lower_constants)
from .model import Menu, MenuEntry, best_response, menu_size
from .plapprox import greedy_pl_approx, random_segments, segment_close_measure
from .revenue import polygon_mass, rectangle, regions, revenue_exact
from .rounding import (additive_guarantee, boundary_prune, is_boundary_structured, nudge_round_additive,
                       prune_size_bound)


def _normalization():
    return all(abs(polygon_mass(rectangle(0, 1, 0, 1), D) - 1.0) <= 1e-12 for D in (iid(uniform()), iid(beta12())))


def _regions_partition():
    D = iid(beta12())
    for M in random_corpus(20, seed=11):
        dec = regions(M)
        if abs(dec.total_area() - 1.0) > 1e-9:
            return False
        for e, poly in dec.regions:
            if best_response(M, poly.centroid()) != e:
                return False
        if revenue_exact(M, D) < -1e-15:
            return False
    return True


def _known_revenues():
    M = Menu([MenuEntry(1.0, 1.0, 0.5)])
    return (abs(revenue_exact(M, iid(uniform())) - 0.4375) <= 1e-12
            and abs(revenue_exact(M, iid(beta12())) - 0.328125) <= 1e-12)


def _myerson():
    p = myerson_price(beta12())
    return abs(p.price - 1 / 3) <= 1e-9 and abs(p.revenue - 4 / 27) <= 1e-9


def _rounding():
    D = iid(uniform())
    for M in random_corpus(20, seed=12):
        r = revenue_exact(M, D)
        for eps in (0.05, 0.1, 0.2):
            if revenue_exact(nudge_round_additive(M, eps), D) < additive_guarantee(r, eps) - 1e-10:
                return False
    for M in boundary_corpus(10, seed=13):
        R = nudge_round_additive(M, 0.2)
        if is_boundary_structured(R) and menu_size(boundary_prune(R).menu) > prune_size_bound(0.2):
            return False
    return True


def _balance():
    xp = instance_constants().x_prime
    return max(abs(column_balance(x)) for x in np.linspace(0.0, xp, 50)) <= 1e-8


def _constants():
    ic = instance_constants()
    lc = theorem_lower_constants(1e-12)
    ident = (lc.delta / 4) * (lc.delta / 2) * (ic.x_prime / 2) * ic.d
    return abs(ic.x_prime - 0.06187679) <= 1e-7 and abs(ic.r - 3.2754) <= 1e-3 and abs(ident - 5e-13) <= 1e-24


def _certificates():
    if abs(certify_gap_exact(Menu([])).certified_gap - 0.0101558987821) > 1e-9:
        return False
    for M in random_corpus(15, seed=14):
        if t_contour(M).num_segments > menu_size(M):
            return False
        ce = certify_gap_exact(M).certified_gap
        if ce < 0 or any(ce < certify_gap_coarse(M, d).certified_gap - 1e-12 for d in (1e-3, 0.02)):
            return False
    return True


def _segment_lemma():
    r = instance_constants().r
    for delta in (1e-6, 1e-8):
        bound = 4 * math.sqrt(r * delta)
        if any(segment_close_measure(s, delta) > bound for s in random_segments(500, seed=15)):
            return False
    return greedy_pl_approx(1e-6).num_segments > 0


CHECKS = {
    "normalization": _normalization,
    "regions_partition": _regions_partition,
    "known_revenues": _known_revenues,
    "myerson": _myerson,
    "rounding_guarantee": _rounding,
    "column_balance": _balance,
    "instance_constants": _constants,
    "certificates": _certificates,
    "segment_lemma": _segment_lemma,
}


def run(verbose: bool = False) -> list[str]:
    """Run every check; return the names of the failing ones."""
    failed = []
    for name, fn in CHECKS.items():
        try:
            ok = bool(fn())
        except Exception as e:  # a crash counts as a failure, reported by name
            ok = False
            if verbose:
                print(f"{name}: raised {type(e).__name__}: {e}")
        if not ok:
            failed.append(name)
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'} {name}")
    return failed
