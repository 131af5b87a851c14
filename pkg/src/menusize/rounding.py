"""Menu compression by price discounting and rounding.

Rounding every price down to a multiple of eps^2 leaves few distinct prices,
but on its own it can push buyers onto much cheaper entries. Discounting all
prices by (1 - eps) first makes expensive entries relatively more attractive,
so a buyer only drifts to an entry at most eps cheaper than their old one and
each type still pays at least (1 - eps) t - eps.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .model import Menu, MenuEntry, menu_size

GRID_FUDGE = 1e-9


def _check_eps(epsilon: float):
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")


def floor_to_grid(x: float, step: float) -> float:
    """Largest multiple of ``step`` not above ``x`` (up to float noise).

    When 1/step is an integer N the result is computed as k/N, so that e.g.
    0.3 on the 0.1-grid comes back as 0.3 rather than 3 * 0.1.
    """
    inv = 1.0 / step
    N = round(inv)
    if N > 0 and abs(inv - N) <= 1e-9 * N:
        return math.floor(x * N + GRID_FUDGE) / N
    return math.floor(x / step + GRID_FUDGE) * step


def nudge_round_additive(menu: Menu, epsilon: float, discount: bool = True) -> Menu:
    """Each price t becomes (1 - eps) * (t rounded down to a multiple of eps^2).

    discount=False skips the (1 - eps) factor; kept only to exhibit why it is needed.
    """
    _check_eps(epsilon)
    step = epsilon * epsilon
    scale = (1.0 - epsilon) if discount else 1.0
    out = []
    for e in menu.entries:
        out.append(MenuEntry(e.q1, e.q2, scale * floor_to_grid(e.t, step)))
    return Menu(out)


def additive_guarantee(rev_before: float, epsilon: float) -> float:
    return (1.0 - epsilon) * rev_before - epsilon


def is_boundary_structured(menu: Menu) -> bool:
    return all(e.q1 in (0.0, 1.0) or e.q2 in (0.0, 1.0) for e in menu.entries)


@dataclass(frozen=True)
class PruneResult:
    menu: Menu
    warning: str | None = None


def boundary_prune(menu: Menu) -> PruneResult:
    """Drop entries beaten in both allocations by another entry at the same price.

    On menus where every entry has an allocation at 0 or 1, at most one entry
    per price survives on each of the four sides of the unit square. Dropped
    entries are chosen only on a null set, so revenue is unchanged.
    """
    if not is_boundary_structured(menu):
        return PruneResult(menu, "entry with both allocations strictly inside (0, 1); menu left unpruned")
    by_price: dict[float, list[MenuEntry]] = {}
    for e in menu.entries:
        by_price.setdefault(e.t, []).append(e)
    keep = []
    for e in menu.entries:
        dominated = any(
            f is not e and f.q1 >= e.q1 and f.q2 >= e.q2 and (f.q1, f.q2) != (e.q1, e.q2)
            for f in by_price[e.t]
        )
        if not dominated:
            keep.append(e)
    return PruneResult(Menu(keep))


def prune_size_bound(epsilon: float) -> int:
    """4 (floor(1/eps^2) + 1) + 1: four sides per price level, plus null."""
    return 4 * (math.floor(1.0 / (epsilon * epsilon) + GRID_FUDGE) + 1) + 1


def nudge_round_full(menu: Menu, epsilon: float) -> Menu:
    """Allocations floored to multiples of eps, then additive price rounding."""
    _check_eps(epsilon)
    snapped = Menu(MenuEntry(floor_to_grid(e.q1, epsilon), floor_to_grid(e.q2, epsilon), e.t) for e in menu.entries)
    return nudge_round_additive(snapped, epsilon)


def full_size_bound(epsilon: float) -> int:
    k = math.floor(1.0 / epsilon + GRID_FUDGE) + 1
    return k * k * (math.floor(1.0 / (epsilon * epsilon) + GRID_FUDGE) + 1) + 1


# -- multiplicative variant ----------------------------------------------------

def multiplicative_grid(epsilon: float, H: float) -> list[float]:
    """Price grid {(1 + eps^2)^k : k >= -1} intersected with [1 - eps^2, H]."""
    _check_eps(epsilon)
    if not H > 1.0:
        raise ValueError("H must exceed 1")
    base = 1.0 + epsilon * epsilon
    K = math.floor(math.log(H) / math.log(base) + GRID_FUDGE)
    grid = [base**k for k in range(-1, K + 1)]
    return [p for p in grid if p <= H * (1.0 + 1e-12)]


def multiplicative_grid_bound(epsilon: float, H: float) -> int:
    return math.ceil(math.log(H) / math.log(1.0 + epsilon * epsilon)) + 2


def nudge_round_multiplicative(menu: Menu, epsilon: float, H: float) -> Menu:
    """Prices rounded down to the geometric grid (or to 0 below it), then times (1 - eps)."""
    grid = multiplicative_grid(epsilon, H)
    out = []
    for e in menu.entries:
        if e.t > H * (1.0 + 1e-12):
            raise ValueError(f"price {e.t} above H={H}")
        p = 0.0
        # largest grid point not above t; the grid is short so a scan is fine
        for g in grid:
            if g <= e.t * (1.0 + 1e-12):
                p = g
            else:
                break
        out.append(MenuEntry(e.q1, e.q2, (1.0 - epsilon) * p))
    return Menu(out)


# -- why the discount matters ----------------------------------------------------

@dataclass(frozen=True)
class DiscountWitness:
    menu: list
    dist: str
    epsilon: float
    rev_original: float
    rev_rounded_only: float
    rev_nudged: float

    @property
    def loss_without_discount(self) -> float:
        return self.rev_original - self.rev_rounded_only


def witness_candidates(epsilon: float):
    """Two-entry menus built to make rounding alone drop a large payment.

    An expensive entry sits on the price grid and a slightly smaller bundle
    is priced just under a grid point, so rounding cuts almost eps^2 from the
    cheap entry only and high types switch to it.
    """
    step = epsilon * epsilon
    out = []
    for hi_k in range(2, math.floor(1.0 / step) + 1):
        t_e = hi_k * step
        for gap_k in range(1, hi_k):
            # cheap price just below a grid point, so rounding costs nearly a full step
            t_f = (hi_k - gap_k) * step - 1e-6
            if t_f <= 0:
                continue
            r_f = floor_to_grid(t_f, step)
            # high types pick e before rounding and f after it
            dq = t_e - r_f
            if not 0.0 < dq < 1.0:
                continue
            out.append(Menu([MenuEntry(1.0, 0.0, t_e), MenuEntry(1.0 - dq, 0.0, t_f)]))
    return out


def find_discount_witness(dists, epsilons=(0.2, 0.1), corpus=()):
    """First (menu, distribution) pair where rounding without the discount loses more than eps.

    ``dists`` is a list of spec strings. Corpus menus are tried before the
    constructed candidates.
    """
    from .dist import parse_dist
    from .revenue import revenue_exact

    for eps in epsilons:
        for spec in dists:
            D = parse_dist(spec)
            for M in list(corpus) + witness_candidates(eps):
                r0 = revenue_exact(M, D)
                r1 = revenue_exact(nudge_round_additive(M, eps, discount=False), D)
                if r0 - r1 > eps:
                    r2 = revenue_exact(nudge_round_additive(M, eps), D)
                    return DiscountWitness([[e.q1, e.q2, e.t] for e in M.entries], spec, eps, r0, r1, r2)
    return None


def save_witness(w: DiscountWitness, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = asdict(w)
    data["loss_without_discount"] = w.loss_without_discount
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)
    return path


def load_witness(path) -> DiscountWitness:
    data = json.loads(Path(path).read_text())
    data.pop("loss_without_discount", None)
    return DiscountWitness(**data)


@dataclass(frozen=True)
class RoundReport:
    epsilon: float
    size_before: int
    size_after: int
    rev_before: float
    rev_after: float
    slack: float  # rev_after - ((1 - eps) rev_before - eps)


def round_report(menu: Menu, rounded: Menu, epsilon: float, dist) -> RoundReport:
    from .revenue import revenue_exact

    r0 = revenue_exact(menu, dist)
    r1 = revenue_exact(rounded, dist)
    return RoundReport(epsilon, menu_size(menu), menu_size(rounded), r0, r1, r1 - additive_guarantee(r0, epsilon))
