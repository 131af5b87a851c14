"""Menus, buyer types and the buyer's best response.

A menu is a finite list of (q1, q2, t) outcomes; the null outcome (0, 0, 0)
is always available to the buyer and is never listed explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Utilities closer than this are treated as ties.
TIE_TOL = 1e-12


@dataclass(frozen=True, order=True)
class MenuEntry:
    q1: float
    q2: float
    t: float

    def __post_init__(self):
        if not (0.0 <= self.q1 <= 1.0 and 0.0 <= self.q2 <= 1.0):
            raise ValueError(f"allocation probabilities must lie in [0,1]: {self}")
        if not self.t >= 0.0:
            raise ValueError(f"price must be nonnegative: {self}")

    def utility(self, v1: float, v2: float) -> float:
        return self.q1 * v1 + self.q2 * v2 - self.t

    @property
    def is_null(self) -> bool:
        return self.q1 == 0.0 and self.q2 == 0.0 and self.t == 0.0


NULL = MenuEntry(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BuyerType:
    v1: float
    v2: float

    def __iter__(self):
        yield self.v1
        yield self.v2


class Menu:
    """Canonical menu: exact duplicates and explicit null entries removed.

    Order of first occurrence is preserved since it drives the last tie-break.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[MenuEntry | Sequence[float]] = ()):
        seen = set()
        out = []
        for e in entries:
            if not isinstance(e, MenuEntry):
                e = MenuEntry(*map(float, e))
            if e.is_null or e in seen:
                continue
            seen.add(e)
            out.append(e)
        self.entries: tuple[MenuEntry, ...] = tuple(out)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __eq__(self, other):
        return isinstance(other, Menu) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"Menu({list(self.entries)!r})"

    def with_entry(self, e: MenuEntry) -> "Menu":
        return Menu(self.entries + (e,))

    def as_array(self) -> np.ndarray:
        """(k, 3) array of the listed entries (null excluded)."""
        if not self.entries:
            return np.zeros((0, 3))
        return np.array([(e.q1, e.q2, e.t) for e in self.entries], dtype=float)

    def max_price(self) -> float:
        return max((e.t for e in self.entries), default=0.0)


def utility(e: MenuEntry, v) -> float:
    v1, v2 = v
    return e.q1 * v1 + e.q2 * v2 - e.t


def best_response(menu: Menu, v) -> MenuEntry:
    """Utility-maximizing outcome for type ``v``.

    Ties (within TIE_TOL) go to the higher price, then to the earlier entry;
    the null outcome loses every tie it is part of unless nothing else is
    priced above zero.
    """
    v1, v2 = v
    us = [e.q1 * v1 + e.q2 * v2 - e.t for e in menu.entries]
    umax = max(us + [0.0])
    # two passes keep the tie set independent of entry order
    best = NULL if umax <= TIE_TOL else None
    for e, u in zip(menu.entries, us):
        if u >= umax - TIE_TOL and (best is None or e.t > best.t or (e.t == best.t and best is NULL)):
            best = e
    return best


def choice_indices(menu: Menu, types: np.ndarray) -> np.ndarray:
    """Vectorized best response. Returns index into menu entries, -1 for null.

    Same tie-break as :func:`best_response`.
    """
    types = np.asarray(types, dtype=float)
    n = types.shape[0]
    if len(menu) == 0:
        return np.full(n, -1, dtype=np.int64)
    arr = menu.as_array()
    # column 0 is the null outcome
    q = np.vstack([[0.0, 0.0], arr[:, :2]])
    t = np.concatenate([[0.0], arr[:, 2]])
    u = types @ q.T - t
    umax = u.max(axis=1, keepdims=True)
    tied = u >= umax - TIE_TOL
    # among tied outcomes: highest price, then lowest entry index (null last)
    order_key = np.where(tied, t[None, :], -np.inf)
    tmax = order_key.max(axis=1, keepdims=True)
    cand = tied & (order_key == tmax)
    # null sits at column 0; move it behind every listed entry
    cand_entries = cand[:, 1:]
    has_entry = cand_entries.any(axis=1)
    idx = np.where(has_entry, cand_entries.argmax(axis=1), -1)
    return idx


def payments(menu: Menu, types: np.ndarray) -> np.ndarray:
    idx = choice_indices(menu, types)
    prices = np.concatenate([menu.as_array()[:, 2], [0.0]]) if len(menu) else np.zeros(1)
    return prices[idx]  # idx == -1 picks the trailing 0.0


def induced_utility(menu: Menu, types: np.ndarray) -> np.ndarray:
    """u(v) = max over entries and null of the buyer's utility."""
    types = np.atleast_2d(np.asarray(types, dtype=float))
    if len(menu) == 0:
        return np.zeros(types.shape[0])
    arr = menu.as_array()
    u = types @ arr[:, :2].T - arr[:, 2]
    return np.maximum(u.max(axis=1), 0.0)


def menu_size(menu: Menu) -> int:
    """Number of distinct outcomes, null included."""
    return len(Menu(menu.entries)) + 1


def comm_complexity(size: int) -> int:
    """Deterministic communication bits to run a menu of this size: ceil(log2 size)."""
    size = int(size)
    if size < 1:
        raise ValueError("menu size must be at least 1")
    return (size - 1).bit_length()


# -- menu files ---------------------------------------------------------------

def parse_menu(text: str, max_price: float | None = None) -> Menu:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'q1 q2 t', got {raw!r}")
        try:
            q1, q2, t = (float(p) for p in parts)
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field in {raw!r}") from None
        if not all(math.isfinite(x) for x in (q1, q2, t)):
            raise ValueError(f"line {lineno}: non-finite value")
        if t < 0:
            raise ValueError(f"line {lineno}: negative price {t}")
        if max_price is not None and t > max_price:
            raise ValueError(f"line {lineno}: price {t} above {max_price}")
        entries.append(MenuEntry(q1, q2, t))
    return Menu(entries)


def read_menu(path) -> Menu:
    return parse_menu(Path(path).read_text())


def format_menu(menu: Menu, header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend("# " + h for h in header.splitlines())
    lines.extend(f"{e.q1!r} {e.q2!r} {e.t!r}" for e in menu.entries)
    return "\n".join(lines) + "\n"
