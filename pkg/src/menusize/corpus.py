"""Seeded random menus used by the test suite and the harness."""

from __future__ import annotations

import numpy as np

from .model import Menu, MenuEntry


def random_menu(rng: np.random.Generator, k: int) -> Menu:
    """k entries; about a third sit on the boundary of the allocation square.

    Prices stay in [0, 1] and never exceed the bundle's value at (1, 1).
    """
    out = []
    for _ in range(k):
        q1, q2 = rng.uniform(0.0, 1.0, 2)
        kind = rng.integers(0, 3)
        if kind == 0:
            side = rng.integers(0, 4)
            if side == 0:
                q1 = 1.0
            elif side == 1:
                q2 = 1.0
            elif side == 2:
                q1 = 0.0
            else:
                q2 = 0.0
        cap = min(1.0, q1 + q2)
        t = rng.uniform(0.05, 0.95) * cap
        out.append(MenuEntry(float(q1), float(q2), float(t)))
    return Menu(out)


def random_corpus(n: int = 100, seed: int = 2024, kmin: int = 1, kmax: int = 20) -> list[Menu]:
    rng = np.random.default_rng(seed)
    menus = []
    while len(menus) < n:
        k = int(rng.integers(kmin, kmax + 1))
        m = random_menu(rng, k)
        if len(m):
            menus.append(m)
    return menus


def boundary_menu(rng: np.random.Generator, k: int, price_levels: int | None = None) -> Menu:
    """Menu whose entries all have an allocation at 0 or 1.

    With ``price_levels`` set, prices are drawn from that many values so
    several entries share a price.
    """
    levels = None
    if price_levels:
        levels = np.sort(rng.uniform(0.05, 1.0, price_levels))
    out = []
    for _ in range(k):
        side = int(rng.integers(0, 4))
        x = float(rng.uniform(0.0, 1.0))
        q1, q2 = [(1.0, x), (x, 1.0), (0.0, x), (x, 0.0)][side]
        t = float(rng.choice(levels)) if levels is not None else float(rng.uniform(0.0, 1.0))
        t = min(t, q1 + q2)
        out.append(MenuEntry(q1, q2, t))
    return Menu(out)


def boundary_corpus(n: int = 40, seed: int = 7, kmin: int = 5, kmax: int = 200) -> list[Menu]:
    rng = np.random.default_rng(seed)
    return [boundary_menu(rng, int(rng.integers(kmin, kmax + 1))) for _ in range(n)]
