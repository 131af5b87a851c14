"""Product valuation distributions with polynomial marginal densities.

Also home to the portable sampler, the McAfee-McMillan hazard checker and
single-good revenue-optimal (Myerson) pricing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize

from .model import BuyerType

NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Marginal:
    lo: float
    hi: float
    coef: tuple  # density coefficients in the monomial basis, lowest degree first
    name: str = "poly"
    density: Polynomial = field(init=False, repr=False)
    cdf_poly: Polynomial = field(init=False, repr=False)

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (0.0 <= lo < hi):
            raise ValueError(f"support must satisfy 0 <= lo < hi, got [{lo}, {hi}]")
        coef = tuple(float(c) for c in self.coef)
        if not coef:
            raise ValueError("empty density")
        dens = Polynomial(coef)
        cdf = dens.integ(lbnd=lo)
        total = cdf(hi)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"density integrates to {total!r} over [{lo}, {hi}], not 1")
        if _poly_min(dens, lo, hi) < -1e-12:
            raise ValueError("density is negative somewhere on the support")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "coef", coef)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "cdf_poly", cdf)

    def __eq__(self, other):
        return isinstance(other, Marginal) and (self.lo, self.hi, self.coef) == (
            other.lo,
            other.hi,
            other.coef,
        )

    def __hash__(self):
        return hash((self.lo, self.hi, self.coef))

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, self.density(x), 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= self.lo, 0.0, np.where(x >= self.hi, 1.0, self.cdf_poly(np.clip(x, self.lo, self.hi))))

    def mean(self) -> float:
        xf = Polynomial([0.0, 1.0]) * self.density
        return float(xf.integ(lbnd=self.lo)(self.hi))

    def ppf(self, u):
        """Inverse CDF, vectorized: table interpolation then safeguarded Newton."""
        u = np.asarray(u, dtype=float)
        grid = np.linspace(self.lo, self.hi, 4097)
        cg = self.cdf_poly(grid)
        cg[0], cg[-1] = 0.0, 1.0
        cg = np.maximum.accumulate(cg)
        x = np.interp(u, cg, grid)
        # bracket from the table keeps Newton inside a monotone cell
        j = np.clip(np.searchsorted(cg, u, side="right"), 1, len(grid) - 1)
        a, b = grid[j - 1], grid[j]
        dens = self.density
        for _ in range(8):
            fx = self.cdf_poly(x) - u
            dx = dens(x)
            a = np.where(fx < 0, x, a)
            b = np.where(fx > 0, x, b)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(dx > 0, fx / dx, 0.0)
            xn = x - step
            bad = (xn <= a) | (xn >= b) | ~np.isfinite(xn)
            xn = np.where(bad, 0.5 * (a + b), xn)
            # near a flat end of the CDF the root is only defined to ~sqrt(ulp), so 1e-12 is ample
            done = np.max(np.abs(xn - x), initial=0.0) <= 1e-12
            x = xn
            if done:
                break
        return np.clip(x, self.lo, self.hi)

    def spec(self) -> str:
        if self.name in ("beta12", "uniform") and (self.lo, self.hi) == (0.0, 1.0):
            return self.name
        return "poly:" + ",".join(repr(c) for c in self.coef) + f"@{self.lo!r},{self.hi!r}"


def _poly_min(p: Polynomial, lo: float, hi: float) -> float:
    pts = [lo, hi]
    if p.degree() >= 2:
        for r in p.deriv().roots():
            if abs(r.imag) < 1e-12 and lo < r.real < hi:
                pts.append(r.real)
    pts.extend(np.linspace(lo, hi, 257))
    return float(np.min(p(np.array(pts))))


def beta12() -> Marginal:
    """Beta(1,2) on [0,1]: density 2(1-x), CDF 1-(1-x)^2."""
    return Marginal(0.0, 1.0, (2.0, -2.0), name="beta12")


def uniform(lo: float = 0.0, hi: float = 1.0) -> Marginal:
    return Marginal(lo, hi, (1.0 / (hi - lo),), name="uniform" if (lo, hi) == (0.0, 1.0) else "poly")


def poly_marginal(coef, lo: float = 0.0, hi: float = 1.0, normalize: bool = False) -> Marginal:
    coef = [float(c) for c in coef]
    if normalize:
        z = Polynomial(coef).integ(lbnd=lo)(hi)
        coef = [c / z for c in coef]
    return Marginal(lo, hi, tuple(coef))


@dataclass(frozen=True)
class ProductDistribution:
    m1: Marginal
    m2: Marginal

    def __post_init__(self):
        total = self.m1.cdf_poly(self.m1.hi) * self.m2.cdf_poly(self.m2.hi)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError("joint density does not integrate to 1")

    @property
    def support(self) -> tuple[float, float, float, float]:
        return (self.m1.lo, self.m1.hi, self.m2.lo, self.m2.hi)

    def pdf(self, v1, v2):
        return self.m1.pdf(v1) * self.m2.pdf(v2)

    def spec(self) -> str:
        if self.m1 == self.m2:
            return "iid:" + self.m1.spec()
        return "product:" + self.m1.spec() + ";" + self.m2.spec()


def iid(m: Marginal) -> ProductDistribution:
    return ProductDistribution(m, m)


# -- sampling -----------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of splitmix64 started at ``seed`` (uint64 array).

    Output i is mix(seed + (i+1) * 0x9E3779B97F4A7C15) with the standard
    Stafford variant-13 finalizer; all arithmetic wraps mod 2**64.
    """
    state0 = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    k = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = state0 + k * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z


def uniforms(seed: int, n: int) -> np.ndarray:
    """Doubles in [0, 1) from the top 53 bits of splitmix64."""
    return (splitmix64(seed, n) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def sample_array(dist: ProductDistribution, n: int, seed: int) -> np.ndarray:
    """(n, 2) array of types; coordinates use interleaved uniforms u[2i], u[2i+1]."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.zeros((0, 2))
    u = uniforms(seed, 2 * n)
    return np.column_stack([dist.m1.ppf(u[0::2]), dist.m2.ppf(u[1::2])])


def sample(dist: ProductDistribution, n: int, seed: int) -> list[BuyerType]:
    return [BuyerType(float(a), float(b)) for a, b in sample_array(dist, n, seed)]


# -- hazard condition -----------------------------------------------------------

@dataclass(frozen=True)
class HazardResult:
    satisfied: bool
    min_value: float
    argmin: BuyerType


def hazard_expression(dist: ProductDistribution, x1, x2):
    """3 f(x) + x . grad f(x) for the joint product density (two goods)."""
    p1, p2 = dist.m1.density, dist.m2.density
    d1, d2 = p1.deriv(), p2.deriv()
    f1, f2 = p1(x1), p2(x2)
    return 3.0 * f1 * f2 + x1 * d1(x1) * f2 + x2 * f1 * d2(x2)


def hazard_check(dist: ProductDistribution, grid_n: int = 101) -> HazardResult:
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    lo1, hi1, lo2, hi2 = dist.support
    g1 = np.linspace(lo1, hi1, grid_n)
    g2 = np.linspace(lo2, hi2, grid_n)
    X1, X2 = np.meshgrid(g1, g2, indexing="ij")
    vals = hazard_expression(dist, X1, X2)
    flat = vals.ravel()
    order = np.argsort(flat, kind="stable")
    best_val = float(flat[order[0]])
    best_x = (float(X1.ravel()[order[0]]), float(X2.ravel()[order[0]]))

    def obj(z):
        return float(hazard_expression(dist, z[0], z[1]))

    for k in order[: min(5, len(order))]:
        x0 = np.array([X1.ravel()[k], X2.ravel()[k]])
        res = minimize(obj, x0, method="L-BFGS-B", bounds=[(lo1, hi1), (lo2, hi2)])
        if res.fun < best_val - 1e-15:
            best_val, best_x = float(res.fun), (float(res.x[0]), float(res.x[1]))
    return HazardResult(best_val >= -1e-12, best_val, BuyerType(*best_x))


# -- single-good pricing ------------------------------------------------------

@dataclass(frozen=True)
class PriceResult:
    price: float
    revenue: float


def myerson_price(m: Marginal) -> PriceResult:
    """Revenue-maximizing posted price p * (1 - F(p)) over the support.

    Candidates are the real roots of the derivative plus the endpoints and
    zero; ties go to the lower price.
    """
    one_minus_F = 1.0 - m.cdf_poly
    rev = Polynomial([0.0, 1.0]) * one_minus_F
    cands = {0.0, m.lo, m.hi}
    for r in rev.deriv().roots():
        if abs(r.imag) < 1e-9 and m.lo <= r.real <= m.hi:
            cands.add(float(r.real))
    cands = sorted(cands)
    vals = [float(rev(c)) if c >= m.lo else c * 1.0 for c in cands]
    best = max(vals)
    for c, v in zip(cands, vals):
        if v >= best - 1e-15:
            return PriceResult(c, v)
    raise AssertionError("unreachable")


# -- spec strings -------------------------------------------------------------

def parse_marginal(token: str) -> Marginal:
    token = token.strip()
    if token == "beta12":
        return beta12()
    if token == "uniform":
        return uniform()
    if token.startswith("poly:"):
        body = token[len("poly:"):]
        if "@" in body:
            cs, rng = body.split("@", 1)
            lo, hi = (float(x) for x in rng.split(","))
        else:
            cs, lo, hi = body, 0.0, 1.0
        coef = [float(c) for c in cs.split(",") if c.strip()]
        # coefficients are taken up to normalization
        return poly_marginal(coef, lo, hi, normalize=True)
    raise ValueError(f"unknown marginal {token!r}")


def parse_dist(spec: str) -> ProductDistribution:
    """Parse 'iid:<m>' or 'product:<m1>,<m2>' (';' separates poly marginals)."""
    spec = spec.strip()
    if spec.startswith("iid:"):
        return iid(parse_marginal(spec[4:]))
    if spec.startswith("product:"):
        body = spec[len("product:"):]
        if ";" in body:
            a, b = body.split(";", 1)
        else:
            parts = body.split(",")
            if len(parts) != 2:
                raise ValueError(f"cannot split product spec {spec!r}; use ';' between poly marginals")
            a, b = parts
        return ProductDistribution(parse_marginal(a), parse_marginal(b))
    raise ValueError(f"unknown distribution spec {spec!r}")
