"""Dictionary simplex for  max c.x  s.t.  A x <= b, x >= 0, with b >= 0.

The dictionary keeps the basic variables as affine functions of the
nonbasic ones, x_B = rhs - D x_N and z = value + obj . x_N, so a pivot costs
O(rows * original variables) however many constraints have been added.

The origin is feasible, so no phase one is needed. Rows can be appended
after a solve; the dictionary stays dual feasible and is re-optimized with
the dual simplex, which is what lazy constraint generation needs. Pricing is
Dantzig's rule; after a run of degenerate pivots the solver switches to
Bland's rule, which cannot cycle.
"""

from __future__ import annotations

import numpy as np

TOL = 1e-9
PIVOT_TOL = 1e-7
DEGENERATE_RUN = 50


class LPError(RuntimeError):
    pass


class DenseLP:
    def __init__(self, c, A=None, b=None):
        c = np.asarray(c, dtype=float)
        self.n = c.size
        self.m = 0
        self._cap = 64
        self.D = np.zeros((self._cap, self.n))
        self.rhs = np.zeros(self._cap)
        self.basis = np.zeros(self._cap, dtype=np.int64)  # variable id per row
        self.nonbasic = np.arange(self.n, dtype=np.int64)  # variable id per column
        self.c = c
        self.obj = c.copy()
        self.value = 0.0
        self.pivots = 0
        # row of each basic original variable, -1 when nonbasic
        self._row_of = np.full(self.n, -1, dtype=np.int64)
        self.A_rows: list[np.ndarray] = []
        self.b_rows: list[float] = []
        if A is not None:
            self.add_rows(A, b)

    def _grow(self, need):
        if need <= self._cap:
            return
        cap = max(need, 2 * self._cap)
        D = np.zeros((cap, self.n))
        D[: self.m] = self.D[: self.m]
        rhs = np.zeros(cap)
        rhs[: self.m] = self.rhs[: self.m]
        basis = np.zeros(cap, dtype=np.int64)
        basis[: self.m] = self.basis[: self.m]
        self.D, self.rhs, self.basis, self._cap = D, rhs, basis, cap

    def add_rows(self, A, b):
        """Append constraints A x <= b, each with a fresh slack variable."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape[1] != self.n or A.shape[0] != b.size:
            raise ValueError("constraint shape mismatch")
        if self.m == 0 and np.any(b < 0):
            raise ValueError("the origin must be feasible (b >= 0)")
        k = A.shape[0]
        self.A_rows.extend(A)
        self.b_rows.extend(b)
        # slack s = b - A x with x written in terms of the nonbasic variables
        newD = np.zeros((k, self.n))
        nb_orig = self.nonbasic < self.n
        newD[:, np.flatnonzero(nb_orig)] = A[:, self.nonbasic[nb_orig]]
        new_rhs = b.copy()
        rows = self._row_of
        basic_vars = np.flatnonzero(rows >= 0)
        if basic_vars.size:
            coef = A[:, basic_vars]
            r = rows[basic_vars]
            newD -= coef @ self.D[r]
            new_rhs -= coef @ self.rhs[r]
        self._grow(self.m + k)
        m0 = self.m
        self.D[m0 : m0 + k] = newD
        self.rhs[m0 : m0 + k] = new_rhs
        self.basis[m0 : m0 + k] = self.n + m0 + np.arange(k)  # slack ids follow the originals
        self.m += k

    def _pivot(self, r, j):
        m = self.m
        D = self.D[:m]
        p = D[r, j]
        row = D[r] / p
        row[j] = 1.0 / p
        col = D[:, j].copy()
        col[r] = 0.0
        rhs_r = self.rhs[r] / p
        nz = np.flatnonzero(col)
        if nz.size > m // 4:
            # dense update is cheaper than gathering rows
            D -= col[:, None] * row[None, :]
            D[:, j] = -col / p
            self.rhs[:m] -= col * rhs_r
        elif nz.size:
            D[nz] -= np.outer(col[nz], row)
            D[nz, j] = -col[nz] / p
            self.rhs[nz] -= col[nz] * rhs_r
        D[r] = row
        self.rhs[r] = rhs_r
        cj = self.obj[j]
        self.obj -= cj * row
        self.obj[j] = -cj / p
        self.value += cj * rhs_r
        entering, leaving = self.nonbasic[j], self.basis[r]
        self.nonbasic[j] = leaving
        self.basis[r] = entering
        if entering < self.n:
            self._row_of[entering] = r
        if leaving < self.n:
            self._row_of[leaving] = -1
        self.pivots += 1

    def _primal(self, max_iter):
        degenerate = 0
        for _ in range(max_iter):
            obj = self.obj
            bland = degenerate >= DEGENERATE_RUN
            if bland:
                cand = np.flatnonzero(obj > TOL)
                if cand.size == 0:
                    return
                j = int(cand[np.argmin(self.nonbasic[cand])])
            else:
                j = int(np.argmax(obj))
                if obj[j] <= TOL:
                    return
            col = self.D[: self.m, j]
            pos = col > PIVOT_TOL
            if not pos.any():
                if (col > TOL).any():
                    pos = col > TOL
                else:
                    raise LPError("unbounded")
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(self.rhs[: self.m][pos], 0.0) / col[pos]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + 1e-12)
            # Bland needs the smallest index; otherwise the largest pivot is the stable choice
            r = int(ties[np.argmin(self.basis[ties])]) if bland else int(ties[np.argmax(col[ties])])
            degenerate = degenerate + 1 if rmin <= 1e-12 else 0
            self._pivot(r, j)
        raise LPError("iteration limit in primal simplex")

    def _dual(self, max_iter):
        for _ in range(max_iter):
            rhs = self.rhs[: self.m]
            r = int(np.argmin(rhs))
            if rhs[r] >= -TOL:
                return
            row = self.D[r]
            neg = row < -PIVOT_TOL
            if not neg.any():
                neg = row < -TOL
                if not neg.any():
                    raise LPError("infeasible")
            ratios = np.full(self.n, np.inf)
            ratios[neg] = np.minimum(self.obj[neg], 0.0) / row[neg]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + 1e-12)
            j = int(ties[np.argmin(row[ties])])
            self._pivot(r, j)
        raise LPError("iteration limit in dual simplex")

    def solve(self, max_iter: int = 500_000):
        if np.any(self.rhs[: self.m] < -TOL):
            self._dual(max_iter)
        self._primal(max_iter)
        return self.value

    def solution(self) -> np.ndarray:
        x = np.zeros(self.n)
        basic = self._row_of >= 0
        x[basic] = self.rhs[self._row_of[basic]]
        return np.maximum(x, 0.0)

    def duals(self) -> np.ndarray:
        """Row prices read off the slack columns, clipped at zero."""
        y = np.zeros(self.m)
        slack = self.nonbasic >= self.n
        y[self.nonbasic[slack] - self.n] = -self.obj[slack]
        return np.maximum(y, 0.0)

    def dual_bound(self, upper) -> float:
        """Upper bound on max c.x over these rows and 0 <= x <= upper, valid for any y >= 0.

        c.x = y.(A x) + (c - A^T y).x <= y.b + sum_j upper_j * max(0, (c - A^T y)_j).
        """
        y = self.duals()
        A = np.asarray(self.A_rows)
        red = self.c - A.T @ y
        return float(y @ np.asarray(self.b_rows) + np.asarray(upper, float) @ np.maximum(red, 0.0))

    def max_violation(self, x=None) -> float:
        if x is None:
            x = self.solution()
        if not self.A_rows:
            return 0.0
        A = np.asarray(self.A_rows)
        return float(max(0.0, (A @ x - np.asarray(self.b_rows)).max()))
