"""Dense bounded-variable simplex for the small LPs of the optimizer.

Two-phase tableau method. Upper bounds are handled implicitly (nonbasic
variables sit at either bound), so box constraints cost no rows. Pricing is
steepest edge until a run of degenerate pivots appears, after which Bland's
smallest-index rule takes over for the rest of the phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg.blas import dger

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-7
OPT_TOL = 1e-9
DEGENERATE_STREAK = 50

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = "optimal", "infeasible", "unbounded", "iteration_limit"
_RELATIONS = ("<=", ">=", "=")


@dataclass
class LinearProgram:
    """maximize objective @ x  s.t. rows (rel) rhs, lo <= x <= hi."""

    objective: np.ndarray
    A: np.ndarray
    relations: list[str]
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.relations = list(self.relations)
        self.lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (n,)).copy()
        self.hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (n,)).copy()
        if len(self.relations) != self.A.shape[0] or self.rhs.size != self.A.shape[0]:
            raise ValueError("every constraint row needs one relation and one rhs")
        bad = [r for r in self.relations if r not in _RELATIONS]
        if bad:
            raise ValueError(f"unknown relation(s) {bad}")
        if np.any(self.lo > self.hi):
            raise ValueError("lower bound above upper bound")
        if np.any(self.lo == np.inf) or np.any(self.hi == -np.inf):
            raise ValueError("empty variable range")

    @classmethod
    def from_rows(cls, objective, constraints: Sequence, bounds=None) -> "LinearProgram":
        """Build from ``[(row, rel, rhs), ...]`` and ``[(lo, hi), ...]`` (default x >= 0)."""
        n = len(objective)
        rows = [np.asarray(r, dtype=float) for r, _, _ in constraints]
        A = np.vstack(rows) if rows else np.zeros((0, n))
        rels = [rel for _, rel, _ in constraints]
        rhs = [b for _, _, b in constraints]
        if bounds is None:
            lo, hi = np.zeros(n), np.full(n, np.inf)
        else:
            lo = np.array([b[0] if b[0] is not None else -np.inf for b in bounds], dtype=float)
            hi = np.array([b[1] if b[1] is not None else np.inf for b in bounds], dtype=float)
        return cls(objective, A, rels, rhs, lo, hi)

    @property
    def n(self) -> int:
        return self.objective.size

    @property
    def m(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    value: float = float("nan")
    iterations: int = 0
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def constraint_violations(lp: LinearProgram, x, tol: float = FEAS_TOL) -> list[str]:
    """Independent feasibility check; returns human-readable violations."""
    x = np.asarray(x, dtype=float)
    out = []
    lhs = lp.A @ x
    for i, (val, rel, b) in enumerate(zip(lhs, lp.relations, lp.rhs)):
        scale = max(1.0, abs(b), float(np.abs(lp.A[i]).max(initial=0.0)))
        if rel == "<=" and val > b + tol * scale:
            out.append(f"row {i}: {val} > {b}")
        elif rel == ">=" and val < b - tol * scale:
            out.append(f"row {i}: {val} < {b}")
        elif rel == "=" and abs(val - b) > tol * scale:
            out.append(f"row {i}: {val} != {b}")
    for j in range(lp.n):
        scale = max(1.0, abs(x[j]))
        if x[j] < lp.lo[j] - tol * scale or x[j] > lp.hi[j] + tol * scale:
            out.append(f"x[{j}]={x[j]} outside [{lp.lo[j]}, {lp.hi[j]}]")
    return out


class _Tableau:
    def __init__(self, T, xB, basis, ub):
        self.T = np.asfortranarray(T)
        self.xB = xB
        self.basis = basis
        self.ub = ub
        self.at_upper = np.zeros(T.shape[1], dtype=bool)
        self.is_basic = np.zeros(T.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.iterations = 0

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = self.xB
        return x

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        colj = T[:, j].copy()
        colj[r] = 0.0
        # in-place rank-one update; the tableau is kept Fortran-ordered for this
        self.T = T = dger(-1.0, colj, T[r].copy(), a=T, overwrite_a=1)
        self.is_basic[self.basis[r]] = False
        self.basis[r] = j
        self.is_basic[j] = True
        self.at_upper[j] = False

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_iter: int) -> str:
        ub = self.ub
        d = cost - cost[self.basis] @ self.T
        bland = False
        streak = 0
        while True:
            if self.iterations >= max_iter:
                return ITERATION_LIMIT
            cand = allowed & ~self.is_basic & np.where(self.at_upper, d < -OPT_TOL, d > OPT_TOL)
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return OPTIMAL
            if bland:
                j = int(idx[0])
            else:
                # steepest edge: reduced cost per unit length of the edge direction
                norms = 1.0 + np.einsum("ij,ij->j", self.T[:, idx], self.T[:, idx])
                j = int(idx[np.argmax(d[idx] ** 2 / norms)])
            sigma = -1.0 if self.at_upper[j] else 1.0
            delta = -sigma * self.T[:, j]
            ubB = ub[self.basis]
            ratios = np.full(delta.size, np.inf)
            dec = delta < -PIVOT_TOL
            ratios[dec] = np.maximum(self.xB[dec], 0.0) / -delta[dec]
            inc = (delta > PIVOT_TOL) & np.isfinite(ubB)
            ratios[inc] = np.maximum(ubB[inc] - self.xB[inc], 0.0) / delta[inc]
            t_row = ratios.min() if ratios.size else np.inf
            t_flip = ub[j]
            self.iterations += 1
            if not np.isfinite(t_row) and not np.isfinite(t_flip):
                return UNBOUNDED
            if t_flip <= t_row:
                self.xB += delta * t_flip
                self.at_upper[j] = not self.at_upper[j]
                streak = 0
                continue
            ties = np.flatnonzero(ratios <= t_row + 1e-12 * max(1.0, t_row))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(delta[ties]))])
            leaving = self.basis[r]
            to_upper = bool(inc[r] and not dec[r])
            entering_value = t_row if sigma > 0 else ub[j] - t_row
            self.xB += delta * t_row
            self.xB[r] = entering_value
            self.pivot(r, j)
            self.at_upper[leaving] = to_upper
            d -= d[j] * self.T[r]
            d[j] = 0.0
            if t_row <= 1e-14:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    bland = True
            else:
                streak = 0


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Maximize; infeasibility and unboundedness come back as a status."""
    n0 = lp.n
    A0 = lp.A
    b0 = lp.rhs.copy()

    # variable substitution onto [0, ub]
    cols = []  # (original index, sign, shift)
    shift = np.zeros(n0)
    for j in range(n0):
        lo, hi = lp.lo[j], lp.hi[j]
        if np.isfinite(lo):
            cols.append((j, 1.0, hi - lo))
            shift[j] = lo
        elif np.isfinite(hi):
            cols.append((j, -1.0, np.inf))
            shift[j] = hi
        else:
            cols.append((j, 1.0, np.inf))
            cols.append((j, -1.0, np.inf))
    orig = np.array([c[0] for c in cols], dtype=int)
    sign = np.array([c[1] for c in cols])
    ub = np.array([c[2] for c in cols])
    A = A0[:, orig] * sign
    c = lp.objective[orig] * sign
    b = b0 - A0 @ shift
    rels = np.array(lp.relations, dtype=object)

    # empty rows are checked directly and dropped
    keep = np.ones(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        if not np.any(A[i]):
            keep[i] = False
            ok = (rels[i] == "<=" and b[i] >= -FEAS_TOL) or (rels[i] == ">=" and b[i] <= FEAS_TOL) \
                or (rels[i] == "=" and abs(b[i]) <= FEAS_TOL)
            if not ok:
                return LpSolution(INFEASIBLE, message=f"row {i} has no variables and cannot hold")
    A, b, rels = A[keep], b[keep], rels[keep]
    m, n = A.shape

    # equilibrate rows, then columns, then rows again
    rs = 1.0 / np.maximum(np.abs(A).max(axis=1, initial=0.0), 1e-300)
    A = A * rs[:, None]
    b = b * rs
    cs = 1.0 / np.maximum(np.abs(A).max(axis=0, initial=0.0), 1e-300)
    cs[np.abs(A).max(axis=0, initial=0.0) == 0] = 1.0
    A = A * cs[None, :]
    rs2 = 1.0 / np.maximum(np.abs(A).max(axis=1, initial=0.0), 1e-300)
    A = A * rs2[:, None]
    b = b * rs2
    c = c * cs
    ub = ub / cs
    cmax = float(np.abs(c).max(initial=0.0))
    cost_scale = 1.0 / cmax if cmax > 0 else 1.0

    # slacks; flip rows so that rhs >= 0
    slack_sign = np.array([1.0 if r == "<=" else (-1.0 if r == ">=" else 0.0) for r in rels])
    n_slack = int(np.count_nonzero(slack_sign))
    neg = b < 0
    A[neg] *= -1
    b = np.abs(b)
    slack_cols = np.zeros((m, n_slack))
    slack_of_row = np.full(m, -1)
    s = 0
    for i in range(m):
        if slack_sign[i] != 0:
            slack_cols[i, s] = slack_sign[i] * (-1.0 if neg[i] else 1.0)
            slack_of_row[i] = s
            s += 1
    need_art = [i for i in range(m) if slack_of_row[i] < 0 or slack_cols[i, slack_of_row[i]] < 0]
    n_art = len(need_art)
    art_cols = np.zeros((m, n_art))
    for a, i in enumerate(need_art):
        art_cols[i, a] = 1.0
    T = np.hstack([A, slack_cols, art_cols])
    ntot = n + n_slack + n_art
    ub_all = np.concatenate([ub, np.full(n_slack + n_art, np.inf)])
    basis = np.empty(m, dtype=int)
    art_row = {i: a for a, i in enumerate(need_art)}
    for i in range(m):
        basis[i] = n + n_slack + art_row[i] if i in art_row else n + slack_of_row[i]
    tab = _Tableau(T, b.astype(float).copy(), basis, ub_all)
    limit = max_iter or 50 * (m + ntot) + 1000

    is_art = np.zeros(ntot, dtype=bool)
    is_art[n + n_slack:] = True
    if n_art:
        cost1 = np.where(is_art, -1.0, 0.0)
        status = tab.run(cost1, np.ones(ntot, dtype=bool), limit)
        if status == ITERATION_LIMIT:
            return LpSolution(ITERATION_LIMIT, iterations=tab.iterations, message="phase 1 iteration cap")
        infeas = float(tab.values()[is_art].sum())
        if infeas > FEAS_TOL * max(1.0, float(b.max(initial=0.0))):
            return LpSolution(INFEASIBLE, iterations=tab.iterations,
                              message=f"phase 1 residual {infeas:.3g}")
        # drive zero-level artificials out of the basis
        drop = []
        for r in range(m):
            if is_art[tab.basis[r]]:
                row = np.abs(tab.T[r]) * (~is_art) * (~tab.is_basic)
                j = int(np.argmax(row))
                if row[j] > PIVOT_TOL:
                    val = tab.ub[j] if tab.at_upper[j] else 0.0
                    tab.pivot(r, j)
                    tab.xB[r] = val
                else:
                    drop.append(r)
        if drop:
            keep_rows = np.setdiff1d(np.arange(m), drop)
            tab.T = np.asfortranarray(tab.T[keep_rows])
            tab.xB = tab.xB[keep_rows]
            tab.basis = tab.basis[keep_rows]
    cost2 = np.concatenate([c * cost_scale, np.zeros(n_slack + n_art)])
    status = tab.run(cost2, ~is_art, limit)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=tab.iterations, message="objective unbounded")
    if status == ITERATION_LIMIT:
        return LpSolution(ITERATION_LIMIT, iterations=tab.iterations, message="phase 2 iteration cap")

    z = tab.values()[:n] * cs
    x = shift.copy()
    np.add.at(x, orig, sign * z)
    # snap onto bounds violated by round-off
    x = np.clip(x, lp.lo, lp.hi)
    return LpSolution(OPTIMAL, x=x, value=float(lp.objective @ x), iterations=tab.iterations)


def format_lp(lp: LinearProgram) -> str:
    """Plain-text dump for debugging."""
    lines = ["max " + " ".join(f"{v:+.6g}" for v in lp.objective)]
    for row, rel, b in zip(lp.A, lp.relations, lp.rhs):
        lines.append(" ".join(f"{v:+.6g}" for v in row) + f" {rel} {b:.6g}")
    lines.append("bounds " + " ".join(f"[{lo:.6g},{hi:.6g}]" for lo, hi in zip(lp.lo, lp.hi)))
    return "\n".join(lines)
