"""Dense two-phase primal simplex with dual extraction.

Problems here are small (at most a few hundred rows), so a full tableau kept
in memory is simpler and fast enough.  The tableau is periodically rebuilt
from the original data by solving with the basis matrix, and the final primal
and dual solutions always come from a fresh solve, so accumulated pivoting
error never reaches the caller.

Dual sign convention: ``duals[i]`` is the derivative of the optimal value with
respect to ``rhs[i]``.  Hence LE rows of a Max problem and GE rows of a Min
problem have nonnegative duals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NumericalFailure


class Sense(str, enum.Enum):
    MIN = "min"
    MAX = "max"


class Relation(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "=="


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``sense c.x`` subject to ``A x (<=|>=|==) b`` and ``lower <= x <= upper``."""

    sense: Sense
    objective: np.ndarray
    matrix: np.ndarray
    relations: tuple[Relation, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).reshape(-1)
        n = c.size
        a = np.array(self.matrix, dtype=float).reshape(-1, n) if n else np.zeros((len(self.relations), 0))
        b = np.array(self.rhs, dtype=float).reshape(-1)
        rel = tuple(Relation(r) for r in self.relations)
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if a.shape[0] != b.size or len(rel) != b.size:
            raise DimensionMismatch(f"{a.shape[0]} rows, {b.size} right-hand sides, {len(rel)} relations")
        if lo.size != n or hi.size != n:
            raise DimensionMismatch("bounds must have one entry per variable")
        if not np.all(np.isfinite(b)) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(c)):
            raise ValueError("objective, matrix and rhs must be finite")
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("inconsistent variable bounds")
        for name, arr in (("objective", c), ("matrix", a), ("rhs", b), ("lower", lo), ("upper", hi)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "sense", Sense(self.sense))

    @classmethod
    def build(cls, sense, objective, rows: Sequence[tuple[Sequence[float], Relation, float]] = (),
              bounds: Sequence[tuple[float, float]] | None = None) -> "LinearProgram":
        """Convenience constructor from a row list; default bounds are ``x >= 0``."""
        c = np.asarray(objective, dtype=float).reshape(-1)
        n = c.size
        a = np.array([np.asarray(r[0], dtype=float).reshape(-1) for r in rows]).reshape(len(rows), n)
        rel = tuple(Relation(r[1]) for r in rows)
        b = np.array([float(r[2]) for r in rows])
        if bounds is None:
            lo, hi = np.zeros(n), np.full(n, np.inf)
        else:
            lo = np.array([bd[0] for bd in bounds], dtype=float)
            hi = np.array([bd[1] for bd in bounds], dtype=float)
        return cls(sense, c, a, rel, b, lo, hi)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    @property
    def rows(self) -> list[tuple[np.ndarray, Relation, float]]:
        return [(self.matrix[i], self.relations[i], float(self.rhs[i])) for i in range(self.n_rows)]


@dataclass
class LPSolution:
    status: LPStatus
    x: np.ndarray
    duals: np.ndarray
    value: float
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


@dataclass
class SimplexOptions:
    feas_tol: float = 1e-8
    opt_tol: float = 1e-9
    pivot_tol: float = 1e-11
    refactor_every: int = 50
    degenerate_streak: int = 30
    max_rejections: int = 20
    max_iter_factor: int = 50
    audit_tol: float = 1e-8


# ---------------------------------------------------------------------------
# conversion to standard form: min c.y, A y = b, y >= 0, b >= 0


@dataclass
class _Standard:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    # x = x_offset + x_map @ y
    x_offset: np.ndarray
    x_map: np.ndarray
    const: float
    n_user_rows: int
    row_sign: np.ndarray  # row flips applied (+1 / -1), user rows first
    row_scale: np.ndarray
    col_scale: np.ndarray
    initial_basis: list[int] = field(default_factory=list)
    artificial_rows: list[int] = field(default_factory=list)


def _to_standard(lp: LinearProgram) -> _Standard:
    n = lp.n_vars
    sign = -1.0 if lp.sense is Sense.MAX else 1.0
    cols: list[np.ndarray] = []  # each column of the transformed variable matrix over x
    x_offset = np.zeros(n)
    bound_rows: list[tuple[int, float]] = []  # (column index of y, upper bound on y)
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        e = np.zeros(n)
        if np.isfinite(lo):
            x_offset[j] = lo
            e[j] = 1.0
            cols.append(e)
            if np.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            x_offset[j] = hi
            e[j] = -1.0
            cols.append(e)
        else:
            e[j] = 1.0
            cols.append(e)
            cols.append(-e)
    x_map = np.array(cols).T.reshape(n, len(cols))
    c_obj = sign * lp.objective
    const = float(c_obj @ x_offset)
    a_y = lp.matrix @ x_map
    b_y = lp.rhs - lp.matrix @ x_offset
    c_y = c_obj @ x_map

    n_y = x_map.shape[1]
    m_user = lp.n_rows
    m = m_user + len(bound_rows)
    rows = np.zeros((m, n_y))
    b = np.zeros(m)
    rows[:m_user] = a_y
    b[:m_user] = b_y
    for k, (col, ub) in enumerate(bound_rows):
        rows[m_user + k, col] = 1.0
        b[m_user + k] = ub
    relations = list(lp.relations) + [Relation.LE] * len(bound_rows)
    slack_rows = [i for i, r in enumerate(relations) if r is not Relation.EQ]
    n_slack = len(slack_rows)
    a = np.zeros((m, n_y + n_slack))
    a[:, :n_y] = rows
    slack_col_of_row = {}
    for k, i in enumerate(slack_rows):
        s = 1.0 if relations[i] is Relation.LE else -1.0
        a[i, n_y + k] = s
        slack_col_of_row[i] = n_y + k
    c = np.concatenate([c_y, np.zeros(n_slack)])

    row_sign = np.where(b < 0, -1.0, 1.0)
    a *= row_sign[:, None]
    b *= row_sign

    # equilibrate: columns by max magnitude, then rows
    col_max = np.abs(a).max(axis=0) if m else np.ones(a.shape[1])
    col_scale = np.where(col_max > 0, 1.0 / np.where(col_max > 0, col_max, 1.0), 1.0)
    a *= col_scale
    c = c * col_scale
    row_max = np.abs(a).max(axis=1) if a.shape[1] else np.ones(m)
    row_scale = np.where(row_max > 0, 1.0 / np.where(row_max > 0, row_max, 1.0), 1.0)
    a *= row_scale[:, None]
    b = b * row_scale

    basis = []
    artificial_rows = []
    for i in range(m):
        j = slack_col_of_row.get(i)
        if j is not None and a[i, j] > 0:
            basis.append(j)
        else:
            basis.append(-1)
            artificial_rows.append(i)
    full_map = np.zeros((n, a.shape[1]))
    full_map[:, :n_y] = x_map
    return _Standard(a, b, c, x_offset, full_map, const, m_user, row_sign, row_scale, col_scale,
                     basis, artificial_rows)


# ---------------------------------------------------------------------------
# tableau simplex


class _Tableau:
    def __init__(self, a: np.ndarray, b: np.ndarray, basis: list[int], opts: SimplexOptions):
        self.a = a
        self.b = b
        self.basis = list(basis)
        self.opts = opts
        self.iterations = 0
        self.refactor()

    def refactor(self):
        m = self.a.shape[0]
        if m == 0:
            self.t = np.zeros((0, self.a.shape[1]))
            self.beta = np.zeros(0)
            return
        bmat = self.a[:, self.basis]
        try:
            self.t = np.linalg.solve(bmat, self.a)
            self.beta = np.linalg.solve(bmat, self.b)
        except np.linalg.LinAlgError:
            raise NumericalFailure("basis matrix became singular") from None
        scale = max(1.0, float(np.abs(self.b).max()))
        if np.any(self.beta < -max(1e3 * self.opts.feas_tol, self.opts.audit_tol) * scale):
            raise NumericalFailure("lost primal feasibility during refactorization")
        np.maximum(self.beta, 0.0, out=self.beta)
        self.t[:, self.basis] = np.eye(m)
        self._since_refactor = 0

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        return c - c[self.basis] @ self.t

    def pivot(self, row: int, col: int):
        t = self.t
        piv = t[row, col]
        t[row] /= piv
        self.beta[row] /= piv
        col_vals = t[:, col].copy()
        col_vals[row] = 0.0
        t -= np.outer(col_vals, t[row])
        self.beta -= col_vals * self.beta[row]
        np.maximum(self.beta, 0.0, out=self.beta)
        self.basis[row] = col
        self.iterations += 1
        self._since_refactor += 1
        if self._since_refactor >= self.opts.refactor_every:
            self.refactor()

    def optimize(self, c: np.ndarray, allowed: np.ndarray) -> LPStatus:
        """Minimize ``c`` over the current feasible basis, entering only ``allowed`` columns."""
        opts = self.opts
        m, n = self.t.shape
        max_iter = opts.max_iter_factor * (m + n) + 100
        c_scale = max(1.0, float(np.abs(c).max()) if c.size else 1.0)
        degenerate = 0
        bland = False
        rejections = 0
        fresh = False
        fresh_unbounded = False
        start = self.iterations
        while True:
            if self.iterations - start > max_iter:
                raise NumericalFailure(f"simplex exceeded {max_iter} pivots")
            r = self.reduced_costs(c)
            r[self.basis] = 0.0
            cand = np.flatnonzero(allowed & (r < -opts.opt_tol * c_scale))
            if cand.size == 0:
                if fresh:
                    return LPStatus.OPTIMAL
                self.refactor()
                fresh = True
                continue
            fresh = False
            order = cand if bland else cand[np.argsort(r[cand], kind="stable")]
            chosen = None
            for col in order:
                column = self.t[:, col]
                eligible = column > opts.pivot_tol
                if not np.any(eligible):
                    if np.any(column > 0) and not fresh_unbounded:
                        # only sub-tolerance pivots: confirm on a fresh factorization first
                        rejections += 1
                        if rejections > opts.max_rejections:
                            raise NumericalFailure("pivot candidates repeatedly below tolerance")
                        break
                    return LPStatus.UNBOUNDED
                idx = np.flatnonzero(eligible)
                ratios = self.beta[idx] / column[idx]
                best = ratios.min()
                if bland:
                    ties = idx[ratios <= best + 1e-12 * max(1.0, abs(best))]
                    row = min(ties, key=lambda i: self.basis[i])
                else:
                    # two-pass ratio test: among rows whose ratio is within the
                    # feasibility tolerance of the minimum, take the largest pivot
                    relaxed = ((self.beta[idx] + opts.feas_tol) / column[idx]).min()
                    near = idx[ratios <= relaxed]
                    piv = column[near]
                    top = piv.max()
                    ties = near[piv >= top * (1 - 1e-12)]
                    row = min(ties, key=lambda i: self.basis[i])
                    best = max(float(self.beta[row] / column[row]), 0.0)
                chosen = (row, col, best)
                break
            if chosen is None:
                self.refactor()
                fresh_unbounded = True
                continue
            fresh_unbounded = False
            rejections = 0
            row, col, step = chosen
            if step <= opts.feas_tol:
                degenerate += 1
                if degenerate >= opts.degenerate_streak:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self.pivot(row, col)


def solve_lp(lp: LinearProgram, options: SimplexOptions | None = None) -> LPSolution:
    """Solve ``lp`` to optimality or report infeasibility / unboundedness."""
    opts = options or SimplexOptions()
    n = lp.n_vars
    std = _to_standard(lp)
    m, n_std = std.a.shape
    nan_x = np.full(n, np.nan)
    nan_y = np.full(lp.n_rows, np.nan)

    # phase 1 with artificial columns on rows lacking a usable slack
    n_art = len(std.artificial_rows)
    a1 = np.zeros((m, n_std + n_art))
    a1[:, :n_std] = std.a
    basis = list(std.initial_basis)
    for k, i in enumerate(std.artificial_rows):
        a1[i, n_std + k] = 1.0
        basis[i] = n_std + k
    tab = _Tableau(a1, std.b, basis, opts)
    is_art = np.zeros(n_std + n_art, dtype=bool)
    is_art[n_std:] = True
    if n_art:
        c1 = is_art.astype(float)
        if tab.optimize(c1, np.ones(n_std + n_art, dtype=bool)) is not LPStatus.OPTIMAL:
            raise NumericalFailure("phase 1 reported an unbounded ray")
        infeas = float(tab.beta[[k for k, j in enumerate(tab.basis) if is_art[j]]].sum()) if m else 0.0
        if infeas > opts.feas_tol * max(1.0, float(np.abs(std.b).max())):
            return LPSolution(LPStatus.INFEASIBLE, nan_x, nan_y, np.nan, tab.iterations)
        # drive basic artificials out, dropping rows that turn out redundant
        keep = np.ones(m, dtype=bool)
        for row in range(m):
            if not is_art[tab.basis[row]]:
                continue
            vals = np.abs(tab.t[row, :n_std])
            vals[[j for j in tab.basis if j < n_std]] = 0.0
            j = int(np.argmax(vals)) if n_std else 0
            if n_std and vals[j] > 1e-9:
                tab.pivot(row, j)
            else:
                keep[row] = False
        rows = np.flatnonzero(keep)
        tab = _Tableau(std.a[rows], std.b[rows], [tab.basis[i] for i in rows], opts)
    else:
        rows = np.arange(m)
    iterations = tab.iterations

    status = tab.optimize(std.c, np.ones(n_std, dtype=bool))
    if status is LPStatus.UNBOUNDED:
        return LPSolution(status, nan_x, nan_y, np.nan, iterations + tab.iterations)

    # final solution from a fresh factorization
    a_k, b_k = std.a[rows], std.b[rows]
    basis = tab.basis
    if rows.size:
        bmat = a_k[:, basis]
        try:
            y_basic = np.linalg.solve(bmat, b_k)
            duals_std = np.linalg.solve(bmat.T, std.c[basis])
        except np.linalg.LinAlgError:
            raise NumericalFailure("final basis is singular") from None
    else:
        y_basic, duals_std = np.zeros(0), np.zeros(0)
    z = np.zeros(n_std)
    z[basis] = y_basic
    scale_b = max(1.0, float(np.abs(b_k).max()) if b_k.size else 1.0)
    scale_c = max(1.0, float(np.abs(std.c).max()) if std.c.size else 1.0)
    if np.any(z < -opts.audit_tol * scale_b):
        raise NumericalFailure("final basic solution is infeasible")
    z = np.maximum(z, 0.0)
    if np.any(np.abs(a_k @ z - b_k) > opts.audit_tol * scale_b):
        raise NumericalFailure("final primal residual exceeds tolerance")
    red = std.c - a_k.T @ duals_std
    if np.any(red < -max(1e2 * opts.opt_tol, 10 * opts.audit_tol) * scale_c):
        raise NumericalFailure("final basis is not dual feasible")
    primal_std = float(std.c @ z)
    dual_std = float(duals_std @ b_k)
    if abs(primal_std - dual_std) > 1e-7 * max(1.0, abs(primal_std)):
        raise NumericalFailure("primal and dual objective values disagree")

    y_vars = z * std.col_scale
    x = std.x_offset + std.x_map @ y_vars
    sign = -1.0 if lp.sense is Sense.MAX else 1.0
    full_duals = np.zeros(m)
    full_duals[rows] = duals_std
    user = full_duals[:std.n_user_rows] * std.row_scale[:std.n_user_rows] * std.row_sign[:std.n_user_rows]
    duals = sign * user
    value = float(lp.objective @ x)

    # audit against the caller's formulation
    scale = max(1.0, float(np.abs(lp.rhs).max()) if lp.n_rows else 1.0, float(np.abs(x).max()) if n else 1.0)
    tol = 10 * opts.audit_tol * scale
    if n and (np.any(x < lp.lower - tol) or np.any(x > lp.upper + tol)):
        raise NumericalFailure("solution violates variable bounds")
    if lp.n_rows:
        act = lp.matrix @ x
        viol = np.where(
            np.array([r is Relation.LE for r in lp.relations]), act - lp.rhs,
            np.where(np.array([r is Relation.GE for r in lp.relations]), lp.rhs - act, np.abs(act - lp.rhs)),
        )
        if np.any(viol > tol):
            raise NumericalFailure(f"row residual {viol.max():.3e} exceeds tolerance")
    return LPSolution(LPStatus.OPTIMAL, x, duals, value, iterations + tab.iterations)
