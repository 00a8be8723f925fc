"""Uncertainty sets over the flattened demand parameter vector.

Three kinds are supported:

* ``L1Set``: relative-deviation ball ``sum_k |u_k - u0_k| / |u0_k| <= theta``.
  Coordinates whose nominal value is exactly zero cannot be rescaled, so they
  are frozen at zero.
* ``DiscreteBudgetSet``: at most ``gamma_budget`` coordinates move from the
  nominal value to their high or low value.
* ``ExplicitSet``: a finite list of parameter vectors.  Each member may carry its
  own demand family, which lets one scenario be linear and another log-log.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .demand import DemandFamily, ParamVector
from .errors import CapExceeded, DimensionMismatch, EmptyInput
from .lp import LinearProgram, Relation, Sense

DEFAULT_TOL = 1e-9
DEFAULT_MEMBER_CAP = 1_000_000


def _check_dim(expected: int, u: ParamVector) -> None:
    if u.dim != expected:
        raise DimensionMismatch(f"parameter vector has dimension {u.dim}, set expects {expected}")


@dataclass(frozen=True, eq=False)
class L1Set:
    theta: float
    u0: ParamVector

    def __post_init__(self):
        if not self.theta >= 0:
            raise ValueError(f"theta must be nonnegative, got {self.theta}")
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def dim(self) -> int:
        return self.u0.dim

    @property
    def center(self) -> np.ndarray:
        return self.u0.flatten()

    @property
    def free_mask(self) -> np.ndarray:
        """Coordinates allowed to deviate (nonzero nominal value)."""
        return self.center != 0.0

    def relative_deviation(self, u: ParamVector) -> np.ndarray:
        """``(u_k - u0_k) / u0_k`` on free coordinates, 0 on frozen ones."""
        _check_dim(self.dim, u)
        c = self.center
        free = self.free_mask
        out = np.zeros(self.dim)
        out[free] = (u.flatten()[free] - c[free]) / c[free]
        return out

    def coordinate_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Box implied by the ball: ``u0_k * (1 -/+ theta)`` ordered low to high."""
        c = self.center
        a, b = c * (1 - self.theta), c * (1 + self.theta)
        return np.minimum(a, b), np.maximum(a, b)


@dataclass(frozen=True, eq=False)
class DiscreteBudgetSet:
    gamma_budget: int
    u0: ParamVector
    u_hi: ParamVector
    u_lo: ParamVector

    def __post_init__(self):
        if int(self.gamma_budget) != self.gamma_budget or self.gamma_budget < 0:
            raise ValueError(f"gamma_budget must be a nonnegative integer, got {self.gamma_budget}")
        object.__setattr__(self, "gamma_budget", int(self.gamma_budget))
        for u in (self.u_hi, self.u_lo):
            _check_dim(self.u0.dim, u)

    @classmethod
    def from_multipliers(cls, gamma_budget: int, u0: ParamVector,
                         hi: tuple[float, float, float], lo: tuple[float, float, float]) -> "DiscreteBudgetSet":
        """Bounds as multiples of the nominal value, per block (alpha, beta, gamma)."""
        n = u0.n_products
        c = u0.flatten()

        def scaled(mult):
            m = np.concatenate([np.full(n, mult[0]), np.full(n, mult[1]), np.full(n * n - n, mult[2])])
            return ParamVector.from_flat(c * m, n)

        return cls(gamma_budget, u0, scaled(hi), scaled(lo))

    @property
    def dim(self) -> int:
        return self.u0.dim

    @property
    def cardinality(self) -> int:
        d = self.dim
        return sum(math.comb(d, k) * 2**k for k in range(min(self.gamma_budget, d) + 1))


@dataclass(frozen=True, eq=False)
class ExplicitSet:
    members: tuple[ParamVector, ...]
    families: tuple[DemandFamily, ...] | None = None

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise EmptyInput("explicit uncertainty set needs at least one member")
        for u in members[1:]:
            _check_dim(members[0].dim, u)
        object.__setattr__(self, "members", members)
        if self.families is not None:
            fams = tuple(DemandFamily.parse(f) for f in self.families)
            if len(fams) != len(members):
                raise DimensionMismatch("one family per member is required")
            object.__setattr__(self, "families", fams)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @property
    def cardinality(self) -> int:
        return len(self.members)

    def family_of(self, k: int, default: DemandFamily) -> DemandFamily:
        return default if self.families is None else self.families[k]


UncertaintySet = Union[L1Set, DiscreteBudgetSet, ExplicitSet]
FiniteSet = Union[DiscreteBudgetSet, ExplicitSet]


def contains(uset: UncertaintySet, u: ParamVector, tol: float = DEFAULT_TOL) -> bool:
    _check_dim(uset.dim, u)
    if isinstance(uset, L1Set):
        v = u.flatten()
        free = uset.free_mask
        if np.any(np.abs(v[~free]) > tol):
            return False
        return float(np.abs(uset.relative_deviation(u)).sum()) <= uset.theta + tol
    if isinstance(uset, DiscreteBudgetSet):
        v = u.flatten()
        c, hi, lo = uset.u0.flatten(), uset.u_hi.flatten(), uset.u_lo.flatten()
        at_nominal = np.abs(v - c) <= tol
        at_bound = (np.abs(v - hi) <= tol) | (np.abs(v - lo) <= tol)
        if not np.all(at_nominal | at_bound):
            return False
        return int(np.count_nonzero(~at_nominal)) <= uset.gamma_budget
    return any(np.all(np.abs(m.flatten() - u.flatten()) <= tol) for m in uset.members)


def budget_members_array(uset: DiscreteBudgetSet, cap: int = DEFAULT_MEMBER_CAP) -> np.ndarray:
    """Members of a budget set as an (m, d) array in canonical order.

    Order: number of moved coordinates, then lexicographic positions, then at
    each position the high value before the low value.
    """
    total = uset.cardinality
    if total > cap:
        raise CapExceeded("budget-set enumeration", total, cap)
    d = uset.dim
    c, hi, lo = uset.u0.flatten(), uset.u_hi.flatten(), uset.u_lo.flatten()
    out = np.empty((total, d))
    row = 0
    for k in range(min(uset.gamma_budget, d) + 1):
        if k == 0:
            out[row] = c
            row += 1
            continue
        pos = np.array(list(itertools.combinations(range(d), k)), dtype=np.intp)
        # choice bit 0 -> high value, 1 -> low value; product order keeps high first
        choice = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.intp)
        n_blocks = pos.shape[0] * choice.shape[0]
        block = np.broadcast_to(c, (n_blocks, d)).copy()
        p_rep = np.repeat(pos, choice.shape[0], axis=0)
        c_rep = np.tile(choice, (pos.shape[0], 1))
        vals = np.where(c_rep == 0, hi[p_rep], lo[p_rep])
        np.put_along_axis(block, p_rep, vals, axis=1)
        out[row:row + n_blocks] = block
        row += n_blocks
    return out


def members_array(uset: FiniteSet, cap: int = DEFAULT_MEMBER_CAP) -> np.ndarray:
    if isinstance(uset, DiscreteBudgetSet):
        return budget_members_array(uset, cap)
    if isinstance(uset, ExplicitSet):
        if len(uset.members) > cap:
            raise CapExceeded("explicit-set enumeration", len(uset.members), cap)
        return np.array([m.flatten() for m in uset.members])
    raise TypeError(f"cannot enumerate {type(uset).__name__}")


def enumerate_discrete(uset: FiniteSet, cap: int = DEFAULT_MEMBER_CAP) -> list[ParamVector]:
    if isinstance(uset, ExplicitSet):
        if len(uset.members) > cap:
            raise CapExceeded("explicit-set enumeration", len(uset.members), cap)
        return list(uset.members)
    n = uset.u0.n_products
    return [ParamVector.from_flat(row, n) for row in budget_members_array(uset, cap)]


def linear_min_over_l1(uset: L1Set, grad: Sequence[float]) -> tuple[ParamVector, float]:
    """Minimize ``grad . (u - u0)`` over the ball; returns the minimizer and the minimum."""
    g = np.asarray(grad, dtype=float).reshape(-1)
    if g.size != uset.dim:
        raise DimensionMismatch(f"gradient has {g.size} entries, set has dimension {uset.dim}")
    c = uset.center
    sens = np.where(uset.free_mask, g * c, 0.0)
    k = int(np.argmax(np.abs(sens)))
    top = abs(sens[k])
    if uset.theta == 0.0 or top == 0.0:
        return uset.u0, 0.0
    u = c.copy()
    u[k] = c[k] * (1.0 - uset.theta * np.sign(sens[k]))
    return ParamVector.from_flat(u, uset.u0.n_products), -uset.theta * top


@dataclass(frozen=True, eq=False)
class LinearConstraintBlock:
    """Rows and bounds over variables ``[u_0..u_{d-1}, s_0..s_{d-1}]``.

    ``s_k`` bounds the absolute relative deviation of ``u_k``.  Each row is
    scaled by ``1/|u0_k|`` so coefficients stay of order one.  The ``u``
    variables carry the lower bound implied by the ball, which keeps them from
    being treated as free by the LP kernel.
    """

    matrix: np.ndarray
    relations: tuple[Relation, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    dim: int

    @property
    def n_vars(self) -> int:
        return 2 * self.dim

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def as_lp(self, sense: Sense, objective: Sequence[float]) -> LinearProgram:
        return LinearProgram(sense, objective, self.matrix, self.relations, self.rhs, self.lower, self.upper)


def l1_as_linear_constraints(uset: L1Set) -> LinearConstraintBlock:
    d = uset.dim
    c = uset.center
    free = uset.free_mask
    rows, rel, rhs = [], [], []
    for k in range(d):
        if not free[k]:
            continue
        inv = 1.0 / c[k]
        # s_k >= (u_k - u0_k)/u0_k   and   s_k >= -(u_k - u0_k)/u0_k
        r1 = np.zeros(2 * d); r1[d + k] = 1.0; r1[k] = -inv
        r2 = np.zeros(2 * d); r2[d + k] = 1.0; r2[k] = inv
        rows += [r1, r2]; rel += [Relation.GE, Relation.GE]; rhs += [-1.0, 1.0]
    budget = np.zeros(2 * d); budget[d:] = 1.0
    rows.append(budget); rel.append(Relation.LE); rhs.append(uset.theta)
    for k in np.flatnonzero(~free):
        pin = np.zeros(2 * d); pin[k] = 1.0
        rows.append(pin); rel.append(Relation.EQ); rhs.append(0.0)
    lo_box, _ = uset.coordinate_bounds()
    lower = np.concatenate([np.where(free, lo_box, -np.inf), np.zeros(d)])
    upper = np.concatenate([np.full(d, np.inf), np.where(free, np.inf, 0.0)])
    return LinearConstraintBlock(np.array(rows), tuple(rel), np.array(rhs), lower, upper, d)
