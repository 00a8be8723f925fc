"""Randomization-proofness diagnostics and experiment metrics.

Sufficient conditions for proofness come from concavity of every revenue
function in the price vector.  Those conditions speak about a convex price
set, while the solvers work on a finite grid, where even concave revenues can
be randomization-receptive (two grid points and two scenarios suffice).  The
grid enters through a discretization bound: if ``R(., u)`` is concave for all
``u`` on the price box spanned by the grid, then

    Z_RR(grid) <= Z_RR(box) = Z_DR(box) <= Z_DR(grid) + sum_i L_i h_i / 2

where ``h_i`` is the widest gap in grid ``i`` and ``L_i`` bounds
``|dR/dp_i|`` over the box and the set.  A proofness verdict is issued only
when that bound is below the requested relative tolerance.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .convex import ConvexSolveReport, solve_drpo_convex
from .demand import DemandFamily, Instance, ParamVector, PriceVector
from .discrete import DoubleCGReport, payoff_matrix, solve_matrix_game_dual
from .errors import InconsistentInputs
from .oracles import (
    PricingMethod,
    ScenarioMethod,
    TIE_RTOL,
    nominal_price_opt,
    point_mass_worst_case_l1,
    policy_value,
    scenario_table,
    worst_case_discrete,
)
from .policy import DRPOResult, RandomizedPolicy
from .uncertainty import (
    DEFAULT_MEMBER_CAP,
    DiscreteBudgetSet,
    ExplicitSet,
    FiniteSet,
    L1Set,
    UncertaintySet,
    members_array,
)

DEFAULT_TOL = 1e-7
DEFAULT_GRID_RTOL = 1e-6


class Verdict(str, enum.Enum):
    PROOF_CERTIFIED = "ProofCertified"
    RECEPTIVE_CERTIFIED = "ReceptiveCertified"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class ProofnessReport:
    verdict: Verdict
    evidence: list[tuple[str, Any]] = field(default_factory=list)
    notes: str = ""

    def get(self, name: str, default=None):
        for key, value in self.evidence:
            if key == name:
                return value
        return default


# ---------------------------------------------------------------------------
# sufficient concavity conditions


def _check_points(uset: UncertaintySet, instance: Instance, cap: int):
    """Parameter rows and their families at which the conditions are evaluated.

    For an L1 ball these are the center and the ``2d`` vertices.  Every
    quantity tested below is either affine in ``u`` or a concave/convex
    function of an affine map, so its extremum over the ball sits at a vertex.
    """
    if isinstance(uset, L1Set):
        c = uset.center
        rows = [c]
        for k in np.flatnonzero(uset.free_mask):
            for sign in (1.0, -1.0):
                v = c.copy()
                v[k] = c[k] * (1.0 + sign * uset.theta)
                rows.append(v)
        return np.array(rows), [instance.family] * len(rows)
    params = members_array(uset, cap)
    if isinstance(uset, ExplicitSet) and uset.families is not None:
        return params, list(uset.families)
    return params, [instance.family] * params.shape[0]


def _split(row: np.ndarray, n: int):
    u = ParamVector.from_flat(row, n)
    return u.alpha, u.beta, u.gamma


def _concavity_matrix(beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Symmetric part of ``diag(beta) - gamma``; linear revenue is concave iff it is PSD."""
    m = np.diag(beta) - gamma
    return 0.5 * (m + m.T)


def _slope_factors(family: DemandFamily, alpha, beta, gamma, p_lo, p_hi) -> tuple[np.ndarray, np.ndarray]:
    """Two factors whose product bounds ``|dR/dp_i|`` over the price box for one parameter vector.

    Linear: the bound itself and 1.  Single-product exponential families:
    ``R' = exp(alpha - beta x(p)) (1 - beta p x'(p))``, bounded factor by factor.
    """
    if family is DemandFamily.LINEAR:
        cross = (np.abs(gamma) + np.abs(gamma.T)) @ p_hi
        return np.abs(alpha) + 2.0 * np.abs(beta) * p_hi + cross, np.ones_like(alpha)
    x_lo, x_hi = (p_lo, p_hi) if family is DemandFamily.SEMILOG else (np.log(p_lo), np.log(p_hi))
    scale = np.exp(alpha + np.maximum(-beta * x_lo, -beta * x_hi))
    if family is DemandFamily.SEMILOG:
        shape = np.maximum(np.abs(1.0 - beta * p_lo), np.abs(1.0 - beta * p_hi))
    else:
        shape = np.abs(1.0 - beta)
    return scale, shape


def _discretization_bound(instance: Instance, rows, fams) -> tuple[float, np.ndarray]:
    n = instance.n_products
    p_lo = np.array([g[0] for g in instance.grids])
    p_hi = np.array([g[-1] for g in instance.grids])
    h = np.array([np.max(np.diff(g)) if g.size > 1 else 0.0 for g in instance.grids])
    slopes = np.zeros(n)
    # per family, each factor is maximized separately; their product bounds the slope
    for fam in set(fams):
        pairs = [_slope_factors(fam, *_split(r, n), p_lo, p_hi) for r, f in zip(rows, fams) if f is fam]
        scale = np.max([a for a, _ in pairs], axis=0)
        shape = np.max([b for _, b in pairs], axis=0)
        slopes = np.maximum(slopes, scale * shape)
    return float(np.sum(slopes * h / 2.0)), slopes


def _worst_case_on_grid(instance: Instance, uset: UncertaintySet, cap: int) -> np.ndarray:
    """``min_u R(p, u)`` at every point of a single-product grid."""
    prices = instance.grids[0][:, None]
    if isinstance(uset, L1Set):
        return point_mass_worst_case_l1(instance, prices, uset)
    fams = uset.families if isinstance(uset, ExplicitSet) else None
    return scenario_table(instance, prices, members_array(uset, cap), fams).min(axis=1)


def _concave_envelope_gap(grid: np.ndarray, g: np.ndarray) -> float:
    """Bound on ``max_[a,b] g - max_grid g`` for a concave ``g`` sampled on ``grid``.

    On each cell, ``g`` lies below the secants of both neighbouring cells
    extended into it; the largest value of the lower of those two lines is an
    upper bound on ``g`` over the cell.
    """
    n = grid.size
    if n < 3:
        return float("inf")
    slope = np.diff(g) / np.diff(grid)
    a, b = grid[:-1], grid[1:]
    inf = np.full(n - 1, np.inf)
    # left line: secant of the previous cell through (a, g(a)); right line: next cell through (b, g(b))
    s1 = np.concatenate([[np.nan], slope[:-1]])
    s2 = np.concatenate([slope[1:], [np.nan]])
    y1, y2 = g[:-1], g[1:]

    def lower_line(x):
        left = np.where(np.isnan(s1), inf, y1 + np.nan_to_num(s1) * (x - a))
        right = np.where(np.isnan(s2), inf, y2 + np.nan_to_num(s2) * (x - b))
        return np.minimum(left, right)

    top = np.maximum(lower_line(a), lower_line(b))
    both = ~np.isnan(s1) & ~np.isnan(s2) & (s1 != s2)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (y2 - y1 + s1 * a - s2 * b) / (s1 - s2)
    inside = both & (x > a) & (x < b)
    top = np.where(inside, np.maximum(top, lower_line(np.where(inside, x, a))), top)
    best = float(g.max())
    return float(max(top.max(), best) - best)


def _robust_lower_bound(instance: Instance, uset: UncertaintySet, cap: int) -> float:
    """Worst-case revenue of the nominal optimal price vector: a lower bound on Z_DR."""
    p, _, _ = nominal_price_opt(instance, instance.u0, PricingMethod.enumerate())
    if isinstance(uset, L1Set):
        return float(point_mass_worst_case_l1(instance, p.prices[None, :], uset)[0])
    _, value, _ = worst_case_discrete(instance, RandomizedPolicy.point_mass(p), uset, ScenarioMethod.enumerate(cap))
    return value


def check_proofness_conditions(instance: Instance, uset: UncertaintySet, grid_rtol: float = DEFAULT_GRID_RTOL,
                               cap: int = DEFAULT_MEMBER_CAP) -> ProofnessReport:
    """Check concavity-based sufficient conditions for randomization-proofness.

    Single product: linear needs ``beta >= 0``; semi-log needs ``beta >= 0``
    and ``beta * max(P) <= 2``; log-log needs ``0 <= beta <= 1``.  Several
    linear products need the symmetrized ``diag(beta) - gamma`` to be PSD.
    Multi-product semi-log and log-log have no condition here.
    """
    n = instance.n_products
    rows, fams = _check_points(uset, instance, cap)
    evidence: list[tuple[str, Any]] = [("check_points", int(rows.shape[0]))]
    p_max = np.array([g[-1] for g in instance.grids])
    holds = True
    notes = []
    vertex_sampled = False
    fam_set = {f.value for f in fams}
    evidence.append(("families", sorted(fam_set)))

    betas = np.array([_split(r, n)[1] for r in rows])
    evidence.append(("beta_min", float(betas.min())))
    evidence.append(("beta_max", float(betas.max())))
    if betas.min() < 0:
        holds = False
        notes.append("some price sensitivity is negative")

    if n == 1:
        for fam in fam_set:
            b = np.array([_split(r, n)[1][0] for r, f in zip(rows, fams) if f.value == fam])
            if fam == DemandFamily.SEMILOG.value:
                sup_bp = float(b.max() * p_max[0])
                evidence.append(("sup_beta_p", sup_bp))
                if sup_bp > 2.0:
                    holds = False
                    notes.append("semi-log revenue is not concave on the whole price range (beta*p > 2)")
            elif fam == DemandFamily.LOGLOG.value:
                evidence.append(("beta_bound", 1.0))
                if b.max() > 1.0:
                    holds = False
                    notes.append("log-log revenue is not concave (beta > 1); the condition is only sufficient")
    else:
        if fam_set != {DemandFamily.LINEAR.value}:
            holds = False
            notes.append("no concavity condition for multi-product semi-log or log-log demand")
        else:
            eig = min(float(np.linalg.eigvalsh(_concavity_matrix(*_split(r, n)[1:])).min()) for r in rows)
            evidence.append(("min_symmetrized_eigenvalue", eig))
            vertex_sampled = True
            if eig < 0:
                holds = False
                notes.append("symmetrized concavity matrix has a negative eigenvalue")
    evidence.append(("vertex_sampled", vertex_sampled))
    if vertex_sampled:
        notes.append("the smallest eigenvalue is concave in u, so the vertex minimum covers the whole set")

    if not holds:
        return ProofnessReport(Verdict.INCONCLUSIVE, evidence, "; ".join(notes))

    bound, slopes = _discretization_bound(instance, rows, fams)
    evidence.append(("slope_bounds", slopes.tolist()))
    evidence.append(("lipschitz_bound", bound))
    if n == 1:
        # the robust revenue is concave, so secants of the sampled curve bound it between grid points
        g = _worst_case_on_grid(instance, uset, cap)
        envelope = _concave_envelope_gap(instance.grids[0], g)
        evidence.append(("envelope_bound", envelope))
        bound = min(bound, envelope)
        lower = float(g.max())
    else:
        lower = _robust_lower_bound(instance, uset, cap)
    evidence.append(("discretization_bound", bound))
    evidence.append(("z_dr_lower_bound", lower))
    allowed = grid_rtol * max(1.0, abs(lower))
    if bound > allowed:
        notes.append("concavity holds on the price box, but the grid is too coarse to inherit proofness "
                     f"(bound {bound:.3g} > {allowed:.3g})")
        return ProofnessReport(Verdict.INCONCLUSIVE, evidence, "; ".join(notes))
    notes.append("every revenue function is concave on the price box and the grid is fine enough")
    return ProofnessReport(Verdict.PROOF_CERTIFIED, evidence, "; ".join(notes))


# ---------------------------------------------------------------------------
# finite-price-set tests


def _lex_argmax(values: np.ndarray) -> int:
    best = values.max()
    return int(np.flatnonzero(values >= best - TIE_RTOL * max(1.0, abs(best)))[0])


def check_corollary2(instance: Instance, uset: UncertaintySet, tol: float = DEFAULT_TOL,
                     cap: int = 10_000_000) -> ProofnessReport:
    """Decide proofness from the worst case of the deterministic robust price vector.

    If ``min_u R(p_DR, u)`` has a unique minimizer ``u*``, the problem is
    receptive exactly when ``p_DR`` does not maximize ``R(., u*)``.  Uniqueness
    is only established by enumerating a finite set; over a convex set the
    same comparison is reported as a heuristic and the verdict is Inconclusive.
    """
    if isinstance(uset, L1Set):
        dr = solve_drpo_convex(instance, uset)
        p_best, v_best, _ = nominal_price_opt(instance, dr.u_wc, PricingMethod.enumerate())
        own = float(point_mass_worst_case_l1(instance, dr.p_dr.prices[None, :], uset)[0])
        in_argmax = own >= v_best - tol * max(1.0, abs(v_best))
        evidence = [("p_dr", dr.p_dr.values), ("z_dr", dr.z_dr), ("nominal_best_at_u_star", v_best),
                    ("p_dr_in_argmax_heuristic", bool(in_argmax))]
        return ProofnessReport(Verdict.INCONCLUSIVE, evidence,
                               "uniqueness of the worst case over a convex set is not certified")
    levels, params, table = payoff_matrix(instance, uset, cap)
    row_min = table.min(axis=1)
    r = _lex_argmax(row_min)
    p_dr = instance.price_vector(levels[r])
    z_dr = float(row_min[r])
    minimizers = np.flatnonzero(table[r] <= z_dr + tol * max(1.0, abs(z_dr)))
    evidence: list[tuple[str, Any]] = [("p_dr", p_dr.values), ("z_dr", z_dr),
                                       ("n_minimizers", int(minimizers.size))]
    if minimizers.size > 1:
        return ProofnessReport(Verdict.INCONCLUSIVE, evidence,
                               f"the worst case at p_dr is attained by {minimizers.size} parameter vectors; "
                               "the uniqueness requirement fails")
    col = table[:, minimizers[0]]
    best = float(col.max())
    evidence.append(("u_star", params[minimizers[0]].tolist()))
    evidence.append(("nominal_best_at_u_star", best))
    evidence.append(("revenue_p_dr_at_u_star", float(col[r])))
    if col[r] >= best - tol * max(1.0, abs(best)):
        return ProofnessReport(Verdict.PROOF_CERTIFIED, evidence,
                               "unique worst case and p_dr is optimal against it")
    return ProofnessReport(Verdict.RECEPTIVE_CERTIFIED, evidence,
                           "unique worst case and p_dr is not optimal against it")


class MinimaxGap(NamedTuple):
    maxmin: float
    minmax: float
    gap: float
    pure_minmax: float


def minimax_gap(instance: Instance, uset: FiniteSet, cap: int = 10_000_000) -> MinimaxGap:
    """Deterministic robust value against the min-max over nature's mixed strategies.

    ``maxmin = max_p min_u R`` and ``minmax = min_Q max_p E_Q R`` with ``Q`` a
    distribution on the set.  The gap is zero exactly when randomizing prices
    cannot help.  ``pure_minmax = min_u max_p R`` is reported alongside; over a
    finite set it can exceed ``minmax`` even when the gap is zero.
    """
    _, _, table = payoff_matrix(instance, uset, cap)
    maxmin = float(table.min(axis=1).max())
    minmax, _ = solve_matrix_game_dual(table)
    pure = float(table.max(axis=0).min())
    return MinimaxGap(maxmin, minmax, minmax - maxmin, pure)


# ---------------------------------------------------------------------------
# experiment metrics


class NominalResult(NamedTuple):
    p_n: PriceVector
    z_n: float
    certified: bool
    wall_time: float


def solve_nominal(instance: Instance, pricing: PricingMethod | None = None) -> NominalResult:
    t0 = time.perf_counter()
    p, z, cert = nominal_price_opt(instance, instance.u0, pricing or PricingMethod.enumerate())
    return NominalResult(p, z, cert, time.perf_counter() - t0)


@dataclass
class MetricsRow:
    I: int
    budget: float
    t_rr: float
    z_rr: float
    e_r_rr_nominal: float
    t_dr: float
    z_dr: float
    ri_percent: float
    r_dr_nominal: float
    t_n: float
    z_n: float
    z_n_wc: float
    certified: bool


def relative_improvement(z_rr: float, z_dr: float) -> float:
    """``100 (z_rr - z_dr) / z_dr``; NaN when ``z_dr <= 0``."""
    return 100.0 * (z_rr - z_dr) / z_dr if z_dr > 0 else float("nan")


def _budget_of(uset: UncertaintySet) -> float:
    if isinstance(uset, L1Set):
        return uset.theta
    if isinstance(uset, DiscreteBudgetSet):
        return float(uset.gamma_budget)
    return float("nan")


def _on_grid(instance: Instance, p: PriceVector) -> bool:
    if len(p.levels) != instance.n_products:
        return False
    return all(0 <= lv < g.size and g[lv] == v for lv, v, g in zip(p.levels, p.values, instance.grids))


def point_worst_case(instance: Instance, p: PriceVector, uset: UncertaintySet,
                     method: ScenarioMethod | None = None) -> float:
    if isinstance(uset, L1Set):
        return float(point_mass_worst_case_l1(instance, p.prices[None, :], uset)[0])
    return worst_case_discrete(instance, RandomizedPolicy.point_mass(p), uset, method)[1]


def compute_metrics(instance: Instance, uset: UncertaintySet, nominal: NominalResult, drpo: DRPOResult,
                    rrpo: ConvexSolveReport | DoubleCGReport, t_dr: float = 0.0,
                    scenario_method: ScenarioMethod | None = None, tol: float = 1e-5) -> MetricsRow:
    """Fill one results row from the nominal, deterministic robust and randomized robust solves."""
    if isinstance(rrpo, ConvexSolveReport):
        z_rr, policy = rrpo.z_rr, rrpo.policy
    else:
        z_rr, policy = rrpo.value, rrpo.policy
    for p in [nominal.p_n, drpo.p_dr] + [q for q, _ in policy.support]:
        if not _on_grid(instance, p):
            raise InconsistentInputs(f"price vector {p.values} is not on the instance grid")
    certified = bool(nominal.certified and drpo.certified and rrpo.certified)
    if certified and z_rr < drpo.z_dr - tol * max(1.0, abs(drpo.z_dr)):
        raise InconsistentInputs(f"randomized value {z_rr} below deterministic value {drpo.z_dr}; "
                                 "results come from different problems")
    e_rr = float(sum(w * policy_value(instance, RandomizedPolicy.point_mass(p), instance.u0)
                     for p, w in policy.support))
    r_dr = policy_value(instance, RandomizedPolicy.point_mass(drpo.p_dr), instance.u0)
    z_n_wc = point_worst_case(instance, nominal.p_n, uset, scenario_method)
    return MetricsRow(
        I=instance.n_products,
        budget=_budget_of(uset),
        t_rr=rrpo.wall_time,
        z_rr=z_rr,
        e_r_rr_nominal=e_rr,
        t_dr=t_dr,
        z_dr=drpo.z_dr,
        ri_percent=relative_improvement(z_rr, drpo.z_dr),
        r_dr_nominal=r_dr,
        t_n=nominal.wall_time,
        z_n=nominal.z_n,
        z_n_wc=z_n_wc,
        certified=certified,
    )
