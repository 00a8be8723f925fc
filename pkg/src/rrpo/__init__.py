"""Randomized robust price optimization over finite price grids."""

from .analysis import (
    MetricsRow,
    ProofnessReport,
    Verdict,
    check_corollary2,
    check_proofness_conditions,
    compute_metrics,
    minimax_gap,
    solve_nominal,
)
from .convex import ConvexSolveReport, solve_drpo_convex, solve_rrpo_convex
from .demand import DemandFamily, Instance, ParamVector, PriceVector, demand, revenue, revenue_gradient_u
from .discrete import (
    DoubleCGReport,
    drpo_discrete,
    dual_cg,
    full_matrix_lp_oracle,
    primal_cg,
    solve_double_cg,
    solve_matrix_game,
)
from .files import evaluate_policy, load_orange_juice, read_instance, read_policy, write_instance, write_policy
from .generate import GenerationSpec, SplitMix64, generate_instance
from .lp import LinearProgram, LPSolution, LPStatus, Relation, Sense, solve_lp
from .oracles import (
    PricingMethod,
    ScenarioMethod,
    logsumexp_biconjugate,
    mixture_price_opt,
    nominal_price_opt,
    point_mass_worst_case_l1,
    worst_case_convex,
    worst_case_discrete,
)
from .policy import DRPOResult, DualDistribution, RandomizedPolicy
from .uncertainty import DiscreteBudgetSet, ExplicitSet, L1Set, contains, enumerate_discrete

__version__ = "0.1.0"
