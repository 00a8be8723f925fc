"""Seeded random instances for the synthetic experiments.

The generator is SplitMix64, written out here so instances are reproducible
across languages: every draw is one 64-bit output mapped to ``[0, 1)`` by its
top 53 bits.  Parameters are drawn alpha first, then beta, then gamma
row-major skipping the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .demand import DemandFamily, Instance, ParamVector

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """64-bit SplitMix generator (Steele, Lea and Flood)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def split(self) -> "SplitMix64":
        """Independent child stream seeded from the next output."""
        return SplitMix64(self.next_u64())


Range = tuple[float, float]

# (alpha, beta, gamma) uniform ranges
CONVEX_RANGES: dict[DemandFamily, tuple[Range, Range, Range]] = {
    DemandFamily.LINEAR: ((200.0, 300.0), (5.0, 15.0), (-0.1, 0.1)),
    DemandFamily.SEMILOG: ((4.0, 7.0), (1.0, 1.5), (-0.4, 0.4)),
    DemandFamily.LOGLOG: ((10.0, 14.0), (1.0, 2.0), (-0.6, 0.6)),
}
DISCRETE_RANGES: dict[DemandFamily, tuple[Range, Range, Range]] = {
    DemandFamily.LINEAR: ((100.0, 200.0), (5.0, 15.0), (-0.1, 0.1)),
    DemandFamily.SEMILOG: ((8.0, 10.0), (1.5, 2.0), (-0.5, 0.5)),
    DemandFamily.LOGLOG: ((10.0, 14.0), (1.5, 2.0), (-0.8, 0.8)),
}
PRESETS = {"convex": CONVEX_RANGES, "discrete": DISCRETE_RANGES}
DEFAULT_GRID = (1.0, 2.0, 3.0, 4.0, 5.0)
BUDGET_HI = (1.3, 1.3, 1.3)
BUDGET_LO = (0.7, 0.7, 0.7)


@dataclass(frozen=True)
class GenerationSpec:
    family: DemandFamily
    n_products: int
    seed: int
    alpha_range: Range
    beta_range: Range
    gamma_range: Range
    grids: tuple[tuple[float, ...], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "family", DemandFamily.parse(self.family))
        if self.n_products < 1:
            raise ValueError("n_products must be at least 1")
        for name in ("alpha_range", "beta_range", "gamma_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} has lo > hi: {(lo, hi)}")
        if not self.grids:
            object.__setattr__(self, "grids", (DEFAULT_GRID,) * self.n_products)
        elif len(self.grids) != self.n_products:
            raise ValueError(f"{len(self.grids)} grids given for {self.n_products} products")

    @classmethod
    def preset(cls, family, n_products: int, seed: int, kind: str = "convex") -> "GenerationSpec":
        """Default ranges of the synthetic experiments; ``kind`` is ``convex`` or ``discrete``."""
        fam = DemandFamily.parse(family)
        a, b, g = PRESETS[kind][fam]
        return cls(fam, n_products, seed, a, b, g)

    def with_seed(self, seed: int) -> "GenerationSpec":
        return replace(self, seed=seed)


def generate_instance(spec: GenerationSpec) -> Instance:
    rng = SplitMix64(spec.seed)
    n = spec.n_products
    alpha = [rng.uniform(*spec.alpha_range) for _ in range(n)]
    beta = [rng.uniform(*spec.beta_range) for _ in range(n)]
    gamma = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                gamma[i, j] = rng.uniform(*spec.gamma_range)
    grids = tuple(np.array(g, dtype=float) for g in spec.grids)
    return Instance(spec.family, grids, ParamVector(alpha, beta, gamma))
