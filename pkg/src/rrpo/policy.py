"""Finitely supported distributions over price vectors and over parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .demand import Instance, ParamVector, PriceVector
from .errors import EmptyInput

PROB_TOL = 1e-9


@dataclass(frozen=True)
class RandomizedPolicy:
    support: tuple[tuple[PriceVector, float], ...]

    def __post_init__(self):
        support = tuple((p, float(w)) for p, w in self.support)
        if not support:
            raise EmptyInput("policy needs at least one price vector")
        probs = np.array([w for _, w in support])
        if np.any(probs < 0):
            raise ValueError("policy probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"policy probabilities sum to {probs.sum()!r}, not 1")
        levels = [p.levels for p, _ in support]
        if len(set(levels)) != len(levels):
            raise ValueError("policy support contains a repeated price vector")
        object.__setattr__(self, "support", support)

    @classmethod
    def point_mass(cls, p: PriceVector) -> "RandomizedPolicy":
        return cls(((p, 1.0),))

    @classmethod
    def from_levels(cls, instance: Instance, levels: Sequence[Sequence[int]], weights: Sequence[float],
                    drop_below: float = 0.0) -> "RandomizedPolicy":
        """Merge duplicate level vectors, drop tiny weights, renormalize, sort lexicographically."""
        acc: dict[tuple[int, ...], float] = {}
        for lv, w in zip(levels, weights):
            key = tuple(int(x) for x in lv)
            acc[key] = acc.get(key, 0.0) + max(float(w), 0.0)
        total = sum(acc.values())
        if total <= 0:
            raise EmptyInput("all policy weights are zero")
        kept = {k: w for k, w in acc.items() if w / total > drop_below}
        total = sum(kept.values())
        return cls(tuple((instance.price_vector(k), w / total) for k, w in sorted(kept.items())))

    @property
    def probs(self) -> np.ndarray:
        return np.array([w for _, w in self.support])

    @property
    def prices(self) -> np.ndarray:
        return np.array([p.values for p, _ in self.support], dtype=float)

    @property
    def levels(self) -> np.ndarray:
        return np.array([p.levels for p, _ in self.support], dtype=np.intp)

    def __len__(self):
        return len(self.support)


@dataclass(frozen=True)
class DualDistribution:
    """Distribution over parameter vectors (the adversary's mixed strategy)."""

    support: tuple[tuple[ParamVector, float], ...]

    def __post_init__(self):
        support = tuple((u, float(w)) for u, w in self.support)
        if not support:
            raise EmptyInput("dual distribution needs at least one parameter vector")
        weights = np.array([w for _, w in support])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > PROB_TOL:
            raise ValueError("dual weights must be nonnegative and sum to 1")
        object.__setattr__(self, "support", support)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.support])

    @property
    def params(self) -> list[ParamVector]:
        return [u for u, _ in self.support]


class DRPOResult(NamedTuple):
    """Deterministic robust optimum: price vector, its worst-case revenue, and the worst parameters."""

    p_dr: PriceVector
    z_dr: float
    u_wc: ParamVector
    certified: bool
