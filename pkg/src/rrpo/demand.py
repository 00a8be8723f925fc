"""Linear, semi-log and log-log demand models.

All three families share one exponent per product,

    e_i(x, u) = alpha_i - beta_i * x_i + sum_{j != i} gamma_ij * x_j,

where ``x = p`` for the linear and semi-log families and ``x = log p`` for
log-log.  Linear demand is ``e_i`` itself; the other two use ``exp(e_i)``.
Revenue is always ``sum_i p_i * d_i``.

The parameter vector is flattened as ``[alpha (I), beta (I), gamma off-diagonal
row-major (I*(I-1))]`` so ``d = I + I**2``.  Every flattened coordinate belongs
to exactly one product's exponent, which the worst-case oracles exploit.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import CapExceeded, DimensionMismatch, NonpositivePrice


class DemandFamily(str, enum.Enum):
    LINEAR = "linear"
    SEMILOG = "semilog"
    LOGLOG = "loglog"

    @classmethod
    def parse(cls, value: "str | DemandFamily") -> "DemandFamily":
        if isinstance(value, DemandFamily):
            return value
        try:
            return cls(str(value).lower().replace("-", "").replace("_", ""))
        except ValueError:
            raise ValueError(f"unknown demand family {value!r}") from None


@lru_cache(maxsize=64)
def _offdiag(n_products: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = zip(*[(i, j) for i in range(n_products) for j in range(n_products) if i != j]) if n_products > 1 else ((), ())
    return np.asarray(rows, dtype=np.intp), np.asarray(cols, dtype=np.intp)


def param_dim(n_products: int) -> int:
    return n_products + n_products**2


@lru_cache(maxsize=64)
def coordinate_owner(n_products: int) -> np.ndarray:
    """Product index whose exponent each flattened coordinate enters."""
    rows, _ = _offdiag(n_products)
    idx = np.arange(n_products)
    owner = np.concatenate([idx, idx, rows])
    owner.setflags(write=False)
    return owner


@lru_cache(maxsize=64)
def coordinate_names(n_products: int) -> tuple[str, ...]:
    rows, cols = _offdiag(n_products)
    names = [f"alpha[{i}]" for i in range(n_products)]
    names += [f"beta[{i}]" for i in range(n_products)]
    names += [f"gamma[{i},{j}]" for i, j in zip(rows, cols)]
    return tuple(names)


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Demand parameters (alpha, beta, gamma); gamma has an exactly-zero diagonal."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        beta = np.array(self.beta, dtype=float).reshape(-1)
        n = alpha.size
        gamma = np.zeros((n, n)) if self.gamma is None else np.array(self.gamma, dtype=float)
        if beta.size != n or gamma.shape != (n, n):
            raise DimensionMismatch(
                f"alpha has {n} entries but beta has {beta.size} and gamma has shape {gamma.shape}"
            )
        if n and np.any(np.diag(gamma) != 0.0):
            raise DimensionMismatch("gamma diagonal must be exactly zero")
        for arr in (alpha, beta, gamma):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n_products(self) -> int:
        return self.alpha.size

    @property
    def dim(self) -> int:
        return param_dim(self.n_products)

    def flatten(self) -> np.ndarray:
        rows, cols = _offdiag(self.n_products)
        return np.concatenate([self.alpha, self.beta, self.gamma[rows, cols]])

    @classmethod
    def from_flat(cls, vec: Sequence[float], n_products: int | None = None) -> "ParamVector":
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if n_products is None:
            n_products = int(round((-1 + np.sqrt(1 + 4 * vec.size)) / 2))
        n = n_products
        if vec.size != param_dim(n):
            raise DimensionMismatch(f"flat vector has {vec.size} entries, expected {param_dim(n)} for I={n}")
        rows, cols = _offdiag(n)
        gamma = np.zeros((n, n))
        gamma[rows, cols] = vec[2 * n:]
        return cls(vec[:n], vec[n:2 * n], gamma)

    def key(self) -> bytes:
        """Exact-equality key used to deduplicate scenario pools."""
        return self.flatten().tobytes()

    def __eq__(self, other):
        if not isinstance(other, ParamVector):
            return NotImplemented
        return self.n_products == other.n_products and np.array_equal(self.flatten(), other.flatten())

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"ParamVector(alpha={self.alpha.tolist()}, beta={self.beta.tolist()}, gamma={self.gamma.tolist()})"


@dataclass(frozen=True)
class PriceVector:
    """One price per product, stored both as grid levels and as currency values."""

    levels: tuple[int, ...]
    values: tuple[float, ...]

    @property
    def prices(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __len__(self):
        return len(self.levels)


@dataclass(frozen=True, eq=False)
class Instance:
    """A pricing instance: demand family, per-product price grids, nominal parameters."""

    family: DemandFamily
    grids: tuple[np.ndarray, ...]
    u0: ParamVector

    def __post_init__(self):
        object.__setattr__(self, "family", DemandFamily.parse(self.family))
        grids = []
        for i, g in enumerate(self.grids):
            g = np.array(g, dtype=float).reshape(-1)
            if g.size == 0:
                raise DimensionMismatch(f"price grid {i} is empty")
            if np.any(g <= 0):
                raise NonpositivePrice(f"price grid {i} has nonpositive entries")
            if np.any(np.diff(g) <= 0):
                raise ValueError(f"price grid {i} must be strictly increasing")
            g.setflags(write=False)
            grids.append(g)
        object.__setattr__(self, "grids", tuple(grids))
        if self.u0.n_products != len(grids):
            raise DimensionMismatch(f"u0 is for I={self.u0.n_products} but {len(grids)} grids were given")

    @property
    def n_products(self) -> int:
        return len(self.grids)

    @property
    def dim(self) -> int:
        return param_dim(self.n_products)

    @property
    def grid_sizes(self) -> tuple[int, ...]:
        return tuple(g.size for g in self.grids)

    @property
    def n_price_vectors(self) -> int:
        return int(np.prod([g.size for g in self.grids], dtype=object))

    def price_vector(self, levels: Sequence[int]) -> PriceVector:
        levels = tuple(int(l) for l in levels)
        if len(levels) != self.n_products:
            raise DimensionMismatch(f"expected {self.n_products} levels, got {len(levels)}")
        for i, l in enumerate(levels):
            if not 0 <= l < self.grids[i].size:
                raise IndexError(f"level {l} out of range for product {i}")
        return PriceVector(levels, tuple(float(self.grids[i][l]) for i, l in enumerate(levels)))

    def prices_of(self, levels: np.ndarray) -> np.ndarray:
        """Map an (n, I) integer level array to an (n, I) price array."""
        levels = np.asarray(levels, dtype=np.intp)
        out = np.empty(levels.shape, dtype=float)
        for i, g in enumerate(self.grids):
            out[..., i] = g[levels[..., i]]
        return out

    def levels_of(self, prices: Sequence[float], atol: float = 1e-9) -> tuple[int, ...]:
        """Inverse of ``prices_of`` for one vector; raises if a price is off-grid."""
        prices = np.asarray(prices, dtype=float).reshape(-1)
        if prices.size != self.n_products:
            raise DimensionMismatch(f"expected {self.n_products} prices, got {prices.size}")
        levels = []
        for i, (g, v) in enumerate(zip(self.grids, prices)):
            hit = np.flatnonzero(np.abs(g - v) <= atol * max(1.0, abs(v)))
            if hit.size == 0:
                raise ValueError(f"price {v} is not on the grid of product {i}")
            levels.append(int(hit[0]))
        return tuple(levels)

    def iter_level_chunks(self, cap: int, chunk: int = 65536) -> Iterator[np.ndarray]:
        """All level vectors in lexicographic order (last product fastest), in chunks."""
        total = self.n_price_vectors
        if total > cap:
            raise CapExceeded("price-vector enumeration", total, cap)
        shape = self.grid_sizes
        for start in range(0, total, chunk):
            flat = np.arange(start, min(start + chunk, total))
            yield np.stack(np.unravel_index(flat, shape), axis=1)

    def extreme_levels(self) -> np.ndarray:
        """Level vectors with each product at its lowest or highest price, lexicographic."""
        choices = [sorted({0, g.size - 1}) for g in self.grids]
        return np.array(list(itertools.product(*choices)), dtype=np.intp).reshape(-1, self.n_products)

    def with_u0(self, u0: ParamVector) -> "Instance":
        return Instance(self.family, self.grids, u0)


# ---------------------------------------------------------------------------
# vectorized evaluation


def _check_u(instance: Instance, u: ParamVector) -> None:
    if u.n_products != instance.n_products:
        raise DimensionMismatch(f"parameter vector is for I={u.n_products}, instance has I={instance.n_products}")


def price_features(family: DemandFamily, prices: np.ndarray) -> np.ndarray:
    """The regressor ``x`` entering the exponent: prices, or log prices for log-log."""
    prices = np.asarray(prices, dtype=float)
    if family is DemandFamily.LOGLOG:
        if np.any(prices <= 0):
            raise NonpositivePrice("log-log demand needs strictly positive prices")
        return np.log(prices)
    return prices


def exponents(family: DemandFamily, prices: np.ndarray, u: ParamVector) -> np.ndarray:
    """``e_i`` for each row of an (n, I) price array."""
    x = price_features(family, prices)
    return u.alpha - u.beta * x + x @ u.gamma.T


def demands(family: DemandFamily, prices: np.ndarray, u: ParamVector) -> np.ndarray:
    e = exponents(family, prices, u)
    return e if family is DemandFamily.LINEAR else np.exp(e)


def revenues(family: DemandFamily, prices: np.ndarray, u: ParamVector) -> np.ndarray:
    """Revenue of every row of an (n, I) price array under one parameter vector."""
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    return np.einsum("ni,ni->n", prices, demands(family, prices, u))


def feature_matrix(family: DemandFamily, prices: np.ndarray) -> np.ndarray:
    """d/du of the owning exponent for every coordinate: 1 for alpha, -x_i for beta, x_j for gamma."""
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    x = price_features(family, prices)
    n_products = prices.shape[1]
    _, cols = _offdiag(n_products)
    return np.concatenate([np.ones_like(x), -x, x[:, cols]], axis=1)


def revenue_gradients(family: DemandFamily, prices: np.ndarray, u: ParamVector) -> np.ndarray:
    """(n, d) gradients of R(p, .) at u, one row per price vector."""
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    weight = prices if family is DemandFamily.LINEAR else prices * np.exp(exponents(family, prices, u))
    owner = coordinate_owner(prices.shape[1])
    return weight[:, owner] * feature_matrix(family, prices)


def revenue_table(family: DemandFamily, prices: np.ndarray, params: np.ndarray, block: int = 2048) -> np.ndarray:
    """(n, m) matrix of R(p, u) for n price vectors and m flattened parameter rows."""
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    params = np.atleast_2d(np.asarray(params, dtype=float))
    n, n_products = prices.shape
    if params.shape[1] != param_dim(n_products):
        raise DimensionMismatch(f"parameter rows have {params.shape[1]} entries, expected {param_dim(n_products)}")
    x = price_features(family, prices)
    rows, cols = _offdiag(n_products)
    out = np.empty((n, params.shape[0]))
    for start in range(0, params.shape[0], block):
        chunk = params[start:start + block]
        m = chunk.shape[0]
        gamma = np.zeros((m, n_products, n_products))
        gamma[:, rows, cols] = chunk[:, 2 * n_products:]
        alpha = chunk[:, :n_products]
        beta = chunk[:, n_products:2 * n_products]
        e = alpha[None] - beta[None] * x[:, None, :] + np.einsum("mij,nj->nmi", gamma, x)
        d = e if family is DemandFamily.LINEAR else np.exp(e)
        out[:, start:start + m] = np.einsum("ni,nmi->nm", prices, d)
    return out


# ---------------------------------------------------------------------------
# single-vector API


def _as_prices(instance: Instance, p) -> np.ndarray:
    prices = p.prices if isinstance(p, PriceVector) else np.asarray(p, dtype=float).reshape(-1)
    if prices.size != instance.n_products:
        raise DimensionMismatch(f"price vector has {prices.size} entries, instance has I={instance.n_products}")
    return prices


def demand(instance: Instance, p, u: ParamVector) -> np.ndarray:
    """Per-product demand ``d_i(p, u)``.  Linear demand is not clamped at zero."""
    _check_u(instance, u)
    return demands(instance.family, _as_prices(instance, p)[None, :], u)[0]


def revenue(instance: Instance, p, u: ParamVector) -> float:
    _check_u(instance, u)
    prices = _as_prices(instance, p)
    return float(prices @ demands(instance.family, prices[None, :], u)[0])


def revenue_gradient_u(instance: Instance, p, u: ParamVector) -> np.ndarray:
    """Gradient of ``R(p, .)`` at ``u`` in flattened coordinate order."""
    _check_u(instance, u)
    return revenue_gradients(instance.family, _as_prices(instance, p)[None, :], u)[0]
