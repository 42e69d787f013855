"""Chain-product lattices, cost oracles, and exact ground-truth tools.

A chain product is a finite lattice X = X_0 x ... x X_{N-1} where each
X_i = {0, ..., m_i - 1} is totally ordered.  Points are plain tuples of
ints.  Everything here is exhaustive and exact: it is the reference
machinery the fast solvers are tested against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

BRUTE_FORCE_CAP = 10**6

# Cross-differences this close to zero (from below the strictness side) are
# treated as zero: composed float costs accumulate round-off.
DEFAULT_STRICTNESS_TOL = 1e-9


class CapExceededError(ValueError):
    """Raised when an exhaustive operation would enumerate too many points."""


@dataclass(frozen=True)
class ChainProduct:
    """A product of integer chains, given by the size of each chain."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(m) for m in self.dims)
        if len(dims) == 0:
            raise ValueError("empty product: need at least one chain")
        for i, m in enumerate(dims):
            if m < 2:
                raise ValueError(
                    f"chain {i} has size {m}; every chain needs at least 2 elements"
                )
        object.__setattr__(self, "dims", dims)

    @property
    def n_chains(self) -> int:
        return len(self.dims)

    @property
    def cardinality(self) -> int:
        return math.prod(self.dims)

    @property
    def sort_length(self) -> int:
        """Number of free profile coordinates: sum(m_i) - N."""
        return sum(self.dims) - len(self.dims)

    @property
    def exceeds_cap(self) -> bool:
        return self.cardinality > BRUTE_FORCE_CAP

    def bottom(self) -> tuple[int, ...]:
        return (0,) * self.n_chains

    def top(self) -> tuple[int, ...]:
        return tuple(m - 1 for m in self.dims)

    def contains(self, point: Sequence[int]) -> bool:
        return len(point) == self.n_chains and all(
            0 <= x <= m - 1 for x, m in zip(point, self.dims)
        )

    def check_point(self, point: Sequence[int]) -> tuple[int, ...]:
        point = tuple(int(x) for x in point)
        if not self.contains(point):
            raise ValueError(f"point {point} outside lattice with dims {self.dims}")
        return point

    def points(self):
        """Iterate all lattice points in row-major order."""
        return itertools.product(*(range(m) for m in self.dims))

    def _require_within_cap(self, what: str) -> None:
        if self.exceeds_cap:
            raise CapExceededError(
                f"{what} refused: {self.cardinality} points exceeds the "
                f"brute-force cap of {BRUTE_FORCE_CAP}"
            )


def make_chain_product(dims: Sequence[int]) -> ChainProduct:
    return ChainProduct(dims)


class Oracle:
    """A cost function over a chain product, with evaluation counting.

    The wrapped callable must be deterministic and finite on every lattice
    point; solvers only ever see costs through this interface.  The call
    counter is plain (not atomic): disable or guard it if you evaluate the
    same oracle from several threads.
    """

    def __init__(self, fn: Callable[[tuple[int, ...]], float], space: ChainProduct):
        self.fn = fn
        self.space = space
        self.calls = 0

    def __call__(self, point: Sequence[int]) -> float:
        self.calls += 1
        return float(self.fn(tuple(point)))

    def reset_calls(self) -> None:
        self.calls = 0


@dataclass
class SubmodularityReport:
    """Outcome of the exhaustive cross-difference sweep."""

    is_submodular: bool
    violations: list[tuple[tuple[int, ...], tuple[int, int], float]]
    points_checked: int

    def __bool__(self) -> bool:
        return self.is_submodular


def cross_difference(f: Oracle, point: Sequence[int], i: int, j: int) -> float:
    """Second difference of f at `point` along chains i and j.

    Returns [f(x+e_i+e_j) - f(x+e_j)] - [f(x+e_i) - f(x)].  f is submodular
    on its chain product iff this is <= 0 at every admissible (x, i, j).
    """
    x = f.space.check_point(point)
    n = f.space.n_chains
    if i == j:
        raise ValueError("cross difference needs two distinct chains")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"chain index out of range for {n} chains")
    dims = f.space.dims
    if x[i] + 1 > dims[i] - 1 or x[j] + 1 > dims[j] - 1:
        raise ValueError(f"unit shift along chains {i},{j} leaves the lattice at {x}")
    xi = list(x)
    xi[i] += 1
    xj = list(x)
    xj[j] += 1
    xij = list(xi)
    xij[j] += 1
    return (f(tuple(xij)) - f(tuple(xj))) - (f(tuple(xi)) - f(x))


def check_submodular(
    f: Oracle,
    space: ChainProduct | None = None,
    tol: float = DEFAULT_STRICTNESS_TOL,
) -> SubmodularityReport:
    """Exhaustively test all unit cross-differences of f.

    Each admissible (point, chain pair) is checked once; the pair order is
    irrelevant because the cross difference is symmetric in (i, j).  A
    difference above `tol` counts as a strict violation.
    """
    space = space or f.space
    space._require_within_cap("submodularity check")
    violations = []
    checked = 0
    n = space.n_chains
    for x in space.points():
        for i in range(n):
            if x[i] + 1 >= space.dims[i]:
                continue
            for j in range(i + 1, n):
                if x[j] + 1 >= space.dims[j]:
                    continue
                checked += 1
                d = cross_difference(f, x, i, j)
                if d > tol:
                    violations.append((x, (i, j), d))
    return SubmodularityReport(
        is_submodular=not violations, violations=violations, points_checked=checked
    )


def brute_force_minimize(
    f: Oracle, space: ChainProduct | None = None
) -> tuple[float, set[tuple[int, ...]]]:
    """Exact global minimum of f by full enumeration.

    Returns (minimum value, set of all minimizing points).
    """
    space = space or f.space
    space._require_within_cap("brute-force minimization")
    best = math.inf
    argmins: set[tuple[int, ...]] = set()
    for x in space.points():
        v = f(x)
        if v < best:
            best = v
            argmins = {x}
        elif v == best:
            argmins.add(x)
    return best, argmins
