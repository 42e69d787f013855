"""Shared test fixtures: instance generators and independent oracles."""

from __future__ import annotations

import numpy as np

from latmin import ChainProduct, Oracle


def random_table_oracle(space: ChainProduct, rng, low=-5.0, high=5.0) -> Oracle:
    """An arbitrary (generally non-submodular) cost from a frozen value table."""
    table = {x: float(v) for x, v in zip(space.points(), rng.uniform(low, high, space.cardinality))}
    return Oracle(table.__getitem__, space)


def random_submodular_fn(space: ChainProduct, rng):
    """A random submodular cost built from closure-preserving pieces.

    Mixes per-chain terms of arbitrary shape (cross differences vanish),
    pairwise separation penalties |x_i - x_j| or (x_i - x_j)^2 and
    complement couplings -a*x_i*x_j (all with non-positive cross
    differences), and a concave function of the coordinate sum.
    """
    n = space.n_chains
    per_chain = [rng.uniform(0.0, 3.0, size=m) for m in space.dims]

    pair_terms = []
    n_pairs = int(rng.integers(1, n + 1)) if n >= 2 else 0
    for _ in range(n_pairs):
        i, j = rng.choice(n, size=2, replace=False)
        kind = rng.integers(3)
        a = float(rng.uniform(0.05, 0.4))
        pair_terms.append((int(i), int(j), int(kind), a))

    concave_w = float(rng.uniform(0.0, 1.0))

    def fn(x):
        total = sum(float(per_chain[i][xi]) for i, xi in enumerate(x))
        for i, j, kind, a in pair_terms:
            if kind == 0:
                total += a * abs(x[i] - x[j])
            elif kind == 1:
                total += a * (x[i] - x[j]) ** 2
            else:
                total -= a * x[i] * x[j]
        total += concave_w * np.sqrt(1.0 + sum(x))
        return total

    return fn


def random_submodular_oracle(space: ChainProduct, rng) -> Oracle:
    return Oracle(random_submodular_fn(space, rng), space)


def random_chain_product(rng, max_chains=4, max_size=5, min_chains=2) -> ChainProduct:
    n = int(rng.integers(min_chains, max_chains + 1))
    return ChainProduct([int(m) for m in rng.integers(2, max_size + 1, size=n)])


def grid_projection_oracle(v, pitch=1e-3) -> np.ndarray:
    """Exhaustive search for the closest non-increasing [0,1] vector on a grid.

    Dynamic program over positions with the running grid level as state;
    equivalent to enumerating every feasible grid vector.  Exact for inputs
    whose true projection lies on the grid.
    """
    v = np.asarray(v, dtype=float)
    grid = np.round(np.arange(0.0, 1.0 + pitch / 2, pitch), 9)
    n_levels = grid.size
    # cost[g] = best total cost of the suffix starting at this position,
    # given the previous (left) entry sits at grid level g or above.
    best = np.zeros(n_levels)
    choice = []
    for k in range(v.size - 1, -1, -1):
        local = (grid - v[k]) ** 2 + best
        # Entry k may use any level <= its left neighbor's level; precompute
        # the best admissible suffix for each neighbor level.
        idx = np.zeros(n_levels, dtype=int)
        run_best = np.inf
        run_idx = 0
        for g in range(n_levels):
            if local[g] < run_best:
                run_best = local[g]
                run_idx = g
            best[g] = run_best
            idx[g] = run_idx
        choice.append(idx)
    choice.reverse()
    out = np.zeros(v.size)
    level = n_levels - 1
    for k in range(v.size):
        level = int(choice[k][level])
        out[k] = grid[level]
    return out
