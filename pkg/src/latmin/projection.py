"""Euclidean projection onto the non-increasing box [0,1]^{m}_down.

The feasible set of the relaxed problem is, per chain, the set of
non-increasing vectors with entries in [0,1].  Projection decomposes
chain-wise; each chain is an isotonic regression with a box constraint.
Because every coordinate shares the same bounds, clipping the
unconstrained isotonic fit to [0,1] is exact, so the whole thing is
pool-adjacent-violators plus a clip: O(m), no QP solver.
"""

from __future__ import annotations

import numpy as np

from .extension import Profile

CLAMP_TOL = 1e-12


def _pava_nonincreasing(v: np.ndarray) -> np.ndarray:
    """Least-squares non-increasing fit by pooling adjacent violators."""
    means: list[float] = []
    counts: list[int] = []
    for x in v:
        means.append(float(x))
        counts.append(1)
        while len(means) > 1 and means[-2] < means[-1]:
            m2, c2 = means.pop(), counts.pop()
            m1, c1 = means.pop(), counts.pop()
            means.append((m1 * c1 + m2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    return np.repeat(means, counts)


def project_monotone_box(v) -> np.ndarray:
    """Closest non-increasing vector with entries in [0,1], in the l2 sense.

    The minimizer is unique; output feasibility is enforced bit-exactly
    (round-off from the pooling averages is clamped away).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("projection input must be a non-empty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("projection input has non-finite entries")
    out = np.clip(_pava_nonincreasing(v), 0.0, 1.0)
    # Pooling computes block means in float; re-impose monotonicity exactly.
    np.minimum.accumulate(out, out=out)
    return out


def project_product(parts, space=None) -> Profile:
    """Chain-wise projection of profile-shaped vectors onto the feasible set."""
    if space is not None and len(parts) != space.n_chains:
        raise ValueError(
            f"expected {space.n_chains} chain vectors, got {len(parts)}"
        )
    projected = []
    for i, p in enumerate(parts):
        p = np.asarray(p, dtype=float)
        if space is not None and p.size != space.dims[i] - 1:
            raise ValueError(
                f"chain {i}: expected length {space.dims[i] - 1}, got {p.size}"
            )
        projected.append(project_monotone_box(p))
    return Profile(projected)
