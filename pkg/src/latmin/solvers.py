"""Projected-subgradient minimization via the continuous extension.

Centralized: iterate project(rho - gamma_k * subgrad) and round once at the
end.  Distributed: N agents each hold one term of the total cost and a local
estimate of the shared profile; every synchronous round they mix neighbor
estimates with doubly-stochastic weights, step along their own local
subgradient, and project.  All agents round at the same shared threshold so
they agree whenever the minimizer is unique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .extension import Profile, greedy_extension, theta, uniform_random_profile
from .lattice import ChainProduct, Oracle
from .projection import project_product

STOCHASTIC_TOL = 1e-9


@dataclass
class MatrixReport:
    """Pass/fail per condition on a consensus weight matrix."""

    strongly_connected: bool
    diagonal_at_least_eta: bool
    edges_at_least_eta: bool
    doubly_stochastic: bool

    @property
    def ok(self) -> bool:
        return (
            self.strongly_connected
            and self.diagonal_at_least_eta
            and self.edges_at_least_eta
            and self.doubly_stochastic
        )

    def failures(self) -> list[str]:
        out = []
        if not self.strongly_connected:
            out.append("condition 1: support graph is not strongly connected")
        if not self.diagonal_at_least_eta:
            out.append("condition 2: some self-weight is below eta")
        if not self.edges_at_least_eta:
            out.append("condition 3: some positive edge weight is below eta")
        if not self.doubly_stochastic:
            out.append("condition 4: matrix is not doubly stochastic")
        return out


def _strongly_connected(support: np.ndarray) -> bool:
    n = support.shape[0]
    for start in range(n):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(support[u]):
                if v not in seen:
                    seen.add(int(v))
                    stack.append(int(v))
        if len(seen) < n:
            return False
    return True


def validate_weight_matrix(matrix, eta: float) -> MatrixReport:
    """Check the four consensus conditions on a mixing matrix.

    1. strong connectivity of the support graph, 2. self-weights >= eta,
    3. positive neighbor weights >= eta, 4. rows and columns sum to 1.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {a.shape}")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0,1), got {eta}")
    if np.any(a < 0):
        # Negative weights break every condition's premise; report them as
        # a doubly-stochastic failure rather than a separate channel.
        return MatrixReport(False, False, False, False)
    diag = np.diag(a)
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    positive = a[a > 0]
    return MatrixReport(
        strongly_connected=_strongly_connected(off > 0),
        diagonal_at_least_eta=bool(np.all(diag >= eta)),
        edges_at_least_eta=bool(positive.size == 0 or np.all(positive >= eta)),
        doubly_stochastic=bool(
            np.all(np.abs(a.sum(axis=0) - 1.0) <= STOCHASTIC_TOL)
            and np.all(np.abs(a.sum(axis=1) - 1.0) <= STOCHASTIC_TOL)
        ),
    )


@dataclass
class WeightMatrix:
    """A consensus mixing matrix that has passed all four conditions."""

    entries: np.ndarray
    eta: float

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        report = validate_weight_matrix(self.entries, self.eta)
        if not report.ok:
            raise ValueError("invalid weight matrix: " + "; ".join(report.failures()))

    @property
    def n_agents(self) -> int:
        return self.entries.shape[0]


@dataclass
class SolverParams:
    """Iteration budget, step schedule, rounding threshold, and seed."""

    iterations: int
    gamma: float
    schedule: str = "constant"  # or "diminishing": gamma / sqrt(k)
    t_hat: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations ≥ 1 required")
        if not self.gamma > 0:
            raise ValueError("step size gamma must be positive")
        if self.schedule not in ("constant", "diminishing"):
            raise ValueError(f"unknown step schedule {self.schedule!r}")
        if not 0.0 < self.t_hat < 1.0:
            raise ValueError("rounding threshold t_hat must be strictly inside (0,1)")


def step_size(k: int, params: SolverParams) -> float:
    """Step length for round k (1-based)."""
    if k < 1:
        raise ValueError("round index starts at 1")
    if params.schedule == "constant":
        return params.gamma
    return params.gamma / math.sqrt(k)


@dataclass
class SolveTrace:
    """Per-round diagnostics; rounded values are recorded for inspection only."""

    ext_values: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    disagreement: np.ndarray = field(default_factory=lambda: np.zeros(0))
    best_rounded: np.ndarray = field(default_factory=lambda: np.zeros(0))


def mix_profiles(
    profiles: list[Profile], weights_row: np.ndarray, self_index: int
) -> list[np.ndarray]:
    """Weighted combination of agent profiles, chain by chain.

    Computed in deviation form, own profile plus weighted corrections
    toward each neighbor, which is identical for a row summing to 1 and
    keeps agreeing agents agreeing bit-exactly.
    """
    own = profiles[self_index].parts
    mixed = [p.copy() for p in own]
    for w_idx, (w, other) in enumerate(zip(weights_row, profiles)):
        if w_idx == self_index or w == 0.0:
            continue
        for c, part in enumerate(other.parts):
            mixed[c] += w * (part - own[c])
    return mixed


def _disagreement(profiles: list[Profile]) -> float:
    flats = [p.flat() for p in profiles]
    worst = 0.0
    for i in range(len(flats)):
        for j in range(i + 1, len(flats)):
            worst = max(worst, float(np.linalg.norm(flats[i] - flats[j])))
    return worst


def distributed_minimize(
    oracles: list[Oracle],
    space: ChainProduct,
    matrix: WeightMatrix,
    params: SolverParams,
    initial: list[Profile] | None = None,
):
    """Consensus projected-subgradient minimization of sum_i f_i over the lattice.

    Exactness rests on every f_i being submodular (the relaxation is convex
    and tight exactly then); the checker in `lattice` can certify that at
    desk scale.  Every agent starts from the same seeded feasible profile (any feasible
    start is admissible; a shared one makes identical-cost runs exactly
    symmetric).  Rounds are synchronous and gather-then-update: all mixing
    reads use the previous round's profiles, so execution order within a
    round cannot matter.  After the last round each agent rounds its profile
    at the shared threshold; the value reported for an agent is the *total*
    cost of its rounded point.

    Returns (points, values, trace): per-agent rounded lattice points, their
    total-cost values, and the per-round trace.
    """
    a = matrix.entries
    n_agents = len(oracles)
    if a.shape != (n_agents, n_agents):
        raise ValueError(
            f"matrix shape {a.shape} does not match {n_agents} agents"
        )

    if initial is None:
        shared = uniform_random_profile(space, params.seed)
        profiles = [shared.copy() for _ in range(n_agents)]
    else:
        if len(initial) != n_agents:
            raise ValueError("need one initial profile per agent")
        for p in initial:
            p.validate(space)
        profiles = [p.copy() for p in initial]

    def total_cost(point) -> float:
        return sum(f(point) for f in oracles)

    ext_values = np.zeros((params.iterations, n_agents))
    disagreement = np.zeros(params.iterations)
    best_rounded = np.zeros(params.iterations)
    best = math.inf

    for k in range(1, params.iterations + 1):
        gamma_k = step_size(k, params)
        new_profiles = []
        for i, f in enumerate(oracles):
            mixed = mix_profiles(profiles, a[i], i)
            res = greedy_extension(f, Profile(mixed), space)
            ext_values[k - 1, i] = res.value
            stepped = [m - gamma_k * g for m, g in zip(mixed, res.subgradient)]
            new_profiles.append(project_product(stepped, space))
        profiles = new_profiles
        disagreement[k - 1] = _disagreement(profiles)
        for p in profiles:
            best = min(best, total_cost(theta(p, params.t_hat)))
        best_rounded[k - 1] = best

    points = [theta(p, params.t_hat) for p in profiles]
    values = [total_cost(x) for x in points]
    trace = SolveTrace(ext_values=ext_values, disagreement=disagreement, best_rounded=best_rounded)
    return points, values, trace


def centralized_minimize(f: Oracle, space: ChainProduct, params: SolverParams):
    """Single-agent projected subgradient on the extension of f.

    Returns (point, value, trace) with the point rounded at t_hat after the
    final iteration.  Tight for submodular f, a heuristic otherwise.
    """
    rho = uniform_random_profile(space, params.seed)
    ext_values = np.zeros((params.iterations, 1))
    best_rounded = np.zeros(params.iterations)
    best = math.inf
    for k in range(1, params.iterations + 1):
        gamma_k = step_size(k, params)
        res = greedy_extension(f, rho, space)
        ext_values[k - 1, 0] = res.value
        stepped = [p - gamma_k * g for p, g in zip(rho.parts, res.subgradient)]
        rho = project_product(stepped, space)
        best = min(best, f(theta(rho, params.t_hat)))
        best_rounded[k - 1] = best
    point = theta(rho, params.t_hat)
    trace = SolveTrace(
        ext_values=ext_values,
        disagreement=np.zeros(params.iterations),
        best_rounded=best_rounded,
    )
    return point, f(point), trace
