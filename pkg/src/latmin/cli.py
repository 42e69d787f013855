"""Command-line surface: check, solve, simulate.

Exit status contract: 0 success (or submodularity confirmed), 1 domain
failure (a violation was found), 2 usage, parse, or validation errors.
All file outputs use fixed column orders and C-locale decimal points, and
are byte-stable for a given scenario and seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .ctf import GameResult, StepContext, build_step_problem, run_game
from .ctf import adaptive_alpha, attacker_pursuit_weights, avoidance_planes, predict_attackers, threat_distance
from .lattice import CapExceededError, ChainProduct, Oracle, check_submodular
from .scenario import (
    Problem,
    Scenario,
    ScenarioError,
    ScenarioParseError,
    build_objective,
    load_scenario,
)
from .solvers import SolverParams, WeightMatrix, centralized_minimize, distributed_minimize

OK, VIOLATION, USAGE = 0, 1, 2


def _fmt(v) -> str:
    return format(float(v), ".12g")


def _step_zero_problem(scenario: Scenario):
    """The joint action problem the defenders face at k = 0."""
    n_d = len(scenario.defenders_start)
    rng = np.random.default_rng(scenario.seed)
    attackers = [tuple(c) for c in scenario.attackers_start]
    defenders = [tuple(c) for c in scenario.defenders_start]
    active = [True] * len(attackers)
    arena = scenario.arena
    dparams = scenario.defender_params
    predicted = predict_attackers(attackers, active, arena, scenario.u_max)
    alphas = []
    pursuit = np.zeros((n_d, len(attackers)))
    for i in range(n_d):
        delta_i = threat_distance(attackers, active, arena.responsibilities[i])
        alphas.append(
            adaptive_alpha(
                delta_i, float(dparams.delta_th[i]), dparams.beta,
                dparams.alpha_a_nom, dparams.alpha_f_nom,
            )
        )
        pursuit[i] = attacker_pursuit_weights(
            i, attackers, active, arena.responsibilities[i], dparams.pursuit_gain, rng
        )
    ctx = StepContext(
        arena=arena,
        u_max=scenario.u_max,
        defenders=defenders,
        predicted=predicted,
        alphas=alphas,
        pursuit=pursuit,
        planes=[avoidance_planes(i, defenders, arena.obstacles, scenario.u_max) for i in range(n_d)],
        params=dparams,
    )
    return build_step_problem(ctx)


def cmd_check(args) -> int:
    if args.builtin:
        if not args.dims:
            print("check: --builtin needs --dims", file=sys.stderr)
            return USAGE
        space = ChainProduct(args.dims)
        oracles = [build_objective({"type": args.builtin}, space)]
    else:
        record = load_scenario(args.path)
        if isinstance(record, Problem):
            space = record.space()
            oracles = record.oracles()
        else:
            oracles, space = _step_zero_problem(record)

    total = Oracle(lambda x: sum(f(x) for f in oracles), space)
    try:
        report = check_submodular(total, space)
    except CapExceededError as exc:
        print(f"check: {exc}", file=sys.stderr)
        return USAGE
    print(f"checked {report.points_checked} cross differences on {space.dims}")
    if report.is_submodular:
        print("submodular: yes")
        return OK
    print(f"submodular: no ({len(report.violations)} violations)")
    for x, (i, j), value in report.violations[:20]:
        print(f"  violation at {x}, chains ({i},{j}): cross difference {_fmt(value)}")
    return VIOLATION


def _write_trace(path: Path, trace, n_agents: int) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "agent", "ext_value", "disagreement", "best_rounded"])
        for k in range(trace.ext_values.shape[0]):
            for a in range(n_agents):
                w.writerow([
                    k + 1,
                    a,
                    _fmt(trace.ext_values[k, a]),
                    _fmt(trace.disagreement[k]),
                    _fmt(trace.best_rounded[k]),
                ])


def cmd_solve(args) -> int:
    record = load_scenario(args.path)
    if not isinstance(record, Problem):
        print("solve: expected a problem file (kind: problem)", file=sys.stderr)
        return USAGE
    if args.seed_override is not None:
        record.seed = args.seed_override
    solver = dict(record.solver)
    if args.iters_override is not None:
        solver["iterations"] = args.iters_override
    params = SolverParams(seed=record.seed, **solver)

    space = record.space()
    oracles = record.oracles()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.mode == "central":
        total = Oracle(lambda x: sum(f(x) for f in oracles), space)
        point, value, trace = centralized_minimize(total, space, params)
        points, values, n_agents = [point], [value], 1
    else:
        if record.network_matrix is None:
            print("solve: distributed mode needs a network block", file=sys.stderr)
            return USAGE
        matrix = WeightMatrix(record.network_matrix, record.network_eta)
        points, values, trace = distributed_minimize(oracles, space, matrix, params)
        n_agents = len(oracles)

    with (out / "solution.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["agent", "point", "value"])
        for a, (x, v) in enumerate(zip(points, values)):
            w.writerow([a, " ".join(str(c) for c in x), _fmt(v)])
    _write_trace(out / "trace.csv", trace, n_agents)
    for a, (x, v) in enumerate(zip(points, values)):
        print(f"agent {a}: point ({', '.join(str(c) for c in x)}) value {_fmt(v)}")
    return OK


def write_trajectories(path: Path, result: GameResult) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "player_id", "team", "x", "y", "alpha_a", "captured"])
        for rec in result.steps:
            for i, (x, y) in enumerate(rec.defenders):
                w.writerow([rec.k, f"d{i}", "defender", x, y, _fmt(rec.alpha_a[i]), 0])
            for g, (x, y) in enumerate(rec.attackers):
                w.writerow([
                    rec.k, f"a{g}", "attacker", x, y,
                    _fmt(rec.eta_avoid[g]), int(rec.captured[g]),
                ])


def write_events(path: Path, result: GameResult) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "type", "subject", "detail"])
        for e in result.events:
            w.writerow([e.k, e.kind, e.subject, e.detail])


def render_svg(result: GameResult, arena, cell: int = 24) -> str:
    """Arena, zone, obstacles, and player trajectories as standalone SVG."""
    size = arena.size
    w = size * cell

    def px(c):
        # Cell centers; y flipped so the zone at high y renders at the top.
        return (c[0] + 0.5) * cell, (size - 1 - c[1] + 0.5) * cell

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" '
        f'viewBox="0 0 {w} {w}">',
        f'<rect width="{w}" height="{w}" fill="white"/>',
    ]
    for z in arena.zone:
        x, y = px(z)
        parts.append(
            f'<rect x="{x - cell / 2:.1f}" y="{y - cell / 2:.1f}" width="{cell}" '
            f'height="{cell}" fill="#cfe8ff"/>'
        )
    for i in range(size + 1):
        parts.append(f'<line x1="0" y1="{i * cell}" x2="{w}" y2="{i * cell}" stroke="#eeeeee"/>')
        parts.append(f'<line x1="{i * cell}" y1="0" x2="{i * cell}" y2="{w}" stroke="#eeeeee"/>')
    for o in sorted(arena.obstacles):
        x, y = px(o)
        r = cell * 0.3
        parts.append(
            f'<path d="M {x - r:.1f} {y - r:.1f} L {x + r:.1f} {y + r:.1f} '
            f'M {x - r:.1f} {y + r:.1f} L {x + r:.1f} {y - r:.1f}" '
            f'stroke="#333333" stroke-width="2"/>'
        )

    n_d = len(result.steps[0].defenders) if result.steps else 0
    n_a = len(result.steps[0].attackers) if result.steps else 0
    defender_colors = ["#1f77b4", "#17becf", "#2ca02c", "#9467bd", "#7f7f7f", "#8c564b"]
    attacker_colors = ["#d62728", "#ff7f0e", "#e377c2", "#bcbd22", "#aec7e8", "#ffbb78"]

    def polyline(track, color):
        pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in (px(c) for c in track))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="2" stroke-opacity="0.8"/>'
        )
        x0, y0 = px(track[0])
        x1, y1 = px(track[-1])
        parts.append(f'<circle cx="{x0:.1f}" cy="{y0:.1f}" r="4" fill="{color}"/>')
        parts.append(
            f'<rect x="{x1 - 4:.1f}" y="{y1 - 4:.1f}" width="8" height="8" fill="{color}"/>'
        )

    for i in range(n_d):
        track = [rec.defenders[i] for rec in result.steps] + [result.final_defenders[i]]
        polyline(track, defender_colors[i % len(defender_colors)])
    for g in range(n_a):
        track = [rec.attackers[g] for rec in result.steps] + [result.final_attackers[g]]
        polyline(track, attacker_colors[g % len(attacker_colors)])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_simulate(args) -> int:
    record = load_scenario(args.path)
    if not isinstance(record, Scenario):
        print("simulate: expected a game file (kind: game)", file=sys.stderr)
        return USAGE
    if args.iters_override is not None:
        record.solver_params = dataclasses.replace(
            record.solver_params, iterations=args.iters_override
        )
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"simulate: cannot create output dir: {exc}", file=sys.stderr)
        return USAGE

    result = run_game(record, seed_override=args.seed_override)
    write_trajectories(out / "trajectories.csv", result)
    write_events(out / "events.csv", result)
    if args.svg:
        (out / "arena.svg").write_text(render_svg(result, record.arena))
    captures = sum(1 for e in result.events if e.kind == "capture")
    print(
        f"{len(result.steps)} steps, outcome {result.outcome}, "
        f"{captures} captures, {len(result.events)} events -> {out}"
    )
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latmin",
        description="Submodular minimization over chain products, and a grid game that runs on it.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="exhaustively test a cost for submodularity")
    p_check.add_argument("path", nargs="?", help="problem or game file")
    p_check.add_argument("--builtin", help="registry objective instead of a file (e.g. product)")
    p_check.add_argument("--dims", type=int, nargs="+", help="chain sizes for --builtin")

    p_solve = sub.add_parser("solve", help="minimize a problem file")
    p_solve.add_argument("path")
    p_solve.add_argument("--mode", choices=["central", "distributed"], default="distributed")
    p_solve.add_argument("--out", default="out")
    p_solve.add_argument("--seed-override", type=int, default=None)
    p_solve.add_argument("--iters-override", type=int, default=None)

    p_sim = sub.add_parser("simulate", help="run a game scenario")
    p_sim.add_argument("path")
    p_sim.add_argument("--out", default="out")
    p_sim.add_argument("--svg", action="store_true", help="also render the arena SVG")
    p_sim.add_argument("--seed-override", type=int, default=None)
    p_sim.add_argument("--iters-override", type=int, default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        if args.command == "check":
            if not args.builtin and not args.path:
                print("check: needs a file or --builtin", file=sys.stderr)
                return USAGE
            return cmd_check(args)
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_simulate(args)
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return USAGE
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
