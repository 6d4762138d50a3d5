"""Command-line front end.

Subcommands:

    feastest  run the sampled solver on a feasibility, shadow, or
              optimize manifest and emit a report
    shadow    run a shadow manifest and add per-effect estimates
    oracle    run the dense reference loop on the same manifests
    entry     reprint one witness entry from a saved report

Exit codes are the only success channel: 0 feasible (or a value was
bracketed), 1 infeasible, 2 any error.  Reports go to stdout or --out
and are byte-deterministic for a fixed seed; math kernels are pinned to
one thread at startup, so --threads is accepted as a scheduling hint
but never changes results.  Only stdlib imports happen at module level
so the pinning runs before numpy loads.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time

from .errors import ConfigError, SdpSketchError

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _pin_kernels() -> None:
    for var in _THREAD_VARS:
        os.environ.setdefault(var, "1")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    parser.add_argument(
        "--epsilon", type=float, default=None, help="override the manifest's slack"
    )
    parser.add_argument("--p", type=int, default=None, help="explicit sketch row count")
    parser.add_argument(
        "--gamma", type=float, default=None, help="explicit singular-value floor"
    )
    parser.add_argument(
        "--preset",
        choices=("worstcase", "scaled"),
        default="scaled",
        help="sketch parameter preset when --p/--gamma are not given",
    )
    parser.add_argument(
        "--beta-scale", type=float, default=0.25, help="Gibbs exponent scale (times eps)"
    )
    parser.add_argument(
        "--delta", type=float, default=1.0 / 6.0, help="total failure probability budget"
    )
    parser.add_argument(
        "--max-iters", type=int, default=None, help="override the round budget"
    )
    parser.add_argument("--out", default=None, help="write the report here instead of stdout")
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="scheduling hint; accepted for compatibility, results never depend on it",
    )
    parser.add_argument(
        "--timings",
        action="store_true",
        help="include wall-clock lines (breaks byte-for-byte reproducibility)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdpsketch",
        description="Sampling-based SDP feasibility solver with a dense reference oracle.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_feas = sub.add_parser("feastest", help="run the sampled solver on a manifest")
    p_feas.add_argument("manifest")
    _add_common(p_feas)
    p_feas.set_defaults(func=_run_feastest)

    p_shadow = sub.add_parser("shadow", help="run a shadow manifest with per-effect estimates")
    p_shadow.add_argument("manifest")
    _add_common(p_shadow)
    p_shadow.set_defaults(func=_run_shadow)

    p_oracle = sub.add_parser("oracle", help="run the dense reference loop on a manifest")
    p_oracle.add_argument("manifest")
    _add_common(p_oracle)
    p_oracle.set_defaults(func=_run_oracle)

    p_entry = sub.add_parser("entry", help="reprint one witness entry from a report")
    p_entry.add_argument("report")
    p_entry.add_argument("row", type=int, help="1-based row index")
    p_entry.add_argument("col", type=int, help="1-based column index")
    p_entry.add_argument(
        "--manifest",
        default=None,
        help="original manifest (required for non-uniform witnesses)",
    )
    p_entry.set_defaults(func=_run_entry)
    return parser


def _config(args):
    from .sketch import SketchParams
    from .solver import SolverConfig

    if (args.p is None) != (args.gamma is None):
        raise ConfigError("--p and --gamma must be given together")
    if args.p is not None:
        sketch = SketchParams(p=args.p, gamma=args.gamma)
        preset = "explicit"
    else:
        sketch = args.preset
        preset = args.preset
    config = SolverConfig(
        seed=args.seed,
        t_override=args.max_iters,
        sketch=sketch,
        delta_total=args.delta,
        beta_scale=args.beta_scale,
    )
    return config, preset


def _emit(args, report) -> None:
    from . import report as rep

    text = rep.render(report)
    if args.out:
        with open(args.out, "w", encoding="ascii") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _base_report(command, args, problem_n, m, eps, config, preset, rounds, sha):
    from .report import RunReport

    return RunReport(
        command=command,
        dimension=problem_n,
        seed=config.seed,
        epsilon=eps,
        constraints=m,
        rounds=rounds,
        beta_scale=config.beta_scale,
        delta_total=config.delta_total,
        preset=preset,
        sketch_p=args.p,
        sketch_gamma=args.gamma,
        manifest_sha=sha,
    )


def _budget(config, n, eps) -> int:
    from .solver import default_round_budget

    return config.t_override if config.t_override is not None else default_round_budget(n, eps)


def _override_eps(problem, eps_flag):
    from .solver import FeasibilityProblem

    if eps_flag is None:
        return problem
    return FeasibilityProblem(
        constraints=problem.constraints, bounds=problem.bounds, eps=eps_flag
    )


def _run_feastest(args) -> int:
    from . import manifest as man
    from . import report as rep
    from . import solver
    from .store import file_sha256

    parsed = man.load_manifest(args.manifest)
    if parsed.kind == "optimize":
        return _run_optimize(args)
    timer = time.perf_counter()
    problem = _override_eps(man.load_feasibility(args.manifest), args.epsilon)
    load_seconds = time.perf_counter() - timer
    config, preset = _config(args)
    timer = time.perf_counter()
    outcome = solver.test_feasibility(problem, config)
    solve_seconds = time.perf_counter() - timer
    report = _base_report(
        "feastest",
        args,
        problem.n,
        problem.m,
        problem.eps,
        config,
        preset,
        _budget(config, problem.n, problem.eps),
        file_sha256(args.manifest),
    )
    report.verdict = outcome.verdict
    report.iterations = outcome.iterations_used
    report.violations = list(outcome.violation_log)
    if outcome.feasible:
        report.witness = rep.dump_witness(
            outcome.witness, [j for _, j, _ in outcome.violation_log]
        )
    if args.timings:
        report.timings = [("load", load_seconds), ("solve", solve_seconds)]
    _emit(args, report)
    return 0 if outcome.feasible else 1


def _run_shadow(args) -> int:
    from . import manifest as man
    from . import report as rep
    from . import rng as rngmod
    from . import solver
    from .gibbs import estimate_constraint_trace
    from .store import file_sha256

    timer = time.perf_counter()
    effects, values, eps = man.load_shadow(args.manifest)
    if args.epsilon is not None:
        eps = args.epsilon
    problem = solver.shadow_to_feasibility(effects, values, eps)
    load_seconds = time.perf_counter() - timer
    config, preset = _config(args)
    timer = time.perf_counter()
    outcome = solver.test_feasibility(problem, config)
    estimates = []
    if outcome.feasible:
        eps_est, _ = config.resolved(eps)
        delta = config.delta_total / max(1, len(effects))
        for k, effect in enumerate(effects):
            estimates.append(
                estimate_constraint_trace(
                    outcome.witness,
                    effect,
                    eps_est,
                    delta,
                    rngmod.substream(config.seed, rngmod.TRACE, 0, k),
                )
            )
    solve_seconds = time.perf_counter() - timer
    report = _base_report(
        "shadow",
        args,
        problem.n,
        problem.m,
        eps,
        config,
        preset,
        _budget(config, problem.n, eps),
        file_sha256(args.manifest),
    )
    report.verdict = outcome.verdict
    report.iterations = outcome.iterations_used
    report.violations = list(outcome.violation_log)
    report.estimates = estimates
    if outcome.feasible:
        report.witness = rep.dump_witness(
            outcome.witness, [j for _, j, _ in outcome.violation_log]
        )
    if args.timings:
        report.timings = [("load", load_seconds), ("solve", solve_seconds)]
    _emit(args, report)
    return 0 if outcome.feasible else 1


def _run_optimize(args) -> int:
    from . import manifest as man
    from . import report as rep
    from . import solver
    from .store import file_sha256

    timer = time.perf_counter()
    problem, eps = man.load_optimization(args.manifest)
    if args.epsilon is not None:
        eps = args.epsilon
    load_seconds = time.perf_counter() - timer
    config, preset = _config(args)
    captured: dict = {}

    def tracking(fp, cfg):
        out = solver.test_feasibility(fp, cfg)
        if out.feasible:
            captured["outcome"] = out
        return out

    timer = time.perf_counter()
    value, final = solver.optimize(problem, eps, config, feasibility=tracking)
    solve_seconds = time.perf_counter() - timer
    report = _base_report(
        "optimize",
        args,
        problem.n,
        len(problem.constraints) + 1,
        eps,
        config,
        preset,
        _budget(config, problem.n, eps),
        file_sha256(args.manifest),
    )
    report.value = value
    report.calls = math.ceil(math.log2(1.0 / eps))
    report.verdict = final.verdict
    report.iterations = final.iterations_used
    report.violations = list(final.violation_log)
    best = captured.get("outcome")
    if best is not None:
        report.witness = rep.dump_witness(
            best.witness, [j for _, j, _ in best.violation_log]
        )
    if args.timings:
        report.timings = [("load", load_seconds), ("solve", solve_seconds)]
    _emit(args, report)
    return 0 if best is not None else 1


def _run_oracle(args) -> int:
    from . import manifest as man
    from . import oracle
    from .store import file_sha256

    timer = time.perf_counter()
    problem = _override_eps(man.load_feasibility(args.manifest), args.epsilon)
    load_seconds = time.perf_counter() - timer
    config, preset = _config(args)
    timer = time.perf_counter()
    outcome = oracle.dense_mmw(
        problem, t_override=config.t_override, beta_scale=config.beta_scale
    )
    solve_seconds = time.perf_counter() - timer
    report = _base_report(
        "oracle",
        args,
        problem.n,
        problem.m,
        problem.eps,
        config,
        preset,
        _budget(config, problem.n, problem.eps),
        file_sha256(args.manifest),
    )
    report.verdict = outcome.verdict
    report.iterations = outcome.iterations_used
    report.violations = list(outcome.violation_log)
    if args.timings:
        report.timings = [("load", load_seconds), ("solve", solve_seconds)]
    _emit(args, report)
    return 0 if outcome.feasible else 1


def _run_entry(args) -> int:
    from . import manifest as man
    from . import report as rep
    from .gibbs import query_solution_entry
    from .store import NegatedView, file_sha256

    loaded = rep.load_report(args.report)
    if loaded.witness is None:
        print("error: report carries no witness", file=sys.stderr)
        return 2
    if loaded.witness.kind == "uniform":
        candidate = rep.rebuild_witness(loaded.witness, [], loaded.dimension)
    else:
        if args.manifest is None:
            print(
                "error: non-uniform witnesses need --manifest for matrix access",
                file=sys.stderr,
            )
            return 2
        if loaded.manifest_sha is not None:
            actual = file_sha256(args.manifest)
            if actual != loaded.manifest_sha:
                print(
                    f"error: manifest hash {actual} does not match the report's "
                    f"{loaded.manifest_sha}",
                    file=sys.stderr,
                )
                return 2
        parsed = man.load_manifest(args.manifest)
        if parsed.kind == "optimize":
            problem, _ = man.load_optimization(args.manifest)
            constraints = list(problem.constraints) + [NegatedView(problem.cost)]
        else:
            constraints = man.load_feasibility(args.manifest).constraints
        candidate = rep.rebuild_witness(loaded.witness, constraints, loaded.dimension)
    if not (1 <= args.row <= loaded.dimension and 1 <= args.col <= loaded.dimension):
        print(
            f"error: indices must lie in [1, {loaded.dimension}]", file=sys.stderr
        )
        return 2
    z = query_solution_entry(candidate, args.row - 1, args.col - 1)
    print(f"{rep.fmt(z.real)} {rep.fmt(z.imag)}")
    return 0


def main(argv=None) -> int:
    _pin_kernels()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SdpSketchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
