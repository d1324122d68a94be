"""Command-line front end.

Exit codes for `solve-feas`: 0 primal interior, 1 dual nonzero,
2 no-epsilon-interior declaration, 64 usage or parse errors, 70 solver
failure. `verify` exits 0 on a valid certificate and 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import multiprocessing
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import instances, socp, solver
from .basic_procedure import BasicProcedureOptions
from .cones import BlockVector, ConeStructure
from .exceptions import InstanceFormatError, NoInteriorPairError, SocRescaleError

EXIT_PRIMAL = 0
EXIT_DUAL = 1
EXIT_NO_EPS = 2
EXIT_NO_INTERIOR_PAIR = 3
EXIT_USAGE = 64
EXIT_SOFTWARE = 70

_STATUS_CODES = {
    instances.PRIMAL_INTERIOR: EXIT_PRIMAL,
    instances.DUAL_NONZERO: EXIT_DUAL,
    instances.NO_EPS_INTERIOR: EXIT_NO_EPS,
}


@dataclass
class Config:
    epsilon: float = 1e-6
    delta: float = 1e-4
    tol: float = 1e-8
    max_outer: Optional[int] = None
    bp_max_iters: Optional[int] = None
    seed: int = 0
    output: Optional[str] = None
    jobs: int = 1
    verbosity: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.delta <= 0 or self.tol <= 0:
            raise ValueError("delta and tol must be positive")

    def solver_options(self) -> solver.SolverOptions:
        return solver.SolverOptions(
            max_outer=self.max_outer,
            bp=BasicProcedureOptions(max_iters=self.bp_max_iters),
            verify_tol=self.tol,
        )


def _setup_logging(verbosity: int) -> None:
    env_level = os.environ.get("SOC_RESCALE_LOG")
    if env_level:
        level = getattr(logging, env_level.upper(), logging.INFO)
    elif verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _config_from_args(args) -> Config:
    return Config(
        epsilon=args.epsilon,
        delta=getattr(args, "delta", 1e-4),
        tol=args.tol,
        max_outer=args.max_outer,
        bp_max_iters=args.bp_max_iters,
        seed=getattr(args, "seed", 0),
        output=args.output,
        jobs=getattr(args, "jobs", 1),
        verbosity=args.verbose - args.quiet,
    )


def _solve_one(path: str, config: Config) -> int:
    inst = instances.read_instance(path)
    result = solver.solve_instance(inst, config.epsilon, config.solver_options())
    cert = result.to_certificate()
    out = config.output or "-"
    instances.write_certificate(cert, out)
    if config.verbosity >= 0:
        stats = result.stats
        print(
            f"{path}: {result.status} "
            f"(bp_calls={stats.bp_calls}, bp_iterations={stats.bp_iterations_total}, "
            f"cuts={stats.cuts_per_block}, v={['%.3e' % v for v in stats.v]})",
            file=sys.stderr,
        )
    return _STATUS_CODES[result.status]


def _solve_batch_worker(job):
    path, config_dict = job
    config = Config(**config_dict)
    out_dir = config.output
    name = Path(path).stem + ".cert"
    config.output = str(Path(out_dir) / name) if out_dir else None
    try:
        return _solve_one(path, config)
    except SocRescaleError as exc:
        print(f"{path}: error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


def cmd_solve_feas(args) -> int:
    config = _config_from_args(args)
    target = Path(args.instance)
    if target.is_dir():
        paths = sorted(str(p) for p in target.glob("*.json"))
        if not paths:
            print(f"no *.json instances under {target}", file=sys.stderr)
            return EXIT_USAGE
        cfg = config.__dict__.copy()
        jobs = [(p, cfg) for p in paths]
        if config.jobs > 1:
            with multiprocessing.Pool(config.jobs) as pool:
                codes = pool.map(_solve_batch_worker, jobs)
        else:
            codes = [_solve_batch_worker(j) for j in jobs]
        return max(codes)
    return _solve_one(str(target), config)


def cmd_solve_socp(args) -> int:
    config = _config_from_args(args)
    inst = instances.read_instance(args.instance)
    if inst.b is None or inst.c is None:
        print("instance lacks objective data (b and c are required)",
              file=sys.stderr)
        return EXIT_USAGE
    problem = socp.StandardSocp.from_instance(inst)
    result = socp.solve_to_gap(problem, config.delta, config.solver_options())
    cond = math_inf_safe_cond(result)
    lines = [
        json.dumps({"version": instances.FORMAT_VERSION, "kind": "socp_result"}),
        json.dumps({"x": result.x.data.tolist()}),
        json.dumps({"y": result.y.tolist()}),
        json.dumps({"s": result.s.data.tolist()}),
        json.dumps({"summary": {
            "gap": result.gap,
            "eps_hat": result.eps_hat,
            "M": result.M,
            "delta": config.delta,
            "cond_upper_bound": cond,
        }}),
    ]
    out = config.output or "-"
    fh = sys.stdout if out == "-" else open(out, "w")
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"gap = {result.gap:.6e} (target {config.delta:.6e}), "
          f"cond bound = {cond:.3e}", file=sys.stderr)
    return 0 if result.gap <= config.delta else EXIT_SOFTWARE


def math_inf_safe_cond(result: socp.PhaseResult) -> float:
    feas = result.feasibility
    if feas is None or feas.x is None:
        return float("inf")
    return socp.cond_upper_bound(feas.x)


def cmd_generate(args) -> int:
    structure = ConeStructure.parse(args.blocks)
    if args.generator == "primal":
        inst = instances.gen_primal_feasible(args.seed, args.m, structure)
    elif args.generator == "dual":
        inst = instances.gen_dual_feasible(args.seed, args.m, structure)
    else:
        inst = instances.gen_socp(args.seed, args.m, structure)
    instances.write_instance(inst, args.output or "-")
    return 0


def cmd_verify(args) -> int:
    inst = instances.read_instance(args.instance)
    cert = instances.read_certificate(args.certificate)
    report = instances.verify_certificate(inst, cert, tol=args.tol)
    print(report.render())
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socrescale",
        description="Feasibility and SOCP solving over products of "
                    "second-order cones and half-lines",
    )
    parser.add_argument("--verbose", "-v", action="count", default=0)
    parser.add_argument("--quiet", "-q", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, socp_mode=False):
        p.add_argument("--epsilon", type=float, default=1e-6,
                       help="interiority threshold (0 disables the declaration)")
        if socp_mode:
            p.add_argument("--delta", type=float, default=1e-4,
                           help="target duality gap")
        p.add_argument("--tol", type=float, default=1e-8,
                       help="verification tolerance")
        p.add_argument("--max-outer", type=int, default=None)
        p.add_argument("--bp-max-iters", type=int, default=None)
        p.add_argument("--output", "-o", default=None)

    p_feas = sub.add_parser("solve-feas", help="solve a homogeneous feasibility instance")
    p_feas.add_argument("instance", help="instance file, '-' for stdin, or a directory")
    common(p_feas)
    p_feas.add_argument("--jobs", type=int, default=1,
                        help="parallel solves for directory inputs")
    p_feas.set_defaults(func=cmd_solve_feas)

    p_socp = sub.add_parser("solve-socp", help="solve a standard-form SOCP to a gap target")
    p_socp.add_argument("instance")
    common(p_socp, socp_mode=True)
    p_socp.set_defaults(func=cmd_solve_socp)

    p_gen = sub.add_parser("generate", help="generate a seeded instance with witness")
    p_gen.add_argument("generator", choices=["primal", "dual", "socp"])
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("-m", type=int, required=True, help="number of rows")
    p_gen.add_argument("--blocks", required=True,
                       help="block list, e.g. 'soc:3,halfline,soc:2'")
    p_gen.add_argument("--output", "-o", default=None)
    p_gen.set_defaults(func=cmd_generate)

    p_ver = sub.add_parser("verify", help="verify a certificate against an instance")
    p_ver.add_argument("instance")
    p_ver.add_argument("certificate")
    p_ver.add_argument("--tol", type=float, default=1e-8)
    p_ver.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose - args.quiet)
    try:
        return args.func(args)
    except InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoInteriorPairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_INTERIOR_PAIR
    except (SocRescaleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


if __name__ == "__main__":
    sys.exit(main())
