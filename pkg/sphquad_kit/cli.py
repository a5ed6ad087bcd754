import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from sphquad_kit.constants import DEFAULT_OPTIONS, HG_AXIS, HG_G, WEIGHT_BAND
from sphquad_kit.errors import (Divergence, DomainError, MaterialError,
                                NegativeWeight, NonConvergence,
                                ProblemTooLarge, RankDeficiency,
                                RuleFormatError, SphQuadKitError,
                                VolumeFormatError)
from sphquad_kit.toolkit import SphQuadKit

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _floats(text: str) -> List[float]:
    try:
        return [float(Fraction(part.strip())) for part in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_construct(kit: SphQuadKit, args: argparse.Namespace) -> int:
    from sphquad_kit.tools.construct import recipe_search
    from sphquad_kit.utils.recipe import format_recipe, parse_recipe
    from sphquad_kit.utils.tables import write_convergence_log

    if args.degree < 0:
        raise DomainError("degree must be non-negative")
    recipe = recipe_search(args.degree) if args.recipe == "auto" else parse_recipe(args.recipe)
    logger.info(f"Constructing degree {args.degree} with recipe {format_recipe(recipe)}")
    rule, log = kit.construct(args.degree, recipe, positive_weights=not args.allow_negative)
    kit.write_rule(rule, args.out)
    log_path = args.log or Path(args.out).with_suffix(".convergence.csv")
    write_convergence_log(log, log_path)
    print(f"nodes {rule.size}")
    print(f"weight_min {rule.weights.min():.17g}")
    print(f"weight_max {rule.weights.max():.17g}")
    return EXIT_OK


def cmd_check(kit: SphQuadKit, args: argparse.Namespace) -> int:
    rule = kit.read_rule(args.rule)
    err = kit.verify_exactness(rule, args.degree)
    report = kit.check_theorem1_conditions(rule)
    print(f"max_residual {err:.3e}")
    print(f"weight_sum_minus_4pi {rule.weight_sum - 4.0 * np.pi:.3e}")
    print(f"reflection_conditions {'pass' if report.passed else 'fail'}")
    decomposition = rule.meta.orbit_decomposition
    if decomposition is None:
        from sphquad_kit.tools.icosahedral import (decomposition_summary,
                                                   partition_orbits)
        parts = partition_orbits(kit.build_group(), rule.vectors, rule.weights)
        decomposition = decomposition_summary(parts) if parts is not None else None
    if decomposition:
        print("orbits " + ",".join(f"{t}:{c}" for t, c in decomposition))
    if err > args.tol:
        print("FAIL")
        return EXIT_VALIDATION
    print("PASS")
    return EXIT_OK


def cmd_bench(kit: SphQuadKit, args: argparse.Namespace) -> int:
    from sphquad_kit.tools.bench import error_sweep, weight_stats
    from sphquad_kit.types import Direction, HGIntegrand
    from sphquad_kit.utils.tables import write_error_sweep, write_weight_stats

    if len(args.axis) != 3:
        raise DomainError("axis needs three components")
    integrand = HGIntegrand(g=args.g, axis=Direction.from_vector(args.axis))
    rules = [kit.read_rule(p) for p in args.rules]
    ids = [Path(p).stem for p in args.rules]
    rows = error_sweep(rules, integrand, ids)
    write_error_sweep(rows, args.out)
    band = tuple(args.band)
    stats = [(rid, weight_stats(rule, band)) for rid, rule in zip(ids, rules)]
    weights_out = args.weights_out or Path(args.out).with_name(Path(args.out).stem + "_weights.csv")
    write_weight_stats(stats, weights_out,
                       Path(weights_out).with_name(Path(weights_out).stem + "_histogram.csv"))
    for row in rows:
        print(f"{row.rule_id} {row.node_count} {row.abs_error:.3e}")
    return EXIT_OK


def cmd_rte(kit: SphQuadKit, args: argparse.Namespace) -> int:
    from sphquad_kit.tools.rte import (collimated_patch, fluence,
                                       load_voxel_problem, unknown_count,
                                       vacuum_boundary)
    from sphquad_kit.utils.tables import write_residual_history
    from sphquad_kit.utils.voxel_io import read_volume_header, write_fluence

    rule = kit.read_rule(args.rule)
    dims, _, _ = read_volume_header(args.volume)
    unknowns = unknown_count(dims, rule)
    if unknowns > kit.max_unknowns and not args.allow_large:
        raise ProblemTooLarge(f"{unknowns} unknowns exceed the cap of {kit.max_unknowns}")
    boundary = None
    source = None
    if args.source == "patch":
        center = (dims[1] / 2.0 - 0.5, dims[2] / 2.0 - 0.5)
        boundary = collimated_patch("x-", center, args.patch_radius, args.cone_cos)
    elif args.source == "uniform":
        source = np.full(dims, args.q)
    else:
        boundary = vacuum_boundary()
    problem = load_voxel_problem(args.volume, args.materials, rule, boundary=boundary, source=source)
    print(f"unknowns {unknowns}")
    field = kit.solve_rte(problem, tol=args.tol, max_iters=args.max_iters, workers=args.workers,
                          allow_large=args.allow_large, normalize_phase=not args.no_normalize)
    prefix = Path(args.out)
    write_fluence(fluence(problem, field), problem.h, prefix.with_name(prefix.name + "_fluence.hdr"))
    write_residual_history(field.residual_history, prefix.with_name(prefix.name + "_residuals.csv"))
    print(f"iterations {len(field.residual_history)}")
    if field.converged_residual is not None:
        print(f"residual {field.converged_residual:.3e}")
    return EXIT_OK


def cmd_product(kit: SphQuadKit, args: argparse.Namespace) -> int:
    rule = kit.product_rule(args.kind, args.m_theta, args.m_phi)
    kit.write_rule(rule, args.out)
    print(f"nodes {rule.size}")
    return EXIT_OK


def cmd_unknowns(kit: SphQuadKit, args: argparse.Namespace) -> int:
    from sphquad_kit.tools.rte import unknown_count

    if len(args.grid) != 3 or any(n < 1 for n in args.grid):
        raise DomainError("grid needs three positive sizes")
    sizes = list(args.sizes or [])
    sizes += [kit.read_rule(p).size for p in args.rules or []]
    if not sizes:
        raise DomainError("give --sizes or --rules")
    counts = [unknown_count(tuple(args.grid), k) for k in sizes]
    for k, count in zip(sizes, counts):
        print(f"{k} {count} {counts[0] / count:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sphquad", description="Spherical quadrature toolkit")
    parser.add_argument("--seed", type=int, default=None, help="restart seed (SPHQUAD_SEED)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build an icosahedral rule")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--recipe", default="auto", help='e.g. "vertex,genericx32", or "auto"')
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="convergence CSV, next to --out by default")
    p.add_argument("--allow-negative", action="store_true", help="solve for raw weights")
    p.add_argument("--seed", dest="construct_seed", type=int, default=None, help="restart seed")
    p.add_argument("--restarts", type=int, default=None, help="restarts per continuation step")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("check", help="verify a rule file")
    p.add_argument("--rule", required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--tol", type=float, default=DEFAULT_OPTIONS["CHECK_TOL"])
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="phase-function error sweep")
    p.add_argument("--rules", nargs="+", required=True)
    p.add_argument("--g", type=float, default=HG_G)
    p.add_argument("--axis", type=_floats, default=list(HG_AXIS))
    p.add_argument("--band", type=_floats, default=list(WEIGHT_BAND))
    p.add_argument("--out", required=True)
    p.add_argument("--weights-out", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("rte", help="steady transport solve on a voxel volume")
    p.add_argument("--volume", required=True, help="label volume header")
    p.add_argument("--materials", required=True, help="label,mu_a,mu_s,g CSV")
    p.add_argument("--rule", required=True)
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--tol", type=float, default=DEFAULT_OPTIONS["RTE_TOL"])
    p.add_argument("--max-iters", type=int, default=DEFAULT_OPTIONS["RTE_MAX_ITERS"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--source", choices=("patch", "uniform", "none"), default="patch")
    p.add_argument("--patch-radius", type=float, default=2.0)
    p.add_argument("--cone-cos", type=float, default=0.8)
    p.add_argument("--q", type=float, default=1.0, help="uniform source strength")
    p.add_argument("--allow-large", action="store_true")
    p.add_argument("--no-normalize", action="store_true", help="keep the raw discrete phase matrix")
    p.set_defaults(func=cmd_rte)

    p = sub.add_parser("product", help="write a product rule")
    p.add_argument("--kind", choices=("tt", "glt"), required=True)
    p.add_argument("--m-theta", type=int, required=True)
    p.add_argument("--m-phi", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("unknowns", help="unknown counts for a grid")
    p.add_argument("--grid", type=_ints, required=True, help="nx,ny,nz")
    p.add_argument("--sizes", type=_ints, default=None)
    p.add_argument("--rules", nargs="*", default=None)
    p.set_defaults(func=cmd_unknowns)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_VALIDATION
    try:
        seed = args.seed if getattr(args, "construct_seed", None) is None else args.construct_seed
        kit = SphQuadKit(seed=seed, restarts=getattr(args, "restarts", None))
        return args.func(kit, args)
    except MaterialError as e:
        logger.error(f"Invalid material: {e}")
        return EXIT_VALIDATION
    except (RuleFormatError, VolumeFormatError, OSError) as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO
    except (NonConvergence, NegativeWeight, RankDeficiency, Divergence) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except (DomainError, ProblemTooLarge, ValueError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_VALIDATION
    except SphQuadKitError as e:
        logger.error(f"{e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
