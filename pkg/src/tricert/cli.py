"""Command line: ``tricert gen | certify | lemma-check``.

Exit codes: 0 Certified (or all lemmas pass), 1 Refuted (or a lemma
fails), 2 bad arguments, 3 I/O error, 4 Inconclusive, 5 input is not a
manifold complex on the given manifold.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

EXIT_OK, EXIT_REFUTED, EXIT_BAD_ARGS, EXIT_IO, EXIT_INCONCLUSIVE, EXIT_NOT_MANIFOLD = 0, 1, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_ARGS)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tricert", description="Certify triangulations of analytic manifolds.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a test complex")
    g.add_argument("--recipe", required=True, help="icosphere:K, polycircle:N or torusgrid:NUxNV[:conformal][:stagger]")
    g.add_argument("--manifold", help="sphere:m,N,r | torus:R,r | circle:r | bisphere:r,gap (default from recipe)")
    g.add_argument("--mutation", action="append", default=[],
                   help="sliver:TOP:SEVERITY, flip:TOP or rogue:TARGET[:HOST]; repeatable")
    g.add_argument("-o", "--output", help="complex file to write (omit to only print constants)")

    c = sub.add_parser("certify", help="run a certification mode on a complex file")
    c.add_argument("--complex", required=True, help="complex file (JSON, version 1)")
    c.add_argument("--manifold", required=True)
    c.add_argument("--mode", choices=["lfs", "reach", "generic", "diff"], default="reach")
    c.add_argument("--report", help="report JSON path (default: standard output)")
    c.add_argument("--csv", help="criterion margins as CSV")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--no-consequences", action="store_true",
                   help="skip the sampled consequence checks on Certified meshes")
    c.add_argument("--analytic-bound", type=float,
                   help="diff mode: a proven bound on ||dF_p - I|| that lets the verdict be Certified")

    lc = sub.add_parser("lemma-check", help="randomised sweeps of the geometric bounds")
    lc.add_argument("--lemma", default="all", help="sweep name or 'all'")
    lc.add_argument("--seed", type=int, default=0)
    lc.add_argument("-n", type=int, default=10_000, help="cases per sweep and manifold")
    lc.add_argument("--json", action="store_true", help="print results as JSON instead of a table")
    return p


def _fail(code: int, msg: str) -> int:
    print(f"tricert: {msg}", file=sys.stderr)
    return code


def cmd_gen(args) -> int:
    from .errors import BadRecipe, TricertError
    from .manifolds import GlobalReach, LocalLfs
    from .meshgen import default_manifold_for, generate, make_recipe, mesh_constants

    manifold = args.manifold or default_manifold_for(args.recipe)
    if not manifold:
        return _fail(EXIT_BAD_ARGS, f"--recipe: cannot infer a manifold for {args.recipe!r}; pass --manifold")
    try:
        recipe = make_recipe(manifold, args.recipe, args.mutation)
    except BadRecipe as e:
        field = "--mutation" if "mutation" in str(e) else ("--manifold" if "manifold" in str(e) else "--recipe")
        return _fail(EXIT_BAD_ARGS, f"{field}: {e}")
    try:
        A = generate(recipe)
    except BadRecipe as e:
        return _fail(EXIT_BAD_ARGS, f"--recipe: {e}")
    if args.output:
        from .fileformat import write_complex
        try:
            write_complex(A, args.output)
        except OSError as e:
            return _fail(EXIT_IO, f"cannot write {args.output}: {e}")
    M = recipe.manifold
    out = {"n_vertices": A.n_vertices, "n_top": A.n_top, "dimension_m": A.dimension_m,
           "ambient_N": int(A.vertices.shape[1])}
    try:
        reach = mesh_constants(A, M, GlobalReach())
        lfs = mesh_constants(A, M, LocalLfs())
    except TricertError as e:   # mutated meshes can have vertices off M
        out["constants_error"] = str(e)
    else:
        out.update({"t0": reach.t0, "L_min": reach.L_min, "L_max": reach.L_max, "t_min": reach.t_min,
                    "eps0_reach": reach.eps0, "mu0_reach": reach.mu0, "eps0_lfs": lfs.eps0, "mu0_lfs": lfs.mu0})
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_certify(args) -> int:
    from .certifier import (Verdict, certify_differential_control, certify_generic,
                            certify_submanifold)
    from .errors import (ComplexFileError, ComponentWithoutVertex, InputNotManifold,
                         NumericallyUnstableJacobian, VerticesOffManifold)
    from .fileformat import read_complex, write_report, write_report_csv
    from .manifolds import parse_manifold

    try:
        M = parse_manifold(args.manifold)
    except ValueError as e:
        return _fail(EXIT_BAD_ARGS, f"--manifold: {e}")
    try:
        A = read_complex(args.complex)
    except OSError as e:
        return _fail(EXIT_IO, f"cannot read {args.complex}: {e}")
    except ComplexFileError as e:
        return _fail(EXIT_IO, f"{args.complex}: {e}")
    try:
        if args.mode in ("lfs", "reach"):
            rep = certify_submanifold(M, A, args.mode, seed=args.seed, check_consequences=not args.no_consequences)
        elif args.mode == "generic":
            rep = certify_generic(M, A)
        else:
            rep = certify_differential_control(M, A, analytic_bound=args.analytic_bound)
    except (InputNotManifold, VerticesOffManifold, ComponentWithoutVertex) as e:
        return _fail(EXIT_NOT_MANIFOLD, f"input rejected: {type(e).__name__}: {e}")
    except NumericallyUnstableJacobian as e:
        return _fail(EXIT_INCONCLUSIVE, f"inconclusive: {e}")
    try:
        if args.report:
            write_report(rep, args.report)
        else:
            print(rep.to_json())
        if args.csv:
            write_report_csv(rep, args.csv)
    except OSError as e:
        return _fail(EXIT_IO, f"cannot write report: {e}")
    failed = ", ".join(c.name for c in rep.failed)
    print(f"{rep.mode.value}: {rep.verdict.value}" + (f" (failed: {failed})" if failed else ""), file=sys.stderr)
    return {Verdict.Certified: EXIT_OK, Verdict.Refuted: EXIT_REFUTED,
            Verdict.Inconclusive: EXIT_INCONCLUSIVE}[rep.verdict]


def cmd_lemma_check(args) -> int:
    from .lemmas import available, format_table, run_all

    names = available() if args.lemma == "all" else [args.lemma]
    unknown = [k for k in names if k not in available()]
    if unknown:
        return _fail(EXIT_BAD_ARGS, f"--lemma: unknown lemma {unknown[0]!r}; available: all, {', '.join(available())}")
    if args.n < 1:
        return _fail(EXIT_BAD_ARGS, "-n: need at least one case")
    results = run_all(args.n, args.seed, names)
    if args.json:
        print(json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True))
    else:
        print(format_table(results))
        print(f"{sum(r.passed for r in results)}/{len(results)} pass; total {sum(r.seconds for r in results):.2f} s")
    return EXIT_OK if all(r.passed for r in results) else EXIT_REFUTED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from . import thread_cap
    try:
        thread_cap()
    except ValueError as e:
        return _fail(EXIT_BAD_ARGS, str(e))
    handler = {"gen": cmd_gen, "certify": cmd_certify, "lemma-check": cmd_lemma_check}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
