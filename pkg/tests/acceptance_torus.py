"""Certify one torus mesh in both submanifold modes and print a JSON summary.

Run as a separate process by the acceptance suite so the multi-gigabyte
working set of the finest meshes is released when it exits.

    python acceptance_torus.py R r RECIPE [--probes PAIRS POINTS]
"""
import argparse
import json
import resource
import time

from tricert.atlas import analyse_stars
from tricert.certifier import certify_submanifold
from tricert.manifolds import Torus3D
from tricert.meshgen import MeshRecipe, generate, parse_recipe
from tricert.probe import injectivity_probe, surjectivity_probe


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("R", type=float)
    ap.add_argument("r", type=float)
    ap.add_argument("recipe")
    ap.add_argument("--probes", type=int, nargs=2, metavar=("PAIRS", "POINTS"))
    args = ap.parse_args()
    M = Torus3D(args.R, args.r)
    t = time.perf_counter()
    A = generate(MeshRecipe(M, parse_recipe(args.recipe)))
    batch = analyse_stars(M, A)
    out = {"n_vertices": A.n_vertices, "n_top": A.n_top}
    for mode in ("lfs", "reach"):
        out[mode] = certify_submanifold(M, A, mode, batch=batch).to_dict()
    del batch
    if args.probes:
        inj = injectivity_probe(M, A, pairs=args.probes[0])
        sur = surjectivity_probe(M, A, points=args.probes[1])
        out["injectivity"] = {"passed": inj.passed, "pairs": inj.pairs, "collisions": len(inj.collisions),
                              "min_image_over_domain": inj.min_image_over_domain}
        out["surjectivity"] = {"passed": sur.passed, "points": sur.points, "failures": len(sur.failures),
                               "max_residual": sur.max_residual}
    out["seconds"] = time.perf_counter() - t
    out["max_rss_mb"] = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    print(json.dumps(out))


if __name__ == "__main__":
    main()
