"""Command line front end.

Subcommands: decompose (dump pieces as JSON, optionally the lattice as DOT),
rule (export the assembled kernel rule as CSV), integrate (evaluate a kernel
integral), convergence (degree sweep as CSV) and verify (run the invariant
suites).  Library errors leave as machine-readable JSON on stderr with a
nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import assembly, decomposition, geometry
from .errors import ParseError, PolyquadError
from .face_rules import RuleSources
from .kernels import builtin_kernels
from .quad1d import beta_fn, gauss_jacobi


def parse_degrees(text: str) -> list[int]:
    """Degree lists: "4", "2,4,8" or ranges "2..16" / "2..16..2"."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if ".." in item:
            parts = item.split("..")
            if len(parts) == 2:
                lo, hi, step = int(parts[0]), int(parts[1]), 1
            elif len(parts) == 3:
                lo, hi, step = int(parts[0]), int(parts[1]), int(parts[2])
            else:
                raise ParseError("cannot parse degree range %r" % item)
            out.extend(range(lo, hi + 1, step))
        elif item:
            out.append(int(item))
    if not out:
        raise ParseError("empty degree list %r" % text)
    return out


def parse_shared(text: str) -> list[tuple[int, int]]:
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            i, j = item.split(":")
            pairs.append((int(i), int(j)))
        except ValueError as exc:
            raise ParseError("shared vertex pairs look like 0:0,1:1; got %r" % item) from exc
    return pairs


def _load_poly_arg(text: str) -> geometry.Polytope:
    if text.endswith(".json"):
        return geometry.load_polytope(text)
    return geometry.parse_builder(text)


def build_sources(spec: str | None) -> RuleSources:
    sources = RuleSources()
    if spec is None or spec == "duffy":
        return sources
    if spec.startswith("file:"):
        sources.default = "file"
        for path in spec[5:].split(","):
            sources.add_file(path)
        return sources
    raise ParseError("--source must be 'duffy' or 'file:<path>[,<path>...]'")


def build_problem(args):
    """Return (pieces, lattice or None) for the polytope pair the flags select."""
    generic = getattr(args, "generic", False) or bool(getattr(args, "dot", None))
    lattice = None
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        px = _load_poly_arg(cfg["polytopes"][0]) if isinstance(cfg["polytopes"][0], str) \
            else geometry.polytope_from_json(cfg["polytopes"][0])
        py = _load_poly_arg(cfg["polytopes"][1]) if isinstance(cfg["polytopes"][1], str) \
            else geometry.polytope_from_json(cfg["polytopes"][1])
        shared = [tuple(pair) for pair in cfg["shared"]]
        lattice = decomposition.product_lattice(px, py, shared)
        return decomposition.merge_paths(lattice), lattice
    if args.simplex_pair:
        n, m, k = args.simplex_pair
        sx, sy, shared = geometry.simplex_pair(n, m, k)
        if generic:
            lattice = decomposition.product_lattice(sx, sy, shared)
            return decomposition.merge_paths(lattice), lattice
        return decomposition.decompose_simplex_pair(sx, sy, k), None
    if args.cube_pair:
        d, k = args.cube_pair
        if generic:
            cx, cy, shared = geometry.cube_pair(d, k)
            lattice = decomposition.product_lattice(cx, cy, shared)
            return decomposition.merge_paths(lattice), lattice
        _, _, pieces = decomposition.decompose_cube_pair(d, k)
        return pieces, None
    if args.polytopes:
        px = _load_poly_arg(args.polytopes[0])
        py = _load_poly_arg(args.polytopes[1])
        shared = parse_shared(args.shared or "")
        lattice = decomposition.product_lattice(px, py, shared)
        return decomposition.merge_paths(lattice), lattice
    raise ParseError("select a problem: --simplex-pair, --cube-pair, "
                     "--polytopes or --config")


def _piece_record(piece: decomposition.HullPiece, idx: int) -> dict:
    rec = {
        "id": idx,
        "apex_kind": piece.apex.kind,
        "apex_vertices": piece.apex.vertices.tolist(),
        "delta": piece.delta,
        "s": piece.s,
        "r": piece.r,
        "n_paths": piece.n_paths,
    }
    if piece.has_split:
        rec["base_x_vertices"] = piece.x_poly.face_coords(piece.x_face_id).tolist()
        rec["base_y_vertices"] = piece.y_poly.face_coords(piece.y_face_id).tolist()
    else:
        rec["base_vertices"] = piece.base_vertices.tolist()
    return rec


def _write(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_decompose(args) -> int:
    pieces, lattice = build_problem(args)
    doc = {"count": len(pieces),
           "pieces": [_piece_record(p, i) for i, p in enumerate(pieces)]}
    _write(json.dumps(doc, indent=2) + "\n", args.output)
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(lattice.to_dot())
    return 0


def cmd_rule(args) -> int:
    pieces, _ = build_problem(args)
    sources = build_sources(args.source)
    rule = assembly.assemble_kernel_rule(pieces, args.alpha, args.degree,
                                         sources=sources, fold=not args.unfolded)
    _write(assembly.kernel_rule_to_csv(rule), args.output)
    return 0


def cmd_integrate(args) -> int:
    pieces, _ = build_problem(args)
    sources = build_sources(args.source)
    g = builtin_kernels(args.g)
    value, nodes = assembly.integrate_pieces(pieces, args.alpha, args.degree, g,
                                             sources=sources, threads=args.threads)
    doc = {"value": value, "nodes": nodes, "alpha": args.alpha,
           "degree": args.degree, "g": args.g}
    print(json.dumps(doc))
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    return 0


def cmd_convergence(args) -> int:
    pieces, _ = build_problem(args)
    sources = build_sources(args.source)
    g = builtin_kernels(args.g)
    rows = assembly.convergence_sweep(pieces, args.alpha, g,
                                      parse_degrees(args.degrees),
                                      sources=sources,
                                      reference_degree=args.reference_degree,
                                      threads=args.threads)
    _write(assembly.sweep_to_csv(rows), args.output)
    return 0


# -- verify suites -------------------------------------------------------------


def _report(ok: bool, label: str, detail: str = "") -> bool:
    print("%s %s%s" % ("PASS" if ok else "FAIL", label, (" " + detail) if detail else ""))
    return ok


def _verify_counts(dims) -> bool:
    ok = True
    for d in dims:
        for k in range(d + 1):
            sx, sy, _ = geometry.simplex_pair(d, d, k)
            got = len(decomposition.decompose_simplex_pair(sx, sy, k))
            want = decomposition.simplex_pair_count(d, d, k)
            ok &= _report(got == want, "counts simplex d=%d k=%d" % (d, k),
                          "%d (expected %d)" % (got, want))
            _, _, pieces = decomposition.decompose_cube_pair(d, k)
            want = decomposition.cube_pair_count(d, k)
            ok &= _report(len(pieces) == want, "counts cube d=%d k=%d" % (d, k),
                          "%d (expected %d)" % (len(pieces), want))
    return ok


def _verify_volume(dims) -> bool:
    one = builtin_kernels("one")
    ok = True
    for d in dims:
        for k in range(d + 1):
            sx, sy, _ = geometry.simplex_pair(d, d, k)
            pieces = decomposition.decompose_simplex_pair(sx, sy, k)
            val, _ = assembly.integrate_pieces(pieces, 0.0, 2, one)
            want = geometry.face_volume(sx, sx.faces[sx.top]) \
                * geometry.face_volume(sy, sy.faces[sy.top])
            rel = abs(val - want) / want
            ok &= _report(rel < 1e-9, "volume simplex d=%d k=%d" % (d, k),
                          "rel err %.2e" % rel)
            if d <= 3:
                _, _, pieces = decomposition.decompose_cube_pair(d, k)
                val, _ = assembly.integrate_pieces(pieces, 0.0, 2, one)
                rel = abs(val - 1.0)
                ok &= _report(rel < 1e-9, "volume cube d=%d k=%d" % (d, k),
                              "rel err %.2e" % rel)
    return ok


def _verify_moments() -> bool:
    ok = True
    worst = 0.0
    for p in (1, 2, 5, 9, 17, 30):
        for a in (-0.9, -0.5, 0.0, 1.0, 2.5, 7.0):
            for b in (-0.9, -0.5, 0.0, 1.0, 2.5, 7.0):
                rule = gauss_jacobi(p, a, b)
                mass = beta_fn(a + 1, b + 1)
                for m in range(2 * p):
                    err = abs(rule.moment(m) - beta_fn(a + 1, b + m + 1)) / mass
                    worst = max(worst, err)
    ok &= _report(worst < 1e-12, "moments gauss-jacobi", "worst rel err %.2e" % worst)
    return ok


def _sample_simplex(verts: np.ndarray, n: int, rng) -> np.ndarray:
    gaps = rng.exponential(size=(n, len(verts)))
    bary = gaps / gaps.sum(axis=1, keepdims=True)
    return bary @ verts


def _verify_membership(dims, seed: int) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for d in dims:
        if d > 3:
            continue
        for k in range(d + 1):
            sx, sy, _ = geometry.simplex_pair(d, d, k)
            pieces = decomposition.decompose_simplex_pair(sx, sy, k)
            pts = np.hstack([
                _sample_simplex(sx.vertices, 10_000, rng),
                _sample_simplex(sy.vertices, 10_000, rng),
            ])
            counts = decomposition.membership_counts(pieces, pts)
            bad = int(np.sum(counts != 1))
            ok &= _report(bad == 0, "membership simplex d=%d k=%d" % (d, k),
                          "%d of %d points off" % (bad, len(pts)))
    return ok


def cmd_verify(args) -> int:
    dims = parse_degrees(args.dims)
    suites = {
        "counts": lambda: _verify_counts(dims),
        "volume": lambda: _verify_volume(dims),
        "moments": _verify_moments,
        "membership": lambda: _verify_membership(dims, args.seed),
    }
    names = list(suites) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        ok &= suites[name]()
    return 0 if ok else 1


def _add_problem_flags(sub):
    sub.add_argument("--simplex-pair", nargs=3, type=int, metavar=("N", "M", "K"),
                     help="two simplices of dims N, M sharing vertices 0..K")
    sub.add_argument("--cube-pair", nargs=2, type=int, metavar=("D", "K"),
                     help="two D-cubes sharing a K-face")
    sub.add_argument("--polytopes", nargs=2, metavar=("X", "Y"),
                     help="polytope JSON files or builder expressions")
    sub.add_argument("--shared", help="shared vertex index pairs, e.g. 0:0,1:1")
    sub.add_argument("--config", help="JSON file with polytopes and shared pairs")
    sub.add_argument("--generic", action="store_true",
                     help="use the generic lattice pipeline even for simplex/cube pairs")
    sub.add_argument("--output", help="output file (default: stdout)")
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyquad",
                                     description="singular quadrature over polytope pairs")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("decompose", help="dump the hull pieces as JSON")
    _add_problem_flags(p)
    p.add_argument("--dot", help="also write the pyramidal lattice as DOT")
    p.set_defaults(fn=cmd_decompose)

    p = subs.add_parser("rule", help="export the assembled kernel rule as CSV")
    _add_problem_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--source", default="duffy")
    p.add_argument("--unfolded", action="store_true",
                   help="leave the |x-y|^(-alpha) factor out of the weights")
    p.set_defaults(fn=cmd_rule)

    p = subs.add_parser("integrate", help="evaluate the kernel integral")
    _add_problem_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--g", default="one")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--source", default="duffy")
    p.set_defaults(fn=cmd_integrate)

    p = subs.add_parser("convergence", help="degree sweep, errors vs the top degree")
    _add_problem_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--g", default="one")
    p.add_argument("--degrees", required=True, help="e.g. 2..16 or 2,4,8")
    p.add_argument("--reference-degree", type=int)
    p.add_argument("--source", default="duffy")
    p.set_defaults(fn=cmd_convergence)

    p = subs.add_parser("verify", help="run the invariant suites")
    p.add_argument("--suite", default="all",
                   choices=["all", "counts", "volume", "moments", "membership"])
    p.add_argument("--dims", default="1..3", help="dimension range, e.g. 1..3")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PolyquadError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
