"""Pyramidal decomposition of polytopes around a set of singular vertices.

The recursive splitting works on the face lattice: a face with singular
vertices is coned over one of them, and the recursion continues on the facets
that avoid the chosen apex.  Faces free of singular vertices become leaves.
The resulting DAG (faces can be reached along several parent chains) is the
pyramidal lattice; every root-to-leaf path contributes one iterated pyramid,
and the paths to a common leaf can usually be merged into a single convex
hull of the union of their apex simplices.

Closed-form generators are provided for the two cases whose decomposition is
known a priori: Cartesian products of two conforming simplices and of two
axis-aligned cubes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import AssumptionPSViolated, BadConformity, DegenerateFace
from .geometry import (
    Face,
    Polytope,
    cartesian_product,
    cube_face_id,
    cube_pair,
    face_plane_gap,
    face_volume,
    frame_of_vertices,
    hull_delta,
    numeric_rank,
    parallelotope_axes,
    simplex_volume,
)
from .quad1d import beta_fn

MERGE_RTOL = 1e-9
PIECE_DROP_RTOL = 1e-14
PS_GAP_RTOL = 1e-9


@dataclass(frozen=True)
class LatticeNode:
    face_id: int
    level: int
    apex_id: int | None          # singular vertex this face is coned over
    children: tuple[int, ...]
    parents: tuple[int, ...]

    @property
    def is_leaf(self) -> bool:
        return self.apex_id is None and not self.children


class PyramidalLattice:
    """DAG of faces produced by the recursive decomposition."""

    def __init__(self, poly: Polytope, root: int, nodes: dict[int, LatticeNode],
                 leaves: tuple[int, ...], singular_ids: frozenset[int]):
        self.poly = poly
        self.root = root
        self.nodes = nodes
        self.leaves = leaves
        self.singular_ids = singular_ids
        self._paths: dict[int, tuple[tuple[int, ...], ...]] = {}

    def paths_to(self, fid: int) -> tuple[tuple[int, ...], ...]:
        """All apex sequences leading from the root to the given node."""
        cached = self._paths.get(fid)
        if cached is not None:
            return cached
        if fid == self.root:
            result: tuple[tuple[int, ...], ...] = ((),)
        else:
            acc = []
            for pid in self.nodes[fid].parents:
                apex = self.nodes[pid].apex_id
                for path in self.paths_to(pid):
                    acc.append(path + (apex,))
            result = tuple(acc)
        self._paths[fid] = result
        return result

    @property
    def n_levels(self) -> int:
        return 1 + max(node.level for node in self.nodes.values())

    def to_dot(self) -> str:
        """Graphviz rendering: leaves boxed, edges labelled by the parent's apex."""
        out = ["digraph pyramidal_lattice {", "  rankdir=TB;"]
        for fid, node in sorted(self.nodes.items()):
            label = "[%s]" % " ".join(str(v) for v in self.poly.faces[fid].vertex_ids)
            shape = "box" if fid in self.leaves else "ellipse"
            out.append('  f%d [label="%s", shape=%s];' % (fid, label, shape))
        for fid, node in sorted(self.nodes.items()):
            for cid in node.children:
                out.append('  f%d -> f%d [label="%d"];' % (fid, cid, node.apex_id))
        out.append("}")
        return "\n".join(out) + "\n"


def _min_id_apex(face: Face, candidates) -> int:
    return min(candidates)


def pyramidal_lattice(poly: Polytope, singular_ids, apex_rule=None,
                      mode: str = "decomposition", root: int | None = None,
                      check_ps: bool = True) -> PyramidalLattice:
    """Run the recursive splitting and return the resulting lattice.

    In "decomposition" mode the recursion stops at faces without singular
    vertices (the leaves); in "triangulation" mode any vertex may serve as
    apex and the recursion runs down to the 0-faces.
    """
    singular = frozenset(int(v) for v in singular_ids)
    if mode == "decomposition" and not singular:
        raise AssumptionPSViolated("decomposition needs at least one singular vertex")
    apex_rule = apex_rule or _min_id_apex
    root = poly.top if root is None else root
    top_dim = poly.faces[root].dim

    apex: dict[int, int | None] = {}
    children: dict[int, tuple[int, ...]] = {}

    def visit(fid: int):
        if fid in apex:
            return
        face = poly.faces[fid]
        if mode == "triangulation":
            stop = face.dim == 0
            candidates = face.vertex_ids
        else:
            candidates = sorted(set(face.vertex_ids) & singular)
            stop = not candidates
        if stop or face.dim == 0:
            # a 0-face that still carries a singular vertex is a dead end:
            # everything above it lies inside the singular plane
            apex[fid] = None
            children[fid] = ()
            return
        v = apex_rule(face, candidates)
        kids = tuple(g for g in face.facet_ids
                     if v not in poly.faces[g].vertex_ids)
        apex[fid] = v
        children[fid] = kids
        for g in kids:
            visit(g)

    visit(root)

    parents: dict[int, list[int]] = {fid: [] for fid in apex}
    for fid, kids in children.items():
        for g in kids:
            parents[g].append(fid)
    nodes = {}
    leaves = []
    for fid in apex:
        face = poly.faces[fid]
        node = LatticeNode(face_id=fid, level=top_dim - face.dim, apex_id=apex[fid],
                           children=children[fid], parents=tuple(sorted(parents[fid])))
        nodes[fid] = node
        if apex[fid] is None:
            if mode == "triangulation" or not (set(face.vertex_ids) & singular):
                leaves.append(fid)
    lat = PyramidalLattice(poly, root, nodes, tuple(sorted(leaves)), singular)

    if mode == "decomposition" and check_ps:
        _check_leaf_gaps(lat)
    return lat


def _check_leaf_gaps(lat: PyramidalLattice):
    """Leaves must keep a positive distance to the singular plane."""
    poly = lat.poly
    sing_verts = poly.vertices[sorted(lat.singular_ids)]
    frame = frame_of_vertices(sing_verts)
    scale = 1.0 + float(np.max(np.abs(poly.vertices)))
    for fid in lat.leaves:
        gap = face_plane_gap(poly, poly.faces[fid], frame.origin, frame.basis_q)
        if gap <= PS_GAP_RTOL * scale:
            raise AssumptionPSViolated(
                "leaf face %d touches the singular plane (gap %.3e)" % (fid, gap))


def enumerate_pyramids(lat: PyramidalLattice) -> list[tuple[tuple[int, ...], Face]]:
    """All (apex id sequence, leaf face) pairs; one iterated pyramid each."""
    out = []
    for fid in lat.leaves:
        for path in lat.paths_to(fid):
            out.append((path, lat.poly.faces[fid]))
    return out


# -- hull pieces ---------------------------------------------------------------


@dataclass(frozen=True)
class ApexPolytope:
    """Apex body of a hull piece, sitting on the singular plane."""

    vertices: np.ndarray
    dim: int
    kind: str                                # "point", "simplex", "box", "union"
    simplices: tuple[np.ndarray, ...] = ()   # covering triangulation (paths)
    box: tuple | None = None                 # (origin, axes) when kind == "box"

    def volume(self) -> float:
        if self.dim == 0:
            return 1.0
        if self.kind == "box":
            _, r = np.linalg.qr(self.box[1])
            return abs(float(np.prod(np.diag(r))))
        return sum(simplex_volume(s) for s in self.simplices)


@dataclass(frozen=True)
class HullPiece:
    """One term of the decomposition: conv(apex body, regular base face)."""

    apex: ApexPolytope
    base_vertices: np.ndarray
    delta: float
    s: int
    r: int
    n_paths: int = 1
    x_poly: Polytope | None = None
    x_face_id: int | None = None
    y_poly: Polytope | None = None
    y_face_id: int | None = None
    base_poly: Polytope | None = None
    base_face_id: int | None = None

    @property
    def x_face(self) -> Face:
        return self.x_poly.faces[self.x_face_id]

    @property
    def y_face(self) -> Face:
        return self.y_poly.faces[self.y_face_id]

    @property
    def has_split(self) -> bool:
        return self.x_poly is not None and self.y_poly is not None

    def base_volume(self) -> float:
        if self.has_split:
            return (face_volume(self.x_poly, self.x_face)
                    * face_volume(self.y_poly, self.y_face))
        return face_volume(self.base_poly, self.base_poly.faces[self.base_face_id])

    def volume(self) -> float:
        """Piece volume via the Beta-weighted hull identity."""
        return (self.delta * self.apex.volume() * self.base_volume()
                * beta_fn(self.s + 1, self.r + 1))


def _merged_apex(path_simplices: list[np.ndarray], s: int) -> ApexPolytope | None:
    """Try to merge the apex simplices of all paths into one convex body.

    Succeeds when the convex hull of the union has the same volume as the sum
    of the (interior-disjoint) simplices; returns None when the union is not
    convex or not full-dimensional in its affine hull.
    """
    stacked = np.vstack(path_simplices)
    seen: list[np.ndarray] = []
    scale = 1.0 + float(np.max(np.abs(stacked)))
    for v in stacked:
        if not any(np.linalg.norm(v - u) <= 1e-12 * scale for u in seen):
            seen.append(v)
    union = np.array(seen)
    if numeric_rank((union[1:] - union[0]).T) != s:
        return None
    vol_sum = sum(simplex_volume(sv) for sv in path_simplices)
    frame = frame_of_vertices(path_simplices[0], expected_dim=s)
    proj = (union - frame.origin) @ frame.basis_q
    residual = (union - frame.origin) - proj @ frame.basis_q.T
    if np.max(np.linalg.norm(residual, axis=1)) > 1e-9 * scale:
        return None
    if s == 1:
        hull_vol = float(np.max(proj) - np.min(proj))
    else:
        try:
            hull_vol = float(ConvexHull(proj).volume)
        except QhullError:
            return None
    if abs(hull_vol - vol_sum) > MERGE_RTOL * vol_sum:
        return None
    box = parallelotope_axes(union)
    if box is not None:
        return ApexPolytope(vertices=union, dim=s, kind="box",
                            simplices=tuple(path_simplices), box=box)
    return ApexPolytope(vertices=union, dim=s, kind="union",
                        simplices=tuple(path_simplices))


def merge_paths(lat: PyramidalLattice) -> list[HullPiece]:
    """One hull piece per leaf where the union of path apex simplices is
    convex; leaves whose merge check fails fall back to one piece per path."""
    poly = lat.poly
    pieces: list[HullPiece] = []
    split = poly.face_parts if poly.factors is not None else None
    for fid in lat.leaves:
        paths = lat.paths_to(fid)
        unique: list[tuple[int, ...]] = []
        seen_sets = set()
        for path in paths:
            key = frozenset(path)
            if key not in seen_sets:
                seen_sets.add(key)
                unique.append(path)
        s = len(unique[0]) - 1
        base_verts = poly.face_coords(fid)
        path_simplices = [poly.vertices[list(path)] for path in unique]

        def _build(apex: ApexPolytope, n_paths: int) -> HullPiece:
            delta, ds, dr = hull_delta(apex.vertices, base_verts)
            kwargs = {}
            if split is not None:
                fx, fy = split[fid]
                px, py = poly.factors
                kwargs = dict(x_poly=px, x_face_id=fx, y_poly=py, y_face_id=fy)
            return HullPiece(apex=apex, base_vertices=base_verts, delta=delta,
                             s=ds, r=dr, n_paths=n_paths, base_poly=poly,
                             base_face_id=fid, **kwargs)

        if len(unique) == 1:
            kind = "point" if s == 0 else "simplex"
            apex = ApexPolytope(vertices=path_simplices[0], dim=s, kind=kind,
                                simplices=(path_simplices[0],))
            pieces.append(_build(apex, len(paths)))
            continue
        merged = _merged_apex(path_simplices, s)
        if merged is not None:
            pieces.append(_build(merged, len(paths)))
        else:
            for sv in path_simplices:
                apex = ApexPolytope(vertices=sv, dim=s,
                                    kind="point" if s == 0 else "simplex",
                                    simplices=(sv,))
                pieces.append(_build(apex, 1))
    return _drop_degenerate(pieces)


def _drop_degenerate(pieces: list[HullPiece]) -> list[HullPiece]:
    measures = [p.delta * p.apex.volume() * p.base_volume() for p in pieces]
    total = sum(measures)
    return [p for p, m in zip(pieces, measures) if m > PIECE_DROP_RTOL * total]


# -- triangulation ---------------------------------------------------------------


def triangulate(poly: Polytope, apex_rule=None, root: int | None = None) -> list[tuple[int, ...]]:
    """Break a polytope (or one face of it) into simplices, as vertex-id tuples.

    Runs the same recursion with every vertex admissible as apex, down to the
    0-faces; each root-to-leaf path then spells out one simplex.  The result
    is not minimal: a cube of dimension d yields d! simplices.
    """
    root = poly.top if root is None else root
    face = poly.faces[root]
    if len(face.vertex_ids) == face.dim + 1:
        return [face.vertex_ids]
    lat = pyramidal_lattice(poly, face.vertex_ids, apex_rule=apex_rule,
                            mode="triangulation", root=root, check_ps=False)
    out = []
    for fid in lat.leaves:
        leaf_vertex = lat.poly.faces[fid].vertex_ids[0]
        for path in lat.paths_to(fid):
            out.append(path + (leaf_vertex,))
    return out


def triangulate_face(poly: Polytope, face: Face) -> list[np.ndarray]:
    """Coordinate arrays of the simplices triangulating one face."""
    return [poly.vertices[list(ids)] for ids in triangulate(poly, root=face.id)]


# -- closed-form generators -------------------------------------------------------


def simplex_pair_count(n: int, m: int, k: int) -> int:
    """Number of nonempty pieces for two simplices sharing vertices 0..k."""
    if n == m == k:
        sigma = 2
    elif (n > k and m == k) or (n == k and m > k):
        sigma = 1
    else:
        sigma = 0
    return 2 ** (k + 1) - sigma


def cube_pair_count(d: int, k: int) -> int:
    """Number of pieces for two d-cubes sharing a k-face."""
    if k == 0:
        return 2 * d
    return (6 * d - 4 * k) * 3 ** (k - 1)


def _pair_vertices(x_verts: np.ndarray, y_verts: np.ndarray) -> np.ndarray:
    return np.hstack([np.repeat(x_verts, len(y_verts), axis=0),
                      np.tile(y_verts, (len(x_verts), 1))])


def decompose_simplex_pair(sx: Polytope, sy: Polytope, k: int) -> list[HullPiece]:
    """Pieces for the product of two conforming simplices sharing vertices 0..k.

    Every piece cones the diagonal simplex of the shared vertices over a base
    S_I x T_I', where I runs over the subsets of {0..k}, S_I drops the x-side
    vertices indexed by I and T_I' drops the complementary ones.  Empty
    factors are skipped, leaving 2^(k+1) minus 2, 1 or 0 pieces depending on
    whether either simplex coincides with the shared face.
    """
    n = sx.faces[sx.top].dim
    m = sy.faces[sy.top].dim
    if sx.n_vertices != n + 1 or sy.n_vertices != m + 1:
        raise BadConformity("decompose_simplex_pair expects simplices")
    if not 0 <= k <= min(n, m):
        raise BadConformity("need 0 <= k <= min(n, m)")
    if sx.dim != sy.dim:
        raise BadConformity("the two simplices live in different ambient spaces")
    shared_x = sx.vertices[: k + 1]
    shared_y = sy.vertices[: k + 1]
    if not np.allclose(shared_x, shared_y, atol=1e-12, rtol=0.0):
        raise BadConformity("shared vertices 0..%d disagree between the simplices" % k)
    _check_intersection_in_shared_hull(sx, sy, list(range(k + 1)))

    diag_verts = np.hstack([shared_x, shared_y])
    apex = ApexPolytope(vertices=diag_verts, dim=k,
                        kind="point" if k == 0 else "simplex",
                        simplices=(diag_verts,))
    pieces = []
    for size in range(k + 2):
        for drop_x in itertools.combinations(range(k + 1), size):
            drop_y = tuple(i for i in range(k + 1) if i not in drop_x)
            keep_x = [i for i in range(n + 1) if i not in drop_x]
            keep_y = [i for i in range(m + 1) if i not in drop_y]
            if not keep_x or not keep_y:
                continue
            x_fid = sx.face_id_by_vertices(keep_x)
            y_fid = sy.face_id_by_vertices(keep_y)
            base_verts = _pair_vertices(sx.vertices[keep_x], sy.vertices[keep_y])
            delta, s, r = hull_delta(diag_verts, base_verts)
            pieces.append(HullPiece(apex=apex, base_vertices=base_verts, delta=delta,
                                    s=s, r=r, n_paths=1,
                                    x_poly=sx, x_face_id=x_fid,
                                    y_poly=sy, y_face_id=y_fid))
    return _drop_degenerate(pieces)


# per-factor data for the two-cube generator: x-face spec, y-face spec, and
# whether the factor contributes a diagonal segment to the apex box
_CUBE_LABELS = {
    "S": ((2,), (2,), 0),
    "E2": ((1,), (2,), 1),
    "E3": ((2,), (1,), 1),
    "v2": ((1,), (0,), 1),
    "v3": ((0,), (1,), 1),
    "T": ((2,), (2,), 0),
    "G2": ((1,), (2,), 0),
    "G3": ((2,), (0,), 0),
}


def decompose_cube_pair(d: int, k: int):
    """Pieces for [0,1]^d x ([0,1]^k x [-1,0]^(d-k)), plus the two cubes.

    Enumerates the bases directly: either one shared coordinate degenerates to
    an off-diagonal vertex pair (with the others free or on singular edges),
    or one non-shared coordinate sits on a face away from the shared plane.
    The apex of each base is the box of diagonal segments over the coordinates
    whose factor lies beside the diagonal.  Returns (Cx, Cy, pieces).
    """
    cx, cy, _ = cube_pair(d, k)
    label_sets = []
    # bases with one vertex factor among the shared coordinates
    for j in range(k):
        for vert in ("v2", "v3"):
            for rest in itertools.product(("S", "E2", "E3"), repeat=k - 1):
                labels = list(rest[:j]) + [vert] + list(rest[j:])
                label_sets.append(labels + ["T"] * (d - k))
    # bases with one off-plane edge among the non-shared coordinates
    for j in range(d - k):
        for edge in ("G2", "G3"):
            for rest in itertools.product(("S", "E2", "E3"), repeat=k):
                tail = ["T"] * (d - k)
                tail[j] = edge
                label_sets.append(list(rest) + tail)

    pieces = []
    for labels in label_sets:
        x_spec, y_spec, diag = [], [], []
        for i, lab in enumerate(labels):
            xs, ys, sig = _CUBE_LABELS[lab]
            x_spec.extend(xs)
            y_spec.extend(ys)
            if sig:
                diag.append(i)
        x_fid = cube_face_id(d, x_spec)
        y_fid = cube_face_id(d, y_spec)
        base_verts = _pair_vertices(cx.face_coords(x_fid), cy.face_coords(y_fid))
        axes = np.zeros((2 * d, len(diag)))
        for col, i in enumerate(diag):
            axes[i, col] = 1.0
            axes[d + i, col] = 1.0
        origin = np.zeros(2 * d)
        apex_verts = np.array([origin + axes @ np.asarray(bits, dtype=float)
                               for bits in itertools.product((0, 1), repeat=len(diag))])
        ell = len(diag)
        if ell == 0:
            apex = ApexPolytope(vertices=apex_verts, dim=0, kind="point",
                                simplices=(apex_verts,))
        else:
            apex = ApexPolytope(vertices=apex_verts, dim=ell, kind="box",
                                box=(origin, axes))
        delta, s, r = hull_delta(apex_verts, base_verts)
        pieces.append(HullPiece(apex=apex, base_vertices=base_verts, delta=delta,
                                s=s, r=r, n_paths=math.factorial(ell),
                                x_poly=cx, x_face_id=x_fid,
                                y_poly=cy, y_face_id=y_fid))
    return cx, cy, _drop_degenerate(pieces)


def product_singular_ids(px: Polytope, py: Polytope, shared_pairs) -> set[int]:
    return {ix * py.n_vertices + iy for ix, iy in shared_pairs}


def _check_conforming(px: Polytope, py: Polytope, shared_pairs):
    if not shared_pairs:
        raise BadConformity("no shared vertices given")
    for ix, iy in shared_pairs:
        if not np.allclose(px.vertices[ix], py.vertices[iy], atol=1e-12, rtol=0.0):
            raise BadConformity("vertex pair (%d, %d) has different coordinates" % (ix, iy))
    xs = frozenset(ix for ix, _ in shared_pairs)
    ys = frozenset(iy for _, iy in shared_pairs)
    if xs not in px._face_by_verts or ys not in py._face_by_verts:
        raise BadConformity("shared vertices do not form a face of both polytopes")
    _check_intersection_in_shared_hull(px, py, sorted(xs))


def _check_intersection_in_shared_hull(px: Polytope, py: Polytope, shared_x_ids):
    """The pair conforms iff P_x and P_y meet only inside aff(shared face).

    Since a polytope meets the affine hull of any of its faces exactly in that
    face, it suffices that no point of the intersection leaves the hull: the
    extent of P_x cap P_y along each complement direction is a linear program
    over convex-combination coefficients of the two vertex sets.
    """
    from scipy.optimize import linprog

    frame = frame_of_vertices(px.vertices[shared_x_ids])
    d = px.dim
    full_q, _ = np.linalg.qr(np.hstack([frame.basis_t, np.eye(d)]))
    comp = full_q[:, frame.basis_t.shape[1]:]
    if comp.shape[1] == 0:
        return
    nx, ny = px.n_vertices, py.n_vertices
    a_eq = np.zeros((d + 2, nx + ny))
    a_eq[:d, :nx] = px.vertices.T
    a_eq[:d, nx:] = -py.vertices.T
    a_eq[d, :nx] = 1.0
    a_eq[d + 1, nx:] = 1.0
    b_eq = np.zeros(d + 2)
    b_eq[d] = 1.0
    b_eq[d + 1] = 1.0
    scale = 1.0 + max(float(np.max(np.abs(px.vertices))), float(np.max(np.abs(py.vertices))))
    offset = comp.T @ frame.origin
    for i in range(comp.shape[1]):
        cvec = np.zeros(nx + ny)
        cvec[:nx] = comp[:, i] @ px.vertices.T
        for sign in (1.0, -1.0):
            sol = linprog(sign * cvec, A_eq=a_eq, b_eq=b_eq,
                          bounds=[(0, None)] * (nx + ny), method="highs")
            if sol.status == 2:
                # empty intersection cannot happen with shared vertices present
                raise BadConformity("intersection LP reports no common point")
            if not sol.success:
                raise BadConformity("conformity LP failed: %s" % sol.message)
            # sign*sol.fun is min (+1) resp. max (-1) of u.z over the intersection
            extent = abs(sign * sol.fun - offset[i])
            if extent > 1e-9 * scale:
                raise BadConformity(
                    "polytopes overlap beyond the shared face "
                    "(extent %.3e along a complement direction)" % extent)


def product_lattice(px: Polytope, py: Polytope, shared_pairs,
                    apex_rule=None, check_ps: bool = True) -> PyramidalLattice:
    """Pyramidal lattice of P_x x P_y with the diagonal shared vertices singular."""
    _check_conforming(px, py, shared_pairs)
    prod = cartesian_product(px, py)
    singular = product_singular_ids(px, py, shared_pairs)
    return pyramidal_lattice(prod, singular, apex_rule=apex_rule, check_ps=check_ps)


def decompose_product(px: Polytope, py: Polytope, shared_pairs,
                      apex_rule=None, check_ps: bool = True) -> list[HullPiece]:
    """Generic pipeline: build the product, decompose, merge paths."""
    lat = product_lattice(px, py, shared_pairs, apex_rule=apex_rule, check_ps=check_ps)
    return merge_paths(lat)


# -- membership -------------------------------------------------------------------


def _batch_simplex_member(verts: np.ndarray, tol: float):
    verts = np.asarray(verts, dtype=float)
    aug = np.vstack([verts.T, np.ones(len(verts))])
    pinv = np.linalg.pinv(aug)
    scale = 1.0 + float(np.max(np.abs(verts)))

    def member(pts: np.ndarray) -> np.ndarray:
        rhs = np.vstack([pts.T, np.ones(len(pts))])
        bary = pinv @ rhs
        residual = np.linalg.norm(aug @ bary - rhs, axis=0)
        return (bary.min(axis=0) >= -tol) & (residual <= tol * scale)

    return member


def _batch_box_member(origin, axes, tol: float):
    origin = np.asarray(origin, dtype=float)
    axes = np.asarray(axes, dtype=float)
    if axes.shape[1] == 0:
        def member(pts):
            return np.linalg.norm(pts - origin, axis=1) <= tol * (1.0 + np.abs(origin).max())
        return member
    pinv = np.linalg.pinv(axes)
    scale = 1.0 + float(np.max(np.abs(axes))) + float(np.max(np.abs(origin)))

    def member(pts: np.ndarray) -> np.ndarray:
        coords = (pts - origin) @ pinv.T
        back = coords @ axes.T + origin
        residual = np.linalg.norm(back - pts, axis=1)
        inside = (coords.min(axis=1) >= -tol) & (coords.max(axis=1) <= 1.0 + tol)
        return inside & (residual <= tol * scale)

    return member


def _apex_member(apex: ApexPolytope, tol: float):
    if apex.kind == "box":
        return _batch_box_member(*apex.box, tol)
    if apex.kind in ("point", "simplex"):
        return _batch_simplex_member(apex.vertices, tol)
    members = [_batch_simplex_member(s, tol) for s in apex.simplices]

    def member(pts: np.ndarray) -> np.ndarray:
        hit = np.zeros(len(pts), dtype=bool)
        for fn in members:
            hit |= fn(pts)
        return hit

    return member


def _face_member(poly: Polytope, face: Face, tol: float):
    verts = poly.face_coords(face.id)
    if len(face.vertex_ids) == face.dim + 1:
        return _batch_simplex_member(verts, tol)
    box = parallelotope_axes(verts)
    if box is not None:
        return _batch_box_member(*box, tol)
    members = [_batch_simplex_member(s, tol) for s in triangulate_face(poly, face)]

    def member(pts: np.ndarray) -> np.ndarray:
        hit = np.zeros(len(pts), dtype=bool)
        for fn in members:
            hit |= fn(pts)
        return hit

    return member


class PieceMembershipTester:
    """Decides which points of the product space lie in a given hull piece.

    Points are mapped back to their unique (lambda, apex point, base point)
    coordinates by one linear solve; membership then reduces to containment
    of the apex point in the apex body and of the base point in the base face.
    """

    def __init__(self, piece: HullPiece, tol: float = 1e-9):
        self.piece = piece
        self.tol = tol
        fa = frame_of_vertices(piece.apex.vertices)
        fb = frame_of_vertices(piece.base_vertices)
        self.v = fa.origin
        self.w = fb.origin
        self.ta = fa.basis_t
        self.tb = fb.basis_t
        self.mat = np.hstack([self.ta, self.tb, (self.w - self.v)[:, None]])
        if self.mat.shape[0] != self.mat.shape[1]:
            raise DegenerateFace("piece is not full-dimensional; membership undefined")
        self.solver = np.linalg.inv(self.mat)
        self.apex_member = _apex_member(piece.apex, tol)
        if piece.has_split:
            xm = _face_member(piece.x_poly, piece.x_face, tol)
            ym = _face_member(piece.y_poly, piece.y_face, tol)
            dx = piece.x_poly.dim

            def base_member(pts):
                return xm(np.ascontiguousarray(pts[:, :dx])) \
                    & ym(np.ascontiguousarray(pts[:, dx:]))

            self.base_member = base_member
        else:
            self.base_member = _face_member(piece.base_poly,
                                            piece.base_poly.faces[piece.base_face_id], tol)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        sol = self.solver @ (pts - self.v).T
        s = self.ta.shape[1]
        r = self.tb.shape[1]
        lam = sol[-1]
        ok = (lam >= -self.tol) & (lam <= 1.0 + self.tol)
        one_minus = np.where(np.abs(1.0 - lam) < 1e-13, np.nan, 1.0 - lam)
        lam_safe = np.where(np.abs(lam) < 1e-13, np.nan, lam)
        a_pts = self.v + (self.ta @ (sol[:s] / one_minus)).T
        b_pts = self.w + (self.tb @ (sol[s:s + r] / lam_safe)).T
        # points numerically at lambda = 0 or 1 sit on the apex or base itself
        a_pts = np.where(np.isnan(a_pts), self.v, a_pts)
        b_pts = np.where(np.isnan(b_pts), self.w, b_pts)
        return ok & self.apex_member(a_pts) & self.base_member(b_pts)


def membership_counts(pieces, pts, tol: float = 1e-9) -> np.ndarray:
    """How many pieces contain each point; interior points should hit exactly one."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    counts = np.zeros(len(pts), dtype=int)
    for piece in pieces:
        counts += PieceMembershipTester(piece, tol).contains(pts).astype(int)
    return counts
