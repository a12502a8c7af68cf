"""Convex polytopes with explicit face lattices.

A polytope is given by its vertex coordinates plus combinatorial data: the set
of faces, each listing its vertices and its facets.  Nothing is ever inferred
from coordinates alone; builders for simplices, cubes, polygons, Cartesian
products and a double-pyramid fixture are provided, and arbitrary lattices can
be loaded from JSON.

On top of the lattice this module provides the metric machinery used by the
decomposition and assembly layers: orthogonal frames for affine hulls of
faces, point-to-hull distances, and the constant Jacobian factor of the
parameterization of the convex hull of two faces.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

from .errors import (
    AssumptionViolated,
    BadConformity,
    DegenerateFace,
    DegenerateHull,
    ParseError,
)

# A singular value (or triangular-factor diagonal) counts as zero when below
# RANK_TOL times the largest column norm of the matrix it came from.
RANK_TOL = 1e-10


@dataclass(frozen=True)
class Face:
    """One face of a polytope: an id, its vertex ids, its dimension and its facets."""

    id: int
    vertex_ids: tuple[int, ...]
    dim: int
    facet_ids: tuple[int, ...]


@dataclass(frozen=True)
class AffineFrame:
    """Orthogonal parameterization of the affine hull of a face.

    ``basis_t`` holds independent successive vertex differences as columns,
    ``basis_q`` and ``factor_r`` its QR factors (R with positive diagonal),
    and ``measure_scale = det(R)`` converts parameter-space volume to
    face-space volume.  A 0-face carries empty factors and scale 1.
    """

    origin: np.ndarray
    basis_q: np.ndarray
    factor_r: np.ndarray
    basis_t: np.ndarray
    measure_scale: float


@dataclass(frozen=True)
class HullDescriptor:
    """Shape data of conv(A, B): the scale factor delta and the dimension split."""

    delta: float
    dims: tuple[int, int]
    face_a: Face | None = None
    face_b: Face | None = None


class Polytope:
    """Vertex coordinates plus a face lattice.

    Instances are immutable after construction; all derived data is computed
    up front so they can be shared freely between threads.
    """

    def __init__(self, dim, vertices, faces, top, face_parts=None, factors=None,
                 validate=True):
        self.dim = int(dim)
        self.vertices = np.array(vertices, dtype=float)
        self.vertices.setflags(write=False)
        self.faces = {int(f.id): f for f in faces}
        self.top = int(top)
        # Cartesian products remember which factor faces each face came from.
        self.face_parts = dict(face_parts) if face_parts else None
        self.factors = factors
        self._face_by_verts = {frozenset(f.vertex_ids): f.id for f in self.faces.values()}
        self._volumes: dict[int, float] = {}
        self._frames: dict[int, AffineFrame] = {}
        if validate:
            self._validate()

    # -- basic queries ------------------------------------------------------

    def face(self, fid: int) -> Face:
        return self.faces[fid]

    def face_coords(self, fid: int) -> np.ndarray:
        return self.vertices[list(self.faces[fid].vertex_ids)]

    def faces_of_dim(self, j: int) -> list[Face]:
        return [f for f in self.faces.values() if f.dim == j]

    def face_id_by_vertices(self, vertex_ids) -> int:
        return self._face_by_verts[frozenset(vertex_ids)]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def _validate(self):
        nv = self.n_vertices
        if self.top not in self.faces:
            raise DegenerateFace("top face id %r missing from lattice" % self.top)
        for f in self.faces.values():
            if not f.vertex_ids:
                raise DegenerateFace("face %d has no vertices" % f.id)
            if min(f.vertex_ids) < 0 or max(f.vertex_ids) >= nv:
                raise DegenerateFace("face %d references unknown vertices" % f.id)
            for gid in f.facet_ids:
                g = self.faces.get(gid)
                if g is None:
                    raise DegenerateFace("face %d lists missing facet %d" % (f.id, gid))
                if g.dim != f.dim - 1:
                    raise DegenerateFace(
                        "facet %d of face %d has dimension %d, expected %d"
                        % (gid, f.id, g.dim, f.dim - 1))
                if not set(g.vertex_ids) <= set(f.vertex_ids):
                    raise DegenerateFace("facet %d is not contained in face %d" % (gid, f.id))
            if f.dim >= 1 and not f.facet_ids:
                raise DegenerateFace("face %d of dimension %d lists no facets" % (f.id, f.dim))
            verts = self.vertices[list(f.vertex_ids)]
            rank = numeric_rank((verts[1:] - verts[0]).T)
            if rank != f.dim:
                raise DegenerateFace(
                    "face %d has affine rank %d, declared dimension %d" % (f.id, rank, f.dim))

    # -- metric helpers (cached) --------------------------------------------

    def frame(self, fid: int) -> AffineFrame:
        if fid not in self._frames:
            self._frames[fid] = affine_frame(self, self.faces[fid])
        return self._frames[fid]

    def volume(self, fid: int | None = None) -> float:
        if fid is None:
            fid = self.top
        return face_volume(self, self.faces[fid])


# -- numerical linear algebra helpers ---------------------------------------


def _max_col_norm(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(mat, axis=0)))


def numeric_rank(mat: np.ndarray, tol: float = RANK_TOL) -> int:
    """Rank of ``mat`` counting singular values below tol * max column norm as zero."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    scale = _max_col_norm(mat)
    if scale == 0.0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(sv > tol * scale))


def _independent_columns(mat: np.ndarray, tol: float = RANK_TOL) -> list[int]:
    """Indices (ascending) of a maximal independent column subset of ``mat``."""
    if mat.shape[1] == 0:
        return []
    scale = _max_col_norm(mat)
    if scale == 0.0:
        return []
    _, r, piv = scipy.linalg.qr(mat, mode="economic", pivoting=True)
    diag = np.abs(np.diag(np.atleast_2d(r)))
    rank = int(np.sum(diag > tol * scale))
    return sorted(int(p) for p in piv[:rank])


def _signed_qr(mat: np.ndarray):
    """Reduced QR with the diagonal of R forced positive."""
    if mat.shape[1] == 0:
        return np.zeros((mat.shape[0], 0)), np.zeros((0, 0))
    q, r = np.linalg.qr(mat)
    sign = np.sign(np.diag(r))
    sign[sign == 0] = 1.0
    return q * sign[np.newaxis, :], r * sign[:, np.newaxis]


def frame_of_vertices(verts: np.ndarray, expected_dim: int | None = None) -> AffineFrame:
    """Orthogonal frame for the affine hull of a vertex array.

    Columns of the spanning basis are successive vertex differences; dependent
    columns (present whenever the face has more than dim+1 vertices) are
    dropped via pivoted QR before factorization.
    """
    verts = np.asarray(verts, dtype=float)
    origin = verts[0]
    diffs = (verts[1:] - verts[:-1]).T  # successive differences as columns
    cols = _independent_columns(diffs)
    if expected_dim is not None and len(cols) != expected_dim:
        raise DegenerateFace(
            "vertex set has affine rank %d, expected %d" % (len(cols), expected_dim))
    basis_t = diffs[:, cols] if cols else np.zeros((verts.shape[1], 0))
    q, r = _signed_qr(basis_t)
    scale = float(np.prod(np.diag(r))) if r.size else 1.0
    return AffineFrame(origin=origin, basis_q=q, factor_r=r, basis_t=basis_t,
                       measure_scale=scale)


# -- spec operations ---------------------------------------------------------


def affine_frame(poly: Polytope, face: Face) -> AffineFrame:
    """Frame of a face's affine hull; raises DegenerateFace on rank loss."""
    return frame_of_vertices(poly.vertices[list(face.vertex_ids)], expected_dim=face.dim)


def dist_to_affine_hull(x, poly: Polytope, face: Face) -> float:
    """Euclidean distance from point ``x`` to aff(face)."""
    frame = poly.frame(face.id)
    res = np.asarray(x, dtype=float) - frame.origin
    if frame.basis_q.shape[1]:
        res = res - frame.basis_q @ (frame.basis_q.T @ res)
    return float(np.linalg.norm(res))


def hull_assumption_holds(a_verts, b_verts, tol: float = RANK_TOL) -> bool:
    """True iff aff(A) and aff(B) are disjoint with trivially intersecting directions."""
    fa = frame_of_vertices(a_verts)
    fb = frame_of_vertices(b_verts)
    s = fa.basis_t.shape[1]
    r = fb.basis_t.shape[1]
    gap = (np.asarray(b_verts, float)[0] - fa.origin)[:, np.newaxis]
    stacked = np.hstack([fa.basis_t, fb.basis_t])
    if numeric_rank(stacked, tol) != s + r:
        return False
    return numeric_rank(np.hstack([stacked, gap]), tol) == s + r + 1


def check_hull_assumption(poly: Polytope, a: Face, b: Face) -> bool:
    return hull_assumption_holds(poly.face_coords(a.id), poly.face_coords(b.id))


def hull_delta(a_verts, b_verts) -> tuple[float, int, int]:
    """Jacobian scale of the conv(A, B) parameterization, with the dims (s, r).

    delta = |det R| / (|det R_A| |det R_B|) where R is the triangular factor
    of [T_A, T_B, w - v].  The value does not depend on the choice of bases or
    anchor vertices; only its magnitude is meaningful, so absolute values are
    taken throughout.
    """
    a_verts = np.asarray(a_verts, dtype=float)
    b_verts = np.asarray(b_verts, dtype=float)
    if not hull_assumption_holds(a_verts, b_verts):
        raise AssumptionViolated("affine hulls of A and B are not independent")
    fa = frame_of_vertices(a_verts)
    fb = frame_of_vertices(b_verts)
    gap = (b_verts[0] - a_verts[0])[:, np.newaxis]
    stacked = np.hstack([fa.basis_t, fb.basis_t, gap])
    _, r_fact = np.linalg.qr(stacked)
    diag = np.abs(np.diag(r_fact))
    if np.any(diag <= RANK_TOL * _max_col_norm(stacked)):
        raise DegenerateHull("conv(A, B) has numerically vanishing measure")
    delta = float(np.prod(diag)) / (abs(fa.measure_scale) * abs(fb.measure_scale))
    return delta, fa.basis_t.shape[1], fb.basis_t.shape[1]


def hull_descriptor(poly: Polytope, a: Face, b: Face) -> HullDescriptor:
    delta, s, r = hull_delta(poly.face_coords(a.id), poly.face_coords(b.id))
    return HullDescriptor(delta=delta, dims=(s, r), face_a=a, face_b=b)


def simplex_volume(verts) -> float:
    """j-dimensional measure of a j-simplex given as j+1 vertices."""
    verts = np.asarray(verts, dtype=float)
    j = len(verts) - 1
    if j == 0:
        return 1.0
    frame = frame_of_vertices(verts, expected_dim=j)
    return abs(frame.measure_scale) / math.factorial(j)


def face_volume(poly: Polytope, face: Face) -> float:
    """j-dimensional measure of a face, by coning over its lowest vertex."""
    cached = poly._volumes.get(face.id)
    if cached is not None:
        return cached
    if face.dim == 0:
        vol = 1.0
    elif face.dim == 1:
        a, b = poly.face_coords(face.id)
        vol = float(np.linalg.norm(b - a))
    else:
        apex_id = min(face.vertex_ids)
        apex = poly.vertices[apex_id]
        vol = 0.0
        for gid in face.facet_ids:
            g = poly.faces[gid]
            if apex_id in g.vertex_ids:
                continue
            h = dist_to_affine_hull(apex, poly, g)
            vol += h * face_volume(poly, g) / face.dim
        if vol <= 0.0:
            raise DegenerateFace("face %d has vanishing %d-volume" % (face.id, face.dim))
    poly._volumes[face.id] = vol
    return vol


def parallelotope_axes(verts, tol: float = 1e-9):
    """Detect an affine box structure from a vertex set.

    Returns (origin, axes) with axes as columns when the vertices are exactly
    the {0,1}-combinations of independent generators, else None.  Generators
    are recovered as the difference vectors that cannot be written as a sum of
    two other difference vectors.
    """
    verts = np.asarray(verts, dtype=float)
    diffs = verts[1:] - verts[0]
    rank = numeric_rank(diffs.T)
    if len(verts) != 1 << rank:
        return None
    if rank == 0:
        return verts[0], np.zeros((verts.shape[1], 0))
    scale = float(np.max(np.linalg.norm(diffs, axis=1)))
    sums = diffs[:, None, :] + diffs[None, :, :]
    gens = []
    for i, d in enumerate(diffs):
        gap = np.linalg.norm(sums - d, axis=2)
        gap[i, :] = np.inf  # a vector may not decompose through itself
        gap[:, i] = np.inf
        if np.min(gap) > tol * scale:
            gens.append(d)
    if len(gens) != rank:
        return None
    axes = np.array(gens).T
    expected = np.array([verts[0] + axes @ np.asarray(bits, dtype=float)
                         for bits in itertools.product((0.0, 1.0), repeat=rank)])
    used = np.zeros(len(verts), dtype=bool)
    for cand in expected:
        dist = np.linalg.norm(verts - cand, axis=1)
        dist[used] = np.inf
        hit = int(np.argmin(dist))
        if dist[hit] > tol * max(scale, 1.0):
            return None
        used[hit] = True
    return verts[0], axes


def face_plane_gap(poly: Polytope, face: Face, plane_point, plane_basis_q) -> float:
    """Max-norm distance between a face and an affine plane (zero iff they meet).

    Solved as a small LP over the face's convex coefficients; used to verify
    that nonsingular faces stay clear of the singular plane.
    """
    w = poly.face_coords(face.id)
    plane_point = np.asarray(plane_point, dtype=float)
    q = np.asarray(plane_basis_q, dtype=float)
    res = (w - plane_point).T  # columns: w_j - s0
    if q.ndim == 2 and q.shape[1] > 0:
        res = res - q @ (q.T @ res)
    d, nv = res.shape
    # variables: nv convex coefficients followed by the bound t
    c = np.zeros(nv + 1)
    c[-1] = 1.0
    a_ub = np.zeros((2 * d, nv + 1))
    a_ub[:d, :nv] = res
    a_ub[d:, :nv] = -res
    a_ub[:, -1] = -1.0
    a_eq = np.ones((1, nv + 1))
    a_eq[0, -1] = 0.0
    sol = linprog(c, A_ub=a_ub, b_ub=np.zeros(2 * d), A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * nv + [(0, None)], method="highs")
    if not sol.success:
        raise DegenerateFace("distance LP failed for face %d: %s" % (face.id, sol.message))
    return float(sol.x[-1])


# -- builders ----------------------------------------------------------------


def _build_lattice(face_vertex_sets: list[tuple[int, ...]], vertices) -> tuple[list[Face], int]:
    """Assemble Face records from vertex-id sets, wiring facets by set inclusion.

    Expects the list to be closed under taking facets.  Dimension is the
    affine rank of each vertex set.
    """
    vertices = np.asarray(vertices, dtype=float)
    ranked = []
    for vs in face_vertex_sets:
        vs = tuple(sorted(vs))
        verts = vertices[list(vs)]
        ranked.append((numeric_rank((verts[1:] - verts[0]).T), vs))
    ranked.sort()
    ids = {vs: i for i, (_, vs) in enumerate(ranked)}
    by_dim: dict[int, list[tuple[int, ...]]] = {}
    for dim, vs in ranked:
        by_dim.setdefault(dim, []).append(vs)
    faces = []
    for dim, vs in ranked:
        facets = [ids[cand] for cand in by_dim.get(dim - 1, ())
                  if set(cand) < set(vs)]
        faces.append(Face(id=ids[vs], vertex_ids=vs, dim=dim, facet_ids=tuple(sorted(facets))))
    top_dim, top_vs = ranked[-1]
    return faces, ids[top_vs]


def simplex(n: int, vertices=None) -> Polytope:
    """n-simplex; defaults to the standard one [0, e1, ..., en]."""
    if vertices is None:
        vertices = np.vstack([np.zeros(n), np.eye(n)])
    vertices = np.asarray(vertices, dtype=float)
    if len(vertices) != n + 1:
        raise DegenerateFace("an %d-simplex needs %d vertices" % (n, n + 1))
    faces = []
    ids = {}
    counter = itertools.count()
    for size in range(1, n + 2):
        for subset in itertools.combinations(range(n + 1), size):
            ids[subset] = next(counter)
    for subset, fid in ids.items():
        facets = []
        if len(subset) >= 2:
            facets = [ids[s] for s in itertools.combinations(subset, len(subset) - 1)]
        faces.append(Face(id=fid, vertex_ids=subset, dim=len(subset) - 1,
                          facet_ids=tuple(sorted(facets))))
    return Polytope(vertices.shape[1], vertices, faces, ids[tuple(range(n + 1))])


def _cube_spec_ids(d: int) -> dict[tuple[int, ...], int]:
    """Face ids of cube(d), keyed by per-coordinate spec (0 low, 1 high, 2 free)."""
    specs = sorted(itertools.product((0, 1, 2), repeat=d),
                   key=lambda s: (sum(1 for c in s if c == 2), s))
    return {spec: i for i, spec in enumerate(specs)}


def cube(d: int) -> Polytope:
    """Unit cube [0,1]^d.  Vertex ids follow binary order, so the lowest id in
    any face is its coordinatewise-minimal corner."""
    verts = np.array([[(k >> i) & 1 for i in range(d)] for k in range(1 << d)],
                     dtype=float)
    spec_ids = _cube_spec_ids(d)

    def vertex_id(bits):
        return int(sum(b << i for i, b in enumerate(bits)))

    faces = []
    for spec, fid in spec_ids.items():
        free = [i for i, c in enumerate(spec) if c == 2]
        vids = []
        for fill in itertools.product((0, 1), repeat=len(free)):
            bits = list(spec)
            for pos, b in zip(free, fill):
                bits[pos] = b
            vids.append(vertex_id(bits))
        facets = []
        for pos in free:
            for pin in (0, 1):
                sub = list(spec)
                sub[pos] = pin
                facets.append(spec_ids[tuple(sub)])
        faces.append(Face(id=fid, vertex_ids=tuple(sorted(vids)), dim=len(free),
                          facet_ids=tuple(sorted(facets))))
    return Polytope(d, verts, faces, spec_ids[(2,) * d])


def cube_face_id(poly_dim: int, spec) -> int:
    """Face id inside cube(d) for a per-coordinate spec (0 low, 1 high, 2 free)."""
    return _cube_spec_ids(poly_dim)[tuple(spec)]


def polygon(coords) -> Polytope:
    """Convex polygon from vertices in cyclic order."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    faces = [Face(id=i, vertex_ids=(i,), dim=0, facet_ids=()) for i in range(n)]
    for i in range(n):
        faces.append(Face(id=n + i, vertex_ids=tuple(sorted((i, (i + 1) % n))),
                          dim=1, facet_ids=(i, (i + 1) % n)))
    faces.append(Face(id=2 * n, vertex_ids=tuple(range(n)), dim=2,
                      facet_ids=tuple(range(n, 2 * n))))
    return Polytope(coords.shape[1], coords, faces, 2 * n)


def double_pyramid() -> Polytope:
    """Bipyramid over a square: four equatorial vertices 0..3, poles 4 and 5.

    The equatorial plane cuts through the interior, so marking 0..3 as
    singular exercises the interior-singularity configuration.
    """
    verts = np.array([
        [-1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
        [0.0, 0.0, -1.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
    ])
    ring = [(0, 1), (1, 2), (2, 3), (0, 3)]
    spokes = [(i, p) for p in (4, 5) for i in range(4)]
    triangles = [tuple(sorted((a, b, p))) for (a, b) in ring for p in (4, 5)]
    sets = [(i,) for i in range(6)] + ring + spokes + triangles + [tuple(range(6))]
    faces, top = _build_lattice([tuple(sorted(s)) for s in sets], verts)
    return Polytope(3, verts, faces, top)


def affine_image(poly: Polytope, matrix=None, shift=None) -> Polytope:
    """Same lattice, vertices mapped through x -> matrix @ x + shift."""
    verts = np.asarray(poly.vertices, dtype=float)
    if matrix is not None:
        verts = verts @ np.asarray(matrix, dtype=float).T
    if shift is not None:
        verts = verts + np.asarray(shift, dtype=float)
    return Polytope(verts.shape[1], verts, list(poly.faces.values()), poly.top)


def cartesian_product(px: Polytope, py: Polytope) -> Polytope:
    """Product polytope; faces are all products F_x x F_y, and the facets of
    F_x x F_y are (facet of F_x) x F_y together with F_x x (facet of F_y)."""
    nvy = py.n_vertices
    verts = np.hstack([np.repeat(px.vertices, nvy, axis=0),
                       np.tile(py.vertices, (px.n_vertices, 1))])
    pair_ids = {}
    counter = itertools.count()
    pairs = sorted(((fx.dim + fy.dim, fx.id, fy.id)
                    for fx in px.faces.values() for fy in py.faces.values()))
    for _, fxid, fyid in pairs:
        pair_ids[(fxid, fyid)] = next(counter)
    faces = []
    parts = {}
    for (fxid, fyid), fid in pair_ids.items():
        fx, fy = px.faces[fxid], py.faces[fyid]
        vids = tuple(sorted(ix * nvy + iy
                            for ix in fx.vertex_ids for iy in fy.vertex_ids))
        facets = [pair_ids[(g, fyid)] for g in fx.facet_ids]
        facets += [pair_ids[(fxid, g)] for g in fy.facet_ids]
        faces.append(Face(id=fid, vertex_ids=vids, dim=fx.dim + fy.dim,
                          facet_ids=tuple(sorted(facets))))
        parts[fid] = (fxid, fyid)
    return Polytope(px.dim + py.dim, verts, faces, pair_ids[(px.top, py.top)],
                    face_parts=parts, factors=(px, py))


def simplex_pair(n: int, m: int, k: int):
    """Conforming pair of standard simplices sharing vertices 0..k.

    The second simplex reflects its non-shared vertices, so the pair meets
    exactly in the shared face.  Returns (Sx, Sy, shared_vertex_pairs).
    """
    if not 0 <= k <= min(n, m):
        raise BadConformity("need 0 <= k <= min(n, m)")
    d = max(n, m)
    eye = np.eye(d)
    sx_verts = np.vstack([np.zeros(d), eye[:n]])
    sy_rows = [sx_verts[i] for i in range(k + 1)]
    sy_rows += [-eye[j - 1] for j in range(k + 1, m + 1)]
    sx = simplex(n, sx_verts)
    sy = simplex(m, np.vstack(sy_rows))
    return sx, sy, [(i, i) for i in range(k + 1)]


def cube_pair(d: int, k: int):
    """[0,1]^d against [0,1]^k x [-1,0]^(d-k), sharing a k-face.

    Returns (Cx, Cy, shared_vertex_pairs).
    """
    if not 0 <= k <= d:
        raise BadConformity("need 0 <= k <= d")
    cx = cube(d)
    shift = np.zeros(d)
    shift[k:] = -1.0
    cy = affine_image(cube(d), shift=shift)
    shared = []
    for bits in itertools.product((0, 1), repeat=k):
        ix = sum(b << i for i, b in enumerate(bits))
        iy = ix + sum(1 << i for i in range(k, d))
        shared.append((ix, iy))
    return cx, cy, shared


# -- JSON I/O and builder shorthand ------------------------------------------


def polytope_to_json(poly: Polytope) -> dict:
    return {
        "dim": poly.dim,
        "vertices": poly.vertices.tolist(),
        "faces": [{"id": f.id, "verts": list(f.vertex_ids), "facets": list(f.facet_ids)}
                  for f in sorted(poly.faces.values(), key=lambda f: f.id)],
        "top": poly.top,
    }


def polytope_from_json(obj) -> Polytope:
    try:
        verts = np.asarray(obj["vertices"], dtype=float)
        faces = []
        for rec in obj["faces"]:
            vids = tuple(sorted(int(v) for v in rec["verts"]))
            rank_verts = verts[list(vids)]
            dim = int(rec.get("dim", numeric_rank((rank_verts[1:] - rank_verts[0]).T)))
            faces.append(Face(id=int(rec["id"]), vertex_ids=vids, dim=dim,
                              facet_ids=tuple(int(g) for g in rec.get("facets", ()))))
        return Polytope(int(obj["dim"]), verts, faces, int(obj["top"]))
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError("malformed polytope JSON: %s" % exc) from exc


_CALL_RE = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.S)


def _split_args(text: str) -> list[str]:
    args, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            args.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    tail = "".join(cur).strip()
    if tail:
        args.append(tail)
    return [a.strip() for a in args]


def parse_builder(expr: str) -> Polytope:
    """Builder shorthand: simplex(d), cube(d), product(a, b), double_pyramid()."""
    m = _CALL_RE.match(expr)
    if not m:
        raise ParseError("cannot parse builder expression %r" % expr)
    name, body = m.group(1), m.group(2)
    args = _split_args(body)
    if name == "simplex":
        return simplex(int(args[0]))
    if name == "cube":
        return cube(int(args[0]))
    if name == "product":
        if len(args) != 2:
            raise ParseError("product() takes two arguments")
        return cartesian_product(parse_builder(args[0]), parse_builder(args[1]))
    if name == "double_pyramid":
        return double_pyramid()
    raise ParseError("unknown builder %r" % name)


def load_polytope(path) -> Polytope:
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, str):
        return parse_builder(obj)
    if isinstance(obj, dict) and "builder" in obj:
        return parse_builder(obj["builder"])
    return polytope_from_json(obj)
