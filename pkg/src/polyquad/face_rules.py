"""Quadrature rules over faces.

Reference rules live either on the ordered standard simplex

    T_n = { 0 <= x_n <= ... <= x_1 <= 1 }

or on the unit cube [0,1]^n.  Simplex rules come from the Duffy map (a tensor
Gauss-Jacobi rule absorbing the map's Jacobian into the per-axis weights) or
from precomputed generalized Gauss rule files.  Embedded rules are obtained by
mapping a reference rule onto a concrete face; general faces fall back to a
triangulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, ParseError, ValidationError
from .geometry import Face, Polytope, frame_of_vertices, parallelotope_axes
from .quad1d import gauss_jacobi, gauss_legendre

NODE_TOL = 1e-12


@dataclass(frozen=True)
class FaceRule:
    """Nodes and positive weights with a declared polynomial exactness.

    ``dim`` is the intrinsic dimension; reference rules have ``dim`` node
    columns while embedded rules carry ambient coordinates.
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    degree: float
    source: str
    domain: str  # "simplex", "cube" or "embedded"

    @property
    def n_nodes(self) -> int:
        return len(self.weights)

    def total_weight(self) -> float:
        return float(np.sum(self.weights))


def _freeze(rule: FaceRule) -> FaceRule:
    rule.nodes.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


# -- reference rules ----------------------------------------------------------


@lru_cache(maxsize=1024)
def duffy_simplex_rule(n: int, p: int) -> FaceRule:
    """Tensor rule with p^n nodes on the ordered simplex, exact for all
    monomials of total degree <= 2p-1.

    Axis j uses the Gauss-Jacobi rule for the weight t^(n-j), which absorbs
    the Jacobian of the collapsing map
    (t_1, ..., t_n) -> (t_1, t_1 t_2, ..., t_1 ... t_n).
    """
    axes = [gauss_jacobi(p, 0.0, float(n - j)) for j in range(1, n + 1)]
    grids = np.meshgrid(*[r.nodes for r in axes], indexing="ij")
    wgrids = np.meshgrid(*[r.weights for r in axes], indexing="ij")
    coords = []
    running = np.ones_like(grids[0])
    for g in grids:
        running = running * g
        coords.append(running.reshape(-1))
    weights = np.ones_like(wgrids[0])
    for w in wgrids:
        weights = weights * w
    rule = FaceRule(dim=n, nodes=np.column_stack(coords),
                    weights=weights.reshape(-1).copy(), degree=2 * p - 1,
                    source="duffy-tensor", domain="simplex")
    return _freeze(rule)


@lru_cache(maxsize=1024)
def cube_tensor_rule(n: int, p: int) -> FaceRule:
    """n-fold tensor Gauss rule on [0,1]^n, exact per axis to degree 2p-1."""
    gl = gauss_legendre(p)
    grids = np.meshgrid(*([gl.nodes] * n), indexing="ij")
    wgrids = np.meshgrid(*([gl.weights] * n), indexing="ij")
    weights = np.ones_like(wgrids[0])
    for w in wgrids:
        weights = weights * w
    rule = FaceRule(dim=n, nodes=np.column_stack([g.reshape(-1) for g in grids]),
                    weights=weights.reshape(-1).copy(), degree=2 * p - 1,
                    source="cube-tensor", domain="cube")
    return _freeze(rule)


def simplex_monomial_integral(exponents) -> float:
    """Exact integral of x^beta over the ordered standard simplex.

    Computed by the iterated-integral recursion, innermost variable first,
    in exact rational arithmetic.
    """
    value = Fraction(1)
    accum = 0
    for b in reversed(list(exponents)):
        accum += int(b) + 1
        value /= accum
    return float(value)


def cube_monomial_integral(exponents) -> float:
    value = Fraction(1)
    for b in exponents:
        value /= int(b) + 1
    return float(value)


def _monomials_up_to(n: int, total: int):
    for t in range(total + 1):
        for cuts in combinations(range(t + n - 1), n - 1):
            beta = []
            prev = -1
            for c in cuts:
                beta.append(c - prev - 1)
                prev = c
            beta.append(t + n - 2 - prev)
            yield tuple(beta)


# -- generalized Gauss rule files ---------------------------------------------


def load_generalized_rule(path, n: int | None = None) -> FaceRule:
    """Read a rule file for the ordered simplex and verify its declared degree.

    Format: a header line ``dim n degree q count m [convention ordered|corner]``
    followed by m lines of n+1 reals (node coordinates, then the weight).
    Files in the corner-simplex convention (x >= 0, sum x <= 1) are converted
    to ordered coordinates by suffix sums (a measure-preserving map).
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty rule file %s" % path)
    head = lines[0].split()
    try:
        fields = {head[i]: head[i + 1] for i in range(0, len(head) - 1, 2)}
        dim = int(fields["dim"])
        degree = int(fields["degree"])
        count = int(fields["count"])
    except (KeyError, ValueError, IndexError) as exc:
        raise ParseError("bad rule-file header %r" % lines[0]) from exc
    convention = fields.get("convention", "ordered")
    if convention not in ("ordered", "corner"):
        raise ParseError("unknown node convention %r" % convention)
    if n is not None and n != dim:
        raise DimensionMismatch("expected a %d-dimensional rule, file has dim %d" % (n, dim))
    if len(lines) - 1 != count:
        raise ParseError("header promises %d nodes, file has %d rows" % (count, len(lines) - 1))
    rows = []
    for ln in lines[1:]:
        vals = ln.split()
        if len(vals) != dim + 1:
            raise ParseError("expected %d numbers per row, got %r" % (dim + 1, ln))
        try:
            rows.append([float(v) for v in vals])
        except ValueError as exc:
            raise ParseError("non-numeric entry in row %r" % ln) from exc
    data = np.asarray(rows, dtype=float)
    nodes = data[:, :dim]
    weights = data[:, dim]
    if convention == "corner":
        nodes = np.cumsum(nodes[:, ::-1], axis=1)[:, ::-1]
    _validate_simplex_rule(nodes, weights, dim, degree)
    rule = FaceRule(dim=dim, nodes=nodes, weights=weights, degree=degree,
                    source="generalized-gauss-file", domain="simplex")
    return _freeze(rule)


def _validate_simplex_rule(nodes, weights, dim, degree):
    if np.any(weights <= 0):
        raise ValidationError("rule has non-positive weights")
    # barycentric coordinates of the ordered simplex
    bary = np.empty((len(nodes), dim + 1))
    bary[:, 0] = 1.0 - nodes[:, 0]
    bary[:, 1:dim] = nodes[:, :-1] - nodes[:, 1:]
    bary[:, dim] = nodes[:, -1]
    if np.min(bary) < -NODE_TOL:
        raise ValidationError("rule node outside the reference simplex "
                              "(barycentric coordinate %.3e)" % np.min(bary))
    tol = 1e-10 / math.factorial(dim)
    for beta in _monomials_up_to(dim, degree):
        approx = float(weights @ np.prod(nodes ** np.asarray(beta), axis=1))
        exact = simplex_monomial_integral(beta)
        if abs(approx - exact) > tol:
            raise ValidationError(
                "rule misses declared degree %d on monomial %r: |%.3e - %.3e| > %.1e"
                % (degree, beta, approx, exact, tol))


# -- embedding reference rules onto faces --------------------------------------


def map_rule_to_simplex(rule: FaceRule, verts) -> FaceRule:
    """Embed a simplex reference rule onto the simplex with the given vertices
    via x = v0 + sum_k (v_k - v_{k-1}) xhat_k; weights scale by det(R)."""
    verts = np.asarray(verts, dtype=float)
    if rule.domain != "simplex":
        raise DimensionMismatch("expected a simplex reference rule, got %s" % rule.domain)
    if len(verts) != rule.dim + 1:
        raise DimensionMismatch("rule of dimension %d cannot map onto %d vertices"
                                % (rule.dim, len(verts)))
    frame = frame_of_vertices(verts, expected_dim=rule.dim)
    nodes = verts[0] + rule.nodes @ frame.basis_t.T
    weights = rule.weights * abs(frame.measure_scale)
    return _freeze(FaceRule(dim=rule.dim, nodes=nodes, weights=weights,
                            degree=rule.degree, source=rule.source, domain="embedded"))


def map_rule_to_box(rule: FaceRule, origin, axes) -> FaceRule:
    """Embed a cube reference rule onto origin + [0,1]-combinations of axes columns."""
    axes = np.asarray(axes, dtype=float)
    if rule.domain != "cube":
        raise DimensionMismatch("expected a cube reference rule, got %s" % rule.domain)
    if axes.shape[1] != rule.dim:
        raise DimensionMismatch("rule of dimension %d cannot map onto %d axes"
                                % (rule.dim, axes.shape[1]))
    _, r = np.linalg.qr(axes)
    scale = abs(float(np.prod(np.diag(r))))
    nodes = np.asarray(origin, dtype=float) + rule.nodes @ axes.T
    return _freeze(FaceRule(dim=rule.dim, nodes=nodes, weights=rule.weights * scale,
                            degree=rule.degree, source=rule.source, domain="embedded"))


def map_rule_to_face(rule: FaceRule, poly: Polytope, face: Face) -> FaceRule:
    if rule.dim != face.dim:
        raise DimensionMismatch("rule dimension %d vs face dimension %d"
                                % (rule.dim, face.dim))
    verts = poly.face_coords(face.id)
    if rule.domain == "simplex":
        return map_rule_to_simplex(rule, verts)
    box = parallelotope_axes(verts)
    if box is None:
        raise DimensionMismatch("face %d is not a parallelotope" % face.id)
    return map_rule_to_box(rule, *box)


# -- rule source selection ------------------------------------------------------


@dataclass
class RuleSources:
    """Which rule family feeds each face slot of the assembled kernel rule.

    ``files`` maps an intrinsic dimension to validated generalized-Gauss rules
    (any number of degrees); a slot asking for "file" picks the lowest-degree
    file rule still exact to 2p-1 and falls back to the Duffy tensor rule when
    none qualifies.  Slots are "apex", "x" and "y".
    """

    default: str = "duffy"
    files: dict[int, list[FaceRule]] = field(default_factory=dict)
    slots: dict[str, str] = field(default_factory=dict)

    def add_file(self, path):
        rule = load_generalized_rule(path)
        self.files.setdefault(rule.dim, []).append(rule)
        self.files[rule.dim].sort(key=lambda r: r.degree)
        return rule

    def simplex_rule(self, dim: int, p: int, slot: str) -> FaceRule:
        source = self.slots.get(slot, self.default)
        if source == "file":
            for rule in self.files.get(dim, ()):
                if rule.degree >= 2 * p - 1:
                    return rule
        return duffy_simplex_rule(dim, p)


DEFAULT_SOURCES = RuleSources()


def face_quadrature(poly: Polytope, face: Face, p: int,
                    sources: RuleSources | None = None, slot: str = "x") -> FaceRule:
    """Embedded rule on an arbitrary lattice face.

    Simplex faces map a simplex reference rule, parallelotope faces map a
    tensor rule, anything else is triangulated and the mapped simplex rules
    concatenated.  A 0-face yields a single node of weight one.
    """
    sources = sources or DEFAULT_SOURCES
    verts = poly.face_coords(face.id)
    if face.dim == 0:
        return _freeze(FaceRule(dim=0, nodes=verts.copy(), weights=np.array([1.0]),
                                degree=math.inf, source="point", domain="embedded"))
    if len(face.vertex_ids) == face.dim + 1:
        return map_rule_to_simplex(sources.simplex_rule(face.dim, p, slot), verts)
    box = parallelotope_axes(verts)
    if box is not None:
        return map_rule_to_box(cube_tensor_rule(face.dim, p), *box)
    from .decomposition import triangulate_face
    ref = sources.simplex_rule(face.dim, p, slot)
    parts = [map_rule_to_simplex(ref, sverts) for sverts in triangulate_face(poly, face)]
    nodes = np.vstack([part.nodes for part in parts])
    weights = np.concatenate([part.weights for part in parts])
    return _freeze(FaceRule(dim=face.dim, nodes=nodes, weights=weights,
                            degree=min(part.degree for part in parts),
                            source="triangulated", domain="embedded"))


def face_rule_to_csv(rule: FaceRule) -> str:
    """Embedded-rule CSV: one row x1,...,xd,w per node."""
    cols = rule.nodes.shape[1]
    header = ",".join("x%d" % (i + 1) for i in range(cols)) + ",w"
    lines = [header]
    for node, w in zip(rule.nodes, rule.weights):
        lines.append(",".join("%.17g" % c for c in node) + ",%.17g" % w)
    return "\n".join(lines) + "\n"
