"""Composite quadrature for double integrals with an |x - y|^(-alpha) kernel.

Every hull piece contributes a tensor rule: a Gauss-Jacobi rule in the cone
parameter lambda for the weight (1 - lambda)^s * lambda^(r - alpha), a rule on
the apex body (which lies on the diagonal plane), and rules on the two base
faces.  An emitted node pair is

    x = (1 - lambda) a + lambda x_F,    y = (1 - lambda) a + lambda y_F,

and its weight absorbs the piece's hull scale factor delta and, by default,
the kernel factor |x_F - y_F|^(-alpha), so that summing w * g(x, y) directly
approximates the kernel integral.  On every piece |x - y| equals
lambda * |x_F - y_F|, which is what makes the lambda direction carry the whole
singularity.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from io import StringIO
from typing import Callable

import numpy as np

from .decomposition import HullPiece
from .errors import (
    AssumptionViolated,
    BudgetExceeded,
    DegenerateBase,
    IntegrabilityViolated,
    NonFiniteValue,
    ParseError,
)
from .face_rules import (
    FaceRule,
    RuleSources,
    cube_tensor_rule,
    face_quadrature,
    map_rule_to_box,
    map_rule_to_simplex,
)
from .quad1d import Rule1D, gauss_jacobi

BASE_GAP_TOL = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    """Kernel |x - y|^(-alpha) g(x, y); ``g`` maps two (N, d) arrays to (N,)."""

    alpha: float
    g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    d: int


@dataclass
class KernelRule:
    """Folded rule on P_x x P_y: node pairs with weights and piece provenance."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    piece_ids: np.ndarray
    alpha: float
    degree: int
    d: int
    folded: bool = True

    @property
    def n_nodes(self) -> int:
        return len(self.w)


def _apex_quadrature(apex, p: int, sources: RuleSources) -> FaceRule:
    if apex.kind == "point":
        return FaceRule(dim=0, nodes=apex.vertices[:1].copy(),
                        weights=np.array([1.0]), degree=math.inf,
                        source="point", domain="embedded")
    if apex.kind == "box":
        return map_rule_to_box(cube_tensor_rule(apex.dim, p), *apex.box)
    ref = sources.simplex_rule(apex.dim, p, "apex")
    parts = [map_rule_to_simplex(ref, sv) for sv in apex.simplices]
    if len(parts) == 1:
        return parts[0]
    return FaceRule(dim=apex.dim, nodes=np.vstack([r.nodes for r in parts]),
                    weights=np.concatenate([r.weights for r in parts]),
                    degree=ref.degree, source=ref.source, domain="embedded")


class _PieceRule:
    """Per-piece factors of the tensor rule, kept separate for streaming."""

    def __init__(self, piece: HullPiece, alpha: float, p: int, sources: RuleSources):
        if not piece.has_split:
            raise AssumptionViolated(
                "kernel assembly needs pieces with an x/y face split; "
                "decompose a Cartesian product of two polytopes")
        if alpha >= piece.r + 1:
            raise IntegrabilityViolated(
                "alpha=%g is not integrable against a base of dimension %d "
                "(need alpha < %d)" % (alpha, piece.r, piece.r + 1))
        self.piece = piece
        self.d = piece.x_poly.dim
        self.lam: Rule1D = gauss_jacobi(p, float(piece.s), float(piece.r) - alpha)
        apex_rule = _apex_quadrature(piece.apex, p, sources)
        d = self.d
        ax = apex_rule.nodes[:, :d]
        ay = apex_rule.nodes[:, d:]
        scale = 1.0 + float(np.max(np.abs(apex_rule.nodes))) if apex_rule.nodes.size else 1.0
        if np.max(np.abs(ax - ay)) > 1e-9 * scale:
            raise AssumptionViolated("apex body is not on the diagonal plane")
        self.apex_nodes = np.ascontiguousarray(ax)
        self.apex_weights = apex_rule.weights
        rx = face_quadrature(piece.x_poly, piece.x_face, p, sources, slot="x")
        ry = face_quadrature(piece.y_poly, piece.y_face, p, sources, slot="y")
        # flatten the base pair (x_F, y_F) into one axis
        nx, ny = rx.n_nodes, ry.n_nodes
        self.xf = np.repeat(rx.nodes, ny, axis=0)
        self.yf = np.tile(ry.nodes, (nx, 1))
        gaps = np.linalg.norm(self.xf - self.yf, axis=1)
        gap_scale = 1.0 + float(np.max(np.abs(piece.base_vertices)))
        if np.min(gaps) <= BASE_GAP_TOL * gap_scale:
            raise DegenerateBase(
                "base faces come within %.3e of each other; the decomposition "
                "left a singular base" % np.min(gaps))
        self.base_weights = np.repeat(rx.weights, ny) * np.tile(ry.weights, nx)
        self.kernel_factor = gaps ** (-alpha)
        self.alpha = alpha

    @property
    def n_nodes(self) -> int:
        return self.lam.points * len(self.apex_weights) * len(self.base_weights)

    def folded_base_weights(self, fold: bool) -> np.ndarray:
        if fold:
            return self.base_weights * self.kernel_factor
        return self.base_weights

    def lambda_weights(self, fold: bool) -> np.ndarray:
        if fold:
            return self.lam.weights
        # unfolded rules expect the caller to multiply by |x - y|^(-alpha);
        # compensate the lambda^alpha part of the kernel here
        return self.lam.weights * self.lam.nodes ** self.alpha

    def emit(self, fold: bool = True):
        """Materialize all node pairs and weights of this piece."""
        lam = self.lam.nodes
        x = ((1.0 - lam)[:, None, None, None] * self.apex_nodes[None, :, None, :]
             + lam[:, None, None, None] * self.xf[None, None, :, :])
        y = ((1.0 - lam)[:, None, None, None] * self.apex_nodes[None, :, None, :]
             + lam[:, None, None, None] * self.yf[None, None, :, :])
        w = (self.piece.delta
             * self.lambda_weights(fold)[:, None, None]
             * self.apex_weights[None, :, None]
             * self.folded_base_weights(fold)[None, None, :])
        d = self.d
        return x.reshape(-1, d), y.reshape(-1, d), w.reshape(-1)

    def value(self, g, max_block: int = 1 << 22) -> float:
        """Stream sum(w * g(x, y)) over this piece without materializing it."""
        lam = self.lam.nodes
        wlam = self.piece.delta * self.lambda_weights(True)
        kv = self.folded_base_weights(True)
        nf = len(kv)
        na = len(self.apex_weights)
        block = max(1, max_block // max(nf, 1))
        partials = []
        for q in range(self.lam.points):
            lx = lam[q] * self.xf
            ly = lam[q] * self.yf
            for lo in range(0, na, block):
                hi = min(lo + block, na)
                a = (1.0 - lam[q]) * self.apex_nodes[lo:hi]
                x = a[:, None, :] + lx[None, :, :]
                y = a[:, None, :] + ly[None, :, :]
                vals = np.asarray(g(x.reshape(-1, self.d), y.reshape(-1, self.d)),
                                  dtype=float).reshape(hi - lo, nf)
                if not np.all(np.isfinite(vals)):
                    raise NonFiniteValue("integrand returned a non-finite value")
                partials.append(wlam[q] * float(self.apex_weights[lo:hi] @ (vals @ kv)))
        return math.fsum(partials)


def _prepare(pieces, alpha, p, sources):
    sources = sources or RuleSources()
    return [_PieceRule(piece, alpha, p, sources) for piece in pieces]


def assemble_kernel_rule(pieces, alpha: float, p: int,
                         sources: RuleSources | None = None,
                         fold: bool = True) -> KernelRule:
    """Build the full folded rule; node count is sum over pieces of
    p * n_apex * n_x * n_y."""
    prepared = _prepare(pieces, alpha, p, sources)
    xs, ys, ws, ids = [], [], [], []
    for idx, pr in enumerate(prepared):
        x, y, w = pr.emit(fold)
        xs.append(x)
        ys.append(y)
        ws.append(w)
        ids.append(np.full(len(w), idx, dtype=int))
    return KernelRule(x=np.vstack(xs), y=np.vstack(ys), w=np.concatenate(ws),
                      piece_ids=np.concatenate(ids), alpha=alpha, degree=p,
                      d=prepared[0].d, folded=fold)


def integrate(rule: KernelRule, g) -> float:
    """Apply a folded rule to a smooth factor g."""
    vals = np.asarray(g(rule.x, rule.y), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise NonFiniteValue("g returned %r at x=%s y=%s"
                             % (vals[idx], rule.x[idx], rule.y[idx]))
    return float(rule.w @ vals)


def integrate_pieces(pieces, alpha: float, p: int, g,
                     sources: RuleSources | None = None,
                     max_block: int = 1 << 22, threads: int = 1):
    """Streaming evaluation of the assembled rule; returns (value, node count)."""
    prepared = _prepare(pieces, alpha, p, sources)
    nodes = sum(pr.n_nodes for pr in prepared)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(lambda pr: pr.value(g, max_block), prepared))
    else:
        vals = [pr.value(g, max_block) for pr in prepared]
    return math.fsum(vals), nodes


@dataclass(frozen=True)
class SweepRow:
    degree: int
    nodes: int
    value: float
    abs_err: float
    rel_err: float


def convergence_sweep(pieces, alpha: float, g, degrees,
                      sources: RuleSources | None = None,
                      reference_degree: int | None = None,
                      threads: int = 1) -> list[SweepRow]:
    """Values over a degree ladder, with errors against the highest degree run."""
    degrees = sorted(set(int(p) for p in degrees))
    if not degrees:
        raise ValueError("no degrees given")
    ref_p = reference_degree if reference_degree is not None else max(degrees)
    ref_p = max(ref_p, max(degrees))
    run = degrees if ref_p in degrees else degrees + [ref_p]
    results = {}
    for p in run:
        results[p] = integrate_pieces(pieces, alpha, p, g, sources=sources,
                                      threads=threads)
    ref_value = results[ref_p][0]
    scale = max(abs(ref_value), np.finfo(float).tiny)
    rows = []
    for p in run:
        value, nodes = results[p]
        err = abs(value - ref_value)
        rows.append(SweepRow(degree=p, nodes=nodes, value=value,
                             abs_err=err, rel_err=err / scale))
    return rows


def sweep_to_csv(rows) -> str:
    lines = ["degree,nodes,value,abs_err,rel_err"]
    for row in rows:
        lines.append("%d,%d,%.17g,%.17g,%.17g"
                     % (row.degree, row.nodes, row.value, row.abs_err, row.rel_err))
    return "\n".join(lines) + "\n"


def closed_form_segment_self(alpha: float, length: float = 1.0) -> float:
    """Exact kernel integral for P_x = P_y = a segment, g = 1, alpha < 1."""
    if alpha >= 1.0:
        raise IntegrabilityViolated("segment self integral needs alpha < 1")
    return 2.0 * length ** (2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha))


def reference_integral(pieces, alpha: float, g, rtol: float = 1e-11,
                       start: int = 4, step: int = 2, max_degree: int = 26,
                       sources: RuleSources | None = None, threads: int = 1):
    """Degree-escalated reference value; returns (value, error estimate).

    Stops once two consecutive escalations agree to ``rtol``; raises
    BudgetExceeded when ``max_degree`` is hit first.
    """
    prev = None
    stable = 0
    history = []
    p = start
    while p <= max_degree:
        value, _ = integrate_pieces(pieces, alpha, p, g, sources=sources,
                                    threads=threads)
        if prev is not None:
            delta = abs(value - prev)
            history.append(delta)
            if delta <= rtol * max(abs(value), np.finfo(float).tiny):
                stable += 1
                if stable >= 2:
                    return value, delta
            else:
                stable = 0
        prev = value
        p += step
    raise BudgetExceeded(
        "reference integral did not stabilize to rtol=%g by degree %d "
        "(last deltas: %s)" % (rtol, max_degree, history[-3:]))


# -- CSV round trip -------------------------------------------------------------


def kernel_rule_to_csv(rule: KernelRule) -> str:
    d = rule.d
    out = StringIO()
    out.write("alpha,degree,d\n")
    out.write("%.17g,%d,%d\n" % (rule.alpha, rule.degree, d))
    cols = ["x%d" % (i + 1) for i in range(d)] + ["y%d" % (i + 1) for i in range(d)]
    out.write(",".join(cols) + ",w,piece_id\n")
    for i in range(rule.n_nodes):
        row = np.concatenate([rule.x[i], rule.y[i]])
        out.write(",".join("%.17g" % c for c in row))
        out.write(",%.17g,%d\n" % (rule.w[i], rule.piece_ids[i]))
    return out.getvalue()


def kernel_rule_from_csv(text: str) -> KernelRule:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or lines[0].split(",") != ["alpha", "degree", "d"]:
        raise ParseError("not a kernel rule CSV")
    try:
        alpha_s, degree_s, d_s = lines[1].split(",")
        alpha, degree, d = float(alpha_s), int(degree_s), int(d_s)
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[3:]])
    except ValueError as exc:
        raise ParseError("malformed kernel rule CSV: %s" % exc) from exc
    if data.shape[1] != 2 * d + 2:
        raise ParseError("kernel rule CSV rows have %d columns, expected %d"
                         % (data.shape[1], 2 * d + 2))
    return KernelRule(x=np.ascontiguousarray(data[:, :d]),
                      y=np.ascontiguousarray(data[:, d:2 * d]),
                      w=np.ascontiguousarray(data[:, 2 * d]),
                      piece_ids=data[:, 2 * d + 1].astype(int),
                      alpha=alpha, degree=degree, d=d)
