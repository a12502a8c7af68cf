import math
from fractions import Fraction

import numpy as np
import pytest

from polyquad.assembly import (
    assemble_kernel_rule,
    closed_form_segment_self,
    convergence_sweep,
    integrate,
    integrate_pieces,
    kernel_rule_from_csv,
    kernel_rule_to_csv,
    reference_integral,
    sweep_to_csv,
    _PieceRule,
)
from polyquad.decomposition import (
    decompose_cube_pair,
    decompose_product,
    decompose_simplex_pair,
    merge_paths,
    pyramidal_lattice,
)
from polyquad.errors import (
    AssumptionViolated,
    BudgetExceeded,
    IntegrabilityViolated,
    NonFiniteValue,
)
from polyquad.face_rules import RuleSources
from polyquad.geometry import affine_image, double_pyramid, simplex_pair
from polyquad.kernels import builtin_kernels

ONE = builtin_kernels("one")
EXP_SUM = builtin_kernels("exp-sum")

# reference values stabilized far below the asserted tolerances before freezing
TRIANGLE_SELF_ALPHA1 = 1.0030658847731815     # 2-simplex self case, alpha=1, g=1
TET_SELF_EXP_ALPHA1 = 0.3938412092126911      # 3-simplex self case, alpha=1, g=exp-sum


def segment_pair():
    sx, sy, _ = simplex_pair(1, 1, 1)
    return decompose_simplex_pair(sx, sy, 1)


class TestWeightSums:
    def test_shared_edge_triangles_alpha0(self):
        sx, sy, _ = simplex_pair(2, 2, 1)
        pieces = decompose_simplex_pair(sx, sy, 1)
        rule = assemble_kernel_rule(pieces, 0.0, 2)
        assert rule.w.sum() == pytest.approx(0.25, rel=1e-12)

    def test_node_count_formula(self):
        sx, sy, _ = simplex_pair(2, 2, 1)
        pieces = decompose_simplex_pair(sx, sy, 1)
        p = 3
        rule = assemble_kernel_rule(pieces, 0.5, p)
        want = sum(p * p ** piece.s * p ** piece.x_face.dim * p ** piece.y_face.dim
                   for piece in pieces)
        assert rule.n_nodes == want

    def test_1d_closed_form(self):
        pieces = segment_pair()
        for p in range(1, 11):
            val, _ = integrate_pieces(pieces, 0.5, p, ONE)
            assert val == pytest.approx(8.0 / 3.0, rel=1e-12)
        assert closed_form_segment_self(0.5) == pytest.approx(8.0 / 3.0)

    def test_scaled_segment_closed_form(self):
        seg = affine_image(simplex_pair(1, 1, 1)[0], matrix=[[2.0]])
        pieces = decompose_simplex_pair(seg, seg, 1)
        val, _ = integrate_pieces(pieces, 0.5, 4, ONE)
        assert val == pytest.approx(closed_form_segment_self(0.5, 2.0), rel=1e-12)


class TestLambdaScaling:
    def test_node_pair_distances(self):
        # |x - y| must equal lambda * |x_F - y_F| on every emitted node
        sx, sy, _ = simplex_pair(2, 2, 2)
        pieces = decompose_simplex_pair(sx, sy, 2)
        for piece in pieces:
            pr = _PieceRule(piece, 1.0, 3, RuleSources())
            x, y, _ = pr.emit()
            na, nf = len(pr.apex_weights), len(pr.base_weights)
            lam = np.repeat(pr.lam.nodes, na * nf)
            base_gap = np.tile(np.linalg.norm(pr.xf - pr.yf, axis=1), pr.lam.points * na)
            got = np.linalg.norm(x - y, axis=1)
            np.testing.assert_allclose(got, lam * base_gap, rtol=1e-12, atol=1e-15)


class TestExactnessTransfer:
    def exact_monomial(self, ax, ay, bx, by):
        # x-triangle (0,0),(1,0),(0,1); y-triangle (0,0),(1,0),(0,-1)
        fx = Fraction(math.factorial(ax) * math.factorial(ay),
                      math.factorial(ax + ay + 2))
        fy = Fraction(math.factorial(bx) * math.factorial(by),
                      math.factorial(bx + by + 2)) * (-1) ** by
        return float(fx * fy)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_monomials_up_to_total_degree(self, p):
        sx, sy, _ = simplex_pair(2, 2, 1)
        pieces = decompose_simplex_pair(sx, sy, 1)
        rule = assemble_kernel_rule(pieces, 0.0, p)
        limit = 2 * p - 1
        for ax in range(limit + 1):
            for ay in range(limit + 1 - ax):
                for bx in range(limit + 1 - ax - ay):
                    for by in range(limit + 1 - ax - ay - bx):
                        g = lambda X, Y: (X[:, 0] ** ax * X[:, 1] ** ay
                                          * Y[:, 0] ** bx * Y[:, 1] ** by)
                        want = self.exact_monomial(ax, ay, bx, by)
                        got = integrate(rule, g)
                        assert got == pytest.approx(want, rel=1e-11), \
                            (p, ax, ay, bx, by)


class TestFrozenFixtures:
    def test_triangle_self_alpha1(self):
        sx, sy, _ = simplex_pair(2, 2, 2)
        pieces = decompose_simplex_pair(sx, sy, 2)
        val, _ = integrate_pieces(pieces, 1.0, 14, ONE)
        assert val == pytest.approx(TRIANGLE_SELF_ALPHA1, rel=1e-10)

    def test_tet_self_exp_alpha1_moderate_degree(self):
        sx, sy, _ = simplex_pair(3, 3, 3)
        pieces = decompose_simplex_pair(sx, sy, 3)
        val, _ = integrate_pieces(pieces, 1.0, 8, EXP_SUM)
        assert val == pytest.approx(TET_SELF_EXP_ALPHA1, rel=1e-6)

    def test_reference_integral_stabilizes(self):
        sx, sy, _ = simplex_pair(2, 2, 2)
        pieces = decompose_simplex_pair(sx, sy, 2)
        val, est = reference_integral(pieces, 1.0, ONE, rtol=1e-11)
        assert val == pytest.approx(TRIANGLE_SELF_ALPHA1, rel=1e-10)
        assert est <= 1e-10

    def test_reference_budget_exceeded(self):
        pieces = segment_pair()
        with pytest.raises(BudgetExceeded):
            reference_integral(pieces, 0.5, EXP_SUM, rtol=1e-30, max_degree=6)


class TestErrors:
    def test_integrability_guard(self):
        pieces = segment_pair()
        with pytest.raises(IntegrabilityViolated):
            assemble_kernel_rule(pieces, 1.0, 3)

    def test_non_finite_integrand(self):
        pieces = segment_pair()
        rule = assemble_kernel_rule(pieces, 0.5, 3)

        def bad(X, Y):
            out = np.ones(len(X))
            out[0] = np.inf
            return out

        with pytest.raises(NonFiniteValue):
            integrate(rule, bad)

    def test_pieces_without_split_rejected(self):
        lat = pyramidal_lattice(double_pyramid(), {0, 1, 2, 3})
        pieces = merge_paths(lat)
        with pytest.raises(AssumptionViolated):
            assemble_kernel_rule(pieces, 0.5, 2)


class TestUnfolded:
    def test_unfolded_rule_reproduces_folded_value(self):
        sx, sy, _ = simplex_pair(2, 2, 1)
        pieces = decompose_simplex_pair(sx, sy, 1)
        alpha = 0.5
        folded = assemble_kernel_rule(pieces, alpha, 3)
        unfolded = assemble_kernel_rule(pieces, alpha, 3, fold=False)
        gap = np.linalg.norm(unfolded.x - unfolded.y, axis=1)
        val_folded = integrate(folded, EXP_SUM)
        val_unfolded = float((unfolded.w * gap ** (-alpha)) @ EXP_SUM(unfolded.x, unfolded.y))
        assert val_unfolded == pytest.approx(val_folded, rel=1e-13)


class TestStreamingAndThreads:
    def test_streaming_matches_materialized(self):
        sx, sy, _ = simplex_pair(2, 2, 2)
        pieces = decompose_simplex_pair(sx, sy, 2)
        rule = assemble_kernel_rule(pieces, 1.0, 4)
        direct = integrate(rule, EXP_SUM)
        streamed, nodes = integrate_pieces(pieces, 1.0, 4, EXP_SUM)
        assert nodes == rule.n_nodes
        assert streamed == pytest.approx(direct, rel=1e-13)

    def test_small_blocks_and_threads(self):
        sx, sy, _ = simplex_pair(2, 2, 1)
        pieces = decompose_simplex_pair(sx, sy, 1)
        base, _ = integrate_pieces(pieces, 0.5, 5, EXP_SUM)
        chunked, _ = integrate_pieces(pieces, 0.5, 5, EXP_SUM, max_block=64)
        threaded, _ = integrate_pieces(pieces, 0.5, 5, EXP_SUM, threads=3)
        assert chunked == pytest.approx(base, rel=1e-14)
        assert threaded == pytest.approx(base, rel=1e-14)


class TestSweep:
    def test_rows_and_reference(self):
        pieces = segment_pair()
        rows = convergence_sweep(pieces, 0.5, EXP_SUM, degrees=[2, 4, 6],
                                 reference_degree=10)
        degrees = [r.degree for r in rows]
        assert degrees == [2, 4, 6, 10]
        errs = [r.rel_err for r in rows]
        assert errs[0] > errs[1] > errs[2] > errs[3] == 0.0
        csv = sweep_to_csv(rows)
        assert csv.splitlines()[0] == "degree,nodes,value,abs_err,rel_err"
        assert len(csv.strip().splitlines()) == 5

    def test_cube_pair_convergence(self):
        _, _, pieces = decompose_cube_pair(2, 1)
        rows = convergence_sweep(pieces, 1.0, EXP_SUM, degrees=[2, 4, 6, 8])
        assert rows[0].rel_err > rows[1].rel_err > rows[2].rel_err


class TestDecompositionEquivalence:
    def test_generic_equals_closed_form_value(self):
        for (n, m, k) in [(2, 2, 1), (2, 2, 2), (3, 2, 1)]:
            sx, sy, shared = simplex_pair(n, m, k)
            cf = decompose_simplex_pair(sx, sy, k)
            gen = decompose_product(sx, sy, shared)
            v1, _ = integrate_pieces(cf, 0.5, 4, EXP_SUM)
            v2, _ = integrate_pieces(gen, 0.5, 4, EXP_SUM)
            assert v1 == pytest.approx(v2, rel=1e-11)


class TestCsvRoundTrip:
    def test_lossless_round_trip(self):
        pieces = segment_pair()
        rule = assemble_kernel_rule(pieces, 0.5, 4)
        again = kernel_rule_from_csv(kernel_rule_to_csv(rule))
        np.testing.assert_array_equal(again.x, rule.x)
        np.testing.assert_array_equal(again.y, rule.y)
        np.testing.assert_array_equal(again.w, rule.w)
        np.testing.assert_array_equal(again.piece_ids, rule.piece_ids)
        assert again.alpha == rule.alpha
        assert integrate(again, EXP_SUM) == integrate(rule, EXP_SUM)
