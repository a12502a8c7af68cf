import math

import numpy as np
import pytest

from polyquad.errors import DimensionMismatch, ParseError, ValidationError
from polyquad.face_rules import (
    RuleSources,
    cube_monomial_integral,
    cube_tensor_rule,
    duffy_simplex_rule,
    face_quadrature,
    face_rule_to_csv,
    load_generalized_rule,
    map_rule_to_box,
    map_rule_to_face,
    map_rule_to_simplex,
    simplex_monomial_integral,
    _monomials_up_to,
)
from polyquad.geometry import cube, polygon, simplex
from polyquad.quad1d import gauss_legendre


def rule_value(rule, beta):
    return float(rule.weights @ np.prod(rule.nodes ** np.asarray(beta), axis=1))


class TestMonomialOracle:
    def test_constants(self):
        for n in range(1, 6):
            assert simplex_monomial_integral([0] * n) == pytest.approx(1 / math.factorial(n))

    def test_iterated_integral_example(self):
        # int over 0 <= x2 <= x1 <= 1 of x1 x2 = int x1^3/2 = 1/8
        assert simplex_monomial_integral([1, 1]) == pytest.approx(1.0 / 8.0)

    def test_hand_computed_values(self):
        # int x1^2 over the ordered triangle = int_0^1 x1^3 dx1 = 1/4
        assert simplex_monomial_integral([2, 0]) == pytest.approx(1.0 / 4.0)
        # int x2 = int_0^1 x1^2/2 dx1 = 1/6
        assert simplex_monomial_integral([0, 1]) == pytest.approx(1.0 / 6.0)


class TestDuffyRule:
    def test_one_dimensional_is_gauss(self):
        duffy = duffy_simplex_rule(1, 3)
        gl = gauss_legendre(3)
        np.testing.assert_allclose(duffy.nodes[:, 0], gl.nodes)
        np.testing.assert_allclose(duffy.weights, gl.weights)

    def test_node_count(self):
        assert duffy_simplex_rule(3, 4).n_nodes == 64

    def test_total_weight_is_simplex_volume(self):
        for n in range(1, 6):
            rule = duffy_simplex_rule(n, 3)
            assert rule.total_weight() == pytest.approx(1 / math.factorial(n), rel=1e-12)

    def test_triangle_values(self):
        for p in range(1, 7):
            rule = duffy_simplex_rule(2, p)
            assert rule_value(rule, (0, 0)) == pytest.approx(0.5, rel=1e-13)
        for p in range(2, 7):
            rule = duffy_simplex_rule(2, p)
            assert rule_value(rule, (1, 1)) == pytest.approx(1.0 / 8.0, rel=1e-13)

    def test_one_point_rule_is_centroid(self):
        rule = duffy_simplex_rule(2, 1)
        np.testing.assert_allclose(rule.nodes, [[2.0 / 3.0, 1.0 / 3.0]], atol=1e-14)
        assert rule.weights[0] == pytest.approx(0.5)
        # exact only up to total degree 1: x1*x2 integrates to 1/9, not 1/8
        assert rule_value(rule, (1, 1)) == pytest.approx(1.0 / 9.0)
        assert abs(rule_value(rule, (1, 1)) - 1.0 / 8.0) > 1e-3

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("p", [1, 2, 3, 5])
    def test_total_degree_exactness_exhaustive(self, n, p):
        rule = duffy_simplex_rule(n, p)
        scale = 1 / math.factorial(n)
        for beta in _monomials_up_to(n, 2 * p - 1):
            exact = simplex_monomial_integral(beta)
            assert abs(rule_value(rule, beta) - exact) <= 1e-12 * scale

    @pytest.mark.parametrize("n,p", [(4, 4), (4, 10), (5, 4), (5, 10)])
    def test_total_degree_exactness_sampled(self, n, p):
        rng = np.random.default_rng(1000 + 10 * n + p)
        rule = duffy_simplex_rule(n, p)
        scale = 1 / math.factorial(n)
        all_monomials = list(_monomials_up_to(n, 2 * p - 1))
        picks = rng.choice(len(all_monomials), size=150, replace=False)
        for idx in picks:
            beta = all_monomials[idx]
            exact = simplex_monomial_integral(beta)
            assert abs(rule_value(rule, beta) - exact) <= 1e-12 * scale

    def test_nodes_inside_reference_simplex(self):
        rule = duffy_simplex_rule(4, 6)
        x = rule.nodes
        assert np.all(x[:, 0] <= 1) and np.all(x[:, -1] >= 0)
        assert np.all(np.diff(x, axis=1) <= 1e-15)
        assert np.all(rule.weights > 0)


class TestCubeTensorRule:
    def test_total_weight(self):
        assert cube_tensor_rule(3, 2).total_weight() == pytest.approx(1.0, rel=1e-13)

    def test_product_of_coordinates(self):
        rule = cube_tensor_rule(3, 2)
        assert rule_value(rule, (1, 1, 1)) == pytest.approx(2.0 ** -3, rel=1e-13)

    def test_cubic_moment(self):
        rule = cube_tensor_rule(2, 2)
        assert rule_value(rule, (3, 0)) == pytest.approx(0.25, rel=1e-13)

    def test_per_axis_exactness(self):
        p = 3
        rule = cube_tensor_rule(2, p)
        for b1 in range(2 * p):
            for b2 in range(2 * p):
                exact = cube_monomial_integral((b1, b2))
                assert rule_value(rule, (b1, b2)) == pytest.approx(exact, rel=1e-12)


class TestRuleFiles:
    def write(self, tmp_path, text):
        path = tmp_path / "rule.txt"
        path.write_text(text)
        return path

    def test_centroid_rule_validates(self, tmp_path):
        path = self.write(tmp_path, "dim 2 degree 1 count 1\n0.66666666666666667 0.33333333333333333 0.5\n")
        rule = load_generalized_rule(path, 2)
        assert rule.n_nodes == 1
        assert rule.degree == 1
        assert rule.source == "generalized-gauss-file"

    def test_centroid_rule_is_not_degree_2(self, tmp_path):
        path = self.write(tmp_path, "dim 2 degree 2 count 1\n0.66666666666666667 0.33333333333333333 0.5\n")
        with pytest.raises(ValidationError):
            load_generalized_rule(path)

    def test_negative_weight_rejected(self, tmp_path):
        path = self.write(tmp_path, "dim 2 degree 1 count 2\n0.5 0.25 0.6\n0.5 0.25 -0.1\n")
        with pytest.raises(ValidationError):
            load_generalized_rule(path)

    def test_node_outside_simplex_rejected(self, tmp_path):
        path = self.write(tmp_path, "dim 2 degree 1 count 1\n0.3 0.4 0.5\n")
        # x2 > x1 breaks the ordered-coordinate constraint
        with pytest.raises(ValidationError):
            load_generalized_rule(path)

    def test_corner_convention_conversion(self, tmp_path):
        # duffy p=2 triangle rule, exported in corner coordinates u = (x1-x2, x2)
        ref = duffy_simplex_rule(2, 2)
        corner = np.column_stack([ref.nodes[:, 0] - ref.nodes[:, 1], ref.nodes[:, 1]])
        lines = ["dim 2 degree 3 count %d convention corner" % ref.n_nodes]
        for node, w in zip(corner, ref.weights):
            lines.append("%.17g %.17g %.17g" % (node[0], node[1], w))
        path = self.write(tmp_path, "\n".join(lines) + "\n")
        rule = load_generalized_rule(path)
        np.testing.assert_allclose(np.sort(rule.nodes[:, 0]), np.sort(ref.nodes[:, 0]),
                                   atol=1e-14)

    def test_malformed_header(self, tmp_path):
        path = self.write(tmp_path, "dim two degree 1 count 1\n0.5 0.25 0.5\n")
        with pytest.raises(ParseError):
            load_generalized_rule(path)

    def test_wrong_row_length(self, tmp_path):
        path = self.write(tmp_path, "dim 2 degree 1 count 1\n0.5 0.25\n")
        with pytest.raises(ParseError):
            load_generalized_rule(path)

    def test_dimension_mismatch(self, tmp_path):
        path = self.write(tmp_path, "dim 2 degree 1 count 1\n0.66666666666666667 0.33333333333333333 0.5\n")
        with pytest.raises(DimensionMismatch):
            load_generalized_rule(path, 3)


class TestMapping:
    def test_identity_simplex_unchanged(self):
        # the reference domain's own vertices: (0,0), (1,0), (1,1)
        ref = duffy_simplex_rule(2, 3)
        mapped = map_rule_to_simplex(ref, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        np.testing.assert_allclose(mapped.nodes, ref.nodes, atol=1e-15)
        np.testing.assert_allclose(mapped.weights, ref.weights, atol=1e-15)

    def test_corner_simplex_keeps_measure(self):
        ref = duffy_simplex_rule(2, 3)
        mapped = map_rule_to_simplex(ref, simplex(2).vertices)
        assert mapped.total_weight() == pytest.approx(0.5, rel=1e-13)

    def test_segment_doubles_weights(self):
        ref = duffy_simplex_rule(1, 4)
        mapped = map_rule_to_simplex(ref, [[0.0, 0.0], [2.0, 0.0]])
        assert mapped.total_weight() == pytest.approx(2 * ref.total_weight(), rel=1e-13)

    def test_sheared_triangle_area(self):
        tri = simplex(2, [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        mapped = map_rule_to_face(duffy_simplex_rule(2, 3), tri, tri.faces[tri.top])
        assert mapped.total_weight() == pytest.approx(0.5, rel=1e-12)

    def test_affine_exactness_of_mapped_rule(self):
        # integral of x1 over the triangle (0,0), (2,0), (0,2) equals 4/3
        tri = simplex(2, [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
        mapped = map_rule_to_face(duffy_simplex_rule(2, 2), tri, tri.faces[tri.top])
        val = float(mapped.weights @ mapped.nodes[:, 0])
        assert val == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            map_rule_to_simplex(duffy_simplex_rule(2, 2), simplex(3).vertices)

    def test_box_mapping(self):
        ref = cube_tensor_rule(2, 2)
        axes = np.array([[2.0, 0.0], [0.0, 3.0]]).T
        mapped = map_rule_to_box(ref, np.zeros(2), axes)
        assert mapped.total_weight() == pytest.approx(6.0, rel=1e-13)


class TestFaceQuadrature:
    def test_simplex_face(self):
        tri = simplex(2)
        rule = face_quadrature(tri, tri.faces[tri.top], 3)
        assert rule.n_nodes == 9
        assert rule.total_weight() == pytest.approx(0.5, rel=1e-12)

    def test_zero_face(self):
        tri = simplex(2)
        f = tri.faces[tri.face_id_by_vertices([1])]
        rule = face_quadrature(tri, f, 3)
        assert rule.n_nodes == 1
        assert rule.weights[0] == 1.0
        np.testing.assert_allclose(rule.nodes[0], [1.0, 0.0])

    def test_cube_face_uses_tensor_rule(self):
        c = cube(3)
        f = next(f for f in c.faces_of_dim(2))
        rule = face_quadrature(c, f, 3)
        assert rule.n_nodes == 9  # p^2, not 2 * p^2 from a triangulation
        assert rule.total_weight() == pytest.approx(1.0, rel=1e-12)

    def test_general_quad_triangulated(self):
        quad = polygon([[0.0, 0.0], [2.0, 0.0], [2.5, 1.5], [0.0, 1.0]])
        rule = face_quadrature(quad, quad.faces[quad.top], 3)
        assert rule.source == "triangulated"
        # shoelace area of the quad
        area = 0.5 * abs(2 * 1.5 - 0 + 2.5 * 1.0 - 0 + 0 - 0)
        assert rule.total_weight() == pytest.approx(area, rel=1e-12)

    def test_file_source_with_fallback(self, tmp_path):
        path = tmp_path / "rule.txt"
        ref = duffy_simplex_rule(2, 3)
        lines = ["dim 2 degree 5 count %d" % ref.n_nodes]
        for node, w in zip(ref.nodes, ref.weights):
            lines.append("%.17g %.17g %.17g" % (node[0], node[1], w))
        path.write_text("\n".join(lines) + "\n")
        sources = RuleSources(default="file")
        sources.add_file(path)
        tri = simplex(2)
        # p=3 needs degree 5: file rule is used
        rule = face_quadrature(tri, tri.faces[tri.top], 3, sources)
        assert rule.source == "generalized-gauss-file"
        # p=4 needs degree 7: no file qualifies, falls back to duffy
        rule = face_quadrature(tri, tri.faces[tri.top], 4, sources)
        assert rule.source == "duffy-tensor"
        # other dimensions always fall back
        seg = simplex(1)
        rule = face_quadrature(seg, seg.faces[seg.top], 3, sources)
        assert rule.source == "duffy-tensor"


def test_face_rule_csv():
    rule = face_quadrature(simplex(2), simplex(2).faces[simplex(2).top], 2)
    text = face_rule_to_csv(rule)
    lines = text.strip().splitlines()
    assert lines[0] == "x1,x2,w"
    assert len(lines) == 1 + rule.n_nodes
