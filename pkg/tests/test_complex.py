import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polysmooth.complex import (
    Analysis,
    DegenerateSimplexError,
    InvalidComplexError,
    MeshFormatError,
    PolyhedralComplex,
    SingularStratum,
    Tet,
    VertexLink,
    analyze,
    cayley_menger,
    check_simplex,
    complex_from_dict,
    complex_to_dict,
    cone_angle,
    dihedral_angle,
    dihedral_angles,
    embed_tet,
    is_nonnegatively_curved,
    is_product_vertex,
    subdivide_tet,
    suspension_test,
)
from polysmooth.fixtures import FIXTURES, load_fixture, suspension_link, triangle_angles
from polysmooth.tolerances import DEFAULT_TOLERANCES

REGULAR = (1.0,) * 6
CORNER = (1.0, 1.0, 1.0, math.sqrt(2), math.sqrt(2), math.sqrt(2))


def _lengths_from_points(p):
    return tuple(float(np.linalg.norm(p[i] - p[j])) for i, j in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)))


# ---------------------------------------------------------------- single tetrahedra


def test_regular_tet_dihedral():
    assert np.allclose(dihedral_angles(REGULAR), math.acos(1 / 3), atol=1e-12)
    assert math.isclose(math.acos(1 / 3), 1.2309594, abs_tol=1e-7)


def test_right_corner_tet_legs_are_right_angles():
    angles = dihedral_angles(CORNER)
    assert np.allclose(angles[:3], math.pi / 2, atol=1e-12)
    # a coordinate plane meets x + y + z = 1 at arccos(1/sqrt 3)
    assert np.allclose(angles[3:], math.acos(1 / math.sqrt(3)), atol=1e-12)
    assert math.isclose(dihedral_angle(CORNER, (0, 1)), math.pi / 2, abs_tol=1e-12)


def test_cayley_menger_sign_and_volume():
    # 288 V^2 = CM determinant for a tetrahedron
    assert math.isclose(cayley_menger(REGULAR), 288 * (1 / (6 * math.sqrt(2))) ** 2, rel_tol=1e-12)


def test_flat_tet_rejected_with_determinant():
    flat = _lengths_from_points(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]]))
    with pytest.raises(DegenerateSimplexError) as info:
        check_simplex(flat)
    assert abs(info.value.determinant) < 1e-9


def test_triangle_inequality_violation_rejected():
    with pytest.raises(InvalidComplexError):
        check_simplex((1.0, 1.0, 3.0, 1.0, 1.0, 1.0))


def test_embedding_reproduces_lengths():
    rng = np.random.default_rng(0)
    for _ in range(20):
        lengths = _lengths_from_points(rng.normal(size=(4, 3)))
        p = embed_tet(lengths)
        assert np.allclose(_lengths_from_points(p), lengths, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=12, max_size=12))
def test_dihedral_angles_match_normals(coords):
    p = np.array(coords).reshape(4, 3)
    vol = abs(np.linalg.det(p[1:] - p[0])) / 6
    edges = _lengths_from_points(p)
    if vol < 1e-2 or min(edges) < 1e-2:
        return
    angles = dihedral_angles(edges)
    for e, (i, j) in enumerate(((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))):
        k, m = sorted({0, 1, 2, 3} - {i, j})
        axis = p[j] - p[i]
        a = p[k] - p[i] - (p[k] - p[i]) @ axis / (axis @ axis) * axis
        b = p[m] - p[i] - (p[m] - p[i]) @ axis / (axis @ axis) * axis
        oracle = math.acos(np.clip(a @ b / np.linalg.norm(a) / np.linalg.norm(b), -1, 1))
        assert math.isclose(angles[e], oracle, abs_tol=1e-8)


def test_tet_rejects_repeated_labels():
    with pytest.raises(InvalidComplexError):
        Tet(("a", "a", "b", "c"), REGULAR)


# ---------------------------------------------------------------- links


def test_suspension_of_three_halves_pi_circle():
    link = suspension_link(1.5 * math.pi)
    res = suspension_test(link)
    assert res.passed
    assert math.isclose(res.area, 3 * math.pi, abs_tol=1e-9)
    assert math.isclose(res.distance, math.pi, abs_tol=1e-3)
    assert link.euler_characteristic() == 2 and link.is_connected()


def test_round_sphere_link_has_no_cone_points():
    link = suspension_link(2 * math.pi)
    assert link.cone_points() == []
    assert is_product_vertex(link)
    assert math.isclose(link.area(), 4 * math.pi, abs_tol=1e-12)


def test_cube_corner_link_is_not_a_suspension(cube):
    corner = cube.vertex_labels.index("v000")
    res = suspension_test(cube.link(corner))
    assert not res.passed
    assert len(res.cone_points) == 3
    assert np.allclose(res.cone_angles, math.pi, atol=1e-12)


def test_unequal_cone_angles_fail():
    # two triangles glued along their boundary make a "pillow" with three cone points
    tri = VertexLink.from_spherical_triangles([(0, 1, 2), (0, 2, 1)], [(1.0, 1.0, 1.0)] * 2)
    res = suspension_test(tri)
    assert not res.passed and len(res.cone_points) == 3


def test_torus_interior_links_are_round(torus):
    for v in range(0, torus.n_vertices, 7):
        link = torus.link(v)
        assert math.isclose(link.area(), 4 * math.pi, abs_tol=1e-9)
        assert link.cone_points() == []


# ---------------------------------------------------------------- complexes


def test_cube_cone_angles(cube):
    theta = cube.cone_angles()
    assert len(theta) == len(cube.edges) == 34
    boundary = [e for e in range(len(cube.edges)) if abs(theta[e] - 2 * math.pi) > 1e-9]
    assert len(boundary) == 12
    assert np.allclose(theta[boundary], math.pi, atol=1e-12)
    edge = cube.find_edge("v000", "v100")
    assert math.isclose(cone_angle(cube, edge), math.pi, abs_tol=1e-12)


def test_cube_analysis_counts(cube_analysis):
    kinds = [s.kind for s in cube_analysis.strata]
    assert kinds.count("open-edge") == 12
    assert kinds.count("essential-vertex") == 8
    assert bool(cube_analysis.nonnegative)
    for s in cube_analysis.strata:
        if s.is_edge:
            assert math.isclose(s.length, 1.0, abs_tol=1e-12)
            assert math.isclose(s.omega, math.pi, abs_tol=1e-12)
            assert len(s.endpoints) == 2
        else:
            assert math.isclose(s.link_area, math.pi, abs_tol=1e-9)


def test_flat_torus_is_smooth(torus):
    res = analyze(torus)
    assert len(res.strata) == 0
    assert bool(res.nonnegative)
    assert np.allclose(torus.cone_angles(), 2 * math.pi, atol=1e-9)


def test_doubled_triangle_circle_closed_edges(triangle_circle):
    res = analyze(triangle_circle)
    assert [s.kind for s in res.strata] == ["closed-edge"] * 3
    expected = sorted(2 * a for a in triangle_angles((0.75, 1.0, 1.25)))
    assert np.allclose(sorted(s.theta for s in res.strata), expected, atol=1e-9)
    assert math.isclose(sum(s.omega for s in res.strata), 4 * math.pi, abs_tol=1e-9)


def test_hyperbolic_edge_detected(hyperbolic):
    check = is_nonnegatively_curved(hyperbolic)
    assert not check
    assert math.isclose(check.max_theta, 6 * math.acos(1 / 3), abs_tol=1e-9)
    assert check.max_theta > 7.38


def test_subdivision_leaves_strata_unchanged(cube, cube_analysis):
    finer = subdivide_tet(subdivide_tet(cube, 0), 5)
    assert finer.n_tets == cube.n_tets + 6
    res = analyze(finer)
    assert sorted(s.kind for s in res.strata) == sorted(s.kind for s in cube_analysis.strata)
    assert np.allclose(sorted(s.theta for s in res.strata if s.is_edge), math.pi, atol=1e-9)


def test_missing_gluing_is_reported():
    tets = [Tet(("a", "b", "c", "d"), REGULAR)]
    with pytest.raises(InvalidComplexError):
        PolyhedralComplex(tets)


# ---------------------------------------------------------------- documents


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_shipped_fixture_matches_builder(name):
    loaded = load_fixture(name)
    built = FIXTURES[name]()
    assert loaded.n_tets == built.n_tets
    assert np.allclose(sorted(loaded.cone_angles()), sorted(built.cone_angles()), atol=1e-12)


def test_document_round_trip(cube):
    for explicit in (False, True):
        doc = json.loads(json.dumps(complex_to_dict(cube, explicit_gluings=explicit)))
        back = complex_from_dict(doc)
        assert np.allclose(back.cone_angles(), cube.cone_angles())


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"tets": "nope"},
        {"tets": [{"labels": ["a", "b", "c"], "lengths": [1, 1, 1, 1, 1, 1]}]},
        {"tets": [{"labels": ["a", "b", "c", "d"], "lengths": [1, 1, "x", 1, 1, 1]}]},
    ],
)
def test_malformed_documents(doc):
    with pytest.raises(MeshFormatError):
        complex_from_dict(doc)


def test_analysis_round_trip(cube, cube_analysis):
    d = json.loads(json.dumps(cube_analysis.to_dict(cube)))
    back = Analysis.from_dict(d)
    assert len(back.strata) == 20
    assert back.strata[0] == SingularStratum.from_dict(d["strata"][0])
    assert math.isclose(back.separation, cube_analysis.separation)
    assert d["counts"] == {"open_edges": 12, "closed_edges": 0, "essential_vertices": 8}


def test_tolerance_override_changes_classification(cube):
    # an angle tolerance wider than pi/2 hides the pi cone angles
    loose = DEFAULT_TOLERANCES.override({"angle": 4.0})
    assert len(analyze(cube, loose).strata) == 0
    with pytest.raises(KeyError):
        DEFAULT_TOLERANCES.override({"angel": 1.0})
