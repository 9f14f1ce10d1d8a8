"""Builders for the canonical test complexes.

Edge lengths are produced from one length function per builder so that every
glued pair of faces sees bit-identical values.
"""

import itertools
import json
import math
from importlib import resources

import numpy as np

from .complex import EDGE_ORDER, PolyhedralComplex, Tet, VertexLink, complex_from_dict


def _tet(labels, dist):
    return Tet(tuple(labels), tuple(dist(labels[i], labels[j]) for i, j in EDGE_ORDER))


def doubled_cube():
    """Two unit cubes glued along their boundary.

    Each cube is coned off from its centre over a triangulation of its six
    faces, so both copies share the 8 corner labels but keep distinct centres.
    """
    coords = {f"v{i}{j}{k}": (i, j, k) for i, j, k in itertools.product((0, 1), repeat=3)}
    centres = {"ca": (0.5, 0.5, 0.5), "cb": (0.5, 0.5, 0.5)}

    def dist(a, b):
        if a in centres and b in centres:
            raise ValueError("the two centres are never joined")
        pa = centres.get(a, coords.get(a))
        pb = centres.get(b, coords.get(b))
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(pa, pb)))

    faces = []
    for axis in range(3):
        for side in (0, 1):
            u, w = (a for a in range(3) if a != axis)
            quad = []
            for du, dw in ((0, 0), (1, 0), (1, 1), (0, 1)):
                p = [0, 0, 0]
                p[axis], p[u], p[w] = side, du, dw
                quad.append("v" + "".join(map(str, p)))
            faces += [(quad[0], quad[1], quad[2]), (quad[0], quad[2], quad[3])]
    tets = [_tet((c,) + tri, dist) for c in ("ca", "cb") for tri in faces]
    return PolyhedralComplex(tets)


def flat_torus(n=3):
    """Unit-cube grid of size ``n`` with periodic identification, Kuhn-triangulated."""
    if n < 3:
        raise ValueError("label-matched gluing needs n >= 3")
    tets = []
    for base in itertools.product(range(n), repeat=3):
        for perm in itertools.permutations(range(3)):
            pts = [np.array(base)]
            for axis in perm:
                step = np.zeros(3, dtype=int)
                step[axis] = 1
                pts.append(pts[-1] + step)
            labels = tuple("t" + "".join(str(c % n) for c in p) for p in pts)
            lengths = tuple(math.sqrt(float(np.sum((pts[i] - pts[j]) ** 2))) for i, j in EDGE_ORDER)
            tets.append(Tet(labels, lengths))
    return PolyhedralComplex(tets)


def doubled_triangle_circle(sides=(0.75, 1.0, 1.25), circumference=1.0, layers=3):
    """(doubled Euclidean triangle) x (circle).

    The corners of the triangle become three closed essential edges with cone
    angle twice the corner angle; there are no essential vertices.
    """
    a, b, c = sides  # opposite corners A, B, C
    corner = {("A", "B"): c, ("B", "C"): a, ("A", "C"): b}
    to_centroid = {
        "A": math.sqrt(2 * b * b + 2 * c * c - a * a) / 3,
        "B": math.sqrt(2 * a * a + 2 * c * c - b * b) / 3,
        "C": math.sqrt(2 * a * a + 2 * b * b - c * c) / 3,
    }

    def surface(p, q):
        if p == q:
            return 0.0
        if p in "PQ" and q in "PQ":
            raise ValueError("the two centroids are never joined")
        if p in "PQ":
            return to_centroid[q]
        if q in "PQ":
            return to_centroid[p]
        return corner[tuple(sorted((p, q)))]

    h = circumference / layers
    triangles = [(x, y, z) for z in "PQ" for x, y in (("A", "B"), ("B", "C"), ("A", "C"))]
    tets = []
    for layer in range(layers):
        top = (layer + 1) % layers
        for v0, v1, v2 in triangles:
            # (surface vertex, lift) with lift 0 = bottom, 1 = top
            for pts in (
                ((v0, 0), (v1, 0), (v2, 0), (v2, 1)),
                ((v0, 0), (v1, 0), (v1, 1), (v2, 1)),
                ((v0, 0), (v0, 1), (v1, 1), (v2, 1)),
            ):
                labels = tuple(f"{s}{layer if z == 0 else top}" for s, z in pts)
                lengths = tuple(
                    math.sqrt(surface(pts[i][0], pts[j][0]) ** 2 + (h * (pts[i][1] - pts[j][1])) ** 2)
                    for i, j in EDGE_ORDER
                )
                tets.append(Tet(labels, lengths))
    return PolyhedralComplex(tets)


def triangle_angles(sides):
    """Corner angles (A, B, C) of a Euclidean triangle with sides opposite them."""
    a, b, c = sides
    A = math.acos((b * b + c * c - a * a) / (2 * b * c))
    B = math.acos((a * a + c * c - b * b) / (2 * a * c))
    return A, B, math.pi - A - B


def hyperbolic_edge(apex=2.0):
    """Six regular tetrahedra around one edge, closed up by coning off the boundary.

    The central edge has cone angle 6 arccos(1/3) > 2 pi.
    """
    ring = [f"c{i}" for i in range(6)]

    def dist(p, q):
        return apex if "o" in (p, q) else 1.0

    tets = []
    for i in range(6):
        c0, c1 = ring[i], ring[(i + 1) % 6]
        tets.append(_tet(("a", "b", c0, c1), dist))
        tets.append(_tet(("o", "a", c0, c1), dist))
        tets.append(_tet(("o", "b", c0, c1), dist))
    return PolyhedralComplex(tets)


def suspension_link(circumference, segments=4):
    """Spherical suspension of a circle, triangulated through both poles."""
    tris, sides = [], []
    arc = circumference / segments
    for i in range(segments):
        e0, e1 = 2 + i, 2 + (i + 1) % segments
        for pole in (0, 1):
            tris.append((pole, e0, e1))
            # side j is opposite corner j
            sides.append((arc, math.pi / 2, math.pi / 2))
    return VertexLink.from_spherical_triangles(tris, sides)


FIXTURES = {
    "doubled_cube": doubled_cube,
    "flat_torus": flat_torus,
    "doubled_triangle_circle": doubled_triangle_circle,
    "hyperbolic_edge": hyperbolic_edge,
}


def load_fixture(name):
    """Load a shipped fixture document by name."""
    text = resources.files("polysmooth").joinpath("data", f"{name}.json").read_text()
    return complex_from_dict(json.loads(text))
