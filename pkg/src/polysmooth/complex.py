"""Triangulated polyhedral 3-manifolds and their singular structure.

A complex is a list of Euclidean tetrahedra, each given by four vertex labels
and six edge lengths, together with pairings of their triangular faces.  All
combinatorics (vertices, edges, vertex links) are derived from the face
pairings, so one-vertex triangulations are supported as long as the pairings
are given explicitly.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, csgraph_from_dense, dijkstra

from .tolerances import DEFAULT_TOLERANCES

TWO_PI = 2.0 * math.pi

#: local vertex pairs of a tetrahedron, in the order edge lengths are given
EDGE_ORDER = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
EDGE_NAMES = tuple(f"{i}{j}" for i, j in EDGE_ORDER)
_EDGE_INDEX = {}
for _n, (_i, _j) in enumerate(EDGE_ORDER):
    _EDGE_INDEX[(_i, _j)] = _EDGE_INDEX[(_j, _i)] = _n

#: ordered pairs (i, j), i != j; used for half-edges and link-edge slots
_ORDERED = tuple((i, j) for i in range(4) for j in range(4) if i != j)
_ORDERED_INDEX = {p: n for n, p in enumerate(_ORDERED)}


class InvalidComplexError(ValueError):
    """The input does not describe a closed polyhedral 3-manifold."""


class DegenerateSimplexError(InvalidComplexError):
    def __init__(self, message, determinant):
        super().__init__(f"{message} (determinant {determinant!r})")
        self.determinant = determinant


def edge_index(i, j):
    """Position of the local edge (i, j) in :data:`EDGE_ORDER`."""
    return _EDGE_INDEX[(i, j)]


def _sq_lengths(lengths):
    d = np.zeros((4, 4))
    for n, (i, j) in enumerate(EDGE_ORDER):
        d[i, j] = d[j, i] = lengths[n] ** 2
    return d


def cayley_menger(lengths):
    """Cayley-Menger determinant of a tetrahedron; equals 288 V^2."""
    m = np.ones((5, 5))
    m[0, 0] = 0.0
    m[1:, 1:] = _sq_lengths(lengths)
    return float(np.linalg.det(m))


def _face_determinant(a, b, c):
    # 16 * area^2 by Heron's formula, factored to limit cancellation
    return (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c)


def check_simplex(lengths):
    """Raise :class:`DegenerateSimplexError` unless the lengths span a tetrahedron."""
    if len(lengths) != 6:
        raise InvalidComplexError(f"expected 6 edge lengths, got {len(lengths)}")
    if not all(math.isfinite(x) and x > 0 for x in lengths):
        raise DegenerateSimplexError("edge lengths must be positive and finite", min(lengths))
    d = {}
    for n, (i, j) in enumerate(EDGE_ORDER):
        d[i, j] = d[j, i] = lengths[n]
    for omit in range(4):
        i, j, k = (v for v in range(4) if v != omit)
        det = _face_determinant(d[i, j], d[j, k], d[i, k])
        if det <= 0:
            raise DegenerateSimplexError(f"face ({i},{j},{k}) violates the triangle inequality", det)
    cm = cayley_menger(lengths)
    if cm <= 0:
        raise DegenerateSimplexError("Cayley-Menger determinant is not positive", cm)
    return cm


def embed_tet(lengths):
    """Coordinates (4, 3) of a tetrahedron with the given edge lengths.

    Vertex 0 sits at the origin, vertex 1 on the x-axis, vertex 2 in the
    xy-plane and vertex 3 above it.
    """
    cm = check_simplex(lengths)
    d01, d02, d03, d12, d13, d23 = lengths
    x2 = (d01**2 + d02**2 - d12**2) / (2 * d01)
    y2 = math.sqrt(max(d02**2 - x2**2, 0.0))
    x3 = (d01**2 + d03**2 - d13**2) / (2 * d01)
    y3 = (d02**2 + d03**2 - d23**2 - 2 * x2 * x3) / (2 * y2)
    # height from the volume rather than by subtraction
    volume = math.sqrt(cm / 288.0)
    z3 = 3.0 * volume / (0.5 * d01 * y2)
    return np.array([[0.0, 0.0, 0.0], [d01, 0.0, 0.0], [x2, y2, 0.0], [x3, y3, z3]])


def dihedral_angles(lengths):
    """Interior dihedral angles along the six edges, in :data:`EDGE_ORDER`."""
    p = embed_tet(lengths)
    out = np.empty(6)
    for n, (i, j) in enumerate(EDGE_ORDER):
        k, l = (v for v in range(4) if v not in (i, j))
        e = p[j] - p[i]
        e /= np.linalg.norm(e)
        # in-plane normals of the two faces meeting along (i, j)
        u = p[k] - p[i]
        w = p[l] - p[i]
        u -= (u @ e) * e
        w -= (w @ e) * e
        out[n] = math.atan2(np.linalg.norm(np.cross(u, w)), u @ w)
    return out


def dihedral_angle(lengths, edge):
    """Dihedral angle of a tetrahedron along ``edge`` (index or local pair)."""
    if not isinstance(edge, (int, np.integer)):
        edge = edge_index(*edge)
    return float(dihedral_angles(lengths)[edge])


def face_angle(lengths, apex, j, k):
    """Angle at local vertex ``apex`` of the face (apex, j, k)."""
    a = lengths[edge_index(apex, j)]
    b = lengths[edge_index(apex, k)]
    c = lengths[edge_index(j, k)]
    cos = (a * a + b * b - c * c) / (2 * a * b)
    return math.acos(min(1.0, max(-1.0, cos)))


def centroid_distances(lengths):
    """Distances from the centroid of a tetrahedron to its four vertices."""
    d2 = _sq_lengths(lengths)
    total = d2[np.triu_indices(4, 1)].sum()
    return np.sqrt(d2.sum(axis=1) / 4.0 - total / 16.0)


@dataclass(frozen=True)
class Tet:
    labels: tuple
    lengths: tuple

    def __post_init__(self):
        if len(self.labels) != 4:
            raise InvalidComplexError(f"a tetrahedron needs 4 vertex labels, got {self.labels!r}")
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(set(self.labels)) != 4:
            raise InvalidComplexError(f"tetrahedron vertex labels must be distinct, got {self.labels!r}")
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        check_simplex(self.lengths)

    def length(self, i, j):
        return self.lengths[edge_index(i, j)]


@dataclass(frozen=True)
class Gluing:
    """Identification of face ``verts_a`` of tet ``tet_a`` with face ``verts_b`` of ``tet_b``.

    The vertex tuples are matched position by position.
    """

    tet_a: int
    verts_a: tuple
    tet_b: int
    verts_b: tuple

    @property
    def omitted_a(self):
        return 6 - sum(self.verts_a)

    @property
    def omitted_b(self):
        return 6 - sum(self.verts_b)


def gluings_from_labels(tets):
    """Pair faces carrying the same three vertex labels."""
    faces = defaultdict(list)
    for t, tet in enumerate(tets):
        if len(set(tet.labels)) != 4:
            raise InvalidComplexError(
                f"tet {t} repeats a vertex label; pass explicit gluings for such complexes"
            )
        for omit in range(4):
            verts = tuple(v for v in range(4) if v != omit)
            faces[frozenset(tet.labels[v] for v in verts)].append((t, verts))
    gluings = []
    for key, members in faces.items():
        if len(members) != 2:
            raise InvalidComplexError(
                f"face {sorted(key)} is shared by {len(members)} tetrahedra (need exactly 2)"
            )
        (ta, va), (tb, vb) = members
        by_label = {tets[tb].labels[v]: v for v in vb}
        gluings.append(Gluing(ta, va, tb, tuple(by_label[tets[ta].labels[v]] for v in va)))
    return gluings


def _classes(n, pairs):
    if pairs:
        a, b = np.asarray(pairs).T
    else:
        a = b = np.zeros(0, dtype=int)
    graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


# --------------------------------------------------------------------------- links


def _embed_spherical_triangle(sides):
    """Unit vectors for the corners of a spherical triangle; side j opposite corner j."""
    a, b, c = sides
    A = np.array([1.0, 0.0, 0.0])
    B = np.array([math.cos(c), math.sin(c), 0.0])
    y = (math.cos(a) - math.cos(b) * math.cos(c)) / math.sin(c)
    z = math.sqrt(max(math.sin(b) ** 2 - y * y, 0.0))
    C = np.array([math.cos(b), y, z])
    return A, B, C


def _arc(p, q):
    cross = np.linalg.norm(np.cross(p, q), axis=-1)
    return np.arctan2(cross, np.sum(p * q, axis=-1))


@dataclass(frozen=True)
class VertexLink:
    """Spherical polyhedral surface of unit directions at a vertex.

    ``triangles[f]`` lists link-vertex indices; ``sides[f, j]`` is the arc
    length of the side opposite corner ``j`` and ``side_ids[f, j]`` names that
    side so that triangles sharing it can be matched; ``angles[f, j]`` is the
    corner angle at corner ``j``.
    """

    triangles: np.ndarray
    sides: np.ndarray
    angles: np.ndarray
    side_ids: np.ndarray
    n_vertices: int
    #: complex half-edge id behind each link vertex (identity for standalone links)
    halfedges: tuple = ()

    @classmethod
    def from_spherical_triangles(cls, triangles, sides):
        """Build a link from corner indices and side lengths alone."""
        triangles = np.asarray(triangles, dtype=int)
        sides = np.asarray(sides, dtype=float)
        a, b, c = sides[:, 0], sides[:, 1], sides[:, 2]

        def corner(opp, s1, s2):
            cos = (np.cos(opp) - np.cos(s1) * np.cos(s2)) / (np.sin(s1) * np.sin(s2))
            return np.arccos(np.clip(cos, -1.0, 1.0))

        angles = np.stack([corner(a, b, c), corner(b, c, a), corner(c, a, b)], axis=1)
        ids = {}
        side_ids = np.empty_like(triangles)
        for f, tri in enumerate(triangles):
            for j in range(3):
                key = frozenset((tri[(j + 1) % 3], tri[(j + 2) % 3]))
                side_ids[f, j] = ids.setdefault(key, len(ids))
        n = int(triangles.max()) + 1
        return cls(triangles, sides, angles, side_ids, n, tuple(range(n)))

    def cone_angles(self):
        return np.bincount(
            self.triangles.ravel(), weights=self.angles.ravel(), minlength=self.n_vertices
        )

    def area(self):
        return float(np.sum(self.angles.sum(axis=1) - math.pi))

    def euler_characteristic(self):
        n_sides = len(np.unique(self.side_ids))
        return self.n_vertices - n_sides + len(self.triangles)

    def is_connected(self):
        f = np.repeat(np.arange(len(self.triangles)), 3)
        s = self.side_ids.ravel() + len(self.triangles)
        n = len(self.triangles) + int(self.side_ids.max()) + 1
        labels = _classes(n, list(zip(f, s)))
        return len(np.unique(labels[: len(self.triangles)])) == 1

    def cone_points(self, tol=DEFAULT_TOLERANCES):
        theta = self.cone_angles()
        return [int(v) for v in np.flatnonzero(np.abs(theta - TWO_PI) > tol.angle)]

    def geodesic_distances(self, sources, levels=3):
        """Approximate intrinsic distances from ``sources`` to every link vertex.

        Every triangle is subdivided into ``4**levels`` pieces by normalized
        barycentric points (which lie on the great-circle sides, so neighbours
        agree on shared sides), then all nodes of one triangle are joined by
        great-circle chords.  The graph distance overestimates the geodesic
        distance only where a path crosses a side between two nodes.
        """
        N = 2**levels
        keys = {}
        rows, cols, weights = [], [], []
        bary = [(i, j, N - i - j) for i in range(N + 1) for j in range(N + 1 - i)]
        w = np.array(bary, dtype=float)
        for f, tri in enumerate(self.triangles):
            A, B, C = _embed_spherical_triangle(self.sides[f])
            pts = w @ np.stack([A, B, C])
            pts /= np.linalg.norm(pts, axis=1)[:, None]
            idx = []
            for wts in bary:
                nz = [c for c in range(3) if wts[c] > 0]
                if len(nz) == 1:
                    key = ("v", int(tri[nz[0]]))
                elif len(nz) == 2:
                    zero = 3 - sum(nz)
                    c0, c1 = nz
                    key = (
                        "s",
                        int(self.side_ids[f, zero]),
                        min((int(tri[c0]), wts[c0]), (int(tri[c1]), wts[c1])),
                    )
                else:
                    key = ("f", f, wts[0], wts[1])
                idx.append(keys.setdefault(key, len(keys)))
            idx = np.array(idx)
            ii, jj = np.triu_indices(len(idx), 1)
            rows.append(idx[ii])
            cols.append(idx[jj])
            weights.append(_arc(pts[ii], pts[jj]))
        n = len(keys)
        dense = np.full((n, n), np.inf)
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        d = np.concatenate(weights)
        np.minimum.at(dense, (r, c), d)
        np.minimum.at(dense, (c, r), d)
        np.fill_diagonal(dense, np.inf)
        graph = csgraph_from_dense(dense, null_value=np.inf)
        src = [keys[("v", int(s))] for s in sources]
        dist = dijkstra(graph, directed=False, indices=src)
        vert = [keys.get(("v", v)) for v in range(self.n_vertices)]
        out = np.full((len(src), self.n_vertices), np.inf)
        for v, node in enumerate(vert):
            if node is not None:
                out[:, v] = dist[:, node]
        return out


@dataclass(frozen=True)
class SuspensionTest:
    passed: bool
    cone_points: tuple
    cone_angles: tuple
    area: float
    distance: float
    reason: str
    #: |deviation| / tolerance for every check that was evaluated
    margins: dict = field(default_factory=dict)

    @property
    def borderline(self):
        """True when any check landed within a factor 10 of its tolerance."""
        return any(0.1 <= m <= 10.0 for m in self.margins.values())


def suspension_test(link, tol=DEFAULT_TOLERANCES):
    """Decide whether a vertex link is the spherical suspension of a circle.

    A suspension has exactly two cone points with equal cone angle ``theta``,
    area ``2 theta`` and the two cone points at distance ``pi``.
    """
    theta = link.cone_angles()
    cones = tuple(link.cone_points(tol))
    angles = tuple(float(theta[v]) for v in cones)
    area = link.area()
    if not cones:
        return SuspensionTest(True, cones, angles, area, math.nan, "no cone points")
    if len(cones) != 2:
        return SuspensionTest(False, cones, angles, area, math.nan, f"{len(cones)} cone points")
    margins = {}
    margins["angles"] = abs(angles[0] - angles[1]) / tol.area
    if margins["angles"] > 1.0:
        return SuspensionTest(False, cones, angles, area, math.nan, "unequal cone angles", margins)
    margins["area"] = abs(area - (angles[0] + angles[1])) / tol.area
    if margins["area"] > 1.0:
        return SuspensionTest(False, cones, angles, area, math.nan, "area differs from 2 theta", margins)
    dist = float(link.geodesic_distances([cones[0]], tol.link_levels)[0, cones[1]])
    margins["distance"] = abs(dist - math.pi) / tol.dist
    if margins["distance"] > 1.0:
        return SuspensionTest(False, cones, angles, area, dist, "cone points not antipodal", margins)
    return SuspensionTest(True, cones, angles, area, dist, "suspension", margins)


def is_product_vertex(link, tol=DEFAULT_TOLERANCES):
    """True iff the tangent cone with this link splits off a line."""
    return suspension_test(link, tol).passed


# --------------------------------------------------------------------------- complex


@dataclass(frozen=True)
class Edge:
    index: int
    members: tuple  # (tet, local edge index) pairs
    endpoints: tuple  # vertex ids
    halfedges: tuple  # half-edge ids starting at endpoints[0], endpoints[1]
    length: float


class PolyhedralComplex:
    """Closed triangulated 3-manifold built from Euclidean tetrahedra."""

    def __init__(self, tets, gluings=None):
        self.tets = tuple(t if isinstance(t, Tet) else Tet(*t) for t in tets)
        if not self.tets:
            raise InvalidComplexError("complex has no tetrahedra")
        if gluings is None:
            gluings = gluings_from_labels(self.tets)
        self.gluings = tuple(gluings)
        self._dihedral = np.array([dihedral_angles(t.lengths) for t in self.tets])
        self._build()

    # -- construction

    def _build(self):
        n = len(self.tets)
        seen = {}
        v_pairs, he_pairs, e_pairs, slot_pairs = [], [], [], []
        for g in self.gluings:
            for t, verts in ((g.tet_a, g.verts_a), (g.tet_b, g.verts_b)):
                if not 0 <= t < n or len(set(verts)) != 3 or not set(verts) <= {0, 1, 2, 3}:
                    raise InvalidComplexError(f"malformed gluing {g}")
                face = (t, frozenset(verts))
                if face in seen:
                    raise InvalidComplexError(f"face {sorted(verts)} of tet {t} is glued twice")
                seen[face] = g
            if (g.tet_a, frozenset(g.verts_a)) == (g.tet_b, frozenset(g.verts_b)):
                raise InvalidComplexError(f"face glued to itself: {g}")
            ta, tb = self.tets[g.tet_a], self.tets[g.tet_b]
            va, vb = g.verts_a, g.verts_b
            for x in range(3):
                v_pairs.append((4 * g.tet_a + va[x], 4 * g.tet_b + vb[x]))
                for y in range(3):
                    if x == y:
                        continue
                    he_pairs.append(
                        (
                            12 * g.tet_a + _ORDERED_INDEX[va[x], va[y]],
                            12 * g.tet_b + _ORDERED_INDEX[vb[x], vb[y]],
                        )
                    )
                    if x < y:
                        la, lb = ta.length(va[x], va[y]), tb.length(vb[x], vb[y])
                        if la != lb:
                            raise InvalidComplexError(
                                f"glued edge lengths differ: tet {g.tet_a} {la!r} vs tet {g.tet_b} {lb!r}"
                            )
                        e_pairs.append(
                            (6 * g.tet_a + edge_index(va[x], va[y]), 6 * g.tet_b + edge_index(vb[x], vb[y]))
                        )
                slot_pairs.append(
                    (
                        12 * g.tet_a + _ORDERED_INDEX[va[x], g.omitted_a],
                        12 * g.tet_b + _ORDERED_INDEX[vb[x], g.omitted_b],
                    )
                )
        for t in range(n):
            for omit in range(4):
                if (t, frozenset(v for v in range(4) if v != omit)) not in seen:
                    raise InvalidComplexError(
                        f"face opposite vertex {omit} of tet {t} is unglued (boundary is not supported)"
                    )

        self._vertex_of = _classes(4 * n, v_pairs).reshape(n, 4)
        self._he_of = _classes(12 * n, he_pairs).reshape(n, 12)
        self._slot_of = _classes(12 * n, slot_pairs).reshape(n, 12)
        edge_cls = _classes(6 * n, e_pairs).reshape(n, 6)
        self.n_vertices = int(self._vertex_of.max()) + 1

        labels = {}
        for t, tet in enumerate(self.tets):
            for i in range(4):
                v = int(self._vertex_of[t, i])
                if labels.setdefault(v, tet.labels[i]) != tet.labels[i]:
                    raise InvalidComplexError(
                        f"glued vertices carry different labels {labels[v]!r} and {tet.labels[i]!r}"
                    )
        self.vertex_labels = tuple(labels[v] for v in range(self.n_vertices))

        members = defaultdict(list)
        for t in range(n):
            for e in range(6):
                members[int(edge_cls[t, e])].append((t, e))
        edges = []
        self._he_edge = {}
        self._he_start = {}
        for idx in range(len(members)):
            mem = tuple(members[idx])
            t, e = mem[0]
            i, j = EDGE_ORDER[e]
            h0 = int(self._he_of[t, _ORDERED_INDEX[i, j]])
            h1 = int(self._he_of[t, _ORDERED_INDEX[j, i]])
            if h0 == h1:
                raise InvalidComplexError(f"edge {idx} is glued to itself with reversed orientation")
            ends = (int(self._vertex_of[t, i]), int(self._vertex_of[t, j]))
            edges.append(Edge(idx, mem, ends, (h0, h1), self.tets[t].lengths[e]))
            self._he_edge[h0] = self._he_edge[h1] = idx
            self._he_start[h0], self._he_start[h1] = ends
        self.edges = tuple(edges)
        self._edge_of = edge_cls

        self._vertex_members = defaultdict(list)
        for t in range(n):
            for i in range(4):
                self._vertex_members[int(self._vertex_of[t, i])].append((t, i))
        self._links = {}
        for v in range(self.n_vertices):
            link = self.link(v)
            chi = link.euler_characteristic()
            if chi != 2 or not link.is_connected():
                raise InvalidComplexError(
                    f"link of vertex {self.vertex_labels[v]!r} is not a 2-sphere (Euler characteristic {chi})"
                )

    # -- queries

    @property
    def n_tets(self):
        return len(self.tets)

    def vertex_of(self, t, i):
        return int(self._vertex_of[t, i])

    def edge_of(self, t, e):
        return int(self._edge_of[t, e])

    def find_edge(self, a, b):
        """Edge id joining the vertices labelled ``a`` and ``b``."""
        want = sorted((str(a), str(b)))
        hits = [
            e.index
            for e in self.edges
            if sorted(self.vertex_labels[v] for v in e.endpoints) == want
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} edges join {a!r} and {b!r}")
        return hits[0]

    def cone_angles(self):
        """Total dihedral angle around every edge."""
        out = np.zeros(len(self.edges))
        np.add.at(out, self._edge_of.ravel(), self._dihedral.ravel())
        return out

    def link(self, v):
        """The spherical link of vertex ``v`` as a :class:`VertexLink`."""
        if v in self._links:
            return self._links[v]
        local = {}
        tris, sides, angles, side_ids = [], [], [], []
        for t, i in self._vertex_members[v]:
            tet = self.tets[t]
            others = [j for j in range(4) if j != i]
            corners, s_row, a_row, id_row = [], [], [], []
            for j in others:
                h = int(self._he_of[t, _ORDERED_INDEX[i, j]])
                corners.append(local.setdefault(h, len(local)))
                a_row.append(self._dihedral[t, edge_index(i, j)])
                k, l = (x for x in others if x != j)
                s_row.append(face_angle(tet.lengths, i, k, l))
                id_row.append(int(self._slot_of[t, _ORDERED_INDEX[i, j]]))
            tris.append(corners)
            sides.append(s_row)
            angles.append(a_row)
            side_ids.append(id_row)
        link = VertexLink(
            np.array(tris),
            np.array(sides),
            np.array(angles),
            np.array(side_ids),
            len(local),
            tuple(sorted(local, key=local.get)),
        )
        self._links[v] = link
        return link

    def halfedge_edge(self, h):
        return self._he_edge[h]

    def halfedge_start(self, h):
        return self._he_start[h]

    def tet_dihedral_angles(self, t):
        return self._dihedral[t].copy()


def cone_angle(cx, edge):
    """Total angle around a triangulation edge (id or pair of vertex labels)."""
    if not isinstance(edge, (int, np.integer)):
        edge = cx.find_edge(*edge)
    if not 0 <= edge < len(cx.edges):
        raise KeyError(f"no edge {edge}")
    return float(cx.cone_angles()[edge])


@dataclass(frozen=True)
class NonnegativityCheck:
    nonnegative: bool
    worst_edge: int
    max_theta: float

    def __bool__(self):
        return self.nonnegative


def is_nonnegatively_curved(cx, tol=DEFAULT_TOLERANCES):
    theta = cx.cone_angles()
    worst = int(np.argmax(theta))
    return NonnegativityCheck(bool(theta[worst] <= TWO_PI + tol.angle), worst, float(theta[worst]))


@dataclass(frozen=True)
class SingularStratum:
    kind: str  # "closed-edge" | "open-edge" | "essential-vertex"
    edges: tuple = ()
    vertices: tuple = ()
    theta: float = math.nan
    omega: float = math.nan
    length: float = math.nan
    endpoints: tuple = ()
    link_area: float = math.nan
    cone_angles: tuple = ()

    @property
    def is_edge(self):
        return self.kind != "essential-vertex"

    def to_dict(self, cx=None):
        d = {"kind": self.kind}
        name = (lambda v: cx.vertex_labels[v]) if cx is not None else (lambda v: v)
        if self.is_edge:
            d.update(
                theta=self.theta,
                omega=self.omega,
                length=self.length,
                edges=list(self.edges),
                vertices=[name(v) for v in self.vertices],
                endpoints=[name(v) for v in self.endpoints],
            )
        else:
            d.update(
                vertex=name(self.vertices[0]),
                incident_edges=list(self.edges),
                link_area=self.link_area,
                cone_angles=list(self.cone_angles),
            )
        return d

    @classmethod
    def from_dict(cls, d):
        if d["kind"] == "essential-vertex":
            return cls(
                "essential-vertex",
                edges=tuple(d.get("incident_edges", ())),
                vertices=(d["vertex"],),
                link_area=float(d["link_area"]),
                cone_angles=tuple(float(x) for x in d.get("cone_angles", ())),
            )
        return cls(
            d["kind"],
            edges=tuple(d.get("edges", ())),
            vertices=tuple(d.get("vertices", ())),
            theta=float(d["theta"]),
            omega=float(d["omega"]),
            length=float(d["length"]),
            endpoints=tuple(d.get("endpoints", ())),
        )


@dataclass
class Analysis:
    strata: list
    nonnegative: NonnegativityCheck
    warnings: list
    #: smallest altitude / opposite-edge distance among tets touching a stratum
    separation: float
    #: smallest link distance between cone points at an essential vertex
    link_separation: float

    @property
    def edges(self):
        return [s for s in self.strata if s.is_edge]

    @property
    def vertices(self):
        return [s for s in self.strata if not s.is_edge]

    def to_dict(self, cx=None):
        def finite(x):
            return float(x) if math.isfinite(x) else None

        return {
            "strata": [s.to_dict(cx) for s in self.strata],
            "counts": {
                "open_edges": sum(s.kind == "open-edge" for s in self.strata),
                "closed_edges": sum(s.kind == "closed-edge" for s in self.strata),
                "essential_vertices": len(self.vertices),
            },
            "nonnegative": self.nonnegative.nonnegative,
            "worst_edge": self.nonnegative.worst_edge,
            "max_theta": self.nonnegative.max_theta,
            "warnings": list(self.warnings),
            "separation": finite(self.separation),
            "link_separation": finite(self.link_separation),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            strata = [SingularStratum.from_dict(x) for x in d["strata"]]
            check = NonnegativityCheck(bool(d["nonnegative"]), int(d["worst_edge"]), float(d["max_theta"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MeshFormatError(f"analysis document: bad or missing field {exc}") from None
        sep = d.get("separation")
        link = d.get("link_separation")
        return cls(
            strata,
            check,
            list(d.get("warnings", [])),
            math.inf if sep is None else float(sep),
            math.inf if link is None else float(link),
        )


def _vertex_tests(cx, singular, tol):
    tests = {}
    for v in range(cx.n_vertices):
        link = cx.link(v)
        cones = [h for h in link.halfedges if cx.halfedge_edge(h) in singular]
        if cones:
            tests[v] = suspension_test(link, tol)
    return tests


def singular_strata(cx, tol=DEFAULT_TOLERANCES, _tests=None):
    """Essential edges (closed or open) and essential vertices of ``cx``."""
    theta = cx.cone_angles()
    singular = {e.index for e in cx.edges if abs(theta[e.index] - TWO_PI) > tol.angle}
    tests = _tests if _tests is not None else _vertex_tests(cx, singular, tol)
    essential = {v for v, res in tests.items() if not res.passed}

    # at a product vertex the two singular half-edges continue each other
    through = {}
    for v, res in tests.items():
        if v in essential:
            continue
        hs = [cx.link(v).halfedges[c] for c in res.cone_points]
        through[hs[0]], through[hs[1]] = hs[1], hs[0]

    strata = []
    visited = set()

    def walk(h):
        """Follow a chain starting with half-edge ``h``."""
        edges, verts = [], [cx.halfedge_start(h)]
        while True:
            e = cx.edges[cx.halfedge_edge(h)]
            edges.append(e.index)
            visited.add(e.index)
            out = e.halfedges[1] if h == e.halfedges[0] else e.halfedges[0]
            end = cx.halfedge_start(out)
            verts.append(end)
            if end in essential:
                return edges, verts, False
            h = through[out]
            if cx.halfedge_edge(h) in visited:
                return edges, verts, True

    def stratum(kind, edges, verts):
        angles = theta[edges]
        if np.ptp(angles) > tol.angle:
            raise InvalidComplexError(f"cone angles disagree along essential edge {edges}")
        mean = float(np.mean(angles))
        ends = (verts[0], verts[-1]) if kind == "open-edge" else ()
        return SingularStratum(
            kind,
            edges=tuple(edges),
            vertices=tuple(verts),
            theta=mean,
            omega=TWO_PI - mean,
            length=float(sum(cx.edges[e].length for e in edges)),
            endpoints=ends,
        )

    for v in sorted(essential):
        for h in cx.link(v).halfedges:
            e = cx.halfedge_edge(h)
            if e in singular and e not in visited and cx.halfedge_start(h) == v:
                edges, verts, _ = walk(h)
                strata.append(stratum("open-edge", edges, verts))
    for e in sorted(singular):
        if e not in visited:
            edges, verts, _ = walk(cx.edges[e].halfedges[0])
            strata.append(stratum("closed-edge", edges, verts[:-1]))
    for v in sorted(essential):
        res = tests[v]
        incident = sorted(
            {cx.halfedge_edge(cx.link(v).halfedges[c]) for c in cx.link(v).cone_points(tol)}
        )
        strata.append(
            SingularStratum(
                "essential-vertex",
                edges=tuple(incident),
                vertices=(v,),
                link_area=res.area,
                cone_angles=res.cone_angles,
            )
        )
    return strata


def _tet_separation(lengths):
    p = embed_tet(lengths)
    out = math.inf
    volume = math.sqrt(cayley_menger(lengths) / 288.0)
    for omit in range(4):
        i, j, k = (v for v in range(4) if v != omit)
        area = 0.5 * np.linalg.norm(np.cross(p[j] - p[i], p[k] - p[i]))
        out = min(out, 3.0 * volume / area)
    for (i, j), (k, l) in (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))):
        cross = np.linalg.norm(np.cross(p[j] - p[i], p[l] - p[k]))
        out = min(out, 6.0 * volume / cross)
    return out


def analyze(cx, tol=DEFAULT_TOLERANCES):
    """Singular structure, curvature sign and separation scales of ``cx``."""
    theta = cx.cone_angles()
    singular = {e.index for e in cx.edges if abs(theta[e.index] - TWO_PI) > tol.angle}
    tests = _vertex_tests(cx, singular, tol)
    strata = singular_strata(cx, tol, _tests=tests)
    warnings = []
    for e in cx.edges:
        ratio = abs(theta[e.index] - TWO_PI) / tol.angle
        if 0.1 <= ratio <= 10.0:
            warnings.append(f"edge {e.index}: |theta - 2pi| is {ratio:.3g} x tol_angle")
    for v, res in sorted(tests.items()):
        if res.borderline:
            warnings.append(
                f"vertex {cx.vertex_labels[v]!r}: suspension test ({res.reason}) within 10x of tolerance"
            )
    check = is_nonnegatively_curved(cx, tol)

    touching = set()
    for s in strata:
        for e in s.edges:
            touching.update(t for t, _ in cx.edges[e].members)
    separation = min((_tet_separation(cx.tets[t].lengths) for t in touching), default=math.inf)
    link_sep = math.inf
    for v, res in tests.items():
        if res.passed or len(res.cone_points) < 2:
            continue
        d = cx.link(v).geodesic_distances(res.cone_points, tol.link_levels)
        sub = d[:, list(res.cone_points)]
        link_sep = min(link_sep, float(sub[~np.eye(len(sub), dtype=bool)].min()))
    return Analysis(strata, check, warnings, separation, link_sep)


def subdivide_tet(cx, t):
    """Cone tetrahedron ``t`` off from its centroid; the metric is unchanged."""
    old = cx.tets[t]
    name = f"c{t}"
    while name in cx.vertex_labels:
        name += "'"
    rc = centroid_distances(old.lengths)
    new = []
    for pos in range(4):
        labels = list(old.labels)
        labels[pos] = name
        lengths = []
        for i, j in EDGE_ORDER:
            if pos == i:
                lengths.append(rc[j])
            elif pos == j:
                lengths.append(rc[i])
            else:
                lengths.append(old.length(i, j))
        new.append(Tet(tuple(labels), tuple(lengths)))
    tets = list(cx.tets)
    tets[t] = new[0]
    index = [t] + [len(tets) + k for k in range(3)]
    tets.extend(new[1:])

    def remap(tet, verts):
        if tet != t:
            return tet
        return index[6 - sum(verts)]

    gluings = [
        Gluing(remap(g.tet_a, g.verts_a), g.verts_a, remap(g.tet_b, g.verts_b), g.verts_b)
        for g in cx.gluings
    ]
    for i in range(4):
        for j in range(i + 1, 4):
            va = tuple(p for p in range(4) if p != j)
            vb = tuple(j if p == i else p for p in va)
            gluings.append(Gluing(index[i], va, index[j], vb))
    return PolyhedralComplex(tets, gluings)


# --------------------------------------------------------------------------- documents


class MeshFormatError(ValueError):
    """Malformed mesh document; the message names the offending field."""


def complex_from_dict(doc):
    if not isinstance(doc, dict):
        raise MeshFormatError("mesh document must be a JSON object")
    if "tets" not in doc:
        raise MeshFormatError("missing field 'tets'")
    declared = doc.get("vertices")
    tets = []
    for n, entry in enumerate(doc["tets"]):
        where = f"tets[{n}]"
        try:
            labels = entry["vertices"]
            raw = entry["lengths"]
        except (KeyError, TypeError) as exc:
            raise MeshFormatError(f"{where}: missing field {exc}") from None
        if isinstance(raw, dict):
            try:
                raw = [raw[k] for k in EDGE_NAMES]
            except KeyError as exc:
                raise MeshFormatError(f"{where}.lengths: missing edge {exc}") from None
        try:
            lengths = tuple(float(x) for x in raw)
        except (TypeError, ValueError) as exc:
            raise MeshFormatError(f"{where}.lengths: {exc}") from None
        if declared is not None and not set(map(str, labels)) <= set(map(str, declared)):
            raise MeshFormatError(f"{where}.vertices: undeclared label in {labels!r}")
        try:
            tets.append(Tet(tuple(labels), lengths))
        except InvalidComplexError as exc:
            raise MeshFormatError(f"{where}: {exc}") from None
    gluings = None
    if doc.get("gluings") is not None:
        gluings = []
        for n, g in enumerate(doc["gluings"]):
            try:
                (ta, va), (tb, vb) = g["a"], g["b"]
                gluings.append(Gluing(int(ta), tuple(map(int, va)), int(tb), tuple(map(int, vb))))
            except (KeyError, TypeError, ValueError) as exc:
                raise MeshFormatError(f"gluings[{n}]: {exc}") from None
    return PolyhedralComplex(tets, gluings)


def complex_to_dict(cx, explicit_gluings=False):
    labels = []
    for tet in cx.tets:
        for x in tet.labels:
            if x not in labels:
                labels.append(x)
    doc = {
        "vertices": labels,
        "tets": [
            {"vertices": list(t.labels), "lengths": {k: repr(x) for k, x in zip(EDGE_NAMES, t.lengths)}}
            for t in cx.tets
        ],
    }
    if explicit_gluings:
        doc["gluings"] = [
            {"a": [g.tet_a, list(g.verts_a)], "b": [g.tet_b, list(g.verts_b)]} for g in cx.gluings
        ]
    return doc
