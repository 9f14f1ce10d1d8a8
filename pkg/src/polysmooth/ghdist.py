"""Gromov-Hausdorff distances: exact on tiny spaces, certified bounds for smoothings.

The exact routine grows a correspondence one pair at a time.  Every minimal
correspondence is reached by repeatedly choosing an uncovered point and
pairing it with some partner, so branching over the partner of the uncovered
point whose cheapest partner is dearest is exhaustive.  Branches are pruned
by that cheapest partner and stopped early once the lower bound is attained.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .patches import cone_slope, meridian_length, vertex_model
from .profiles import DEFAULT_COLLAR, CapFunction

MAX_EXACT_POINTS = 7
GH_CONSTANT = 4.0


@dataclass(frozen=True)
class FiniteMetricSpace:
    matrix: np.ndarray

    def __post_init__(self):
        d = np.array(self.matrix, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise ValueError(f"distance matrix must be square and nonempty, got shape {d.shape}")
        scale = max(1.0, float(np.max(d)))
        if np.any(d < 0):
            raise ValueError("distances must be nonnegative")
        if np.any(np.abs(np.diag(d)) > 0):
            raise ValueError("distance matrix must have zero diagonal")
        if np.max(np.abs(d - d.T)) > 1e-12 * scale:
            raise ValueError("distance matrix must be symmetric")
        # d[i, k] <= d[i, j] + d[j, k]
        excess = d[:, None, :] - d[:, :, None] - d[None, :, :].transpose(0, 2, 1)
        if np.max(excess) > 1e-12 * scale:
            raise ValueError("distance matrix violates the triangle inequality")
        d.setflags(write=False)
        object.__setattr__(self, "matrix", d)

    @classmethod
    def from_points(cls, points):
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        return cls(np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1))

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def diameter(self):
        return float(self.matrix.max())

    @property
    def eccentricities(self):
        return self.matrix.max(axis=1)


@dataclass(frozen=True)
class GHBound:
    value: float
    kind: str  # "exact" | "upper" | "lower"
    witness: tuple = ()
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"value": self.value, "kind": self.kind, "details": dict(self.details)}
        if self.witness:
            out["witness"] = [list(p) for p in self.witness]
        return out


def _space(X):
    return X if isinstance(X, FiniteMetricSpace) else FiniteMetricSpace(X)


def gh_lower_bound(X, Y):
    """Max of the diameter bound and the eccentricity bound, both halved."""
    X, Y = _space(X), _space(Y)
    diam = 0.5 * abs(X.diameter - Y.diameter)
    ex, ey = X.eccentricities, Y.eccentricities
    gap = np.abs(ex[:, None] - ey[None, :])
    hausdorff = max(gap.min(axis=1).max(), gap.min(axis=0).max())
    ecc = 0.5 * float(hausdorff)
    return GHBound(max(diam, ecc), "lower", details={"diameter": diam, "eccentricity": ecc})


def gh_exact_small(X, Y):
    """Exact GH distance by branch and bound over correspondences (at most 7 points each)."""
    X, Y = _space(X), _space(Y)
    nx, ny = len(X), len(Y)
    if nx > MAX_EXACT_POINTS or ny > MAX_EXACT_POINTS:
        raise ValueError(
            f"exact GH is capped at {MAX_EXACT_POINTS} points per space (got {nx} and {ny}); "
            "use gh_lower_bound or a certified upper bound instead"
        )
    DX, DY = X.matrix, Y.matrix
    floor = 2.0 * gh_lower_bound(X, Y).value
    # the full product is always a correspondence
    best = [max(X.diameter, Y.diameter), tuple((i, j) for i in range(nx) for j in range(ny))]

    def search(pairs, cost, cov_x, cov_y, current):
        # cost[i, j]: distortion added by pairing x_i with y_j given ``pairs``
        if cov_x.all() and cov_y.all():
            if current < best[0]:
                best[0] = current
                best[1] = tuple(sorted(pairs))
            return
        # branch on the uncovered point whose cheapest partner is dearest
        row = np.where(cov_x, -np.inf, cost.min(axis=1))
        col = np.where(cov_y, -np.inf, cost.min(axis=0))
        if max(row.max(), col.max(), current) >= best[0]:
            return
        if row.max() >= col.max():
            i = int(np.argmax(row))
            cands = [(i, j) for j in np.argsort(cost[i], kind="stable")]
        else:
            j = int(np.argmax(col))
            cands = [(i, j) for i in np.argsort(cost[:, j], kind="stable")]
        for i, j in cands:
            value = max(current, float(cost[i, j]))
            if value >= best[0]:
                break
            nxt = np.maximum(cost, np.abs(DX[:, i][:, None] - DY[:, j][None, :]))
            cx, cy = cov_x.copy(), cov_y.copy()
            cx[i] = cy[j] = True
            search(pairs + [(int(i), int(j))], nxt, cx, cy, value)
            if best[0] <= floor:
                return

    search([], np.zeros((nx, ny)), np.zeros(nx, bool), np.zeros(ny, bool), 0.0)
    return GHBound(0.5 * best[0], "exact", best[1], {"distortion": best[0]})


def distortion(X, Y, pairs):
    X, Y = _space(X), _space(Y)
    p = np.asarray(pairs, dtype=int)
    if not set(p[:, 0]) == set(range(len(X))) or not set(p[:, 1]) == set(range(len(Y))):
        raise ValueError("pairs do not form a correspondence")
    a = X.matrix[np.ix_(p[:, 0], p[:, 0])]
    b = Y.matrix[np.ix_(p[:, 1], p[:, 1])]
    return float(np.max(np.abs(a - b)))


# --------------------------------------------------------------------------- certified bounds


def edge_constant(theta):
    """``C(k) = 4 sqrt(1 + k^2)`` for the collar of a cone of angle ``theta``."""
    return GH_CONSTANT * math.sqrt(1.0 + cone_slope(theta) ** 2)


def _edge_scale(stratum, cap=None):
    # the collar radius is eps * f(t) <= eps * max f on open edges
    if stratum.kind == "open-edge":
        cap = CapFunction(stratum.length) if cap is None else cap
        return max(1.0, cap.plateau)
    return 1.0


def smoothing_gh_bound(stratum, param, cap=None, F=None):
    """Certified GH upper bound for smoothing one stratum.

    Edges: ``C(k) eps max(1, max f)``.  Vertices: the cone over the region
    ``F <= 2 delta`` has radius at most ``2 delta / min F`` on the unit
    sphere, and the graph over it has slope at most ``max |grad F|``.
    """
    if param < 0:
        raise ValueError("collar parameter must be nonnegative")
    if stratum.is_edge:
        C = edge_constant(stratum.theta)
        scale = _edge_scale(stratum, cap)
        return GHBound(C * param * scale, "upper", details={"constant": C, "scale": scale, "eps": param})
    if F is None:
        F = vertex_model(stratum)
    radius = 2.0 * param / F.min_on_sphere
    value = GH_CONSTANT * math.sqrt(1.0 + F.max_gradient**2) * radius
    return GHBound(value, "upper", details={"radius": radius, "slope": F.max_gradient, "delta": param})


def combine_bounds(bounds):
    """Collars are disjoint, so per-stratum bounds combine by maximum."""
    values = [b.value for b in bounds]
    return GHBound(max(values, default=0.0), "upper", details={"n_strata": len(values)})


def choose_eps_for_target(strata, target, separation=math.inf, vertex_models=None):
    """Largest parameter per stratum keeping its certified bound strictly below ``target``.

    Returns a dict ``{index: eps_or_delta}``.  ``separation`` caps every collar
    radius at a quarter of the minimal distance between strata.
    """
    if not target > 0:
        raise ValueError(f"GH target must be positive, got {target!r}")
    out = {}
    shrink = 1.0 - 1e-6
    for i, s in enumerate(strata):
        F = None if vertex_models is None else vertex_models.get(i)
        unit = smoothing_gh_bound(s, 1.0, F=F).value
        value = target / unit * shrink
        if s.is_edge:
            k = cone_slope(s.theta)
            # intrinsic collar radius eps * max f * sqrt(1 + k^2)
            limit = separation / (4.0 * _edge_scale(s) * math.sqrt(1.0 + k * k))
        else:
            Fm = vertex_model(s) if F is None else F
            limit = separation * Fm.min_on_sphere / 8.0
        out[i] = min(value, limit * shrink)
    return out


def meridian_samples(theta, eps, n=6, radius=None, collar=DEFAULT_COLLAR):
    """Distance matrices of ``n`` points on a common meridian of the cone and of the smoothed cap.

    Points sit at radii ``linspace(0, radius, n)`` (default radius ``2 eps``);
    distances are arclengths along the meridian, which is a geodesic through
    the apex for both surfaces.
    """
    radius = 2 * eps if radius is None else radius
    r = np.linspace(0.0, radius, n)
    k = cone_slope(theta)
    cone = np.abs(r[:, None] - r[None, :]) * math.sqrt(1.0 + k * k)
    s = np.array([meridian_length(theta, eps, 0.0, x, collar) for x in r])
    smooth = np.abs(s[:, None] - s[None, :])
    return cone, smooth
