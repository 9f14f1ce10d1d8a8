"""Smoothing patches as explicit graphs, with their principal curvatures.

Closed edge
    the surface of revolution ``z = k phi_eps(r)`` (times a line).
Open edge
    the hypersurface ``z = k phi_{eps f(t)}(r)`` over ``(x, y, t)``.
Vertex
    the graph ``w = psi_delta(F(x))`` of a convex, degree-one homogeneous
    function ``F`` on 3-space.

Principal curvatures of a graph ``z = G(x)`` come from the metric
``I + dG dG^T`` and second fundamental form ``Hess G / sqrt(1 + |dG|^2)``
(upward normal), solved as a generalized symmetric eigenproblem.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .profiles import DEFAULT_COLLAR, CapFunction, PlateauFunction, snap
from .tolerances import DEFAULT_TOLERANCES

TWO_PI = 2.0 * math.pi


class ConvexityError(ValueError):
    """A vertex patch has a negative principal curvature: the supplied F is not convex."""

    def __init__(self, message, min_curvature, point):
        super().__init__(message)
        self.min_curvature = min_curvature
        self.point = point


EIG_ROUNDOFF = 64 * np.finfo(float).eps


def cone_slope(theta):
    """Slope ``k`` of the graph ``z = k r`` whose cone has total angle ``theta``."""
    if not theta > 0:
        raise ValueError(f"cone angle must be positive, got {theta!r}")
    if theta > TWO_PI:
        raise ValueError(f"cone angle {theta!r} exceeds 2 pi: no convex rotational graph")
    return math.sqrt(max((TWO_PI / theta) ** 2 - 1.0, 0.0))


def cone_angle_of_slope(k):
    return TWO_PI / math.sqrt(1.0 + k * k)


def graph_principal_curvatures(grad, hess):
    """Sorted principal curvatures of graphs with the given gradients and Hessians."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    d = grad.shape[-1]
    W = np.sqrt(1.0 + np.sum(grad**2, axis=-1))
    metric = np.eye(d) + grad[..., :, None] * grad[..., None, :]
    L = np.linalg.cholesky(metric)
    # L^{-1} H L^{-T} is similar to metric^{-1} H
    Y = np.linalg.solve(L, hess)
    A = np.linalg.solve(L, np.swapaxes(Y, -1, -2))
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    lam = np.linalg.eigvalsh(A)
    # eigvalsh is accurate to O(eps |A|); below that a curvature is zero
    floor = EIG_ROUNDOFF * np.max(np.abs(lam), axis=-1, keepdims=True)
    lam = np.where(np.abs(lam) <= floor, 0.0, lam)
    return lam / W[..., None]


def graph_normals(grad):
    grad = np.asarray(grad, dtype=float)
    n = np.concatenate([-grad, np.ones(grad.shape[:-1] + (1,))], axis=-1)
    return n / np.linalg.norm(n, axis=-1)[..., None]


@dataclass
class PatchSample:
    """Sampled points of one patch.

    ``curvatures`` are sorted ascending: three per point for hypersurfaces in
    4-space, two for the surface-of-revolution patch.
    """

    kind: str
    params: dict
    points: np.ndarray
    normals: np.ndarray
    curvatures: np.ndarray
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.curvatures)

    def principal3(self):
        """Principal curvatures in 4-space; a 2D patch is taken times a line."""
        k = self.curvatures
        if k.shape[1] == 3:
            return k
        return np.sort(np.concatenate([k, np.zeros((len(k), 1))], axis=1), axis=1)


# --------------------------------------------------------------------------- closed edge


def _revolution_data(theta, eps, r, collar):
    k = cone_slope(theta)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    if not eps > 0:
        raise ValueError(f"collar scale must be positive, got {eps!r}")
    u = r / eps
    g = k * eps * collar(u, 0)
    g1 = k * collar(u, 1)
    g2 = k * collar(u, 2) / eps
    return k, r, g, g1, g2


def closed_edge_patch(theta, eps, r, collar=DEFAULT_COLLAR):
    """Samples of the smoothed cone ``z = k phi_eps(r)`` at radii ``r``."""
    if not theta < TWO_PI:
        raise ValueError("closed-edge patch needs a cone angle below 2 pi")
    k, r, g, g1, g2 = _revolution_data(theta, eps, r, collar)
    W = np.sqrt(1.0 + g1**2)
    meridian = g2 / W**3
    with np.errstate(divide="ignore", invalid="ignore"):
        parallel = np.where(r > 0, g1 / (r * W), g2)
    points = np.stack([r, np.zeros_like(r), g], axis=1)
    normals = np.stack([-g1 / W, np.zeros_like(r), 1.0 / W], axis=1)
    curv = np.sort(np.stack([meridian, parallel], axis=1), axis=1)
    return PatchSample(
        "closed-edge",
        {"r": r},
        points,
        normals,
        curv,
        {"meridian": meridian, "parallel": parallel, "gauss": meridian * parallel, "slope": k},
    )


def cap_total_curvature(theta, eps, collar=DEFAULT_COLLAR, radius=None):
    """Integral of Gauss curvature over the disk ``r <= radius`` (default ``eps``) by adaptive quadrature."""
    radius = eps if radius is None else radius

    def density(r):
        p = closed_edge_patch(theta, eps, r, collar)
        slope = p.extras["slope"] * collar(np.asarray(r) / eps, 1)
        return p.extras["gauss"][0] * TWO_PI * r * math.sqrt(1.0 + slope**2)

    breaks = [x for x in (eps,) if 0 < x < radius]
    value, _ = integrate.quad(density, 0.0, radius, points=breaks or None, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value


def meridian_length(theta, eps, r0, r1, collar=DEFAULT_COLLAR):
    """Intrinsic length along a meridian of the smoothed cone between radii ``r0 <= r1``."""
    k = cone_slope(theta)

    def speed(r):
        return math.sqrt(1.0 + (k * float(collar(r / eps, 1))) ** 2)

    lo, hi = min(r0, r1), max(r0, r1)
    breaks = [eps] if lo < eps < hi else None
    value, _ = integrate.quad(speed, lo, hi, points=breaks, epsabs=1e-13, epsrel=1e-12)
    return value


# --------------------------------------------------------------------------- open edge


def open_edge_height(theta, eps, cap, x, y, t, collar=DEFAULT_COLLAR):
    """Raw graph ``G(x, y, t) = k phi_{eps f(t)}(sqrt(x^2 + y^2))``."""
    k = cone_slope(theta)
    s = eps * cap(t, 0)
    return k * s * collar(np.hypot(x, y) / s, 0)


def open_edge_patch(theta, eps, ell, r, t, cap=None, collar=DEFAULT_COLLAR):
    """Samples of the open-edge hypersurface at parameters ``(r, t)``.

    Rotational symmetry puts every sample at ``y = 0``, where the Hessian
    is block diagonal in ``(x, t)`` and ``y``.
    """
    if not 0 < theta < TWO_PI:
        raise ValueError("open-edge patch needs a cone angle in (0, 2 pi)")
    if not eps > 0:
        raise ValueError(f"collar scale must be positive, got {eps!r}")
    cap = CapFunction(ell) if cap is None else cap
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    r, t = r.ravel(), t.ravel()
    if np.any((t <= 0) | (t >= cap.ell)):
        raise ValueError("open-edge samples must avoid the edge endpoints t = 0 and t = ell")
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    k = cone_slope(theta)
    s = eps * cap(t, 0)
    s1 = eps * cap(t, 1)
    s2 = eps * cap(t, 2)
    u = r / s
    p0, p1, p2 = collar(u, 0), collar(u, 1), collar(u, 2)

    G = k * s * p0
    Gr = k * p1
    Grr = k * p2 / s
    Gs = k * (p0 - u * p1)
    Gss = k * u**2 * p2 / s
    Grs = -k * u * p2 / s
    Gt = Gs * s1
    Gtt = Gss * s1**2 + Gs * s2
    Grt = Grs * s1
    with np.errstate(divide="ignore", invalid="ignore"):
        Gyy = np.where(r > 0, Gr / r, Grr)

    n = len(r)
    grad = np.zeros((n, 3))
    grad[:, 0], grad[:, 2] = Gr, Gt
    hess = np.zeros((n, 3, 3))
    hess[:, 0, 0] = Grr
    hess[:, 1, 1] = Gyy
    hess[:, 2, 2] = Gtt
    hess[:, 0, 2] = hess[:, 2, 0] = Grt
    curv = graph_principal_curvatures(grad, hess)
    points = np.stack([r, np.zeros(n), t, G], axis=1)
    return PatchSample(
        "open-edge",
        {"r": r, "t": t},
        points,
        graph_normals(grad),
        curv,
        {"collar_radius": s, "slope": k},
    )


def open_edge_grid(eps, cap, n_r=200, n_t=200):
    """Verification grid over ``[0, 2 eps] x [a/2, ell - a/2]`` snapped to profile junctions."""
    r = snap(np.linspace(0.0, 2 * eps, n_r), [eps * cap.plateau])
    t = snap(np.linspace(cap.a / 2, cap.ell - cap.a / 2, n_t), cap.junctions)
    R, T = np.meshgrid(r, t, indexing="ij")
    return R.ravel(), T.ravel()


def open_edge_trend(theta, ell, eps0, levels=4, grid=200, collar=DEFAULT_COLLAR, tol=1e-8):
    """Sign pattern, ``min k1 k3`` and ``sup |k1|/k2`` along ``eps0 / 2^j``."""
    cap = CapFunction(ell)
    rows = []
    for j in range(levels):
        eps = eps0 / 2**j
        r, t = open_edge_grid(eps, cap, grid, grid)
        k = open_edge_patch(theta, eps, ell, r, t, cap, collar).curvatures
        neg = np.abs(k[:, 0]) > tol
        ratio = float(np.max(np.abs(k[neg, 0]) / k[neg, 1])) if np.any(neg) else 0.0
        rows.append(
            {
                "eps": eps,
                "max_k1": float(k[:, 0].max()),
                "min_k2": float(k[:, 1].min()),
                "sorted": bool(np.all(np.diff(k, axis=1) >= 0)),
                "min_k1k3": float(np.min(k[:, 0] * k[:, 2])),
                "sup_ratio": ratio,
            }
        )
    return rows


def closed_edge_grid(eps, n=200):
    return snap(np.linspace(0.0, 2 * eps, n), [eps])


# --------------------------------------------------------------------------- vertex


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)


class RoundCone:
    """``F(x) = k |x|``: the rotationally symmetric cone."""

    def __init__(self, k):
        if not k > 0:
            raise ValueError(f"cone slope must be positive, got {k!r}")
        self.k = float(k)
        self.min_on_sphere = self.k
        self.max_gradient = self.k

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            e = x / r[:, None]
            grad = self.k * e
            hess = self.k * (np.eye(3) - e[:, :, None] * e[:, None, :]) / r[:, None, None]
        return self.k * r, grad, hess

    def describe(self):
        return {"type": "round-cone", "k": self.k}


class SmoothMaxCone:
    """Smoothed maximum of linear functionals, homogeneous of degree one.

    ``F(x) = (sum_i max(<a_i, x>, 0)^p + (c |x|)^p)^(1/p)``; convex as the
    p-norm of nonnegative convex functions, and smooth away from the origin
    whenever ``c > 0``.
    """

    def __init__(self, directions, p=4, floor=0.3):
        self.a = np.atleast_2d(np.asarray(directions, dtype=float))
        self.p = float(p)
        self.c = float(floor)
        if self.p < 3:
            raise ValueError("exponent must be at least 3 for a C^2 function")
        if self.c <= 0:
            raise ValueError("floor must be positive")
        vals, grads, _ = self(fibonacci_sphere(4000))
        self.min_on_sphere = float(vals.min())
        self.max_gradient = float(np.linalg.norm(grads, axis=1).max())

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        p, c = self.p, self.c
        y = np.maximum(x @ self.a.T, 0.0)
        r2 = np.sum(x * x, axis=1)
        r = np.sqrt(r2)
        S = np.sum(y**p, axis=1) + (c * r) ** p
        F = S ** (1 / p)
        dS = p * (y ** (p - 1)) @ self.a + p * c**p * (r ** (p - 2))[:, None] * x
        HS = p * (p - 1) * np.einsum("ni,ij,ik->njk", y ** (p - 2), self.a, self.a)
        with np.errstate(divide="ignore", invalid="ignore"):
            HS += p * c**p * (
                (r ** (p - 2))[:, None, None] * np.eye(3)
                + (p - 2) * (r ** (p - 4))[:, None, None] * x[:, :, None] * x[:, None, :]
            )
            grad = (S ** (1 / p - 1) / p)[:, None] * dS
            hess = (S ** (1 / p - 1) / p)[:, None, None] * HS + (
                (1 / p) * (1 / p - 1) * S ** (1 / p - 2)
            )[:, None, None] * dS[:, :, None] * dS[:, None, :]
        return F, grad, hess

    def describe(self):
        return {"type": "smooth-max", "directions": self.a.tolist(), "p": self.p, "floor": self.c}


def model_from_dict(d):
    """Rebuild a vertex graph function from its ``describe()`` output."""
    kind = d.get("type")
    if kind == "round-cone":
        return RoundCone(float(d["k"]))
    if kind == "smooth-max":
        return SmoothMaxCone(d["directions"], p=d.get("p", 4), floor=d.get("floor", 0.3))
    raise ValueError(f"unknown vertex model type {kind!r}")


def random_smooth_max_cone(n_directions=5, seed=0, p=4, floor=0.3):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_directions, 3))
    a /= np.linalg.norm(a, axis=1)[:, None]
    return SmoothMaxCone(a * rng.uniform(0.5, 2.0, size=(n_directions, 1)), p=p, floor=floor)


def vertex_model(stratum):
    """Round cone in 4-space whose link has the area of the vertex's link.

    The shape of an essential vertex's cone is not reconstructed (that needs
    a convex embedding of the link); this stand-in only matches the total
    solid angle.
    """
    area = stratum.link_area
    return RoundCone(math.sqrt(max(4 * math.pi / area - 1.0, 0.0)))


def vertex_patch(F, delta, x, tol=DEFAULT_TOLERANCES, check=True):
    """Samples of the graph ``w = psi_delta(F(x))`` at points ``x`` (N, 3)."""
    psi = PlateauFunction(delta)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    val, grad_f, hess_f = F(x)
    d1 = psi(val, 1)
    d2 = psi(val, 2)
    flat = (d1 == 0) & (d2 == 0)
    grad_f = np.where(flat[:, None], 0.0, grad_f)
    hess_f = np.where(flat[:, None, None], 0.0, hess_f)
    grad = d1[:, None] * grad_f
    hess = d2[:, None, None] * grad_f[:, :, None] * grad_f[:, None, :] + d1[:, None, None] * hess_f
    curv = graph_principal_curvatures(grad, hess)
    if check:
        i = int(np.argmin(curv[:, 0]))
        if curv[i, 0] < -tol.curv:
            raise ConvexityError(
                f"vertex patch has principal curvature {curv[i, 0]:.3e} < -{tol.curv:g}; F is not convex",
                float(curv[i, 0]),
                x[i].tolist(),
            )
    points = np.concatenate([x, psi(val, 0)[:, None]], axis=1)
    return PatchSample(
        "vertex",
        {"x": x[:, 0], "y": x[:, 1], "z": x[:, 2], "F": val},
        points,
        graph_normals(grad),
        curv,
    )


def vertex_grid(F, delta, n_dir=200, n_level=60):
    """Points on rays through the origin at F-levels in ``[0, 3 delta]`` snapped to the plateau junctions."""
    dirs = fibonacci_sphere(n_dir)
    fd, _, _ = F(dirs)
    levels = snap(np.linspace(0.0, 3 * delta, n_level), [delta, 2 * delta])
    pts = (levels[None, :, None] / fd[:, None, None]) * dirs[:, None, :]
    return pts.reshape(-1, 3)
