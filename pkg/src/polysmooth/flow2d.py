"""Rotationally symmetric Ricci flow on a sphere in conformal gauge.

The metric is ``e^{2u} g_0`` with ``g_0`` the round unit sphere and ``u`` a
function of the polar angle.  Gauss curvature is ``K = e^{-2u} (1 - L u)``
with ``L`` the round Laplacian, and the flow is ``du/dt = -K``.  The state is
integrated as ``v = e^{2u}``, for which the flow reads ``dv/dt = L log v - 2``.

Interior nodes use a three-point stencil fitted to be exact on constants,
on the harmonic function ``log tan(phi/2)`` and on ``-2 log cos(phi/2)``
(whose Laplacian is 1).  Flat cones and round spheres are then reproduced to
roundoff, and the stencil is still second-order consistent.  Nodes next to a
pole use the plain ``f'' + cot(phi) f'`` stencil; the poles use the limit
``2 f''``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .patches import cone_slope
from .profiles import DEFAULT_COLLAR

MAX_STEP_CHANGE = 0.1
MAX_HALVINGS = 20
THETA_GAP_MIN = 0.1


class FlowError(RuntimeError):
    pass


def polar_grid(n):
    if n < 9:
        raise ValueError("grid needs at least 9 nodes")
    return np.linspace(0.0, math.pi, n)


def _stencil(phi):
    """Tridiagonal coefficients ``(lower, diag, upper)`` of the discrete Laplacian."""
    n = len(phi)
    h = phi[1] - phi[0]
    lo, di, up = np.zeros(n), np.zeros(n), np.zeros(n)
    # poles: 2 f'' with the even reflection f_{-1} = f_1
    di[0], up[0] = -4 / h**2, 4 / h**2
    di[-1], lo[-1] = -4 / h**2, 4 / h**2
    for i in (1, n - 2):
        c = math.cos(phi[i]) / math.sin(phi[i])
        lo[i] = 1 / h**2 - c / (2 * h)
        up[i] = 1 / h**2 + c / (2 * h)
        di[i] = -2 / h**2
    i = np.arange(2, n - 2)
    half = phi / 2
    x = np.log(np.tan(half[1:-1]))
    x = np.concatenate([[-np.inf], x, [np.inf]])
    # q and q - 2x span the same space; use whichever stays small
    south = phi[i] <= math.pi / 2
    q = np.where(
        south[:, None],
        -2 * np.log(np.cos(half[np.stack([i - 1, i, i + 1], 1)])),
        -2 * np.log(np.sin(half[np.stack([i - 1, i, i + 1], 1)])),
    )
    dxm, dxp = x[i - 1] - x[i], x[i + 1] - x[i]
    dqm, dqp = q[:, 0] - q[:, 1], q[:, 2] - q[:, 1]
    det = dxm * dqp - dxp * dqm
    a = -dxp / det
    c = dxm / det
    lo[i], up[i], di[i] = a, c, -(a + c)
    return lo, di, up


def _quadrature(phi, stencil):
    """Area weights (per unit azimuth) compatible with the Laplacian stencil.

    Trapezoid weights ``h sin(phi)`` in the interior; the three weights at each
    pole are solved for so that the discrete Laplacian integrates to zero on
    the pole columns, which keeps Gauss-Bonnet second order.
    """
    h = phi[1] - phi[0]
    w = h * np.sin(phi)
    lo, di, up = stencil
    # rows of L restricted to columns 0..2: L[i, j] for i, j < 4
    L = np.zeros((4, 3))
    for i in range(4):
        for j in range(3):
            if j == i - 1:
                L[i, j] = lo[i]
            elif j == i:
                L[i, j] = di[i]
            elif j == i + 1:
                L[i, j] = up[i]
    cap = np.linalg.solve(L[:3].T, -L[3] * w[3])
    w[:3] = cap
    w[-3:] = cap[::-1]
    return w


def _apply(stencil, f):
    lo, di, up = stencil
    out = di * f
    out[1:] += lo[1:] * f[:-1]
    out[:-1] += up[:-1] * f[1:]
    return out


@dataclass
class ConformalSphereMetric:
    """Axisymmetric conformal factor ``u`` on a uniform polar grid."""

    phi: np.ndarray
    u: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.phi.shape != self.u.shape:
            raise ValueError("grid and conformal factor differ in shape")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("conformal factor must be finite")
        self._stencil = _stencil(self.phi)
        self._weights = _quadrature(self.phi, self._stencil)

    @classmethod
    def round(cls, rho=1.0, n=512):
        phi = polar_grid(n)
        return cls(phi, np.full(n, math.log(rho)), meta={"kind": "round", "rho": rho})

    @property
    def h(self):
        return self.phi[1] - self.phi[0]

    @property
    def v(self):
        return np.exp(2 * self.u)

    @property
    def weights(self):
        """Quadrature weights of the round area element (per unit azimuth)."""
        return self._weights

    def laplacian(self, f):
        return _apply(self._stencil, np.asarray(f, dtype=float))

    def gauss_curvature(self):
        return np.exp(-2 * self.u) * (1.0 - self.laplacian(self.u))

    def area(self):
        return 2 * math.pi * float(np.sum(self.weights * self.v))

    def total_curvature(self):
        return 2 * math.pi * float(np.sum(self.weights * self.v * self.gauss_curvature()))

    def meridian_distance(self, i, j):
        """Length of the meridian between nodes ``i`` and ``j``."""
        s = self.arclength()
        return float(abs(s[j] - s[i]))

    def arclength(self):
        """Meridian arclength from the south pole at every node."""
        return integrate.cumulative_trapezoid(np.exp(self.u), self.phi, initial=0.0)

    def copy(self):
        return ConformalSphereMetric(self.phi.copy(), self.u.copy(), self.t, dict(self.meta))


# --------------------------------------------------------------------------- initial data


def _log_radius_of_x(theta, eps, radius, x, collar):
    """``log r`` along the cap as a function of the cylinder coordinate ``x <= 0``."""
    k = cone_slope(theta)
    beta = 1.0 / math.sqrt(1.0 + k * k)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    x_eps = math.log(eps / radius) / beta if eps < radius else 0.0
    cone = x >= x_eps
    out[cone] = math.log(radius) + beta * x[cone]
    rest = ~cone
    if np.any(rest):
        order = np.argsort(-x[rest])

        def rhs(_, rho):
            slope = k * float(collar(np.exp(rho[0]) / eps, 1))
            return [1.0 / math.sqrt(1.0 + slope * slope)]

        start = math.log(min(eps, radius))
        targets = x[rest][order]
        sol = integrate.solve_ivp(
            rhs, (x_eps, targets[-1]), [start], t_eval=targets, rtol=1e-12, atol=1e-13, method="DOP853"
        )
        if not sol.success:
            raise FlowError(f"isothermal quadrature failed on [{targets[-1]}, {x_eps}]: {sol.message}")
        vals = np.empty(rest.sum())
        vals[order] = sol.y[0]
        out[rest] = vals
    return out


def init_from_cap(theta, eps, n=512, radius=None, collar=DEFAULT_COLLAR, smooth_seam=True):
    """Doubled smoothed cone cap ``z = k phi_eps(r)``, ``r <= radius``, in conformal gauge.

    Isothermal coordinates of a surface of revolution: ``dx = d(sigma) / r``
    maps the cap onto a half cylinder, then ``tan(phi/2) = e^x`` onto the
    southern hemisphere.  The north half is the mirror image; the crease
    along the seam is rounded over two grid spacings with the collar profile.
    """
    if not 0 < theta < 2 * math.pi:
        raise ValueError("cone angle must lie in (0, 2 pi)")
    if 2 * math.pi - theta < THETA_GAP_MIN:
        raise ValueError(f"cone angle within {THETA_GAP_MIN} of 2 pi: the doubled cap is nearly flat")
    if not eps > 0:
        raise ValueError("collar scale must be positive")
    radius = 2 * eps if radius is None else float(radius)
    if not radius > eps:
        raise ValueError("cap radius must exceed the collar scale")
    k = cone_slope(theta)
    beta = 1.0 / math.sqrt(1.0 + k * k)
    phi = polar_grid(n)
    h = phi[1] - phi[0]
    south = np.arange(1, (n + 1) // 2)
    x = np.log(np.tan(phi[south] / 2))
    # deep point to read off the pole value: log r - x converges there
    x_deep = x[0] - 12.0
    log_r = _log_radius_of_x(theta, eps, radius, np.concatenate([x, [x_deep]]), collar)
    # u = w + log cosh x with w = log r; the seam is a concave kink of w
    w = np.empty(n)
    w[south] = log_r[:-1]
    mirror = n - 1 - np.arange(n)
    north = phi > math.pi / 2 + 1e-15
    w[north] = w[mirror[north]]
    if n % 2 == 1:
        w[n // 2] = math.log(radius)
    inner = np.arange(1, n - 1)
    xs = np.log(np.tan(phi[inner] / 2))
    if smooth_seam:
        # round the kink with the collar profile in x; w stays concave
        width = 2 * h
        near = np.abs(xs) < width
        w[inner[near]] = math.log(radius) - beta * width * collar(xs[near] / width, 0)
    u = np.empty(n)
    u[inner] = w[inner] + np.log(np.cosh(xs))
    u[0] = u[-1] = log_r[-1] - x_deep - math.log(2.0)
    k = cone_slope(theta)
    meta = {
        "kind": "doubled-cap",
        "theta": theta,
        "eps": eps,
        "radius": radius,
        "slope": k,
        "tip_curvature": (1.5 * k / eps) ** 2,
        "seam_width": 2 * h if smooth_seam else 0.0,
    }
    return ConformalSphereMetric(phi, u, 0.0, meta)


def cap_region(metric):
    """Mask of nodes with ``r < eps`` in the south and north caps."""
    eps, radius, k = metric.meta["eps"], metric.meta["radius"], metric.meta["slope"]
    beta = 1.0 / math.sqrt(1.0 + k * k)
    x_eps = math.log(eps / radius) / beta
    phi = metric.phi
    dist = np.minimum(phi, math.pi - phi)
    return dist < 2 * math.atan(math.exp(x_eps))


# --------------------------------------------------------------------------- stepping


def _band(stencil, scale):
    lo, di, up = stencil
    ab = np.zeros((3, len(di)))
    ab[0, 1:] = up[:-1] * scale[1:]
    ab[1] = di * scale
    ab[2, :-1] = lo[1:] * scale[:-1]
    return ab


def _implicit_v(metric, dt):
    v = metric.v
    ab = -dt * _band(metric._stencil, 1.0 / v)
    ab[1] += 1.0
    rhs = v + dt * metric.laplacian(np.log(v)) - 2 * dt
    return solve_banded((1, 1), ab, rhs)


def _explicit_v(metric, dt):
    v = metric.v
    return v + dt * (metric.laplacian(np.log(v)) - 2.0)


STEPPERS = {"implicit": _implicit_v, "explicit": _explicit_v}


def explicit_dt_cap(metric):
    return 0.2 * metric.h**2 * float(metric.v.min())


def step(metric, dt, stepper="implicit"):
    """Advance by ``dt`` with adaptive halving; returns ``(new_metric, dt_used)``."""
    if dt < 0:
        raise ValueError("time step must be nonnegative")
    if dt == 0:
        return metric.copy(), 0.0
    try:
        advance = STEPPERS[stepper]
    except KeyError:
        raise ValueError(f"unknown stepper {stepper!r}; choose from {sorted(STEPPERS)}") from None
    if stepper == "explicit":
        dt = min(dt, explicit_dt_cap(metric))
    for _ in range(MAX_HALVINGS + 1):
        v = advance(metric, dt)
        if np.all(v > 0):
            u = 0.5 * np.log(v)
            if np.max(np.abs(u - metric.u)) <= MAX_STEP_CHANGE:
                return ConformalSphereMetric(metric.phi, u, metric.t + dt, metric.meta), dt
        dt /= 2
    raise FlowError(f"step rejected after {MAX_HALVINGS} halvings at t = {metric.t}")


def product_pinching(K, eps):
    """K[eps]-pinching of (surface x line): sectional values ``{K, 0, 0}``, scalar ``2K``."""
    if eps < 0:
        raise ValueError("pinching parameter must be nonnegative")
    K = np.asarray(K, dtype=float)
    margin = np.minimum(K, 0.0) + eps * K
    return bool(np.all(margin >= 0))


# --------------------------------------------------------------------------- runs


@dataclass
class FlowRun:
    times: np.ndarray
    areas: np.ndarray
    min_k: np.ndarray
    max_k: np.ndarray
    total_k: np.ndarray
    probe_phi: np.ndarray
    distances: np.ndarray  # (steps, pairs)
    dts: np.ndarray
    holder: float
    stopped: str
    final: ConformalSphereMetric = None

    @property
    def horizon(self):
        return float(self.times[-1])

    def area_slope(self):
        """Least-squares slope of area against time."""
        return float(np.polyfit(self.times, self.areas, 1)[0])

    def gauss_bonnet_drift(self):
        return float(np.max(np.abs(self.total_k - 4 * math.pi)))

    def min_k_monotone(self, tol=1e-6):
        return bool(np.all(np.diff(self.min_k) >= -tol))

    def table(self):
        cols = [self.times, self.areas, self.min_k, self.max_k, self.total_k]
        return np.column_stack(cols + [self.distances[:, j] for j in range(self.distances.shape[1])])

    def columns(self):
        pairs = probe_pairs(len(self.probe_phi))
        return ["t", "area", "min_k", "max_k", "total_k"] + [f"d_{a}_{b}" for a, b in pairs]

    def summary(self):
        return {
            "horizon": self.horizon,
            "steps": int(len(self.times) - 1),
            "stopped": self.stopped,
            "initial_area": float(self.areas[0]),
            "final_area": float(self.areas[-1]),
            "area_slope": self.area_slope(),
            "area_slope_rel_error": abs(self.area_slope() + 8 * math.pi) / (8 * math.pi),
            "min_k_initial": float(self.min_k[0]),
            "min_k_overall": float(self.min_k.min()),
            "min_k_monotone": self.min_k_monotone(),
            "gauss_bonnet_drift": self.gauss_bonnet_drift(),
            "holder_constant": self.holder,
            "probe_phi": self.probe_phi.tolist(),
            "initial_diameter": float(self.distances[0].max()),
        }


def probe_pairs(m):
    return [(a, b) for a in range(m) for b in range(a + 1, m)]


def holder_constant(times, distances, max_samples=200):
    """``max |d_t - d_s| / sqrt|t - s|`` over probe pairs and subsampled time pairs."""
    idx = np.unique(np.linspace(0, len(times) - 1, min(len(times), max_samples)).astype(int))
    t = times[idx]
    d = distances[idx]
    dt = np.sqrt(np.abs(t[:, None] - t[None, :]))
    best = 0.0
    for j in range(d.shape[1]):
        dd = np.abs(d[:, None, j] - d[None, :, j])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dt > 0, dd / dt, 0.0)
        best = max(best, float(ratio.max()))
    return best


def run(initial, horizon, dt=None, stepper="implicit", stop_area_fraction=0.1, probes=5, max_steps=200000):
    """Integrate until ``horizon`` or until the area drops below ``stop_area_fraction`` of its start."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    metric = initial.copy()
    n = len(metric.phi)
    probe_idx = np.unique(np.round(np.linspace(0, n - 1, probes)).astype(int))
    pairs = probe_pairs(len(probe_idx))
    dt_max = horizon / 500 if dt is None else dt
    dt_try = dt_max if dt is not None else min(dt_max, 1e-6)

    ia = probe_idx[[a for a, _ in pairs]]
    ib = probe_idx[[b for _, b in pairs]]

    def monitors(m):
        K = m.gauss_curvature()
        s = m.arclength()
        v = m.v
        area = 2 * math.pi * float(m.weights @ v)
        total = 2 * math.pi * float(m.weights @ (v * K))
        return area, float(K.min()), float(K.max()), total, np.abs(s[ib] - s[ia])

    rows = [monitors(metric)]
    times, dts = [metric.t], []
    a0 = rows[0][0]
    stopped = "horizon"
    while metric.t < horizon - 1e-15:
        if len(dts) >= max_steps:
            stopped = "max-steps"
            break
        h = min(dt_try, horizon - metric.t)
        metric, used = step(metric, h, stepper)
        rows.append(monitors(metric))
        times.append(metric.t)
        dts.append(used)
        # grow after an accepted step
        dt_try = min(dt_max, used * 1.5) if dt is None else dt
        if rows[-1][0] < stop_area_fraction * a0:
            stopped = "area"
            break
    times = np.asarray(times)
    distances = np.asarray([r[4] for r in rows])
    return FlowRun(
        times=times,
        areas=np.asarray([r[0] for r in rows]),
        min_k=np.asarray([r[1] for r in rows]),
        max_k=np.asarray([r[2] for r in rows]),
        total_k=np.asarray([r[3] for r in rows]),
        probe_phi=metric.phi[probe_idx],
        distances=distances,
        dts=np.asarray(dts),
        holder=holder_constant(times, distances),
        stopped=stopped,
        final=metric,
    )
