"""One-dimensional profile functions used by the smoothing patches.

Three families, each evaluated with up to two derivatives on numpy arrays:

* the even convex collar ``phi`` with ``phi(t) = |t|`` for ``|t| >= 1`` and its
  rescaling ``phi_eps(t) = eps * phi(t / eps)``;
* the concave cap ``f`` on ``[0, ell]`` with ``f(t) = t`` near both ends;
* the convex plateau ``psi`` which is constant on ``[0, delta]`` and the
  identity beyond ``2 delta``.

The default pieces are C^2 polynomial blends.  They expose their junction
points so samplers can put grid nodes exactly on them.
"""

from dataclasses import dataclass

import numpy as np

_ORDERS = (0, 1, 2)


def _check_order(order):
    if order not in _ORDERS:
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")


def _smoothstep_integral(s, order, width):
    """Integral of the cubic smoothstep ``3s^2 - 2s^3`` and its derivatives.

    Returns d^order/dx^order of ``width * int_0^s h`` with ``s = x / width``.
    """
    if order == 0:
        return width * (s**3 - 0.5 * s**4)
    if order == 1:
        return 3 * s**2 - 2 * s**3
    return 6 * s * (1 - s) / width


class QuarticCollar:
    """``3/8 + 3/4 t^2 - 1/8 t^4`` on ``[-1, 1]``; the unique even quartic C^2-matching ``|t|``."""

    name = "quartic"
    coefficients = (3 / 8, 3 / 4, -1 / 8)

    def __call__(self, t, order=0):
        _check_order(order)
        t = np.asarray(t, dtype=float)
        x = np.abs(t)
        a, b, c = self.coefficients
        inner = x < 1.0
        if order == 0:
            return np.where(inner, a + b * x**2 + c * x**4, x)
        if order == 1:
            return np.sign(t) * np.where(inner, 2 * b * x + 4 * c * x**3, 1.0)
        return np.where(inner, 2 * b + 12 * c * x**2, 0.0)


class MollifiedCollar:
    """``|t|`` convolved with the standard bump on ``[-1, 1]``.

    C-infinity and exactly ``|t|`` outside ``[-1, 1]``.  With the tail
    integrals ``T0 = int_x^1 eta`` and ``T1 = int_x^1 s eta`` (fixed
    Gauss-Legendre rule) one has ``phi = x + 2 (T1 - x T0)``,
    ``phi' = 1 - 2 T0`` and ``phi'' = 2 eta`` for ``x = |t|``; the tail form
    keeps ``phi >= |t|`` and ``|phi'| <= 1`` free of cancellation.
    """

    name = "mollified"

    def __init__(self, nodes=64):
        self.nodes, self.weights = np.polynomial.legendre.leggauss(nodes)
        self.norm = 1.0
        self.norm = 2.0 * float(self._tails(np.array([0.0]))[0][0])

    def _bump(self, s):
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        return out / self.norm

    def _tails(self, x):
        # map Gauss nodes onto [x, 1] for each x
        half = (1.0 - x[:, None]) / 2.0
        s = x[:, None] + half * (self.nodes[None, :] + 1.0)
        eta = self._bump(s)
        T0 = np.sum(self.weights * eta, axis=1) * half[:, 0]
        T1 = np.sum(self.weights * s * eta, axis=1) * half[:, 0]
        return T0, T1

    def __call__(self, t, order=0):
        _check_order(order)
        t = np.asarray(t, dtype=float)
        x = np.abs(t).ravel()
        inner = x < 1.0
        out = np.empty_like(x)
        if order == 2:
            out[inner] = 2.0 * self._bump(x[inner])
            out[~inner] = 0.0
            return out.reshape(t.shape)
        T0, T1 = self._tails(x[inner])
        if order == 0:
            out[inner] = x[inner] + 2 * np.maximum(T1 - x[inner] * T0, 0.0)
            out[~inner] = x[~inner]
            return out.reshape(t.shape)
        out[inner] = 1.0 - 2 * T0
        out[~inner] = 1.0
        return np.sign(t) * out.reshape(t.shape)


COLLARS = {"quartic": QuarticCollar, "mollified": MollifiedCollar}


def make_collar(name="quartic"):
    try:
        return COLLARS[name]()
    except KeyError:
        raise ValueError(f"unknown collar profile {name!r}; choose from {sorted(COLLARS)}") from None


DEFAULT_COLLAR = QuarticCollar()


def eval_collar(eps, t, order=0, profile=DEFAULT_COLLAR):
    """``phi_eps = eps * phi(t / eps)`` or one of its first two derivatives."""
    if not eps > 0:
        raise ValueError(f"collar scale must be positive, got {eps!r}")
    u = np.asarray(t, dtype=float) / eps
    value = profile(u, order)
    if order == 0:
        return eps * value
    if order == 1:
        return value
    return value / eps


def collar_junctions(eps):
    return (-eps, eps)


@dataclass(frozen=True)
class CapFunction:
    """Concave cap on ``[0, ell]``.

    Identity on ``[0, a]``, a quartic blend of width ``w`` down to slope 0,
    a flat plateau of height ``a + w/2``, then the mirror image.
    """

    ell: float
    a: float = None
    w: float = None

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError(f"interval length must be positive, got {self.ell!r}")
        a = self.ell / 5 if self.a is None else float(self.a)
        w = a if self.w is None else float(self.w)
        if not 0 < a < self.ell / 2:
            raise ValueError(f"collar width must lie in (0, ell/2), got {a!r}")
        if not 0 < w <= self.ell / 2 - a:
            raise ValueError(f"blend width must lie in (0, ell/2 - a], got {w!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "w", w)

    @property
    def plateau(self):
        """Maximum value ``m`` of the cap."""
        return self.a + self.w / 2

    @property
    def junctions(self):
        b = self.a + self.w
        return (self.a, b, self.ell - b, self.ell - self.a)

    def __call__(self, t, order=0):
        _check_order(order)
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > self.ell)):
            raise ValueError(f"cap argument outside [0, {self.ell}]")
        mirrored = t > self.ell / 2
        x = np.where(mirrored, self.ell - t, t)
        a, w = self.a, self.w
        s = np.clip((x - a) / w, 0.0, 1.0)
        if order == 0:
            val = np.where(x <= a, x, a + w * s - _smoothstep_integral(s, 0, w))
        elif order == 1:
            val = np.where(x <= a, 1.0, 1.0 - _smoothstep_integral(s, 1, w))
            val = np.where(mirrored, -val, val)
        else:
            val = np.where(x <= a, 0.0, -_smoothstep_integral(s, 2, w))
        return val


def eval_cap(ell, a, t, order=0, w=None):
    return CapFunction(ell, a, w)(t, order)


@dataclass(frozen=True)
class PlateauFunction:
    """Convex ``psi`` with ``psi = 3 delta/2`` on ``[0, delta]`` and ``psi(s) = s`` past ``2 delta``."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"plateau width must be positive, got {self.delta!r}")

    @property
    def junctions(self):
        return (self.delta, 2 * self.delta)

    @property
    def floor(self):
        return 1.5 * self.delta

    def __call__(self, s, order=0):
        _check_order(order)
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("plateau argument must be nonnegative")
        d = self.delta
        x = np.clip((s - d) / d, 0.0, 1.0)
        blend = s < 2 * d
        if order == 0:
            return np.where(blend, self.floor + _smoothstep_integral(x, 0, d), s)
        if order == 1:
            return np.where(blend, _smoothstep_integral(x, 1, d), 1.0)
        return np.where(blend, _smoothstep_integral(x, 2, d), 0.0)


def eval_plateau(delta, s, order=0):
    return PlateauFunction(delta)(s, order)


def dump_table(fn, t):
    """Rows ``(t, value, d1, d2)`` for plotting."""
    t = np.asarray(t, dtype=float)
    return np.column_stack([t, fn(t, 0), fn(t, 1), fn(t, 2)])


def snap(grid, points):
    """Move the nearest node of a sorted grid onto each point inside its range."""
    grid = np.array(grid, dtype=float)
    for p in points:
        if grid[0] <= p <= grid[-1]:
            grid[np.argmin(np.abs(grid - p))] = p
    return np.sort(grid)
