"""Curvature operators of 3-dimensional tangent spaces.

A curvature tensor in dimension 3 is a symmetric operator on bivectors,
stored as a 3x3 matrix in the basis ``e2^e3, e3^e1, e1^e2``.  Every bivector
in dimension 3 is simple, so the minimum sectional curvature equals the
minimum eigenvalue of the operator.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .tolerances import DEFAULT_TOLERANCES


@dataclass(frozen=True)
class CurvatureTensor3:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"curvature operator must be 3x3, got shape {m.shape}")
        if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise ValueError("curvature operator must be symmetric")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def diag(cls, a, b, c):
        return cls(np.diag([a, b, c]))


def _as_matrix(R):
    return R.matrix if isinstance(R, CurvatureTensor3) else np.asarray(R, dtype=float)


def sectional(R, sigma):
    """Sectional curvature ``<R s, s> / <s, s>`` along the bivector ``sigma``."""
    m = _as_matrix(R)
    s = np.asarray(sigma, dtype=float)
    norm = s @ s
    if norm == 0:
        raise ValueError("sectional direction must be a nonzero bivector")
    return float(s @ m @ s / norm)


def scalar(R):
    """Scalar curvature; twice the trace of the curvature operator."""
    return 2.0 * float(np.trace(_as_matrix(R)))


def eigvalsh3(m):
    """Eigenvalues of symmetric 3x3 matrices in closed form, ascending.

    Works on a single matrix or a stack ``(..., 3, 3)``.  The trigonometric
    solution of the characteristic cubic is only accurate to ``sqrt(eps)``
    near a repeated root, so it is used to pick out the best separated
    eigenvalue; that one is refined by a Rayleigh quotient on its
    cross-product eigenvector and the other two come from the 2x2 block on
    the orthogonal complement.
    """
    m = np.asarray(m, dtype=float)
    # work at unit scale so that tiny or huge entries neither underflow nor overflow
    scale = np.max(np.abs(m), axis=(-2, -1))
    scale = np.where(scale > 0, scale, 1.0)
    return scale[..., None] * _eigvalsh3_unit(m / scale[..., None, None])


def _trig_eigvalsh3(m):
    p1 = m[..., 0, 1] ** 2 + m[..., 0, 2] ** 2 + m[..., 1, 2] ** 2
    q = np.trace(m, axis1=-2, axis2=-1) / 3.0
    d = np.stack([m[..., 0, 0], m[..., 1, 1], m[..., 2, 2]], axis=-1) - q[..., None]
    p2 = np.sum(d**2, axis=-1) + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    safe = np.where(p > 0, p, 1.0)
    B = (m - q[..., None, None] * np.eye(3)) / safe[..., None, None]
    with np.errstate(all="ignore"):
        r = np.linalg.det(B) / 2.0
    # only a rough guide: the refinement below restores full accuracy
    r = np.clip(np.where(np.isfinite(r), r, 0.0), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2 * p * np.cos(phi)
    lo = q + 2 * p * np.cos(phi + 2 * np.pi / 3)
    mid = 3 * q - hi - lo
    return lo, mid, hi, p1


def _eigvalsh3_unit(m):
    lo, mid, hi, p1 = _trig_eigvalsh3(m)
    iso_hi = (mid - lo) <= (hi - mid)
    lam = np.where(iso_hi, hi, lo)
    A = m - lam[..., None, None] * np.eye(3)
    rows = A[..., 0, :], A[..., 1, :], A[..., 2, :]
    cands = np.stack([np.cross(rows[0], rows[1]), np.cross(rows[0], rows[2]), np.cross(rows[1], rows[2])], axis=-2)
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmax(norms, axis=-1)
    v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    vn = np.take_along_axis(norms, best[..., None], axis=-1)[..., 0]
    ok = vn > 0
    v = v / np.where(ok, vn, 1.0)[..., None]
    # orthonormal complement of v
    axis = np.argmin(np.abs(v), axis=-1)
    e = np.eye(3)[axis]
    u1 = np.cross(v, e)
    u1 /= np.maximum(np.linalg.norm(u1, axis=-1), 1e-300)[..., None]
    u2 = np.cross(v, u1)
    mv = np.einsum("...ij,...j->...i", m, v)
    mu1 = np.einsum("...ij,...j->...i", m, u1)
    mu2 = np.einsum("...ij,...j->...i", m, u2)
    iso = np.sum(v * mv, axis=-1)
    a = np.sum(u1 * mu1, axis=-1)
    dd = np.sum(u2 * mu2, axis=-1)
    b = np.sum(u1 * mu2, axis=-1)
    mean = 0.5 * (a + dd)
    rad = np.hypot(0.5 * (a - dd), b)
    refined = np.sort(np.stack([iso, mean - rad, mean + rad], axis=-1), axis=-1)
    rough = np.stack([lo, mid, hi], axis=-1)
    out = np.where(ok[..., None], refined, rough)
    # diagonal input: read off directly
    diag = np.sort(np.stack([m[..., 0, 0], m[..., 1, 1], m[..., 2, 2]], axis=-1), axis=-1)
    return np.where((p1 == 0)[..., None], diag, out)


def jacobi_eigvalsh(m, tol=1e-13, max_sweeps=50):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(m, dtype=float)
    n = a.shape[0]
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def lambda_min(R):
    return float(eigvalsh3(_as_matrix(R))[0])


def pinching_margin(R, eps):
    """``min Sec + (eps/2) scal``; the tensor is K[eps]-pinched iff this is >= 0."""
    if eps < 0:
        raise ValueError(f"pinching parameter must be nonnegative, got {eps!r}")
    m = _as_matrix(R)
    return float(eigvalsh3(m)[0] + 0.5 * eps * 2.0 * np.trace(m))


def gauss_tensor(k1, k2, k3):
    """Curvature operator of a hypersurface in flat 4-space with principal curvatures ``k``.

    In the principal frame ``Sec(e_i ^ e_j) = k_i k_j``.
    """
    return CurvatureTensor3.diag(k2 * k3, k1 * k3, k1 * k2)


def gauss_sectionals(k):
    """Diagonal ``(k2 k3, k1 k3, k1 k2)`` of the Gauss tensor for stacked principal curvatures."""
    k = np.asarray(k, dtype=float)
    return np.stack([k[..., 1] * k[..., 2], k[..., 0] * k[..., 2], k[..., 0] * k[..., 1]], axis=-1)


@dataclass(frozen=True)
class CosectionalResult:
    ok: bool
    #: (lambda_i, sigma_i) with lambda_i >= 0 and sigma_i unit bivectors
    terms: tuple = ()
    min_eigenvalue: float = math.nan

    def __bool__(self):
        return self.ok

    def reconstruct(self):
        out = np.zeros((3, 3))
        for lam, sigma in self.terms:
            out += lam * np.outer(sigma, sigma)
        return out


def cosectional_decomposition(R, tol=1e-12):
    """Write ``R`` as a nonnegative combination of squares of simple bivectors.

    In dimension 3 this exists exactly when the operator is positive
    semidefinite; the eigen-decomposition then serves as the witness.
    Failure carries the offending eigenvalue.
    """
    m = _as_matrix(R)
    vals, vecs = np.linalg.eigh(m)
    if vals[0] < -tol:
        return CosectionalResult(False, (), float(vals[0]))
    terms = tuple(
        (float(max(lam, 0.0)), vecs[:, i].copy()) for i, lam in enumerate(vals) if lam > 0
    )
    return CosectionalResult(True, terms, float(vals[0]))


def random_bivectors(n, seed=0):
    """Uniform unit bivectors (points of the unit sphere of Lambda^2)."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


@dataclass
class PinchingReport:
    eps_pinch: float
    min_margin: float
    min_sectional: float
    argmin: int
    location: dict = field(default_factory=dict)
    n_samples: int = 0
    kappa_target: float = None
    tol: float = DEFAULT_TOLERANCES.curv

    @property
    def pinched(self):
        return self.min_margin >= -self.tol

    @property
    def passed(self):
        if not self.pinched:
            return False
        return self.kappa_target is None or self.min_sectional >= self.kappa_target - self.tol

    def to_dict(self):
        return {
            "eps_pinch": self.eps_pinch,
            "min_margin": self.min_margin,
            "min_sectional": self.min_sectional,
            "argmin": self.argmin,
            "location": self.location,
            "n_samples": self.n_samples,
            "kappa_target": self.kappa_target,
            "pinched": self.pinched,
            "passed": self.passed,
        }


def pinching_margins(k, eps):
    """Vectorised margin ``min_{i<j} k_i k_j + eps (k1 k2 + k1 k3 + k2 k3)``."""
    sec = gauss_sectionals(k)
    return sec.min(axis=-1) + eps * sec.sum(axis=-1)


def verify_patch_pinching(samples, eps_pinch, kappa_target=None, tol=DEFAULT_TOLERANCES):
    """Apply the Gauss equation and the pinching test at every patch sample.

    ``samples`` is a :class:`~polysmooth.patches.PatchSample` or an array of
    principal curvatures ``(N, 3)``; 2D patches are padded with a zero
    curvature (their product with a line).
    """
    if eps_pinch < 0:
        raise ValueError(f"pinching parameter must be nonnegative, got {eps_pinch!r}")
    params = {}
    if hasattr(samples, "principal3"):
        k = samples.principal3()
        params = samples.params
    else:
        k = np.asarray(samples, dtype=float)
        if k.shape[-1] == 2:
            k = np.sort(np.concatenate([k, np.zeros(k.shape[:-1] + (1,))], axis=-1), axis=-1)
    sec = gauss_sectionals(k)
    margins = sec.min(axis=1) + eps_pinch * sec.sum(axis=1)
    i = int(np.argmin(margins))
    return PinchingReport(
        eps_pinch=float(eps_pinch),
        min_margin=float(margins[i]),
        min_sectional=float(sec.min()),
        argmin=i,
        location={key: float(np.asarray(v)[i]) for key, v in params.items()},
        n_samples=len(k),
        kappa_target=kappa_target,
        tol=tol.curv,
    )
