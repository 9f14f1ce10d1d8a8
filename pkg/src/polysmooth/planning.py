"""Choosing smoothing parameters for every stratum of a complex."""

import math
from dataclasses import dataclass, field

import numpy as np

from .complex import Analysis, PolyhedralComplex, analyze
from .curvature import verify_patch_pinching
from .ghdist import choose_eps_for_target, smoothing_gh_bound
from .patches import (
    closed_edge_grid,
    closed_edge_patch,
    open_edge_grid,
    open_edge_patch,
    vertex_grid,
    vertex_model,
    vertex_patch,
)
from .profiles import DEFAULT_COLLAR, CapFunction
from .tolerances import DEFAULT_TOLERANCES

MAX_HALVINGS = 20


class PreconditionError(ValueError):
    """Input violates a precondition (e.g. negative curvature at an edge)."""


class InfeasiblePlanError(ValueError):
    """No admissible collar parameter was found."""


@dataclass
class StratumPlan:
    index: int
    kind: str
    param: float
    gh_bound: float
    pinching: dict
    model: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "index": self.index,
            "kind": self.kind,
            "param": self.param,
            "gh_bound": self.gh_bound,
            "pinching": self.pinching,
            "model": self.model,
            "geometry": self.geometry,
        }


@dataclass
class SmoothingPlan:
    n: int
    eps_pinch: float
    collar: str
    entries: list
    gh_bound: float
    kappa: float
    separation: float
    warnings: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def edge_eps(self):
        return [e.param for e in self.entries if e.kind != "essential-vertex"]

    @property
    def vertex_delta(self):
        return [e.param for e in self.entries if e.kind == "essential-vertex"]

    @property
    def pinched(self):
        return all(e.pinching["pinched"] for e in self.entries)

    @property
    def gh_ok(self):
        return self.gh_bound < 1.0 / self.n

    def to_dict(self):
        return {
            "n": self.n,
            "eps_pinch": self.eps_pinch,
            "collar": self.collar,
            "strata": [e.to_dict() for e in self.entries],
            "gh_bound": self.gh_bound,
            "gh_target": 1.0 / self.n,
            "kappa": self.kappa,
            "separation": self.separation,
            "pinched": self.pinched,
            "gh_ok": self.gh_ok,
            "warnings": list(self.warnings),
            "notes": list(self.notes),
        }


def stratum_patch(stratum, param, collar=DEFAULT_COLLAR, F=None, grid=200, tol=DEFAULT_TOLERANCES):
    """Sample the verification grid of one stratum's patch."""
    if stratum.kind == "open-edge":
        cap = CapFunction(stratum.length)
        r, t = open_edge_grid(param, cap, grid, grid)
        return open_edge_patch(stratum.theta, param, stratum.length, r, t, cap, collar)
    if stratum.kind == "closed-edge":
        return closed_edge_patch(stratum.theta, param, closed_edge_grid(param, grid), collar)
    F = vertex_model(stratum) if F is None else F
    return vertex_patch(F, param, vertex_grid(F, param, n_dir=grid, n_level=max(grid // 4, 10)), tol)


def plan_smoothing(
    source,
    n,
    collar=DEFAULT_COLLAR,
    tol=DEFAULT_TOLERANCES,
    grid=200,
    vertex_models=None,
    fixed_eps=None,
    fixed_delta=None,
):
    """Per-stratum collar parameters for the ``n``-th smoothing.

    The GH budget ``1/(2n)`` is split equally between the edge pass and the
    vertex pass.  Each stratum's parameter is then halved until its patch
    passes the pinching test at ``1/n``.  ``fixed_eps`` / ``fixed_delta``
    replace the chosen edge / vertex parameters and disable the halving.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    analysis = analyze(source, tol) if isinstance(source, PolyhedralComplex) else source
    if not isinstance(analysis, Analysis):
        raise TypeError("plan_smoothing needs a PolyhedralComplex or an Analysis")
    if not analysis.nonnegative:
        raise PreconditionError("complex has an edge with cone angle above 2 pi; no convex smoothing exists")
    eps_pinch = 1.0 / n
    strata = list(analysis.strata)
    user_models = vertex_models
    vertex_models = dict(vertex_models or {})
    for i, s in enumerate(strata):
        if not s.is_edge and i not in vertex_models:
            vertex_models[i] = vertex_model(s)
    sep = analysis.separation
    if strata and not sep > 0:
        raise InfeasiblePlanError("strata are not separated; no disjoint collars exist")

    budget = 1.0 / (2 * n)
    edges = [i for i, s in enumerate(strata) if s.is_edge]
    verts = [i for i, s in enumerate(strata) if not s.is_edge]
    params = {}
    for group in (edges, verts):
        sub = [strata[i] for i in group]
        models = {j: vertex_models[i] for j, i in enumerate(group) if i in vertex_models}
        chosen = choose_eps_for_target(sub, budget / 2, sep, models)
        params.update({group[j]: v for j, v in chosen.items()})
    fixed = set()
    for group, value in ((edges, fixed_eps), (verts, fixed_delta)):
        if value is not None:
            if not value > 0:
                raise ValueError(f"collar parameter must be positive, got {value!r}")
            params.update({i: float(value) for i in group})
            fixed.update(group)

    entries, warnings = [], []
    kappa = math.inf
    for i, s in enumerate(strata):
        F = vertex_models.get(i)
        param = params[i]
        for _ in range(MAX_HALVINGS + 1):
            patch = stratum_patch(s, param, collar, F, grid, tol)
            report = verify_patch_pinching(patch, eps_pinch, tol=tol)
            if report.pinched or i in fixed:
                break
            param /= 2
        else:
            raise InfeasiblePlanError(f"stratum {i} ({s.kind}) fails pinching after {MAX_HALVINGS} halvings")
        if param < params[i]:
            warnings.append(f"stratum {i}: parameter halved to {param!r} to pass pinching")
        kappa = min(kappa, report.min_sectional)
        model = F.describe() if F is not None else {}
        entries.append(
            StratumPlan(
                i, s.kind, param, smoothing_gh_bound(s, param, F=F).value, report.to_dict(), model, s.to_dict()
            )
        )
    notes = []
    if any(not s.is_edge and i not in (user_models or {}) for i, s in enumerate(strata)):
        notes.append("vertex cones use a round surrogate matching the link area")

    edge_bound = max((e.gh_bound for e in entries if e.kind != "essential-vertex"), default=0.0)
    vert_bound = max((e.gh_bound for e in entries if e.kind == "essential-vertex"), default=0.0)
    return SmoothingPlan(
        n=n,
        eps_pinch=eps_pinch,
        collar=getattr(collar, "name", "custom"),
        entries=entries,
        gh_bound=edge_bound + vert_bound,
        kappa=0.0 if math.isinf(kappa) else float(kappa),
        separation=float(sep) if np.isfinite(sep) else None,
        warnings=warnings,
        notes=notes,
    )
