"""Command-line front end: analyze, smooth, verify, gh, flow, dump-profiles, pipeline.

Every command writes a JSON report (``<command>.json``) into ``--out-dir``
and prints a one-line verdict.  Exit codes: 0 pass, 1 check failure,
2 input error, 3 precondition violation.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .complex import Analysis, InvalidComplexError, MeshFormatError, SingularStratum, analyze, complex_from_dict
from .curvature import pinching_margins, random_bivectors, verify_patch_pinching
from .flow2d import FlowError, cap_region, init_from_cap, run
from .ghdist import FiniteMetricSpace, gh_exact_small, gh_lower_bound, smoothing_gh_bound
from .patches import ConvexityError, model_from_dict, open_edge_trend
from .planning import InfeasiblePlanError, PreconditionError, plan_smoothing, stratum_patch
from .profiles import CapFunction, PlateauFunction, dump_table, make_collar
from .tolerances import DEFAULT_TOLERANCES

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3
SCHEMA = "polysmooth-report/1"


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input: str = None
    inputs: list = field(default_factory=list)
    n: int = None
    eps: float = None
    delta: float = None
    theta: float = None
    ell: float = None
    horizon: float = None
    grid: int = None
    stepper: str = "implicit"
    collar: str = "quartic"
    mode: str = "exact"
    stop_area: float = 0.1
    seed: int = 0
    tolerance_overrides: dict = field(default_factory=dict)
    require_nonneg: bool = False
    out_dir: str = "."

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    def tolerances(self):
        try:
            return DEFAULT_TOLERANCES.override(self.tolerance_overrides or {})
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"tolerance overrides: {exc}") from None


# --------------------------------------------------------------------------- io helpers


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps_report(report):
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def read_json(path, what="document"):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def read_matrix(path):
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot parse distance matrix: {exc}") from None
    try:
        return FiniteMetricSpace(data)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_mesh(path):
    doc = read_json(path, "mesh")
    try:
        return complex_from_dict(doc)
    except (MeshFormatError, InvalidComplexError) as exc:
        raise InputError(f"{path}: {exc}") from None


def make_report(cfg, results, verdict, reasons=(), warnings=()):
    return {
        "schema": SCHEMA,
        "tool": {"name": "polysmooth", "version": __version__},
        "command": cfg.command,
        "config": cfg.to_dict(),
        "results": results,
        "verdict": verdict,
        "reasons": list(reasons),
        "warnings": list(warnings),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _require(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) in (None, "", [])]
    if missing:
        raise InputError(f"{cfg.command}: missing required option(s) {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _verdict(ok, warnings):
    if not ok:
        return "fail"
    return "warn" if warnings else "pass"


# --------------------------------------------------------------------------- commands


def cmd_analyze(cfg):
    _require(cfg, "input")
    tol = cfg.tolerances()
    cx = load_mesh(cfg.input)
    res = analyze(cx, tol)
    results = {
        "mesh": {"n_vertices": cx.n_vertices, "n_tets": cx.n_tets, "n_edges": len(cx.edges)},
        "tolerances": tol.as_dict(),
        **res.to_dict(cx),
    }
    reasons = []
    code = EXIT_PASS
    ok = True
    if not res.nonnegative:
        reasons.append(f"edge {res.nonnegative.worst_edge} has cone angle {res.nonnegative.max_theta!r} > 2 pi")
        if cfg.require_nonneg:
            ok, code = False, EXIT_PRECONDITION
    verdict = _verdict(ok, res.warnings or reasons)
    return make_report(cfg, results, verdict, reasons, res.warnings), code


def _load_analysis(cfg, tol):
    doc = read_json(cfg.input, "input")
    if isinstance(doc, dict) and doc.get("command") == "analyze":
        try:
            return Analysis.from_dict(doc["results"])
        except MeshFormatError as exc:
            raise InputError(f"{cfg.input}: {exc}") from None
    try:
        cx = complex_from_dict(doc)
    except (MeshFormatError, InvalidComplexError) as exc:
        raise InputError(f"{cfg.input}: {exc}") from None
    return analyze(cx, tol)


def _plan(cfg, analysis, tol):
    try:
        return plan_smoothing(
            analysis,
            cfg.n,
            make_collar(cfg.collar),
            tol,
            grid=cfg.grid or 200,
            fixed_eps=cfg.eps,
            fixed_delta=cfg.delta,
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, (PreconditionError, InfeasiblePlanError)):
            raise
        raise InputError(str(exc)) from None


def _patch_rows(patch, eps_pinch):
    k = patch.principal3()
    margin = pinching_margins(k, eps_pinch)
    r = patch.params.get("r")
    if r is None:
        r = np.linalg.norm(np.stack([patch.params["x"], patch.params["y"], patch.params["z"]], 1), axis=1)
    t = patch.params.get("t", np.zeros(len(k)))
    return [(patch.kind, eps_pinch, r[i], t[i], k[i, 0], k[i, 1], k[i, 2], margin[i]) for i in range(len(k))]


PATCH_HEADER = ["kind", "eps_pinch", "r", "t", "k1", "k2", "k3", "margin"]


def cmd_smooth(cfg):
    _require(cfg, "input", "n")
    tol = cfg.tolerances()
    analysis = _load_analysis(cfg, tol)
    plan = _plan(cfg, analysis, tol)
    out = Path(cfg.out_dir)
    files = []
    collar = make_collar(cfg.collar)
    for entry, s in zip(plan.entries, analysis.strata):
        F = model_from_dict(entry.model) if entry.model else None
        patch = stratum_patch(s, entry.param, collar, F, cfg.grid or 200, tol)
        name = f"patch_{entry.index:03d}_{entry.kind}.csv"
        write_csv(out / name, PATCH_HEADER, _patch_rows(patch, plan.eps_pinch))
        files.append(name)
    results = {"plan": plan.to_dict(), "patch_files": files}
    (out / "plan.json").write_text(dumps_report(plan.to_dict()))
    ok = plan.pinched and plan.gh_ok
    reasons = [] if ok else ["plan does not meet the pinching or GH target"]
    return make_report(cfg, results, _verdict(ok, plan.warnings), reasons, plan.warnings), (
        EXIT_PASS if ok else EXIT_FAIL
    )


def _plan_doc(cfg):
    doc = read_json(cfg.input, "plan")
    if isinstance(doc, dict) and "results" in doc and "plan" in doc["results"]:
        doc = doc["results"]["plan"]
    if not isinstance(doc, dict) or "strata" not in doc or "n" not in doc:
        raise InputError(f"{cfg.input}: not a smoothing plan (needs 'n' and 'strata')")
    return doc


def _verify_csv(cfg, tol):
    try:
        with open(cfg.input, newline="") as fh:
            rows = list(csv.DictReader(fh))
        k = np.array([[float(r["k1"]), float(r["k2"]), float(r["k3"])] for r in rows])
        eps_pinch = 1.0 / cfg.n if cfg.n else float(rows[0]["eps_pinch"])
    except (OSError, KeyError, ValueError, IndexError) as exc:
        raise InputError(f"{cfg.input}: cannot read patch samples: {exc}") from None
    rep = verify_patch_pinching(k, eps_pinch, tol=tol)
    ok = rep.pinched
    results = {"eps_pinch": eps_pinch, "checks": [rep.to_dict()]}
    reasons = [] if ok else ["pinching margin below -tol_curv"]
    return make_report(cfg, results, _verdict(ok, []), reasons), EXIT_PASS if ok else EXIT_FAIL


def cmd_verify(cfg):
    """Recompute every patch of a plan and re-run the pinching test, with a random-direction cross-check.

    A patch CSV (as written by ``smooth``) is re-checked from its curvature columns.
    """
    _require(cfg, "input")
    tol = cfg.tolerances()
    if str(cfg.input).endswith(".csv"):
        return _verify_csv(cfg, tol)
    doc = _plan_doc(cfg)
    n = int(cfg.n or doc["n"])
    eps_pinch = 1.0 / n
    collar = make_collar(doc.get("collar", cfg.collar))
    sigmas = random_bivectors(64, cfg.seed)
    checks, ok = [], True
    for entry in doc["strata"]:
        try:
            s = SingularStratum.from_dict(entry["geometry"])
            F = model_from_dict(entry["model"]) if entry.get("model") else None
            patch = stratum_patch(s, float(entry["param"]), collar, F, cfg.grid or 200, tol)
        except ConvexityError as exc:
            checks.append({"index": entry.get("index"), "convexity_error": str(exc)})
            ok = False
            continue
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{cfg.input}: bad stratum entry {entry.get('index')}: {exc}") from None
        rep = verify_patch_pinching(patch, eps_pinch, tol=tol)
        # sampled sectional curvatures never undercut the eigenvalue minimum
        k = patch.principal3()[rep.argmin]
        diag = np.array([k[1] * k[2], k[0] * k[2], k[0] * k[1]])
        sampled = float(((sigmas**2) @ diag).min())
        agrees = sampled >= min(diag) - 1e-12 * max(1.0, float(np.abs(diag).max()))
        ok = ok and rep.pinched and agrees
        checks.append({"index": entry["index"], "kind": entry["kind"], **rep.to_dict(), "sampled_min": sampled})
    trends = {}
    for entry in doc["strata"]:
        geo = entry["geometry"]
        if entry["kind"] != "open-edge":
            continue
        key = f"theta={geo['theta']:.9f},ell={geo['length']:.9f}"
        if key not in trends:
            trends[key] = open_edge_trend(geo["theta"], geo["length"], float(entry["param"]), 4, cfg.grid or 200, collar)
    results = {"n": n, "eps_pinch": eps_pinch, "checks": checks, "open_edge_trends": trends}
    reasons = [] if ok else ["pinching margin below -tol_curv on some patch"]
    return make_report(cfg, results, _verdict(ok, []), reasons), EXIT_PASS if ok else EXIT_FAIL


def cmd_gh(cfg):
    if cfg.mode == "plan":
        _require(cfg, "input")
        doc = _plan_doc(cfg)
        bounds = []
        for entry in doc["strata"]:
            s = SingularStratum.from_dict(entry["geometry"])
            F = model_from_dict(entry["model"]) if entry.get("model") else None
            bounds.append({"index": entry["index"], **smoothing_gh_bound(s, float(entry["param"]), F=F).to_dict()})
        edge = max((b["value"] for b, e in zip(bounds, doc["strata"]) if e["kind"] != "essential-vertex"), default=0.0)
        vert = max((b["value"] for b, e in zip(bounds, doc["strata"]) if e["kind"] == "essential-vertex"), default=0.0)
        total = edge + vert
        target = 1.0 / int(doc["n"])
        ok = total < target
        results = {"bounds": bounds, "total": total, "target": target}
        return make_report(cfg, results, _verdict(ok, []), [] if ok else ["GH bound exceeds 1/n"]), (
            EXIT_PASS if ok else EXIT_FAIL
        )
    if len(cfg.inputs) != 2:
        raise InputError("gh: exact/lower modes need exactly two distance-matrix CSV files")
    X, Y = (read_matrix(p) for p in cfg.inputs)
    lower = gh_lower_bound(X, Y)
    results = {"lower": lower.to_dict()}
    if cfg.mode == "exact":
        try:
            results["exact"] = gh_exact_small(X, Y).to_dict()
        except ValueError as exc:
            raise InputError(str(exc)) from None
    return make_report(cfg, results, "pass"), EXIT_PASS


def cmd_flow(cfg):
    _require(cfg, "theta", "eps")
    horizon = 1.0 if cfg.horizon is None else cfg.horizon
    try:
        init = init_from_cap(cfg.theta, cfg.eps, cfg.grid or 512, collar=make_collar(cfg.collar))
        fr = run(init, horizon, stepper=cfg.stepper, stop_area_fraction=cfg.stop_area)
    except FlowError as exc:
        return make_report(cfg, {"error": str(exc)}, "fail", [str(exc)]), EXIT_FAIL
    except ValueError as exc:
        raise InputError(str(exc)) from None
    summary = fr.summary()
    K0 = init.gauss_curvature()
    summary["initial_tip_curvature"] = float(K0[cap_region(init)].max())
    summary["tip_curvature_model"] = init.meta["tip_curvature"]
    floor = min(float(K0.min()), 0.0) - 1e-6
    pinched = bool(fr.min_k.min() >= floor)
    summary["product_pinching_preserved"] = pinched
    out = Path(cfg.out_dir)
    write_csv(out / "flow.csv", fr.columns(), fr.table())
    reasons = []
    if not pinched:
        reasons.append("min K dropped below its initial floor")
    if summary["gauss_bonnet_drift"] > 1e-3:
        reasons.append("Gauss-Bonnet drift above 1e-3")
    ok = not reasons
    return make_report(cfg, {"summary": summary, "csv": "flow.csv"}, _verdict(ok, []), reasons), (
        EXIT_PASS if ok else EXIT_FAIL
    )


def cmd_dump_profiles(cfg):
    eps = 1.0 if cfg.eps is None else cfg.eps
    if not eps > 0:
        raise InputError("--eps must be positive")
    collar = make_collar(cfg.collar)
    t = np.linspace(-2.0, 2.0, 401)
    out = Path(cfg.out_dir)
    rows = dump_table(lambda s, order: eps ** (1 - order) * collar(s / eps, order), t)
    write_csv(out / "collar.csv", ["t", "phi", "dphi", "ddphi"], rows)
    files = ["collar.csv"]
    if cfg.ell is not None:
        cap = CapFunction(cfg.ell)
        write_csv(out / "cap.csv", ["t", "f", "df", "ddf"], dump_table(cap, np.linspace(0, cfg.ell, 401)))
        files.append("cap.csv")
    if cfg.delta is not None:
        psi = PlateauFunction(cfg.delta)
        rows = dump_table(psi, np.linspace(0, 3 * cfg.delta, 401))
        write_csv(out / "plateau.csv", ["s", "psi", "dpsi", "ddpsi"], rows)
        files.append("plateau.csv")
    return make_report(cfg, {"files": files, "eps": eps}, "pass"), EXIT_PASS


def cmd_pipeline(cfg):
    _require(cfg, "input", "n")
    tol = cfg.tolerances()
    analysis = _load_analysis(cfg, tol)
    stage = "plan"
    try:
        plan = _plan(cfg, analysis, tol)
    except PreconditionError as exc:
        return make_report(cfg, {"stage": stage}, "fail", [f"{stage}: {exc}"]), EXIT_PRECONDITION
    triple = {
        "pinched": plan.pinched,
        "gh_bound": plan.gh_bound,
        "gh_below_1_over_n": plan.gh_ok,
        "kappa": plan.kappa,
    }
    results = {"analysis": analysis.to_dict(), "plan": plan.to_dict(), "result": triple}
    reasons = []
    if not plan.pinched:
        reasons.append("verify: pinching failed")
    if not plan.gh_ok:
        reasons.append("gh: bound not below 1/n")
    ok = not reasons
    return make_report(cfg, results, _verdict(ok, plan.warnings), reasons, plan.warnings), (
        EXIT_PASS if ok else EXIT_FAIL
    )


COMMANDS = {
    "analyze": cmd_analyze,
    "smooth": cmd_smooth,
    "verify": cmd_verify,
    "gh": cmd_gh,
    "flow": cmd_flow,
    "dump-profiles": cmd_dump_profiles,
    "pipeline": cmd_pipeline,
}


# --------------------------------------------------------------------------- argument parsing


def _angle(text):
    """Float, or an expression in ``pi`` such as ``pi``, ``3pi/2`` or ``pi/2``."""
    s = text.strip().lower().replace(" ", "")
    if "pi" not in s:
        return float(s)
    num, _, den = s.partition("/")
    coef = num.replace("*", "").replace("pi", "")
    value = (float(coef) if coef not in ("", "+") else 1.0) * math.pi
    return value / float(den) if den else value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of RunConfig fields; explicit flags override it")
    common.add_argument("--input")
    common.add_argument("--n", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--theta", type=_angle)
    common.add_argument("--ell", type=float)
    common.add_argument("--horizon", type=float)
    common.add_argument("--grid", type=int)
    common.add_argument("--stepper", choices=["implicit", "explicit"])
    common.add_argument("--collar", choices=["quartic", "mollified"])
    common.add_argument("--stop-area", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--tolerance-overrides", help="JSON object or path to one, e.g. '{\"curv\": 1e-9}'")
    common.add_argument("--require-nonneg", action="store_true", default=None)
    common.add_argument("--out-dir")

    parser = argparse.ArgumentParser(prog="polysmooth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polysmooth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "gh":
            mode = p.add_mutually_exclusive_group()
            mode.add_argument("--exact", nargs=2, metavar="CSV")
            mode.add_argument("--lower", nargs=2, metavar="CSV")
            mode.add_argument("--plan", metavar="JSON")
    return parser


def _overrides(text):
    if text is None:
        return None
    path = Path(text)
    if not text.lstrip().startswith("{") and path.exists():
        text = path.read_text()
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--tolerance-overrides: malformed JSON ({exc.msg})") from None
    if not isinstance(value, dict):
        raise InputError("--tolerance-overrides must be a JSON object")
    return value


def config_from_args(args):
    base = {}
    if args.config:
        base = read_json(args.config, "config")
        if not isinstance(base, dict):
            raise InputError("config file must hold a JSON object")
        base.pop("command", None)
    flags = {
        "input": args.input,
        "n": args.n,
        "eps": args.eps,
        "delta": args.delta,
        "theta": args.theta,
        "ell": args.ell,
        "horizon": args.horizon,
        "grid": args.grid,
        "stepper": args.stepper,
        "collar": args.collar,
        "stop_area": args.stop_area,
        "seed": args.seed,
        "tolerance_overrides": _overrides(args.tolerance_overrides),
        "require_nonneg": args.require_nonneg,
        "out_dir": args.out_dir,
    }
    if args.command == "gh":
        if args.exact:
            flags.update(mode="exact", inputs=list(args.exact))
        elif args.lower:
            flags.update(mode="lower", inputs=list(args.lower))
        elif args.plan:
            flags.update(mode="plan", input=args.plan)
    base.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig.from_dict({"command": args.command, **base})


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        cfg = config_from_args(args)
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        report, code = COMMANDS[cfg.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, InfeasiblePlanError) as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    path = Path(cfg.out_dir) / f"{cfg.command}.json"
    path.write_text(dumps_report(report))
    print(f"{cfg.command}: {report['verdict']} ({path})")
    return code


if __name__ == "__main__":
    sys.exit(main())
