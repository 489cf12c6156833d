"""Command-line front end: scenario configs, verification recipes, exporters.

Scenarios are described by JSON config files. Artifacts are OBJ meshes (with
constraint tags in comment records), RFC-4180 CSV fields, and JSON reports.
Exit codes: 0 success / all criteria pass, 1 criterion failure, 2 error. No
partial artifacts are written on exit 2: every scenario computes first and
writes at the end.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    cylinder_cap,
    trihedral_cap,
    wedge_cap,
    wedge_vertex_tangents,
    wente_halfcylinder,
    SphericalCap,
    edge_vertices,
)
from .diagnostics import diagnostics_report, fit_sphere, SphereFit
from .errors import DomainError, IncompatibleDataError, NoSolutionError
from .geometry import (
    QTag,
    TrihedralConfig,
    WedgeConfig,
    classify_data,
    classify_grid,
    eq_numerator,
    vertex_angle,
    TAG_CODES,
)
from .graphpde import RectangleProblem, compatibility_h, exact_square_cap, solve_rectangle
from .meshes import seed_mesh, seed_planar_trihedral, perturb, write_obj
from .evolver import evolve, volume

__all__ = ["main", "run", "verify_suite"]

_SUITES = ("theorem1-wedge", "theorem3-trihedral", "theorem4-cylinder",
           "counterexample-v4", "wente", "formulas")


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    return cfg


def _require(cfg: dict, key, types, where):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key '{key}'")
    if not isinstance(cfg[key], types):
        raise ConfigError(f"{where}: key '{key}' has the wrong type")
    return cfg[key]


def _angles(cfg, key, n, where):
    vals = _require(cfg, key, list, where)
    if len(vals) != n or not all(isinstance(v, (int, float)) for v in vals):
        raise ConfigError(f"{where}: '{key}' must be a list of {n} numbers")
    if not all(0.0 <= v <= np.pi for v in vals):
        raise ConfigError(f"{where}: angles must lie in [0, pi]")
    return [float(v) for v in vals]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def _support_from_config(cfg, where):
    kind = _require(cfg, "support", str, where)
    if kind == "wedge":
        alpha = float(_require(cfg, "alpha", (int, float), where))
        g1, g2 = _angles(cfg, "gammas", 2, where)
        return WedgeConfig.canonical(alpha, g1, g2)
    if kind == "orthant":
        return TrihedralConfig.orthant(tuple(_angles(cfg, "gammas", 3, where)))
    if kind == "cylinder":
        r = float(cfg.get("inradius", 1.0))
        return TrihedralConfig.regular_cylinder(r, tuple(_angles(cfg, "gammas", 3, where)))
    raise ConfigError(f"{where}: unknown support kind '{kind}'")


# -- scenarios -------------------------------------------------------------


def _run_classify(cfg, out: Path, seed: int, where: str) -> int:
    alpha = float(_require(cfg, "alpha", (int, float), where))
    n = int(cfg.get("grid", 181))
    g = np.linspace(0.0, np.pi, n)
    g1, g2 = np.meshgrid(g, g, indexing="ij")
    codes, numer = classify_grid(alpha, g1, g2)
    names = {v: k.name for k, v in TAG_CODES.items()}
    rows = [(f"{g1[i, j]:.12g}", f"{g2[i, j]:.12g}", names[int(codes[i, j])],
             f"{numer[i, j]:.17g}")
            for i in range(n) for j in range(n)]
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "classification.csv",
               ["gamma1", "gamma2", "class", "numerator"], rows)
    report = {"scenario": "classify", "alpha": alpha, "grid": n, "seed": seed,
              "version": __version__}
    (out / "report.json").write_text(json.dumps(report, indent=2))
    return 0


def _run_cap(cfg, out: Path, seed: int, where: str) -> int:
    config = _support_from_config(cfg, where)
    h = cfg.get("h")
    h = float(h) if h is not None else None
    if isinstance(config, WedgeConfig):
        cap = wedge_cap(config, h if h is not None else 1.0)
    elif config.kind.name == "APEX":
        cap = trihedral_cap(config, h if h is not None else 1.0)
    else:
        cap = cylinder_cap(config, h)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(cap, SphericalCap):
        report = {
            "scenario": "cap", "seed": seed, "version": __version__,
            "kind": "spherical",
            "center": list(map(float, cap.center)),
            "radius": float(cap.radius),
            "h_signed": float(cap.h_signed),
            "degenerate": bool(cap.degenerate),
        }
        is_cyl = isinstance(config, TrihedralConfig) and config.kind.name == "CYLINDER"
        mesh = seed_mesh(config, h=None if is_cyl else (h if h is not None else 1.0),
                         refinement_level=int(cfg.get("refinement", 2)))
        write_obj(mesh, out / "cap.obj")
    else:
        report = {
            "scenario": "cap", "seed": seed, "version": __version__,
            "kind": "planar",
            "normal": list(map(float, cap.normal)),
            "point": list(map(float, cap.point)),
        }
    (out / "report.json").write_text(json.dumps(report, indent=2))
    return 0


def _run_solve_graph(cfg, out: Path, seed: int, where: str) -> int:
    a = float(_require(cfg, "a", (int, float), where))
    b = float(_require(cfg, "b", (int, float), where))
    gammas = tuple(_angles(cfg, "gammas", 4, where))
    grid_n = int(cfg.get("grid_n", 32))
    prob = RectangleProblem(a, b, gammas, grid_n=grid_n)
    field = solve_rectangle(prob)
    pts = field.points()
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "field.csv", ["x", "y", "u"],
               [(f"{x:.17g}", f"{y:.17g}", f"{u:.17g}") for x, y, u in pts])
    fit = fit_sphere(pts)
    report = {
        "scenario": "solve-graph", "seed": seed, "version": __version__,
        "a": a, "b": b, "gammas": list(gammas), "grid_n": grid_n,
        "h": prob.h, "iterations": field.iterations,
        "final_residual": field.final_residual,
        "sphere_fit_relative_rms": (fit.relative_rms
                                    if isinstance(fit, SphereFit) else None),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2))
    return 0


def _run_evolve(cfg, out: Path, seed: int, where: str) -> int:
    config = _support_from_config(cfg, where)
    h = cfg.get("h", 1.0)
    refinement = int(cfg.get("refinement", 2))
    if cfg.get("planar", False):
        mesh = seed_planar_trihedral(config, refinement_level=refinement)
    else:
        hv = None if isinstance(config, TrihedralConfig) and config.kind.name == "CYLINDER" \
            else float(h)
        mesh = seed_mesh(config, h=hv, refinement_level=refinement,
                         target_volume=cfg.get("target_volume"))
    amp = float(cfg.get("perturbation", 0.0))
    if amp > 0.0:
        mesh = perturb(mesh, amp, seed=seed)
    evolved, rep = evolve(mesh,
                          max_iters=int(cfg.get("max_iters", 1000)),
                          grad_tol=float(cfg.get("grad_tol", 1e-6)),
                          fixed_volume=bool(cfg.get("fixed_volume", True)))
    diag = diagnostics_report(evolved)
    out.mkdir(parents=True, exist_ok=True)
    write_obj(evolved, out / "evolved.obj")
    report = {
        "scenario": "evolve", "seed": seed, "version": __version__,
        "iterations": rep.iterations, "converged": rep.converged,
        "final_energy": rep.final_energy,
        "final_gradient_norm": rep.final_gradient_norm,
        "volume": volume(evolved), "volume_error": rep.volume_error,
        "lagrange_h": rep.lagrange_h,
        "diagnostics": json.loads(diag.to_json()),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2))
    return 0


# -- verification suites ---------------------------------------------------


def _outcome(name, passed, measured, threshold, note=""):
    return {"criterion": name, "pass": bool(passed), "measured": measured,
            "threshold": threshold, "note": note}


def _suite_formulas(opts) -> list:
    rng = np.random.default_rng(opts["seed"])
    outcomes = []
    worst = 0
    for alpha in (np.pi / 6, np.pi / 4, np.pi / 3):
        g = np.linspace(0.0, np.pi, 181)
        g1, g2 = np.meshgrid(g, g, indexing="ij")
        codes, numer = classify_grid(alpha, g1, g2, band=0.0)
        s = g1 + g2 - np.pi
        d = g1 - g2
        margin = np.minimum(2 * alpha - np.abs(s), (np.pi - 2 * alpha) - np.abs(d))
        interior = codes == TAG_CODES[QTag.INTERIOR_Q]
        off_band = np.abs(margin) > 1e-6
        bad = np.count_nonzero(off_band & (interior != (numer > 0)))
        worst = max(worst, bad)
    outcomes.append(_outcome("numerator-sign-vs-rectangle", worst == 0,
                             worst, 0, "disagreements outside 1e-6 band"))
    worst_id = 0.0
    worst_lemma = -np.inf
    n_found = 0
    while n_found < 10000:
        alpha = rng.uniform(0.05, np.pi / 2 - 0.05)
        g1 = rng.uniform(0.0, np.pi)
        g2 = rng.uniform(0.0, np.pi)
        if classify_data(alpha, g1, g2).tag is not QTag.INTERIOR_Q:
            continue
        n_found += 1
        va = vertex_angle(alpha, g1, g2)
        worst_id = max(worst_id,
                       abs(va.sin_sq_two_beta - (1 - va.cos_two_beta ** 2)))
    for alpha in np.linspace(0.05, np.pi / 2 - 0.05, 60):
        for g in np.linspace(0.01, np.pi - 0.01, 120):
            if classify_data(alpha, g, g).tag is not QTag.INTERIOR_Q:
                continue
            va = vertex_angle(alpha, g, g)
            worst_lemma = max(worst_lemma, va.two_beta - 2 * alpha)
    outcomes.append(_outcome("angle-identity", worst_id < 1e-12, worst_id, 1e-12))
    outcomes.append(_outcome("equal-angle-bound", worst_lemma <= 1e-12,
                             worst_lemma, 1e-12,
                             "vertex opening bounded by wedge opening"))
    return outcomes


def _suite_wente(opts) -> list:
    a, b = 1.0, 1.0
    sol = wente_halfcylinder(a, b)
    ys = np.linspace(0.05 * b, 0.95 * b, 181)
    resid = np.abs(sol.residual(ys)).max()
    hcomp = compatibility_h(a, b, (np.pi / 2, np.pi / 2, 0.0, 0.0))
    return [
        _outcome("halfcylinder-residual", resid < 1e-10, float(resid), 1e-10),
        _outcome("compatibility-h", hcomp == 1.0 / b, hcomp, 1.0 / b,
                 "flux balance for mixed 0 / right-angle walls"),
    ]


def _suite_counterexample(opts) -> list:
    grid_n = opts.get("grid_n", 96)
    ref = solve_rectangle(RectangleProblem(1.0, 1.0, (np.pi / 3,) * 4, grid_n=grid_n))
    odd = solve_rectangle(RectangleProblem(1.0, 2.0, (1.2,) * 4, grid_n=grid_n))
    fit_ref = fit_sphere(ref.points())
    fit_odd = fit_sphere(odd.points())
    ratio = fit_odd.relative_rms / fit_ref.relative_rms
    return [_outcome("non-sphericity-ratio", ratio >= 20.0, float(ratio), 20.0,
                     "elongated-rectangle solution vs square cap")]


def _evolve_sphere_check(config, h, refinement, seed, max_iters, perturbation=0.01,
                         planar=False):
    if planar:
        mesh = seed_planar_trihedral(config, refinement_level=refinement)
    else:
        mesh = seed_mesh(config, h=h, refinement_level=refinement)
    if perturbation:
        mesh = perturb(mesh, perturbation, seed=seed)
    evolved, rep = evolve(mesh, max_iters=max_iters)
    return evolved, rep


def _suite_theorem1(opts) -> list:
    refinement = opts.get("refinement", 4)
    config = WedgeConfig.canonical(np.pi / 4, 2 * np.pi / 3, 2 * np.pi / 3)
    evolved, _ = _evolve_sphere_check(config, 1.0, refinement, opts["seed"],
                                      opts.get("max_iters", 1100))
    diag = diagnostics_report(evolved)
    two_beta = vertex_angle(np.pi / 4, 2 * np.pi / 3, 2 * np.pi / 3).two_beta
    worst_beta = max(abs(v - two_beta) for v in diag.vertex_angles.values())
    worst_ca = max(diag.contact_angle_max_error.values())
    return [
        _outcome("sphere-fit", diag.sphere_relative_rms < 1e-3,
                 diag.sphere_relative_rms, 1e-3),
        _outcome("mean-curvature-cv", diag.mean_curvature_cv < 1e-2,
                 diag.mean_curvature_cv, 1e-2),
        _outcome("contact-angle", worst_ca < np.radians(1.0),
                 float(worst_ca), float(np.radians(1.0))),
        _outcome("vertex-angle", worst_beta < np.radians(2.0),
                 float(worst_beta), float(np.radians(2.0)),
                 "opening vs closed form arccos(1/3)"),
    ]


def _suite_theorem3(opts) -> list:
    refinement = opts.get("refinement", 3)
    outcomes = []
    flat_cfg = TrihedralConfig.orthant((float(np.arccos(np.sqrt(3.0) / 3.0)),) * 3)
    evolved, _ = _evolve_sphere_check(flat_cfg, None, refinement, opts["seed"],
                                      opts.get("max_iters", 600),
                                      perturbation=0.01, planar=True)
    from .diagnostics import fit_plane
    plane = fit_plane(evolved.vertices)
    diam = float(np.ptp(evolved.vertices, axis=0).max())
    outcomes.append(_outcome("planar-mode", plane.rms < 1e-4 * diam,
                             plane.rms / diam, 1e-4, "flat drop stays flat"))
    round_cfg = TrihedralConfig.orthant((np.pi / 2,) * 3)
    evolved, _ = _evolve_sphere_check(round_cfg, 1.0, refinement, opts["seed"],
                                      opts.get("max_iters", 800))
    diag = diagnostics_report(evolved)
    outcomes.append(_outcome("sphere-fit", diag.sphere_relative_rms < 1e-3,
                             diag.sphere_relative_rms, 1e-3))
    return outcomes


def _suite_theorem4(opts) -> list:
    refinement = opts.get("refinement", 3)
    gam = 1.9
    config = TrihedralConfig.regular_cylinder(1.0, (gam,) * 3)
    cap = cylinder_cap(config)
    worst = 0.0
    for p in config.planes:
        cosm = abs(p.signed_distance(np.asarray(cap.center))) / cap.radius
        worst = max(worst, abs(cosm - abs(np.cos(p.gamma))))
    evolved, _ = _evolve_sphere_check(config, None, refinement, opts["seed"],
                                      opts.get("max_iters", 800))
    diag = diagnostics_report(evolved)
    return [
        _outcome("cap-contact-angles", worst < 1e-12, float(worst), 1e-12),
        _outcome("sphere-fit", diag.sphere_relative_rms < 1e-3,
                 diag.sphere_relative_rms, 1e-3),
    ]


def verify_suite(name: str, seed: int = 0, **opts) -> list:
    """Run a named verification recipe; returns a list of outcome records."""
    if name not in _SUITES:
        raise DomainError(f"unknown suite '{name}'; choose from {_SUITES}")
    runner = {
        "formulas": _suite_formulas,
        "wente": _suite_wente,
        "counterexample-v4": _suite_counterexample,
        "theorem1-wedge": _suite_theorem1,
        "theorem3-trihedral": _suite_theorem3,
        "theorem4-cylinder": _suite_theorem4,
    }[name]
    return runner({"seed": seed, **opts})


def _run_verify(cfg, out: Path, seed: int, where: str) -> int:
    suite = _require(cfg, "suite", str, where)
    if suite not in _SUITES:
        raise ConfigError(f"{where}: unknown suite '{suite}'")
    opts = {k: cfg[k] for k in ("refinement", "grid_n", "max_iters") if k in cfg}
    outcomes = verify_suite(suite, seed=seed, **opts)
    out.mkdir(parents=True, exist_ok=True)
    report = {"scenario": "verify", "suite": suite, "seed": seed,
              "version": __version__, "outcomes": outcomes,
              "pass": all(o["pass"] for o in outcomes)}
    (out / "report.json").write_text(json.dumps(report, indent=2))
    for o in outcomes:
        status = "PASS" if o["pass"] else "FAIL"
        print(f"[{status}] {suite}/{o['criterion']}: measured {o['measured']} "
              f"vs threshold {o['threshold']}")
    return 0 if report["pass"] else 1


_SCENARIOS = {
    "classify": _run_classify,
    "cap": _run_cap,
    "solve-graph": _run_solve_graph,
    "evolve": _run_evolve,
    "verify": _run_verify,
}


def run(config_path, out_dir=None, seed: int = 0, subcommand=None) -> int:
    """Execute one scenario config; returns the process exit code."""
    try:
        cfg = _load_config(config_path)
        kind = _require(cfg, "kind", str, str(config_path))
        if kind not in _SCENARIOS:
            raise ConfigError(f"{config_path}: unrecognized kind '{kind}'")
        if subcommand is not None and kind != subcommand:
            raise ConfigError(
                f"{config_path}: config kind '{kind}' does not match "
                f"subcommand '{subcommand}'")
        out = Path(out_dir) if out_dir is not None else Path(cfg.get("out", "out"))
        return _SCENARIOS[kind](cfg, out, seed, str(config_path))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, NoSolutionError, IncompatibleDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="capvertex",
        description="Capillary drops on intersecting support planes: "
                    "classification, analytic caps, PDE graphs, mesh evolution.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SCENARIOS:
        p = sub.add_parser(name, help=f"run a '{name}' scenario config")
        p.add_argument("--config", required=True, help="JSON scenario config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=0,
                       help="64-bit master seed recorded in every report")
    args = parser.parse_args(argv)
    return run(args.config, args.out, args.seed, args.subcommand)


if __name__ == "__main__":
    sys.exit(main())
