"""Command-line front end: ``smallscat <mode> --scenario FILE --out DIR``.

Every run computes all results in memory first, so a validation or solver
failure leaves no partial outputs.  Exit codes: 0 ok, 2 validation,
3 solver failure, 4 comparison failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bem import interior_value, solve_dirichlet_bem, solve_impedance_bem, solve_neumann_bem, solve_transmission_bem
from .effective import (
    BackgroundGreen,
    MediumSpec,
    design_material,
    make_box_grid,
    pde_residual,
    refraction_coefficient,
    solve_limit_dirichlet,
    solve_limit_impedance,
    solve_limit_neumann,
    solve_limit_transmission,
)
from .errors import ComparisonError, SmallScatError, ValidationError
from .fields import scalar_field
from .many_body import cloud_far_field, evaluate_field, generate_cloud, make_cloud, solve_las
from .one_body import one_body_from_mesh
from .potentials import green
from .scenario import (
    MODES,
    build_incident,
    build_mesh,
    build_points,
    direction_grid,
    load_scenario,
    parse_complex,
    positive,
    require,
    resolve,
)
from .shapes import capacitance_bem, polarizability_tensor, shape_functionals

logger = logging.getLogger("smallscat")


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def complex_columns(name: str, values) -> dict:
    v = np.asarray(values, dtype=complex)
    return {f"re_{name}": v.real, f"im_{name}": v.imag}


def table(columns: dict) -> str:
    header = list(columns)
    data = [np.asarray(columns[h]) for h in header]
    n = len(data[0]) if data else 0
    return csv_text(header, zip(*data) if n else [])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Modes; each returns {filename: text} and a summary dict for the manifest
# ---------------------------------------------------------------------------


def _k(phys: dict) -> float:
    return positive(require(phys, "k", "physics"), "physics.k")


def run_shape(sc: dict):
    mesh = build_mesh(sc["geometry"], sc.get("_base")).validate()
    sf = shape_functionals(mesh, float(sc["physics"]["lambda"]))
    d = sf.as_dict()
    cols = {"capacitance_bem": [sf.capacitance], "capacitance_zeroth": [sf.capacitance_zeroth],
            "volume": [sf.volume], "area": [sf.area], "lambda": [sf.lam]}
    for p in range(3):
        for q in range(3):
            cols[f"beta_{p + 1}{q + 1}"] = [sf.polarizability[p, q]]
    return {"shape.csv": table(cols), "shape.json": json_text(d)}, {"n_panels": mesh.n_panels}


def _bc_params(phys: dict, bc: str) -> dict:
    if bc == "impedance":
        if "zeta" in phys:
            return {"zeta": parse_complex(phys["zeta"])}
        h = parse_complex(require(phys, "h", "physics"))
        return {"h": h}
    if bc == "transmission":
        return {"rho": positive(require(phys, "rho", "physics"), "rho"),
                "k1": positive(require(phys, "k1", "physics"), "k1")}
    return {}


def _impedance_zeta(params: dict, phys: dict, a: float) -> complex:
    if "zeta" in params:
        return params["zeta"]
    return params["h"] / a ** float(phys["kappa"])


def _direction_columns(sc: dict, amp_fn):
    num = sc["numerics"]
    T, P, dirs = direction_grid(int(num["n_theta"]), int(num["n_phi"]))
    A = np.array([amp_fn(d) for d in dirs], dtype=complex)
    return {"theta": T, "phi": P, **complex_columns("A", A)}


def run_one_body(sc: dict):
    phys = sc["physics"]
    k = _k(phys)
    bc = phys["bc"]
    mesh = build_mesh(sc["geometry"], sc.get("_base")).validate()
    inc = build_incident(phys["incident"], k)
    params = _bc_params(phys, bc)
    if bc == "impedance":
        params = {"zeta": _impedance_zeta(params, phys, 0.5 * mesh.diameter())}
    res = one_body_from_mesh(mesh, bc, k, inc, **params)
    cols = _direction_columns(sc, res.amplitude)
    summary = res.summary(inc.alpha if hasattr(inc, "alpha") else None)
    return {"amplitude.csv": table(cols), "summary.json": json_text(summary)}, {"n_panels": mesh.n_panels}


def run_oracle(sc: dict):
    phys, num = sc["physics"], sc["numerics"]
    k = _k(phys)
    bc = phys["bc"]
    mesh = build_mesh(sc["geometry"], sc.get("_base")).validate()
    inc = build_incident(phys["incident"], k)
    max_ka = num["max_ka"]
    params = _bc_params(phys, bc)
    if bc == "dirichlet":
        sol = solve_dirichlet_bem(mesh, k, inc, max_ka=max_ka)
    elif bc == "impedance":
        zeta = _impedance_zeta(params, phys, 0.5 * mesh.diameter())
        sol = solve_impedance_bem(mesh, k, zeta, inc, max_ka=max_ka)
    elif bc == "neumann":
        sol = solve_neumann_bem(mesh, k, inc, max_ka=max_ka)
    elif bc == "transmission":
        sol = solve_transmission_bem(mesh, k, params["k1"], params["rho"], inc,
                                     resolution=int(num["resolution"]), max_ka=max_ka)
    else:
        raise ValidationError(f"unknown boundary condition {bc!r}")
    cols = _direction_columns(sc, lambda d: sol.far_field(d)[0])
    Q = sol.total_charge()
    summary = {"bc": bc, "Q": Q, "k": k, "a": 0.5 * mesh.diameter(), "condition": sol.condition,
               "residual": sol.residual, "params": sol.params}
    if bc == "transmission":
        summary["u1"] = interior_value(sol, mesh.barycenter())
        summary["n_cells"] = sol.grid.n_cells
    return {"amplitude.csv": table(cols), "summary.json": json_text(summary)}, {"n_panels": mesh.n_panels}


def _unit_particle(shape_spec: dict):
    """Particle shape mesh scaled to half-diameter 1."""
    mesh = build_mesh(shape_spec)
    return mesh.scaled(2.0 / mesh.diameter())


def build_cloud(sc: dict):
    cl, phys = sc["cloud"], sc["physics"]
    bc = phys["bc"]
    k = _k(phys)
    a = positive(require(cl, "a", "cloud"), "cloud.a")
    box = np.asarray(cl["box"], dtype=float)
    kappa = float(phys["kappa"])
    shape = _unit_particle(cl["particle_shape"])
    V = shape.volume() * a**3
    if "centers" in cl:
        centers = np.asarray(cl["centers"], dtype=float).reshape(-1, 3)
    else:
        Nf = scalar_field(cl["N"])
        centers = generate_cloud(box, a, cl["law"], lambda p: Nf(p).real, sc["seed"], int(cl["cells"]), kappa,
                                 float(cl["d_min"]), float(cl["jitter"]), int(cl["max_particles"]), V=V)
    kw = {}
    if bc == "dirichlet":
        kw["C"] = capacitance_bem(shape) * a
    elif bc == "impedance":
        kw.update(h=scalar_field(require(phys, "h", "physics")), b=shape.area(), kappa=kappa)
    elif bc == "neumann":
        kw.update(V=V, tensor=polarizability_tensor(shape, 1.0))
    elif bc == "transmission":
        rho = scalar_field(require(phys, "rho", "physics"))(centers).real if len(centers) else np.zeros(0)
        if np.any(rho <= 0):
            raise ValidationError("density ratio rho must be positive")
        K2 = scalar_field(require(phys, "K2", "physics"))(centers).real if len(centers) else np.zeros(0)
        if np.any(K2 <= 0):
            raise ValidationError("K^2 must be positive")
        cache = {}
        for r in np.unique(rho):
            cache[r] = polarizability_tensor(shape, (1.0 - r) / (1.0 + r))
        tensors = np.array([cache[r] for r in rho]).reshape(-1, 3, 3)
        kw.update(V=V, tensor=tensors, rho=rho, km=np.sqrt(K2))
    return make_cloud(centers, a, bc, k, box=box, d_min=float(cl["d_min"]), **kw)


def run_many_body(sc: dict):
    phys, num = sc["physics"], sc["numerics"]
    k = _k(phys)
    cloud = build_cloud(sc)
    inc = build_incident(phys["incident"], k)
    kw = {"method": num["method"]}
    if cloud.bc in ("neumann", "transmission"):
        kw["laplacian_unknowns"] = bool(num["laplacian_unknowns"])
    bg = sc.get("background")
    if bg:
        if cloud.bc not in ("dirichlet", "impedance"):
            raise ValidationError("a background medium is supported for Dirichlet and impedance clouds only")
        spec = MediumSpec(tuple(map(tuple, bg["box"])), {"n0sq": bg["n0sq"]})
        kw["kernel"] = BackgroundGreen(spec, k, int(bg.get("grid", 12))).kernel
    sol = solve_las(cloud, k, inc, **kw)
    x = cloud.centers
    files = {"solution.csv": table({"m": np.arange(cloud.M), "x": x[:, 0], "y": x[:, 1], "z": x[:, 2],
                                    **complex_columns("u", sol.values)})}
    probes = build_points(sc.get("probes"))
    if len(probes):
        u = evaluate_field(cloud, sol, inc, probes)
        files["probes.csv"] = table({"x": probes[:, 0], "y": probes[:, 1], "z": probes[:, 2],
                                     **complex_columns("u", u), **complex_columns("u0", inc.value(probes))})
    if hasattr(inc, "alpha"):
        files["forward.json"] = json_text({"forward_amplitude": cloud_far_field(cloud, sol, inc.alpha)[0]})
    return files, {"M": cloud.M, "a": cloud.a, "k": k, "bc": cloud.bc, "solver": sol.report.method,
                   "condition": sol.report.condition, "residual": sol.report.residual}


def _medium(sc: dict):
    med = require(sc, "medium", "scenario")
    box = tuple(map(tuple, np.asarray(require(med, "box", "medium"), dtype=float)))
    return MediumSpec(box, dict(med.get("fields", {})))


def run_effective(sc: dict):
    phys, num = sc["physics"], sc["numerics"]
    k = _k(phys)
    spec = _medium(sc)
    inc = build_incident(phys["incident"], k)
    bc = phys["bc"]
    common = dict(grid=int(num["grid"]), self_term=num["self_term"], method=num["method"],
                  tol=float(num["tolerance"]))
    if bc == "dirichlet":
        sol = solve_limit_dirichlet(spec, k, inc, **common)
    elif bc == "impedance":
        sol = solve_limit_impedance(spec, k, positive(phys["b"], "physics.b"), inc, **common)
    elif bc == "neumann":
        sol = solve_limit_neumann(spec, k, inc, **common)
    elif bc == "transmission":
        sol = solve_limit_transmission(spec, k, inc, **common)
    else:
        raise ValidationError(f"unknown boundary condition {bc!r}")
    nodes = sol.nodes
    files = {"nodes.csv": table({"x": nodes[:, 0], "y": nodes[:, 1], "z": nodes[:, 2],
                                 **complex_columns("u", sol.values), **complex_columns("u0", inc.value(nodes))})}
    probes = build_points(sc.get("probes"))
    if len(probes):
        u = sol.evaluate(probes, inc)
        files["probes.csv"] = table({"x": probes[:, 0], "y": probes[:, 1], "z": probes[:, 2],
                                     **complex_columns("u", u), **complex_columns("u0", inc.value(probes))})
    report = {"solver_residual": sol.report.residual, "method": sol.report.method,
              "iterations": sol.report.iterations, "P": sol.grid.n_nodes}
    if min(sol.grid.shape) >= 3:
        report["pde_residual"] = pde_residual(sol)
    files["residual.json"] = json_text(report)
    return files, {"P": sol.grid.n_nodes, "bc": bc, "k": k}


def run_design(sc: dict):
    phys, num = sc["physics"], sc["numerics"]
    k = _k(phys)
    b = positive(phys["b"], "physics.b")
    box = require(sc, "box", "scenario")
    grid = make_box_grid(box, int(num["grid"]))
    nodes = grid.nodes
    n2 = scalar_field(require(phys, "n2_target", "physics"))(nodes)
    N, h = design_material(n2, k, b)
    back = refraction_coefficient(b * N * h, k)
    files = {"design.csv": table({"x": nodes[:, 0], "y": nodes[:, 1], "z": nodes[:, 2], "N": N,
                                  **complex_columns("h", h), **complex_columns("n2", n2),
                                  **complex_columns("n2_roundtrip", back)})}
    files["design.json"] = json_text({"roundtrip_max_error": float(np.abs(back - n2).max()), "b": b, "k": k})
    return files, {"P": grid.n_nodes}


def run_background_green(sc: dict):
    phys, num = sc["physics"], sc["numerics"]
    k = _k(phys)
    spec = _medium(sc)
    y = np.asarray(require(sc, "source", "scenario"), dtype=float).reshape(3)
    pts = build_points(require(sc, "points", "scenario"))
    bg = BackgroundGreen(spec, k, int(num["grid"]), num["self_term"], float(num["tolerance"]))
    G = bg(pts, y)
    g = green(np.linalg.norm(pts - y, axis=1), k)
    files = {"green.csv": table({"x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2], **complex_columns("G", G),
                                 **complex_columns("g", g)})}
    return files, {"P": bg.grid.n_nodes, "zero_contrast": bool(bg.zero)}


RUNNERS = {
    "shape": run_shape,
    "one-body": run_one_body,
    "oracle": run_oracle,
    "many-body": run_many_body,
    "effective": run_effective,
    "design": run_design,
    "background-green": run_background_green,
}


def run(mode: str, scenario_path, out_dir, seed: int | None = None) -> dict:
    """Run one scenario and write its outputs; returns the manifest."""
    t0 = time.perf_counter()
    sc = resolve(load_scenario(scenario_path), mode, seed)
    files, summary = RUNNERS[mode](sc)
    elapsed = time.perf_counter() - t0
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    resolved = {key: v for key, v in sc.items() if key != "_base"}
    manifest = {"version": __version__, "mode": mode, "seed": sc["seed"], "wall_clock_s": elapsed,
                "scenario": resolved, "outputs": sorted(files), "summary": summary}
    (out / "manifest.json").write_text(json_text(manifest))
    return manifest


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


def _read_csv(path: Path):
    with path.open() as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ComparisonError(f"empty CSV {path}", code="schema-mismatch")
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header, data


def _column_groups(header):
    """Pair ``re_X``/``im_X`` columns into complex columns ``X``."""
    groups, used = [], set()
    for i, h in enumerate(header):
        if i in used:
            continue
        if h.startswith("re_") and "im_" + h[3:] in header:
            j = header.index("im_" + h[3:])
            groups.append((h[3:], i, j))
            used.update((i, j))
        else:
            groups.append((h, i, None))
            used.add(i)
    return groups


def compare(dir_a, dir_b, tolerance: float) -> dict:
    """Per-column maximum relative error between matching CSV outputs.

    Complex columns (``re_X``/``im_X`` pairs) are compared as complex
    numbers.  The relative error of a column is ``max |a - b| / max |b|``.
    """
    a, b = Path(dir_a), Path(dir_b)
    for d in (a, b):
        if not d.is_dir():
            raise ValidationError(f"not a directory: {d}")
    names_a = sorted(p.name for p in a.glob("*.csv"))
    names_b = sorted(p.name for p in b.glob("*.csv"))
    if names_a != names_b or not names_a:
        raise ComparisonError(f"schema mismatch: CSV files {names_a} vs {names_b}", code="schema-mismatch")
    report = {"tolerance": tolerance, "files": {}}
    worst = 0.0
    for name in names_a:
        ha, da = _read_csv(a / name)
        hb, db = _read_csv(b / name)
        if ha != hb or da.shape != db.shape:
            raise ComparisonError(f"schema mismatch in {name}: {ha} ({len(da)} rows) vs {hb} ({len(db)} rows)",
                                  code="schema-mismatch")
        cols = {}
        for label, i, j in _column_groups(ha):
            va = da[:, i] + (1j * da[:, j] if j is not None else 0)
            vb = db[:, i] + (1j * db[:, j] if j is not None else 0)
            scale = np.abs(vb).max() if len(vb) else 0.0
            diff = np.abs(va - vb).max() if len(vb) else 0.0
            err = 0.0 if diff == 0 else (float(diff / scale) if scale > 0 else float("inf"))
            cols[label] = err
            worst = max(worst, err)
        report["files"][name] = cols
    report["max_relative_error"] = worst
    report["passed"] = bool(worst <= tolerance)
    return report


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _limit_threads(n: int | None):
    if n is None:
        return None
    if n < 1:
        raise ValidationError("--threads must be at least 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smallscat", description="Wave scattering by many small bodies.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for mode in MODES:
        s = sub.add_parser(mode, help=f"run a {mode} scenario")
        s.add_argument("--scenario", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--threads", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("-v", "--verbose", action="store_true")
    c = sub.add_parser("compare", help="compare the CSV outputs of two runs")
    c.add_argument("run_a")
    c.add_argument("run_b")
    c.add_argument("--tolerance", type=float, default=1e-12)
    c.add_argument("--out", help="write the report JSON here")
    c.add_argument("--threads", type=int)
    c.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        limiter = _limit_threads(args.threads)
        try:
            if args.command == "compare":
                report = compare(args.run_a, args.run_b, args.tolerance)
                text = json_text(report)
                if args.out:
                    Path(args.out).write_text(text)
                sys.stdout.write(text)
                if not report["passed"]:
                    raise ComparisonError(
                        f"max relative error {report['max_relative_error']:.3e} exceeds {args.tolerance:g}")
            else:
                manifest = run(args.command, args.scenario, args.out, args.seed)
                logger.info("wrote %s to %s", ", ".join(manifest["outputs"]), args.out)
        finally:
            if limiter is not None:
                limiter.restore_original_limits()
    except SmallScatError as exc:
        sys.stderr.write(f"error code={exc.code} exit={exc.exit_code}: {exc}\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
