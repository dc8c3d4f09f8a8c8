"""Scenario files: YAML documents describing one run.

``load_scenario`` reads the file; ``resolve`` fills defaults so the manifest
can echo every parameter actually used.  The ``build_*`` helpers turn the
resolved sections into solver inputs.  See ``docs/scenario.md``.
"""

from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import yaml

from .errors import ValidationError
from .fields import Expression, scalar_field
from .geometry import SurfaceMesh, make_cube_mesh, make_ellipsoid_mesh, make_sphere_mesh, read_mesh
from .incident import CustomField, IncidentField, PlaneWave

MODES = ("shape", "one-body", "oracle", "many-body", "effective", "design", "background-green")

DEFAULTS = {
    "geometry": {"shape": "sphere", "radius": 1.0, "refinement": 3, "center": [0.0, 0.0, 0.0], "match": "area"},
    "physics": {"bc": "dirichlet", "lambda": 1.0, "b": 4.0 * np.pi, "kappa": 0.5,
                "incident": {"kind": "plane", "direction": [0.0, 0.0, 1.0], "amplitude": 1.0}},
    "numerics": {"n_theta": 7, "n_phi": 1, "resolution": 12, "max_ka": 0.5, "grid": 16, "self_term": "ball",
                 "method": "auto", "tolerance": 1e-10, "laplacian_unknowns": False},
    "cloud": {"box": [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], "law": "dirichlet", "N": 1.0, "cells": 4,
              "jitter": 0.5, "d_min": 0.0, "max_particles": 20000,
              "particle_shape": {"shape": "sphere", "refinement": 2}},
    "seed": 0,
}


def load_scenario(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"scenario file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ValidationError(f"cannot parse scenario {p}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a mapping at top level")
    data.setdefault("_base", str(p.parent.resolve()))
    return data


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in (given or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def resolve(raw: dict, mode: str, seed: int | None = None) -> dict:
    """Fill defaults and check the mode; ``seed`` overrides the file."""
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}")
    given = raw.get("mode")
    if given is not None and given != mode:
        raise ValidationError(f"scenario mode {given!r} does not match subcommand {mode!r}")
    sc = _merge(DEFAULTS, {key: v for key, v in raw.items() if key != "_base"})
    sc["mode"] = mode
    if seed is not None:
        sc["seed"] = int(seed)
    sc["seed"] = int(sc["seed"])
    if "_base" in raw:
        sc["_base"] = raw["_base"]
    return _to_plain(sc)


def _to_plain(obj):
    if isinstance(obj, dict):
        return {key: _to_plain(v) for key, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def parse_complex(v) -> complex:
    if isinstance(v, (int, float, complex)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        val = Expression(v)(np.zeros((1, 3)))[0]
        return complex(val)
    raise ValidationError(f"cannot read complex value {v!r}")


def require(section: dict, key: str, where: str):
    if key not in section or section[key] is None:
        raise ValidationError(f"missing required parameter {where}.{key}")
    return section[key]


def positive(value, name: str) -> float:
    v = float(value)
    if not v > 0:
        raise ValidationError(f"{name} must be positive, got {v}")
    return v


def build_mesh(geom: dict, base: str | None = None) -> SurfaceMesh:
    shape = geom.get("shape", "sphere")
    ref = int(geom.get("refinement", 3))
    match = geom.get("match", "area")
    if shape == "sphere":
        mesh = make_sphere_mesh(positive(geom.get("radius", 1.0), "radius"), ref, match)
    elif shape == "ellipsoid":
        mesh = make_ellipsoid_mesh(require(geom, "semi_axes", "geometry"), ref, match)
    elif shape == "cube":
        mesh = make_cube_mesh(positive(geom.get("side", 1.0), "side"), max(1, ref))
    elif shape == "mesh":
        path = Path(require(geom, "path", "geometry"))
        if not path.is_absolute() and base:
            path = Path(base) / path
        if not path.is_file():
            raise ValidationError(f"mesh file not found: {path}")
        mesh = read_mesh(path)
    else:
        raise ValidationError(f"unknown shape {shape!r}")
    if "rotation" in geom:
        mesh = mesh.transformed(np.asarray(geom["rotation"], dtype=float))
    return mesh.translated(np.asarray(geom.get("center", [0, 0, 0]), dtype=float) - mesh.barycenter()) \
        if "center" in geom else mesh


def build_incident(spec: dict, k: float) -> IncidentField:
    kind = spec.get("kind", "plane")
    if kind == "plane":
        return PlaneWave(tuple(spec.get("direction", (0, 0, 1))), k, parse_complex(spec.get("amplitude", 1.0)))
    if kind == "custom":
        value = scalar_field(require(spec, "value", "incident"))
        grad = spec.get("gradient")
        gfun = None
        if grad is not None:
            comps = [scalar_field(c) for c in grad]
            gfun = lambda p: np.stack([c(p) for c in comps], axis=-1)  # noqa: E731
        lap = spec.get("laplacian")
        return CustomField(value, gfun, scalar_field(lap) if lap is not None else None)
    raise ValidationError(f"unknown incident kind {kind!r}")


def direction_grid(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``theta`` from 0 to pi (inclusive) times ``phi`` in ``[0, 2 pi)``."""
    if n_theta < 1 or n_phi < 1:
        raise ValidationError("direction grid needs at least one theta and one phi")
    theta = np.linspace(0.0, np.pi, n_theta) if n_theta > 1 else np.zeros(1)
    phi = np.arange(n_phi) * 2.0 * np.pi / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    T, P = T.ravel(), P.ravel()
    dirs = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=1)
    return T, P, dirs


def build_points(spec) -> np.ndarray:
    """Points from a list, or ``{ring: {center, radius, n, normal_axis}}``,
    or ``{grid: {lo, hi, n}}``."""
    if spec is None:
        return np.zeros((0, 3))
    if isinstance(spec, dict):
        if "ring" in spec:
            r = spec["ring"]
            c = np.asarray(r.get("center", [0, 0, 0]), float)
            rad = positive(require(r, "radius", "ring"), "ring radius")
            n = int(r.get("n", 12))
            t = np.arange(n) * 2 * np.pi / n
            return c + rad * np.stack([np.cos(t), np.sin(t), np.zeros(n)], axis=1)
        if "grid" in spec:
            g = spec["grid"]
            lo, hi = np.asarray(g["lo"], float), np.asarray(g["hi"], float)
            n = np.broadcast_to(np.asarray(g.get("n", 5), int), (3,))
            axes = [np.linspace(lo[i], hi[i], n[i]) for i in range(3)]
            return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        raise ValidationError("points must be a list, a ring or a grid")
    pts = np.asarray(spec, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError("points must be a list of 3-vectors")
    return pts
