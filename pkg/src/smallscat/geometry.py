"""Closed triangulated surfaces and interior lattices for small bodies.

Meshes are flat-panel triangulations with one quadrature point (the
centroid) per panel.  Everything downstream treats a :class:`SurfaceMesh`
as read-only; the arrays are frozen on construction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshError, ValidationError

MAX_REFINEMENT = 8

_PHI = (1.0 + 5.0**0.5) / 2.0

_ICO_VERTICES = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ],
    dtype=float,
)

_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SurfaceMesh:
    """Closed, outward-oriented triangle mesh.

    Attributes
    ----------
    vertices : (V, 3) float array
    panels : (F, 3) int array
        Vertex indices, counter-clockwise seen from outside.
    panel_area, panel_centroid, panel_normal
        Derived per-panel quantities (computed in ``__post_init__``).
    """

    vertices: np.ndarray
    panels: np.ndarray
    panel_area: np.ndarray = field(init=False, repr=False)
    panel_centroid: np.ndarray = field(init=False, repr=False)
    panel_normal: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        f = np.asarray(self.panels, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must have shape (V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"panels must have shape (F, 3), got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("panel references a vertex index out of range")
        p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
        cross = np.cross(p1 - p0, p2 - p0)
        norm = np.linalg.norm(cross, axis=1)
        if np.any(norm <= 0.0):
            bad = int(np.argmin(norm))
            raise MeshError(f"panel {bad} has zero area")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "panels", _frozen(f))
        object.__setattr__(self, "panel_area", _frozen(0.5 * norm))
        object.__setattr__(self, "panel_centroid", _frozen((p0 + p1 + p2) / 3.0))
        object.__setattr__(self, "panel_normal", _frozen(cross / norm[:, None]))

    @property
    def n_panels(self) -> int:
        return len(self.panels)

    def volume(self) -> float:
        return mesh_volume(self)

    def area(self) -> float:
        return mesh_area(self)

    def barycenter(self) -> np.ndarray:
        """Centroid of the enclosed solid."""
        v = self.vertices
        p0, p1, p2 = v[self.panels[:, 0]], v[self.panels[:, 1]], v[self.panels[:, 2]]
        tet = np.einsum("ij,ij->i", p0, np.cross(p1, p2)) / 6.0
        return (tet[:, None] * (p0 + p1 + p2) / 4.0).sum(axis=0) / tet.sum()

    def diameter(self) -> float:
        v = self.vertices
        best = 0.0
        for s in range(0, len(v), 1024):
            d = v[s : s + 1024, None, :] - v[None, :, :]
            best = max(best, float(np.einsum("ijk,ijk->ij", d, d).max()))
        return best**0.5

    def transformed(self, matrix=None, shift=None) -> "SurfaceMesh":
        """Return ``matrix @ x + shift`` applied to every vertex."""
        v = self.vertices
        if matrix is not None:
            m = np.asarray(matrix, dtype=float)
            v = v @ m.T
            if np.linalg.det(m) < 0:
                return SurfaceMesh(v + (0 if shift is None else shift), self.panels[:, ::-1])
        if shift is not None:
            v = v + np.asarray(shift, dtype=float)
        return SurfaceMesh(v, self.panels)

    def scaled(self, s: float) -> "SurfaceMesh":
        return SurfaceMesh(self.vertices * float(s), self.panels)

    def translated(self, shift) -> "SurfaceMesh":
        return SurfaceMesh(self.vertices + np.asarray(shift, dtype=float), self.panels)

    def validate(self) -> "SurfaceMesh":
        """Check watertightness and orientation; returns ``self``."""
        check_watertight(self.panels)
        if mesh_volume(self) <= 0.0:
            raise MeshError("signed volume is not positive (inward-oriented panels)")
        return self


def check_watertight(panels: np.ndarray) -> None:
    """Raise :class:`MeshError` naming the first edge not shared by exactly
    two consistently oriented panels."""
    panels = np.asarray(panels)
    directed = Counter()
    for a, b, c in panels.tolist():
        for e in ((a, b), (b, c), (c, a)):
            directed[e] += 1
    undirected = Counter()
    for (a, b), n in directed.items():
        undirected[(min(a, b), max(a, b))] += n
    for edge, n in sorted(undirected.items()):
        if n != 2:
            raise MeshError(f"edge {edge[0]}-{edge[1]} is shared by {n} panel(s), expected 2")
    for (a, b), n in sorted(directed.items()):
        if n != 1 or directed.get((b, a), 0) != 1:
            raise MeshError(f"edge {a}-{b} has inconsistent panel orientation")


def mesh_volume(mesh: SurfaceMesh) -> float:
    """Signed volume by the divergence theorem."""
    v = mesh.vertices
    p0, p1, p2 = v[mesh.panels[:, 0]], v[mesh.panels[:, 1]], v[mesh.panels[:, 2]]
    return float(np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0)


def mesh_area(mesh: SurfaceMesh) -> float:
    return float(mesh.panel_area.sum())


def _subdivide(vertices: list, faces: np.ndarray) -> np.ndarray:
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        idx = cache.get(key)
        if idx is None:
            m = 0.5 * (vertices[i] + vertices[j])
            vertices.append(m / np.linalg.norm(m))
            idx = len(vertices) - 1
            cache[key] = idx
        return idx

    out = []
    for a, b, c in faces.tolist():
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
    return np.array(out, dtype=np.int64)


def make_sphere_mesh(radius: float, refinement: int, match: str = "area") -> SurfaceMesh:
    """Icosphere with ``20 * 4**refinement`` panels.

    All vertices lie on one sphere.  With ``match="area"`` (default) its
    radius is chosen so the total panel area equals ``4 pi radius**2``;
    ``match="volume"`` matches the enclosed volume instead and
    ``match="none"`` puts the vertices on the sphere of the given radius
    (an inscribed polyhedron, which under-represents area and volume).
    """
    if not radius > 0:
        raise ValidationError(f"radius must be positive, got {radius}")
    refinement = int(refinement)
    if refinement < 0:
        raise ValidationError("refinement must be non-negative")
    if refinement > MAX_REFINEMENT:
        raise ValidationError(f"refinement {refinement} exceeds the limit {MAX_REFINEMENT}")
    unit = _ICO_VERTICES / np.linalg.norm(_ICO_VERTICES, axis=1)[:, None]
    vertices = list(unit)
    faces = _subdivide_n(vertices, _ICO_FACES, refinement)
    mesh = SurfaceMesh(np.array(vertices), faces)
    if match == "area":
        scale = (4.0 * np.pi / mesh_area(mesh)) ** 0.5
    elif match == "volume":
        scale = (4.0 * np.pi / 3.0 / mesh_volume(mesh)) ** (1.0 / 3.0)
    elif match == "none":
        scale = 1.0
    else:
        raise ValidationError(f"unknown match mode {match!r}")
    return SurfaceMesh(mesh.vertices * (scale * float(radius)), faces)


def _subdivide_n(vertices: list, faces: np.ndarray, times: int) -> np.ndarray:
    for _ in range(times):
        faces = _subdivide(vertices, faces)
    return faces


def make_ellipsoid_mesh(semi_axes, refinement: int, match: str = "area") -> SurfaceMesh:
    """Unit icosphere (see :func:`make_sphere_mesh`) mapped by ``diag(semi_axes)``."""
    axes = np.asarray(semi_axes, dtype=float)
    if axes.shape != (3,) or np.any(~(axes > 0)):
        raise ValidationError(f"semi_axes must be three positive numbers, got {semi_axes}")
    unit = make_sphere_mesh(1.0, refinement, match=match)
    return SurfaceMesh(unit.vertices * axes, unit.panels)


def make_cube_mesh(side: float = 1.0, refinement: int = 3) -> SurfaceMesh:
    """Axis-aligned cube centred at the origin, each face split into
    ``2 * n * n`` triangles with ``n = 2**refinement``."""
    if not side > 0:
        raise ValidationError("side must be positive")
    if not 0 <= refinement <= MAX_REFINEMENT:
        raise ValidationError(f"refinement must be in [0, {MAX_REFINEMENT}]")
    n = 2**refinement
    index: dict[tuple[int, int, int], int] = {}
    verts = []

    def vid(i, j, k):
        key = (i, j, k)
        if key not in index:
            index[key] = len(verts)
            verts.append(key)
        return index[key]

    faces = []
    # each face: fixed axis, sign, and an in-plane frame (u, w) with u x w = outward
    for axis in range(3):
        for sign in (0, n):
            u, w = (axis + 1) % 3, (axis + 2) % 3
            if sign == 0:
                u, w = w, u
            for a in range(n):
                for b in range(n):
                    corner = []
                    for da, db in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        c = [0, 0, 0]
                        c[axis] = sign
                        c[u] = a + da
                        c[w] = b + db
                        corner.append(vid(*c))
                    faces.append((corner[0], corner[1], corner[2]))
                    faces.append((corner[0], corner[2], corner[3]))
    v = (np.array(verts, dtype=float) / n - 0.5) * side
    return SurfaceMesh(v, np.array(faces, dtype=np.int64))


def ellipsoid_area(a: float, b: float, c: float) -> float:
    """Surface area of an ellipsoid by adaptive quadrature over the unit sphere."""
    from scipy import integrate

    def integrand(phi, theta):
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        # |r_theta x r_phi| for r = (a st cp, b st sp, c ct)
        n = np.array([b * c * st * st * cp, a * c * st * st * sp, a * b * st * ct])
        return np.linalg.norm(n)

    val, _ = integrate.dblquad(integrand, 0.0, np.pi, 0.0, 2.0 * np.pi, epsabs=1e-11, epsrel=1e-11)
    return float(val)


# ---------------------------------------------------------------------------
# Interior lattice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeGrid:
    """Cell-centred lattice points strictly inside a closed surface."""

    cells: np.ndarray
    cell_volume: np.ndarray
    spacing: float

    def __post_init__(self):
        object.__setattr__(self, "cells", _frozen(np.asarray(self.cells, dtype=float)))
        object.__setattr__(self, "cell_volume", _frozen(np.asarray(self.cell_volume, dtype=float)))

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def total_volume(self) -> float:
        return float(self.cell_volume.sum())


def winding_number(mesh: SurfaceMesh, points: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Generalised winding number (solid angle / 4 pi) of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = mesh.vertices
    A, B, C = v[mesh.panels[:, 0]], v[mesh.panels[:, 1]], v[mesh.panels[:, 2]]
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk, None, :]
        a, b, c = A[None] - p, B[None] - p, C[None] - p
        la, lb, lc = (np.linalg.norm(x, axis=-1) for x in (a, b, c))
        num = np.einsum("ijk,ijk->ij", a, np.cross(b, c))
        den = (
            la * lb * lc
            + np.einsum("ijk,ijk->ij", a, b) * lc
            + np.einsum("ijk,ijk->ij", b, c) * la
            + np.einsum("ijk,ijk->ij", c, a) * lb
        )
        out[s : s + chunk] = 2.0 * np.arctan2(num, den).sum(axis=1) / (4.0 * np.pi)
    return out


def make_volume_grid(mesh: SurfaceMesh, resolution: int, match_volume: bool = False) -> VolumeGrid:
    """Clip a regular lattice to the interior of ``mesh``.

    The lattice spacing is ``max bounding-box extent / resolution`` and the
    points sit at cell centres of a grid aligned with the bounding box.
    With ``match_volume`` the common cell volume is rescaled so the cells
    add up to the mesh volume exactly, which removes the first-order
    boundary error of the clipped lattice from volume integrals.
    """
    resolution = int(resolution)
    if resolution < 1:
        raise ValidationError("resolution must be a positive integer")
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    h = float((hi - lo).max()) / resolution
    counts = np.maximum(np.ceil((hi - lo) / h - 1e-9).astype(int), 1)
    mid = 0.5 * (lo + hi)
    axes = [mid[i] + (np.arange(counts[i]) - 0.5 * (counts[i] - 1)) * h for i in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    inside = winding_number(mesh, pts) > 0.5
    pts = pts[inside]
    if len(pts) == 0:
        raise ValidationError("volume grid is empty; increase the resolution")
    cell = mesh_volume(mesh) / len(pts) if match_volume else h**3
    return VolumeGrid(pts, np.full(len(pts), cell), h)


# ---------------------------------------------------------------------------
# ASCII triangle-list files
# ---------------------------------------------------------------------------


def read_mesh(path) -> SurfaceMesh:
    """Parse ``V F`` header, V vertex lines and F 0-based panel lines."""
    lines = [ln.split() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln[0].startswith("#")]
    if not lines or len(lines[0]) != 2:
        raise MeshError(f"{path}: first line must be 'V F'")
    try:
        nv, nf = int(lines[0][0]), int(lines[0][1])
    except ValueError as exc:
        raise MeshError(f"{path}: bad header {' '.join(lines[0])!r}") from exc
    body = lines[1:]
    if len(body) != nv + nf:
        raise MeshError(f"{path}: expected {nv + nf} data lines after header, found {len(body)}")
    try:
        verts = np.array([[float(t) for t in ln] for ln in body[:nv]])
        faces = np.array([[int(t) for t in ln] for ln in body[nv:]], dtype=np.int64)
    except ValueError as exc:
        raise MeshError(f"{path}: {exc}") from exc
    if verts.shape != (nv, 3) or faces.shape != (nf, 3):
        raise MeshError(f"{path}: vertex lines need 3 floats and panel lines 3 integers")
    mesh = SurfaceMesh(verts, faces)
    return mesh.validate()


def write_mesh(mesh: SurfaceMesh, path) -> None:
    rows = [f"{len(mesh.vertices)} {len(mesh.panels)}"]
    rows += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    rows += [" ".join(str(int(i)) for i in f) for f in mesh.panels]
    Path(path).write_text("\n".join(rows) + "\n")
