"""Nyström discretisation of the layer and volume potentials.

One quadrature point per panel (the centroid) and one per lattice cell.
Matrices act on plain density vectors: ``S @ sigma`` is the single-layer
potential at the panel centroids, ``A @ sigma`` the operator
``2 * int dg(s,t)/dN_s sigma(t) dt``; the panel areas are folded into the
columns.

Singular entries
----------------
* single layer: the self-panel integral of ``1/(4 pi r)`` is replaced by
  that of a flat disc of equal area, ``2 sqrt(pi * area) / (4 pi)``, plus
  the bounded remainder ``ik * area / (4 pi)``;
* normal-derivative operator: the diagonal of the static part is fixed by
  the Gauss identity ``sum_s area_s * A0[s, t] = -area_t`` (every column),
  and the bounded ``k``-remainder has zero diagonal on a flat panel.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularEvaluationError
from .geometry import SurfaceMesh, VolumeGrid

FOUR_PI = 4.0 * np.pi


def kernel_g(x, y, k: float) -> complex:
    """Outgoing free-space Green's function ``exp(ik r) / (4 pi r)``."""
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if r == 0.0:
        raise SingularEvaluationError("kernel_g evaluated at coincident points")
    return complex(np.exp(1j * k * r) / (FOUR_PI * r))


def green(r: np.ndarray, k: float) -> np.ndarray:
    """Vectorised ``g`` of distances (no singularity check)."""
    return np.exp(1j * k * r) / (FOUR_PI * r)


def _pair_geometry(x: np.ndarray, y: np.ndarray):
    d = x[:, None, :] - y[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    return d, r


def disc_self_integral(area) -> np.ndarray:
    """``int_disc dA / r`` over a disc of the given area, from its centre."""
    return 2.0 * np.sqrt(np.pi * np.asarray(area, dtype=float))


ROW_BLOCK = 512


def _row_blocks(n: int):
    for s in range(0, n, ROW_BLOCK):
        yield slice(s, min(n, s + ROW_BLOCK))


def single_layer_matrix(mesh: SurfaceMesh, k: float, targets=None) -> np.ndarray:
    """Matrix of the single-layer potential.

    With ``targets=None`` the rows are the panel centroids and the diagonal
    uses the disc self-term; otherwise plain centroid quadrature is used and
    targets must not coincide with any centroid.
    """
    c, w = mesh.panel_centroid, mesh.panel_area
    on_surface = targets is None
    x = c if on_surface else np.atleast_2d(np.asarray(targets, dtype=float))
    S = np.empty((len(x), len(c)), dtype=complex)
    for rows in _row_blocks(len(x)):
        _, r = _pair_geometry(x[rows], c)
        if on_surface:
            r[np.arange(r.shape[0]), np.arange(rows.start, rows.stop)] = 1.0
        elif np.any(r == 0.0):
            raise SingularEvaluationError("target coincides with a panel centroid")
        S[rows] = green(r, k) * w[None, :]
    if on_surface:
        S[np.diag_indices_from(S)] = disc_self_integral(w) / FOUR_PI + 1j * k * w / FOUR_PI
    return S


def _panel_subpoints(mesh: SurfaceMesh, n: int) -> np.ndarray:
    """Centroids of the ``n**2`` congruent sub-triangles of every panel, ``(F, n*n, 3)``."""
    bary = []
    for i in range(n):
        for j in range(n - i):
            bary.append(((i + 1 / 3) / n, (j + 1 / 3) / n))
            if i + j < n - 1:
                bary.append(((i + 2 / 3) / n, (j + 2 / 3) / n))
    b = np.asarray(bary)
    tri = mesh.vertices[mesh.panels]
    e1, e2 = tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]
    return tri[:, None, 0] + b[None, :, 0, None] * e1[:, None] + b[None, :, 1, None] * e2[:, None]


def single_layer_matrix_near(mesh: SurfaceMesh, k: float, targets, near_factor: float = 2.0,
                             n_sub: int = 6) -> np.ndarray:
    """Single-layer matrix at off-surface targets with refined near-field quadrature.

    Panels whose centroid lies within ``near_factor * sqrt(area)`` of a
    target are integrated with ``n_sub**2`` sub-triangle centroids.
    """
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    c, w = mesh.panel_centroid, mesh.panel_area
    reach = near_factor * np.sqrt(w)
    sub = None
    S = np.empty((len(x), len(c)), dtype=complex)
    for rows in _row_blocks(len(x)):
        _, r = _pair_geometry(x[rows], c)
        near = r < reach[None, :]
        r_safe = np.where(near, 1.0, r)
        blk = green(r_safe, k) * w[None, :]
        ti, pi = np.nonzero(near)
        if len(ti):
            if sub is None:
                sub = _panel_subpoints(mesh, n_sub)
            d = sub[pi] - x[rows][ti][:, None, :]
            rs = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
            if np.any(rs == 0.0):
                raise SingularEvaluationError("target lies on a quadrature point of the surface")
            blk[ti, pi] = green(rs, k).mean(axis=1) * w[pi]
        S[rows] = blk
    return S


def single_layer(mesh: SurfaceMesh, density, k: float, x) -> complex:
    """``int_S g(x, t) sigma(t) dt`` at one point ``x``.

    A point that coincides with a panel centroid picks up the disc
    self-term for that panel.
    """
    sigma = np.asarray(density, dtype=complex)
    if sigma.shape != (mesh.n_panels,):
        raise ValueError("density length must equal the panel count")
    x = np.asarray(x, dtype=float)
    d = mesh.panel_centroid - x
    r = np.sqrt(np.einsum("ij,ij->i", d, d))
    w = mesh.panel_area
    hit = r < 1e-12 * max(1.0, float(np.sqrt(w.max())))
    r_safe = np.where(hit, 1.0, r)
    vals = green(r_safe, k) * w
    vals[hit] = disc_self_integral(w[hit]) / FOUR_PI + 1j * k * w[hit] / FOUR_PI
    return complex((vals * sigma).sum())


def _dgdr(r: np.ndarray, k: float) -> np.ndarray:
    return np.exp(1j * k * r) * (1j * k * r - 1.0) / (FOUR_PI * r * r)


def _dg0dr(r: np.ndarray) -> np.ndarray:
    return -1.0 / (FOUR_PI * r * r)


def assemble_A(mesh: SurfaceMesh, k: float) -> np.ndarray:
    """Nyström matrix of ``A sigma = 2 int dg(s,t)/dN_s sigma(t) dt``."""
    c, n, w = mesh.panel_centroid, mesh.panel_normal, mesh.panel_area
    N = mesh.n_panels
    A0 = np.empty((N, N))
    rem = None if k == 0 else np.empty((N, N), dtype=complex)
    for rows in _row_blocks(N):
        d, r = _pair_geometry(c[rows], c)
        idx = np.arange(r.shape[0]), np.arange(rows.start, rows.stop)
        r[idx] = 1.0
        # (s - t) . N_s / r
        cos_s = np.einsum("ijk,ik->ij", d, n[rows]) / r
        A0[rows] = 2.0 * _dg0dr(r) * cos_s * w[None, :]
        if rem is not None:
            blk = 2.0 * (_dgdr(r, k) - _dg0dr(r)) * cos_s * w[None, :]
            blk[idx] = 0.0
            rem[rows] = blk
    np.fill_diagonal(A0, 0.0)
    colsum = w @ A0  # sum_s w_s A0[s, t]
    A0[np.diag_indices_from(A0)] = (-w - colsum) / w
    if rem is None:
        return A0
    return A0 + rem


def normal_derivative_single_layer(mesh: SurfaceMesh, k: float, targets, normals) -> np.ndarray:
    """Matrix of ``d/dn_x int_S g(x,t) sigma(t) dt`` at off-surface targets."""
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    nx = np.atleast_2d(np.asarray(normals, dtype=float))
    d, r = _pair_geometry(x, mesh.panel_centroid)
    if np.any(r == 0.0):
        raise SingularEvaluationError("target coincides with a panel centroid")
    cos = np.einsum("ijk,ik->ij", d, nx) / r
    return _dgdr(r, k) * cos * mesh.panel_area[None, :]


# ---------------------------------------------------------------------------
# Volume potentials
# ---------------------------------------------------------------------------


def ball_self_integral(radius, k: float) -> complex:
    """``int_{|y|<radius} g(0, y) dy`` in closed form."""
    r = float(radius)
    if k * r < 1e-3:
        kr = k * r
        # series of (exp(ikr)(1 - ikr) - 1) / k^2
        return complex(r * r * (0.5 + 1j * kr / 3.0 - kr * kr / 8.0 - 1j * kr**3 / 30.0))
    return complex((np.exp(1j * k * r) * (1.0 - 1j * k * r) - 1.0) / (k * k))


def equal_volume_radius(volume) -> np.ndarray:
    return np.cbrt(3.0 * np.asarray(volume, dtype=float) / FOUR_PI)


def _subcell_offsets(h: float, n: int) -> np.ndarray:
    t = (np.arange(n) + 0.5) / n - 0.5
    return np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3) * h


def volume_potential_matrix(
    grid: VolumeGrid,
    k: float,
    targets,
    self_term: str = "omit",
    near_factor: float = 1.5,
    n_sub: int = 4,
) -> np.ndarray:
    """Matrix ``V`` with ``V @ u = int_D g(x, y) u(y) dy`` at ``targets``.

    Cells with centre closer than ``near_factor * spacing`` to a target are
    integrated with ``n_sub**3`` sub-points.  A target sitting on a cell
    centre either skips that cell (``self_term="omit"``) or uses the
    equal-volume ball integral (``"ball"``).
    """
    if self_term not in ("omit", "ball"):
        raise ValueError(f"unknown self_term {self_term!r}")
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    y, vol, h = grid.cells, grid.cell_volume, grid.spacing
    off = _subcell_offsets(h, n_sub)
    V = np.empty((len(x), len(y)), dtype=complex)
    for rows in _row_blocks(len(x)):
        xb = x[rows]
        _, r = _pair_geometry(xb, y)
        coincident = r < 1e-9 * h
        r_safe = np.where(coincident, 1.0, r)
        blk = green(r_safe, k) * vol[None, :]
        ti, ci = np.nonzero((r < near_factor * h) & ~coincident)
        if len(ti):
            sub = y[ci][:, None, :] + off[None, :, :] - xb[ti][:, None, :]
            rs = np.sqrt(np.einsum("ijk,ijk->ij", sub, sub))
            blk[ti, ci] = green(rs, k).mean(axis=1) * vol[ci]
        ti, ci = np.nonzero(coincident)
        if len(ti):
            if self_term == "omit":
                blk[ti, ci] = 0.0
            else:
                rad = equal_volume_radius(vol[ci])
                blk[ti, ci] = [ball_self_integral(rr, k) for rr in rad]
        V[rows] = blk
    return V


def volume_potential(grid: VolumeGrid, u_values, k: float, kappa: complex, x) -> complex:
    """``kappa * int_D g(x, y) u(y) dy`` at one point."""
    if kappa == 0:
        return 0j
    u = np.asarray(u_values, dtype=complex)
    return complex(kappa * (volume_potential_matrix(grid, k, x)[0] @ u))


def volume_potential_gradient_matrix(
    grid: VolumeGrid, k: float, targets, near_factor: float = 1.5, n_sub: int = 4
) -> np.ndarray:
    """Array ``(T, 3, C)``: gradient in ``x`` of ``int_D g(x,y) u(y) dy``.

    Coincident cells contribute nothing (the ball integral of the gradient
    vanishes by symmetry).
    """
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    y, vol, h = grid.cells, grid.cell_volume, grid.spacing
    off = _subcell_offsets(h, n_sub)
    G = np.empty((len(x), 3, len(y)), dtype=complex)
    for rows in _row_blocks(len(x)):
        xb = x[rows]
        d, r = _pair_geometry(xb, y)
        coincident = r < 1e-9 * h
        r_safe = np.where(coincident, 1.0, r)
        blk = (_dgdr(r_safe, k) / r_safe * vol[None, :])[:, None, :] * np.moveaxis(d, 2, 1)
        ti, ci = np.nonzero((r < near_factor * h) & ~coincident)
        if len(ti):
            sub = xb[ti][:, None, :] - (y[ci][:, None, :] + off[None, :, :])
            rs = np.sqrt(np.einsum("ijk,ijk->ij", sub, sub))
            grad = (_dgdr(rs, k) / rs)[:, :, None] * sub
            blk[ti, :, ci] = grad.mean(axis=1) * vol[ci][:, None]
        ti, ci = np.nonzero(coincident)
        blk[ti, :, ci] = 0.0
        G[rows] = blk
    return G


def normal_derivative_volume_matrix(grid: VolumeGrid, k: float, mesh: SurfaceMesh) -> np.ndarray:
    """Matrix ``B`` with ``B @ u = d/dN_s int_D g(s, y) u(y) dy`` at centroids.

    The lattice quadrature is unreliable for cells hugging the surface, so
    the value of ``u`` at the cell nearest each centroid is split off and its
    contribution evaluated through ``grad int_D g = -int_S g N dt`` on the
    surface mesh; the lattice only integrates ``u - u(nearest)``.
    """
    G = volume_potential_gradient_matrix(grid, k, mesh.panel_centroid)
    B = np.einsum("tic,ti->tc", G, mesh.panel_normal)
    d, _ = _pair_geometry(mesh.panel_centroid, grid.cells)
    nearest = np.argmin(np.einsum("ijk,ijk->ij", d, d), axis=1)
    S = single_layer_matrix(mesh, k)
    n = mesh.panel_normal
    flux = -np.einsum("ti,tj,ji->t", n, S, n)
    rows = np.arange(mesh.n_panels)
    B[rows, nearest] += flux - B.sum(axis=1)
    return B


def normal_derivative_volume_potential(grid: VolumeGrid, u_values, k: float, kappa: complex,
                                       mesh: SurfaceMesh) -> np.ndarray:
    """``kappa * d/dN_s int_D g(s,y) u(y) dy`` at every panel centroid."""
    if kappa == 0:
        return np.zeros(mesh.n_panels, dtype=complex)
    u = np.asarray(u_values, dtype=complex)
    return kappa * (normal_derivative_volume_matrix(grid, k, mesh) @ u)
