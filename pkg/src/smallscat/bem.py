"""Boundary-element reference solutions for one or a few small bodies.

The scattered field is represented as a single-layer potential
``v(x) = int_S g(x, t) sigma(t) dt`` (plus, for penetrable bodies, the volume
term ``kappa int_D g(x, y) u(y) dy``).  Several bodies are handled by merging
their meshes into one surface; cross-body interactions are then just
off-diagonal kernel blocks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import SurfaceMesh, VolumeGrid, make_volume_grid
from .incident import IncidentField
from .linalg import SolveReport, solve_dense
from .one_body import check_impedance, transmission_lambda
from .potentials import (
    FOUR_PI,
    assemble_A,
    normal_derivative_volume_matrix,
    single_layer_matrix,
    single_layer_matrix_near,
    volume_potential_matrix,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_KA = 0.5


def merge_meshes(meshes) -> tuple[SurfaceMesh, list[slice]]:
    """Concatenate meshes; return the union and the panel slice of each body."""
    meshes = list(meshes)
    if not meshes:
        raise ValidationError("at least one body is required")
    verts, panels, slices = [], [], []
    nv = npan = 0
    for m in meshes:
        verts.append(m.vertices)
        panels.append(m.panels + nv)
        slices.append(slice(npan, npan + m.n_panels))
        nv += len(m.vertices)
        npan += m.n_panels
    return SurfaceMesh(np.vstack(verts), np.vstack(panels)), slices


def _as_list(meshes) -> list[SurfaceMesh]:
    return [meshes] if isinstance(meshes, SurfaceMesh) else list(meshes)


def check_ka(meshes, k: float, max_ka: float | None) -> float:
    """Largest ``k * a`` over the bodies (``a`` = half the diameter)."""
    if not k >= 0:
        raise ValidationError(f"wavenumber must be non-negative, got {k}")
    ka = max(k * 0.5 * m.diameter() for m in meshes)
    if max_ka is not None and ka > max_ka:
        raise ValidationError(f"ka = {ka:.3g} exceeds the small-body guard {max_ka}")
    return ka


@dataclass
class BemSolution:
    """Panel densities (and interior cell values for penetrable bodies)."""

    bc: str
    k: float
    mesh: SurfaceMesh
    body_slices: list
    sigma: np.ndarray
    report: SolveReport
    grid: VolumeGrid | None = None
    interior: np.ndarray | None = None
    kappa: complex = 0.0
    params: dict = field(default_factory=dict)

    @property
    def condition(self) -> float:
        return self.report.condition

    @property
    def residual(self) -> float:
        return self.report.residual

    def charges(self) -> np.ndarray:
        """Total charge ``int sigma`` on every body."""
        q = self.sigma * self.mesh.panel_area
        return np.array([q[s].sum() for s in self.body_slices])

    def total_charge(self) -> complex:
        return complex(self.charges().sum())

    def far_field(self, beta) -> np.ndarray:
        """Scattering amplitude ``A(beta)`` for unit directions ``(n, 3)``."""
        b = np.atleast_2d(np.asarray(beta, dtype=float))
        b = b / np.linalg.norm(b, axis=1, keepdims=True)
        t = self.mesh.panel_centroid
        A = np.exp(-1j * self.k * (b @ t.T)) @ (self.sigma * self.mesh.panel_area)
        if self.interior is not None and self.kappa != 0:
            y = self.grid.cells
            A = A + self.kappa * (np.exp(-1j * self.k * (b @ y.T)) @ (self.interior * self.grid.cell_volume))
        return A / FOUR_PI

    def scattered(self, x) -> np.ndarray:
        """Scattered field at exterior points (centroid quadrature)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        v = single_layer_matrix_near(self.mesh, self.k, pts) @ self.sigma
        if self.interior is not None and self.kappa != 0:
            v = v + self.kappa * (volume_potential_matrix(self.grid, self.k, pts) @ self.interior)
        return v

    def field(self, x, incident: IncidentField) -> np.ndarray:
        return incident.value(x) + self.scattered(x)


def _surface_data(mesh: SurfaceMesh, incident: IncidentField):
    c, n = mesh.panel_centroid, mesh.panel_normal
    return incident.value(c), incident.normal_derivative(c, n)


def solve_dirichlet_bem(meshes, k: float, incident: IncidentField, max_ka: float | None = DEFAULT_MAX_KA,
                        max_condition: float = 1e12) -> BemSolution:
    """First-kind system ``int_S g(s,t) sigma(t) dt = -u0(s)``."""
    meshes = _as_list(meshes)
    check_ka(meshes, k, max_ka)
    mesh, slices = merge_meshes(meshes)
    u0, _ = _surface_data(mesh, incident)
    S = single_layer_matrix(mesh, k)
    sigma, rep = solve_dense(S, -u0, "Dirichlet boundary system", max_condition)
    return BemSolution("dirichlet", k, mesh, slices, sigma, rep)


def solve_impedance_bem(meshes, k: float, zeta, incident: IncidentField,
                        max_ka: float | None = DEFAULT_MAX_KA) -> BemSolution:
    """Second-kind system ``((A - I)/2 - zeta S) sigma = zeta u0 - u0_N``.

    ``zeta`` may be one value or one per body.
    """
    meshes = _as_list(meshes)
    check_ka(meshes, k, max_ka)
    mesh, slices = merge_meshes(meshes)
    z = np.broadcast_to(np.asarray(zeta, dtype=complex), (len(meshes),))
    for zi in z:
        check_impedance(zi)
    zp = np.empty(mesh.n_panels, dtype=complex)
    for s, zi in zip(slices, z):
        zp[s] = zi
    u0, u0n = _surface_data(mesh, incident)
    A = assemble_A(mesh, k)
    M = 0.5 * (A - np.eye(mesh.n_panels))
    if np.any(zp != 0):
        M = M - zp[:, None] * single_layer_matrix(mesh, k)
    sigma, rep = solve_dense(M, zp * u0 - u0n, "impedance boundary system")
    return BemSolution("impedance", k, mesh, slices, sigma, rep, params={"zeta": z.tolist()})


def solve_neumann_bem(meshes, k: float, incident: IncidentField,
                      max_ka: float | None = DEFAULT_MAX_KA) -> BemSolution:
    """Second-kind system ``(I - A) sigma = 2 u0_N``."""
    meshes = _as_list(meshes)
    check_ka(meshes, k, max_ka)
    mesh, slices = merge_meshes(meshes)
    _, u0n = _surface_data(mesh, incident)
    A = assemble_A(mesh, k)
    sigma, rep = solve_dense(np.eye(mesh.n_panels) - A, 2.0 * u0n, "Neumann boundary system")
    return BemSolution("neumann", k, mesh, slices, sigma, rep)


def solve_transmission_bem(mesh: SurfaceMesh, k: float, k1: float, rho: float, incident: IncidentField,
                           grid: VolumeGrid | None = None, resolution: int = 12,
                           max_ka: float | None = DEFAULT_MAX_KA) -> BemSolution:
    """Coupled surface/volume system for one penetrable body.

    Unknowns: ``sigma`` on panels and ``u`` on interior lattice cells.  With
    ``lambda = (1 - rho)/(1 + rho)`` and ``kappa = k1^2 - k^2``::

        sigma - lambda A sigma - 2 lambda kappa B u = 2 lambda u0_N   (panels)
        u - S sigma - kappa V u                     = u0              (cells)

    where ``B u`` is the normal derivative of the volume potential on the
    surface and ``V`` the volume potential with ball-regularised self cells.
    """
    check_ka([mesh], k, max_ka)
    lam = transmission_lambda(rho)
    if not k1 > 0:
        raise ValidationError("interior wavenumber k1 must be positive")
    kappa = k1**2 - k**2
    if grid is None:
        grid = make_volume_grid(mesh, resolution, match_volume=True)
    F, C = mesh.n_panels, grid.n_cells
    _, u0n = _surface_data(mesh, incident)
    M = np.zeros((F + C, F + C), dtype=complex)
    M[:F, :F] = np.eye(F) - lam * assemble_A(mesh, k)
    M[F:, F:] = np.eye(C)
    M[F:, :F] = -single_layer_matrix_near(mesh, k, grid.cells)
    if kappa != 0:
        M[:F, F:] = -2.0 * lam * kappa * normal_derivative_volume_matrix(grid, k, mesh)
        M[F:, F:] -= kappa * volume_potential_matrix(grid, k, grid.cells, self_term="ball")
    rhs = np.concatenate([2.0 * lam * u0n, incident.value(grid.cells)])
    x, rep = solve_dense(M, rhs, "transmission coupled system")
    logger.info("transmission BEM: %d panels, %d cells, cond %.3e", F, C, rep.condition)
    return BemSolution("transmission", k, mesh, [slice(0, F)], x[:F], rep, grid=grid, interior=x[F:],
                       kappa=kappa, params={"rho": rho, "k1": k1, "lambda": lam})


def flux_residual(sol: BemSolution, incident: IncidentField) -> float:
    """Relative mismatch of ``rho u_N(inside) - u_N(outside)`` on the panels.

    Uses the jump relation of the single layer: the outer and inner normal
    derivatives are ``w + (A sigma -/+ sigma)/2`` with the smooth part ``w``.
    """
    if sol.bc != "transmission":
        raise ValidationError("flux residual is defined for transmission solutions only")
    mesh, k = sol.mesh, sol.k
    rho = sol.params["rho"]
    _, u0n = _surface_data(mesh, incident)
    Asig = assemble_A(mesh, k) @ sol.sigma
    smooth = u0n + sol.kappa * (normal_derivative_volume_matrix(sol.grid, k, mesh) @ sol.interior)
    outer = smooth + 0.5 * (Asig - sol.sigma)
    inner = smooth + 0.5 * (Asig + sol.sigma)
    return float(np.linalg.norm(rho * inner - outer) / max(np.linalg.norm(outer), 1e-300))


def interior_value(sol: BemSolution, point) -> complex:
    """Interior field at the cell nearest to ``point``."""
    if sol.interior is None:
        raise ValidationError("solution has no interior values")
    d = np.linalg.norm(sol.grid.cells - np.asarray(point, dtype=float), axis=1)
    return complex(sol.interior[np.argmin(d)])
