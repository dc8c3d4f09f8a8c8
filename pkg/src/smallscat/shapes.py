"""Capacitance and polarizability tensors of a closed surface.

Conventions: ``eps0 = 1`` (the capacitance of a ball of radius ``a`` is
``4 pi a``); dipole moments are taken about the body barycenter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import SurfaceMesh
from .linalg import solve_dense
from .potentials import assemble_A, disc_self_integral, single_layer_matrix


def capacitance_zeroth(mesh: SurfaceMesh) -> float:
    """Zeroth-order variational estimate ``4 pi |S|^2 / int int ds dt / r``."""
    c, w = mesh.panel_centroid, mesh.panel_area
    total = 0.0
    for s in range(0, len(c), 512):
        d = c[s : s + 512, None, :] - c[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
        idx = np.arange(r.shape[0]), np.arange(s, s + r.shape[0])
        r[idx] = 1.0
        blk = w[s : s + 512, None] * w[None, :] / r
        blk[idx] = w[s : s + 512] * disc_self_integral(w[s : s + 512])
        total += blk.sum()
    return float(4.0 * np.pi * w.sum() ** 2 / total)


def capacitance_bem(mesh: SurfaceMesh) -> float:
    """Solve ``int g0(s,t) sigma(t) dt = -1`` and return ``-int sigma``."""
    S = single_layer_matrix(mesh, 0.0).real
    sigma, _ = solve_dense(S, -np.ones(mesh.n_panels), "capacitance system")
    return float(-(sigma * mesh.panel_area).sum())


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not -1.0 < lam <= 1.0:
        raise ValidationError(f"lambda must lie in (-1, 1], got {lam}")
    return lam


def dipole_densities(mesh: SurfaceMesh, lam: float, A0: np.ndarray | None = None) -> np.ndarray:
    """Solutions ``sigma_q`` of ``(I - lam A0) sigma_q = -2 lam N_q``, shape ``(F, 3)``."""
    lam = _check_lambda(lam)
    if lam == 0.0:
        return np.zeros((mesh.n_panels, 3))
    if A0 is None:
        A0 = assemble_A(mesh, 0.0)
    sig, _ = solve_dense(np.eye(mesh.n_panels) - lam * A0, -2.0 * lam * mesh.panel_normal,
                         "polarizability system")
    return sig


def polarizability_tensor(mesh: SurfaceMesh, lam: float = 1.0) -> np.ndarray:
    """Tensor ``beta_pq = V^-1 int t_p sigma_q(t) dt`` (3x3, real)."""
    sig = dipole_densities(mesh, lam)
    t = mesh.panel_centroid - mesh.barycenter()
    return (t * mesh.panel_area[:, None]).T @ sig / mesh.volume()


def charge_Q_sigma_q(mesh: SurfaceMesh, lam: float = 1.0) -> np.ndarray:
    """Total charges ``int sigma_q dt``; near zero for a good discretisation."""
    sig = dipole_densities(mesh, lam)
    return (mesh.panel_area @ sig).astype(complex)


@dataclass(frozen=True)
class ShapeFunctionals:
    capacitance: float
    capacitance_zeroth: float
    polarizability: np.ndarray
    lam: float
    volume: float
    area: float

    def as_dict(self) -> dict:
        return {
            "capacitance_bem": self.capacitance,
            "capacitance_zeroth": self.capacitance_zeroth,
            "polarizability": {"lambda": self.lam, "tensor": self.polarizability.tolist()},
            "volume": self.volume,
            "area": self.area,
        }


def shape_functionals(mesh: SurfaceMesh, lam: float = 1.0) -> ShapeFunctionals:
    return ShapeFunctionals(
        capacitance=capacitance_bem(mesh),
        capacitance_zeroth=capacitance_zeroth(mesh),
        polarizability=polarizability_tensor(mesh, lam),
        lam=float(lam),
        volume=mesh.volume(),
        area=mesh.area(),
    )
