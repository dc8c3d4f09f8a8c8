"""Leading-order scattering by one small body.

A small body at ``center`` radiates like a point source whose strength may
depend on the observation direction ``beta``::

    u(x) ~ u0(x) + g(x, center) * 4 pi * A(beta),
    A(beta) = (monopole + beta . dipole) / (4 pi).

The four boundary conditions differ only in how ``monopole`` and ``dipole``
follow from the incident field at the center and the body's shape
functionals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .geometry import SurfaceMesh
from .incident import IncidentField
from .potentials import green
from .shapes import capacitance_bem, polarizability_tensor

FOUR_PI = 4.0 * np.pi


def _unit(beta) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    n = np.linalg.norm(b, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValidationError("direction must be non-zero")
    return b / n


def check_impedance(zeta: complex) -> complex:
    zeta = complex(zeta)
    if zeta.imag > 0:
        raise ValidationError(f"impedance must have Im <= 0 (passivity), got {zeta}")
    return zeta


def amplitude_dirichlet(C: float, u0_at_center: complex) -> complex:
    """Soft body: ``-C u0(center) / (4 pi)``."""
    if not C > 0:
        raise ValidationError(f"capacitance must be positive, got {C}")
    return complex(-C * u0_at_center / FOUR_PI)


def amplitude_impedance(zeta: complex, area: float, u0_at_center: complex) -> complex:
    """Impedance body: ``-zeta |S| u0(center) / (4 pi)``."""
    zeta = check_impedance(zeta)
    if not area > 0:
        raise ValidationError("surface area must be positive")
    return complex(-zeta * area * u0_at_center / FOUR_PI)


def amplitude_neumann(volume: float, tensor, k: float, gradient, laplacian: complex, beta) -> complex:
    """Hard body, general incident field.

    ``|D| / (4 pi) * (ik beta_pq beta_p du0/dx_q + lap u0)`` with the incident
    gradient and Laplacian taken at the body center.
    """
    b = _unit(beta)
    grad = np.asarray(gradient, dtype=complex).reshape(3)
    dip = 1j * k * (np.asarray(tensor, dtype=float) @ grad)
    return complex(volume / FOUR_PI * (b @ dip + laplacian))


def amplitude_neumann_plane(volume: float, tensor, k: float, alpha, beta) -> complex:
    """Plane-wave form ``-k^2 |D| / (4 pi) (1 + beta_pq beta_p alpha_q)``."""
    b, a = _unit(beta), _unit(alpha)
    return complex(-(k**2) * volume / FOUR_PI * (1.0 + b @ np.asarray(tensor, dtype=float) @ a))


@dataclass(frozen=True)
class OneBodyResult:
    """Point-source model of one small body.

    ``Q`` is the total surface charge and ``Q1(beta)`` its far-field moment;
    ``volume_term`` is the extra isotropic strength of a penetrable body.
    """

    bc: str
    center: np.ndarray
    size: float
    k: float
    Q: complex
    dipole: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=complex))
    volume_term: complex = 0j
    params: dict = field(default_factory=dict)

    def Q1(self, beta) -> complex | np.ndarray:
        b = _unit(beta)
        return self.Q + b @ self.dipole

    def amplitude(self, beta) -> complex | np.ndarray:
        return (self.Q1(beta) + self.volume_term) / FOUR_PI

    def summary(self, beta=None) -> dict:
        beta = np.array([0.0, 0.0, 1.0]) if beta is None else beta
        q1 = complex(self.Q1(beta))
        return {
            "bc": self.bc,
            "Q": [self.Q.real, self.Q.imag],
            "Q1": [q1.real, q1.imag],
            "Q1_direction": list(map(float, _unit(beta))),
            "a": self.size,
            "k": self.k,
            "params": self.params,
        }


def _incident_data(incident: IncidentField, center):
    c = np.asarray(center, dtype=float).reshape(1, 3)
    return incident.value(c)[0], incident.gradient(c)[0], incident.laplacian(c)[0]


def one_body_dirichlet(C: float, k: float, incident: IncidentField, center=(0, 0, 0), size=None) -> OneBodyResult:
    u0, _, _ = _incident_data(incident, center)
    Q = FOUR_PI * amplitude_dirichlet(C, u0)
    size = C / FOUR_PI if size is None else size
    return OneBodyResult("dirichlet", np.asarray(center, float), float(size), k, Q, params={"C": C})


def one_body_impedance(zeta: complex, area: float, k: float, incident: IncidentField, center=(0, 0, 0),
                       size=None) -> OneBodyResult:
    u0, _, _ = _incident_data(incident, center)
    Q = FOUR_PI * amplitude_impedance(zeta, area, u0)
    size = np.sqrt(area / FOUR_PI) if size is None else size
    zeta = complex(zeta)
    return OneBodyResult("impedance", np.asarray(center, float), float(size), k, Q,
                         params={"zeta": [zeta.real, zeta.imag], "area": area})


def one_body_neumann(volume: float, tensor, k: float, incident: IncidentField, center=(0, 0, 0),
                     size=None) -> OneBodyResult:
    _, grad, lap = _incident_data(incident, center)
    dip = 1j * k * volume * (np.asarray(tensor, dtype=float) @ grad)
    size = np.cbrt(3 * volume / FOUR_PI) if size is None else size
    return OneBodyResult("neumann", np.asarray(center, float), float(size), k, complex(volume * lap), dip,
                         params={"volume": volume, "tensor": np.asarray(tensor, float).tolist()})


def transmission_lambda(rho: float) -> float:
    if not rho > 0:
        raise ValidationError(f"density ratio rho must be positive, got {rho}")
    return (1.0 - rho) / (1.0 + rho)


def one_body_transmission(volume: float, tensor, rho: float, k: float, k1: float, incident: IncidentField,
                          center=(0, 0, 0), size=None) -> OneBodyResult:
    """Penetrable body; ``tensor`` must be the polarizability at
    ``lambda = (1 - rho) / (1 + rho)``.

    ``Q = V (1 - rho) (lap u0 - kappa u0)`` with ``kappa = k1^2 - k^2``; the
    interior field at the center is approximated by ``u0(center)``.
    """
    transmission_lambda(rho)
    if not k1 > 0:
        raise ValidationError("interior wavenumber k1 must be positive")
    kappa = k1**2 - k**2
    u0, grad, lap = _incident_data(incident, center)
    Q = complex(volume * (1.0 - rho) * (lap - kappa * u0))
    dip = 1j * k * volume * (np.asarray(tensor, dtype=float) @ grad)
    size = np.cbrt(3 * volume / FOUR_PI) if size is None else size
    return OneBodyResult("transmission", np.asarray(center, float), float(size), k, Q, dip,
                         volume_term=complex(kappa * u0 * volume),
                         params={"rho": rho, "k1": k1, "kappa": kappa, "volume": volume,
                                 "lambda": transmission_lambda(rho),
                                 "tensor": np.asarray(tensor, float).tolist()})


def one_body_from_mesh(mesh: SurfaceMesh, bc: str, k: float, incident: IncidentField, **params) -> OneBodyResult:
    """Build the point-source model for a meshed body centred at its barycenter.

    ``params``: ``zeta`` (impedance), ``rho`` and ``k1`` (transmission).
    """
    center = mesh.barycenter()
    size = 0.5 * mesh.diameter()
    if bc == "dirichlet":
        return one_body_dirichlet(capacitance_bem(mesh), k, incident, center, size)
    if bc == "impedance":
        return one_body_impedance(params["zeta"], mesh.area(), k, incident, center, size)
    if bc == "neumann":
        return one_body_neumann(mesh.volume(), polarizability_tensor(mesh, 1.0), k, incident, center, size)
    if bc == "transmission":
        rho = float(params["rho"])
        tensor = polarizability_tensor(mesh, transmission_lambda(rho))
        return one_body_transmission(mesh.volume(), tensor, rho, k, float(params["k1"]), incident, center, size)
    raise ValidationError(f"unknown boundary condition {bc!r}")


def scattered_field_one_body(result: OneBodyResult, incident: IncidentField, x) -> np.ndarray:
    """Total field ``u0(x) + g(x, center) (Q1(beta) + volume_term)``.

    Points closer than ``5 a`` to the center trigger a warning: the point
    source model is only meaningful well outside the body.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    d = pts - result.center
    r = np.linalg.norm(d, axis=1)
    if np.any(r < 5.0 * result.size):
        warnings.warn("evaluation point closer than 5a to the body; point-source model is inaccurate",
                      stacklevel=2)
    coef = result.Q + (d / r[:, None]) @ result.dipole + result.volume_term
    return incident.value(pts) + green(r, result.k) * coef
