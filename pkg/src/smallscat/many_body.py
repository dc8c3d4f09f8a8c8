"""Particle clouds and the linear systems for their effective field.

Every particle ``m`` acts as a point source at ``x_m``.  Its field at ``x`` is

    g(R) * (c_m + n . d_m),      R = |x - x_m|,  n = (x - x_m) / R,

with a monopole ``c_m = s_m u_m`` and (hard or penetrable particles only) a
dipole ``d_m = ik V_m beta_m grad u_m``.  ``u_m`` and ``grad u_m`` are the
effective field acting on particle ``m``.  The monopole weight ``s_m`` is

* Dirichlet: ``-C_m``
* impedance: ``-a^(2-kappa) b_m h_m``
* Neumann: ``-k^2 V_m`` (the Laplacian is replaced by ``-k^2 u``)
* transmission: ``V_m (kappa_m - (1 - rho_m) k_m^2)``, with ``kappa_m = k_m^2 - k^2``.

Collocating the field (and, with a dipole, its gradient) at every centre
with the self term dropped gives an ``M`` or ``4M`` system.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .incident import IncidentField
from .linalg import SolveReport, solve_dense, solve_krylov
from .one_body import check_impedance
from .potentials import FOUR_PI, green

logger = logging.getLogger(__name__)

BOUNDARY_CONDITIONS = ("dirichlet", "impedance", "neumann", "transmission")
DENSE_LIMIT = 4096
ROW_BLOCK = 256


@dataclass(frozen=True)
class ParticleCloud:
    """Centres of ``M`` small particles of common size ``a`` in a box.

    Per-particle parameters live in ``params`` as arrays of length ``M``:

    * dirichlet: ``C``
    * impedance: ``h`` (complex), ``b``; the exponent is ``kappa``
    * neumann: ``V``, ``tensor`` ``(M, 3, 3)``
    * transmission: ``V``, ``tensor``, ``rho``, ``km``
    """

    centers: np.ndarray
    a: float
    bc: str
    params: dict
    box: tuple = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    kappa: float = 0.5
    d_min: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "params", {key: np.asarray(v) for key, v in self.params.items()})

    @property
    def M(self) -> int:
        return len(self.centers)

    def validate(self) -> "ParticleCloud":
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValidationError(f"unknown boundary condition {self.bc!r}")
        if not self.a > 0:
            raise ValidationError("particle size a must be positive")
        lo, hi = (np.asarray(b, dtype=float) for b in self.box)
        if self.M and (np.any(self.centers < lo) or np.any(self.centers > hi)):
            raise ValidationError("particle centre outside the box")
        need = {"dirichlet": ("C",), "impedance": ("h", "b"), "neumann": ("V", "tensor"),
                "transmission": ("V", "tensor", "rho", "km")}[self.bc]
        for key in need:
            if key not in self.params:
                raise ValidationError(f"{self.bc} cloud needs parameter {key!r}")
            if len(self.params[key]) != self.M:
                raise ValidationError(f"parameter {key!r} must have one entry per particle")
        if self.bc == "impedance":
            if not 0.0 < self.kappa < 1.0:
                raise ValidationError(f"impedance exponent kappa must lie in (0, 1), got {self.kappa}")
            if np.any(np.asarray(self.params["h"]).imag > 0):
                raise ValidationError("impedance profile must have Im h <= 0")
        if self.bc == "transmission" and np.any(self.params["rho"] <= 0):
            raise ValidationError("density ratios rho must be positive")
        if self.M > 1:
            dmin = min_separation(self.centers)
            limit = max(2.0 * self.a, self.d_min)
            if dmin < limit * (1 - 1e-12) or dmin <= 2.0 * self.a:
                raise ValidationError(f"particles closer than the minimum separation ({dmin:.3g} < {limit:.3g})")
        return self

    def monopole_weight(self, k: float) -> np.ndarray:
        p = self.params
        if self.bc == "dirichlet":
            return -p["C"].astype(complex)
        if self.bc == "impedance":
            return -(self.a ** (2.0 - self.kappa)) * p["b"] * p["h"].astype(complex)
        if self.bc == "neumann":
            return -(k**2) * p["V"].astype(complex)
        km2 = p["km"].astype(float) ** 2
        return p["V"] * ((km2 - k**2) - (1.0 - p["rho"]) * km2).astype(complex)

    def dipole_matrix(self, k: float) -> np.ndarray | None:
        """``ik V_m beta_m`` per particle, or ``None`` without dipoles."""
        if self.bc in ("dirichlet", "impedance"):
            return None
        return 1j * k * self.params["V"][:, None, None] * self.params["tensor"]

    def subset(self, index) -> "ParticleCloud":
        return replace(self, centers=self.centers[index],
                       params={key: v[index] for key, v in self.params.items()})


def min_separation(points: np.ndarray) -> float:
    d, _ = cKDTree(points).query(points, k=2)
    return float(d[:, 1].min())


# ---------------------------------------------------------------------------
# Cloud generation
# ---------------------------------------------------------------------------


def count_scale(law: str, a: float, kappa: float = 0.5, V: float | None = None) -> float:
    """Particles per unit of ``int N``: ``1/a``, ``1/a^(2-kappa)`` or ``1/V``."""
    if law == "dirichlet":
        return 1.0 / a
    if law == "impedance":
        return 1.0 / a ** (2.0 - kappa)
    if law in ("neumann", "transmission"):
        V = 4.0 * np.pi * a**3 / 3.0 if V is None else V
        return 1.0 / V
    raise ValidationError(f"unknown placement law {law!r}")


def _cell_integral(N, lo, hi, n_quad: int = 3) -> float:
    t = (np.arange(n_quad) + 0.5) / n_quad
    g = np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3)
    pts = lo + g * (hi - lo)
    vals = np.broadcast_to(np.asarray(N(pts), dtype=float), (len(pts),))
    if np.any(vals < 0):
        raise ValidationError("particle density N must be non-negative")
    return float(vals.mean() * np.prod(hi - lo))


def generate_cloud(box, a: float, law: str, N, seed: int, cells: int = 4, kappa: float = 0.5,
                   d_min: float = 0.0, jitter: float = 0.5, max_particles: int = 20000,
                   V: float | None = None) -> np.ndarray:
    """Stratified, seeded placement of particle centres.

    The box is split into ``cells**3`` cells.  Cell ``Delta`` receives
    ``round(scale * int_Delta N)`` particles on a jittered sub-lattice, where
    ``scale`` follows the placement law (see :func:`count_scale`).  Jitter is
    capped so that centres stay at least ``max(5a, d_min)`` apart.

    ``N`` is a callable on ``(n, 3)`` point arrays (or a constant).
    """
    if not a > 0:
        raise ValidationError("particle size a must be positive")
    if not callable(N):
        const = float(N)
        N = lambda p, c=const: np.full(len(p), c)  # noqa: E731
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if np.any(hi <= lo):
        raise ValidationError("box must have positive extent")
    scale = count_scale(law, a, kappa, V)
    sep = max(5.0 * a, d_min)
    rng = np.random.default_rng(seed)
    size = (hi - lo) / cells
    out = []
    for idx in np.ndindex(cells, cells, cells):
        clo = lo + np.asarray(idx) * size
        n = int(round(scale * _cell_integral(N, clo, clo + size)))
        if n == 0:
            continue
        if sum(len(o) for o in out) + n > max_particles:
            raise ValidationError(f"particle count exceeds the cap {max_particles}")
        per = int(np.ceil(n ** (1.0 / 3.0) - 1e-9))
        step = size / per
        if np.any(step < sep):
            raise ValidationError(
                f"cell {idx} needs {n} particles; spacing {step.min():.3g} is below the minimum separation {sep:.3g}")
        sites = np.stack(np.meshgrid(*(np.arange(per),) * 3, indexing="ij"), axis=-1).reshape(-1, 3)
        sites = sites[np.sort(rng.permutation(len(sites))[:n])]
        amp = jitter * np.minimum((step - sep) / 2.0, step / 2.0)
        pos = clo + (sites + 0.5) * step + rng.uniform(-1.0, 1.0, size=(n, 3)) * amp
        out.append(pos)
    if not out:
        return np.zeros((0, 3))
    return np.vstack(out)


def ball_polarizability(lam) -> np.ndarray:
    """Polarizability tensor of a ball, ``-6 lam / (3 + lam)`` times the
    identity; ``lam`` may be an array (one tensor per entry)."""
    lam = np.asarray(lam, dtype=float)
    return (-6.0 * lam / (3.0 + lam))[..., None, None] * np.eye(3)


def make_cloud(centers, a: float, bc: str, k: float | None = None, *, C=None, h=None, b=None,
               kappa: float = 0.5, V=None, tensor=None, rho=None, km=None, box=None,
               d_min: float = 0.0) -> ParticleCloud:
    """Build and validate a cloud; scalar parameters are broadcast, callables
    are evaluated at the centres.

    Unspecified shape data default to balls of radius ``a``: ``C = 4 pi a``,
    ``b = 4 pi``, ``V = 4 pi a^3 / 3`` and the ball polarizability at
    ``lambda = 1`` (hard) or ``lambda = (1 - rho) / (1 + rho)`` (penetrable).
    """
    c = np.asarray(centers, dtype=float).reshape(-1, 3)
    M = len(c)

    def per(v, dtype=float, shape=()):
        if callable(v):
            v = v(c)
        return np.broadcast_to(np.asarray(v, dtype=dtype), (M,) + shape).copy()

    if bc == "dirichlet":
        params = {"C": per(4.0 * np.pi * a if C is None else C)}
    elif bc == "impedance":
        params = {"h": per(h, complex), "b": per(4.0 * np.pi if b is None else b)}
    elif bc == "neumann":
        params = {"V": per(4.0 * np.pi * a**3 / 3.0 if V is None else V),
                  "tensor": per(-1.5 * np.eye(3) if tensor is None else tensor, float, (3, 3))}
    elif bc == "transmission":
        params = {"V": per(4.0 * np.pi * a**3 / 3.0 if V is None else V), "rho": per(rho), "km": per(km)}
        if np.any(~(params["rho"] > 0)):
            raise ValidationError("density ratios rho must be positive")
        if tensor is None:
            lam = (1.0 - params["rho"]) / (1.0 + params["rho"])
            tensor = ball_polarizability(lam)
        params["tensor"] = per(tensor, float, (3, 3))
    else:
        raise ValidationError(f"unknown boundary condition {bc!r}")
    if box is None:
        box = (c.min(axis=0) if M else np.zeros(3), c.max(axis=0) if M else np.ones(3))
    return ParticleCloud(c, float(a), bc, params, tuple(map(tuple, np.asarray(box, float))), kappa,
                         d_min).validate()


# ---------------------------------------------------------------------------
# Point-source interactions
# ---------------------------------------------------------------------------


def _masked_geometry(diff: np.ndarray, self_rows=None):
    """Distances, unit vectors and a mask of usable pairs; ``self_rows``
    marks ``(row, col)`` index pairs to drop."""
    R = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    ok = np.ones(R.shape, dtype=bool)
    if self_rows is not None:
        ok[self_rows] = False
    Rs = np.where(ok, R, 1.0)
    return Rs, diff / Rs[:, :, None], ok


def _kernels(Rs: np.ndarray, ok: np.ndarray, k: float):
    """``g``, ``g'`` and ``g / R`` with dropped pairs set to zero."""
    g = np.where(ok, green(Rs, k), 0.0)
    return g, g * (1j * k - 1.0 / Rs), g / Rs


def _radiate(x: np.ndarray, src: np.ndarray, k: float, c: np.ndarray, d: np.ndarray | None,
             skip_self: bool, gradient: bool):
    """Field (and gradient) at ``x`` of point sources ``(c, d)`` at ``src``."""
    val = np.zeros(len(x), dtype=complex)
    grad = np.zeros((len(x), 3), dtype=complex) if gradient else None
    for s in range(0, len(x), ROW_BLOCK):
        xb = x[s:s + ROW_BLOCK]
        diff = xb[:, None, :] - src[None, :, :]
        rows = (np.arange(len(xb)), np.arange(s, s + len(xb))) if skip_self else None
        Rs, n, ok = _masked_geometry(diff, rows)
        g, gp, gr = _kernels(Rs, ok, k)
        strength = np.broadcast_to(c, Rs.shape)
        nd = None
        if d is not None:
            nd = np.einsum("ijk,jk->ij", n, d)
            strength = strength + nd
        val[s:s + len(xb)] = (g * strength).sum(axis=1)
        if gradient:
            gb = np.einsum("ij,ijr->ir", gp * c[None, :], n)
            if d is not None:
                gb += np.einsum("ij,ijr->ir", (gp - gr) * nd, n)
                gb += gr @ d
            grad[s:s + len(xb)] = gb
    return val, grad


def _dipoles(P: np.ndarray | None, grads: np.ndarray) -> np.ndarray | None:
    return None if P is None else np.einsum("mpq,mq->mp", P, grads)


def las_matrix(cloud: ParticleCloud, k: float, kernel=None) -> np.ndarray:
    """Matrix ``T`` of the scalar system ``u = u0 + T u`` (Dirichlet/impedance).

    ``T[j, m] = g(x_j, x_m) s_m`` off the diagonal, zero on it.  ``kernel``
    may replace ``g``: a callable ``(targets, sources) -> matrix``.
    """
    x = cloud.centers
    s = cloud.monopole_weight(k)
    if kernel is None:
        diff = x[:, None, :] - x[None, :, :]
        R = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        np.fill_diagonal(R, 1.0)
        G = green(R, k)
    else:
        G = np.asarray(kernel(x, x), dtype=complex).copy()
    np.fill_diagonal(G, 0.0)
    return G * s[None, :]


def las_matrix_full(cloud: ParticleCloud, k: float) -> np.ndarray:
    """``4M x 4M`` matrix ``T`` of ``X = X0 + T X`` with ``X = [u, grad u]``.

    Gradient unknowns are ordered particle-major: ``X[M + 3m + q]``.
    """
    x, M = cloud.centers, cloud.M
    s = cloud.monopole_weight(k)
    P = cloud.dipole_matrix(k)
    Rs, n, ok = _masked_geometry(x[:, None, :] - x[None, :, :], np.diag_indices(M))
    g, gp, gr = _kernels(Rs, ok, k)
    eye = np.eye(3)
    # kernels acting on (c_m, d_m)
    Kvc = g
    Kvd = g[:, :, None] * n
    Kgc = gp[:, :, None] * n
    Kgd = (gp - gr)[:, :, None, None] * n[:, :, :, None] * n[:, :, None, :] + gr[:, :, None, None] * eye
    T = np.zeros((4 * M, 4 * M), dtype=complex)
    T[:M, :M] = Kvc * s[None, :]
    T[M:, :M] = (Kgc * s[None, :, None]).transpose(0, 2, 1).reshape(3 * M, M)
    T[:M, M:] = np.einsum("jmp,mpq->jmq", Kvd, P).reshape(M, 3 * M)
    T[M:, M:] = np.einsum("jmrp,mpq->jrmq", Kgd, P).reshape(3 * M, 3 * M)
    return T


@dataclass
class EffectiveFieldSolution:
    """Effective field at the particle centres."""

    bc: str
    k: float
    values: np.ndarray
    gradients: np.ndarray | None
    report: SolveReport
    laplacians: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def _incident_block(cloud: ParticleCloud, incident: IncidentField, with_grad: bool):
    x = cloud.centers
    u0 = incident.value(x) if cloud.M else np.zeros(0, complex)
    if not with_grad:
        return u0
    return np.concatenate([u0, incident.gradient(x).reshape(-1)])


def _solve(matrix_fn, matvec, rhs, what: str, method: str):
    n = len(rhs)
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "gmres"
    if method == "dense":
        return solve_dense(np.eye(n) - matrix_fn(), rhs, what)
    if method == "gmres":
        return solve_krylov(lambda v: v - matvec(v), rhs, what, tol=1e-10)
    raise ValidationError(f"unknown solver method {method!r}")


def _scalar_solve(cloud: ParticleCloud, k: float, incident: IncidentField, method: str, kernel,
                  bc: str) -> EffectiveFieldSolution:
    if cloud.bc != bc:
        raise ValidationError(f"cloud boundary condition is {cloud.bc!r}, expected {bc!r}")
    cloud.validate()
    M = cloud.M
    u0 = _incident_block(cloud, incident, False)
    if M == 0:
        return EffectiveFieldSolution(bc, k, u0, None, SolveReport(1.0, 0.0, "none"))
    s = cloud.monopole_weight(k)
    if kernel is not None and method == "gmres":
        raise ValidationError("a tabulated kernel requires the dense solver")

    def matvec(v):
        return _radiate(cloud.centers, cloud.centers, k, s * v, None, True, False)[0]

    u, rep = _solve(lambda: las_matrix(cloud, k, kernel), matvec, u0, f"{bc} LAS", method)
    meta = {"M": M, "kernel": "free" if kernel is None else "tabulated"}
    return EffectiveFieldSolution(bc, k, u, None, rep, meta=meta)


def solve_las_dirichlet(cloud: ParticleCloud, k: float, incident: IncidentField, method: str = "auto",
                        kernel=None) -> EffectiveFieldSolution:
    """``u_j = u0_j - sum_{m != j} g(x_j, x_m) C_m u_m``."""
    return _scalar_solve(cloud, k, incident, method, kernel, "dirichlet")


def solve_las_impedance(cloud: ParticleCloud, k: float, incident: IncidentField, method: str = "auto",
                        kernel=None) -> EffectiveFieldSolution:
    """``u_j = u0_j - a^(2-kappa) sum_{m != j} g(x_j, x_m) b_m h_m u_m``."""
    for h in cloud.params.get("h", []):
        check_impedance(h)
    return _scalar_solve(cloud, k, incident, method, kernel, "impedance")


def _vector_solve(cloud: ParticleCloud, k: float, incident: IncidentField, method: str, bc: str,
                  laplacian_unknowns: bool) -> EffectiveFieldSolution:
    if cloud.bc != bc:
        raise ValidationError(f"cloud boundary condition is {cloud.bc!r}, expected {bc!r}")
    cloud.validate()
    if laplacian_unknowns:
        return _solve_5m(cloud, k, incident)
    M = cloud.M
    X0 = _incident_block(cloud, incident, True)
    if M == 0:
        return EffectiveFieldSolution(bc, k, X0[:0], np.zeros((0, 3), complex), SolveReport(1.0, 0.0, "none"))
    s = cloud.monopole_weight(k)
    P = cloud.dipole_matrix(k)

    def matvec(v):
        u, gr = v[:M], v[M:].reshape(M, 3)
        val, grad = _radiate(cloud.centers, cloud.centers, k, s * u, _dipoles(P, gr), True, True)
        return np.concatenate([val, grad.reshape(-1)])

    X, rep = _solve(lambda: las_matrix_full(cloud, k), matvec, X0, f"{bc} LAS", method)
    return EffectiveFieldSolution(bc, k, X[:M], X[M:].reshape(M, 3), rep, meta={"M": M, "unknowns": 4 * M})


def _solve_5m(cloud: ParticleCloud, k: float, incident: IncidentField) -> EffectiveFieldSolution:
    """Keep ``lap u_m`` as an unknown and collocate the Laplacian of the
    representation as a fifth equation (dense only)."""
    M = cloud.M
    x = cloud.centers
    P = cloud.dipole_matrix(k)
    if cloud.bc == "neumann":
        a_lap, a_u = cloud.params["V"].astype(complex), np.zeros(M, complex)
    else:
        V, rho, km = cloud.params["V"], cloud.params["rho"], cloud.params["km"]
        kap = km**2 - k**2
        a_lap = (V * (1.0 - rho)).astype(complex)
        a_u = (V * (kap - (1.0 - rho) * kap)).astype(complex)
    T4 = las_matrix_full(cloud, k)
    Tu = _monopole_kernel_columns(x, k)
    T = np.zeros((5 * M, 5 * M), dtype=complex)
    T[:4 * M, :M] = Tu * a_u[None, :]
    T[:4 * M, M:4 * M] = T4[:, M:]
    T[:4 * M, 4 * M:] = Tu * a_lap[None, :]
    Rs, n, ok = _masked_geometry(x[:, None, :] - x[None, :, :], np.diag_indices(M))
    g, _, _ = _kernels(Rs, ok, k)
    lap_mono = -(k**2) * g
    lap_dip = (g * (-(k**2) - 2.0 / Rs**2))[:, :, None] * n
    T[4 * M:, :M] = lap_mono * a_u[None, :]
    T[4 * M:, 4 * M:] = lap_mono * a_lap[None, :]
    T[4 * M:, M:4 * M] = np.einsum("jmp,mpq->jmq", lap_dip, P).reshape(M, 3 * M)
    X0 = np.concatenate([incident.value(x), incident.gradient(x).reshape(-1), incident.laplacian(x)])
    X, rep = solve_dense(np.eye(5 * M) - T, X0, f"{cloud.bc} LAS (5M)")
    return EffectiveFieldSolution(cloud.bc, k, X[:M], X[M:4 * M].reshape(M, 3), rep, laplacians=X[4 * M:],
                                  meta={"M": M, "unknowns": 5 * M})


def _monopole_kernel_columns(x: np.ndarray, k: float) -> np.ndarray:
    """``4M x M`` kernel of unit monopoles: value rows then gradient rows."""
    M = len(x)
    Rs, n, ok = _masked_geometry(x[:, None, :] - x[None, :, :], np.diag_indices(M))
    g, gp, _ = _kernels(Rs, ok, k)
    out = np.zeros((4 * M, M), dtype=complex)
    out[:M] = g
    out[M:] = (gp[:, :, None] * n).transpose(0, 2, 1).reshape(3 * M, M)
    return out


def solve_las_neumann(cloud: ParticleCloud, k: float, incident: IncidentField, method: str = "auto",
                      laplacian_unknowns: bool = False) -> EffectiveFieldSolution:
    """Hard particles: ``4M`` system in ``u_m`` and ``grad u_m``."""
    return _vector_solve(cloud, k, incident, method, "neumann", laplacian_unknowns)


def solve_las_transmission(cloud: ParticleCloud, k: float, incident: IncidentField, method: str = "auto",
                           laplacian_unknowns: bool = False) -> EffectiveFieldSolution:
    """Penetrable particles: ``4M`` system in ``u_m`` and ``grad u_m``."""
    return _vector_solve(cloud, k, incident, method, "transmission", laplacian_unknowns)


SOLVERS = {
    "dirichlet": solve_las_dirichlet,
    "impedance": solve_las_impedance,
    "neumann": solve_las_neumann,
    "transmission": solve_las_transmission,
}


def solve_las(cloud: ParticleCloud, k: float, incident: IncidentField, **kw) -> EffectiveFieldSolution:
    return SOLVERS[cloud.bc](cloud, k, incident, **kw)


def source_strengths(cloud: ParticleCloud, sol: EffectiveFieldSolution):
    """Monopoles ``c_m`` and dipoles ``d_m`` (or ``None``) of the solved cloud."""
    k = sol.k
    if sol.laplacians is not None:
        if cloud.bc == "neumann":
            c = cloud.params["V"] * sol.laplacians
        else:
            V, rho, km = cloud.params["V"], cloud.params["rho"], cloud.params["km"]
            kap = km**2 - k**2
            c = V * (1.0 - rho) * (sol.laplacians - kap * sol.values) + kap * V * sol.values
    else:
        c = cloud.monopole_weight(k) * sol.values
    d = None if sol.gradients is None else _dipoles(cloud.dipole_matrix(k), sol.gradients)
    return c, d


def evaluate_field(cloud: ParticleCloud, sol: EffectiveFieldSolution, incident: IncidentField, x) -> np.ndarray:
    """``u(x) = u0(x) + sum_m g(x, x_m) (c_m + n_m . d_m)``.

    Warns for points closer than ``3a`` to a particle centre.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    u0 = incident.value(pts)
    if cloud.M == 0:
        return u0
    diff = pts[:, None, :] - cloud.centers[None, :, :]
    dmin = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).min()
    if dmin == 0:
        raise ValidationError("evaluation point coincides with a particle centre")
    if dmin < 3.0 * cloud.a:
        warnings.warn("evaluation point closer than 3a to a particle", stacklevel=2)
    c, d = source_strengths(cloud, sol)
    return u0 + _radiate(pts, cloud.centers, sol.k, c, d, False, False)[0]


def cloud_far_field(cloud: ParticleCloud, sol: EffectiveFieldSolution, beta) -> np.ndarray:
    """Total amplitude ``(1/4pi) sum_m exp(-ik beta.x_m) (c_m + beta . d_m)``."""
    b = np.atleast_2d(np.asarray(beta, dtype=float))
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    c, d = source_strengths(cloud, sol)
    phase = np.exp(-1j * sol.k * (b @ cloud.centers.T))
    strength = c[None, :] + (0 if d is None else b @ d.T)
    return (phase * strength).sum(axis=1) / FOUR_PI
