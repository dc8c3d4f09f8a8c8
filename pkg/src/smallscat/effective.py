"""Continuum limits of the many-particle systems, solved by collocation.

All four limiting equations share the form

    u(x) = u0(x) + int_D g(x, y) [ w(y) u(y) + n(x, y) . d(y) ] dy,
    d_p(y) = ik T_pq(y) du/dy_q,   n(x, y) = (x - y) / |x - y|,

with a monopole weight ``w`` and (hard or penetrable media) a dipole tensor
``T``:

* Dirichlet: ``w = -c N``
* impedance: ``w = -b N h``
* Neumann: ``w = -k^2 rho_vol``, ``T = B``
* transmission: ``w = N (K^2 - k^2 - (1 - rho) K^2)``, ``T = N beta``

where the Laplacian of ``u`` has been replaced by ``-k^2 u``.  Unknowns are
nodal values (and gradients) at the centres of a regular lattice of box
cells; piecewise-constant collocation turns the integrals into lattice
convolutions, applied by FFT or assembled densely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .fields import scalar_field, tensor_field
from .incident import IncidentField
from .linalg import SolveReport, solve_dense, solve_krylov
from .potentials import ball_self_integral, equal_volume_radius, green

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4096
PROBE_BLOCK = 8


# ---------------------------------------------------------------------------
# Grid and medium description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxGrid:
    """Regular lattice of ``shape`` box cells covering ``[lo, hi]``."""

    lo: np.ndarray
    hi: np.ndarray
    shape: tuple

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def nodes(self) -> np.ndarray:
        axes = [self.lo[i] + (np.arange(self.shape[i]) + 0.5) * self.spacing[i] for i in range(3)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)

    def axes(self) -> list:
        return [self.lo[i] + (np.arange(self.shape[i]) + 0.5) * self.spacing[i] for i in range(3)]


def make_box_grid(box, resolution: int) -> BoxGrid:
    """Cells of edge ``~ L_max / resolution`` (exactly tiling the box)."""
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if np.any(hi <= lo):
        raise ValidationError("box must have positive extent")
    if int(resolution) < 1:
        raise ValidationError("grid resolution must be at least 1")
    L = hi - lo
    h = L.max() / int(resolution)
    shape = tuple(int(max(1, round(li / h))) for li in L)
    return BoxGrid(lo, hi, shape)


FIELD_NAMES = ("N", "h", "c", "rho", "K2", "n0sq", "B", "beta", "rho_vol")
TENSOR_FIELDS = ("B", "beta")


@dataclass
class MediumSpec:
    """Box domain with parameter fields (see module docstring).

    Field values may be numbers, expression strings, callables or grid
    samples; see :func:`smallscat.fields.scalar_field`.
    """

    box: tuple
    fields: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.fields) - set(FIELD_NAMES)
        if unknown:
            raise ValidationError(f"unknown medium fields: {sorted(unknown)}")
        self._compiled = {}
        for name, spec in self.fields.items():
            self._compiled[name] = tensor_field(spec) if name in TENSOR_FIELDS else scalar_field(spec)

    def has(self, name: str) -> bool:
        return name in self._compiled

    def sample(self, name: str, points, default=None) -> np.ndarray:
        if name not in self._compiled:
            if default is None:
                raise ValidationError(f"medium field {name!r} is required")
            p = np.atleast_2d(points)
            return np.full(len(p), default, dtype=complex) if name not in TENSOR_FIELDS \
                else np.broadcast_to(np.asarray(default, complex), (len(p), 3, 3)).copy()
        return np.asarray(self._compiled[name](points), dtype=complex)

    def validate(self, points) -> None:
        """Sign constraints on the evaluation nodes."""
        tol = 1e-14
        checks = {
            "N": lambda v: np.all(np.abs(v.imag) <= tol) and np.all(v.real >= -tol),
            "h": lambda v: np.all(v.imag <= tol),
            "c": lambda v: np.all(v.real > 0),
            "rho": lambda v: np.all(v.real > 0),
            "K2": lambda v: np.all(v.real > 0),
            "n0sq": lambda v: np.all(v.imag >= -tol),
            "rho_vol": lambda v: np.all(v.real >= -tol),
        }
        messages = {"N": "N must be real and non-negative", "h": "Im h must be <= 0",
                    "c": "c must be positive", "rho": "rho must be positive", "K2": "K^2 must be positive",
                    "n0sq": "Im n0^2 must be >= 0", "rho_vol": "packing fraction must be non-negative"}
        for name, ok in checks.items():
            if name in self._compiled and not ok(self.sample(name, points)):
                raise ValidationError(f"medium constraint violated: {messages[name]}")


# ---------------------------------------------------------------------------
# Cell kernels
# ---------------------------------------------------------------------------


def _point_kernels(D: np.ndarray, k: float, dipole: bool):
    """Pointwise ``g``, ``g n``, ``g' n`` and grad of ``g n`` at offsets ``D``."""
    R = np.sqrt(np.einsum("...k,...k->...", D, D))
    g = green(R, k)
    if not dipole:
        return g, None, None, None
    n = D / R[..., None]
    gp = g * (1j * k - 1.0 / R)
    nn = n[..., :, None] * n[..., None, :]
    k3 = (gp - g / R)[..., None, None] * nn + (g / R)[..., None, None] * np.eye(3)
    return g, g[..., None] * n, gp[..., None] * n, k3


def _sub_offsets(spacing: np.ndarray, n: int) -> np.ndarray:
    t = (np.arange(n) + 0.5) / n - 0.5
    return np.stack(np.meshgrid(t, t, t, indexing="ij"), axis=-1).reshape(-1, 3) * spacing


def cell_kernels(rel, spacing, k: float, self_term: str = "ball", dipole: bool = False,
                 near_factor: float = 1.5, n_sub: int = 4):
    """Integrals over a box cell of the four kernels, for target offsets
    ``rel = x - cell_centre`` of shape ``(T, 3)``.

    Returns ``K0 (T,)`` and, with ``dipole``, ``K1 (T,3)``, ``K2 (T,3)``,
    ``K3 (T,3,3)``: the cell integrals of ``g``, ``g n``, ``grad g`` and
    ``grad (g n)``.  Cells near the target use ``n_sub**3`` sub-points; a
    target at the cell centre gets the equal-volume-ball values (or zero
    with ``self_term="omit"``).
    """
    if self_term not in ("ball", "omit"):
        raise ValidationError(f"unknown self_term {self_term!r}")
    rel = np.atleast_2d(np.asarray(rel, dtype=float))
    spacing = np.asarray(spacing, dtype=float)
    vol = float(np.prod(spacing))
    hmax = spacing.max()
    R = np.linalg.norm(rel, axis=1)
    self_mask = R < 1e-9 * hmax
    near = (R < near_factor * hmax) & ~self_mask
    far = ~(near | self_mask)
    T = len(rel)
    K0 = np.zeros(T, dtype=complex)
    K1 = K2 = K3 = None
    if dipole:
        K1 = np.zeros((T, 3), dtype=complex)
        K2 = np.zeros((T, 3), dtype=complex)
        K3 = np.zeros((T, 3, 3), dtype=complex)
    if far.any():
        out = _point_kernels(rel[far], k, dipole)
        K0[far] = out[0] * vol
        if dipole:
            K1[far], K2[far], K3[far] = (o * vol for o in out[1:])
    if near.any():
        D = rel[near][:, None, :] - _sub_offsets(spacing, n_sub)[None, :, :]
        out = _point_kernels(D, k, dipole)
        K0[near] = out[0].mean(axis=1) * vol
        if dipole:
            K1[near], K2[near], K3[near] = (o.mean(axis=1) * vol for o in out[1:])
    if self_mask.any() and self_term == "ball":
        r = float(equal_volume_radius(vol))
        K0[self_mask] = ball_self_integral(r, k)
        if dipole:
            K3[self_mask] = np.eye(3) * (r * np.exp(1j * k * r) / 3.0)
    return K0, K1, K2, K3


class CollocationOperator:
    """Lattice convolutions with the cell kernels of a :class:`BoxGrid`."""

    def __init__(self, grid: BoxGrid, k: float, self_term: str = "ball", dipole: bool = False,
                 near_factor: float = 1.5, n_sub: int = 4):
        self.grid, self.k, self.self_term, self.dipole = grid, k, self_term, dipole
        n = np.asarray(grid.shape)
        idx = np.stack(np.meshgrid(*[np.arange(-(m - 1), m) for m in n], indexing="ij"), axis=-1).reshape(-1, 3)
        self._offsets = idx
        K0, K1, K2, K3 = cell_kernels(idx * grid.spacing, grid.spacing, k, self_term, dipole, near_factor, n_sub)
        self._K = {"K0": K0}
        if dipole:
            self._K.update(K1=K1, K2=K2, K3=K3)
        self._fft = {}
        L = tuple(2 * n)
        pos = tuple((idx % (2 * n)).T)
        for name, K in self._K.items():
            arr = K.reshape(len(idx), -1)
            emb = np.zeros(L + (arr.shape[1],), dtype=complex)
            emb[pos] = arr
            self._fft[name] = np.fft.fftn(emb, axes=(0, 1, 2))
        self._L = L

    def _conv(self, name: str, f: np.ndarray) -> np.ndarray:
        """``out_p[c] = sum_q K(p - q)[c, s] f_q[s]`` for component-shaped kernels."""
        n = self.grid.shape
        F = np.zeros(self._L + f.shape[1:], dtype=complex)
        F[: n[0], : n[1], : n[2]] = f.reshape(tuple(n) + f.shape[1:])
        Ff = np.fft.fftn(F, axes=(0, 1, 2))
        Kf = self._fft[name]
        if name == "K0":
            prod = Kf[..., 0] * Ff
        elif name in ("K1",):  # scalar output from vector input
            prod = np.einsum("abcs,abcs->abc", Kf, Ff)
        elif name == "K2":  # vector output from scalar input
            prod = Kf * Ff[..., None]
        else:  # K3: vector from vector
            prod = np.einsum("abcrs,abcs->abcr", Kf.reshape(Kf.shape[:3] + (3, 3)), Ff)
        out = np.fft.ifftn(prod, axes=(0, 1, 2))[: n[0], : n[1], : n[2]]
        return out.reshape((self.grid.n_nodes,) + out.shape[3:])

    def apply(self, c: np.ndarray, d: np.ndarray | None = None, gradient: bool = False):
        """Field (and gradient) at the nodes of monopoles ``c`` and dipoles ``d``."""
        val = self._conv("K0", c)
        if d is not None:
            val = val + self._conv("K1", d)
        if not gradient:
            return val, None
        grad = self._conv("K2", c)
        if d is not None:
            grad = grad + self._conv("K3", d)
        return val, grad

    def dense(self):
        """Dense ``(P, P, ...)`` kernel matrices (small grids only)."""
        n = np.asarray(self.grid.shape)
        ijk = np.stack(np.unravel_index(np.arange(self.grid.n_nodes), tuple(n)), axis=-1)
        diff = ijk[:, None, :] - ijk[None, :, :] + (n - 1)
        flat = np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)), tuple(2 * n - 1))
        return {name: K[flat] for name, K in self._K.items()}


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


@dataclass
class CollocationSolution:
    bc: str
    k: float
    grid: BoxGrid
    values: np.ndarray
    gradients: np.ndarray | None
    weight: np.ndarray
    dipole_tensor: np.ndarray | None
    report: SolveReport
    self_term: str = "ball"
    meta: dict = field(default_factory=dict)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def residual(self) -> float:
        return self.report.residual

    def sources(self):
        c = self.weight * self.values
        d = None if self.dipole_tensor is None else \
            1j * self.k * np.einsum("pqs,ps->pq", self.dipole_tensor, self.gradients)
        return c, d

    def evaluate(self, x, incident: IncidentField) -> np.ndarray:
        """Field at arbitrary points from the collocated representation."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        c, d = self.sources()
        nodes = self.grid.nodes
        out = incident.value(pts).astype(complex)
        for s in range(0, len(pts), PROBE_BLOCK):
            blk = pts[s:s + PROBE_BLOCK]
            rel = (blk[:, None, :] - nodes[None, :, :]).reshape(-1, 3)
            K0, K1, _, _ = cell_kernels(rel, self.grid.spacing, self.k, self.self_term, d is not None)
            v = (K0.reshape(len(blk), -1) * c).sum(axis=1)
            if d is not None:
                v = v + np.einsum("tps,ps->t", K1.reshape(len(blk), -1, 3), d)
            out[s:s + len(blk)] += v
        return out


def _solve_system(grid: BoxGrid, k: float, incident: IncidentField, w: np.ndarray, T: np.ndarray | None,
                  bc: str, self_term: str, method: str, tol: float) -> CollocationSolution:
    P = grid.n_nodes
    nodes = grid.nodes
    dipole = T is not None and np.any(T != 0)
    Tm = T if dipole else None
    u0 = incident.value(nodes)
    n_unknowns = 4 * P if dipole else P
    if method == "auto":
        method = "dense" if n_unknowns <= DENSE_LIMIT else "fft"
    if not np.any(w != 0) and not dipole:
        grads = incident.gradient(nodes) if T is not None else None
        return CollocationSolution(bc, k, grid, u0, grads, w, T, SolveReport(1.0, 0.0, "none"), self_term,
                                   meta={"P": P})
    op = CollocationOperator(grid, k, self_term, dipole)
    ikT = 1j * k * Tm if dipole else None
    if not dipole:
        if method == "dense":
            K = op.dense()["K0"]
            x, rep = solve_dense(np.eye(P) - K * w[None, :], u0, f"{bc} collocation system")
        elif method == "fft":
            x, rep = solve_krylov(lambda v: v - op.apply(w * v)[0], u0, f"{bc} collocation system", tol=tol)
        else:
            raise ValidationError(f"unknown method {method!r}")
        grads = incident.gradient(nodes) if T is not None else None
        if T is not None:
            # no dipoles: gradients follow from the monopole field directly
            grads = grads + _gradient_of_monopoles(op, w * x, grid, k, self_term)
        return CollocationSolution(bc, k, grid, x, grads, w, T, rep, self_term, meta={"P": P, "method": method})
    X0 = np.concatenate([u0, incident.gradient(nodes).reshape(-1)])
    if method == "dense":
        Kd = op.dense()
        M = np.zeros((4 * P, 4 * P), dtype=complex)
        M[:P, :P] = Kd["K0"] * w[None, :]
        M[:P, P:] = np.einsum("pqr,qrs->pqs", Kd["K1"], ikT).reshape(P, 3 * P)
        M[P:, :P] = (Kd["K2"] * w[None, :, None]).transpose(0, 2, 1).reshape(3 * P, P)
        M[P:, P:] = np.einsum("pqrt,qts->prqs", Kd["K3"], ikT).reshape(3 * P, 3 * P)
        X, rep = solve_dense(np.eye(4 * P) - M, X0, f"{bc} collocation system")
    elif method == "fft":
        def matvec(v):
            u, gr = v[:P], v[P:].reshape(P, 3)
            val, grad = op.apply(w * u, np.einsum("prs,ps->pr", ikT, gr), gradient=True)
            return v - np.concatenate([val, grad.reshape(-1)])

        X, rep = solve_krylov(matvec, X0, f"{bc} collocation system", tol=tol)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return CollocationSolution(bc, k, grid, X[:P], X[P:].reshape(P, 3), w, T, rep, self_term,
                               meta={"P": P, "method": method})


def _gradient_of_monopoles(op, c, grid, k, self_term):
    op2 = CollocationOperator(grid, k, self_term, dipole=True)
    return op2.apply(c, None, gradient=True)[1]


def _prepare(spec: MediumSpec, grid: BoxGrid | int):
    if not isinstance(grid, BoxGrid):
        grid = make_box_grid(spec.box, int(grid))
    nodes = grid.nodes
    spec.validate(nodes)
    return grid, nodes


def solve_limit_dirichlet(spec: MediumSpec, k: float, incident: IncidentField, grid=16, self_term: str = "ball",
                          method: str = "auto", tol: float = 1e-10) -> CollocationSolution:
    """``u = u0 - int_D g c N u``; ``c`` defaults to ``4 pi`` (balls)."""
    grid, nodes = _prepare(spec, grid)
    w = -(spec.sample("c", nodes, 4.0 * np.pi) * spec.sample("N", nodes))
    return _solve_system(grid, k, incident, w, None, "dirichlet", self_term, method, tol)


def solve_limit_impedance(spec: MediumSpec, k: float, b: float, incident: IncidentField, grid=16,
                          self_term: str = "ball", method: str = "auto", tol: float = 1e-10) -> CollocationSolution:
    """``u = u0 - b int_D g N h u``."""
    if not b > 0:
        raise ValidationError("b must be positive")
    grid, nodes = _prepare(spec, grid)
    w = -b * spec.sample("N", nodes) * spec.sample("h", nodes)
    return _solve_system(grid, k, incident, w, None, "impedance", self_term, method, tol)


def solve_limit_neumann(spec: MediumSpec, k: float, incident: IncidentField, grid=12, self_term: str = "ball",
                        method: str = "auto", tol: float = 1e-10) -> CollocationSolution:
    """``u = u0 + int_D g (-k^2 rho_vol u + ik n_p B_pq du/dy_q)``."""
    grid, nodes = _prepare(spec, grid)
    w = -(k**2) * spec.sample("rho_vol", nodes, 0.0)
    T = spec.sample("B", nodes, np.zeros((3, 3)))
    return _solve_system(grid, k, incident, w, T, "neumann", self_term, method, tol)


def solve_limit_transmission(spec: MediumSpec, k: float, incident: IncidentField, grid=12, self_term: str = "ball",
                             method: str = "auto", tol: float = 1e-10) -> CollocationSolution:
    """``u = u0 + int_D g N [((K^2 - k^2) - (1 - rho) K^2) u + ik n_p beta_pq du/dy_q]``."""
    grid, nodes = _prepare(spec, grid)
    N = spec.sample("N", nodes)
    K2 = spec.sample("K2", nodes, k**2)
    rho = spec.sample("rho", nodes, 1.0)
    w = N * ((K2 - k**2) - (1.0 - rho) * K2)
    T = N[:, None, None] * spec.sample("beta", nodes, np.zeros((3, 3)))
    return _solve_system(grid, k, incident, w, T, "transmission", self_term, method, tol)


def pde_residual(sol: CollocationSolution) -> float:
    """Relative residual of ``(lap + k^2 + w) u = 0`` at interior nodes.

    Uses the 7-point Laplacian on the nodal values; only nodes whose six
    neighbours are on the grid are included.
    """
    n = sol.grid.shape
    if min(n) < 3:
        raise ValidationError("grid too small for a finite-difference residual")
    h = sol.grid.spacing
    u = sol.values.reshape(n)
    w = sol.weight.reshape(n)
    c = (slice(1, -1),) * 3
    lap = -2.0 * u[c] * (1.0 / h**2).sum()
    for ax in range(3):
        hi = [slice(1, -1)] * 3
        lo = [slice(1, -1)] * 3
        hi[ax] = slice(2, None)
        lo[ax] = slice(None, -2)
        lap = lap + (u[tuple(hi)] + u[tuple(lo)]) / h[ax] ** 2
    r = lap + (sol.k**2 + w[c]) * u[c]
    return float(np.linalg.norm(r) / np.linalg.norm(u[c]))


def cauchy_differences(solutions) -> list:
    """Max nodal change between consecutive grids (each twice as fine).

    Coarse nodes are compared with the average of the fine nodes in their cell.
    """
    out = []
    for coarse, fine in zip(solutions[:-1], solutions[1:]):
        nc, nf = np.asarray(coarse.grid.shape), np.asarray(fine.grid.shape)
        if np.any(nf != 2 * nc):
            raise ValidationError("consecutive grids must halve the spacing")
        uf = fine.values.reshape(tuple(nf))
        avg = uf.reshape(nc[0], 2, nc[1], 2, nc[2], 2).mean(axis=(1, 3, 5)).reshape(-1)
        out.append(float(np.abs(avg - coarse.values).max()))
    return out


# ---------------------------------------------------------------------------
# Refraction coefficient and material design
# ---------------------------------------------------------------------------


def refraction_coefficient(q, k: float) -> np.ndarray:
    """``n^2 = 1 - q / k^2``."""
    if not k > 0:
        raise ValidationError("wavenumber must be positive")
    return 1.0 - np.asarray(q, dtype=complex) / k**2


def design_material(n2_target, k: float, b: float):
    """Split ``q = k^2 (1 - n^2)`` as ``b N h`` with ``N >= 0`` and ``|h| = 1``.

    Returns ``(N, h)``; ``h = 0`` where ``q = 0``.
    """
    if not k > 0 or not b > 0:
        raise ValidationError("k and b must be positive")
    n2 = np.asarray(n2_target, dtype=complex)
    if np.any(n2.imag < 0):
        raise ValidationError("target refraction coefficient must have Im n^2 >= 0")
    q = k**2 * (1.0 - n2)
    mag = np.abs(q)
    N = mag / b
    h = np.where(mag > 0, q / np.where(mag > 0, mag, 1.0), 0.0)
    return N, h


# ---------------------------------------------------------------------------
# Green's function of an inhomogeneous background
# ---------------------------------------------------------------------------


class BackgroundGreen:
    """Solves ``G(., y) = g(., y) + k^2 int_D g (n0^2 - 1) G(z, y) dz``.

    The correction ``w = G - g`` is the unknown, so zero contrast returns
    ``g`` exactly.  Solutions are cached per source point.
    """

    def __init__(self, spec: MediumSpec, k: float, grid=16, self_term: str = "ball", tol: float = 1e-10,
                 n_sub: int = 4):
        if not k > 0:
            raise ValidationError("wavenumber must be positive")
        self.grid, nodes = _prepare(spec, grid)
        self.k, self.self_term, self.tol, self.n_sub = k, self_term, tol, n_sub
        self.m = spec.sample("n0sq", nodes, 1.0) - 1.0
        self.zero = not np.any(self.m != 0)
        self._op = None if self.zero else CollocationOperator(self.grid, k, self_term)
        self._cache = {}
        self.reports = {}

    def _cell_average_g(self, y: np.ndarray) -> np.ndarray:
        """Cell averages of ``g(z, y)`` (ball value when ``y`` is a node)."""
        K0, *_ = cell_kernels(self.grid.nodes - y, self.grid.spacing, self.k, "ball", n_sub=self.n_sub)
        return K0 / self.grid.cell_volume

    def correction_nodes(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(3)
        key = tuple(y)
        if key not in self._cache:
            P = self.grid.n_nodes
            if self.zero:
                self._cache[key] = np.zeros(P, dtype=complex)
            else:
                k2m = self.k**2 * self.m
                gbar = self._cell_average_g(y)
                rhs = self._op.apply(k2m * gbar)[0]
                wv, rep = solve_krylov(lambda v: v - self._op.apply(k2m * v)[0], rhs,
                                       "background Green's function", tol=self.tol)
                self.reports[key] = rep
                self._cache[key] = wv
        return self._cache[key]

    def __call__(self, x, y) -> np.ndarray:
        """``G(x, y)`` at points ``x`` (n, 3) for one source ``y``."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float).reshape(3)
        r = np.linalg.norm(pts - y, axis=1)
        if np.any(r == 0):
            raise ValidationError("G(x, y) is singular at x = y")
        G = green(r, self.k)
        if self.zero:
            return G
        wv = self.correction_nodes(y)
        src = self.k**2 * self.m * (self._cell_average_g(y) + wv)
        nodes = self.grid.nodes
        for s in range(0, len(pts), PROBE_BLOCK):
            blk = pts[s:s + PROBE_BLOCK]
            rel = (blk[:, None, :] - nodes[None, :, :]).reshape(-1, 3)
            K0, *_ = cell_kernels(rel, self.grid.spacing, self.k, self.self_term)
            G[s:s + len(blk)] += (K0.reshape(len(blk), -1) * src).sum(axis=1)
        return G

    def kernel(self, targets, sources) -> np.ndarray:
        """Matrix ``G(targets_i, sources_j)``; the diagonal of a square
        self-interaction matrix is left as zero."""
        t = np.atleast_2d(np.asarray(targets, dtype=float))
        s = np.atleast_2d(np.asarray(sources, dtype=float))
        out = np.zeros((len(t), len(s)), dtype=complex)
        for j, y in enumerate(s):
            mask = np.linalg.norm(t - y, axis=1) > 0
            out[mask, j] = self(t[mask], y)
        return out


def greens_function_background(spec: MediumSpec, k: float, y, points, grid=16, self_term: str = "ball",
                               tol: float = 1e-10) -> np.ndarray:
    return BackgroundGreen(spec, k, grid, self_term, tol)(points, y)


def born_first_term(spec: MediumSpec, k: float, y, points, grid=16) -> np.ndarray:
    """``k^2 int_D g(x, z) (n0^2 - 1) g(z, y) dz`` on the same lattice."""
    bg = BackgroundGreen(spec, k, grid)
    if bg.zero:
        return np.zeros(len(np.atleast_2d(points)), dtype=complex)
    src = k**2 * bg.m * bg._cell_average_g(np.asarray(y, float))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nodes = bg.grid.nodes
    rel = (pts[:, None, :] - nodes[None, :, :]).reshape(-1, 3)
    K0, *_ = cell_kernels(rel, bg.grid.spacing, k, "ball")
    return (K0.reshape(len(pts), -1) * src).sum(axis=1)
