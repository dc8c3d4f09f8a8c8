"""Independent reference values used as test oracles.

Nothing here imports the package: these are closed forms and partial-wave
series written from scratch so the solvers can be checked against them.
"""

import numpy as np
from scipy.special import eval_legendre, spherical_jn, spherical_yn


def _h1(n, x, derivative=False):
    return spherical_jn(n, x, derivative) + 1j * spherical_yn(n, x, derivative)


def sphere_amplitude(ka, k, theta, kind, n_terms=None):
    """Exact far-field amplitude of a plane wave ``exp(ikz)`` scattered by a
    sphere of radius ``ka / k`` centred at the origin.

    ``kind`` is ``"soft"`` (u = 0) or ``"hard"`` (du/dn = 0).  The amplitude
    multiplies ``exp(ikr) / r``.
    """
    n_terms = n_terms or int(ka + 12)
    n = np.arange(n_terms)
    if kind == "soft":
        c = -spherical_jn(n, ka) / _h1(n, ka)
    elif kind == "hard":
        c = -spherical_jn(n, ka, True) / _h1(n, ka, True)
    else:
        raise ValueError(kind)
    mu = np.cos(np.atleast_1d(theta))
    P = np.stack([eval_legendre(j, mu) for j in n], axis=0)
    return (-1j / k) * ((2 * n + 1) * c) @ P


def penetrable_sphere_amplitude(a, k, k1, rho, theta, n_terms=12):
    """Exact amplitude for a penetrable sphere with interior wavenumber
    ``k1`` and interface conditions ``u`` continuous, ``rho du/dn(inside)
    = du/dn(outside)``."""
    n = np.arange(n_terms)
    x, x1 = k * a, k1 * a
    j, jp = spherical_jn(n, x), spherical_jn(n, x, True)
    h, hp = _h1(n, x), _h1(n, x, True)
    j1, j1p = spherical_jn(n, x1), spherical_jn(n, x1, True)
    # j + c h = d j1 ; k (j' + c h') = rho k1 d j1'
    c = (rho * k1 * j1p * j - k * jp * j1) / (k * hp * j1 - rho * k1 * j1p * h)
    mu = np.cos(np.atleast_1d(theta))
    P = np.stack([eval_legendre(m, mu) for m in n], axis=0)
    return (-1j / k) * ((2 * n + 1) * c) @ P


def rayleigh_hard(k, a, theta):
    """Leading low-frequency amplitude of a hard sphere."""
    return -(k**2 * a**3 / 3.0) * (1.0 - 1.5 * np.cos(theta))


def green(x, y, k):
    r = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    return np.exp(1j * k * r) / (4 * np.pi * r)


def box_born_term(k, box, eps, x, y, n=24):
    """``k^2 eps int_box g(x, z) g(z, y) dz`` by tensor Gauss-Legendre
    quadrature; valid for ``x`` and ``y`` outside the box."""
    lo, hi = (np.asarray(b, float) for b in box)
    t, w = np.polynomial.legendre.leggauss(n)
    axes = [0.5 * (lo[i] + hi[i]) + 0.5 * (hi[i] - lo[i]) * t for i in range(3)]
    wts = [0.5 * (hi[i] - lo[i]) * w for i in range(3)]
    Z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    W = np.einsum("i,j,k->ijk", *wts).reshape(-1)
    return k**2 * eps * np.sum(W * green(x, Z, k) * green(Z, y, k))


def random_rotation(rng):
    """Uniformly random proper rotation matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
