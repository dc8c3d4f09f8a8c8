import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reference import random_rotation
from smallscat.errors import ValidationError
from smallscat.geometry import ellipsoid_area, make_cube_mesh, make_ellipsoid_mesh
from smallscat.shapes import (
    capacitance_bem,
    capacitance_zeroth,
    charge_Q_sigma_q,
    polarizability_tensor,
    shape_functionals,
)

# cube capacitance in units of 4 pi * side (literature value, random-walk and BEM studies)
CUBE_CAPACITANCE = 0.6606785 * 4 * np.pi


def sphere_polarizability(lam):
    """Closed form for the unit ball: the operator acts on first-degree
    harmonics with eigenvalue -1/3."""
    return -6.0 * lam / (3.0 + lam)


@pytest.fixture(scope="module")
def ellipsoid3():
    return make_ellipsoid_mesh((1, 1, 2), 3)


@pytest.fixture(scope="module")
def cube3():
    return make_cube_mesh(1.0, 3)


def test_sphere_capacitance_zeroth(sphere3):
    assert abs(capacitance_zeroth(sphere3) / (4 * np.pi) - 1) <= 0.01


def test_sphere_capacitance_bem(sphere3):
    assert abs(capacitance_bem(sphere3) / (4 * np.pi) - 1) <= 0.005


@pytest.mark.parametrize("s", [0.01, 0.5, 3.0])
def test_capacitance_homogeneity(sphere2, s):
    assert capacitance_zeroth(sphere2.scaled(s)) == pytest.approx(s * capacitance_zeroth(sphere2), rel=1e-12)
    assert capacitance_bem(sphere2.scaled(s)) == pytest.approx(s * capacitance_bem(sphere2), rel=1e-10)


def test_cube_capacitance(cube3):
    cz, cb = capacitance_zeroth(cube3), capacitance_bem(cube3)
    assert abs(cz / cb - 1) <= 0.03
    assert abs(cb / CUBE_CAPACITANCE - 1) <= 0.01


def test_capacitance_rotation_invariance(sphere2, rng):
    e = make_ellipsoid_mesh((1, 1.4, 0.7), 2)
    R = random_rotation(rng)
    assert abs(capacitance_bem(e.transformed(R)) - capacitance_bem(e)) <= 1e-10 * capacitance_bem(e)


def test_capacitance_equal_area_pair(sphere3):
    # frozen oracle values (refinement 3); the prolate closed form is
    # 4 pi sqrt(c^2 - a^2) / acosh(c / a)
    axes = np.array([1.0, 1.0, 2.0]) * np.sqrt(4 * np.pi / ellipsoid_area(1, 1, 2))
    e = make_ellipsoid_mesh(axes, 3)
    a, c = axes[0], axes[2]
    exact = 4 * np.pi * np.sqrt(c**2 - a**2) / np.arccosh(c / a)
    cs, ce = capacitance_bem(sphere3), capacitance_bem(e)
    assert cs == pytest.approx(12.572262841496348, rel=1e-9)
    assert ce == pytest.approx(12.640634806078141, rel=1e-9)
    assert abs(ce / exact - 1) < 1e-3
    assert cs < ce


@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "cube"])
def test_capacitance_estimates_agree(name, sphere3, ellipsoid3, cube3):
    mesh = {"sphere": sphere3, "ellipsoid": ellipsoid3, "cube": cube3}[name]
    assert abs(capacitance_zeroth(mesh) / capacitance_bem(mesh) - 1) <= 0.03


def test_sphere_polarizability(sphere3):
    beta = polarizability_tensor(sphere3, 1.0)
    assert np.max(np.abs(beta + 1.5 * np.eye(3))) <= 0.02 * 1.5


def test_zero_lambda_gives_zero_tensor(ellipsoid3):
    assert np.array_equal(polarizability_tensor(ellipsoid3, 0.0), np.zeros((3, 3)))
    assert np.array_equal(charge_Q_sigma_q(ellipsoid3, 0.0), np.zeros(3))


@pytest.mark.parametrize("lam", [-1.0, 1.5, -3.0])
def test_lambda_out_of_range(sphere2, lam):
    with pytest.raises(ValidationError):
        polarizability_tensor(sphere2, lam)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.sampled_from([1.0, 0.4, -0.6]))
def test_polarizability_equivariance(seed, lam):
    mesh = make_ellipsoid_mesh((1.0, 1.3, 0.6), 2)
    R = random_rotation(np.random.default_rng(seed))
    beta = polarizability_tensor(mesh, lam)
    rotated = polarizability_tensor(mesh.transformed(R), lam)
    assert np.max(np.abs(rotated - R @ beta @ R.T)) <= 1e-8


def test_polarizability_translation_invariance(sphere2):
    b0 = polarizability_tensor(sphere2, 1.0)
    b1 = polarizability_tensor(sphere2.translated([3.0, -1.0, 2.0]), 1.0)
    assert np.max(np.abs(b1 - b0)) <= 1e-10


def test_polarizability_matches_sphere_closed_form_and_is_lipschitz(sphere2):
    lams = [-0.5, 0.0, 0.5, 1.0]
    betas = [polarizability_tensor(sphere2, lam) for lam in lams]
    for lam, b in zip(lams, betas):
        assert np.allclose(b, sphere_polarizability(lam) * np.eye(3), atol=0.02)
    slopes = [np.max(np.abs(b1 - b0)) / 0.5 for b0, b1 in zip(betas[:-1], betas[1:])]
    assert max(slopes) <= 3.0


def test_symmetric_body_has_diagonal_tensor(ellipsoid3):
    beta = polarizability_tensor(ellipsoid3, 1.0)
    off = beta - np.diag(np.diag(beta))
    assert np.max(np.abs(off)) <= 1e-6 * np.linalg.norm(beta)
    # prolate along z: smaller magnitude along the long axis
    assert abs(beta[2, 2]) < abs(beta[0, 0])


def test_charge_Q_sigma_q(sphere2, sphere3):
    for mesh in (sphere2, sphere3):
        q = charge_Q_sigma_q(mesh, 1.0)
        assert q.shape == (3,)
        assert np.all(np.abs(q) <= 1e-2 * mesh.area())
        # discrete divergence theorem makes it vanish to roundoff
        assert np.all(np.abs(q) <= 1e-12 * mesh.area())


def test_shape_functionals_record(sphere2):
    rec = shape_functionals(sphere2, 1.0).as_dict()
    assert set(rec) == {"capacitance_zeroth", "capacitance_bem", "polarizability", "volume", "area"}
    assert rec["polarizability"]["lambda"] == 1.0
    assert np.asarray(rec["polarizability"]["tensor"]).shape == (3, 3)
