import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallscat.errors import ValidationError
from smallscat.fields import Expression, scalar_field, tensor_field

PTS = np.array([[0.0, 0.0, 0.0], [0.5, -1.0, 2.0], [1.0, 1.0, 1.0]])


def test_expression_arithmetic():
    f = Expression("1 + 2*x - y^2 / 4 + sin(pi*z)")
    x, y, z = PTS.T
    assert np.allclose(f(PTS), 1 + 2 * x - y**2 / 4 + np.sin(np.pi * z))


def test_complex_literals():
    assert np.allclose(Expression("1.2 + 0.1i")(PTS), 1.2 + 0.1j)
    assert np.allclose(Expression("2j*x")(PTS), 2j * PTS[:, 0])
    assert np.allclose(Expression("1e-1i")(PTS), 0.1j)


def test_functions_and_unary():
    f = Expression("-exp(-x) + sqrt(abs(y)) + cos(+z)")
    x, y, z = PTS.T
    assert np.allclose(f(PTS), -np.exp(-x) + np.sqrt(np.abs(y)) + np.cos(z))


@pytest.mark.parametrize("bad", ["__import__('os')", "x.real", "open(1)", "lambda: 1", "x if y else z",
                                 "[1, 2]", "w + 1", "sin(x, y)", "x % 2", "'a'", "1 +"])
def test_rejected_expressions(bad):
    with pytest.raises(ValidationError):
        Expression(bad)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-100, 100), b=st.floats(-100, 100))
def test_linear_expression_matches_numpy(a, b):
    f = Expression(f"({a!r})*x + ({b!r})")
    assert np.allclose(f(PTS), a * PTS[:, 0] + b, rtol=1e-12, atol=1e-12)


def test_scalar_field_forms():
    assert np.allclose(scalar_field(2.5)(PTS), 2.5)
    assert np.allclose(scalar_field("x")(PTS), PTS[:, 0])
    assert np.allclose(scalar_field({"expr": "y"})(PTS), PTS[:, 1])
    assert np.allclose(scalar_field(lambda p: p[:, 2])(PTS), PTS[:, 2])
    with pytest.raises(ValidationError):
        scalar_field([1, 2, 3])
    with pytest.raises(ValidationError):
        scalar_field({"foo": 1})


def test_grid_samples_reproduce_trilinear_functions():
    ax = [np.linspace(-1, 2, 4), np.linspace(-2, 2, 5), np.linspace(0, 3, 3)]
    X, Y, Z = np.meshgrid(*ax, indexing="ij")
    f = scalar_field({"axes": ax, "values": 1 + X - 2 * Y + 0.5j * Z})
    x, y, z = PTS.T
    assert np.allclose(f(PTS), 1 + x - 2 * y + 0.5j * z)


def test_tensor_field_forms():
    t = tensor_field(-1.5)(PTS)
    assert t.shape == (3, 3, 3) and np.allclose(t, -1.5 * np.eye(3))
    spec = [["x", 0, 0], [0, "y", 0], [0, 0, 1]]
    t = tensor_field(spec)(PTS)
    assert np.allclose(t[:, 0, 0], PTS[:, 0]) and np.allclose(t[:, 1, 1], PTS[:, 1]) and np.allclose(t[:, 2, 2], 1)
    with pytest.raises(ValidationError):
        tensor_field([[1, 2], [3, 4]])
