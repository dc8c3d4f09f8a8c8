"""Scalar and tensor parameter fields given as expressions, constants or grids.

Expression grammar (a restricted subset of Python syntax)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | power
    power  := atom ('^' factor)?
    atom   := number | complex literal (e.g. 0.1i, 2j) | x | y | z | pi
            | func '(' expr ')' | '(' expr ')'
    func   := exp | sin | cos | sqrt | abs

``^`` is exponentiation.  Parsing goes through :mod:`ast` and only the node
types above are accepted.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ValidationError

_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt, "abs": np.abs}
_CONSTS = {"pi": np.pi}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide,
           ast.Pow: np.power}
_IMAG = re.compile(r"(?<![A-Za-z_])((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i\b")


def _translate(text: str) -> str:
    return _IMAG.sub(r"\1j", text).replace("^", "**")


class Expression:
    """Compiled arithmetic expression in ``x, y, z``."""

    def __init__(self, text: str):
        self.text = str(text)
        try:
            tree = ast.parse(_translate(self.text), mode="eval")
        except SyntaxError as exc:
            raise ValidationError(f"cannot parse expression {self.text!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ValidationError(f"operator not allowed in {self.text!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise ValidationError(f"operator not allowed in {self.text!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float, complex)) or isinstance(node.value, bool):
                raise ValidationError(f"literal {node.value!r} not allowed in {self.text!r}")
        elif isinstance(node, ast.Name):
            if node.id not in ("x", "y", "z") and node.id not in _CONSTS:
                raise ValidationError(f"unknown name {node.id!r} in {self.text!r}")
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS) or len(node.args) != 1 \
                    or node.keywords:
                raise ValidationError(f"unsupported function call in {self.text!r}")
            self._check(node.args[0])
        else:
            raise ValidationError(f"unsupported syntax in {self.text!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        return _FUNCS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        env = {"x": p[:, 0], "y": p[:, 1], "z": p[:, 2]}
        with np.errstate(all="ignore"):
            v = self._eval(self._tree, env)
        return np.broadcast_to(np.asarray(v), (len(p),)).astype(complex)

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"


@dataclass(frozen=True)
class GridSamples:
    """Samples on a tensor-product grid with trilinear interpolation."""

    axes: tuple
    values: np.ndarray

    def __call__(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        interp = RegularGridInterpolator(tuple(np.asarray(a, float) for a in self.axes),
                                         np.asarray(self.values, dtype=complex), bounds_error=False,
                                         fill_value=None)
        return interp(p)


def scalar_field(spec):
    """Turn a number, complex string, expression string, callable or
    ``{"axes": [...], "values": [...]}`` mapping into a callable on ``(n, 3)``."""
    if callable(spec):
        return spec
    if isinstance(spec, dict):
        if "expr" in spec:
            return Expression(spec["expr"])
        if "axes" in spec and "values" in spec:
            return GridSamples(tuple(spec["axes"]), np.asarray(spec["values"]))
        raise ValidationError(f"cannot interpret field specification {spec!r}")
    if isinstance(spec, str):
        return Expression(spec)
    if isinstance(spec, (int, float, complex, np.number)):
        c = complex(spec)
        return lambda p, c=c: np.full(len(np.atleast_2d(p)), c)
    raise ValidationError(f"cannot interpret field specification {spec!r}")


def tensor_field(spec):
    """3x3 tensor field: a scalar (times identity), a 3x3 nested list of
    scalar specs, or a callable returning ``(n, 3, 3)``."""
    if callable(spec):
        return spec
    arr = np.asarray(spec, dtype=object)
    if arr.shape == ():
        f = scalar_field(spec)
        return lambda p: f(p)[:, None, None] * np.eye(3)
    if arr.shape != (3, 3):
        raise ValidationError("tensor field must be a scalar or a 3x3 array")
    comps = [[scalar_field(arr[i, j]) for j in range(3)] for i in range(3)]

    def ev(p):
        p = np.atleast_2d(p)
        return np.stack([np.stack([comps[i][j](p) for j in range(3)], axis=-1) for i in range(3)], axis=-2)

    return ev
