"""Incident fields: plane waves and user-supplied Helmholtz solutions.

Every field evaluates on arrays of points with shape ``(n, 3)`` (a single
point ``(3,)`` is promoted) and returns values ``(n,)``, gradients
``(n, 3)`` and Laplacians ``(n,)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError


def _points(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


class IncidentField:
    """Common interface; subclasses implement value/gradient/laplacian."""

    kind = "abstract"

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, x) -> np.ndarray:
        raise NotImplementedError

    def normal_derivative(self, x, normals) -> np.ndarray:
        return np.einsum("ij,ij->i", self.gradient(x), np.atleast_2d(normals))

    def scaled(self, factor: complex) -> "IncidentField":
        return Superposition([(factor, self)])

    def __add__(self, other: "IncidentField") -> "IncidentField":
        return Superposition([(1.0, self), (1.0, other)])

    def describe(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class PlaneWave(IncidentField):
    """``amplitude * exp(i k direction . x)``."""

    direction: tuple
    k: float
    amplitude: complex = 1.0

    kind = "plane"

    def __post_init__(self):
        a = np.asarray(self.direction, dtype=float)
        if a.shape != (3,):
            raise ValidationError("plane-wave direction must be a 3-vector")
        norm = np.linalg.norm(a)
        if norm == 0:
            raise ValidationError("plane-wave direction must be non-zero")
        if not self.k > 0:
            raise ValidationError(f"wavenumber must be positive, got {self.k}")
        object.__setattr__(self, "direction", tuple(a / norm))

    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.direction)

    def value(self, x) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.k * (_points(x) @ self.alpha))

    def gradient(self, x) -> np.ndarray:
        return 1j * self.k * self.value(x)[:, None] * self.alpha[None, :]

    def laplacian(self, x) -> np.ndarray:
        return -(self.k**2) * self.value(x)

    def describe(self) -> dict:
        amp = complex(self.amplitude)
        return {"kind": "plane", "direction": list(self.direction), "k": self.k,
                "amplitude": [amp.real, amp.imag]}


class CustomField(IncidentField):
    """Field given by callables on ``(n, 3)`` point arrays.

    ``gradient`` and ``laplacian`` default to zero, which suits a constant
    field.  Nothing checks that the callables describe a Helmholtz solution.
    """

    kind = "custom"

    def __init__(
        self,
        value: Callable[[np.ndarray], np.ndarray],
        gradient: Callable[[np.ndarray], np.ndarray] | None = None,
        laplacian: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        self._value = value
        self._gradient = gradient
        self._laplacian = laplacian

    def value(self, x) -> np.ndarray:
        p = _points(x)
        return np.broadcast_to(np.asarray(self._value(p), dtype=complex), (len(p),)).copy()

    def gradient(self, x) -> np.ndarray:
        p = _points(x)
        if self._gradient is None:
            return np.zeros((len(p), 3), dtype=complex)
        return np.broadcast_to(np.asarray(self._gradient(p), dtype=complex), (len(p), 3)).copy()

    def laplacian(self, x) -> np.ndarray:
        p = _points(x)
        if self._laplacian is None:
            return np.zeros(len(p), dtype=complex)
        return np.broadcast_to(np.asarray(self._laplacian(p), dtype=complex), (len(p),)).copy()


def constant_field(c: complex = 1.0) -> CustomField:
    return CustomField(lambda p: np.full(len(p), c, dtype=complex))


class Superposition(IncidentField):
    kind = "superposition"

    def __init__(self, terms):
        self.terms = list(terms)

    def value(self, x):
        return sum(c * f.value(x) for c, f in self.terms)

    def gradient(self, x):
        return sum(c * f.gradient(x) for c, f in self.terms)

    def laplacian(self, x):
        return sum(c * f.laplacian(x) for c, f in self.terms)

    def describe(self) -> dict:
        return {"kind": "superposition",
                "terms": [{"coef": [complex(c).real, complex(c).imag], **f.describe()} for c, f in self.terms]}
