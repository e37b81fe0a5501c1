"""Test functions and weights evaluated at quadrature nodes.

Every field is evaluated through ``field(xy, d)`` where ``xy`` is an
``(n, 2)`` array of interior points and ``d`` the matching distances to the
boundary, so that distance-dependent fields never recompute distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ScalarField:
    """Base class; subclasses implement :meth:`__call__`."""

    def __call__(self, xy: np.ndarray, d: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # Lets catalog fields compose with ordinary operators.
    def __add__(self, other):
        return Sum(self, as_field(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Sum(self, Scale(-1.0, as_field(other)))

    def __rsub__(self, other):
        return Sum(as_field(other), Scale(-1.0, self))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Scale(float(other), self)
        return Product(self, as_field(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Scale(-1.0, self)

    def __pow__(self, k):
        return Power(self, float(k))

    @property
    def is_constant(self) -> bool:
        return False


def as_field(obj) -> ScalarField:
    if isinstance(obj, ScalarField):
        return obj
    if isinstance(obj, (int, float)):
        return Constant(float(obj))
    raise TypeError(f"cannot interpret {obj!r} as a field")


@dataclass(frozen=True)
class Constant(ScalarField):
    c: float

    def __call__(self, xy, d):
        return np.full(len(xy), self.c)

    @property
    def is_constant(self):
        return True

    def __repr__(self):
        return repr(self.c)


@dataclass(frozen=True)
class Coordinate(ScalarField):
    """``x`` (axis 0) or ``y`` (axis 1)."""

    axis: int

    def __call__(self, xy, d):
        return np.array(xy[:, self.axis], dtype=float)

    def __repr__(self):
        return "xy"[self.axis]


@dataclass(frozen=True)
class Bump(ScalarField):
    """Smooth bump ``exp(1 - 1/(1 - |x - c|^2 / r^2))`` with peak value 1,
    supported in the open ball ``B(c, r)``."""

    cx: float
    cy: float
    radius: float

    def __call__(self, xy, d):
        q = ((xy[:, 0] - self.cx) ** 2 + (xy[:, 1] - self.cy) ** 2) / self.radius**2
        out = np.zeros(len(xy))
        inside = q < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
        return out

    def __repr__(self):
        return f"bump({self.cx!r},{self.cy!r},{self.radius!r})"


@dataclass(frozen=True)
class DistPower(ScalarField):
    """``d^gamma`` with ``d`` the distance to the boundary."""

    gamma: float

    def __call__(self, xy, d):
        return np.power(d, self.gamma)

    def __repr__(self):
        return f"dist^{self.gamma!r}"


@dataclass(frozen=True)
class Indicator(ScalarField):
    """Indicator of the domain; nodes are always interior."""

    def __call__(self, xy, d):
        return np.ones(len(xy))

    @property
    def is_constant(self):
        return True

    def __repr__(self):
        return "indicator"


@dataclass(frozen=True)
class CutoffVn(ScalarField):
    """``clip(2 - n d, 0, 1)``: 1 within ``1/n`` of the boundary, 0 beyond ``2/n``."""

    n: float

    def __call__(self, xy, d):
        return np.clip(2.0 - self.n * d, 0.0, 1.0)

    def __repr__(self):
        return f"vn({self.n!r})"


@dataclass(frozen=True)
class Sum(ScalarField):
    a: ScalarField
    b: ScalarField

    def __call__(self, xy, d):
        return self.a(xy, d) + self.b(xy, d)

    @property
    def is_constant(self):
        return self.a.is_constant and self.b.is_constant

    def __repr__(self):
        return f"({self.a!r} + {self.b!r})"


@dataclass(frozen=True)
class Product(ScalarField):
    a: ScalarField
    b: ScalarField

    def __call__(self, xy, d):
        return self.a(xy, d) * self.b(xy, d)

    @property
    def is_constant(self):
        return self.a.is_constant and self.b.is_constant

    def __repr__(self):
        return f"({self.a!r} * {self.b!r})"


@dataclass(frozen=True)
class Scale(ScalarField):
    c: float
    a: ScalarField

    def __call__(self, xy, d):
        return self.c * self.a(xy, d)

    @property
    def is_constant(self):
        return self.a.is_constant

    def __repr__(self):
        return f"({self.c!r} * {self.a!r})"


@dataclass(frozen=True)
class Power(ScalarField):
    a: ScalarField
    k: float

    def __call__(self, xy, d):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.power(self.a(xy, d), self.k)

    @property
    def is_constant(self):
        return self.a.is_constant

    def __repr__(self):
        return f"({self.a!r})^{self.k!r}"


@dataclass(frozen=True)
class Min(ScalarField):
    a: ScalarField
    b: ScalarField

    def __call__(self, xy, d):
        return np.minimum(self.a(xy, d), self.b(xy, d))

    @property
    def is_constant(self):
        return self.a.is_constant and self.b.is_constant


@dataclass(frozen=True)
class Max(ScalarField):
    a: ScalarField
    b: ScalarField

    def __call__(self, xy, d):
        return np.maximum(self.a(xy, d), self.b(xy, d))

    @property
    def is_constant(self):
        return self.a.is_constant and self.b.is_constant


class FunctionField(ScalarField):
    """Wraps a plain callable ``fn(xy, d) -> values``."""

    def __init__(self, fn, name: str = "fn"):
        self.fn = fn
        self.name = name

    def __call__(self, xy, d):
        return np.asarray(self.fn(xy, d), dtype=float)

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class WeightField:
    """Nonnegative weight: ``d^exponent`` or an arbitrary field."""

    exponent: float = 0.0
    field: ScalarField | None = None

    @classmethod
    def distance_power(cls, exponent: float) -> "WeightField":
        if not math.isfinite(exponent):
            raise ValueError("weight exponent must be finite")
        return cls(exponent=float(exponent))

    @classmethod
    def general(cls, field: ScalarField) -> "WeightField":
        return cls(field=field)

    @property
    def kind(self) -> str:
        return "general" if self.field is not None else "distance-power"

    def __call__(self, xy, d):
        if self.field is not None:
            w = self.field(xy, d)
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            return w
        if self.exponent == 0.0:
            return np.ones(len(d))
        return np.power(d, self.exponent)
