"""Third-order truncated multivariate Taylor jets.

A :class:`Jet3` stores the Taylor coefficients ``c_a = d^a f / a!`` of a
scalar for every multi-index ``a`` of total degree at most three over
``dim`` chart coordinates.  Storage is dense and graded-lexicographic: the
value, then the ``dim`` first-order slots, then second- and third-order
slots, each multi-index written as a sorted tuple of variable indices.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .errors import ArgumentError, DomainError

ORDER = 3


@dataclass(frozen=True)
class _Layout:
    monomials: tuple[tuple[int, ...], ...]
    position: dict
    left: np.ndarray
    right: np.ndarray
    target: np.ndarray
    degree: np.ndarray
    factorial: np.ndarray
    # symmetric full-array scatter: for each order k, flat index into coeffs
    full_index: tuple[np.ndarray, ...]


@lru_cache(maxsize=None)
def layout(dim: int) -> _Layout:
    monomials: list[tuple[int, ...]] = []
    for deg in range(ORDER + 1):
        monomials.extend(combinations_with_replacement(range(dim), deg))
    position = {m: k for k, m in enumerate(monomials)}
    left, right, target = [], [], []
    for a, ma in enumerate(monomials):
        for b, mb in enumerate(monomials):
            if len(ma) + len(mb) <= ORDER:
                left.append(a)
                right.append(b)
                target.append(position[tuple(sorted(ma + mb))])
    degree = np.array([len(m) for m in monomials])
    fact = np.array([math.prod(math.factorial(c) for c in Counter(m).values())
                     for m in monomials], dtype=float)
    full = []
    for k in range(ORDER + 1):
        shape = (dim,) * k
        idx = np.empty(shape or (), dtype=np.intp)
        for multi in np.ndindex(*shape):
            idx[multi] = position[tuple(sorted(multi))]
        full.append(idx)
    return _Layout(tuple(monomials), position, np.array(left), np.array(right),
                   np.array(target), degree, fact, tuple(full))


def n_coefficients(dim: int) -> int:
    return math.comb(dim + ORDER, ORDER)


class Jet3:
    """Immutable third-order jet of a scalar in ``dim`` variables."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs):
        arr = np.asarray(coeffs, dtype=float)
        if arr.shape != (n_coefficients(dim),):
            raise ArgumentError(f"jet in {dim} variables needs {n_coefficients(dim)} coefficients")
        if not np.all(np.isfinite(arr)):
            raise DomainError("non-finite jet coefficient", func="jet")
        arr.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Jet3 is immutable")

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value: float, dim: int) -> "Jet3":
        c = np.zeros(n_coefficients(dim))
        c[0] = value
        return cls(dim, c)

    @classmethod
    def variable(cls, index: int, value: float, dim: int) -> "Jet3":
        if not 0 <= index < dim:
            raise ArgumentError(f"variable index {index} out of range for dim {dim}")
        c = np.zeros(n_coefficients(dim))
        c[0] = value
        c[1 + index] = 1.0
        return cls(dim, c)

    # queries -------------------------------------------------------------
    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def derivative(self, multi_index=()) -> float:
        """Partial derivative along the listed coordinates (not the raw coefficient)."""
        multi = tuple(int(i) for i in multi_index)
        if len(multi) > ORDER:
            raise ArgumentError(f"derivative order {len(multi)} exceeds {ORDER}")
        if any(not 0 <= i < self.dim for i in multi):
            raise ArgumentError(f"derivative index out of range for dim {self.dim}")
        lay = layout(self.dim)
        k = lay.position[tuple(sorted(multi))]
        return float(self.coeffs[k] * lay.factorial[k])

    def derivative_arrays(self) -> tuple[np.ndarray, ...]:
        """Value and full symmetric derivative arrays of orders 1..3."""
        lay = layout(self.dim)
        d = self.coeffs * lay.factorial
        return tuple(np.asarray(d[idx], dtype=float) for idx in lay.full_index)

    def __repr__(self) -> str:
        return f"Jet3(dim={self.dim}, value={self.value!r})"

    # arithmetic ----------------------------------------------------------
    def _coerce(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            if other.dim != self.dim:
                raise ArgumentError(f"jet dimension mismatch {self.dim} != {other.dim}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet3.constant(float(other), self.dim)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet3(self.dim, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet3(self.dim, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet3(self.dim, o.coeffs - self.coeffs)

    def __neg__(self):
        return Jet3(self.dim, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet3(self.dim, self.coeffs * float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet3(self.dim, _mul(self.dim, self.coeffs, o.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            if other == 0:
                raise DomainError("division by zero", func="div", value=0.0)
            return Jet3(self.dim, self.coeffs / float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.reciprocal()

    def __pow__(self, exponent):
        if isinstance(exponent, bool) or not isinstance(exponent, (int, np.integer)):
            raise ArgumentError("jet powers take integer exponents only")
        exponent = int(exponent)
        if exponent < 0:
            return (self ** (-exponent)).reciprocal()
        result = Jet3.constant(1.0, self.dim)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def reciprocal(self) -> "Jet3":
        x = self.value
        if x == 0.0:
            raise DomainError("division by a jet with zero value", func="div", value=0.0)
        return self._compose((1.0 / x, -1.0 / x**2, 2.0 / x**3, -6.0 / x**4))

    def _compose(self, derivs) -> "Jet3":
        """Compose a univariate function, given its derivatives at the value."""
        if not all(math.isfinite(d) for d in derivs):
            raise DomainError("non-finite derivative during composition", value=self.value)
        h = np.array(self.coeffs)
        h[0] = 0.0
        h2 = _mul(self.dim, h, h)
        h3 = _mul(self.dim, h2, h)
        out = derivs[1] * h + (derivs[2] / 2.0) * h2 + (derivs[3] / 6.0) * h3
        out[0] = derivs[0]
        return Jet3(self.dim, out)


def _mul(dim: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    lay = layout(dim)
    return np.bincount(lay.target, weights=a[lay.left] * b[lay.right],
                       minlength=len(lay.monomials))


# elementary functions ------------------------------------------------------

def _sin(x):
    s, c = math.sin(x), math.cos(x)
    return (s, c, -s, -c)


def _cos(x):
    s, c = math.sin(x), math.cos(x)
    return (c, -s, -c, s)


def _tan(x):
    if abs(math.cos(x)) < 1e-15:
        raise DomainError(f"tan undefined at {x!r}", func="tan", value=x)
    t = math.tan(x)
    u = 1.0 + t * t
    return (t, u, 2.0 * t * u, u * (2.0 + 6.0 * t * t))


def _exp(x):
    try:
        e = math.exp(x)
    except OverflowError:
        raise DomainError(f"exp overflows at {x!r}", func="exp", value=x) from None
    return (e, e, e, e)


def _ln(x):
    if not x > 0.0:
        raise DomainError(f"ln requires a positive argument, got {x!r}", func="ln", value=x)
    return (math.log(x), 1.0 / x, -1.0 / x**2, 2.0 / x**3)


def _sqrt(x):
    if not x > 0.0:
        raise DomainError(f"sqrt requires a positive argument, got {x!r}", func="sqrt", value=x)
    s = math.sqrt(x)
    return (s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x))


def _sinh(x):
    try:
        return (math.sinh(x), math.cosh(x), math.sinh(x), math.cosh(x))
    except OverflowError:
        raise DomainError(f"sinh overflows at {x!r}", func="sinh", value=x) from None


def _cosh(x):
    try:
        return (math.cosh(x), math.sinh(x), math.cosh(x), math.sinh(x))
    except OverflowError:
        raise DomainError(f"cosh overflows at {x!r}", func="cosh", value=x) from None


def _tanh(x):
    t = math.tanh(x)
    u = 1.0 - t * t
    return (t, u, -2.0 * t * u, (6.0 * t * t - 2.0) * u)


ELEMENTARY = {
    "sin": _sin, "cos": _cos, "tan": _tan, "exp": _exp, "ln": _ln,
    "sqrt": _sqrt, "sinh": _sinh, "cosh": _cosh, "tanh": _tanh,
}


# functional surface ---------------------------------------------------------

def jet_seed(kind: str, point_value: float, dim: int, index: int | None = None) -> Jet3:
    """Seed a coordinate variable (``kind='variable'``) or a constant."""
    if kind == "variable":
        if index is None:
            raise ArgumentError("variable seed needs an index")
        return Jet3.variable(index, point_value, dim)
    if kind == "constant":
        return Jet3.constant(point_value, dim)
    raise ArgumentError(f"unknown seed kind {kind!r}")


def jet_arith(op: str, a: Jet3, b=None) -> Jet3:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "pow_int":
        return a ** b
    if op == "neg":
        return -a
    raise ArgumentError(f"unknown jet operation {op!r}")


def jet_elementary(fn: str, a: Jet3) -> Jet3:
    try:
        derivs = ELEMENTARY[fn]
    except KeyError:
        raise ArgumentError(f"unknown elementary function {fn!r}") from None
    return a._compose(derivs(a.value))


def jet_extract(a: Jet3, multi_index) -> float:
    return a.derivative(multi_index)
