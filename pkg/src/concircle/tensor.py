"""Dense tensors whose components carry truncated jets.

A :class:`Tensor` of jet order ``k`` holds ``parts[0..k]``: the component
array followed by its symmetric arrays of first..k-th partial derivatives,
the derivative axes trailing the component axes.  Contractions are written
as einsum subscripts and differentiated with the Leibniz rule, so every
product keeps exact derivatives up to the smallest order among its factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ArgumentError, JetOrderError

UP, DOWN = "u", "d"
_DERIV_LETTERS = "PQR"


@dataclass(frozen=True, eq=False)
class Tensor:
    """Components plus jet parts.

    ``scale`` is the largest magnitude among the terms summed to produce this
    tensor; residuals divide by ``max(1, scale)`` so that "zero" is judged
    relative to the size of what cancelled.
    """

    variance: tuple[str, ...]
    parts: tuple[np.ndarray, ...]
    n: int
    symmetry: str = "none"
    scale: float = 0.0

    @property
    def order(self) -> int:
        return len(self.parts) - 1

    @property
    def rank(self) -> int:
        return len(self.variance)

    @property
    def value(self) -> np.ndarray:
        return self.parts[0]

    def max_abs(self) -> float:
        v = self.parts[0]
        return float(np.max(np.abs(v))) if v.size else 0.0

    def truncate(self, order: int) -> "Tensor":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        return Tensor(self.variance, self.parts[: order + 1], self.n, self.symmetry, self.scale)

    def with_symmetry(self, tag: str) -> "Tensor":
        return Tensor(self.variance, self.parts, self.n, tag, self.scale)

    def _combine(self, other: "Tensor", sign: float) -> "Tensor":
        if self.variance != other.variance or self.n != other.n:
            raise ArgumentError(f"variance mismatch {self.variance} vs {other.variance}")
        k = min(self.order, other.order)
        parts = tuple(self.parts[i] + sign * other.parts[i] for i in range(k + 1))
        scale = max(self.scale, other.scale, self.max_abs(), other.max_abs())
        return Tensor(self.variance, parts, self.n, "none", scale)

    def __add__(self, other: "Tensor") -> "Tensor":
        return self._combine(other, 1.0)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return self._combine(other, -1.0)

    def __neg__(self) -> "Tensor":
        return Tensor(self.variance, tuple(-p for p in self.parts), self.n, self.symmetry, self.scale)

    def __mul__(self, c: float) -> "Tensor":
        c = float(c)
        return Tensor(self.variance, tuple(c * p for p in self.parts), self.n, self.symmetry,
                      abs(c) * self.scale)

    __rmul__ = __mul__


def constant_tensor(variance, value, n: int, order: int = 0) -> Tensor:
    value = np.asarray(value, dtype=float)
    parts = [value] + [np.zeros(value.shape + (n,) * k) for k in range(1, order + 1)]
    return Tensor(tuple(variance), tuple(parts), n)


def contract(subscripts: str, *factors: Tensor, variance, order: int | None = None,
             symmetry: str = "none") -> Tensor:
    """Einsum over component axes with jets propagated by the Leibniz rule."""
    inputs, out = subscripts.replace(" ", "").split("->")
    ins = inputs.split(",")
    if len(ins) != len(factors):
        raise ArgumentError("subscript count does not match factor count")
    n = factors[0].n
    top = min(f.order for f in factors)
    if order is not None:
        if order > top:
            raise JetOrderError(f"requested order {order} exceeds available {top}")
        top = order
    parts = []
    for k in range(top + 1):
        letters = _DERIV_LETTERS[:k]
        acc = None
        for assign in product(range(len(factors)), repeat=k):
            ops, subs = [], []
            for fi, f in enumerate(factors):
                mine = "".join(letters[s] for s in range(k) if assign[s] == fi)
                ops.append(f.parts[len(mine)])
                subs.append(ins[fi] + mine)
            term = np.einsum(",".join(subs) + "->" + out + letters, *ops)
            acc = term if acc is None else acc + term
        parts.append(acc)
    result = Tensor(tuple(variance), tuple(parts), n, symmetry)
    return Tensor(result.variance, result.parts, n, symmetry, result.max_abs())


def partial(t: Tensor) -> Tensor:
    """Coordinate partial derivative; the new lower slot comes first."""
    if t.order < 1:
        raise JetOrderError("jet order exhausted; no derivative available")
    parts = tuple(np.moveaxis(t.parts[k + 1], t.rank, 0) for k in range(t.order))
    res = Tensor((DOWN,) + t.variance, parts, t.n)
    return Tensor(res.variance, res.parts, t.n, "none", res.max_abs())


def inverse_matrix(a: Tensor, variance=(UP, UP)) -> Tensor:
    """Jet of the inverse of a square matrix, by repeated LU solves.

    Differentiating ``A B = I`` gives, for each derivative order, a linear
    system with the same coefficient matrix ``A0``.
    """
    if a.rank != 2:
        raise ArgumentError("inverse needs a rank-2 tensor")
    a0 = a.parts[0]
    eye = np.eye(a.n)
    b0 = np.linalg.solve(a0, eye)
    parts = [b0]
    for k in range(1, a.order + 1):
        letters = _DERIV_LETTERS[:k]
        rest = None
        for assign in product((0, 1), repeat=k):
            if all(s == 1 for s in assign):
                continue
            la = "".join(letters[s] for s in range(k) if assign[s] == 0)
            lb = "".join(letters[s] for s in range(k) if assign[s] == 1)
            term = np.einsum(f"ia{la},ab{lb}->ib{letters}", a.parts[len(la)], parts[len(lb)])
            rest = term if rest is None else rest + term
        # A0 Bk = -rest  (solve column-wise on the flattened trailing axes)
        shape = rest.shape
        sol = np.linalg.solve(a0, -rest.reshape(a.n, -1)).reshape(shape)
        parts.append(sol)
    return Tensor(tuple(variance), tuple(parts), a.n, "sym")


def residual(t: Tensor | np.ndarray, *others) -> float:
    """Scale-normalised size: max|t| / max(1, scale of t, max|others|)."""
    if isinstance(t, Tensor):
        top = t.max_abs()
        scale = t.scale
    else:
        arr = np.asarray(t, dtype=float)
        top = float(np.max(np.abs(arr))) if arr.size else 0.0
        scale = top
    for o in others:
        if isinstance(o, Tensor):
            scale = max(scale, o.max_abs(), o.scale)
        else:
            arr = np.asarray(o, dtype=float)
            if arr.size:
                scale = max(scale, float(np.max(np.abs(arr))))
    return top / max(1.0, scale)
