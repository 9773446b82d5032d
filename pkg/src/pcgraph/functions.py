"""Elementary vertex functions: forward evaluation and vector-Jacobian products.

Each vertex of a computational graph applies one of the kinds below to
the values of its children.  A kind is a total differentiable map on its
admissible domain and knows how to pull an upstream cotangent back onto
each input slot (`vjp`) — which is everything reverse differentiation
and the predictive-coding dynamics need.

Values are float64 ndarrays; scalars are 0-d arrays.  No broadcasting:
elementwise kinds require identical input shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeMismatch
from .numerics import Array, as_f64


class FnKind(str, Enum):
    CONSTANT = "constant"
    ADD = "add"
    MULTIPLY = "multiply"
    MATVEC = "matvec"
    SQUARE = "square"
    SQRT = "sqrt"
    ACTIVATION = "activation"
    CONVOLVE1D = "convolve1d"
    IDENTITY = "identity"
    SUM_REDUCE = "sum_reduce"


ACTIVATION_NAMES = ("identity", "tanh", "logistic")

_UNARY = {FnKind.SQUARE, FnKind.SQRT, FnKind.ACTIVATION, FnKind.IDENTITY,
          FnKind.SUM_REDUCE}


@dataclass(frozen=True)
class ElemFn:
    """One elementary function: a kind, its arity, and optional metadata.

    ``name`` selects the activation nonlinearity; ``value`` is the
    payload of a constant vertex.
    """

    kind: FnKind
    arity: int
    name: str | None = None
    value: float | None = None

    def __post_init__(self):
        if self.kind is FnKind.CONSTANT:
            if self.arity != 0 or self.value is None:
                raise ValueError("constant needs arity 0 and a value")
        elif self.arity < 1:
            raise ValueError(f"{self.kind.value} needs arity >= 1")
        if self.kind in _UNARY and self.arity != 1:
            raise ValueError(f"{self.kind.value} has arity 1")
        if self.kind in (FnKind.MATVEC, FnKind.CONVOLVE1D) and self.arity != 2:
            raise ValueError(f"{self.kind.value} has arity 2")
        if self.kind in (FnKind.ADD, FnKind.MULTIPLY) and self.arity < 2:
            raise ValueError(f"{self.kind.value} needs arity >= 2")
        if self.kind is FnKind.ACTIVATION and self.name not in ACTIVATION_NAMES:
            raise ValueError(f"unknown activation {self.name!r}")

    # -- forward ---------------------------------------------------------

    def __call__(self, inputs: Sequence[Array]) -> Array:
        """Evaluate the function on its inputs (one array per child slot)."""
        ins = self._checked(inputs)
        k = self.kind
        if k is FnKind.CONSTANT:
            return as_f64(self.value)
        if k is FnKind.ADD:
            out = ins[0].copy()
            for v in ins[1:]:
                out = out + v
            return out
        if k is FnKind.MULTIPLY:
            out = ins[0].copy()
            for v in ins[1:]:
                out = out * v
            return out
        if k is FnKind.MATVEC:
            w, x = ins
            return w @ x
        if k is FnKind.SQUARE:
            return ins[0] * ins[0]
        if k is FnKind.SQRT:
            x = ins[0]
            if np.any(x < 0):
                raise DomainError(float(np.min(x)))
            return np.sqrt(x)
        if k is FnKind.ACTIVATION:
            return _activations[self.name](ins[0])
        if k is FnKind.CONVOLVE1D:
            kern, x = ins
            return np.correlate(x, kern, mode="valid")
        if k is FnKind.IDENTITY:
            return ins[0].copy()
        if k is FnKind.SUM_REDUCE:
            return as_f64(math.fsum(ins[0].ravel().tolist()))
        raise AssertionError(k)

    # -- reverse ---------------------------------------------------------

    def vjp(self, inputs: Sequence[Array], upstream: Array) -> tuple[Array, ...]:
        """Pull ``upstream`` (cotangent of the output) back to each input slot.

        Returns one array per child slot, shaped like that input.
        """
        ins = self._checked(inputs)
        u = as_f64(upstream)
        k = self.kind
        if k is FnKind.CONSTANT:
            return ()
        if k is FnKind.ADD:
            return tuple(u.copy() for _ in ins)
        if k is FnKind.MULTIPLY:
            outs = []
            for s in range(len(ins)):
                part = u.copy()
                for r, v in enumerate(ins):
                    if r != s:
                        part = part * v
                outs.append(part)
            return tuple(outs)
        if k is FnKind.MATVEC:
            w, x = ins
            return (np.outer(u, x), w.T @ u)
        if k is FnKind.SQUARE:
            return (2.0 * ins[0] * u,)
        if k is FnKind.SQRT:
            x = ins[0]
            if np.any(x <= 0):
                raise DomainError(float(np.min(x)))
            return (u / (2.0 * np.sqrt(x)),)
        if k is FnKind.ACTIVATION:
            return (_activation_derivs[self.name](ins[0]) * u,)
        if k is FnKind.CONVOLVE1D:
            kern, x = ins
            grad_k = np.correlate(x, u, mode="valid")
            grad_x = np.convolve(u, kern, mode="full")
            return (grad_k, grad_x)
        if k is FnKind.IDENTITY:
            return (u.copy(),)
        if k is FnKind.SUM_REDUCE:
            return (np.full_like(ins[0], float(u)),)
        raise AssertionError(k)

    # -- validation ------------------------------------------------------

    def _checked(self, inputs: Sequence[Array]) -> tuple[Array, ...]:
        if len(inputs) != self.arity:
            raise ShapeMismatch(
                f"{self.kind.value} expects {self.arity} inputs, got {len(inputs)}"
            )
        ins = tuple(as_f64(v) for v in inputs)
        k = self.kind
        if k in (FnKind.ADD, FnKind.MULTIPLY):
            shapes = {v.shape for v in ins}
            if len(shapes) > 1:
                raise ShapeMismatch(f"{k.value} inputs differ in shape: {shapes}")
        elif k is FnKind.MATVEC:
            w, x = ins
            if w.ndim != 2 or x.ndim != 1 or w.shape[1] != x.shape[0]:
                raise ShapeMismatch(
                    f"matvec needs (m,n) @ (n,), got {w.shape} and {x.shape}"
                )
        elif k is FnKind.CONVOLVE1D:
            kern, x = ins
            if kern.ndim != 1 or x.ndim != 1 or x.shape[0] < kern.shape[0]:
                raise ShapeMismatch(
                    f"convolve1d needs 1-d kernel no longer than the signal, "
                    f"got {kern.shape} and {x.shape}"
                )
        return ins


def _logistic(x: Array) -> Array:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


_activations = {
    "identity": lambda x: x.copy(),
    "tanh": np.tanh,
    "logistic": _logistic,
}

_activation_derivs = {
    "identity": np.ones_like,
    "tanh": lambda x: 1.0 - np.tanh(x) ** 2,
    "logistic": lambda x: _logistic(x) * (1.0 - _logistic(x)),
}


# -- factories -----------------------------------------------------------

def constant(value: float) -> ElemFn:
    return ElemFn(FnKind.CONSTANT, 0, value=float(value))


def add(arity: int = 2) -> ElemFn:
    return ElemFn(FnKind.ADD, arity)


def multiply(arity: int = 2) -> ElemFn:
    return ElemFn(FnKind.MULTIPLY, arity)


def matvec() -> ElemFn:
    return ElemFn(FnKind.MATVEC, 2)


def square() -> ElemFn:
    return ElemFn(FnKind.SQUARE, 1)


def sqrt() -> ElemFn:
    return ElemFn(FnKind.SQRT, 1)


def activation(name: str) -> ElemFn:
    return ElemFn(FnKind.ACTIVATION, 1, name=name)


def convolve1d() -> ElemFn:
    return ElemFn(FnKind.CONVOLVE1D, 2)


def identity() -> ElemFn:
    return ElemFn(FnKind.IDENTITY, 1)


def sum_reduce() -> ElemFn:
    return ElemFn(FnKind.SUM_REDUCE, 1)
