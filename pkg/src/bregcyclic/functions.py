"""Concrete convex functions with closed-form gradients, Hessians and
Bregman distances.

>>> f = build(FunctionSpec("squared_norm", dim=2))
>>> bregman(f, [3.0, 0.0], [1.0, 0.0])
4.0
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .convex_core import ConvexFunction, ConvexityFlags, Domain, as_point, bregman
from .errors import DomainError

KINDS = ("squared_norm", "weighted_quadratic", "negative_entropy", "affine_stub")
ENTROPY_FLOOR = 1e-6


@dataclass(frozen=True)
class FunctionSpec:
    """Declarative description of a library function.

    ``params`` by kind:

    * weighted_quadratic: ``Q`` (symmetric positive definite matrix)
    * negative_entropy: ``lower`` (default 1e-6), ``upper`` (default 1e6)
    * affine_stub: ``c`` (coefficient vector)
    """

    kind: str
    dim: int = 1
    params: dict = field(default_factory=dict, hash=False)

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionSpec":
        d = dict(d)
        kind = d.pop("kind")
        dim = d.pop("dim", None)
        if dim is None:
            if "Q" in d:
                dim = len(d["Q"])
            elif "c" in d:
                dim = len(d["c"])
            else:
                dim = 1
        return cls(kind, int(dim), d)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        out.update({k: np.asarray(v).tolist() for k, v in self.params.items()})
        return out


def _quadratic_matrix(spec):
    Q = np.asarray(spec.params.get("Q"), dtype=float)
    if Q.shape != (spec.dim, spec.dim):
        raise ValueError(f"Q must be {spec.dim}x{spec.dim}, got {Q.shape}")
    if np.max(np.abs(Q - Q.T)) > 1e-12:
        raise ValueError("Q must be symmetric")
    if np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() <= 0:
        raise ValueError("Q must be positive definite")
    return 0.5 * (Q + Q.T)


def _entropy_box(spec):
    lo = float(spec.params.get("lower", ENTROPY_FLOOR))
    hi = float(spec.params.get("upper", 1e6))
    if lo < ENTROPY_FLOOR:
        raise ValueError(f"negative entropy box must start at >= {ENTROPY_FLOOR}")
    if not hi > lo:
        raise ValueError("negative entropy box upper bound must exceed the lower one")
    return lo, hi


def build(spec: FunctionSpec) -> ConvexFunction:
    """Return the function handle described by ``spec``."""
    d = int(spec.dim)
    if d < 1:
        raise ValueError("dim must be positive")
    if spec.kind == "squared_norm":
        return ConvexFunction(
            "squared_norm", d, Domain("whole"),
            lambda x: np.sum(x * x, axis=-1),
            lambda x: 2.0 * x,
            lambda x: 2.0 * np.broadcast_to(np.eye(d), x.shape[:-1] + (d, d)),
            ConvexityFlags(True, True, True))
    if spec.kind == "weighted_quadratic":
        Q = _quadratic_matrix(spec)
        return ConvexFunction(
            "weighted_quadratic", d, Domain("whole"),
            lambda x: np.einsum("...i,ij,...j->...", x, Q, x),
            lambda x: 2.0 * x @ Q,
            lambda x: 2.0 * np.broadcast_to(Q, x.shape[:-1] + (d, d)),
            ConvexityFlags(True, True, True))
    if spec.kind == "negative_entropy":
        lo, hi = _entropy_box(spec)

        def hess(x):
            return np.einsum("...i,ij->...ij", 1.0 / x, np.eye(d))

        # uniform convexity only holds on bounded boxes
        return ConvexFunction(
            "negative_entropy", d, Domain("box", (lo,) * d, (hi,) * d),
            lambda x: np.sum(x * np.log(x), axis=-1),
            lambda x: np.log(x) + 1.0,
            hess,
            ConvexityFlags(True, True, True))
    if spec.kind == "affine_stub":
        c = np.asarray(spec.params.get("c", np.ones(d)), dtype=float)
        if c.shape != (d,):
            raise ValueError(f"c must have length {d}")
        return ConvexFunction(
            "affine_stub", d, Domain("whole"),
            lambda x: x @ c,
            lambda x: np.broadcast_to(c, x.shape).copy(),
            lambda x: np.zeros(x.shape[:-1] + (d, d)),
            ConvexityFlags(False, False, False))
    raise ValueError(f"unknown function kind {spec.kind!r}; expected one of {KINDS}")


def oracle_bregman(spec: FunctionSpec, y, x):
    """Closed-form D_f(y, x), independent of the generic formula."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    diff = y - x
    if spec.kind == "squared_norm":
        out = np.sum(diff * diff, axis=-1)
    elif spec.kind == "weighted_quadratic":
        Q = _quadratic_matrix(spec)
        out = np.einsum("...i,ij,...j->...", diff, Q, diff)
    elif spec.kind == "negative_entropy":
        lo, hi = _entropy_box(spec)
        if np.any((x < lo) | (x > hi) | (y < lo) | (y > hi)):
            raise DomainError("negative entropy: point outside its box")
        out = np.sum(y * np.log(y / x) - y + x, axis=-1)
    elif spec.kind == "affine_stub":
        out = np.zeros(diff.shape[:-1]) if diff.ndim > 1 else 0.0
    else:
        raise ValueError(f"unknown function kind {spec.kind!r}")
    return float(out) if np.ndim(out) == 0 else out


__all__ = ["FunctionSpec", "build", "oracle_bregman", "KINDS", "as_point", "bregman"]
