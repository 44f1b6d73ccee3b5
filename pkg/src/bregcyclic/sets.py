"""Closed bounded convex sets in R^d with membership, projection and sampling."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog, minimize

from .convex_core import as_point
from .errors import DimensionError

MEMBERSHIP_TOL = 1e-9


class ConvexSet:
    """Base class. Subclasses implement ``project``, ``signed_distance``,
    ``sample`` and ``extreme_points``.

    ``signed_distance`` is positive outside the set (Euclidean distance to
    it) and nonpositive inside.
    """

    kind = "abstract"
    dim: int
    tolerance: float = MEMBERSHIP_TOL

    def contains(self, x, tol=None) -> bool:
        tol = self.tolerance if tol is None else tol
        return bool(self.signed_distance(x) <= tol)

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    def signed_distance(self, x) -> float:
        raise NotImplementedError

    def sample(self, rng, n) -> np.ndarray:
        raise NotImplementedError

    def extreme_points(self) -> np.ndarray:
        """A few boundary points used to seed deterministic checks."""
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def _point(self, x):
        return as_point(x, self.dim)

    def to_dict(self) -> dict:
        raise NotImplementedError


class Box(ConvexSet):
    kind = "box"

    def __init__(self, lower, upper, tolerance=MEMBERSHIP_TOL):
        self.lower = as_point(lower)
        self.upper = as_point(upper, self.lower.size)
        if np.any(self.lower > self.upper):
            raise ValueError("box bounds must be ordered")
        self.dim = self.lower.size
        self.tolerance = float(tolerance)

    def project(self, x):
        return np.clip(self._point(x), self.lower, self.upper)

    def signed_distance(self, x):
        x = self._point(x)
        outside = np.maximum(self.lower - x, 0) + np.maximum(x - self.upper, 0)
        d = float(np.linalg.norm(outside))
        if d > 0:
            return d
        return -float(np.min(np.minimum(x - self.lower, self.upper - x)))

    def sample(self, rng, n):
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def extreme_points(self):
        grids = np.meshgrid(*[(lo, hi) for lo, hi in zip(self.lower, self.upper)], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return np.unique(pts, axis=0)

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"

    def to_dict(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class Interval(Box):
    kind = "interval"

    def __init__(self, lo, hi, tolerance=MEMBERSHIP_TOL):
        super().__init__([lo], [hi], tolerance)

    def __repr__(self):
        return f"Interval({self.lower[0]}, {self.upper[0]})"

    def to_dict(self):
        return {"kind": "interval", "lo": float(self.lower[0]), "hi": float(self.upper[0])}


class Ball(ConvexSet):
    kind = "ball"

    def __init__(self, center, radius, tolerance=MEMBERSHIP_TOL):
        self.center = as_point(center)
        self.radius = float(radius)
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        self.dim = self.center.size
        self.tolerance = float(tolerance)

    def project(self, x):
        x = self._point(x)
        r = np.linalg.norm(x - self.center)
        if r <= self.radius:
            return x.copy()
        return self.center + (x - self.center) * (self.radius / r)

    def signed_distance(self, x):
        return float(np.linalg.norm(self._point(x) - self.center) - self.radius)

    def sample(self, rng, n):
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / self.dim)
        return self.center + r * g

    def extreme_points(self):
        e = np.eye(self.dim) * self.radius
        return np.concatenate([self.center + e, self.center - e])

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def __repr__(self):
        return f"Ball({self.center.tolist()}, {self.radius})"

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


class Polytope(ConvexSet):
    """Bounded intersection of halfspaces ``A x <= b``."""

    kind = "halfspace_intersection"

    def __init__(self, A, b, tolerance=MEMBERSHIP_TOL):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.size:
            raise DimensionError("A and b disagree on the number of halfspaces")
        self.dim = self.A.shape[1]
        self.tolerance = float(tolerance)
        norms = np.linalg.norm(self.A, axis=1)
        if np.any(norms == 0):
            raise ValueError("halfspace normals must be nonzero")
        self._unit_A = self.A / norms[:, None]
        self._unit_b = self.b / norms
        self._lo, self._hi = self._bounds()
        self._vertices = self._enumerate_vertices() if self.dim <= 3 else None

    def _bounds(self):
        lo, hi = np.empty(self.dim), np.empty(self.dim)
        for k in range(self.dim):
            for sign, target in ((1.0, lo), (-1.0, hi)):
                c = np.zeros(self.dim)
                c[k] = sign
                res = linprog(c, A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * self.dim,
                              method="highs")
                if res.status == 2:
                    raise ValueError("polytope is empty")
                if res.status == 3:
                    raise ValueError("polytope is unbounded")
                target[k] = res.x[k]
        return lo, hi

    def _enumerate_vertices(self):
        from itertools import combinations
        verts = []
        for rows in combinations(range(self.A.shape[0]), self.dim):
            M = self.A[list(rows)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            v = np.linalg.solve(M, self.b[list(rows)])
            if np.all(self.A @ v <= self.b + 1e-9):
                verts.append(v)
        if not verts:
            raise ValueError("polytope has no vertices")
        return np.unique(np.round(np.array(verts), 12), axis=0)

    def signed_distance(self, x):
        x = self._point(x)
        slack = self._unit_A @ x - self._unit_b
        if np.all(slack <= 0):
            return float(np.max(slack))
        return float(np.linalg.norm(x - self.project(x)))

    def project(self, x):
        x = self._point(x)
        if np.all(self.A @ x <= self.b):
            return x.copy()
        cons = {"type": "ineq", "fun": lambda z: self.b - self.A @ z, "jac": lambda z: -self.A}
        z0 = np.clip(x, self._lo, self._hi)
        res = minimize(lambda z: 0.5 * np.sum((z - x) ** 2), z0, jac=lambda z: z - x,
                       constraints=[cons], method="SLSQP",
                       options={"ftol": 1e-15, "maxiter": 500})
        z = res.x
        # polish: push tiny constraint violations back inside
        viol = self.A @ z - self.b
        if np.any(viol > 0):
            z = z - self._unit_A.T @ np.maximum(self._unit_A @ z - self._unit_b, 0)
        return z

    def sample(self, rng, n):
        out = []
        while len(out) < n:
            cand = rng.uniform(self._lo, self._hi, size=(max(n, 16), self.dim))
            out.extend(c for c in cand if np.all(self.A @ c <= self.b))
        return np.array(out[:n])

    def extreme_points(self):
        if self._vertices is not None:
            return self._vertices.copy()
        return np.array([self.project(c) for c in Box(self._lo, self._hi).extreme_points()])

    def bounding_box(self):
        return self._lo.copy(), self._hi.copy()

    def __repr__(self):
        return f"Polytope({self.A.shape[0]} halfspaces in R^{self.dim})"

    def to_dict(self):
        return {"kind": "halfspace_intersection", "A": self.A.tolist(), "b": self.b.tolist()}


SET_KINDS = ("interval", "box", "ball", "halfspace_intersection")


def make_set(desc: dict) -> ConvexSet:
    """Build a set from its JSON-style descriptor."""
    kind = desc["kind"]
    tol = desc.get("tolerance", MEMBERSHIP_TOL)
    if kind == "interval":
        return Interval(desc["lo"], desc["hi"], tol)
    if kind == "box":
        return Box(desc["lower"], desc["upper"], tol)
    if kind == "ball":
        return Ball(desc["center"], desc["radius"], tol)
    if kind == "halfspace_intersection":
        return Polytope(desc["A"], desc["b"], tol)
    raise ValueError(f"unknown set kind {kind!r}")


def sample_with_extremes(region: ConvexSet, rng, n) -> np.ndarray:
    """``n`` uniform samples preceded by the set's extreme points."""
    pts = [region.extreme_points()]
    if n > 0:
        pts.append(region.sample(rng, n))
    return np.concatenate(pts)


def sample_pairs(region: ConvexSet, n: int, seed: int = 0, other: ConvexSet | None = None):
    """Independent uniform pairs (X from ``region``, Y from ``other``)."""
    rng = np.random.default_rng(seed)
    other = region if other is None else other
    return region.sample(rng, n), other.sample(rng, n)
