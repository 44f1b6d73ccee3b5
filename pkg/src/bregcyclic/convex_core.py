"""Convex functions, Bregman distances and numerical convexity probes.

Points are 1-D float arrays. Most routines also accept a batch of points
stacked along the first axis, in which case the coordinate axis is the last
one and results are returned per row.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .certificate import FAIL, PASS, Certificate, from_margins
from .errors import AssumptionError, DimensionError, DomainError

IDENTITY_RTOL = 1e-10
CONVEXITY_SLACK = 1e-12
LIMIT_ATOL = 1e-8


class _PositiveInfinity:
    """The extended-real value +inf.

    Returned by :meth:`ConvexFunction.value` outside the domain. It refuses
    arithmetic so that it cannot silently propagate through a computation.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "POS_INF"

    def __reduce__(self):
        return (_PositiveInfinity, ())

    def _refuse(self, *args):
        raise TypeError("POS_INF does not take part in arithmetic")

    __add__ = __radd__ = __sub__ = __rsub__ = _refuse
    __mul__ = __rmul__ = __truediv__ = __rtruediv__ = __neg__ = _refuse
    __float__ = _refuse

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("POS_INF")

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self


POS_INF = _PositiveInfinity()


def as_point(x, dim=None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, checking its dimension."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"expected a 1-D point, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError("a point needs at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must have finite coordinates")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.size}")
    return arr


def _as_batch(x, dim) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must have finite coordinates")
    return arr


def inner_product(x, y) -> float:
    """Standard inner product on R^d (row-wise for batches)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1:] != y.shape[-1:]:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {y.shape}")
    out = np.einsum("...k,...k->...", x, y)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# function handles

@dataclass(frozen=True)
class Domain:
    """Effective domain of a convex function.

    ``kind`` is ``"whole"`` (all of R^d), ``"orthant"`` (open positive
    orthant) or ``"box"`` (closed box ``[lower, upper]``, used when the box
    already lies inside the interior of the natural domain).
    """

    kind: str
    lower: tuple | None = None
    upper: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("whole", "orthant", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "box":
            lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
            if lo.shape != hi.shape or np.any(lo > hi):
                raise ValueError("box bounds must be ordered and of equal length")

    def contains(self, x) -> np.ndarray:
        """Row-wise membership of ``x`` (last axis = coordinates)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "whole":
            return np.all(np.isfinite(x), axis=-1)
        if self.kind == "orthant":
            return np.all(x > 0, axis=-1)
        return np.all((x >= np.asarray(self.lower)) & (x <= np.asarray(self.upper)), axis=-1)


@dataclass(frozen=True)
class ConvexityFlags:
    strictly_convex: bool = False
    totally_convex: bool = False
    uniformly_convex: bool = False


@dataclass(frozen=True)
class ConvexFunction:
    """A differentiable convex function with closed-form derivatives.

    ``func``, ``grad_func`` and ``hess_func`` operate on arrays whose last
    axis holds coordinates and are only ever called on domain points. The
    flags are claims; the probes in this module exist to test them.
    """

    name: str
    dim: int
    domain: Domain
    func: Callable[[np.ndarray], np.ndarray]
    grad_func: Callable[[np.ndarray], np.ndarray]
    hess_func: Callable[[np.ndarray], np.ndarray] | None = None
    flags: ConvexityFlags = field(default_factory=ConvexityFlags)

    def in_domain(self, x) -> np.ndarray:
        return self.domain.contains(x)

    def _checked(self, x) -> np.ndarray:
        x = _as_batch(x, self.dim)
        if not np.all(self.domain.contains(x)):
            raise DomainError(f"{self.name}: point outside the domain")
        return x

    def value(self, x):
        """f(x) for a single point, or ``POS_INF`` outside the domain."""
        x = as_point(x, self.dim)
        if not self.domain.contains(x):
            return POS_INF
        return float(self.func(x))

    def values(self, x) -> np.ndarray:
        """f evaluated row-wise; raises :class:`DomainError` off-domain."""
        return np.asarray(self.func(self._checked(x)), dtype=float)

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.grad_func(self._checked(x)), dtype=float)

    def hessian(self, x) -> np.ndarray:
        if self.hess_func is None:
            raise NotImplementedError(f"{self.name} has no Hessian")
        return np.asarray(self.hess_func(self._checked(x)), dtype=float)


def bregman(f: ConvexFunction, y, x):
    """Bregman distance D_f(y, x) = f(y) - f(x) - <y - x, f'(x)>.

    Works row-wise on batches. Raises :class:`DomainError` when either
    argument lies outside the domain of ``f``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape[-1:] != x.shape[-1:]:
        raise DimensionError(f"dimension mismatch: {y.shape} vs {x.shape}")
    out = f.values(y) - f.values(x) - inner_product(y - x, f.gradient(x))
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# derivative and identity checks

@dataclass
class DerivativeCheck:
    steps: list
    discrepancies: list
    skipped: list
    scheme: str
    tolerance: float

    @property
    def final(self) -> float:
        return self.discrepancies[-1] if self.discrepancies else float("nan")

    @property
    def decreasing_trend(self) -> bool:
        d = self.discrepancies
        if len(d) < 2:
            return True
        return d[-1] <= d[0] or max(d) < self.tolerance

    @property
    def passed(self) -> bool:
        return bool(self.discrepancies) and self.decreasing_trend and self.final < self.tolerance


def directional_derivative_check(f: ConvexFunction, x, y, steps: Sequence[float],
                                 scheme: str = "forward", tolerance: float = 1e-5) -> DerivativeCheck:
    """Compare difference quotients of f along ``y`` with <y, f'(x)>.

    Steps whose probe points leave the domain are skipped and recorded.
    """
    x = as_point(x, f.dim)
    y = as_point(y, f.dim)
    steps = [float(t) for t in steps]
    if any(t <= 0 for t in steps) or any(b >= a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be positive and strictly decreasing")
    if scheme not in ("forward", "central"):
        raise ValueError(f"unknown scheme {scheme!r}")
    exact = inner_product(y, f.gradient(x))
    fx = f.value(x)
    if fx is POS_INF:
        raise DomainError("x outside the domain")
    kept, disc, skipped = [], [], []
    for t in steps:
        fp = f.value(x + t * y)
        if fp is POS_INF:
            skipped.append(t)
            continue
        if scheme == "forward":
            quotient = (fp - fx) / t
        else:
            fm = f.value(x - t * y)
            if fm is POS_INF:
                skipped.append(t)
                continue
            quotient = (fp - fm) / (2 * t)
        kept.append(t)
        disc.append(abs(quotient - exact))
    return DerivativeCheck(kept, disc, skipped, scheme, tolerance)


def _pairs(samples, dim):
    """Normalise pair samples to two (n, d) arrays."""
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[0]) == 2:
        X, Y = samples
    else:
        samples = list(samples)
        if not samples:
            return np.empty((0, dim)), np.empty((0, dim))
        X = [s[0] for s in samples]
        Y = [s[1] for s in samples]
    X = _as_batch(np.atleast_2d(np.asarray(X, float).reshape(-1, dim)), dim)
    Y = _as_batch(np.atleast_2d(np.asarray(Y, float).reshape(-1, dim)), dim)
    if X.shape != Y.shape:
        raise DimensionError("pair arrays differ in shape")
    return X, Y


def gradient_monotonicity_probe(f: ConvexFunction, samples) -> Certificate:
    """Check <x - y, f'(x) - f'(y)> > 0 on every sampled pair."""
    X, Y = _pairs(samples, f.dim)
    if np.any(np.linalg.norm(X - Y, axis=-1) <= 1e-9):
        raise ValueError("degenerate pair: x and y coincide")
    margins = inner_product(X - Y, f.gradient(X) - f.gradient(Y))
    margins = np.atleast_1d(margins)
    k = int(np.argmin(margins)) if margins.size else 0
    ok = bool(np.all(margins > 0))
    witness = None if ok else {"x": X[k], "y": Y[k], "margin": float(margins[k])}
    return Certificate(PASS if ok else FAIL, margins.size,
                       float(margins[k]) if margins.size else float("inf"), witness)


@dataclass
class IdentityCheck:
    """Both sides of an algebraic identity and their absolute residual."""

    lhs: float | np.ndarray
    rhs: float | np.ndarray
    residual: float | np.ndarray
    rtol: float = IDENTITY_RTOL

    @property
    def holds(self) -> bool:
        return bool(np.all(self.residual < self.rtol * (1 + np.abs(self.lhs))))

    @property
    def max_relative_residual(self) -> float:
        return float(np.max(self.residual / (1 + np.abs(self.lhs))))


def _scalar_or_array(a):
    return float(a) if np.ndim(a) == 0 else a


def bregman_sum_identity(f: ConvexFunction, x, y) -> IdentityCheck:
    """D_f(y,x) + D_f(x,y) against -<y - x, f'(x) - f'(y)>."""
    lhs = np.asarray(bregman(f, y, x)) + np.asarray(bregman(f, x, y))
    x, y = np.asarray(x, float), np.asarray(y, float)
    rhs = -np.asarray(inner_product(y - x, f.gradient(x) - f.gradient(y)))
    return IdentityCheck(_scalar_or_array(lhs), _scalar_or_array(rhs),
                         _scalar_or_array(np.abs(lhs - rhs)))


def bregman_difference_identity(f: ConvexFunction, x, y) -> IdentityCheck:
    """D_f(y,x) - D_f(x,y) against 2(f(y) - f(x)) - <y - x, f'(x) + f'(y)>."""
    lhs = np.asarray(bregman(f, y, x)) - np.asarray(bregman(f, x, y))
    x, y = np.asarray(x, float), np.asarray(y, float)
    rhs = 2 * (f.values(y) - f.values(x)) - np.asarray(
        inner_product(y - x, f.gradient(x) + f.gradient(y)))
    return IdentityCheck(_scalar_or_array(lhs), _scalar_or_array(rhs),
                         _scalar_or_array(np.abs(lhs - rhs)))


def strict_positivity_probe(f: ConvexFunction, samples, min_separation: float = 1e-6) -> Certificate:
    """Check D_f(y, x) > 0 over sampled pairs separated by more than
    ``min_separation``; closer pairs are ignored.

    The probe does not trust ``f.flags.strictly_convex``; the flag is only
    reported back in ``details["claimed"]``.
    """
    X, Y = _pairs(samples, f.dim)
    keep = np.linalg.norm(X - Y, axis=-1) > min_separation
    X, Y = X[keep], Y[keep]
    values = np.atleast_1d(bregman(f, Y, X)) if len(X) else np.empty(0)
    details = {"claimed": f.flags.strictly_convex,
               "min_value": float(values.min()) if values.size else None}
    if values.size == 0:
        return Certificate(PASS, 0, float("inf"), None, details)
    k = int(np.argmin(values))
    if values[k] > 0:
        return Certificate(PASS, values.size, float(values[k]), None, details)
    return Certificate(FAIL, values.size, float(values[k]),
                       {"y": Y[k], "x": X[k], "divergence": float(values[k])}, details)


def convexity_probe(f: ConvexFunction, samples, slack: float = CONVEXITY_SLACK) -> Certificate:
    """Check f(a x + (1-a) y) <= a f(x) + (1-a) f(y) on samples (x, y, a).

    The verdict is for the plain inequality with ``slack``. The strict
    variant, using only samples with a in (0.05, 0.95) and distinct points,
    is reported in ``details`` and needs every margin to exceed ``slack``.
    """
    samples = list(samples)
    if not samples:
        return Certificate(PASS, 0, float("inf"))
    X = _as_batch(np.array([s[0] for s in samples], float).reshape(-1, f.dim), f.dim)
    Y = _as_batch(np.array([s[1] for s in samples], float).reshape(-1, f.dim), f.dim)
    A = np.array([s[2] for s in samples], float)
    if np.any((A < 0) | (A > 1)):
        raise ValueError("convex weights must lie in [0, 1]")
    M = A[:, None] * X + (1 - A[:, None]) * Y
    margins = A * f.values(X) + (1 - A) * f.values(Y) - f.values(M)

    strict = (A > 0.05) & (A < 0.95) & (np.linalg.norm(X - Y, axis=-1) > 1e-6)
    if np.any(strict):
        sm = margins[strict]
        j = int(np.argmin(sm))
        strict_info = {"strict_verdict": PASS if sm[j] > slack else FAIL,
                       "strict_samples": int(sm.size),
                       "strict_worst_margin": float(sm[j])}
        if sm[j] <= slack:
            idx = np.flatnonzero(strict)[j]
            strict_info["strict_witness"] = {"x": X[idx], "y": Y[idx], "alpha": float(A[idx])}
    else:
        strict_info = {"strict_verdict": PASS, "strict_samples": 0, "strict_worst_margin": None}

    return from_margins(margins, slack,
                        lambda k: {"x": X[k], "y": Y[k], "alpha": float(A[k]),
                                   "margin": float(margins[k])},
                        strict_info)


# --------------------------------------------------------------------------
# moduli of convexity

@dataclass
class ModulusEstimate:
    """Best value found for an infimum (an upper bound on it)."""

    t: float
    value: float
    status: str
    evaluations: int
    anchor: np.ndarray | None = None
    argmin: object = None

    def to_dict(self):
        from .certificate import to_jsonable
        return to_jsonable({"t": self.t, "value": self.value, "status": self.status,
                            "evaluations": self.evaluations, "anchor": self.anchor,
                            "argmin": self.argmin})


class _Budget:
    def __init__(self, total):
        self.total = int(total)
        self.used = 0

    @property
    def left(self):
        return self.total - self.used


def _unit(u):
    n = np.linalg.norm(u)
    return u / n if n > 0 else None


def _multistart(objective, starts, budget: _Budget, tol=1e-14):
    """Nelder-Mead from each start, sharing an evaluation budget.

    Returns (best_value, best_params, all_converged).
    """
    best_val, best_par, converged = np.inf, None, True

    def counted(z):
        budget.used += 1
        return objective(z)

    per_start = max(budget.left // max(len(starts), 1), 1)
    for z0 in starts:
        if budget.left <= 0:
            converged = False
            break
        v0 = counted(z0)
        if v0 < best_val:
            best_val, best_par = v0, np.array(z0, float)
        if len(z0) == 0 or budget.left <= 1:
            continue
        res = minimize(counted, z0, method="Nelder-Mead",
                       options={"maxfev": max(min(per_start, budget.left) - 1, 1),
                                "xatol": 1e-12, "fatol": tol})
        if res.fun < best_val:
            best_val, best_par = float(res.fun), np.array(res.x, float)
        converged = converged and bool(res.success)
    return best_val, best_par, converged


def total_convexity_modulus(f: ConvexFunction, x, t: float, budget: int = 4000,
                            n_starts: int = 32, seed: int = 0) -> ModulusEstimate:
    """Estimate inf { D_f(x, y) : ||y - x|| = t } by multi-start search
    over the sphere, parametrised by unnormalised directions."""
    x = as_point(x, f.dim)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return ModulusEstimate(0.0, 0.0, "converged", 0, x, x.copy())
    if not f.in_domain(x):
        raise DomainError("x outside the domain")

    def on_sphere(u):
        d = _unit(np.asarray(u, float))
        return None if d is None else x + t * d

    def objective(u):
        y = on_sphere(u)
        if y is None or not f.in_domain(y):
            return np.inf
        return bregman(f, x, y)

    bud = _Budget(budget)
    if f.dim == 1:
        # the sphere is two points
        vals = [(objective([s]), s) for s in (1.0, -1.0)]
        bud.used = 2
        val, s = min(vals)
        if not np.isfinite(val):
            raise DomainError("the sphere around x lies outside the domain")
        return ModulusEstimate(float(t), max(float(val), 0.0), "converged", 2, x, x + t * s)

    if f.dim == 2:
        return _circle_modulus(f, x, t, budget)

    rng = np.random.default_rng(seed)
    axes = [s * e for e in np.eye(f.dim) for s in (1.0, -1.0)]
    starts = axes[:n_starts] + [rng.standard_normal(f.dim) for _ in range(max(n_starts - len(axes), 0))]
    val, par, conv = _multistart(objective, starts, bud)
    if not np.isfinite(val):
        raise DomainError("the sphere around x lies outside the domain")
    return ModulusEstimate(float(t), max(float(val), 0.0),
                           "converged" if conv else "budget_exhausted",
                           bud.used, x, on_sphere(par))


def _circle_modulus(f: ConvexFunction, x, t, budget, n_grid=720):
    """In the plane the sphere is a circle: scan angles, then refine the
    best few cells with a bounded scalar search."""
    n_grid = min(n_grid, max(budget // 2, 8))
    theta = np.linspace(0.0, 2 * np.pi, n_grid, endpoint=False)
    Y = x + t * np.c_[np.cos(theta), np.sin(theta)]
    inside = f.in_domain(Y)
    if not np.any(inside):
        raise DomainError("the sphere around x lies outside the domain")
    vals = np.full(n_grid, np.inf)
    vals[inside] = bregman(f, np.broadcast_to(x, Y[inside].shape), Y[inside])
    used = n_grid

    def objective(a):
        y = x + t * np.array([np.cos(a), np.sin(a)])
        return bregman(f, x, y) if f.in_domain(y) else np.inf

    best = int(np.argmin(vals))
    best_val, best_a = float(vals[best]), float(theta[best])
    h = 2 * np.pi / n_grid
    per = max((budget - used) // 4, 0)
    status = "converged"
    for k in np.argsort(vals)[:4]:
        if per < 5 or not np.isfinite(vals[k]):
            status = "budget_exhausted" if per < 5 else status
            break
        res = minimize_scalar(objective, bounds=(theta[k] - h, theta[k] + h), method="bounded",
                              options={"xatol": 1e-13, "maxiter": per})
        used += int(res.nfev)
        if res.fun < best_val:
            best_val, best_a = float(res.fun), float(res.x)
    return ModulusEstimate(float(t), max(best_val, 0.0), status, used, x,
                           x + t * np.array([np.cos(best_a), np.sin(best_a)]))


def _midpoint_gap(f: ConvexFunction, x, y) -> float:
    return float(f.values(x) + f.values(y) - 2 * f.values(0.5 * (x + y)))


def uniform_convexity_modulus(f: ConvexFunction, t: float, region, budget: int = 20000,
                              n_starts: int = 32, seed: int = 0) -> ModulusEstimate:
    """Estimate inf { f(x) + f(y) - 2 f((x+y)/2) : ||y - x|| = t } with both
    points restricted to ``region`` (a convex set inside the domain)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return ModulusEstimate(0.0, 0.0, "converged", 0)
    d = f.dim
    if region.dim != d:
        raise DimensionError("region and function dimensions differ")

    def split(z):
        z = np.asarray(z, float)
        u = _unit(z[d:])
        if u is None:
            return None, None
        return z[:d], z[:d] + t * u

    def objective(z):
        x, y = split(z)
        if x is None or not (region.contains(x) and region.contains(y)):
            return np.inf
        if not (f.in_domain(x) and f.in_domain(y)):
            return np.inf
        return _midpoint_gap(f, x, y)

    rng = np.random.default_rng(seed)
    starts = []
    for _ in range(n_starts):
        for _attempt in range(200):
            x = region.sample(rng, 1)[0]
            u = rng.standard_normal(d)
            if np.isfinite(objective(np.concatenate([x, u]))):
                starts.append(np.concatenate([x, u]))
                break
    if not starts:
        raise AssumptionError(f"no feasible pair at distance {t} in the region")
    bud = _Budget(budget)
    val, par, conv = _multistart(objective, starts, bud)
    x, y = split(par)
    return ModulusEstimate(float(t), max(float(val), 0.0),
                           "converged" if conv else "budget_exhausted",
                           bud.used, None, (x, y))


# --------------------------------------------------------------------------
# sequential consistency

@dataclass
class SequenceVerdict:
    index: int
    hypothesis_met: bool
    verdict: str
    final_norm: float
    final_divergence: float
    divergences: np.ndarray
    converse: dict


@dataclass
class SequentialConsistencyReport:
    sequences: list
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(s.verdict != FAIL for s in self.sequences)


def sequential_consistency_probe(f: ConvexFunction, pair_sequences, tol: float = LIMIT_ATOL,
                                 shrink: float = 1e-2) -> SequentialConsistencyReport:
    """Check that D_f(x_n, y_n) -> 0 along sequences with ||x_n - y_n|| -> 0.

    A sequence meets the hypothesis when the largest separation over its
    last quarter is below ``shrink`` times the largest over its first
    quarter. Its verdict is PASS when the final divergence is at most
    ``tol``. The converse (small divergence forcing small separation) is
    only reported, never judged.
    """
    out = []
    for k, seq in enumerate(pair_sequences):
        X, Y = _pairs(seq, f.dim)
        norms = np.linalg.norm(X - Y, axis=-1)
        div = np.atleast_1d(bregman(f, X, Y))
        q = max(len(norms) // 4, 1)
        head, tail = norms[:q].max(), norms[-q:].max()
        met = bool(head > 0 and tail <= shrink * head) or bool(np.all(norms == 0))
        if not met:
            verdict = "hypothesis not met"
        else:
            verdict = PASS if div[-1] <= tol else FAIL
        converse = {"divergence_vanishes": bool(div[-1] <= tol),
                    "norm_vanishes": bool(norms[-1] <= np.sqrt(tol))}
        out.append(SequenceVerdict(k, met, verdict, float(norms[-1]), float(div[-1]), div, converse))
    return SequentialConsistencyReport(out, tol)
