"""Orbits, averaged (Cesaro) sequences, fixed-point and best-proximity search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .certificate import FAIL, PASS, Certificate, from_margins
from .convex_core import ConvexFunction, as_point, bregman
from .cyclic import CyclicSystem, HybridParams, composite_map, hybrid_certificate, khat, set_distance
from .errors import AssumptionError, OrbitError
from .sets import sample_with_extremes

CESARO_KINDS = ("plain", "comp_i", "comp_ij", "shift_j", "ext_j", "ext_ij")


@dataclass
class OrbitTrace:
    """x, Tx, ..., T^n x with the index of the set holding each point.

    ``error`` is set when the orbit was cut short because an iterate left
    its expected set.
    """

    points: np.ndarray
    set_indices: list
    start: np.ndarray
    error: str | None = None

    @property
    def length(self) -> int:
        return len(self.points)

    def __len__(self):
        return len(self.points)


def orbit(sys: CyclicSystem, x, n: int, start_index: int | None = None) -> OrbitTrace:
    """The first ``n`` iterates of ``x`` (``n + 1`` points including x)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = as_point(x, sys.dim)
    i = sys.locate(x) if start_index is None else start_index
    pts, idx = [x], [i]
    error = None
    z = x
    for k in range(n):
        try:
            z = sys.iterate(z, i, 1)
        except OrbitError as exc:
            error = f"step {k + 1}: {exc}"
            break
        i = sys.next_index(i)
        pts.append(z)
        idx.append(i)
    return OrbitTrace(np.array(pts), idx, x, error)


def bregman_trajectory(f: ConvexFunction, tx: OrbitTrace, ty: OrbitTrace) -> np.ndarray:
    """D_f(T^n x, T^n y) for every n of two equally long traces."""
    if tx.length != ty.length:
        raise ValueError(f"trace lengths differ: {tx.length} vs {ty.length}")
    return np.atleast_1d(bregman(f, tx.points, ty.points))


@dataclass
class GeometricBoundReport:
    lhs: np.ndarray
    bound: np.ndarray
    fixed_khat_bound: np.ndarray
    margins: np.ndarray
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margins >= -self.tolerance))


def geometric_bound_check(f: ConvexFunction, sys: CyclicSystem, hp: HybridParams, x, y,
                          n_blocks: int, i: int | None = None, tolerance: float = 1e-10,
                          n_samples: int = 200, seed: int = 0) -> GeometricBoundReport:
    """Check D_f(T^{np} x, T^{np} y) <= prod_{m<n} khat(T^{mp} y) * D_f(x, y).

    ``x`` must lie in A_i and ``y`` in A_{i+1}. The hybrid inequality with
    lambda identically zero is verified first (sampled); a failure raises
    :class:`AssumptionError`. ``fixed_khat_bound`` holds khat(y)^n D_f(x, y)
    for comparison; the two agree when khat is constant along the orbit.
    """
    x = as_point(x, sys.dim)
    y = as_point(y, sys.dim)
    i = sys.locate(x) if i is None else i
    j = sys.next_index(i)
    if not sys.sets[j].contains(y):
        raise AssumptionError(f"y must lie in set {j}")
    cert = hybrid_certificate(sys, f, hp, n_samples=n_samples, seed=seed)
    if not cert.passed:
        raise AssumptionError("hybrid inequality not established on samples")
    ox = orbit(sys, x, n_blocks * sys.p, i)
    oy = orbit(sys, y, n_blocks * sys.p, j)
    for tr in (ox, oy):
        if tr.error:
            raise OrbitError(tr.error)
    lam = [hp.lam((i + k) % sys.p, oy.points[k]) for k in range(n_blocks * sys.p)]
    if any(v != 0 for v in lam):
        raise AssumptionError("lambda must vanish along the orbit of y")
    d0 = bregman(f, x, y)
    lhs, bound, fixed = [], [], []
    prod = 1.0
    k0 = khat(sys, hp, y, i)
    for n in range(1, n_blocks + 1):
        prod *= khat(sys, hp, oy.points[(n - 1) * sys.p], i)
        lhs.append(bregman(f, ox.points[n * sys.p], oy.points[n * sys.p]))
        bound.append(prod * d0)
        fixed.append(k0 ** n * d0)
    lhs, bound = np.array(lhs), np.array(bound)
    return GeometricBoundReport(lhs, bound, np.array(fixed), bound - lhs, tolerance)


# --------------------------------------------------------------------------
# averaged sequences

@dataclass
class CesaroTrace:
    kind: str
    i: int
    j: int
    values: np.ndarray  # values[n - 1] is S_n

    def __getitem__(self, n):
        """S_n for n >= 1."""
        if n < 1:
            raise IndexError("averages are indexed from n = 1")
        return self.values[n - 1]


def _indices(kind, n, j, p):
    """Orbit exponents averaged into S_n."""
    if kind == "plain":
        return np.arange(n)
    if kind == "comp_i":
        return np.arange(n) * p
    if kind == "comp_ij":
        return np.arange(n) * p + j
    if kind == "shift_j":
        return np.arange(n) + j
    if kind == "ext_j":
        return np.arange(n + j)
    if kind == "ext_ij":
        return np.arange(n + j) * p
    raise ValueError(f"unknown Cesaro kind {kind!r}")


def cesaro_exponents(kind: str, n: int, j: int, p: int) -> np.ndarray:
    return _indices(kind, n, j, p)


def cesaro(sys: CyclicSystem, x, kind: str, N: int, i: int | None = None, j: int = 0,
           trace: OrbitTrace | None = None) -> CesaroTrace:
    """Averaged sequence S_1..S_N of the requested kind.

    ``plain``  : (1/n) sum_{k<n} T^k x
    ``comp_i`` : (1/n) sum_{k<n} T^{kp} x
    ``comp_ij``: (1/n) sum_{k<n} T^{kp+j} x, 0 <= j <= p-1
    ``shift_j``: (1/n) sum_{k<n} T^{k+j} x
    ``ext_j``  : (1/n) sum_{k<n+j} T^k x
    ``ext_ij`` : (1/n) sum_{k<n+j} T^{kp} x

    Running sums use Neumaier compensation.
    """
    if kind not in CESARO_KINDS:
        raise ValueError(f"unknown Cesaro kind {kind!r}")
    if N < 1:
        raise ValueError("N must be >= 1")
    if j < 0:
        raise ValueError("j must be nonnegative")
    if kind == "comp_ij" and j > sys.p - 1:
        raise ValueError(f"comp_ij needs 0 <= j <= p - 1 = {sys.p - 1}")
    x = as_point(x, sys.dim)
    if i is None:
        i = sys.locate(x)
    elif kind in ("comp_i", "comp_ij", "ext_ij") and not sys.sets[i].contains(x):
        raise AssumptionError(f"x must lie in set {i} for kind {kind}")
    p = sys.p
    need = int(_indices(kind, N, j, p).max())
    if trace is None:
        trace = orbit(sys, x, max(need, 1), i)
    if trace.error or trace.length <= need:
        raise OrbitError(trace.error or "orbit too short")
    pts = trace.points

    values = np.empty((N, sys.dim))
    total = np.zeros(sys.dim)
    comp = np.zeros(sys.dim)
    used = 0

    def add(v):
        nonlocal total, comp
        t = total + v
        big = np.abs(total) >= np.abs(v)
        comp += np.where(big, (total - t) + v, (v - t) + total)
        total = t

    for n in range(1, N + 1):
        idx = _indices(kind, n, j, p)
        for e in idx[used:]:
            add(pts[e])
        used = len(idx)
        values[n - 1] = (total + comp) / n
    return CesaroTrace(kind, i, j, values)


@dataclass
class IdentityResidual:
    name: str
    status: str  # "pass", "fail", "not_applicable"
    max_residual: float
    tolerance: float
    note: str = ""


@dataclass
class AveragingIdentityReport:
    j: int
    i: int
    N: int
    scale: float
    identities: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.identities)

    def by_name(self, name) -> IdentityResidual:
        return next(r for r in self.identities if r.name == name)


def _slice_sum(pts, exps):
    """Plain reversed-order sum, deliberately independent of the running sums."""
    if len(exps) == 0:
        return np.zeros(pts.shape[1])
    return np.sum(pts[np.asarray(exps)[::-1]], axis=0)


def affinity_gate(sys: CyclicSystem, i: int, j: int, hull_points, n_checks: int = 32,
                  seed: int = 0, rtol: float = 1e-12) -> bool:
    """Sampled check that T^j (from set i) commutes with convex combinations
    of ``hull_points``."""
    hull_points = np.asarray(hull_points, float)
    rng = np.random.default_rng(seed)
    scale = 1.0 + float(np.max(np.linalg.norm(hull_points, axis=1)))
    images = np.array([sys.iterate(z, i, j, check=False) for z in hull_points])
    for _ in range(n_checks):
        w = rng.dirichlet(np.ones(len(hull_points)))
        mix = w @ hull_points
        lhs = sys.iterate(mix, i, j, check=False)
        if np.linalg.norm(lhs - w @ images) > rtol * scale:
            return False
    return True


def averaging_identity_check(sys: CyclicSystem, x, j: int, N: int, i: int | None = None,
                             rtol: float = 1e-12, seed: int = 0) -> AveragingIdentityReport:
    """Evaluate both sides of four exact identities between averaged sequences
    for n = 1..N and report the largest absolute residual of each.

    (1) S^(j)_n - S_n       = (1/n) sum_{k<j} (T^{k+n} x - T^k x)
    (2) S^[j]_n - S_n       = (1/n) sum_{k<j} T^{k+n} x
    (3) S^(i,j)_n           = T^j ((n+1)/n S^(i)_{n+1} - (1/n) T^{np} x)
    (4) S^[i,j]_n           = S^(i)_n + (1/n) sum_{k<j} T^{(n+k)p} x

    Left sides come from :func:`cesaro`, right sides from direct sums over
    the orbit. (3) is only meaningful when 0 <= j <= p-1 and T^j acts
    affinely on the hull of the averaged points; otherwise it is reported as
    not applicable. The tolerance is ``rtol * (1 + scale)``, ``scale`` being
    the largest norm along the orbit.
    """
    x = as_point(x, sys.dim)
    i = sys.locate(x) if i is None else i
    p = sys.p
    need = max(N + j, (N + j) * p)
    tr = orbit(sys, x, need, i)
    if tr.error:
        raise OrbitError(tr.error)
    pts = tr.points
    scale = float(np.max(np.linalg.norm(pts, axis=1)))
    tol = rtol * (1 + scale)
    rep = AveragingIdentityReport(j, i, N, scale)
    ns = np.arange(1, N + 1)

    S = cesaro(sys, x, "plain", N, i, trace=tr).values
    Sj = cesaro(sys, x, "shift_j", N, i, j, trace=tr).values
    Sext = cesaro(sys, x, "ext_j", N, i, j, trace=tr).values
    Si = cesaro(sys, x, "comp_i", N + 1, i, trace=tr).values
    Sext_i = cesaro(sys, x, "ext_ij", N, i, j, trace=tr).values

    r1 = max(np.linalg.norm((Sj[n - 1] - S[n - 1])
                            - (_slice_sum(pts, np.arange(j) + n) - _slice_sum(pts, np.arange(j))) / n)
             for n in ns)
    r2 = max(np.linalg.norm((Sext[n - 1] - S[n - 1]) - _slice_sum(pts, np.arange(j) + n) / n)
             for n in ns)
    r4 = max(np.linalg.norm(Sext_i[n - 1] - (Si[n - 1] + _slice_sum(pts, (np.arange(j) + n) * p) / n))
             for n in ns)
    for name, r in (("shift", r1), ("extension", r2), ("composite_extension", r4)):
        rep.identities.append(IdentityResidual(name, "pass" if r < tol else "fail", float(r), tol))

    if not 0 <= j <= p - 1:
        rep.identities.append(IdentityResidual("composite_shift", "not_applicable", float("nan"), tol,
                                               f"needs 0 <= j <= {p - 1}"))
    else:
        hull = pts[np.arange(N + 1) * p]
        if not affinity_gate(sys, i, j, hull, seed=seed, rtol=rtol):
            rep.identities.append(IdentityResidual("composite_shift", "not_applicable", float("nan"), tol,
                                                   "T^j is not affine on the sampled hull"))
        else:
            Sij = cesaro(sys, x, "comp_ij", N, i, j, trace=tr).values
            r3 = 0.0
            for n in ns:
                inner = (n + 1) / n * Si[n] - pts[n * p] / n
                r3 = max(r3, float(np.linalg.norm(Sij[n - 1] - sys.iterate(inner, i, j, check=False))))
            rep.identities.append(IdentityResidual("composite_shift", "pass" if r3 < tol else "fail",
                                                   r3, tol, "affinity gate passed"))
    return rep


# --------------------------------------------------------------------------
# limits

@dataclass
class ConvergenceReport:
    classification: str  # fixed_point | proximity_cycle | no_convergence
    limit: np.ndarray | None
    residual: float
    iterations_used: int
    cycle: list | None = None
    details: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.classification != "no_convergence"

    def to_dict(self):
        from .certificate import to_jsonable
        return to_jsonable({"classification": self.classification, "limit": self.limit,
                            "residual": self.residual, "iterations_used": self.iterations_used,
                            "cycle": self.cycle, "details": self.details})


def find_fixed_point(sys: CyclicSystem, f: ConvexFunction | None, x0, tol: float = 1e-10,
                     max_iter: int = 1000, start_index: int | None = None) -> ConvergenceReport:
    """Iterate T until ||T^{n+1} x - T^n x|| <= tol, then confirm ||Tz - z|| <= tol
    for z = T^{n+1} x.

    The stopping rule is metric; when ``f`` is given the Bregman residual
    D_f(T^n x, T^{n+1} x) at the stop is recorded in ``details``.
    ``iterations_used`` is the n at which the rule fired.
    """
    x = as_point(x0, sys.dim)
    i = sys.locate(x) if start_index is None else start_index
    cur = x
    for n in range(max_iter):
        nxt = sys.iterate(cur, i, 1)
        j = sys.next_index(i)
        step = float(np.linalg.norm(nxt - cur))
        if step <= tol:
            tz = sys.iterate(nxt, j, 1)
            res = float(np.linalg.norm(tz - nxt))
            if res <= tol:
                details = {"step": step}
                if f is not None:
                    details["bregman_residual"] = bregman(f, cur, nxt)
                return ConvergenceReport("fixed_point", nxt, res, n, None, details)
        cur, i = nxt, j
    return ConvergenceReport("no_convergence", None, float(np.linalg.norm(sys.iterate(cur, i, 1) - cur)),
                             max_iter, None, {"last": cur})


def find_proximity_cycle(sys: CyclicSystem, x0, tol: float = 1e-10, max_iter: int = 1000,
                         start_index: int | None = None, distance_rtol: float | None = None,
                         seed: int = 0) -> ConvergenceReport:
    """Iterate the composite T^p on the set holding ``x0`` to its fixed
    point v, then emit the cycle (v, Tv, ..., T^{p-1} v).

    Each consecutive gap |T^{k+1} v - T^k v| is compared to
    dist(A_k, A_{k+1}); the comparison (with tolerance
    ``distance_rtol * (1 + dist)``, default ``max(tol, 1e-8)``) is reported
    in ``details["realizes_distance"]``.
    """
    x = as_point(x0, sys.dim)
    i = sys.locate(x) if start_index is None else start_index
    rtol = max(tol, 1e-8) if distance_rtol is None else distance_rtol
    cur = x
    for n in range(max_iter):
        nxt = composite_map(sys, i, cur)
        if np.linalg.norm(nxt - cur) <= tol:
            v = composite_map(sys, i, nxt)
            res = float(np.linalg.norm(v - nxt))
            if res > tol:
                cur = nxt
                continue
            v = nxt
            cycle, k = [v], i
            for _ in range(sys.p - 1):
                cycle.append(sys.iterate(cycle[-1], k, 1))
                k = sys.next_index(k)
            gaps, dists, ok = [], [], True
            for m in range(sys.p):
                a = (i + m) % sys.p
                b = sys.next_index(a)
                after = cycle[m + 1] if m + 1 < sys.p else sys.iterate(cycle[-1], a, 1)
                gap = float(np.linalg.norm(after - cycle[m]))
                dist = set_distance(sys.sets[a], sys.sets[b], seed=seed)
                gaps.append(gap)
                dists.append(dist)
                ok = ok and abs(gap - dist) <= rtol * (1 + dist)
            details = {"start_set": i, "gaps": gaps, "distances": dists, "realizes_distance": ok}
            return ConvergenceReport("proximity_cycle", v, res, n, cycle, details)
        cur = nxt
    return ConvergenceReport("no_convergence", None,
                             float(np.linalg.norm(composite_map(sys, i, cur) - cur)), max_iter, None,
                             {"start_set": i, "last": cur})


def _check_fixed(sys, i, v, tol):
    v = as_point(v, sys.dim)
    r = float(np.linalg.norm(composite_map(sys, i, v) - v))
    if r > tol:
        raise AssumptionError(f"point {v.tolist()} is not fixed by T^p on set {i} (residual {r:.3g})")
    return v


def quasi_nonexpansive_certificate(f: ConvexFunction, sys: CyclicSystem, i: int, v,
                                   n_samples: int = 200, m_blocks: int = 20, seed: int = 0,
                                   tol: float = 1e-9, slack: float = 1e-10) -> Certificate:
    """Finite-horizon check of max_{m <= m_blocks} D_f(v, T^{pm} x) <= D_f(v, x)
    for sampled x in A_i, with v a fixed point of T^p on A_i."""
    v = _check_fixed(sys, i, v, tol)
    rng = np.random.default_rng([seed, i])
    X = sample_with_extremes(sys.sets[i], rng, n_samples)
    margins, worst_m = [], []
    for x in X:
        base = bregman(f, v, x)
        z, peak, arg = x, -np.inf, 0
        for m in range(1, m_blocks + 1):
            z = composite_map(sys, i, z)
            d = bregman(f, v, z)
            if d > peak:
                peak, arg = d, m
        margins.append(base - peak)
        worst_m.append(arg)
    return from_margins(margins, slack,
                        lambda k: {"set_index": i, "x": X[k], "v": v, "block": worst_m[k],
                                   "margin": float(margins[k])},
                        {"horizon": m_blocks})


def fixed_point_set_convexity_probe(sys: CyclicSystem, i: int, known_fixed, n_pairs: int = 1000,
                                    seed: int = 0, tol: float = 1e-9) -> Certificate:
    """Check that convex combinations of known fixed points of T^p on A_i
    are again fixed, within ``tol``."""
    pts = np.array([_check_fixed(sys, i, v, tol) for v in known_fixed])
    if len(pts) == 0:
        raise ValueError("need at least one fixed point")
    rng = np.random.default_rng(seed)
    a = rng.integers(len(pts), size=n_pairs)
    b = rng.integers(len(pts), size=n_pairs)
    alpha = rng.uniform(size=n_pairs)
    margins = []
    for u, w, al in zip(pts[a], pts[b], alpha):
        z = al * u + (1 - al) * w
        margins.append(tol - float(np.linalg.norm(composite_map(sys, i, z) - z)))
    return from_margins(margins, 0.0,
                        lambda k: {"u": pts[a[k]], "w": pts[b[k]], "alpha": float(alpha[k]),
                                   "residual": tol - margins[k]})
