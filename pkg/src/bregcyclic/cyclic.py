"""p-cyclic self-mappings over convex sets and their sampled certificates.

Set indices are 0-based: the map sends set ``i`` into set ``(i + 1) % p``.
The map is given piecewise, one callable per source set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .certificate import FAIL, PASS, Certificate, from_margins
from .convex_core import ConvexFunction, as_point, bregman, inner_product
from .errors import AssumptionError, OrbitError
from .sets import ConvexSet, sample_with_extremes

HYBRID_SLACK = 1e-12
METRIC_SLACK = 1e-9


@dataclass(frozen=True)
class CyclicSystem:
    """Sets A_0..A_{p-1} and a map with T(A_i) contained in A_{i+1}."""

    sets: tuple
    pieces: tuple
    name: str = "system"
    descriptor: dict | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if len(self.sets) < 1:
            raise ValueError("a cyclic system needs at least one set")
        if len(self.pieces) != len(self.sets):
            raise ValueError("need exactly one map piece per set")
        dims = {s.dim for s in self.sets}
        if len(dims) != 1:
            raise ValueError("all sets must live in the same dimension")

    @classmethod
    def from_global(cls, sets: Sequence[ConvexSet], fn: Callable, name="system", descriptor=None):
        """Wrap a single formula valid on every set."""
        return cls(tuple(sets), (fn,) * len(sets), name, descriptor)

    @property
    def p(self) -> int:
        return len(self.sets)

    @property
    def dim(self) -> int:
        return self.sets[0].dim

    def next_index(self, i: int) -> int:
        return (i + 1) % self.p

    def apply(self, x, i: int) -> np.ndarray:
        """Image of ``x`` (assumed in set ``i``) under the piece for set ``i``."""
        return as_point(self.pieces[i % self.p](as_point(x, self.dim)), self.dim)

    def locate(self, x) -> int:
        """Index of the first set containing ``x``."""
        for i, s in enumerate(self.sets):
            if s.contains(x):
                return i
        raise AssumptionError(f"point {np.asarray(x).tolist()} lies in none of the sets")

    def iterate(self, x, i: int, steps: int, check: bool = True) -> np.ndarray:
        """T^steps x starting in set ``i``, checking each landing set."""
        z = as_point(x, self.dim)
        for k in range(steps):
            z = self.apply(z, i)
            i = self.next_index(i)
            if check:
                d = self.sets[i].signed_distance(z)
                if d > self.sets[i].tolerance:
                    raise OrbitError(f"after {k + 1} steps the iterate left set {i} "
                                     f"(signed distance {d:.3g})", stage=k + 1,
                                     set_index=i, distance=d)
        return z


# --------------------------------------------------------------------------
# simple map pieces

def affine_piece(matrix, offset=None):
    """x -> M x + c."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    c = np.zeros(M.shape[0]) if offset is None else np.asarray(offset, dtype=float).reshape(-1)

    def piece(x):
        return M @ x + c
    piece.matrix, piece.offset = M, c
    return piece


def projected_piece(piece, target: ConvexSet):
    """Compose ``piece`` with the metric projection onto ``target``."""
    def clipped(x):
        return target.project(piece(x))
    return clipped


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    # snap to exact values so quarter turns stay exact
    c, s = (round(c) if abs(c - round(c)) < 1e-15 else c), (round(s) if abs(s - round(s)) < 1e-15 else s)
    return np.array([[c, -s], [s, c]], dtype=float)


# --------------------------------------------------------------------------
# hybrid parameters

def _as_fn(v) -> Callable:
    if callable(v):
        return v
    val = float(v)
    return lambda y: val


@dataclass
class HybridParams:
    """Point-dependent factors K_i (defined on A_{i+1}) and lambda_i.

    A single function or constant passed for ``K_fns`` / ``lambda_fns`` is
    broadcast to every set index.
    """

    K_fns: list
    lambda_fns: list
    a_caps: list | None = None
    lambda_bound: float | None = None

    def __post_init__(self):
        if callable(self.K_fns) or np.isscalar(self.K_fns):
            self.K_fns = [self.K_fns]
        if callable(self.lambda_fns) or np.isscalar(self.lambda_fns):
            self.lambda_fns = [self.lambda_fns]
        self.K_fns = [_as_fn(k) for k in self.K_fns]
        self.lambda_fns = [_as_fn(l) for l in self.lambda_fns]

    @classmethod
    def constant(cls, K, lam=0.0):
        return cls([K], [lam])

    def K(self, i: int, y) -> float:
        return float(self.K_fns[i % len(self.K_fns)](y))

    def lam(self, i: int, y) -> float:
        return float(self.lambda_fns[i % len(self.lambda_fns)](y))

    def cap(self, i: int) -> float:
        if self.a_caps is None:
            return np.inf
        return float(self.a_caps[i % len(self.a_caps)])

    def check_ranges(self, sys: CyclicSystem, n_samples=100, seed=0) -> Certificate:
        """Sampled check of 0 < K_i <= a_i on A_{i+1} and |lambda| <= bound."""
        margins, wit = [], []
        for i in range(sys.p):
            rng = np.random.default_rng([seed, i])
            for y in sample_with_extremes(sys.sets[sys.next_index(i)], rng, n_samples):
                k = self.K(i, y)
                m = min(k, self.cap(i) - k)
                if self.lambda_bound is not None:
                    m = min(m, self.lambda_bound - abs(self.lam(i, y)))
                margins.append(m)
                wit.append({"set_index": i, "y": y, "K": k, "lambda": self.lam(i, y)})
        margins = np.array(margins)
        bad = margins <= 0
        if np.any(bad):
            # K must be strictly positive; a zero margin is a violation
            k = int(np.argmin(margins))
            return Certificate(FAIL, margins.size, float(margins[k]), wit[k])
        return Certificate(PASS, margins.size, float(margins.min()))


def khat_factors(sys: CyclicSystem, hp: HybridParams, y, i: int) -> list:
    """The p factors K_{i+k}(T^k y), k = 0..p-1, for y in A_{i+1}."""
    start = sys.next_index(i)
    y = as_point(y, sys.dim)
    d = sys.sets[start].signed_distance(y)
    if d > sys.sets[start].tolerance:
        raise OrbitError(f"y is not in set {start}", stage=0, set_index=start, distance=d)
    factors, z, j = [], y, start
    for k in range(sys.p):
        factors.append(hp.K((i + k) % sys.p, z))
        if k < sys.p - 1:
            z = sys.iterate(z, j, 1)
            j = sys.next_index(j)
    return factors


def khat(sys: CyclicSystem, hp: HybridParams, y, i: int) -> float:
    """Product of the K factors along the orbit of y (y in A_{i+1})."""
    out = 1.0
    for fac in khat_factors(sys, hp, y, i):
        out *= fac
    return out


# --------------------------------------------------------------------------
# certificates

def validate_cyclicity(sys: CyclicSystem, n_samples: int = 200, seed: int = 0) -> Certificate:
    """Check that sampled points of each A_i land in A_{i+1}.

    The margin of a sample is minus the signed distance of its image to
    the target set.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    margins, records = [], []
    tol = 0.0
    for i, A in enumerate(sys.sets):
        target = sys.sets[sys.next_index(i)]
        tol = max(tol, target.tolerance)
        rng = np.random.default_rng([seed, i])
        for x in sample_with_extremes(A, rng, n_samples):
            img = sys.apply(x, i)
            margins.append(-target.signed_distance(img))
            records.append((i, x, img))

    def witness(k):
        i, x, img = records[k]
        return {"set_index": i, "x": x, "image": img, "signed_distance": -margins[k]}
    return from_margins(margins, tol, witness)


def composite_map(sys: CyclicSystem, i: int, x) -> np.ndarray:
    """T^p restricted to A_i; raises :class:`OrbitError` on a set exit."""
    x = as_point(x, sys.dim)
    d = sys.sets[i].signed_distance(x)
    if d > sys.sets[i].tolerance:
        raise OrbitError(f"x is not in set {i}", stage=0, set_index=i, distance=d)
    return sys.iterate(x, i, sys.p)


def _pair_samples(A: ConvexSet, B: ConvexSet, n: int, rng):
    """Extreme-point cross pairs followed by ``n`` random pairs."""
    ea, eb = A.extreme_points(), B.extreme_points()
    X = [a for a in ea for _ in eb] + list(A.sample(rng, n))
    Y = [b for _ in ea for b in eb] + list(B.sample(rng, n))
    return np.array(X), np.array(Y)


def hybrid_certificate(sys: CyclicSystem, f: ConvexFunction, hp: HybridParams,
                       n_samples: int = 300, seed: int = 0, slack: float = HYBRID_SLACK) -> Certificate:
    """Sampled check of the point-dependent (K, lambda)-hybrid inequality

        D_f(Tx, Ty) <= K_i(y) D_f(x, y) + lambda_i(y) <x - Tx, f'(y) - f'(Ty)>

    for x in A_i, y in A_{i+1}. ``details`` also reports whether the
    product factor khat stayed <= 1 and < 1 over the sampled y.
    """
    margins, records, khats = [], [], []
    for i in range(sys.p):
        j = sys.next_index(i)
        rng = np.random.default_rng([seed, i])
        X, Y = _pair_samples(sys.sets[i], sys.sets[j], n_samples, rng)
        TX = np.array([sys.apply(x, i) for x in X])
        TY = np.array([sys.apply(y, j) for y in Y])
        K = np.array([hp.K(i, y) for y in Y])
        L = np.array([hp.lam(i, y) for y in Y])
        lhs = np.atleast_1d(bregman(f, TX, TY))
        rhs = K * np.atleast_1d(bregman(f, X, Y)) + L * np.atleast_1d(
            inner_product(X - TX, f.gradient(Y) - f.gradient(TY)))
        margins.extend(rhs - lhs)
        records.extend((i, x, y) for x, y in zip(X, Y))
        khats.extend(khat(sys, hp, y, i) for y in Y)
    khats = np.array(khats)
    details = {"khat_max": float(khats.max()), "khat_min": float(khats.min()),
               "khat_le_1": bool(np.all(khats <= 1.0)),
               "khat_lt_1": bool(np.all(khats < 1.0))}

    def witness(k):
        i, x, y = records[k]
        return {"set_index": i, "x": x, "y": y, "margin": float(margins[k])}
    return from_margins(margins, slack, witness, details)


def composite_hybrid_certificate(sys: CyclicSystem, f: ConvexFunction, i: int, K_fn, lambda_fn=0.0,
                                 n_samples: int = 300, seed: int = 0,
                                 slack: float = HYBRID_SLACK) -> Certificate:
    """Sampled check, for x, y in A_i, of

        D_f(T^p x, T^p y) <= K(y) D_f(x, y) + lambda(y) <x - T^p x, f'(y) - f'(T^p y)>.
    """
    K_fn, lambda_fn = _as_fn(K_fn), _as_fn(lambda_fn)
    A = sys.sets[i]
    rng = np.random.default_rng([seed, i])
    X, Y = _pair_samples(A, A, n_samples, rng)
    PX = np.array([composite_map(sys, i, x) for x in X])
    PY = np.array([composite_map(sys, i, y) for y in Y])
    K = np.array([K_fn(y) for y in Y], dtype=float)
    L = np.array([lambda_fn(y) for y in Y], dtype=float)
    lhs = np.atleast_1d(bregman(f, PX, PY))
    rhs = K * np.atleast_1d(bregman(f, X, Y)) + L * np.atleast_1d(
        inner_product(X - PX, f.gradient(Y) - f.gradient(PY)))
    margins = rhs - lhs
    return from_margins(margins, slack,
                        lambda k: {"set_index": i, "x": X[k], "y": Y[k], "margin": float(margins[k])})


# --------------------------------------------------------------------------
# set-to-set Bregman distance

@dataclass
class SetDistance:
    value: float
    argmin_pair: tuple
    status: str
    evaluations: int

    def to_dict(self):
        return {"value": self.value, "argmin_pair": [np.asarray(p).tolist() for p in self.argmin_pair],
                "status": self.status, "evaluations": self.evaluations}


def set_bregman_distance(f: ConvexFunction, B: ConvexSet, C: ConvexSet, budget: int = 20000,
                         seed: int = 0, n_starts: int = 32) -> SetDistance:
    """Upper bound on inf { D_f(x, y) : x in B, y in C } by multi-start
    projected gradient descent on the pair, with backtracking steps.

    Starts pair extreme and random points of B with their projections onto
    C, then with random points of C.
    """
    if f.hess_func is None:
        raise AssumptionError(f"{f.name} has no Hessian; needed for the y-gradient")
    rng = np.random.default_rng(seed)
    evals = 0

    def F(x, y):
        nonlocal evals
        evals += 1
        return bregman(f, x, y)

    starts = []
    for x in sample_with_extremes(B, rng, max(n_starts // 2, 1)):
        starts.append((x, C.project(x)))
    for x, y in zip(B.sample(rng, n_starts), C.sample(rng, n_starts)):
        starts.append((x, y))
    starts = starts[:max(n_starts, 1)]
    per_start = max(budget // len(starts), 4)

    best = (np.inf, None)
    all_converged = True
    for x, y in starts:
        if evals >= budget:
            all_converged = False
            break
        try:
            val = F(x, y)
        except Exception:
            continue
        step, cap, converged = 1.0, evals + per_start, False
        while evals < min(cap, budget):
            gx = f.gradient(x) - f.gradient(y)
            gy = -f.hessian(y) @ (x - y)
            xn, yn, vn = x, y, val
            dx = dy = np.zeros_like(x)
            while evals < min(cap, budget):
                xn, yn = B.project(x - step * gx), C.project(y - step * gy)
                dx, dy = xn - x, yn - y
                vn = F(xn, yn)
                model = val + gx @ dx + gy @ dy + (dx @ dx + dy @ dy) / (2 * step)
                if vn <= model + 1e-15 * (1 + abs(val)):
                    break
                step *= 0.5
            move = np.sqrt(dx @ dx + dy @ dy)
            if vn <= val:
                x, y, val = xn, yn, vn
            if move <= 1e-13 * (1 + np.linalg.norm(x) + np.linalg.norm(y)) or step < 1e-20:
                converged = True
                break
            step = min(step * 2.0, 1e6)
        if val < best[0]:
            best = (val, (x.copy(), y.copy()))
            best_conv = converged
        all_converged = all_converged and converged
    if best[1] is None:
        raise AssumptionError("no feasible evaluation within the budget")
    return SetDistance(max(float(best[0]), 0.0), best[1],
                       "converged" if best_conv else "budget_exhausted", evals)


def set_distance(B: ConvexSet, C: ConvexSet, budget: int = 20000, seed: int = 0) -> float:
    """Euclidean dist(B, C), via the squared-norm Bregman distance."""
    from .functions import FunctionSpec, build
    sq = build(FunctionSpec("squared_norm", B.dim))
    return float(np.sqrt(set_bregman_distance(sq, B, C, budget, seed).value))


# --------------------------------------------------------------------------
# metric contraction certificates

def composite_contraction_certificate(sys: CyclicSystem, i: int, n_samples: int = 300,
                                      seed: int = 0) -> Certificate:
    """Sampled Lipschitz estimate of T^p on A_i; PASS iff it is < 1."""
    A = sys.sets[i]
    rng = np.random.default_rng([seed, i, 1])
    X, Y = _pair_samples(A, A, n_samples, rng)
    keep = np.linalg.norm(X - Y, axis=1) > 1e-9
    X, Y = X[keep], Y[keep]
    PX = np.array([composite_map(sys, i, x) for x in X])
    PY = np.array([composite_map(sys, i, y) for y in Y])
    ratios = np.linalg.norm(PX - PY, axis=1) / np.linalg.norm(X - Y, axis=1)
    k = int(np.argmax(ratios))
    lip = float(ratios[k])
    details = {"set_index": i, "lipschitz_estimate": lip}
    if lip < 1 - 1e-12:
        return Certificate(PASS, ratios.size, 1 - lip, None, details)
    return Certificate(FAIL, ratios.size, 1 - lip,
                       {"set_index": i, "x": X[k], "y": Y[k], "ratio": lip}, details)


def meir_keeler_evidence(sys: CyclicSystem, i: int, n_samples: int = 400, seed: int = 0,
                         levels: int = 10) -> Certificate:
    """Sampled epsilon-delta evidence that T^p is Meir-Keeler on A_i.

    For eps = diam(A_i) * 2^-m, m = 1..levels, pairs with
    eps <= |x - y| < 2 eps are drawn and the largest delta in
    {eps 2^-q : q = 0..10} is sought such that every sampled pair with
    |x - y| < eps + delta satisfies |T^p x - T^p y| < eps. This is sampled
    evidence only.
    """
    A = sys.sets[i]
    rng = np.random.default_rng([seed, i, 2])
    diam = A.diameter
    found, margins, witnesses = {}, [], []
    for m in range(1, levels + 1):
        eps = diam * 2.0 ** -m
        xs = A.sample(rng, n_samples)
        r = rng.uniform(eps, 2 * eps, size=n_samples)
        u = rng.standard_normal((n_samples, A.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pairs = []
        for x, rr, uu in zip(xs, r, u):
            for y in (x + rr * uu, x - rr * uu):
                if A.contains(y, tol=0.0):
                    pairs.append((x, y, rr))
                    break
        img = [(np.linalg.norm(composite_map(sys, i, x) - composite_map(sys, i, y)), rr, x, y)
               for x, y, rr in pairs]
        delta = None
        for q in range(11):
            dq = eps * 2.0 ** -q
            band = [t for t in img if t[1] < eps + dq]
            if all(t[0] < eps for t in band):
                delta = dq
                break
        found[m] = {"eps": eps, "delta": delta, "pairs": len(img)}
        if delta is None:
            worst = max(img, key=lambda t: t[0])
            margins.append(eps - worst[0])
            witnesses.append({"set_index": i, "eps": eps, "x": worst[2], "y": worst[3]})
    details = {"label": "sampled evidence", "levels": found}
    if margins:
        k = int(np.argmin(margins))
        return Certificate(FAIL, len(found), float(margins[k]), witnesses[k], details)
    return Certificate(PASS, len(found), 0.0, None, details)


def cyclic_contraction_certificate(sys: CyclicSystem, k: float, n_samples: int = 200, seed: int = 0,
                                   slack: float = METRIC_SLACK) -> Certificate:
    """Sampled check of the cyclic contraction inequality

        |Tx - Ty| <= k |x - y| + (1 - k) dist(A_i, A_{i+1}),  x in A_i, y in A_{i+1},

    together with strict contractivity of every composite T^p on A_i. The
    verdict requires both; ``details`` reports each part and the Meir-Keeler
    evidence.
    """
    if sys.p < 2:
        raise AssumptionError("the cyclic contraction certificate needs p >= 2")
    if not 0 < k < 1:
        raise ValueError("k must lie in (0, 1)")
    margins, records, dists = [], [], []
    for i in range(sys.p):
        j = sys.next_index(i)
        dist = set_distance(sys.sets[i], sys.sets[j], seed=seed)
        dists.append(dist)
        rng = np.random.default_rng([seed, i])
        X, Y = _pair_samples(sys.sets[i], sys.sets[j], n_samples, rng)
        for x, y in zip(X, Y):
            lhs = np.linalg.norm(sys.apply(x, i) - sys.apply(y, j))
            margins.append(k * np.linalg.norm(x - y) + (1 - k) * dist - lhs)
            records.append((i, x, y))
    cyc = from_margins(margins, slack,
                       lambda n: {"part": "cyclic", "set_index": records[n][0], "x": records[n][1],
                                  "y": records[n][2], "margin": float(margins[n])})
    comps = [composite_contraction_certificate(sys, i, n_samples, seed) for i in range(sys.p)]
    mk = [meir_keeler_evidence(sys, i, seed=seed) for i in range(sys.p)]
    details = {"k": k, "distances": dists, "cyclic_verdict": cyc.verdict,
               "cyclic_worst_margin": cyc.worst_margin,
               "composite_verdicts": [c.verdict for c in comps],
               "lipschitz_estimates": [c.details["lipschitz_estimate"] for c in comps],
               "meir_keeler": [c.to_dict() for c in mk]}
    composite_ok = all(c.passed for c in comps)
    n = cyc.samples_checked + sum(c.samples_checked for c in comps)
    if cyc.passed and composite_ok:
        return Certificate(PASS, n, min([cyc.worst_margin] + [c.worst_margin for c in comps]), None, details)
    if not cyc.passed:
        return Certificate(FAIL, n, cyc.worst_margin, cyc.witness, details)
    bad = next(c for c in comps if not c.passed)
    return Certificate(FAIL, n, bad.worst_margin, dict(bad.witness, part="composite"), details)
