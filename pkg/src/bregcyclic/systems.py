"""Small cyclic systems with known behaviour, used by tests, scenarios and demos."""
from __future__ import annotations

import numpy as np

from .cyclic import CyclicSystem, affine_piece, projected_piece, rotation_matrix
from .sets import Ball, Box, ConvexSet, Interval, make_set


def halving_system() -> CyclicSystem:
    """p = 1, A = [-1, 1], Tx = x/2."""
    return CyclicSystem.from_global([Interval(-1, 1)], affine_piece([[0.5]]), "halving")


def two_interval_system() -> CyclicSystem:
    """A_0 = [1, 3], A_1 = [-3, -1], T x = -(x + 1)/2 on A_0 and (1 - x)/2 on A_1.

    The composite T^2 on A_0 is x -> (x + 3)/4 with fixed point 1; the
    best proximity pair is (1, -1) at distance 2.
    """
    return CyclicSystem([Interval(1, 3), Interval(-3, -1)],
                        [affine_piece([[-0.5]], [-0.5]), affine_piece([[-0.5]], [0.5])],
                        "two_interval")


def intersecting_system() -> CyclicSystem:
    """A_0 = A_1 = [-1, 1], Tx = -x/2; the cycle degenerates to (0, 0)."""
    return CyclicSystem.from_global([Interval(-1, 1), Interval(-1, 1)], affine_piece([[-0.5]]),
                                    "intersecting")


def rotation_system(angle: float = np.pi / 2) -> CyclicSystem:
    """p = 1, unit disk, rotation by ``angle`` (an isometry fixing 0)."""
    return CyclicSystem.from_global([Ball([0.0, 0.0], 1.0)], affine_piece(rotation_matrix(angle)),
                                    "rotation")


def reflection_system() -> CyclicSystem:
    """A_0 = [1, 2], A_1 = [-2, -1], Tx = -x; T^2 is the identity."""
    return CyclicSystem.from_global([Interval(1, 2), Interval(-2, -1)], affine_piece([[-1.0]]),
                                    "reflection")


def plane_shrink_system() -> CyclicSystem:
    """p = 1, [-1, 1]^2, T(x, y) = (x, y/2); fixed set is the x-axis segment."""
    return CyclicSystem.from_global([Box([-1, -1], [1, 1])], affine_piece(np.diag([1.0, 0.5])),
                                    "plane_shrink")


def expanding_clipped_system() -> CyclicSystem:
    """p = 1, [-1, 1], Tx = 2x projected back onto the interval."""
    A = Interval(-1, 1)
    return CyclicSystem.from_global([A], projected_piece(affine_piece([[2.0]]), A), "expanding_clipped")


def non_cyclic_system() -> CyclicSystem:
    """The two-interval sets with Tx = -x/2, which misses A_1 from A_0."""
    return CyclicSystem.from_global([Interval(1, 3), Interval(-3, -1)], affine_piece([[-0.5]]),
                                    "non_cyclic")


def constant_system() -> CyclicSystem:
    """p = 1, [-1, 1], Tx = 0."""
    return CyclicSystem.from_global([Interval(-1, 1)], affine_piece([[0.0]]), "constant")


# --------------------------------------------------------------------------
# JSON map descriptors

MAP_KINDS = ("affine", "rotation", "constant")


def _piece_from(desc: dict, target: ConvexSet, dim: int):
    kind = desc.get("kind", "affine")
    if kind == "affine":
        M = np.asarray(desc["matrix"], dtype=float).reshape(dim, dim)
        piece = affine_piece(M, desc.get("offset"))
    elif kind == "rotation":
        piece = affine_piece(rotation_matrix(float(desc["angle"])))
    elif kind == "constant":
        piece = affine_piece(np.zeros((dim, dim)), desc["value"])
    else:
        raise ValueError(f"unknown map kind {kind!r}")
    if desc.get("project_to_target", False):
        piece = projected_piece(piece, target)
    return piece


def system_from_descriptor(sets: list, map_desc: dict, name="system") -> CyclicSystem:
    """Build a system from set descriptors and a map descriptor.

    ``map_desc`` is either a single piece (``{"kind": "affine", "matrix":
    ..., "offset": ...}``, broadcast to all sets) or ``{"pieces": [...]}``
    with one piece per set. Any piece may set ``project_to_target``.
    """
    built = [s if isinstance(s, ConvexSet) else make_set(s) for s in sets]
    p = len(built)
    dim = built[0].dim
    descs = map_desc["pieces"] if "pieces" in map_desc else [map_desc] * p
    if len(descs) != p:
        raise ValueError(f"map has {len(descs)} pieces for {p} sets")
    pieces = [_piece_from(d, built[(k + 1) % p], dim) for k, d in enumerate(descs)]
    return CyclicSystem(built, pieces, name, {"sets": sets, "map": map_desc})
