"""Identity-compiled randomized-benchmarking scaffold from 1-J exchange pulses.

Single-qubit Cliffords (the 24-element octahedral rotation group) are drawn
uniformly and compiled into at most four 1-J pulses about the z (pair 13) and
n (pair 23) rotation axes; the final element inverts the composite so the
whole scaffold is the identity on the qubit subspace. Pulse angles are solved
numerically because 120-degree-spaced coplanar axes admit no exact pi/2-only
compilation of the Clifford group.
"""

from functools import lru_cache

import numpy as np

from .dynamics import ExchangeConfig, LocalFields, M_HAT, N_HAT, Z_HAT, Segment
from .fitting import damped_gauss_newton

__all__ = [
    "AXIS_VECTORS",
    "AXIS_PAIR",
    "clifford_rotations",
    "decompose_clifford",
    "rotation_segments",
    "identity_compiled_indices",
    "so3_rotation",
]

AXIS_VECTORS = {"z": Z_HAT, "n": N_HAT, "m": M_HAT}
#: exchange pair driving each rotation axis
AXIS_PAIR = {"z": "13", "n": "23", "m": "12"}
_PAIR_SLOT = {"12": 0, "23": 1, "13": 2}

_TWO_PI = 2.0 * np.pi


def so3_rotation(axis, angle):
    """Rotation matrix about a unit axis (Rodrigues form)."""
    ax = np.asarray(axis, dtype=float)
    k = np.array(
        [[0.0, -ax[2], ax[1]], [ax[2], 0.0, -ax[0]], [-ax[1], ax[0], 0.0]]
    )
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


@lru_cache(maxsize=1)
def clifford_rotations():
    """The 24 rotations of the single-qubit Clifford group, BFS-closed."""
    gens = [
        so3_rotation([1.0, 0.0, 0.0], np.pi / 2.0),
        so3_rotation([0.0, 0.0, 1.0], np.pi / 2.0),
    ]
    seen = {}
    frontier = [np.eye(3)]
    seen[_key(np.eye(3))] = np.eye(3)
    while frontier:
        nxt = []
        for r in frontier:
            for g in gens:
                cand = g @ r
                k = _key(cand)
                if k not in seen:
                    seen[k] = cand
                    nxt.append(cand)
        frontier = nxt
    group = np.array(sorted(seen.values(), key=_key))
    if len(group) != 24:
        raise RuntimeError(f"Clifford closure produced {len(group)} elements")
    group.setflags(write=False)
    return group


def _key(r):
    return tuple(np.round(r, 9).ravel())


def _zn_product(angles):
    a, b, c, d = angles
    return (
        so3_rotation(Z_HAT, a)
        @ so3_rotation(N_HAT, b)
        @ so3_rotation(Z_HAT, c)
        @ so3_rotation(N_HAT, d)
    )


def _solve_zn_angles(target, tol=1e-9):
    """Angles (a, b, c, d) with Rz(a) Rn(b) Rz(c) Rn(d) = target."""

    def residual(p):
        return (_zn_product(p) - target).ravel()

    rng = np.random.default_rng(20240817)
    starts = [np.zeros(4)]
    grid = np.array([0.0, np.pi / 2.0, np.pi, 3.0 * np.pi / 2.0])
    starts += [np.array([a, b, 0.0, 0.0]) for a in grid for b in grid]
    starts += [rng.uniform(0.0, _TWO_PI, 4) for _ in range(48)]
    for x0 in starts:
        x, _, _, rnorm = damped_gauss_newton(residual, x0, max_iter=400, rel_step_tol=1e-14)
        if rnorm < tol:
            return np.mod(x, _TWO_PI)
    raise RuntimeError("no z-n pulse decomposition found for target rotation")


@lru_cache(maxsize=32)
def decompose_clifford(index):
    """Pulse recipe for Clifford `index` as ((axis, angle), ...) in time order.

    The returned product, rightmost-first in time, reproduces the rotation:
    R = R_k ... R_1 for recipe (R_1, ..., R_k).
    """
    target = clifford_rotations()[index]
    a, b, c, d = _solve_zn_angles(target)
    recipe = []
    # matrix product Rz(a) Rn(b) Rz(c) Rn(d) acts with Rn(d) first in time
    for axis, angle in (("n", d), ("z", c), ("n", b), ("z", a)):
        ang = float(np.mod(angle, _TWO_PI))
        if ang < 1e-8 or _TWO_PI - ang < 1e-8:
            continue
        recipe.append((axis, ang))
    return tuple(recipe)


def rotation_segments(rotations, j_mhz, fields=None):
    """Realize abstract rotations as 1-J exchange segments.

    A pulse of exchange J on the pair behind axis `a` precesses the qubit
    about -a by 2 pi J t, so a rotation by theta about +a is produced with
    duration (2 pi - theta) / (2 pi J).
    """
    if fields is None:
        fields = LocalFields.zero()
    segs = []
    for axis, angle in rotations:
        ang = float(np.mod(angle, _TWO_PI))
        if ang < 1e-10 or _TWO_PI - ang < 1e-10:
            continue
        phys_angle = _TWO_PI - ang
        duration_ns = phys_angle / (_TWO_PI * j_mhz) * 1e3
        j = [0.0, 0.0, 0.0]
        j[_PAIR_SLOT[AXIS_PAIR[axis]]] = j_mhz
        segs.append(
            Segment(
                config=ExchangeConfig(j12_mhz=j[0], j23_mhz=j[1], j13_mhz=j[2]),
                fields=fields,
                duration_ns=duration_ns,
            )
        )
    return segs


def identity_compiled_indices(depth, rng):
    """Uniformly random Clifford indices plus the exact inverse element.

    Returns (indices, inverse_index) such that C_inv C_d ... C_1 = identity.
    """
    group = clifford_rotations()
    indices = [int(k) for k in rng.integers(0, len(group), size=depth)]
    composite = np.eye(3)
    for k in indices:
        composite = group[k] @ composite
    inverse = composite.T
    key = _key(inverse)
    for k, r in enumerate(group):
        if _key(r) == key:
            return indices, k
    raise RuntimeError("inverse element missing from Clifford table")
