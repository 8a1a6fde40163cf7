"""Three-spin Hilbert space: site operators, coupled basis, subspace projectors.

Conventions used across the package: hbar = 1, energies in frequency units
(MHz), site ordering 1 (x) 2 (x) 3 with single-site basis {up, down}, and
Condon-Shortley phases for all angular-momentum coupling.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "SpinOperatorSet",
    "CoupledBasis",
    "Projector",
    "PROJECTOR_TAGS",
    "COLUMN_LABELS",
    "build_spin_operators",
    "build_coupled_basis",
    "projector",
]

_SX = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
_SY = np.array([[0.0, -0.5j], [0.5j, 0.0]], dtype=complex)
_SZ = np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex)
_ID2 = np.eye(2, dtype=complex)

#: column ordering of the coupled basis, (S13, S, mS); part of the public
#: contract so serialized states stay portable.
COLUMN_LABELS = (
    (0, 0.5, +0.5),
    (0, 0.5, -0.5),
    (1, 0.5, +0.5),
    (1, 0.5, -0.5),
    (1, 1.5, +1.5),
    (1, 1.5, +0.5),
    (1, 1.5, -0.5),
    (1, 1.5, -1.5),
)

PROJECTOR_TAGS = (
    "qubit0",
    "qubit1",
    "leakage",
    "s13_singlet",
    "gauge_plus",
    "gauge_minus",
)


def _embed(op, site):
    """Single-site operator at 1-based `site` in the 8-dim product space."""
    mats = [_ID2, _ID2, _ID2]
    mats[site - 1] = op
    return np.kron(np.kron(mats[0], mats[1]), mats[2])


@dataclass(frozen=True, eq=False)
class SpinOperatorSet:
    """Per-site and collective spin operators on the 8-dimensional space.

    Attributes
    ----------
    site : ndarray, shape (3, 3, 8, 8)
        site[i - 1][a] is the operator S_i^a for axis a in (x, y, z).
    total : ndarray, shape (3, 8, 8)
        Components of the total spin S^a = sum_i S_i^a.
    s2 : ndarray, shape (8, 8)
        Total spin squared, eigenvalues 3/4 (x4) and 15/4 (x4).
    s13_sq : ndarray, shape (8, 8)
        (S_1 + S_3)^2, eigenvalues 0 (x2) and 2 (x6).
    """

    site: np.ndarray
    total: np.ndarray
    s2: np.ndarray
    s13_sq: np.ndarray

    def dot(self, i, j):
        """Exchange coupling operator S_i . S_j for 1-based sites i != j."""
        si, sj = self.site[i - 1], self.site[j - 1]
        return si[0] @ sj[0] + si[1] @ sj[1] + si[2] @ sj[2]


@lru_cache(maxsize=1)
def build_spin_operators() -> SpinOperatorSet:
    """Construct the full operator set; deterministic and cached."""
    site = np.array(
        [[_embed(op, i) for op in (_SX, _SY, _SZ)] for i in (1, 2, 3)]
    )
    total = site.sum(axis=0)
    s2 = sum(total[a] @ total[a] for a in range(3))
    s13 = site[0] + site[2]
    s13_sq = sum(s13[a] @ s13[a] for a in range(3))
    ops = SpinOperatorSet(site=site, total=total, s2=s2, s13_sq=s13_sq)
    for arr in (ops.site, ops.total, ops.s2, ops.s13_sq):
        arr.setflags(write=False)
    return ops


def _clebsch_gordan(j1, m1, j2, m2, j, m):
    """<j1 m1; j2 m2 | j m> via the Racah closed form, Condon-Shortley phases."""
    # doubled quantum numbers keep every factorial argument integral
    t = [int(round(2 * x)) for x in (j1, m1, j2, m2, j, m)]
    tj1, tm1, tj2, tm2, tj, tm = t
    if tm1 + tm2 != tm:
        return 0.0
    if not (abs(tj1 - tj2) <= tj <= tj1 + tj2):
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm) > tj:
        return 0.0
    if (tj1 + tj2 + tj) % 2 or (tj1 + tm1) % 2 or (tj2 + tm2) % 2 or (tj + tm) % 2:
        return 0.0

    def fact(twice):
        if twice % 2 or twice < 0:
            raise ValueError("non-integer or negative factorial argument")
        return math.factorial(twice // 2)

    pref = (tj + 1) * (
        fact(tj1 + tj2 - tj) * fact(tj1 - tj2 + tj) * fact(-tj1 + tj2 + tj)
    ) / fact(tj1 + tj2 + tj + 2)
    pref *= (
        fact(tj1 + tm1) * fact(tj1 - tm1)
        * fact(tj2 + tm2) * fact(tj2 - tm2)
        * fact(tj + tm) * fact(tj - tm)
    )
    k_min = max(0, -(tj - tj2 + tm1) // 2, -(tj - tj1 - tm2) // 2)
    k_max = min((tj1 + tj2 - tj) // 2, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    total = 0.0
    for k in range(k_min, k_max + 1):
        denom = fact(2 * k)
        denom *= fact(tj1 + tj2 - tj - 2 * k)
        denom *= fact(tj1 - tm1 - 2 * k)
        denom *= fact(tj2 + tm2 - 2 * k)
        denom *= fact(tj - tj2 + tm1 + 2 * k)
        denom *= fact(tj - tj1 - tm2 + 2 * k)
        total += (-1) ** k / denom
    return math.sqrt(pref) * total


@dataclass(frozen=True, eq=False)
class CoupledBasis:
    """Unitary whose columns are the |S13, S, mS> states in COLUMN_LABELS order.

    Built by coupling sites 1 and 3 first, then site 2. Columns 0-1 are the
    qubit |0> states (one per gauge mS = +-1/2), columns 2-3 the |1> states,
    columns 4-7 the S = 3/2 leakage quadruplet by descending mS.
    """

    matrix: np.ndarray
    labels: tuple = COLUMN_LABELS

    def column(self, index):
        return self.matrix[:, index]


@lru_cache(maxsize=1)
def build_coupled_basis(ops: SpinOperatorSet | None = None) -> CoupledBasis:
    """Assemble the coupled basis from two-step Clebsch-Gordan coupling."""
    if ops is None:
        ops = build_spin_operators()
    half = 0.5
    # pair (1,3) states as amplitudes over (m1, m3)
    m_half = (+half, -half)
    columns = np.zeros((8, 8), dtype=complex)
    for col, (s13, s, ms) in enumerate(COLUMN_LABELS):
        vec = np.zeros(8, dtype=complex)
        for i1, m1 in enumerate(m_half):
            for i3, m3 in enumerate(m_half):
                for i2, m2 in enumerate(m_half):
                    m13 = m1 + m3
                    amp = _clebsch_gordan(half, m1, half, m3, s13, m13)
                    if amp == 0.0:
                        continue
                    amp *= _clebsch_gordan(s13, m13, half, m2, s, ms)
                    if amp == 0.0:
                        continue
                    vec[4 * i1 + 2 * i2 + i3] += amp
        columns[:, col] = vec
    columns.setflags(write=False)
    return CoupledBasis(matrix=columns)


_TAG_SELECTORS = {
    "qubit0": lambda s13, s, ms: s13 == 0,
    "qubit1": lambda s13, s, ms: s13 == 1 and s == 0.5,
    "leakage": lambda s13, s, ms: s == 1.5,
    "s13_singlet": lambda s13, s, ms: s13 == 0,
    "gauge_plus": lambda s13, s, ms: ms > 0,
    "gauge_minus": lambda s13, s, ms: ms < 0,
}


@dataclass(frozen=True, eq=False)
class Projector:
    """Hermitian idempotent onto a labeled subspace of the coupled basis."""

    tag: str
    matrix: np.ndarray

    @property
    def dimension(self):
        return int(round(np.trace(self.matrix).real))


def projector(basis: CoupledBasis, tag: str) -> Projector:
    """Sum of outer products of basis columns whose labels match `tag`."""
    if tag not in _TAG_SELECTORS:
        raise ValueError(f"unknown projector tag {tag!r}; expected one of {PROJECTOR_TAGS}")
    select = _TAG_SELECTORS[tag]
    cols = [basis.matrix[:, i] for i, lab in enumerate(basis.labels) if select(*lab)]
    mat = sum(np.outer(c, c.conj()) for c in cols)
    mat.setflags(write=False)
    return Projector(tag=tag, matrix=mat)
