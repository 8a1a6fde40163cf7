"""Hamiltonian assembly, spectra, LPI analytics, and pulsed time evolution.

The Hamiltonian is H = sum_{i<j} J_ij S_i.S_j + Bz S^z + sum_i b_i . S_i with
every energy in MHz (J means J/h) and Bz the Zeeman frequency g muB B / h.
Propagators use the convention U = exp(-i 2 pi H t) with t in microseconds,
so a 1-J pulse of exchange J produces population oscillations at frequency J.
Within a gauge's qubit block, exchange acts as -(1/2) r.sigma up to a scalar,
with r = J12*m + J23*n + J13*z; the block therefore precesses about -r at
rate |r| for J > 0.
"""

from dataclasses import dataclass, field

import numpy as np

from .spin8 import build_coupled_basis, build_spin_operators

__all__ = [
    "GMUB_GHZ_PER_T",
    "Z_HAT",
    "N_HAT",
    "M_HAT",
    "ExchangeConfig",
    "LocalFields",
    "Segment",
    "PulseSequence",
    "zeeman_mhz_from_tesla",
    "tesla_from_zeeman_mhz",
    "check_density_matrix",
    "build_hamiltonian",
    "eigensystem",
    "lpi_gap",
    "rotation_axis",
    "level_crossings",
    "segment_propagator",
    "propagate",
]

#: g muB / h for g = 2, used to convert magnetic field to Zeeman frequency.
GMUB_GHZ_PER_T = 27.97

# qubit-block rotation axes of the three exchange couplings (unit vectors in
# the xz-plane, 120 degrees apart; they sum to zero)
Z_HAT = np.array([0.0, 0.0, 1.0])
M_HAT = np.array([np.sqrt(3.0) / 2.0, 0.0, -0.5])   # pair (1,2)
N_HAT = np.array([-np.sqrt(3.0) / 2.0, 0.0, -0.5])  # pair (2,3)


def zeeman_mhz_from_tesla(b_tesla, gmub_ghz_per_t=GMUB_GHZ_PER_T):
    """Magnetic field in tesla -> Zeeman frequency in MHz."""
    return b_tesla * gmub_ghz_per_t * 1e3


def tesla_from_zeeman_mhz(bz_mhz, gmub_ghz_per_t=GMUB_GHZ_PER_T):
    return bz_mhz / (gmub_ghz_per_t * 1e3)


@dataclass(frozen=True)
class ExchangeConfig:
    """Exchange triple (J12, J23, J13) in MHz plus the uniform z-field Bz.

    Bz is expressed directly as a Zeeman frequency in MHz; use
    zeeman_mhz_from_tesla for field values in tesla. Negative exchange is
    rejected: the device operates at J >= 0 only.
    """

    j12_mhz: float
    j23_mhz: float
    j13_mhz: float
    bz_mhz: float = 0.0

    def __post_init__(self):
        vals = (self.j12_mhz, self.j23_mhz, self.j13_mhz, self.bz_mhz)
        if not all(np.isfinite(vals)):
            raise ValueError(f"non-finite exchange configuration: {vals}")
        if min(vals[:3]) < 0.0:
            raise ValueError(f"negative exchange rejected: {vals[:3]}")

    def couplings(self):
        """Exchange values as an array in pair order (12, 23, 13)."""
        return np.array([self.j12_mhz, self.j23_mhz, self.j13_mhz])


def _as_field_array(b):
    arr = np.asarray(b, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"local fields must have shape (3, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite local field component")
    return arr


@dataclass(frozen=True, eq=False)
class LocalFields:
    """Quasi-static local (Overhauser) field b[site][axis] in MHz."""

    b: np.ndarray

    def __post_init__(self):
        arr = _as_field_array(self.b)
        arr.setflags(write=False)
        object.__setattr__(self, "b", arr)

    @classmethod
    def zero(cls):
        return cls(np.zeros((3, 3)))

    @classmethod
    def uniform(cls, bx=0.0, by=0.0, bz=0.0):
        """Same field vector on every site (acts like an external field)."""
        return cls(np.tile(np.array([bx, by, bz], dtype=float), (3, 1)))

    def __add__(self, other):
        return LocalFields(self.b + other.b)


@dataclass(frozen=True)
class Segment:
    """Piecewise-constant pulse segment.

    `voltages` optionally records the physical gate-voltage setpoint that
    produced `config`; experiments use it to apply quasi-static charge noise
    through the device model.
    """

    config: ExchangeConfig
    fields: LocalFields = field(default_factory=LocalFields.zero)
    duration_ns: float = 0.0
    voltages: np.ndarray | None = None

    def __post_init__(self):
        if not np.isfinite(self.duration_ns) or self.duration_ns < 0.0:
            raise ValueError(f"segment duration must be >= 0 ns, got {self.duration_ns}")


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulse segments; an empty sequence acts as the identity."""

    segments: tuple

    def __init__(self, segments):
        object.__setattr__(self, "segments", tuple(segments))
        for seg in self.segments:
            if not isinstance(seg, Segment):
                raise TypeError("PulseSequence accepts Segment entries only")

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)


def check_density_matrix(rho, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-10):
    """Raise ValueError unless rho is a valid 8x8 density matrix."""
    rho = np.asarray(rho)
    if rho.shape != (8, 8):
        raise ValueError(f"density matrix must be 8x8, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise ValueError("density matrix trace differs from 1")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if w.min() < -psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {w.min():.3e}")
    return rho


def _operator_cache():
    ops = build_spin_operators()
    pair = np.stack([ops.dot(1, 2), ops.dot(2, 3), ops.dot(1, 3)])  # (12, 23, 13)
    local = ops.site.reshape(9, 8, 8)  # site-major, axis within site
    return pair, ops.total[2], local


_PAIR_OPS, _SZ_TOTAL, _LOCAL_OPS = None, None, None


def _ops():
    global _PAIR_OPS, _SZ_TOTAL, _LOCAL_OPS
    if _PAIR_OPS is None:
        _PAIR_OPS, _SZ_TOTAL, _LOCAL_OPS = _operator_cache()
    return _PAIR_OPS, _SZ_TOTAL, _LOCAL_OPS


def build_hamiltonian(cfg: ExchangeConfig, fields: LocalFields | None = None):
    """Assemble the 8x8 Hamiltonian in MHz."""
    pair_ops, sz_total, local_ops = _ops()
    if fields is None:
        fields = LocalFields.zero()
    h = np.einsum("p,pij->ij", cfg.couplings(), pair_ops)
    if cfg.bz_mhz != 0.0:
        h = h + cfg.bz_mhz * sz_total
    b = fields.b.reshape(9)
    if np.any(b):
        h = h + np.einsum("k,kij->ij", b, local_ops)
    return h


def batch_hamiltonians(j_batch, bz, b_batch):
    """Vectorized Hamiltonians for Monte Carlo shots.

    j_batch : (n, 3) exchange triples in pair order (12, 23, 13)
    bz      : scalar Zeeman frequency (MHz)
    b_batch : (n, 9) local fields, site-major
    """
    pair_ops, sz_total, local_ops = _ops()
    h = np.einsum("np,pij->nij", np.asarray(j_batch, dtype=float), pair_ops)
    h += np.einsum("nk,kij->nij", np.asarray(b_batch, dtype=float), local_ops)
    if bz != 0.0:
        h += bz * sz_total
    return h


def eigensystem(h, herm_tol=1e-8):
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix."""
    h = np.asarray(h)
    asym = np.max(np.abs(h - np.swapaxes(h.conj(), -1, -2)))
    if asym > herm_tol:
        raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return np.linalg.eigh(h)


def lpi_gap(j_mhz):
    """Energy gap 3J/2 opened by equal couplings J12 = J23 = J13 = J."""
    if j_mhz < 0:
        raise ValueError("J must be >= 0")
    return 1.5 * j_mhz


def rotation_axis(cfg: ExchangeConfig, tol=1e-9):
    """Qubit-block rotation axis and rate for an exchange configuration.

    Returns (axis, rate_mhz) with axis the unit vector along
    r = J12*m + J23*n + J13*z in the xz-plane, or (None, 0.0) when |r| falls
    below `tol` (the leakage-protected idle: equal couplings, no rotation).
    Independent of Bz. The physical precession sense for J > 0 is about -axis.
    """
    r = cfg.j12_mhz * M_HAT + cfg.j23_mhz * N_HAT + cfg.j13_mhz * Z_HAT
    rate = float(np.linalg.norm(r))
    if rate <= tol:
        return None, 0.0
    return r / rate, rate


def level_crossings(j_mhz):
    """Zeeman frequencies where the qubit and leakage levels cross at equal J."""
    if j_mhz <= 0:
        raise ValueError("J must be > 0")
    return np.array([-1.5, -0.75, 0.75, 1.5]) * j_mhz


def segment_propagator(h, duration_ns):
    """U = exp(-i 2 pi H t) via eigendecomposition (exact for Hermitian H)."""
    w, v = eigensystem(h)
    phases = np.exp(-2j * np.pi * w * (duration_ns * 1e-3))
    return (v * phases) @ v.conj().T


def propagate(seq: PulseSequence, rho0, snapshots=False):
    """Evolve a density matrix through a pulse sequence.

    Returns the final density matrix, or (final, [after each segment]) when
    `snapshots` is set. Charge noise is not applied here; experiments resolve
    voltage-tagged segments into explicit configs before calling.
    """
    rho = np.array(check_density_matrix(rho0), dtype=complex)
    taken = []
    for seg in seq:
        if seg.duration_ns == 0.0:
            if snapshots:
                taken.append(rho.copy())
            continue
        u = segment_propagator(build_hamiltonian(seg.config, seg.fields), seg.duration_ns)
        rho = u @ rho @ u.conj().T
        rho = (rho + rho.conj().T) / 2.0
        if snapshots:
            taken.append(rho.copy())
    if snapshots:
        return rho, taken
    return rho
