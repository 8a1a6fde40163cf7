"""Gate-voltage model: exponential exchange maps, cross-coupling, virtual gates.

Exchange pair order everywhere is (12, 23, 13). Voltages are in volts.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ExchangeConfig

__all__ = [
    "DeviceParams",
    "default_device",
    "exchange_from_voltages",
    "virtual_gate_matrix",
    "solve_lpi_voltages",
]


@dataclass(frozen=True, eq=False)
class DeviceParams:
    """Synthetic exchange-gate response.

    J_p(v) = j0[p] * exp((C v)_p / v0[p]) for each pair p, where C is the
    dimensionless cross-coupling matrix (rows = exchange pairs, columns =
    physical gates, unit diagonal) and v0 the lever-arm scale in volts per
    e-fold. j_max_mhz caps the exponential against overflow.
    """

    j0_mhz: np.ndarray
    v0_volts: np.ndarray
    cross_coupling: np.ndarray
    j_max_mhz: float = 1e4

    def __post_init__(self):
        j0 = np.asarray(self.j0_mhz, dtype=float)
        v0 = np.asarray(self.v0_volts, dtype=float)
        c = np.asarray(self.cross_coupling, dtype=float)
        if j0.shape != (3,) or v0.shape != (3,) or c.shape != (3, 3):
            raise ValueError("DeviceParams needs j0 (3,), v0 (3,), C (3, 3)")
        if np.any(j0 <= 0) or np.any(v0 <= 0):
            raise ValueError("j0 and v0 must be positive")
        if not np.allclose(np.diag(c), 1.0):
            raise ValueError("cross-coupling diagonal must be 1")
        off = c - np.diag(np.diag(c))
        if np.max(np.abs(off)) >= 1.0:
            raise ValueError("off-diagonal cross-coupling must satisfy |c| < 1")
        if abs(np.linalg.det(c)) < 1e-12:
            raise ValueError("cross-coupling matrix is singular")
        for arr in (j0, v0, c):
            arr.setflags(write=False)
        object.__setattr__(self, "j0_mhz", j0)
        object.__setattr__(self, "v0_volts", v0)
        object.__setattr__(self, "cross_coupling", c)


def default_device(off_diagonal=0.15, j0_mhz=30.0, v0_volts=0.030):
    """Device with visible cross-coupling distortion in voltage maps."""
    c = np.full((3, 3), off_diagonal) + (1.0 - off_diagonal) * np.eye(3)
    return DeviceParams(
        j0_mhz=np.full(3, j0_mhz),
        v0_volts=np.full(3, v0_volts),
        cross_coupling=c,
    )


def exchange_from_voltages(params: DeviceParams, v):
    """Map physical gate voltages to an ExchangeConfig.

    Returns (config, saturated); `saturated` flags any pair clipped at
    params.j_max_mhz.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError("voltage vector must be 3 finite values")
    exponent = (params.cross_coupling @ v) / params.v0_volts
    log_j = np.log(params.j0_mhz) + exponent
    log_cap = np.log(params.j_max_mhz)
    saturated = bool(np.any(log_j > log_cap))
    j = np.exp(np.minimum(log_j, log_cap))
    cfg = ExchangeConfig(j12_mhz=j[0], j23_mhz=j[1], j13_mhz=j[2])
    return cfg, saturated


def exchange_batch(params: DeviceParams, v_batch):
    """Vectorized exchange map: (n, 3) voltages -> (n, 3) couplings in MHz."""
    v_batch = np.asarray(v_batch, dtype=float)
    log_j = np.log(params.j0_mhz) + (v_batch @ params.cross_coupling.T) / params.v0_volts
    return np.exp(np.minimum(log_j, np.log(params.j_max_mhz)))


def virtual_gate_matrix(params: DeviceParams):
    """Inverse cross-coupling: one virtual voltage drives one exchange pair."""
    try:
        return np.linalg.inv(params.cross_coupling)
    except np.linalg.LinAlgError as exc:
        raise ValueError("cross-coupling matrix is singular") from exc


def solve_lpi_voltages(params: DeviceParams, j_target_mhz):
    """Physical voltages producing equal couplings J12 = J23 = J13 = J_target.

    Exact log-linear inverse v = C^-1 (v0 * ln(J_target / j0)).
    """
    if j_target_mhz <= 0:
        raise ValueError("J_target must be > 0")
    if j_target_mhz > params.j_max_mhz:
        raise ValueError("J_target exceeds the saturation cap")
    rhs = params.v0_volts * np.log(j_target_mhz / params.j0_mhz)
    v = virtual_gate_matrix(params) @ rhs
    cfg, saturated = exchange_from_voltages(params, v)
    if saturated:
        raise ValueError("LPI solution saturates the exchange model")
    return v
