"""trispin: triangular three-electron exchange-only spin qubit simulator.

Builds the 8-dimensional three-spin problem, evolves it under pulsed
exchange with quasi-static noise, and reproduces the leakage-protected-idle
phenomenology: gap opening at equal couplings, leakage suppression,
calibration protocols, and dephasing-time scans.
"""

__version__ = "0.1.0"

from .calibration import (
    DEFAULT_CHARGE_SIGMA_VOLTS,
    DEFAULT_HYPERFINE_SIGMA_MHZ,
    calibrate_charge_sigma,
    calibrate_hyperfine_sigma,
)
from .device import (
    DeviceParams,
    default_device,
    exchange_from_voltages,
    solve_lpi_voltages,
    virtual_gate_matrix,
)
from .dynamics import (
    ExchangeConfig,
    LocalFields,
    PulseSequence,
    Segment,
    build_hamiltonian,
    check_density_matrix,
    eigensystem,
    level_crossings,
    lpi_gap,
    propagate,
    rotation_axis,
    zeeman_mhz_from_tesla,
)
from .experiments import (
    CoilModel,
    b_calibration,
    free_evolution,
    initialize,
    leakage_spectroscopy,
    leakage_vs_gap,
    lpi_sweep,
    measure_populations,
    prepare_plus,
    readout,
    spectrum_sweep,
    t2star,
    t2star_scan,
)
from .fitting import FitResult, fft_peak, fit_double_gaussian, fit_power_law
from .noise import ChargeNoiseModel, HyperfineModel, one_over_f_trace, sample_realization
from .spin8 import build_coupled_basis, build_spin_operators, projector
