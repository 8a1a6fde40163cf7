"""Calibrating the magnet from the spins themselves.

With a single coupling on, the qubit and leakage levels cross where the
Zeeman energy equals J, so leakage peaks in a coil-current sweep mark
|B(I)| = J / (g muB / h). The coupling is read out independently from the
FFT of exchange oscillations. Repeating for several couplings and fitting
|B|(I) = sqrt((kappa I + B_par)^2 + B_perp^2) recovers the coil constant and
both ambient field components, including the hidden perpendicular one.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from trispin import HyperfineModel
from trispin.calibration import DEFAULT_HYPERFINE_SIGMA_MHZ
from trispin.experiments import CoilModel, b_calibration

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

coil = CoilModel(kappa_mt_per_ma=1.0, b_par_mt=0.1, b_perp_mt=0.15)
noise = HyperfineModel(DEFAULT_HYPERFINE_SIGMA_MHZ)
fit, data = b_calibration([6.0, 10.0, 15.0, 23.0], np.linspace(-3.0, 3.0, 1201),
                          coil, noise, shots=200, seed=6)

print("hidden coil model:   kappa = 1.0 mT/mA, B_par = 0.10 mT, B_perp = 0.15 mT")
print("recovered:           kappa = {kappa_mt_per_ma:.4f} mT/mA, B_par = {b_par_mt:.4f} mT, "
      "B_perp = {b_perp_mt:.4f} mT".format(**fit.params))
print("exchange FFT peaks:", {k: round(v, 3) for k, v in fit.extras["fft_peaks_mhz"].items()})

currents = data.observables["current_ma"]
fields = data.observables["b_mt"]
fig, ax = plt.subplots(figsize=(5, 3.4))
ax.plot(currents, fields, "o", ms=5, label="leakage-peak positions")
i_grid = np.linspace(currents.min() - 0.3, currents.max() + 0.3, 300)
p = fit.params
ax.plot(i_grid, np.sqrt((p["kappa_mt_per_ma"] * i_grid + p["b_par_mt"]) ** 2
                        + p["b_perp_mt"] ** 2), "r-", lw=1.2, label="fit")
ax.set_xlabel("coil current (mA)")
ax.set_ylabel("|B| at the dots (mT)")
ax.set_title("magnet calibration")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "06_magnet_calibration.png"), dpi=150)
print("wrote demos/out/06_magnet_calibration.png")
