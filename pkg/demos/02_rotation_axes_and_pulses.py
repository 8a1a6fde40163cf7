"""Exchange pulses as qubit rotations and the identity at equal couplings.

Each pairwise coupling rotates the qubit about one of three axes 120 degrees
apart in the xz-plane; simultaneous couplings rotate about the weighted sum
r = J12*m + J23*n + J13*z. Exchange oscillations run at frequency J, and at
equal couplings r = 0: the pulse is the identity no matter how long it is.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from trispin import ExchangeConfig, PulseSequence, Segment, fft_peak, measure_populations, rotation_axis
from trispin.experiments import prepare_plus

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

for cfg in (ExchangeConfig(0, 0, 23), ExchangeConfig(23, 0, 0), ExchangeConfig(10, 10, 10)):
    axis, rate = rotation_axis(cfg)
    label = "none (LPI)" if axis is None else np.round(axis, 3)
    print(f"J = {cfg.couplings()} MHz -> axis {label}, rate {rate:.1f} MHz")

# exchange oscillations under a single coupling: P0 oscillates at J
j = 23.0
times = np.arange(0.0, 1.0, 0.001)  # us
p0 = [
    measure_populations(
        PulseSequence([Segment(config=ExchangeConfig(j, 0, 0), duration_ns=t * 1e3)]), shots=1
    ).p0
    for t in times
]
print(f"FFT of the oscillation trace peaks at {fft_peak(np.array(p0), 0.001):.2f} MHz (J = {j})")

# the long equal-coupling pulse does nothing to the qubit
idle = measure_populations(
    PulseSequence([Segment(config=ExchangeConfig(j, j, j), duration_ns=1e6)]), shots=1
)
print(f"1 ms pulse at equal couplings: P0 = {idle.p0:.9f}, leakage = {idle.pl:.2e}")

# the Hadamard-like pulse: rotate |0> onto the equator about the n axis
prep, inv, theta = prepare_plus(50.0)
after = measure_populations(PulseSequence([prep]), shots=1)
round_trip = measure_populations(PulseSequence([prep, inv]), shots=1)
print(f"equator pulse angle {np.degrees(theta):.2f} deg: P0 after = {after.p0:.3f}, "
      f"after undo = {round_trip.p0:.9f}")

fig, ax = plt.subplots(figsize=(5, 3))
ax.plot(times, p0, lw=0.9)
ax.set_xlabel("pulse duration (us)")
ax.set_ylabel("P0")
ax.set_title(f"exchange oscillations at J = {j} MHz")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "02_exchange_oscillations.png"), dpi=150)
print("wrote demos/out/02_exchange_oscillations.png")
