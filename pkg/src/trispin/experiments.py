"""Virtual experiments: initialization/readout, LPI-locating voltage sweeps,
leakage spectroscopy, free evolution with dephasing-time extraction, the
leakage-vs-gap scan, and the magnet calibration pipeline.

Every experiment is a deterministic map-reduce over (grid point x noise shot):
identical (configuration, seed) pairs reproduce results bit for bit, and
grid points are independent so threaded evaluation cannot change values.
Readout is an ideal projective measurement of the (1,3) singlet and returns
expectation values, so Monte Carlo scatter comes only from noise sampling.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rb
from .device import DeviceParams, exchange_batch, exchange_from_voltages, solve_lpi_voltages
from .dynamics import (
    ExchangeConfig,
    LocalFields,
    PulseSequence,
    Segment,
    batch_hamiltonians,
    build_hamiltonian,
    check_density_matrix,
    segment_propagator,
)
from .fitting import FitResult, damped_gauss_newton, fit_double_gaussian, fit_power_law, fft_peak, local_maxima
from .noise import HyperfineModel, one_over_f_trace, sample_realization, sample_realizations
from .spin8 import build_coupled_basis, projector

__all__ = [
    "AxisDef",
    "SweepResult",
    "ReadoutResult",
    "CoilModel",
    "initialize",
    "readout",
    "pi_swap_unitary",
    "measure_populations",
    "prepare_plus",
    "free_evolution",
    "t2star",
    "t2star_scan",
    "leakage_spectroscopy",
    "leakage_vs_gap",
    "lpi_sweep",
    "locate_disc",
    "b_calibration",
    "spectrum_sweep",
    "HADAMARD_ANGLE",
]

_BASIS = build_coupled_basis()
_COL = {name: _BASIS.matrix[:, i] for i, name in enumerate(("0p", "0m", "1p", "1m"))}
_P_SINGLET = projector(_BASIS, "s13_singlet").matrix
_P_QUBIT1 = projector(_BASIS, "qubit1").matrix
_P_LEAK = projector(_BASIS, "leakage").matrix

#: 1-J pulse angle that moves |0> onto the qubit equator (Hadamard-like):
#: rotating z by theta about an axis 120 degrees away gives z' = 0 at
#: cos(theta) = -1/3.
HADAMARD_ANGLE = float(np.arccos(-1.0 / 3.0))

_POLICIES = ("equal-mixture", "lower-energy", "fixed+", "fixed-")


@dataclass(frozen=True)
class AxisDef:
    name: str
    unit: str
    values: np.ndarray


@dataclass
class SweepResult:
    """Labeled sweep axes plus one array per observable."""

    axes: list
    observables: dict
    meta: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def axis(self, name):
        for ax in self.axes:
            if ax.name == name:
                return ax
        raise KeyError(name)


@dataclass(frozen=True)
class ReadoutResult:
    p0: float
    p0to1: float
    pl: float
    shots: int
    p0_err: float = 0.0
    p0to1_err: float = 0.0
    pl_err: float = 0.0


@dataclass(frozen=True)
class CoilModel:
    """Synthetic magnet: B_parallel(I) = kappa I + b_par, plus a hidden
    ambient component perpendicular to the coil axis."""

    kappa_mt_per_ma: float
    b_par_mt: float = 0.0
    b_perp_mt: float = 0.0


def _init_components(bz_mhz, policy):
    """Initial pure-state mixture as (weight, basis column) pairs."""
    if policy not in _POLICIES:
        raise ValueError(f"unknown init policy {policy!r}; expected one of {_POLICIES}")
    if policy == "fixed+":
        return [(1.0, _COL["0p"])]
    if policy == "fixed-":
        return [(1.0, _COL["0m"])]
    if policy == "lower-energy" and bz_mhz != 0.0:
        # Zeeman term +Bz S^z: mS = -1/2 lies lower for Bz > 0
        return [(1.0, _COL["0m"] if bz_mhz > 0 else _COL["0p"])]
    return [(0.5, _COL["0p"]), (0.5, _COL["0m"])]


def initialize(bz_mhz=0.0, policy="equal-mixture"):
    """Density matrix supported on the |0> doublet for the given gauge policy."""
    rho = np.zeros((8, 8), dtype=complex)
    for w, col in _init_components(bz_mhz, policy):
        rho += w * np.outer(col, col.conj())
    return check_density_matrix(rho)


def readout(rho):
    """Ideal singlet-vs-triplet readout of pair (1,3): trace(P_singlet rho)."""
    return float(np.einsum("ij,ji->", _P_SINGLET, rho).real)


def pi_swap_unitary():
    """Ideal instantaneous pi rotation mapping |0> <-> |1> in each gauge,
    identity on the leakage quadruplet."""
    u = np.zeros((8, 8), dtype=complex)
    for g in ("p", "m"):
        u += np.outer(_COL["1" + g], _COL["0" + g].conj())
        u += np.outer(_COL["0" + g], _COL["1" + g].conj())
    for i in range(4, 8):
        col = _BASIS.matrix[:, i]
        u += np.outer(col, col.conj())
    return u


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _noise_batches(hyperfine, charge, seed, shots):
    h = hyperfine if hyperfine is not None else HyperfineModel(sigma_mhz=0.0)
    return sample_realizations(h, charge, seed, shots)


def _resolve_segment(seg, fields_b, dv, device, charge):
    """Apply a noise realization to one segment; returns (config, fields)."""
    fields = LocalFields(seg.fields.b + fields_b)
    cfg = seg.config
    if seg.voltages is not None and charge is not None and device is not None:
        noisy, _ = exchange_from_voltages(device, np.asarray(seg.voltages) + dv)
        cfg = ExchangeConfig(
            j12_mhz=noisy.j12_mhz,
            j23_mhz=noisy.j23_mhz,
            j13_mhz=noisy.j13_mhz,
            bz_mhz=seg.config.bz_mhz,
        )
    return cfg, fields


def measure_populations(seq, hyperfine=None, charge=None, shots=1, seed=0,
                        device=None, init_policy="equal-mixture", init_bz=None):
    """P0, P0->1 and leakage population after a pulse sequence.

    Two experiments per shot: readout directly after the sequence (P0) and
    readout after an ideal instantaneous pi rotation (P0->1). The leakage
    population PL = 1 - P0 - P0->1 holds exactly per shot because the pi
    rotation swaps the qubit subspaces and leaves leakage untouched.
    """
    if shots <= 0:
        raise ValueError("shots must be >= 1")
    if hyperfine is not None and hyperfine.mode != "quasi-static":
        raise ValueError("measure_populations supports quasi-static noise only")
    seq = PulseSequence(seq) if not isinstance(seq, PulseSequence) else seq
    if init_bz is None:
        init_bz = seq.segments[0].config.bz_mhz if len(seq) else 0.0
    comps = _init_components(init_bz, init_policy)
    x_pi = pi_swap_unitary()
    b_all, dv_all = _noise_batches(hyperfine, charge, seed, shots)
    p0 = np.empty(shots)
    p01 = np.empty(shots)
    for k in range(shots):
        u = np.eye(8, dtype=complex)
        for seg in seq:
            if seg.duration_ns == 0.0:
                continue
            cfg, fields = _resolve_segment(seg, b_all[k].reshape(3, 3), dv_all[k], device, charge)
            u = segment_propagator(build_hamiltonian(cfg, fields), seg.duration_ns) @ u
        a = b = 0.0
        for w, col in comps:
            psi = u @ col
            a += w * (abs(np.vdot(_COL["0p"], psi)) ** 2 + abs(np.vdot(_COL["0m"], psi)) ** 2)
            chi = x_pi @ psi
            b += w * (abs(np.vdot(_COL["0p"], chi)) ** 2 + abs(np.vdot(_COL["0m"], chi)) ** 2)
        p0[k], p01[k] = a, b
    pl = 1.0 - p0 - p01
    n = np.sqrt(shots)
    return ReadoutResult(
        p0=float(p0.mean()), p0to1=float(p01.mean()), pl=float(pl.mean()),
        shots=shots,
        p0_err=float(p0.std(ddof=0) / n),
        p0to1_err=float(p01.std(ddof=0) / n),
        pl_err=float(pl.std(ddof=0) / n),
    )


def prepare_plus(j_pulse_mhz=50.0):
    """1-J pulse pair that moves |0> to the equator and back.

    Returns (prep, inverse, theta): single segments about the n axis (pair
    2,3). The inverse completes the full revolution, so prep followed by
    inverse is the identity on the qubit subspace.
    """
    theta = HADAMARD_ANGLE
    cfg = ExchangeConfig(j12_mhz=0.0, j23_mhz=j_pulse_mhz, j13_mhz=0.0)
    t_prep = theta / (2.0 * np.pi * j_pulse_mhz) * 1e3
    t_inv = (2.0 * np.pi - theta) / (2.0 * np.pi * j_pulse_mhz) * 1e3
    return (
        Segment(config=cfg, duration_ns=t_prep),
        Segment(config=cfg, duration_ns=t_inv),
        theta,
    )


def _batch_propagator(h_batch, duration_ns):
    w, v = np.linalg.eigh(h_batch)
    phases = np.exp(-2j * np.pi * w * (duration_ns * 1e-3))
    return np.einsum("nik,nk,njk->nij", v, phases, v.conj())


def _amplitudes(w, v, psi0, out_cols, times_us):
    """|<col| exp(-i 2 pi H t) |psi0>|^2 for each out column and time.

    w, v: (n, 8) eigenvalues and (n, 8, 8) eigenvectors per shot.
    psi0: (n, 8) initial states. out_cols: (m, n, 8). Returns (m, n, T).
    """
    c = np.einsum("nik,ni->nk", v.conj(), psi0)
    phase = np.exp(-2j * np.pi * w[:, :, None] * times_us[None, None, :])
    probs = np.empty((len(out_cols), w.shape[0], len(times_us)))
    for m, cols in enumerate(out_cols):
        pr = np.einsum("ni,nik->nk", cols.conj(), v)
        amp = np.einsum("nk,nkt->nt", pr * c, phase)
        probs[m] = np.abs(amp) ** 2
    return probs


def _dwell_couplings(eg_mhz, device, charge, dv_all, shots):
    """Per-shot exchange triples for an LPI dwell at gap eg (charge noise
    enters through the device's exponential gate map)."""
    j = 2.0 * eg_mhz / 3.0
    if j == 0.0:
        return np.zeros((shots, 3))
    if device is not None and charge is not None and charge.sigma_volts > 0.0:
        v_lpi = solve_lpi_voltages(device, j)
        return exchange_batch(device, v_lpi[None, :] + dv_all)
    return np.full((shots, 3), j)


def free_evolution(eg_mhz, t_grid_us, hyperfine=None, charge=None, shots=1,
                   seed=0, device=None, policy="equal-mixture",
                   j_pulse_mhz=50.0, keep_shot_traces=False, chunk=512):
    """Free evolution at an LPI point of gap E_g (E_g = 0: exchange off).

    Produces the four traces P0(t), P+(t), P1(t) and PL(t). P+ wraps the
    dwell in a Hadamard-like 1-J pulse and its inverse. All traces are
    noise-shot averages of exact projective expectations.
    """
    t = np.asarray(t_grid_us, dtype=float)
    if hyperfine is not None and hyperfine.mode == "trajectory":
        return _free_evolution_trajectory(
            eg_mhz, t, hyperfine, shots, seed, policy, j_pulse_mhz, keep_shot_traces
        )
    b_all, dv_all = _noise_batches(hyperfine, charge, seed, shots)
    js = _dwell_couplings(eg_mhz, device, charge, dv_all, shots)
    prep, inv, _ = prepare_plus(j_pulse_mhz)
    comps = _init_components(0.0, policy)

    p0 = np.zeros((shots, len(t)))
    p1 = np.zeros((shots, len(t)))
    pplus = np.zeros((shots, len(t)))
    cols4 = [_COL["0p"], _COL["0m"], _COL["1p"], _COL["1m"]]
    for lo in range(0, shots, chunk):
        hi = min(lo + chunk, shots)
        n = hi - lo
        b = b_all[lo:hi]
        h_dwell = batch_hamiltonians(js[lo:hi], 0.0, b)
        w, v = np.linalg.eigh(h_dwell)
        h_pulse = batch_hamiltonians(
            np.tile([0.0, j_pulse_mhz, 0.0], (n, 1)), 0.0, b
        )
        u_prep = _batch_propagator(h_pulse, prep.duration_ns)
        u_inv = _batch_propagator(h_pulse, inv.duration_ns)
        for weight, col in comps:
            psi0 = np.tile(col, (n, 1))
            outs = np.stack([np.tile(c, (n, 1)) for c in cols4])
            pr = _amplitudes(w, v, psi0, outs, t)
            p0[lo:hi] += weight * (pr[0] + pr[1])
            p1[lo:hi] += weight * (pr[2] + pr[3])
            # plus trace: prep pulse, dwell, inverse pulse, then qubit-0 readout
            psi_plus = np.einsum("nij,nj->ni", u_prep, psi0)
            eff = np.stack([
                np.einsum("nji,j->ni", u_inv.conj(), _COL["0p"]),
                np.einsum("nji,j->ni", u_inv.conj(), _COL["0m"]),
            ])
            prp = _amplitudes(w, v, psi_plus, eff, t)
            pplus[lo:hi] += weight * (prp[0] + prp[1])
    pl = 1.0 - p0 - p1
    result = SweepResult(
        axes=[AxisDef("t", "us", t)],
        observables=_mean_and_err(
            {"p0": p0, "pplus": pplus, "p1": p1, "pl": pl}, shots
        ),
        meta={
            "eg_mhz": eg_mhz,
            "j_mhz": 2.0 * eg_mhz / 3.0,
            "shots": shots,
            "seed": seed,
            "policy": policy,
            "j_pulse_mhz": j_pulse_mhz,
        },
    )
    if keep_shot_traces:
        result.extras["shot_p0"] = p0
        result.extras["shot_pplus"] = pplus
        result.extras["shot_pl"] = pl
    return result


def _free_evolution_trajectory(eg_mhz, t, hyperfine, shots, seed, policy,
                               j_pulse_mhz, keep_shot_traces):
    """Piecewise-constant evolution under 1/f^alpha local-field traces.

    The dwell is stepped at the trace sampling interval; requested times are
    snapped to step boundaries. Pulses bracket the dwell as in the
    quasi-static path but see the trace's initial value.
    """
    j = 2.0 * eg_mhz / 3.0
    f_max = hyperfine.band_hz[1]
    dt_s = min(0.25 / f_max, max(t.max(), 1e-3) * 1e-6 / 64.0)
    n_steps = max(int(np.ceil(t.max() * 1e-6 / dt_s)), 2)
    dt_us = dt_s * 1e6
    step_idx = np.minimum(np.round(t / dt_us).astype(int), n_steps)
    prep, inv, _ = prepare_plus(j_pulse_mhz)
    comps = _init_components(0.0, policy)
    cfg = ExchangeConfig(j12_mhz=j, j23_mhz=j, j13_mhz=j)
    p0 = np.zeros((shots, len(t)))
    p1 = np.zeros((shots, len(t)))
    pplus = np.zeros((shots, len(t)))
    for k in range(shots):
        traces = np.stack([
            one_over_f_trace(
                hyperfine.alpha, hyperfine.band_hz, n_steps * dt_s, dt_s,
                seed=hash((int(seed), int(k), comp)) % (2**63),
                sigma_mhz=hyperfine.sigma_mhz,
            )
            for comp in range(9)
        ])  # (9, n_steps)
        b0 = LocalFields(traces[:, 0].reshape(3, 3))
        u_prep = segment_propagator(build_hamiltonian(prep.config, b0), prep.duration_ns)
        u_inv = segment_propagator(build_hamiltonian(inv.config, b0), inv.duration_ns)
        u = np.eye(8, dtype=complex)
        snap = {0: u.copy()}
        for s in range(1, n_steps + 1):
            h = build_hamiltonian(cfg, LocalFields(traces[:, s - 1].reshape(3, 3)))
            u = segment_propagator(h, dt_us * 1e3) @ u
            snap[s] = u.copy() if s in step_idx else None
            if snap[s] is None:
                del snap[s]
        for weight, col in comps:
            for it, s in enumerate(step_idx):
                u_t = snap.get(s)
                if u_t is None:
                    continue
                psi = u_t @ col
                p0[k, it] += weight * (
                    abs(np.vdot(_COL["0p"], psi)) ** 2 + abs(np.vdot(_COL["0m"], psi)) ** 2
                )
                p1[k, it] += weight * (
                    abs(np.vdot(_COL["1p"], psi)) ** 2 + abs(np.vdot(_COL["1m"], psi)) ** 2
                )
                chi = u_inv @ (u_t @ (u_prep @ col))
                pplus[k, it] += weight * (
                    abs(np.vdot(_COL["0p"], chi)) ** 2 + abs(np.vdot(_COL["0m"], chi)) ** 2
                )
    pl = 1.0 - p0 - p1
    result = SweepResult(
        axes=[AxisDef("t", "us", t)],
        observables=_mean_and_err({"p0": p0, "pplus": pplus, "p1": p1, "pl": pl}, shots),
        meta={"eg_mhz": eg_mhz, "shots": shots, "seed": seed, "mode": "trajectory"},
    )
    if keep_shot_traces:
        result.extras["shot_p0"] = p0
        result.extras["shot_pplus"] = pplus
    return result


def _mean_and_err(shot_arrays, shots):
    obs = {}
    for name, arr in shot_arrays.items():
        obs[name] = arr.mean(axis=0)
        obs[name + "_err"] = arr.std(axis=0, ddof=0) / np.sqrt(shots)
    return obs


def t2star(traces: SweepResult, baseline=0.5, bootstrap=200, seed=0):
    """1/e decay time of the averaged signal S(t) = (P0(t) + P+(t)) / 2.

    The signal is normalized as N(t) = (S - baseline) / (S(0) - baseline)
    with baseline 0.5 (the qubit-subspace mixture value); the crossing of
    1/e is located by linear interpolation between samples. Uncertainty is
    bootstrapped over shots when per-shot traces are available.
    """
    t = traces.axis("t").values
    s = 0.5 * (traces.observables["p0"] + traces.observables["pplus"])
    t2 = _first_crossing(t, s, baseline)
    if t2 is None:
        raise RuntimeError("dephasing time undetermined (extend the time grid)")
    err = float("nan")
    if "shot_p0" in traces.extras:
        rng = np.random.default_rng([seed, 0x7E57])
        sp0 = traces.extras["shot_p0"]
        spp = traces.extras["shot_pplus"]
        n = sp0.shape[0]
        vals = []
        for _ in range(bootstrap):
            pick = rng.integers(0, n, size=n)
            sb = 0.5 * (sp0[pick].mean(axis=0) + spp[pick].mean(axis=0))
            tb = _first_crossing(t, sb, baseline)
            if tb is not None:
                vals.append(tb)
        if len(vals) >= 2:
            err = float(np.std(vals, ddof=1))
    return t2, err


def _first_crossing(t, s, baseline):
    denom = s[0] - baseline
    if denom <= 0:
        return None
    n = (s - baseline) / denom
    target = 1.0 / np.e
    below = np.nonzero(n <= target)[0]
    if len(below) == 0:
        return None
    i = below[0]
    if i == 0:
        return float(t[0])
    f = (n[i - 1] - target) / (n[i - 1] - n[i])
    return float(t[i - 1] + f * (t[i] - t[i - 1]))


def t2star_scan(eg_grid_mhz, hyperfine, charge=None, shots=500, seed=0,
                device=None, low_window_mhz=None, high_window_mhz=None,
                threads=1, t_max0_us=10.0, t_points=281, max_extensions=3):
    """Dephasing time versus gap energy, with power-law fits on the low and
    high windows. The time grid extends automatically until the 1/e crossing
    is bracketed."""
    eg_grid = np.asarray(eg_grid_mhz, dtype=float)

    def one_point(args):
        idx, eg = args
        t_max = t_max0_us
        for _ in range(max_extensions + 1):
            traces = free_evolution(
                eg, np.linspace(0.0, t_max, t_points),
                hyperfine=hyperfine, charge=charge, shots=shots,
                seed=int(seed) + 1000 * idx, device=device,
                keep_shot_traces=True,
            )
            try:
                return t2star(traces)
            except RuntimeError:
                t_max *= 2.0
        raise RuntimeError(f"no 1/e crossing up to {t_max / 2.0} us at eg={eg} MHz")

    results = _pmap(one_point, list(enumerate(eg_grid)), threads)
    t2 = np.array([r[0] for r in results])
    err = np.array([r[1] for r in results])
    sweep = SweepResult(
        axes=[AxisDef("eg", "MHz", eg_grid)],
        observables={"t2star_us": t2, "t2star_err_us": err},
        meta={"shots": shots, "seed": seed},
    )
    fit_low = fit_high = None
    if low_window_mhz is not None:
        m = (eg_grid >= low_window_mhz[0]) & (eg_grid <= low_window_mhz[1])
        fit_low = fit_power_law(eg_grid[m], t2[m])
        sweep.meta["low_window_mhz"] = list(low_window_mhz)
    if high_window_mhz is not None:
        m = (eg_grid >= high_window_mhz[0]) & (eg_grid <= high_window_mhz[1])
        fit_high = fit_power_law(eg_grid[m], t2[m])
        sweep.meta["high_window_mhz"] = list(high_window_mhz)
    return sweep, fit_low, fit_high


def _dwell_populations(j_triple, bz_mhz, dwell_us, b_batch, comps):
    """(p0, p1) shot arrays after a constant dwell segment."""
    n = b_batch.shape[0]
    h = batch_hamiltonians(np.tile(j_triple, (n, 1)), bz_mhz, b_batch)
    w, v = np.linalg.eigh(h)
    times = np.array([dwell_us])
    cols4 = [_COL["0p"], _COL["0m"], _COL["1p"], _COL["1m"]]
    p0 = np.zeros(n)
    p1 = np.zeros(n)
    for weight, col in comps:
        outs = np.stack([np.tile(c, (n, 1)) for c in cols4])
        pr = _amplitudes(w, v, np.tile(col, (n, 1)), outs, times)
        p0 += weight * (pr[0, :, 0] + pr[1, :, 0])
        p1 += weight * (pr[2, :, 0] + pr[3, :, 0])
    return p0, p1


def leakage_spectroscopy(j_mhz, bz_grid_mhz, hyperfine, dwell_us=None,
                         shots=500, seed=0, policy="lower-energy", threads=1):
    """Leakage population versus field after a long equal-coupling pulse.

    Peaks mark qubit-leakage level crossings. A double-Gaussian fit of the
    two dominant peaks estimates the gap as the mean absolute peak center
    (the centers sit at +-3J/2 in Zeeman-frequency units). With lower-energy
    gauge initialization only the outer crossing pair is visible.
    """
    if j_mhz <= 0:
        raise ValueError("leakage spectroscopy needs J > 0")
    bz_grid = np.asarray(bz_grid_mhz, dtype=float)
    if dwell_us is None:
        dwell_us = 10.0 / max(hyperfine.sigma_mhz, 1e-3)
    b_all, _ = _noise_batches(hyperfine, None, seed, shots)
    triple = np.array([j_mhz, j_mhz, j_mhz])

    def one_point(bz):
        comps = _init_components(bz, policy)
        p0, p1 = _dwell_populations(triple, bz, dwell_us, b_all, comps)
        pl = 1.0 - p0 - p1
        return p0.mean(), p1.mean(), pl.mean(), pl.std(ddof=0) / np.sqrt(shots)

    rows = np.array(_pmap(one_point, list(bz_grid), threads))
    sweep = SweepResult(
        axes=[AxisDef("bz", "MHz", bz_grid)],
        observables={
            "p0": rows[:, 0], "p1": rows[:, 1],
            "pl": rows[:, 2], "pl_err": rows[:, 3],
        },
        meta={
            "j_mhz": j_mhz, "dwell_us": dwell_us, "shots": shots,
            "seed": seed, "policy": policy,
        },
    )
    fit = fit_double_gaussian(bz_grid, rows[:, 2])
    if fit.converged:
        c1, c2 = fit.params["c1"], fit.params["c2"]
        fit.extras["eg_mhz"] = 0.5 * (abs(c1) + abs(c2))
        fit.extras["eg_err_mhz"] = 0.5 * np.hypot(
            fit.errors.get("c1", np.nan), fit.errors.get("c2", np.nan)
        )
    return sweep, fit


def leakage_vs_gap(eg_grid_mhz, hyperfine, dwell_us=1000.0, shots=500, seed=0,
                   threads=1):
    """Leakage population at a fixed long dwell versus gap energy, plus a
    power-law fit of the suppression (slope approaches -2 for gaps well above
    the hyperfine scale)."""
    eg_grid = np.asarray(eg_grid_mhz, dtype=float)
    b_all, _ = _noise_batches(hyperfine, None, seed, shots)
    comps = _init_components(0.0, "equal-mixture")

    def one_point(eg):
        j = 2.0 * eg / 3.0
        p0, p1 = _dwell_populations(np.array([j, j, j]), 0.0, dwell_us, b_all, comps)
        pl = 1.0 - p0 - p1
        return pl.mean(), pl.std(ddof=0) / np.sqrt(shots)

    rows = np.array(_pmap(one_point, list(eg_grid), threads))
    sweep = SweepResult(
        axes=[AxisDef("eg", "MHz", eg_grid)],
        observables={"pl": rows[:, 0], "pl_err": rows[:, 1]},
        meta={"dwell_us": dwell_us, "shots": shots, "seed": seed},
    )
    fit = fit_power_law(eg_grid, np.maximum(rows[:, 0], 1e-12))
    return sweep, fit


def lpi_sweep(device, v_a_grid, v_b_grid, fixed_pair="13", fixed_value=None,
              j_target_mhz=200.0, rb_depth=4, interleave_ns=20.0,
              rb_j_mhz=150.0, randomizations=3, hyperfine=None, charge=None,
              shots=1, seed=0, threads=1, center_on_truth=True,
              refine_factor=1.618034):
    """LPI-locating map: a 3-J pulse interleaved in a 1-J RB scaffold.

    One physical exchange gate stays fixed (default: at the equal-coupling
    ground truth) while the other two sweep. With `center_on_truth` the grids
    are offsets around the solved equal-coupling voltage; otherwise they are
    absolute. The return probability P0 is maximal on a closed disc centered
    at the voltage where all couplings are equal; surrounding bright fringes
    are rotations of angle 0 mod 2 pi.

    Fringes move when the pulse length changes while the disc stays put, so
    when `refine_factor` is set a second map at refine_factor * interleave_ns
    is recorded (with its own independent scaffolds) and the disc is located
    on the product of the two maps, the same refinement used on hardware.
    The irrational default factor keeps rotation angles on low-order fringe
    rings away from multiples of pi, where short scaffolds can be blind
    (pi-rotations pair-cancel through an even number of interleaves). The
    disc radius always refers to the primary map.
    """
    v_a_grid = np.asarray(v_a_grid, dtype=float)
    v_b_grid = np.asarray(v_b_grid, dtype=float)
    if len(v_a_grid) == 0 or len(v_b_grid) == 0:
        raise ValueError("empty voltage grid")
    pair_slot = {"12": 0, "23": 1, "13": 2}
    if fixed_pair not in pair_slot:
        raise ValueError(f"fixed_pair must be one of {tuple(pair_slot)}")
    truth = solve_lpi_voltages(device, j_target_mhz)
    kf = pair_slot[fixed_pair]
    if fixed_value is None:
        fixed_value = float(truth[kf])
    ka, kb = [k for k in range(3) if k != kf]
    if center_on_truth:
        v_a_grid = v_a_grid + truth[ka]
        v_b_grid = v_b_grid + truth[kb]

    rng = np.random.default_rng([int(seed), 0x5B])
    b_all, dv_all = _noise_batches(hyperfine, charge, seed, shots)
    comps = _init_components(0.0, "equal-mixture")

    def draw_gate_sets():
        # gate unitaries are grid-independent: precompute per (randomization, shot)
        gate_sets = []
        for _ in range(randomizations):
            idxs, inv = rb.identity_compiled_indices(rb_depth, rng)
            rot_lists = [rb.decompose_clifford(k) for k in idxs] + [rb.decompose_clifford(inv)]
            per_shot = []
            for k in range(shots):
                fields = LocalFields(b_all[k].reshape(3, 3))
                gates = []
                for rots in rot_lists:
                    u = np.eye(8, dtype=complex)
                    for seg in rb.rotation_segments(rots, rb_j_mhz, fields):
                        u = segment_propagator(
                            build_hamiltonian(seg.config, seg.fields), seg.duration_ns
                        ) @ u
                    gates.append(u)
                per_shot.append(gates)
            gate_sets.append(per_shot)
        return gate_sets

    def one_row(args):
        va, duration_ns, gate_sets = args
        row = np.empty(len(v_b_grid))
        for jb, vb in enumerate(v_b_grid):
            v = np.empty(3)
            v[kf], v[ka], v[kb] = fixed_value, va, vb
            acc = 0.0
            for k in range(shots):
                cfg, _ = exchange_from_voltages(
                    device, v + (dv_all[k] if charge is not None else 0.0)
                )
                u_int = segment_propagator(
                    build_hamiltonian(cfg, LocalFields(b_all[k].reshape(3, 3))),
                    duration_ns,
                )
                for gates in (gs[k] for gs in gate_sets):
                    for weight, col in comps:
                        psi = col
                        if rb_depth == 0:
                            psi = u_int @ psi
                        else:
                            for u_gate in gates[:-1]:
                                psi = u_int @ (u_gate @ psi)
                            psi = gates[-1] @ psi
                        acc += weight * (
                            abs(np.vdot(_COL["0p"], psi)) ** 2
                            + abs(np.vdot(_COL["0m"], psi)) ** 2
                        )
            row[jb] = acc / (shots * randomizations)
        return row

    def full_map(duration_ns, gate_sets):
        rows = _pmap(one_row, [(va, duration_ns, gate_sets) for va in v_a_grid], threads)
        return np.array(rows)

    p0_map = full_map(interleave_ns, draw_gate_sets())
    pair_names = {0: "v12", 1: "v23", 2: "v13"}
    sweep = SweepResult(
        axes=[
            AxisDef(pair_names[ka], "V", v_a_grid),
            AxisDef(pair_names[kb], "V", v_b_grid),
        ],
        observables={"p0": p0_map},
        meta={
            "fixed_pair": fixed_pair,
            "fixed_value_v": fixed_value,
            "j_target_mhz": j_target_mhz,
            "truth_v": [float(x) for x in truth],
            "rb_depth": rb_depth,
            "interleave_ns": interleave_ns,
            "randomizations": randomizations,
            "shots": shots,
            "seed": seed,
        },
    )
    seed_map = None
    if refine_factor:
        refine_map = full_map(refine_factor * interleave_ns, draw_gate_sets())
        sweep.observables["p0_refine"] = refine_map
        seed_map = p0_map * refine_map
    disc = locate_disc(p0_map, v_a_grid, v_b_grid, seed_map=seed_map)
    sweep.meta["disc_center_v"] = [disc["center"][0], disc["center"][1]]
    sweep.meta["disc_radius_v"] = disc["radius"]
    return sweep


def locate_disc(p0_map, a_vals, b_vals, threshold=0.9, seed_map=None):
    """Center and radius of the high-P0 disc in a 2-D map.

    The seed is the maximum of a 3x3-smoothed map (by default the map
    itself; pass the product of maps at two pulse lengths as `seed_map` to
    suppress 0-mod-2pi fringes, which move with pulse length). The center is
    the weighted centroid of the above-threshold region around the seed in
    `seed_map`; the radius comes from the equal-area circle of the connected
    above-threshold region of `p0_map` itself.
    """
    m = np.asarray(p0_map, dtype=float)

    def smooth3(x):
        padded = np.pad(x, 1, mode="edge")
        return sum(
            padded[1 + di : 1 + di + x.shape[0], 1 + dj : 1 + dj + x.shape[1]]
            for di in (-1, 0, 1)
            for dj in (-1, 0, 1)
        ) / 9.0

    if seed_map is None:
        # single map: smoothing demotes thin fringe curves relative to the disc
        s = m
        si, sj = np.unravel_index(np.argmax(smooth3(m)), m.shape)
    else:
        # two-duration product already suppresses fringes; seed on the raw max
        s = np.asarray(seed_map, dtype=float)
        si, sj = np.unravel_index(np.argmax(s), s.shape)

    def component_around(field, i0, j0, thr):
        mask = field >= thr
        comp = np.zeros_like(mask)
        if not mask[i0, j0]:
            return comp
        stack = [(i0, j0)]
        comp[i0, j0] = True
        while stack:
            i, j = stack.pop()
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if (
                    0 <= ii < field.shape[0]
                    and 0 <= jj < field.shape[1]
                    and mask[ii, jj]
                    and not comp[ii, jj]
                ):
                    comp[ii, jj] = True
                    stack.append((ii, jj))
        return comp

    seed_comp = component_around(s, si, sj, threshold)
    if not seed_comp.any():
        return {"center": (float(a_vals[si]), float(b_vals[sj])), "radius": 0.0, "cells": 0}
    weights = np.where(seed_comp, s - threshold, 0.0)
    total = weights.sum()
    ci = float((weights.sum(axis=1) @ a_vals) / total)
    cj = float((weights.sum(axis=0) @ b_vals) / total)
    # radius from the primary map's own component at the located center
    i0 = int(np.argmin(np.abs(a_vals - ci)))
    j0 = int(np.argmin(np.abs(b_vals - cj)))
    main_comp = component_around(m, i0, j0, threshold)
    cells = int(main_comp.sum())
    da = abs(a_vals[1] - a_vals[0]) if len(a_vals) > 1 else 1.0
    db = abs(b_vals[1] - b_vals[0]) if len(b_vals) > 1 else 1.0
    radius = float(np.sqrt(cells * da * db / np.pi))
    return {"center": (ci, cj), "radius": radius, "cells": cells}


def b_calibration(j_values_mhz, current_grid_ma, coil: CoilModel, hyperfine,
                  shots=300, seed=0, dwell_us=None, osc_window_us=1.0,
                  osc_dt_ns=1.0, gmub_mhz_per_mt=27.97, threads=1):
    """Magnet calibration: 1-J leakage peaks versus coil current, exchange
    value from the FFT of exchange oscillations, then a fit of
    |B|(I) = sqrt((kappa I + B_par)^2 + B_perp^2) to the peak positions.

    On hardware the exchange values come from gate-voltage setpoints; here
    they are passed directly and the pipeline measures them back via the FFT.
    Needs at least three exchange values to determine the three coil
    parameters.
    """
    j_values = np.asarray(j_values_mhz, dtype=float)
    if len(j_values) < 3:
        raise ValueError("magnet calibration is underdetermined with fewer than 3 J values")
    currents = np.asarray(current_grid_ma, dtype=float)
    if dwell_us is None:
        dwell_us = 10.0 / max(hyperfine.sigma_mhz, 1e-3)
    b_all, _ = _noise_batches(hyperfine, None, seed, shots)
    perp_mhz = gmub_mhz_per_mt * coil.b_perp_mt
    b_with_perp = b_all + np.tile([perp_mhz, 0.0, 0.0], 3)

    rows = []  # (j_true, j_fft, current, |B| in mT)
    osc_t = np.arange(0.0, osc_window_us, osc_dt_ns * 1e-3)
    fft_peaks = {}
    for j in j_values:
        # exchange oscillations about the m axis read the coupling magnitude
        p0_osc = np.zeros(len(osc_t))
        h = batch_hamiltonians(np.tile([j, 0.0, 0.0], (shots, 1)), 0.0, b_all)
        w, v = np.linalg.eigh(h)
        for weight, col in _init_components(0.0, "equal-mixture"):
            outs = np.stack([
                np.tile(_COL["0p"], (shots, 1)), np.tile(_COL["0m"], (shots, 1)),
            ])
            pr = _amplitudes(w, v, np.tile(col, (shots, 1)), outs, osc_t)
            p0_osc += weight * (pr[0] + pr[1]).mean(axis=0)
        j_fft = fft_peak(p0_osc, osc_dt_ns * 1e-3)
        fft_peaks[float(j)] = float(j_fft)

        def one_point(current):
            bz = gmub_mhz_per_mt * (coil.kappa_mt_per_ma * current + coil.b_par_mt)
            comps = _init_components(bz, "lower-energy")
            p0, p1 = _dwell_populations(
                np.array([0.0, 0.0, j]), bz, dwell_us, b_with_perp, comps
            )
            return float(np.mean(1.0 - p0 - p1))

        pl_curve = np.array(_pmap(one_point, list(currents), threads))
        for i_peak in _two_main_peaks(pl_curve):
            current = _refine_peak(currents, pl_curve, i_peak)
            rows.append((float(j), float(j_fft), current, float(j_fft) / gmub_mhz_per_mt))

    rows = np.array(rows)
    fit = _fit_coil(rows[:, 2], rows[:, 3])
    fit.extras["fft_peaks_mhz"] = fft_peaks
    data = SweepResult(
        axes=[AxisDef("point", "", np.arange(len(rows)))],
        observables={
            "j_mhz": rows[:, 0], "j_fft_mhz": rows[:, 1],
            "current_ma": rows[:, 2], "b_mt": rows[:, 3],
        },
        meta={"dwell_us": dwell_us, "shots": shots, "seed": seed,
              "gmub_mhz_per_mt": gmub_mhz_per_mt},
    )
    return fit, data


def _two_main_peaks(y, min_separation=10):
    idx = local_maxima(y, min_prominence=0.25 * (np.max(y) - np.min(y) + 1e-12))
    if len(idx) < 2:
        raise RuntimeError("leakage sweep does not show two crossing peaks")
    ranked = idx[np.argsort(y[idx])[::-1]]
    first = ranked[0]
    for second in ranked[1:]:
        if abs(second - first) >= min_separation:
            return np.sort(np.array([first, second]))
    raise RuntimeError("leakage sweep peaks are not separated")


def _refine_peak(x, y, i, half_window=8):
    """Sub-grid peak center from a local Gaussian fit (parabola fallback).

    The crossing peaks can be narrower than the current grid step; their
    power-broadened tails span several nodes, which the Gaussian fit uses.
    """
    lo, hi = max(i - half_window, 0), min(i + half_window + 1, len(y))
    xs, ys = np.asarray(x[lo:hi], float), np.asarray(y[lo:hi], float)
    step = abs(x[1] - x[0])

    def residual(p):
        a, c, w, off = p
        return a * np.exp(-0.5 * ((xs - c) / w) ** 2) + off - ys

    p0 = np.array([y[i] - ys.min(), x[i], 1.5 * step, ys.min()])
    p, _, converged, _ = damped_gauss_newton(residual, p0)
    if converged and xs[0] <= p[1] <= xs[-1]:
        return float(p[1])
    if 0 < i < len(y) - 1:
        a, b, c = y[i - 1], y[i], y[i + 1]
        denom = a - 2.0 * b + c
        if denom != 0.0:
            return float(x[i] + 0.5 * (a - c) / denom * step)
    return float(x[i])


def _fit_coil(currents, b_values):
    """Fit |B|(I) = sqrt((kappa I + b_par)^2 + b_perp^2); closed-form seed
    from the quadratic fit of B^2 versus I."""
    coeffs = np.polyfit(currents, b_values**2, 2)
    kappa0 = np.sqrt(max(coeffs[0], 1e-12))
    b_par0 = coeffs[1] / (2.0 * kappa0)
    b_perp0 = np.sqrt(max(coeffs[2] - b_par0**2, 1e-12))

    def residual(p):
        kappa, b_par, b_perp = p
        return np.sqrt((kappa * currents + b_par) ** 2 + b_perp**2) - b_values

    p, cov, converged, rnorm = damped_gauss_newton(residual, np.array([kappa0, b_par0, b_perp0]))
    p[2] = abs(p[2])
    errs = np.sqrt(np.abs(np.diag(cov)))
    names = ("kappa_mt_per_ma", "b_par_mt", "b_perp_mt")
    return FitResult(
        model="coil_field",
        params=dict(zip(names, p)) if converged else {},
        errors=dict(zip(names, errs)) if converged else {},
        residual_norm=rnorm,
        converged=converged,
    )


def spectrum_sweep(j12_grid_mhz, j13_mhz=100.0, j23_mhz=100.0, bz_mhz=0.0):
    """Eigenvalue fan versus J12 at fixed J13, J23 (noiseless)."""
    j12_grid = np.asarray(j12_grid_mhz, dtype=float)
    energies = np.empty((len(j12_grid), 8))
    for i, j12 in enumerate(j12_grid):
        h = build_hamiltonian(ExchangeConfig(j12, j23_mhz, j13_mhz, bz_mhz))
        energies[i] = np.linalg.eigvalsh(h)
    return SweepResult(
        axes=[AxisDef("J12", "MHz", j12_grid)],
        observables={f"E{k + 1}": energies[:, k] for k in range(8)},
        meta={"j13_mhz": j13_mhz, "j23_mhz": j23_mhz, "bz_mhz": bz_mhz},
    )
