import numpy as np
import pytest

from conftest import qubit_block
from trispin.dynamics import (
    ExchangeConfig,
    LocalFields,
    M_HAT,
    N_HAT,
    PulseSequence,
    Segment,
    Z_HAT,
    build_hamiltonian,
    check_density_matrix,
    eigensystem,
    level_crossings,
    lpi_gap,
    propagate,
    rotation_axis,
    segment_propagator,
    zeeman_mhz_from_tesla,
)

I8 = np.eye(8)


def random_hermitian(rng, scale=50.0):
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    return scale * (a + a.conj().T) / 2.0


def random_config(rng, jmax=200.0):
    j = rng.uniform(0.0, jmax, 3)
    return ExchangeConfig(j[0], j[1], j[2])


def random_fields(rng, sigma=1.0):
    return LocalFields(sigma * rng.standard_normal((3, 3)))


class TestBuildHamiltonian:
    def test_equal_couplings_spectrum(self):
        h = build_hamiltonian(ExchangeConfig(100.0, 100.0, 100.0))
        w = np.linalg.eigvalsh(h)
        assert np.allclose(w[:4], -75.0, atol=1e-10)
        assert np.allclose(w[4:], 75.0, atol=1e-10)

    def test_all_zero(self):
        h = build_hamiltonian(ExchangeConfig(0.0, 0.0, 0.0))
        assert np.max(np.abs(h)) == 0.0

    def test_j13_only(self, basis):
        j = 80.0
        h = build_hamiltonian(ExchangeConfig(0.0, 0.0, j))
        for col in (basis.matrix[:, 0], basis.matrix[:, 1]):
            assert np.linalg.norm(h @ col - (-0.75 * j) * col) < 1e-10
        # singlet-triplet splitting of the (1,3) pair equals J
        assert np.vdot(basis.matrix[:, 2], h @ basis.matrix[:, 2]).real == pytest.approx(0.25 * j)

    def test_hermitian(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            h = build_hamiltonian(random_config(rng), random_fields(rng))
            assert np.max(np.abs(h - h.conj().T)) < 1e-12

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            ExchangeConfig(float("nan"), 1.0, 1.0)
        with pytest.raises(ValueError):
            LocalFields(np.full((3, 3), np.nan))

    def test_negative_exchange_rejected(self):
        with pytest.raises(ValueError, match="negative exchange"):
            ExchangeConfig(-1.0, 1.0, 1.0)

    def test_zeeman_conversion(self):
        assert zeeman_mhz_from_tesla(1e-3) == pytest.approx(27.97)


class TestEigensystem:
    def test_spectrum_sweep_crossing_structure(self):
        # qubit doublets degenerate only at J12 = 100 when J13 = J23 = 100
        j12_grid = np.linspace(0.0, 200.0, 201)
        gaps = []
        for j12 in j12_grid:
            h = build_hamiltonian(ExchangeConfig(j12, 100.0, 100.0))
            w, v = eigensystem(h)
            s2 = np.einsum("in,ij,jn->n", v.conj(), _s2(), v).real
            qubit = np.sort(w[s2 < 2.0])
            leak = np.sort(w[s2 > 2.0])
            gaps.append((qubit[2] - qubit[1], leak.min() - qubit.max()))
        gaps = np.array(gaps)
        degenerate = np.nonzero(gaps[:, 0] < 1e-9)[0]
        assert list(degenerate) == [100]
        assert gaps[100, 1] == pytest.approx(150.0, abs=1e-9)

    def test_zero_matrix(self):
        w, _ = eigensystem(np.zeros((8, 8)))
        assert np.allclose(w, 0.0)

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            h = random_hermitian(rng)
            w, v = eigensystem(h)
            assert np.all(np.diff(w) >= -1e-12)
            assert np.max(np.abs(v.conj().T @ v - I8)) < 1e-12
            recon = (v * w) @ v.conj().T
            assert np.max(np.abs(recon - h)) <= 1e-10 * max(np.max(np.abs(h)), 1.0)

    def test_non_hermitian_rejected(self):
        bad = np.zeros((8, 8), dtype=complex)
        bad[0, 1] = 1.0
        with pytest.raises(ValueError, match="not Hermitian"):
            eigensystem(bad)


def _s2():
    from trispin.spin8 import build_spin_operators

    return build_spin_operators().s2


class TestLpiGap:
    def test_values(self):
        assert lpi_gap(100.0) == pytest.approx(150.0)
        assert lpi_gap(2.4) == pytest.approx(3.6)
        assert lpi_gap(0.0) == 0.0

    def test_cross_validated_against_spectrum(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            j = rng.uniform(0.5, 500.0)
            w = np.linalg.eigvalsh(build_hamiltonian(ExchangeConfig(j, j, j)))
            assert w[4] - w[3] == pytest.approx(lpi_gap(j), rel=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            lpi_gap(-1.0)


class TestRotationAxis:
    def test_lpi_is_identity(self):
        axis, rate = rotation_axis(ExchangeConfig(7.0, 7.0, 7.0))
        assert axis is None and rate == 0.0

    def test_single_pair(self):
        axis, rate = rotation_axis(ExchangeConfig(0.0, 0.0, 9.0))
        assert np.allclose(axis, [0.0, 0.0, 1.0])
        assert rate == pytest.approx(9.0)

    def test_two_equal_pairs(self):
        axis, rate = rotation_axis(ExchangeConfig(6.0, 6.0, 0.0))
        assert np.allclose(axis, [0.0, 0.0, -1.0])
        assert rate == pytest.approx(6.0)

    def test_against_propagator_brute_force(self, basis):
        # extract the rotation generator of the qubit block and compare
        rng = np.random.default_rng(5)
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]])
        sz = np.diag([1.0, -1.0]).astype(complex)
        for _ in range(15):
            cfg = random_config(rng, jmax=50.0)
            axis, rate = rotation_axis(cfg)
            if axis is None:
                continue
            h = build_hamiltonian(cfg)
            block = qubit_block(h, basis)
            r = -2.0 * np.array(
                [np.trace(block @ sx).real, np.trace(block @ sy).real, np.trace(block @ sz).real]
            ) / 2.0
            assert np.linalg.norm(r) == pytest.approx(rate, rel=1e-9)
            assert abs(np.dot(r / np.linalg.norm(r), axis)) == pytest.approx(1.0, abs=1e-9)
            assert abs(axis[1]) < 1e-12  # xz-plane

    def test_axes_sum_to_zero(self):
        assert np.allclose(M_HAT + N_HAT + Z_HAT, 0.0)


class TestLevelCrossings:
    def test_values(self):
        assert np.allclose(level_crossings(2.4), [-3.6, -1.8, 1.8, 3.6])
        assert np.allclose(level_crossings(100.0), [-150.0, -75.0, 75.0, 150.0])

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            level_crossings(0.0)

    def test_numerical_minimum_gap_scan(self):
        # dense scan oracle: the qubit-leakage gap closes at 3J/4 and 3J/2
        j = 10.0
        bz_grid = np.linspace(0.1, 2.0 * j, 2001)
        gaps = []
        s2 = _s2()
        for bz in bz_grid:
            h = build_hamiltonian(ExchangeConfig(j, j, j, bz_mhz=bz))
            w, v = eigensystem(h)
            s2_exp = np.einsum("in,ij,jn->n", v.conj(), s2, v).real
            qubit = w[s2_exp < 2.0]
            leak = w[s2_exp > 2.0]
            gaps.append(np.min(np.abs(leak[:, None] - qubit[None, :])))
        gaps = np.array(gaps)
        minima = [
            bz_grid[i]
            for i in range(1, len(gaps) - 1)
            if gaps[i] < gaps[i - 1] and gaps[i] <= gaps[i + 1] and gaps[i] < 0.05
        ]
        step = bz_grid[1] - bz_grid[0]
        expected = [0.75 * j, 1.5 * j]
        assert len(minima) == 2
        for found, want in zip(sorted(minima), expected):
            assert abs(found - want) <= step


class TestPropagate:
    def test_zero_duration_identity(self):
        rho0 = np.diag([1.0] + [0.0] * 7).astype(complex)
        seq = PulseSequence([Segment(config=ExchangeConfig(10, 10, 10), duration_ns=0.0)])
        assert np.allclose(propagate(seq, rho0), rho0)

    def test_empty_sequence_identity(self):
        rho0 = np.eye(8) / 8.0
        assert np.allclose(propagate(PulseSequence([]), rho0), rho0)

    def test_lpi_segment_preserves_qubit_states(self, basis, projectors):
        rng = np.random.default_rng(8)
        j = 37.0
        for duration_ns in (13.0, 500.0, 10.0 / j * 1e3):
            # random density matrix supported on the qubit subspace
            amp = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
            rho4 = amp @ amp.conj().T
            rho4 /= np.trace(rho4).real
            cols = basis.matrix[:, :4]
            rho0 = cols @ rho4 @ cols.conj().T
            seq = PulseSequence([Segment(config=ExchangeConfig(j, j, j), duration_ns=duration_ns)])
            rho1 = propagate(seq, rho0)
            assert np.max(np.abs(rho1 - rho0)) < 1e-9

    def test_pulse_against_series_expm_oracle(self, basis):
        scipy_linalg = pytest.importorskip("scipy.linalg")
        j = 40.0
        duration_ns = 1.0 / (2.0 * j) * 1e3  # half an exchange-oscillation period
        h = build_hamiltonian(ExchangeConfig(j, 0.0, 0.0))
        u = segment_propagator(h, duration_ns)
        u_ref = scipy_linalg.expm(-2j * np.pi * h * duration_ns * 1e-3)
        assert np.max(np.abs(u - u_ref)) < 1e-9
        # rotation by pi about the m axis from |0>: P0 = (5 + 3 cos pi)/8 = 1/4
        psi = u @ basis.matrix[:, 0]
        p0 = abs(np.vdot(basis.matrix[:, 0], psi)) ** 2 + abs(np.vdot(basis.matrix[:, 1], psi)) ** 2
        assert p0 == pytest.approx(0.25, abs=1e-9)

    def test_trace_and_hermiticity_preserved(self):
        rng = np.random.default_rng(21)
        amp = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        rho0 = amp @ amp.conj().T
        rho0 /= np.trace(rho0).real
        segs = [
            Segment(config=random_config(rng), fields=random_fields(rng), duration_ns=rng.uniform(1, 50))
            for _ in range(5)
        ]
        rho = propagate(PulseSequence(segs), rho0)
        assert abs(np.trace(rho).real - 1.0) < 1e-9
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-9
        check_density_matrix(rho, psd_tol=1e-8)

    def test_invalid_state_rejected(self):
        seq = PulseSequence([Segment(config=ExchangeConfig(1, 1, 1), duration_ns=1.0)])
        with pytest.raises(ValueError):
            propagate(seq, np.eye(8))  # trace 8, not a state

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            Segment(config=ExchangeConfig(1, 1, 1), duration_ns=-1.0)


class TestInvariants:
    def test_symmetries_without_local_fields(self, ops):
        rng = np.random.default_rng(9)
        for _ in range(10):
            cfg = random_config(rng)
            h = build_hamiltonian(ExchangeConfig(cfg.j12_mhz, cfg.j23_mhz, cfg.j13_mhz, bz_mhz=rng.uniform(-50, 50)))
            assert np.max(np.abs(h @ ops.s2 - ops.s2 @ h)) < 1e-10
            assert np.max(np.abs(h @ ops.total[2] - ops.total[2] @ h)) < 1e-10

    def test_equal_j_propagator_is_phase_on_qubit_subspace(self, basis):
        rng = np.random.default_rng(10)
        for _ in range(5):
            j = rng.uniform(1.0, 300.0)
            t_ns = rng.uniform(0.0, 10.0 / j) * 1e3
            u = segment_propagator(build_hamiltonian(ExchangeConfig(j, j, j)), t_ns)
            cols = basis.matrix[:, :4]
            block = cols.conj().T @ u @ cols
            phase = block[0, 0] / abs(block[0, 0])
            assert np.max(np.abs(block - phase * np.eye(4))) < 1e-9

    def test_gauge_equivalence_of_qubit_blocks(self, basis):
        rng = np.random.default_rng(12)
        for _ in range(10):
            u = I8.astype(complex)
            for _ in range(4):
                u = segment_propagator(
                    build_hamiltonian(random_config(rng)), rng.uniform(0.5, 30.0)
                ) @ u
            bp = qubit_block(u, basis, gauge=0)
            bm = qubit_block(u, basis, gauge=1)
            phase = bp[0, 0] / bm[0, 0] if abs(bm[0, 0]) > 1e-12 else bp[0, 1] / bm[0, 1]
            assert abs(abs(phase) - 1.0) < 1e-9
            assert np.max(np.abs(bp - phase * bm)) < 1e-9

    def test_energy_conservation(self):
        rng = np.random.default_rng(13)
        cfg = random_config(rng)
        fields = random_fields(rng)
        h = build_hamiltonian(cfg, fields)
        rho = np.diag([0.5, 0.25, 0.25, 0, 0, 0, 0, 0]).astype(complex)
        e0 = np.trace(h @ rho).real
        for t in (5.0, 50.0, 500.0):
            u = segment_propagator(h, t)
            e = np.trace(h @ u @ rho @ u.conj().T).real
            assert e == pytest.approx(e0, abs=1e-9 * max(abs(e0), 1.0))

    def test_spectral_vs_scaling_squaring_oracle(self):
        scipy_linalg = pytest.importorskip("scipy.linalg")
        rng = np.random.default_rng(14)
        worst = 0.0
        for _ in range(1000):
            cfg = random_config(rng, jmax=100.0)
            fields = random_fields(rng, sigma=2.0)
            h = build_hamiltonian(cfg, fields)
            t_ns = rng.uniform(0.0, 100.0)
            u = segment_propagator(h, t_ns)
            u_ref = scipy_linalg.expm(-2j * np.pi * h * t_ns * 1e-3)
            worst = max(worst, np.max(np.abs(u - u_ref)))
        assert worst < 1e-9
