import numpy as np
import pytest

from trispin.spin8 import build_coupled_basis, build_spin_operators, projector


@pytest.fixture(scope="session")
def ops():
    return build_spin_operators()


@pytest.fixture(scope="session")
def basis():
    return build_coupled_basis()


@pytest.fixture(scope="session")
def projectors(basis):
    return {
        tag: projector(basis, tag).matrix
        for tag in ("qubit0", "qubit1", "leakage", "s13_singlet", "gauge_plus", "gauge_minus")
    }


def qubit_block(u8, basis, gauge=0):
    """2x2 qubit-subspace block of an 8x8 operator for gauge 0 (+) or 1 (-)."""
    c0 = basis.matrix[:, 0 + gauge]
    c1 = basis.matrix[:, 2 + gauge]
    return np.array(
        [
            [np.vdot(c0, u8 @ c0), np.vdot(c0, u8 @ c1)],
            [np.vdot(c1, u8 @ c0), np.vdot(c1, u8 @ c1)],
        ]
    )
