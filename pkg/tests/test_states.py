import numpy as np
import pytest

from qusmooth.states import (
    KET_E,
    KET_G,
    StateValidationError,
    bloch_to_state,
    fidelity,
    ket_to_state,
    min_eigenvalue,
    purity,
    repair_psd,
    state_to_bloch,
    trsd,
    validate_state,
)


def test_basis_convention():
    # ground state |g><g| sits at the south pole
    assert np.allclose(bloch_to_state((0, 0, -1)), np.diag([0.0, 1.0]))
    assert np.allclose(bloch_to_state((0, 0, 0)), np.eye(2) / 2)


def test_bloch_roundtrip():
    rho = bloch_to_state((0.6, 0, 0))
    assert abs(rho[0, 1] - 0.3) < 1e-15
    assert np.allclose(state_to_bloch(rho), (0.6, 0, 0), atol=1e-12)
    rng = np.random.default_rng(5)
    for _ in range(20):
        b = rng.normal(size=3)
        b *= rng.uniform(0, 1) / np.linalg.norm(b)
        assert np.allclose(state_to_bloch(bloch_to_state(b)), b, atol=1e-12)
        assert abs(np.trace(bloch_to_state(b)) - 1) < 1e-12


def test_bloch_domain_error():
    with pytest.raises(StateValidationError):
        bloch_to_state((1.1, 0, 0))


def test_purity_values():
    assert abs(purity(bloch_to_state((0, 0, 1))) - 1.0) < 1e-12
    assert abs(purity(np.eye(2) / 2) - 0.5) < 1e-12
    assert abs(purity(bloch_to_state((0.6, 0, 0))) - 0.68) < 1e-12


def test_purity_bloch_identity():
    rng = np.random.default_rng(6)
    for _ in range(10):
        b = rng.normal(size=3)
        b *= rng.uniform(0, 1) / np.linalg.norm(b)
        assert abs(purity(bloch_to_state(b)) - (1 + b @ b) / 2) < 1e-12


def test_trsd_values():
    up = bloch_to_state((0, 0, 1))
    down = bloch_to_state((0, 0, -1))
    assert trsd(up, up) == 0.0
    assert abs(trsd(up, down) - 2.0) < 1e-12      # pure orthogonal states
    assert abs(trsd(np.eye(2) / 2, up) - 0.5) < 1e-12
    assert abs(trsd(up, np.eye(2) / 2) - trsd(np.eye(2) / 2, up)) < 1e-15


def test_fidelity_values():
    up = bloch_to_state((0, 0, 1))
    down = bloch_to_state((0, 0, -1))
    assert abs(fidelity(up, up) - 1.0) < 1e-12
    assert abs(fidelity(up, down)) < 1e-12
    assert abs(fidelity(np.eye(2) / 2, up) - 0.5) < 1e-12


def test_fidelity_warns_for_two_mixed_states():
    mixed = bloch_to_state((0.2, 0, 0))
    with pytest.warns(UserWarning):
        fidelity(mixed, np.eye(2) / 2)


def test_trsd_fidelity_purity_chain():
    # TrSD = Purity - 2 Fidelity + 1 whenever the second argument is pure
    rng = np.random.default_rng(7)
    for _ in range(20):
        b = rng.normal(size=3)
        b *= rng.uniform(0, 1) / np.linalg.norm(b)
        rho = bloch_to_state(b)
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        sigma = ket_to_state(psi)
        lhs = trsd(rho, sigma)
        rhs = purity(rho) - 2 * fidelity(rho, sigma) + 1
        assert abs(lhs - rhs) < 1e-12


def test_validate_state():
    validate_state(bloch_to_state((0.1, 0.2, -0.3)))
    with pytest.raises(StateValidationError):
        validate_state(np.array([[0.5, 0.1], [0.3, 0.5]]))   # not Hermitian
    with pytest.raises(StateValidationError):
        validate_state(np.diag([0.7, 0.7]))                  # trace off
    with pytest.raises(StateValidationError):
        validate_state(np.diag([1.5, -0.5]))                 # negative eigenvalue


def test_repair_psd():
    rho = np.diag([1.0 + 5e-10, -5e-10])
    fixed = repair_psd(rho)
    assert min_eigenvalue(fixed) >= 0.0
    assert abs(np.trace(fixed) - 1) < 1e-12
    with pytest.raises(StateValidationError):
        repair_psd(np.diag([1.1, -0.1]))


def test_kets():
    assert np.allclose(ket_to_state(KET_G), np.diag([0.0, 1.0]))
    assert np.allclose(ket_to_state(KET_E), np.diag([1.0, 0.0]))
