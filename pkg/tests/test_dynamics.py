import numpy as np
import pytest

from qusmooth.dynamics import (
    ConfigError,
    ModelParams,
    Setup,
    StepOperators,
    kraus_step,
    lindblad_rhs,
    lindblad_step,
    steady_state,
    superop_G,
    superop_H,
)
from qusmooth.states import bloch_to_state, state_to_bloch

GROUND = np.diag([0.0, 1.0]).astype(complex)
EXCITED = np.diag([1.0, 0.0]).astype(complex)


def random_state(rng):
    b = rng.normal(size=3)
    b *= rng.uniform(0, 1) / np.linalg.norm(b)
    return bloch_to_state(b)


def test_params_validation():
    ModelParams()
    with pytest.raises(ConfigError):
        ModelParams(dt=0.5)          # jump probability per step too large
    with pytest.raises(ConfigError):
        ModelParams(dt=-1e-3)
    with pytest.raises(ConfigError):
        ModelParams(t_f=0.0)
    with pytest.raises(ConfigError):
        ModelParams(gamma=0.0)


def test_ground_state_is_dark_without_drive():
    p = ModelParams(omega=0.0)
    out = lindblad_step(GROUND, p)
    assert np.abs(out - GROUND).max() < 1e-14


def test_excited_state_decay_rate():
    p = ModelParams(omega=0.0, dt=1e-4)
    out = lindblad_step(EXCITED, p)
    z = state_to_bloch(out)[2]
    # z(dt) = 1 - 2 gamma dt to first order
    assert abs(z - (1 - 2 * p.gamma * p.dt)) < 5 * p.dt**2


def test_trace_preserved():
    p = ModelParams()
    rng = np.random.default_rng(0)
    for _ in range(5):
        out = lindblad_step(random_state(rng), p)
        assert abs(np.trace(out) - 1) < 1e-12


def test_steady_state_analytic():
    # x = 0, y = 2 w g / (g^2 + 2 w^2), z = -g^2 / (g^2 + 2 w^2)
    p = ModelParams(gamma=1.0, omega=5.0)
    rho = steady_state(p)
    denom = p.gamma**2 + 2 * p.omega**2
    expected = (0.0, 2 * p.omega * p.gamma / denom, -p.gamma**2 / denom)
    assert np.allclose(state_to_bloch(rho), expected, atol=1e-12)
    # fixed point of the generator
    assert np.abs(lindblad_rhs(rho, p)).max() < 1e-12


def test_steady_state_no_drive():
    rho = steady_state(ModelParams(omega=0.0))
    assert np.abs(rho - GROUND).max() < 1e-12


def test_steady_state_is_fixed_point_of_step():
    p = ModelParams(omega=5.0)
    rho = steady_state(p)
    out = lindblad_step(rho, p)
    assert np.abs(out - rho).max() < 5 * p.dt**2


def test_long_time_evolution_reaches_steady_state():
    p = ModelParams(omega=5.0, t_f=8.0)
    rho = GROUND.copy()
    for _ in range(p.n_steps):
        rho = lindblad_step(rho, p)
    target = steady_state(p)
    # first-order integrator: O(dt) accuracy at the fixed point
    assert np.abs(rho - target).max() < 20 * p.dt


def test_superop_g():
    from qusmooth.states import SIGMA_MINUS

    out = superop_G(SIGMA_MINUS, EXCITED)
    assert np.allclose(out, GROUND - EXCITED, atol=1e-14)
    assert abs(np.trace(out)) < 1e-12
    with pytest.raises(Exception):
        superop_G(SIGMA_MINUS, GROUND)    # jump from a dark state


def test_superop_h():
    rng = np.random.default_rng(1)
    c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = random_state(rng)
    out = superop_H(c, rho)
    assert abs(np.trace(out)) < 1e-12
    # zero-expectation case reduces to c rho + rho c^dag
    c0 = np.array([[0.0, 1.0], [-1.0, 0.0]])    # Tr[c0 rho + rho c0^T] = 0 for diagonal rho
    diag = np.diag([0.3, 0.7]).astype(complex)
    assert np.allclose(superop_H(c0, diag), c0 @ diag + diag @ c0.T, atol=1e-14)


def test_kraus_click_on_excited():
    p = ModelParams(omega=0.0, dt=1e-3)
    out = kraus_step(EXCITED, Setup.N, 1, p)
    # c rho c^dag dt = (gamma/2) dt |g><g|
    assert abs(np.trace(out).real - p.gamma / 2 * p.dt) < 1e-15
    assert np.allclose(out / np.trace(out).real, GROUND, atol=1e-14)


def test_kraus_noclick_on_ground():
    p = ModelParams(omega=0.0)
    out = kraus_step(GROUND, Setup.N, 0, p)
    assert np.allclose(out, GROUND, atol=1e-14)   # trace one, state unchanged


def test_kraus_invalid_jump_outcome():
    with pytest.raises(ConfigError):
        kraus_step(GROUND, Setup.N, 0.3, ModelParams())


def test_kraus_homodyne_zero_outcome_drift():
    # dJ = 0 keeps exactly the deterministic Kraus drift -i[H, .] - {c^dag c, .}/2
    p = ModelParams(dt=1e-4)
    rng = np.random.default_rng(8)
    rho = random_state(rng)
    out = kraus_step(rho, Setup.X, 0.0, p)
    c = Setup.X.lindblad_op(p.gamma)
    cdc = c.conj().T @ c
    h = p.hamiltonian
    drift = rho + p.dt * (-1j * (h @ rho - rho @ h) - 0.5 * (cdc @ rho + rho @ cdc))
    assert np.abs(out - drift).max() < 5 * p.dt**2


@pytest.mark.parametrize("setup", [Setup.N, Setup.X, Setup.Y])
def test_outcome_summed_kraus_reproduces_averaged_dynamics(setup):
    """Summing/intergrating the Kraus maps over outcomes gives the one-channel
    averaged step to O(dt^2), checked at random states."""
    p = ModelParams(dt=1e-4)
    rng = np.random.default_rng(2)
    for _ in range(10):
        rho = random_state(rng)
        if setup.is_jump:
            total = kraus_step(rho, setup, 0, p) + kraus_step(rho, setup, 1, p)
        else:
            # Gauss-Hermite quadrature over dJ ~ Normal(0, dt)
            nodes, weights = np.polynomial.hermite_e.hermegauss(21)
            total = np.zeros((2, 2), dtype=complex)
            for x, w in zip(nodes, weights):
                dj = np.sqrt(p.dt) * x
                total += w / np.sqrt(2 * np.pi) * kraus_step(rho, setup, dj, p)
        # reference: Hamiltonian plus one channel of strength gamma/2
        half = ModelParams(gamma=p.gamma, omega=p.omega, dt=p.dt)
        c = setup.lindblad_op(p.gamma)
        cdc = c.conj().T @ c
        h = half.hamiltonian
        rhs = -1j * (h @ rho - rho @ h) + c @ rho @ c.conj().T - 0.5 * (
            cdc @ rho + rho @ cdc
        )
        ref = rho + p.dt * rhs
        assert np.abs(total - ref).max() < 1e-6 * p.dt / 1e-4


def test_kraus_trace_is_likelihood():
    p = ModelParams()
    rng = np.random.default_rng(3)
    rho = random_state(rng)
    tr = np.trace(kraus_step(rho, Setup.N, 1, p)).real
    c = Setup.N.lindblad_op(p.gamma)
    assert abs(tr - p.dt * np.trace(c @ rho @ c.conj().T).real) < 1e-15


def test_step_operators_outcome_matrix():
    p = ModelParams()
    ops = StepOperators(Setup.Y, p.gamma, p.omega, p.dt, with_h=True)
    m = ops.outcome_matrix(0.3)
    assert np.allclose(m, ops.no_jump + 0.3 * ops.noise)


def test_kraus_step_with_other_channel():
    # measurement map composed with the second channel's averaged map,
    # Hamiltonian applied exactly once
    from qusmooth.states import SIGMA_MINUS, SIGMA_PLUS

    p = ModelParams()
    rng = np.random.default_rng(9)
    rho = random_state(rng)
    out = kraus_step(rho, Setup.Y, 0.4, p, include_other_channel=True)
    m = StepOperators(Setup.Y, p.gamma, p.omega, p.dt, with_h=True).outcome_matrix(0.4)
    mid = m @ rho @ m.conj().T
    a = np.diag([1 - p.gamma * p.dt / 4, 1.0])
    expected = a @ mid @ a + (p.dt * p.gamma / 2) * (SIGMA_MINUS @ mid @ SIGMA_PLUS)
    assert np.abs(out - expected).max() < 1e-14
    # trace stays a likelihood: near one for a typical outcome
    assert 0.5 < np.trace(out).real < 1.5
