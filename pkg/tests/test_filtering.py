import numpy as np
import pytest

from qusmooth.dynamics import ModelParams, Setup, lindblad_step
from qusmooth.engine import filter_batch
from qusmooth.filtering import InconsistentRecordError, filter_states
from qusmooth.states import ket_to_state
from qusmooth.unraveling import MeasurementRecord, generate_ensemble, generate_true_trajectory

PSI_G = np.array([0.0, 1.0], dtype=complex)
RHO_G = ket_to_state(PSI_G)


def test_dark_state_constant():
    p = ModelParams(omega=0.0, t_f=0.5)
    rec = MeasurementRecord(Setup.N, p.dt, np.zeros(p.n_steps))
    out = filter_states(rec, RHO_G, p)
    assert np.abs(out - RHO_G).max() < 1e-12


def test_replay_is_deterministic():
    p = ModelParams(t_f=1.0)
    traj = generate_true_trajectory(Setup.Y, Setup.N, PSI_G, p, seed=5)
    a = filter_states(traj.record_o, RHO_G, p)
    b = filter_states(traj.record_o, RHO_G, p)
    assert np.array_equal(a, b)


def test_click_on_dark_state_raises():
    p = ModelParams(omega=0.0, t_f=0.1)
    outcomes = np.zeros(p.n_steps)
    outcomes[3] = 1.0
    rec = MeasurementRecord(Setup.N, p.dt, outcomes)
    with pytest.raises(InconsistentRecordError):
        filter_states(rec, RHO_G, p)


def test_purity_bounded_and_mixing():
    p = ModelParams(t_f=2.0)
    traj = generate_true_trajectory(Setup.Y, Setup.Y, PSI_G, p, seed=6)
    out = filter_states(traj.record_o, RHO_G, p)
    purities = np.einsum("tij,tji->t", out, out).real
    assert purities.max() <= 1 + 1e-12
    # the untracked channel mixes the state after finite time
    assert purities[-1] < 1 - 1e-3


@pytest.mark.parametrize("setup", [Setup.N, Setup.Y])
def test_in_plane_x_component_vanishes(setup):
    # y-z plane initial states stay in plane under N and Y observation
    p = ModelParams(t_f=1.0)
    traj = generate_true_trajectory(setup, Setup.X, PSI_G, p, seed=7)
    out = filter_states(traj.record_o, RHO_G, p)
    x = 2.0 * out[:, 0, 1].real
    assert np.abs(x).max() <= 1e-10


def test_x_observation_leaves_plane():
    p = ModelParams(t_f=1.0)
    traj = generate_true_trajectory(Setup.X, Setup.X, PSI_G, p, seed=8)
    out = filter_states(traj.record_o, RHO_G, p)
    x = 2.0 * out[:, 0, 1].real
    assert np.abs(x).max() > 1e-3


def test_ensemble_average_returns_averaged_dynamics():
    p = ModelParams(t_f=1.0)
    batch = generate_ensemble(Setup.N, Setup.Y, PSI_G, p, 31, 3, 300, stride=100)
    filt = filter_batch(Setup.N, batch.records_o, RHO_G, p, stride=100)
    mean_f = filt.mean(axis=0)
    rho = RHO_G
    reference = [rho]
    for _ in range(p.n_steps):
        rho = lindblad_step(rho, p)
        reference.append(rho)
    reference = np.asarray(reference)[::100]
    spread = filt.std(axis=0).max() / np.sqrt(batch.records_o.shape[0])
    assert np.abs(mean_f - reference).max() < 4 * spread + 2e-3


def test_filtered_state_independent_of_valid_setup():
    # the same observed record filters identically whatever channel pairing
    # generated it; filtering never references the unobserved setup
    p = ModelParams(t_f=0.5)
    traj = generate_true_trajectory(Setup.Y, Setup.N, PSI_G, p, seed=9)
    a = filter_states(traj.record_o, RHO_G, p)
    rec_copy = MeasurementRecord(Setup.Y, p.dt, traj.record_o.outcomes.copy())
    b = filter_states(rec_copy, RHO_G, p)
    assert np.array_equal(a, b)
