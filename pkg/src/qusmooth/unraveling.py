"""Joint stochastic generation of observed and unobserved records with the
corresponding pure conditioned-on-everything trajectories."""

from dataclasses import dataclass

import numpy as np

from .dynamics import ConfigError, ModelParams, NumericalFailure, Setup
from .engine import JointBatch, make_rng, simulate_joint_batch

PURITY_FLOOR = 1.0 - 1e-6

# role codes for counter-based stream derivation
ROLE_TRUE = 0
ROLE_HYP = 1


@dataclass
class MeasurementRecord:
    """Per-step outcomes of one channel: {0,1} clicks for N, real dJ for X/Y."""

    setup: Setup
    dt: float
    outcomes: np.ndarray

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=np.float64)
        if self.setup.is_jump and not np.isin(self.outcomes, (0.0, 1.0)).all():
            raise ConfigError("jump record outcomes must all be 0 or 1")

    def __len__(self) -> int:
        return len(self.outcomes)

    def check_grid(self, p: ModelParams):
        if len(self) != p.n_steps:
            raise ConfigError(
                f"record has {len(self)} steps, params imply {p.n_steps}"
            )
        if abs(self.dt - p.dt) > 1e-15:
            raise ConfigError("record dt does not match params")


@dataclass
class TrueTrajectory:
    """Pure states conditioned on both records, on a (possibly decimated) grid."""

    kets: np.ndarray            # (Td + 1, 2) complex
    record_o: MeasurementRecord
    record_v: MeasurementRecord
    seed: int
    stride: int = 1

    @property
    def states(self) -> np.ndarray:
        """Density matrices (Td + 1, 2, 2)."""
        return np.einsum("ti,tj->tij", self.kets, self.kets.conj())

    @property
    def bloch(self) -> np.ndarray:
        """Bloch components (Td + 1, 3)."""
        e = self.kets[:, 0]
        g = self.kets[:, 1]
        cross = e * g.conj()
        return np.stack(
            [2.0 * cross.real, -2.0 * cross.imag, np.abs(e) ** 2 - np.abs(g) ** 2],
            axis=1,
        )

    def check_purity(self) -> float:
        """Minimum purity of the stored projectors; kets are renormalized each
        step, so any loss shows up as norm drift."""
        norms2 = np.abs(self.kets[:, 0]) ** 2 + np.abs(self.kets[:, 1]) ** 2
        purity = norms2**2
        if purity.min() < PURITY_FLOOR:
            raise NumericalFailure(
                f"true-state purity dropped to {purity.min():.9f}"
            )
        return float(purity.min())


def generate_true_trajectory(
    setup_o: Setup,
    setup_v: Setup,
    psi0,
    p: ModelParams,
    seed: int,
    stride: int = 1,
) -> TrueTrajectory:
    """One joint (observed, valid-unobserved) record pair and its pure states."""
    batch = simulate_joint_batch(
        setup_o, setup_v, psi0, p, [make_rng(seed, ROLE_TRUE)], stride=stride
    )
    traj = TrueTrajectory(
        kets=batch.kets[0],
        record_o=MeasurementRecord(setup_o, p.dt, batch.records_o[0]),
        record_v=MeasurementRecord(setup_v, p.dt, batch.records_v[0]),
        seed=seed,
        stride=stride,
    )
    traj.check_purity()
    return traj


def generate_ensemble(
    setup_o: Setup,
    setup_v: Setup,
    psi0,
    p: ModelParams,
    master_seed: int,
    group_index: int,
    n_trajectories: int,
    stride: int = 1,
) -> JointBatch:
    """Batch of joint trajectories with per-trajectory counter-based streams."""
    rngs = [
        make_rng(master_seed, group_index, r, ROLE_TRUE)
        for r in range(n_trajectories)
    ]
    return simulate_joint_batch(setup_o, setup_v, psi0, p, rngs, stride=stride)


def dump_rows(traj: TrueTrajectory, p: ModelParams):
    """Rows (step, t, outcome_O, outcome_V, x_T, y_T, z_T) for the raw dump.

    With a decimated trajectory the Bloch columns are only available on the
    decimated grid; the dump is therefore defined for stride 1.
    """
    if traj.stride != 1:
        raise ConfigError("raw record dumps require an undecimated trajectory")
    bloch = traj.bloch
    times = p.times
    rows = []
    for t in range(len(traj.record_o)):
        rows.append(
            (
                t,
                times[t],
                traj.record_o.outcomes[t],
                traj.record_v.outcomes[t],
                bloch[t, 0],
                bloch[t, 1],
                bloch[t, 2],
            )
        )
    return rows
