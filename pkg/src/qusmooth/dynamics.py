"""Model definition and per-step dynamics for the driven, damped qubit.

The system is a qubit driven around the x axis at rate omega and coupled to
two decay channels of strength gamma/2 each.  Detection on a channel is one
of three setups: photon counting (N), x homodyne (X), or y homodyne (Y).
Time is measured in units of the total decay time 1/gamma.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .states import IDENTITY, SIGMA_MINUS, SIGMA_X, repair_psd, validate_state

MAX_GAMMA_DT = 0.02  # keeps the per-step jump probability gamma*dt/2 <= 0.01


class ConfigError(ValueError):
    """Invalid model or run parameters."""


class NumericalFailure(RuntimeError):
    """The integration left its validity domain (positivity, purity, likelihood)."""


class Setup(Enum):
    """Detector type for one output channel."""

    N = "N"  # photon counting, jump record
    X = "X"  # x homodyne, diffusive record
    Y = "Y"  # y homodyne, diffusive record

    @property
    def phase(self) -> float:
        """Local-oscillator phase; meaningful for the homodyne setups."""
        return 0.0 if self is not Setup.Y else np.pi / 2

    @property
    def is_jump(self) -> bool:
        return self is Setup.N

    def lindblad_op(self, gamma: float) -> np.ndarray:
        """Channel operator sqrt(gamma/2) sigma_minus exp(-i Phi)."""
        c = np.sqrt(gamma / 2.0) * SIGMA_MINUS
        if self is Setup.Y:
            c = c * np.exp(-1.0j * self.phase)
        return c


SETUPS = (Setup.N, Setup.X, Setup.Y)


@dataclass(frozen=True)
class ModelParams:
    """Rates and time grid; gamma in 1/T_gamma, omega in units of gamma."""

    gamma: float = 1.0
    omega: float = 5.0
    dt: float = 1e-3
    t_i: float = 0.0
    t_f: float = 8.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.gamma * self.dt / 2.0 > 0.01 + 1e-15:
            raise ConfigError(
                f"gamma*dt/2 = {self.gamma * self.dt / 2.0:.4g} exceeds 0.01; "
                "reduce dt so the per-step jump probability stays small"
            )
        if self.t_f <= self.t_i:
            raise ConfigError("t_f must exceed t_i")

    @property
    def n_steps(self) -> int:
        return int(round((self.t_f - self.t_i) / self.dt))

    @property
    def times(self) -> np.ndarray:
        """State-grid times t_i .. t_f, length n_steps + 1."""
        return self.t_i + self.dt * np.arange(self.n_steps + 1)

    @property
    def hamiltonian(self) -> np.ndarray:
        return 0.5 * self.omega * SIGMA_X


def liouvillian_matrix(p: ModelParams) -> np.ndarray:
    """4x4 generator of the averaged dynamics acting on row-major vec(rho)."""
    H = p.hamiltonian
    L = -1.0j * (np.kron(H, IDENTITY) - np.kron(IDENTITY, H.T))
    # both channels together give a total decay dissipator of rate gamma
    c = np.sqrt(p.gamma) * SIGMA_MINUS
    cdc = c.conj().T @ c
    L += np.kron(c, c.conj())
    L -= 0.5 * (np.kron(cdc, IDENTITY) + np.kron(IDENTITY, cdc.T))
    return L


def lindblad_rhs(rho: np.ndarray, p: ModelParams) -> np.ndarray:
    """Right-hand side of the averaged master equation.

    The two channels have the same dissipator regardless of setup (the
    homodyne phase cancels in D[c]), so together they decay at rate gamma.
    """
    H = p.hamiltonian
    out = -1.0j * (H @ rho - rho @ H)
    c = np.sqrt(p.gamma) * SIGMA_MINUS
    cdc = c.conj().T @ c
    out += c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc)
    return out


def lindblad_step(rho: np.ndarray, p: ModelParams) -> np.ndarray:
    """First-order Euler update of the averaged dynamics, trace-renormalized.

    Near-pure states pick up a transient negative eigenvalue of the order of
    the local truncation error, so the positivity repair window scales with
    (rate * dt)^2 here; the measurement (Kraus) paths are completely positive
    by construction and keep the strict round-off-sized window.
    """
    out = rho + p.dt * lindblad_rhs(rho, p)
    out = out / np.trace(out).real
    local_error = 10.0 * ((p.omega * p.dt / 2) ** 2 + (p.gamma * p.dt / 2) ** 2)
    return repair_psd(out, abort_below=-max(1e-9, local_error))


def steady_state(p: ModelParams) -> np.ndarray:
    """Fixed point of the averaged dynamics from the 4x4 generator's null space."""
    L = liouvillian_matrix(p)
    _, s, vh = np.linalg.svd(L)
    null_dim = int(np.sum(s < 1e-10 * s[0]))
    if null_dim != 1:
        raise NumericalFailure(f"steady state not unique: null space dim {null_dim}")
    rho = vh[-1].conj().reshape(2, 2)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = np.abs(L @ rho.reshape(4)).max()
    if residual > 1e-10:
        raise NumericalFailure(f"steady-state residual {residual:.3g}")
    return validate_state(rho)


def superop_G(c: np.ndarray, rho: np.ndarray, tol: float = 1e-300) -> np.ndarray:
    """Normalized jump superoperator c rho c^dag / Tr[...] - rho (traceless)."""
    crc = c @ rho @ c.conj().T
    norm = np.trace(crc).real
    if norm <= tol:
        raise NumericalFailure("jump on a dark state: Tr[c rho c^dag] = 0")
    return crc / norm - rho


def superop_H(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Measurement backaction superoperator c rho + rho c^dag - Tr[...] rho."""
    out = c @ rho + rho @ c.conj().T
    return out - np.trace(out).real * rho


@dataclass(frozen=True)
class StepOperators:
    """Per-step 2x2 operator constants for one channel under one setup.

    ``no_jump`` is the deterministic Kraus part; for a jump setup the click
    operator is ``jump`` (already scaled by sqrt(dt)), for homodyne setups the
    outcome-dJ Kraus operator is ``no_jump + dJ * noise``.  ``with_h`` selects
    whether the Hamiltonian rides along with this channel's step.
    """

    setup: Setup
    gamma: float
    omega: float
    dt: float
    with_h: bool

    @property
    def c_op(self) -> np.ndarray:
        return self.setup.lindblad_op(self.gamma)

    @property
    def no_jump(self) -> np.ndarray:
        c = self.c_op
        m = IDENTITY - 0.5 * self.dt * (c.conj().T @ c)
        if self.with_h:
            m = m - 1.0j * self.dt * 0.5 * self.omega * SIGMA_X
        return m

    @property
    def jump(self) -> np.ndarray:
        return np.sqrt(self.dt) * self.c_op

    @property
    def noise(self) -> np.ndarray:
        return self.c_op

    def outcome_matrix(self, outcome: float) -> np.ndarray:
        """Kraus operator selected by one recorded outcome."""
        if self.setup.is_jump:
            if outcome not in (0, 1, 0.0, 1.0):
                raise ConfigError(f"jump outcome must be 0 or 1, got {outcome!r}")
            return self.jump if outcome else self.no_jump
        return self.no_jump + float(outcome) * self.noise


def averaged_channel_map(rho: np.ndarray, ops: StepOperators) -> np.ndarray:
    """One-step channel map with the outcome marginalized out.

    Identical for all three setups at fixed dt: A rho A + dt c rho c^dag with
    A = 1 - c^dag c dt / 2, which reproduces the dissipator to O(dt^2).
    """
    c = ops.c_op
    a = IDENTITY - 0.5 * ops.dt * (c.conj().T @ c)
    return a @ rho @ a.conj().T + ops.dt * (c @ rho @ c.conj().T)


def kraus_step(
    rho: np.ndarray,
    setup: Setup,
    outcome: float,
    p: ModelParams,
    include_hamiltonian: bool = True,
    include_other_channel: bool = False,
) -> np.ndarray:
    """Unnormalized post-measurement state M rho M^dag for one channel step.

    The trace of the result is the outcome likelihood (w.r.t. the counting
    measure for N and a Normal(0, dt) base measure for the homodyne setups).
    With ``include_other_channel`` the second channel's averaged map is
    composed after the measurement, the Hamiltonian still acting only once.
    """
    ops = StepOperators(setup, p.gamma, p.omega, p.dt, with_h=include_hamiltonian)
    m = ops.outcome_matrix(outcome)
    out = m @ rho @ m.conj().T
    if include_other_channel:
        other = StepOperators(setup, p.gamma, p.omega, p.dt, with_h=False)
        out = averaged_channel_map(out, other)
    return out
