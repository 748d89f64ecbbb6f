"""Smoothed state estimation: Monte-Carlo hypothetical unobserved records
reweighted by the future observed record.

The estimate at each interior time is the mixture of candidate pure states
weighted by the joint likelihood of the past records and of the future
observed record given the candidate state,

    rho_S(t) = sum_U  p(O_past, U_past) Tr[E(t) |psi_U><psi_U|] |psi_U><psi_U|
               / normalization,

organized as a forward particle pass and one backward effect-operator pass:

- forward: each sample's hypothetical outcome is drawn from its exact
  conditional given the sample state and the imposed observed outcome; the
  observed outcome's log-likelihood (plus the exact proposal correction) is
  absorbed into the sample's past log-weight;
- backward: effect operators E(t) propagate the future observed record's
  likelihood with the unobserved channel marginalized out, which is the same
  map for all three setups, so one pass per record serves every assumed
  setup and every estimation time.

``brute_force_smooth`` enumerates all photon-counting records with plain
matrix products as an independent oracle for both passes.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import ConfigError, ModelParams, NumericalFailure, Setup, StepOperators
from .engine import (
    backward_batch,
    channel_coeffs,
    impose_outcome,
    sample_unobserved,
    smooth_batch,
)
from .unraveling import MeasurementRecord

MAX_ENUM_STEPS = 16


def backward_effect(record_o: MeasurementRecord, p: ModelParams, stride: int = 1):
    """Effect operators E(t) for one observed record.

    Returns (effects, log_scale): effects[j] are unit-trace PSD matrices such
    that Tr[effects[j] rho] * exp(log_scale[j]) is the exact likelihood of
    the future observed outcomes given state rho at grid point j.
    """
    record_o.check_grid(p)
    back = backward_batch(record_o.setup, record_o.outcomes[None, :], p, stride=stride)
    return back.effects[0], back.log_scale[0]


@dataclass
class SmoothingEnsemble:
    """Hypothetical unobserved records with per-time pure states and weights.

    ``log_past[k, j]`` accumulates the observed record's log-likelihood along
    sample k up to grid point j (plus the exact proposal correction for
    sampled records, or the full branch log-likelihood for exhaustive ones),
    so that exp(log_past + log Tr[E psi psi^dag]) is the correct unnormalized
    posterior weight in both modes.
    """

    setup_u: Setup
    stride: int
    records: np.ndarray      # (n, T)
    kets: np.ndarray         # (n, Td + 1, 2)
    log_past: np.ndarray     # (n, Td + 1)
    exhaustive: bool

    @property
    def n_samples(self) -> int:
        return self.records.shape[0]

    def log_weights(self, effects: np.ndarray) -> np.ndarray:
        """Total per-sample per-time log-weights for given effect operators."""
        e = self.kets[:, :, 0]
        g = self.kets[:, :, 1]
        f = (
            effects[None, :, 0, 0].real * (e.real**2 + e.imag**2)
            + effects[None, :, 1, 1].real * (g.real**2 + g.imag**2)
            + 2.0 * (effects[None, :, 0, 1] * np.conj(e) * g).real
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.log_past + np.log(f)

    def smoothed(self, effects: np.ndarray):
        """Weighted-mixture state series and per-time effective sample size."""
        lw = self.log_weights(effects)
        peak = lw.max(axis=0)
        if not np.isfinite(peak).all():
            raise NumericalFailure(
                "all hypothetical-record weights vanished; increase n_samples"
            )
        w = np.exp(lw - peak[None, :])
        s1 = w.sum(axis=0)
        wn = w / s1[None, :]
        e = self.kets[:, :, 0]
        g = self.kets[:, :, 1]
        m_ee = (wn * (e.real**2 + e.imag**2)).sum(axis=0)
        m_eg = (wn * e * np.conj(g)).sum(axis=0)
        nd = lw.shape[1]
        rho = np.empty((nd, 2, 2), dtype=complex)
        rho[:, 0, 0] = m_ee
        rho[:, 0, 1] = m_eg
        rho[:, 1, 0] = np.conj(m_eg)
        rho[:, 1, 1] = 1.0 - m_ee
        ess = s1**2 / (w * w).sum(axis=0)
        return rho, ess


def sample_hypothetical_records(
    record_o: MeasurementRecord,
    setup_u: Setup,
    n_samples: int,
    psi0,
    p: ModelParams,
    rng: np.random.Generator | None = None,
    stride: int = 1,
    exhaustive: bool = False,
) -> SmoothingEnsemble:
    """Draw (or enumerate) hypothetical unobserved records for one observed record.

    Sampled mode draws each outcome from its exact conditional given the
    sample's joint pure state and the imposed observed outcome.  Exhaustive
    mode (jump setups only, <= 16 steps) runs every record once and stores
    exact branch log-likelihoods instead, for oracle comparisons.
    """
    record_o.check_grid(p)
    T = p.n_steps
    if T % stride:
        raise ValueError(f"stride {stride} must divide the step count {T}")
    forced_all = None
    if exhaustive:
        if not setup_u.is_jump:
            raise ConfigError("exhaustive enumeration needs a finite outcome alphabet")
        if T > MAX_ENUM_STEPS:
            raise ConfigError(f"exhaustive enumeration limited to {MAX_ENUM_STEPS} steps")
        n_samples = 2**T
        bits = np.arange(n_samples)[:, None] >> np.arange(T)[None, :]
        forced_all = (bits & 1).astype(np.float64)
    elif n_samples < 1:
        raise ConfigError("n_samples must be at least 1")
    elif rng is None:
        raise ConfigError("sampled mode needs an rng")

    co_o = channel_coeffs(record_o.setup, p, with_h=True)
    co_u = channel_coeffs(setup_u, p, with_h=False)

    e = np.full(n_samples, complex(psi0[0]))
    g = np.full(n_samples, complex(psi0[1]))
    log_past = np.zeros(n_samples)

    nd = T // stride + 1
    kets = np.empty((n_samples, nd, 2), dtype=complex)
    log_past_dec = np.empty((n_samples, nd))
    records = np.empty((n_samples, T))
    kets[:, 0, 0] = e
    kets[:, 0, 1] = g
    log_past_dec[:, 0] = log_past

    for t in range(T):
        e, g, lik = impose_outcome(e, g, co_o, record_o.outcomes[t])
        dead = lik <= 0.0
        if dead.any():
            g = np.where(dead, 1.0, g)
            e = np.where(dead, 0.0, e)
            lik = np.where(dead, 1.0, lik)
            log_past = np.where(dead, -np.inf, log_past)
        log_past = log_past + np.log(lik)
        inv = 1.0 / np.sqrt(lik)
        e = e * inv
        g = g * inv
        if forced_all is not None:
            e, g, out, log_inc = sample_unobserved(
                e, g, co_u, None, forced=forced_all[:, t]
            )
        else:
            noise = rng.random(n_samples) if co_u.is_jump else rng.standard_normal(n_samples)
            e, g, out, log_inc = sample_unobserved(e, g, co_u, noise)
        log_past = log_past + log_inc
        records[:, t] = out
        if (t + 1) % stride == 0:
            j = (t + 1) // stride
            kets[:, j, 0] = e
            kets[:, j, 1] = g
            log_past_dec[:, j] = log_past

    return SmoothingEnsemble(
        setup_u=setup_u,
        stride=stride,
        records=records,
        kets=kets,
        log_past=log_past_dec,
        exhaustive=forced_all is not None,
    )


@dataclass
class SmoothResult:
    rho: np.ndarray   # (Td + 1, 2, 2)
    ess: np.ndarray   # (Td + 1,)


def smooth(
    record_o: MeasurementRecord,
    setup_u: Setup,
    n_samples: int,
    psi0,
    p: ModelParams,
    rng: np.random.Generator,
    stride: int = 1,
) -> SmoothResult:
    """Smoothed state series under assumed unobserved setup ``setup_u``."""
    record_o.check_grid(p)
    back = backward_batch(record_o.setup, record_o.outcomes[None, :], p, stride=stride)
    out = smooth_batch(
        record_o.setup,
        record_o.outcomes[None, :],
        setup_u,
        psi0,
        p,
        back,
        n_samples,
        rng,
        stride=stride,
    )
    return SmoothResult(rho=out.rho[0], ess=out.ess[0])


def smooth_exhaustive(
    record_o: MeasurementRecord,
    setup_u: Setup,
    psi0,
    p: ModelParams,
    stride: int = 1,
) -> SmoothResult:
    """Exact smoothed series by running every jump record once (oracle aid)."""
    ens = sample_hypothetical_records(
        record_o, setup_u, 0, psi0, p, stride=stride, exhaustive=True
    )
    effects, _ = backward_effect(record_o, p, stride=stride)
    rho, ess = ens.smoothed(effects)
    return SmoothResult(rho=rho, ess=ess)


# --- brute-force enumeration oracle -------------------------------------------


@dataclass
class BruteForceResult:
    """Exhaustive enumeration of jump unobserved records, plain matrix products.

    log_joint[k, j] is log p(observed record up to j, record k up to j);
    log_proposal[k, j] the log-probability that causal conditional sampling
    would produce record k's prefix.  rho_smooth marginalizes future
    unobserved outcomes simply by summing full-record joint weights.
    """

    records: np.ndarray        # (P, T)
    kets: np.ndarray           # (P, T + 1, 2) normalized prefix states
    log_joint: np.ndarray      # (P, T + 1)
    log_proposal: np.ndarray   # (P, T + 1)
    rho_smooth: np.ndarray     # (T + 1, 2, 2)
    rho_filter: np.ndarray     # (T + 1, 2, 2)

    def record_posterior(self) -> np.ndarray:
        """Normalized posterior of full records given the whole observed record."""
        w = np.exp(self.log_joint[:, -1] - self.log_joint[:, -1].max())
        return w / w.sum()

    def proposal_probs(self) -> np.ndarray:
        return np.exp(self.log_proposal[:, -1])


def brute_force_smooth(
    record_o: MeasurementRecord,
    p: ModelParams,
    psi0,
) -> BruteForceResult:
    """Independent enumeration oracle for the smoothed state (jump records only).

    Evolves every one of the 2^T candidate unobserved jump records with
    explicit 2x2 Kraus matrices, computes exact joint likelihoods, and forms
    the exact smoothed and filtered mixtures.  No sampling, no effect
    operators, no shared fast-path code.
    """
    record_o.check_grid(p)
    T = p.n_steps
    if T > MAX_ENUM_STEPS:
        raise ConfigError(f"brute force limited to {MAX_ENUM_STEPS} steps, got {T}")

    obs = StepOperators(record_o.setup, p.gamma, p.omega, p.dt, with_h=True)
    un = StepOperators(Setup.N, p.gamma, p.omega, p.dt, with_h=False)
    mu = (un.no_jump, un.jump)

    n_paths = 2**T
    bits = (np.arange(n_paths)[:, None] >> np.arange(T)[None, :]) & 1
    records = bits.astype(np.float64)

    psi = np.tile(np.asarray(psi0, dtype=complex), (n_paths, 1))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)

    kets = np.empty((n_paths, T + 1, 2), dtype=complex)
    log_joint = np.empty((n_paths, T + 1))
    log_proposal = np.empty((n_paths, T + 1))
    kets[:, 0] = psi
    log_joint[:, 0] = 0.0
    log_proposal[:, 0] = 0.0

    lj = np.zeros(n_paths)
    lq = np.zeros(n_paths)
    for t in range(T):
        m_obs = obs.outcome_matrix(record_o.outcomes[t])
        psi = psi @ m_obs.T
        n_obs = np.abs(psi[:, 0]) ** 2 + np.abs(psi[:, 1]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            lj = lj + np.log(n_obs)
        alive = n_obs > 0
        psi[alive] /= np.sqrt(n_obs[alive])[:, None]
        psi[~alive] = (0.0, 1.0)

        # both unobserved branch likelihoods, for joint and proposal bookkeeping
        psi_click = psi @ mu[1].T
        psi_stay = psi @ mu[0].T
        n_click = np.abs(psi_click[:, 0]) ** 2 + np.abs(psi_click[:, 1]) ** 2
        n_stay = np.abs(psi_stay[:, 0]) ** 2 + np.abs(psi_stay[:, 1]) ** 2
        clicked = bits[:, t] == 1
        n_branch = np.where(clicked, n_click, n_stay)
        with np.errstate(divide="ignore", invalid="ignore"):
            lj = lj + np.log(n_branch)
            lq = lq + np.log(n_branch / (n_click + n_stay))
        psi = np.where(clicked[:, None], psi_click, psi_stay)
        alive = n_branch > 0
        psi[alive] /= np.sqrt(n_branch[alive])[:, None]
        psi[~alive] = (0.0, 1.0)

        kets[:, t + 1] = psi
        log_joint[:, t + 1] = lj
        log_proposal[:, t + 1] = lq

    # smoothed mixture: full-record joint weights; filtered: prefix weights
    if not np.isfinite(log_joint[:, -1]).any():
        raise NumericalFailure(
            "observed record impossible under every unobserved record"
        )
    w_full = np.exp(log_joint[:, -1] - log_joint[:, -1].max())
    projectors = np.einsum("pti,ptj->ptij", kets, kets.conj())
    rho_smooth = np.einsum("p,ptij->tij", w_full, projectors) / w_full.sum()
    rho_filter = np.empty_like(rho_smooth)
    for t in range(T + 1):
        w_pre = np.exp(log_joint[:, t] - log_joint[:, t].max())
        rho_filter[t] = np.einsum("p,pij->ij", w_pre, projectors[:, t]) / w_pre.sum()

    return BruteForceResult(
        records=records,
        kets=kets,
        log_joint=log_joint,
        log_proposal=log_proposal,
        rho_smooth=rho_smooth,
        rho_filter=rho_filter,
    )


def enumerate_future_likelihood(
    psi,
    record_o: MeasurementRecord,
    t_from: int,
    p: ModelParams,
) -> float:
    """Exact likelihood of the observed record from step t_from onward, given a
    normalized state, summing over every future unobserved jump record.

    Independent check of the backward effect operators: by construction the
    marginalized unobserved channel is setup-independent, so enumerating jump
    branches suffices.
    """
    T = p.n_steps
    if T - t_from > MAX_ENUM_STEPS:
        raise ConfigError("future enumeration too deep")
    obs = StepOperators(record_o.setup, p.gamma, p.omega, p.dt, with_h=True)
    un = StepOperators(Setup.N, p.gamma, p.omega, p.dt, with_h=False)
    states = np.asarray(psi, dtype=complex)[None, :]
    for t in range(t_from, T):
        m_obs = obs.outcome_matrix(record_o.outcomes[t])
        states = states @ m_obs.T
        states = np.concatenate([states @ un.no_jump.T, states @ un.jump.T])
    return float((np.abs(states) ** 2).sum())
