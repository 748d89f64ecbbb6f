"""Normalized two-time record correlators in the steady-state window, and the
zero/nonzero classification of detector pairs.

The normalized correlator is the lag covariance of the two channels' records
per unit time squared, divided by the per-record normalizers
N = sqrt(<dJ^2>_ss / dt), which makes values step-size independent away from
equal time.  Estimating it from raw per-step products is hopeless (the shot
noise enters as 1/dt), so the estimator coarse-grains both records into bins
of the lag-grid spacing first: the binned covariance divided by (bin width)^2
estimates the bin average of the same quantity, with noise reduced by the
bin width.  The two channels carry independent detection noise, so no
equal-time shot spike survives binning.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ConfigError, ModelParams, Setup
from .engine import make_rng, simulate_joint_batch
from .unraveling import ROLE_TRUE

# a pair counts as correlated when this z-score holds on a contiguous lag band
NONZERO_Z = 5.0
NONZERO_BAND = 3

DEFAULT_TAU_MAX = 2.0
DEFAULT_N_TAU = 41


@dataclass
class CorrelatorSeries:
    pair: tuple[Setup, Setup]
    tau: np.ndarray            # signed bin-center lags, units of 1/gamma
    values: np.ndarray
    stderr: np.ndarray
    n_trajectories: int
    meta: dict = field(default_factory=dict)


def _binned(records: np.ndarray, i0: int, n_bins: int, width: int) -> np.ndarray:
    """Sum per-step records into consecutive bins starting at step i0."""
    seg = records[:, i0 : i0 + n_bins * width]
    return seg.reshape(records.shape[0], n_bins, width).sum(axis=2)


def _lag_layout(p: ModelParams, ss_window, tau_max: float, n_tau: int):
    if n_tau < 3 or n_tau % 2 == 0:
        raise ConfigError("n_tau must be odd and at least 3")
    width = int(round(2.0 * tau_max / (n_tau - 1) / p.dt))
    if width < 1:
        raise ConfigError("lag grid finer than the time step")
    max_lag = (n_tau - 1) // 2
    t_lo, t_hi = ss_window
    i_lo = int(round((t_lo - p.t_i) / p.dt))
    i_hi = int(round((t_hi - p.t_i) / p.dt))
    n_base = (i_hi - i_lo) // width
    if n_base < 1:
        raise ConfigError("steady-state window shorter than one lag bin")
    if i_lo - max_lag * width < 0 or i_lo + (n_base + max_lag) * width > p.n_steps:
        raise ConfigError("steady-state window plus max lag exceeds the horizon")
    return width, max_lag, i_lo, n_base


def correlator_from_records(
    records_o: np.ndarray,
    records_u: np.ndarray,
    pair: tuple[Setup, Setup],
    p: ModelParams,
    ss_window,
    tau_max: float = DEFAULT_TAU_MAX,
    n_tau: int = DEFAULT_N_TAU,
) -> CorrelatorSeries:
    """Correlator estimate from an existing joint record ensemble."""
    width, max_lag, i_lo, n_base = _lag_layout(p, ss_window, tau_max, n_tau)
    R = records_o.shape[0]
    # bins covering the window plus max_lag on both sides
    i0 = i_lo - max_lag * width
    n_all = n_base + 2 * max_lag
    bo = _binned(records_o, i0, n_all, width)
    bu = _binned(records_u, i0, n_all, width)

    w = slice(max_lag, max_lag + n_base)
    norm_o = np.sqrt((records_o[:, i_lo : i_lo + n_base * width] ** 2).mean() / p.dt)
    norm_u = np.sqrt((records_u[:, i_lo : i_lo + n_base * width] ** 2).mean() / p.dt)
    mean_o = bo[:, w].mean()
    mean_u = bu[:, w].mean()

    scale = 1.0 / (norm_o * norm_u * (width * p.dt) ** 2)
    lags = np.arange(-max_lag, max_lag + 1)
    per_traj = np.empty((R, len(lags)))
    for k, lag in enumerate(lags):
        prod = (bo[:, w.start + lag : w.stop + lag] * bu[:, w]).mean(axis=1)
        per_traj[:, k] = (prod - mean_o * mean_u) * scale

    values = per_traj.mean(axis=0)
    stderr = per_traj.std(axis=0, ddof=1) / np.sqrt(R)
    return CorrelatorSeries(
        pair=pair,
        tau=lags * width * p.dt,
        values=values,
        stderr=stderr,
        n_trajectories=R,
        meta={
            "norm_o": float(norm_o),
            "norm_u": float(norm_u),
            "bin_width_steps": width,
            "nonzero_z": NONZERO_Z,
            "nonzero_band": NONZERO_BAND,
        },
    )


def two_time_correlator(
    setup_o: Setup,
    setup_u: Setup,
    p: ModelParams,
    ss_window,
    n_trajectories: int,
    master_seed: int,
    tau_max: float = DEFAULT_TAU_MAX,
    n_tau: int = DEFAULT_N_TAU,
    psi0=(0.0, 1.0),
    pair_index: int = 0,
) -> CorrelatorSeries:
    """Simulate a joint two-channel ensemble and estimate its correlator."""
    rngs = [
        make_rng(master_seed, 1000 + pair_index, r, ROLE_TRUE)
        for r in range(n_trajectories)
    ]
    batch = simulate_joint_batch(setup_o, setup_u, psi0, p, rngs, stride=p.n_steps)
    return correlator_from_records(
        batch.records_o, batch.records_v, (setup_o, setup_u), p, ss_window,
        tau_max=tau_max, n_tau=n_tau,
    )


def _flipped(series: CorrelatorSeries) -> CorrelatorSeries:
    """Same data viewed as the swapped ordered pair (stationarity: tau -> -tau)."""
    return CorrelatorSeries(
        pair=(series.pair[1], series.pair[0]),
        tau=series.tau.copy(),
        values=series.values[::-1].copy(),
        stderr=series.stderr[::-1].copy(),
        n_trajectories=series.n_trajectories,
        meta=dict(series.meta),
    )


def correlator_suite(
    p: ModelParams,
    ss_window,
    n_trajectories: int,
    master_seed: int,
    tau_max: float = DEFAULT_TAU_MAX,
    n_tau: int = DEFAULT_N_TAU,
    psi0=(0.0, 1.0),
) -> dict:
    """All nine ordered setup pairs; unordered pairs share one simulation."""
    order = (Setup.X, Setup.Y, Setup.N)
    out = {}
    idx = 0
    for i, so in enumerate(order):
        for su in order[i:]:
            series = two_time_correlator(
                so, su, p, ss_window, n_trajectories, master_seed,
                tau_max=tau_max, n_tau=n_tau, psi0=psi0, pair_index=idx,
            )
            out[f"d{so.value}d{su.value}"] = series
            if su is not so:
                flipped = _flipped(series)
                out[f"d{su.value}d{so.value}"] = flipped
            idx += 1
    return out


def classify_pair(series: CorrelatorSeries) -> str:
    """'nonzero' when |value|/stderr >= 5 on >= 3 contiguous lags, else 'zero'.

    Lags with degenerate (zero) error estimates carry no evidence, e.g. when
    no click pair ever landed in aligned bins, and are never counted.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(series.stderr > 0, np.abs(series.values) / series.stderr, 0.0)
    run = 0
    for hit in z >= NONZERO_Z:
        run = run + 1 if hit else 0
        if run >= NONZERO_BAND:
            return "nonzero"
    return "zero"


def classification_matrix(series_by_pair: dict) -> dict:
    """Map 'dOdU' pair names to their zero/nonzero classification."""
    return {name: classify_pair(series) for name, series in series_by_pair.items()}


def expected_classification() -> dict:
    """Correlated pairs in this model: same-setup pairs and the counting /
    y-homodyne cross pair; x-homodyne records correlate with nothing else
    (their backaction lives on the Bloch x axis, decoupled from the driven
    y-z plane)."""
    out = {}
    for so in (Setup.X, Setup.Y, Setup.N):
        for su in (Setup.X, Setup.Y, Setup.N):
            if so is su or {so, su} == {Setup.Y, Setup.N}:
                out[f"d{so.value}d{su.value}"] = "nonzero"
            else:
                out[f"d{so.value}d{su.value}"] = "zero"
    return out
