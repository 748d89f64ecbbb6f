"""End-to-end sweep: joint record ensembles, filtering, backward effects,
hypothetical-record smoothing for every assumed setup, per-record scalars,
correlators, reports and file outputs.

Output files (all numeric columns at 17 significant digits):

- powers_<combo>.csv:   t, R_S, R_S_err, R_F, R_F_err, R_P, R_P_err, alpha, ess_mean
- window_scalars.csv:   combo, record, win_s_f, win_s_s, win_s_sv, win_f_f,
                        win_f_s, win_f_sv, win_p_f, win_p_s, dd_vv, dd_ww, dd_vw
- correlators.csv:      pair, tau, value, stderr
- examples_<combo>.csv: t, x_T, y_T, z_T, x_F, y_F, z_F, x_SV, y_SV, z_SV,
                        x_SW, y_SW, z_SW, ntrsd_F, ntrsd_SV, ntrsd_SW,
                        fid_F, fid_SV, fid_SW
- trajectories/<combo>/traj_<i>.csv: step, t, outcome_O, outcome_V, x_T, y_T, z_T
- report.json, manifest.json
"""

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ComboWindowScalars,
    GroupData,
    conjecture_report,
    smoothing_powers,
    valid_equality_series,
    window_scalars,
)
from .config import ExperimentConfig, parse_combo
from .correlation import CorrelatorSeries, classification_matrix, correlator_suite
from .dynamics import ConfigError, Setup
from .engine import (
    backward_batch,
    filter_batch,
    make_noise_rng,
    make_rng,
    simulate_joint_batch,
    smooth_batch,
)
from .states import ket_to_state
from .unraveling import ROLE_HYP, ROLE_TRUE, dump_rows

GROUP_ORDER = [(so, sv) for so in (Setup.X, Setup.Y, Setup.N) for sv in (Setup.X, Setup.Y, Setup.N)]


def _fmt(x) -> str:
    return f"{x:.17g}"


def scalars_vs_true(rho: np.ndarray, te: np.ndarray, tg: np.ndarray):
    """TrSD, fidelity (both vs the pure true states) and purity, per record/time.

    TrSD is computed directly from the matrix difference, not via the
    purity-fidelity identity, so the identity stays testable downstream.
    """
    r00 = rho[..., 0, 0].real
    r01 = rho[..., 0, 1]
    r11 = rho[..., 1, 1].real
    t00 = np.abs(te) ** 2
    t01 = te * np.conj(tg)
    t11 = np.abs(tg) ** 2
    purity = r00**2 + r11**2 + 2.0 * np.abs(r01) ** 2
    fid = r00 * t00 + r11 * t11 + 2.0 * (r01 * np.conj(t01)).real
    d00 = r00 - t00
    d11 = r11 - t11
    d01 = r01 - t01
    trsd = d00**2 + d11**2 + 2.0 * np.abs(d01) ** 2
    return trsd, fid, purity


@dataclass
class GroupResult:
    group: GroupData
    example_bloch: dict     # series keyed by "T", "F", and each assumed setup
    example_metrics: dict   # "ntrsd_F", "fid_F", and per assumed setup


def _bloch_of(rho: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            2.0 * rho[..., 0, 1].real,
            -2.0 * rho[..., 0, 1].imag,
            rho[..., 0, 0].real - rho[..., 1, 1].real,
        ],
        axis=-1,
    )


def run_group(setup_o: Setup, setup_v: Setup, dus, cfg: ExperimentConfig) -> GroupResult:
    """Ensemble, filter, backward pass and one smoothing sweep per assumed setup."""
    p = cfg.model_params()
    stride = cfg.output_stride
    group_idx = GROUP_ORDER.index((setup_o, setup_v))
    psi0 = cfg.psi0()
    n_rec = cfg.n_true_trajectories

    rngs = [make_rng(cfg.master_seed, group_idx, r, ROLE_TRUE) for r in range(n_rec)]
    batch = simulate_joint_batch(setup_o, setup_v, psi0, p, rngs, stride=stride)
    te = batch.kets[:, :, 0]
    tg = batch.kets[:, :, 1]

    rho_f = filter_batch(setup_o, batch.records_o, ket_to_state(psi0), p, stride=stride)
    s_f, f_f, p_f = scalars_vs_true(rho_f, te, tg)
    back = backward_batch(setup_o, batch.records_o, p, stride=stride)

    n_ex = min(cfg.n_examples, n_rec)
    t_grid = p.times[::stride]
    mask = (t_grid >= cfg.ss_window[0] - 1e-12) & (t_grid <= cfg.ss_window[1] + 1e-12)

    def x_stats(rho):
        x = 2.0 * rho[..., 0, 1].real
        win = x[:, mask].mean(axis=1)
        return {
            "abs_max": float(np.abs(x).max()),
            "win_mean": float(win.mean()),
            "win_se": float(win.std(ddof=1) / np.sqrt(len(win))),
        }

    norms2 = np.abs(te) ** 2 + np.abs(tg) ** 2
    group = GroupData(
        setup_o=setup_o,
        setup_v=setup_v,
        t_grid=t_grid,
        s_f=s_f,
        f_f=f_f,
        p_f=p_f,
        s_s={},
        f_s={},
        p_s={},
        p_cross={},
        d00={},
        d01={},
        d00h={},
        d01h={},
        ess={},
        x_abs_max={
            "filter": x_stats(rho_f),
            "true_purity_min": float((norms2**2).min()),
        },
    )
    example_bloch = {
        "T": _bloch_of(np.einsum("rti,rtj->rtij", batch.kets, batch.kets.conj()))[:n_ex],
        "F": _bloch_of(rho_f)[:n_ex],
    }
    example_metrics = {
        "ntrsd_F": -s_f[:n_ex],
        "fid_F": f_f[:n_ex],
    }

    for du in dus:
        sweep_rng = make_noise_rng(cfg.master_seed, group_idx, du_index(du), ROLE_HYP)
        sm = smooth_batch(
            setup_o,
            batch.records_o,
            du,
            psi0,
            p,
            back,
            cfg.n_hypothetical,
            sweep_rng,
            stride=stride,
            single_precision=cfg.single_precision,
        )
        s_s, f_s, p_s = scalars_vs_true(sm.rho, te, tg)
        group.s_s[du] = s_s
        group.f_s[du] = f_s
        group.p_s[du] = p_s
        group.d00[du] = (sm.rho[..., 0, 0] - rho_f[..., 0, 0]).real
        group.d01[du] = sm.rho[..., 0, 1] - rho_f[..., 0, 1]
        group.d00h[du] = (sm.rho_half[..., 0, 0] - rho_f[None, ..., 0, 0]).real
        group.d01h[du] = sm.rho_half[..., 0, 1] - rho_f[None, ..., 0, 1]
        ra, rb = sm.rho_half
        group.p_cross[du] = (
            ra[..., 0, 0].real * rb[..., 0, 0].real
            + ra[..., 1, 1].real * rb[..., 1, 1].real
            + 2.0 * (ra[..., 0, 1] * np.conj(rb[..., 0, 1])).real
        )
        group.ess[du] = sm.ess
        group.x_abs_max[du.value] = x_stats(sm.rho)
        example_bloch[du.value] = _bloch_of(sm.rho)[:n_ex]
        example_metrics[f"ntrsd_{du.value}"] = -s_s[:n_ex]
        example_metrics[f"fid_{du.value}"] = f_s[:n_ex]
        del sm

    return GroupResult(group, example_bloch, example_metrics)


def du_index(du: Setup) -> int:
    return (Setup.X, Setup.Y, Setup.N).index(du)


def _run_group_task(args):
    so_val, sv_val, du_vals, cfg_dict = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return run_group(
        Setup(so_val), Setup(sv_val), [Setup(v) for v in du_vals], cfg
    )


def run(cfg: ExperimentConfig, progress=None) -> Path:
    """Full sweep per the configuration; returns the output directory."""
    cfg.validate()
    est = cfg.estimate()
    if not est["within_budget"]:
        raise ConfigError(
            f"estimated {est['kraus_ops_total']:.3g} Kraus applications exceed "
            f"the configured budget {est['budget']:.3g}; raise max_step_budget "
            "or shrink the run"
        )
    t_start = time.time()
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    say = progress or (lambda msg: None)

    groups = cfg.groups()
    ordered = [(so, sv) for (so, sv) in GROUP_ORDER if (so, sv) in groups]
    results: dict = {}
    if cfg.threads > 1:
        tasks = [
            (so.value, sv.value, [du.value for du in groups[(so, sv)]], cfg.to_dict())
            for so, sv in ordered
        ]
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            for (so, sv), res in zip(ordered, pool.map(_run_group_task, tasks)):
                results[(so, sv)] = res
                say(f"group d{so.value}d{sv.value} done")
    else:
        for so, sv in ordered:
            results[(so, sv)] = run_group(so, sv, groups[(so, sv)], cfg)
            say(f"group d{so.value}d{sv.value} done")

    files = []
    combos = cfg.combo_list()
    scalars = {}
    boot_rng_seed = cfg.master_seed

    for name in combos:
        so, sv, sw = parse_combo(name)
        res = results[(so, sv)]
        series = smoothing_powers(
            res.group,
            sw,
            n_boot=cfg.bootstrap_resamples,
            rng=np.random.default_rng([boot_rng_seed, 10, combos.index(name)]),
        )
        path = outdir / f"powers_{name}.csv"
        _write_powers_csv(path, series)
        files.append(path.name)
        scalars[name] = window_scalars(res.group, sw, cfg.ss_window)
        _write_examples_csv(outdir / f"examples_{name}.csv", res, sv, sw, res.group.t_grid)
        files.append(f"examples_{name}.csv")
    say("powers written")

    for (so, sv), res in results.items():
        if sv not in res.group.s_s:
            continue
        t_grid, diff, diff_err = valid_equality_series(
            res.group,
            n_boot=cfg.bootstrap_resamples,
            rng=np.random.default_rng([boot_rng_seed, 11, GROUP_ORDER.index((so, sv))]),
        )
        path = outdir / f"equality_d{so.value}d{sv.value}.csv"
        with open(path, "w") as fh:
            fh.write("t,rf_minus_rp,rf_minus_rp_err\n")
            for j in range(len(t_grid)):
                fh.write(f"{_fmt(t_grid[j])},{_fmt(diff[j])},{_fmt(diff_err[j])}\n")
        files.append(path.name)

    _write_window_scalars_csv(outdir / "window_scalars.csv", scalars)
    files.append("window_scalars.csv")

    suite = correlator_suite(
        cfg.model_params(),
        cfg.ss_window,
        cfg.n_correlator_trajectories,
        cfg.master_seed,
        tau_max=cfg.tau_max,
        n_tau=cfg.n_tau,
        psi0=cfg.psi0(),
    )
    _write_correlators_csv(outdir / "correlators.csv", suite)
    files.append("correlators.csv")
    classification = classification_matrix(suite)
    say("correlators written")

    report = conjecture_report(
        scalars,
        classification,
        cfg.ss_window,
        n_boot=cfg.bootstrap_resamples,
        seed=cfg.master_seed,
    )
    report["group_diagnostics"] = {
        f"d{so.value}d{sv.value}": res.group.x_abs_max
        for (so, sv), res in results.items()
    }
    with open(outdir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    files.append("report.json")

    if cfg.dump_trajectories:
        _dump_trajectories(outdir, cfg, ordered)
        files.append("trajectories/")

    manifest = {
        "config": cfg.to_dict(),
        "version": __version__,
        "numpy": np.__version__,
        "wall_time_s": time.time() - t_start,
        "files": sorted(files),
        "thresholds": {
            "correlator_nonzero_z": 5.0,
            "correlator_nonzero_band": 3,
            "small_fraction": 0.25,
            "large_fraction": 0.5,
        },
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return outdir


def _write_powers_csv(path, series):
    with open(path, "w") as fh:
        fh.write("t,R_S,R_S_err,R_F,R_F_err,R_P,R_P_err,alpha,ess_mean\n")
        for j in range(len(series.t_grid)):
            fh.write(
                ",".join(
                    _fmt(v)
                    for v in (
                        series.t_grid[j],
                        series.r_s[j],
                        series.r_s_err[j],
                        series.r_f[j],
                        series.r_f_err[j],
                        series.r_p[j],
                        series.r_p_err[j],
                        series.alpha[j],
                        series.ess_mean[j],
                    )
                )
                + "\n"
            )


WINDOW_SCALAR_COLUMNS = (
    "combo,record,win_s_f,win_s_s,win_s_sv,win_f_f,win_f_s,win_f_sv,"
    "win_p_f,win_p_s,dd_vv,dd_ww,dd_vw"
)


def _write_window_scalars_csv(path, scalars: dict):
    with open(path, "w") as fh:
        fh.write(WINDOW_SCALAR_COLUMNS + "\n")
        for name in sorted(scalars):
            ws = scalars[name]
            for r in range(ws.n_records):
                row = (
                    ws.s_f[r], ws.s_s[r], ws.s_sv[r], ws.f_f[r], ws.f_s[r],
                    ws.f_sv[r], ws.p_f[r], ws.p_s[r], ws.dd_vv[r], ws.dd_ww[r],
                    ws.dd_vw[r],
                )
                fh.write(f"{name},{r}," + ",".join(_fmt(v) for v in row) + "\n")


def _write_correlators_csv(path, suite: dict):
    with open(path, "w") as fh:
        fh.write("pair,tau,value,stderr\n")
        for name in sorted(suite):
            s = suite[name]
            for j in range(len(s.tau)):
                fh.write(
                    f"{name},{_fmt(s.tau[j])},{_fmt(s.values[j])},{_fmt(s.stderr[j])}\n"
                )


def _write_examples_csv(path, res: GroupResult, sv: Setup, sw: Setup, t_grid):
    cols = (
        "t,x_T,y_T,z_T,x_F,y_F,z_F,x_SV,y_SV,z_SV,x_SW,y_SW,z_SW,"
        "ntrsd_F,ntrsd_SV,ntrsd_SW,fid_F,fid_SV,fid_SW"
    )
    bl = res.example_bloch
    mt = res.example_metrics
    with open(path, "w") as fh:
        fh.write(cols + "\n")
        for j, t in enumerate(t_grid):
            row = [t]
            for key in ("T", "F", sv.value, sw.value):
                row.extend(bl[key][0, j])
            row.extend(
                (
                    mt["ntrsd_F"][0, j],
                    mt[f"ntrsd_{sv.value}"][0, j],
                    mt[f"ntrsd_{sw.value}"][0, j],
                    mt["fid_F"][0, j],
                    mt[f"fid_{sv.value}"][0, j],
                    mt[f"fid_{sw.value}"][0, j],
                )
            )
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def load_window_scalars(path) -> dict:
    """Read window_scalars.csv back into per-combo scalar ensembles."""
    rows_by_combo: dict = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != WINDOW_SCALAR_COLUMNS:
            raise ConfigError(f"{path}: unexpected columns {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            rows_by_combo.setdefault(parts[0], []).append([float(v) for v in parts[2:]])
    out = {}
    for name, rows in rows_by_combo.items():
        arr = np.asarray(rows)
        out[name] = ComboWindowScalars(
            name, *(arr[:, k] for k in range(arr.shape[1]))
        )
    return out


def load_correlators(path) -> dict:
    """Read correlators.csv back into CorrelatorSeries keyed by pair name."""
    rows_by_pair: dict = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "pair,tau,value,stderr":
            raise ConfigError(f"{path}: unexpected columns {header!r}")
        for line in fh:
            pair, tau, value, stderr = line.strip().split(",")
            rows_by_pair.setdefault(pair, []).append(
                (float(tau), float(value), float(stderr))
            )
    out = {}
    for name, rows in rows_by_pair.items():
        arr = np.asarray(rows)
        pair = (Setup(name[1]), Setup(name[3]))
        out[name] = CorrelatorSeries(
            pair=pair,
            tau=arr[:, 0],
            values=arr[:, 1],
            stderr=arr[:, 2],
            n_trajectories=0,
        )
    return out


def rebuild_report(outdir, window, n_boot=500, seed=0) -> dict:
    """Recompute report.json content from the delimited outputs alone."""
    outdir = Path(outdir)
    scalars = load_window_scalars(outdir / "window_scalars.csv")
    suite = load_correlators(outdir / "correlators.csv")
    classification = classification_matrix(suite)
    return conjecture_report(scalars, classification, window, n_boot=n_boot, seed=seed)


def _dump_trajectories(outdir: Path, cfg: ExperimentConfig, ordered):
    p = cfg.model_params()
    for so, sv in ordered:
        group_idx = GROUP_ORDER.index((so, sv))
        sub = outdir / "trajectories" / f"d{so.value}d{sv.value}"
        sub.mkdir(parents=True, exist_ok=True)
        for r in range(min(cfg.dump_trajectories, cfg.n_true_trajectories)):
            batch = simulate_joint_batch(
                so, sv, cfg.psi0(), p,
                [make_rng(cfg.master_seed, group_idx, r, ROLE_TRUE)], stride=1,
            )
            from .unraveling import MeasurementRecord, TrueTrajectory

            traj = TrueTrajectory(
                kets=batch.kets[0],
                record_o=MeasurementRecord(so, p.dt, batch.records_o[0]),
                record_v=MeasurementRecord(sv, p.dt, batch.records_v[0]),
                seed=r,
                stride=1,
            )
            with open(sub / f"traj_{r:05d}.csv", "w") as fh:
                fh.write("step,t,outcome_O,outcome_V,x_T,y_T,z_T\n")
                for row in dump_rows(traj, p):
                    fh.write(
                        f"{row[0]},{_fmt(row[1])},{_fmt(row[2])},{_fmt(row[3])},"
                        f"{_fmt(row[4])},{_fmt(row[5])},{_fmt(row[6])}\n"
                    )
