"""Run configuration: a single JSON-serializable document with validation and
a resource estimate, so a manifest is enough to reproduce any run."""

import json
from dataclasses import asdict, dataclass, fields

from .dynamics import ConfigError, ModelParams, Setup

ALL_SETUPS = (Setup.X, Setup.Y, Setup.N)


def parse_combo(name: str) -> tuple[Setup, Setup, Setup]:
    """'dYdXdY' -> (Y, X, Y) as (observed, valid, assumed)."""
    if len(name) != 6 or name[0::2] != "ddd":
        raise ConfigError(f"combo {name!r} is not of the form dOdVdW, e.g. dYdXdY")
    try:
        return tuple(Setup(c) for c in name[1::2])
    except ValueError as err:
        raise ConfigError(f"combo {name!r}: {err}") from None


def combo_name(so: Setup, sv: Setup, sw: Setup) -> str:
    return f"d{so.value}d{sv.value}d{sw.value}"


def all27() -> list[str]:
    return [
        combo_name(so, sv, sw)
        for so in ALL_SETUPS
        for sv in ALL_SETUPS
        for sw in ALL_SETUPS
    ]


@dataclass
class ExperimentConfig:
    """Full sweep configuration; defaults reproduce the published ensemble
    sizes, ``desk()`` the laptop-scale profile used by the acceptance suite."""

    gamma: float = 1.0
    omega_over_gamma: float = 5.0
    dt: float = 1e-3
    t_total: float = 8.0
    n_true_trajectories: int = 3000
    n_hypothetical: int = 10000
    ss_window: tuple = (4.5, 6.0)
    master_seed: int = 20240501
    combos: object = "all27"
    output_dir: str = "runs/out"
    n_correlator_trajectories: int = 10000
    tau_max: float = 2.0
    n_tau: int = 41
    output_stride: int = 10
    bootstrap_resamples: int = 500
    n_examples: int = 1
    dump_trajectories: int = 0
    threads: int = 1
    single_precision: bool = True
    max_step_budget: float = 2e12
    initial_state: str = "ground"

    @classmethod
    def desk(cls, **overrides) -> "ExperimentConfig":
        """Laptop-scale profile: 300 records, 10^3 hypothetical samples."""
        base = dict(n_true_trajectories=300, n_hypothetical=1000)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ss_window"] = list(self.ss_window)
        return out

    def model_params(self) -> ModelParams:
        return ModelParams(
            gamma=self.gamma,
            omega=self.omega_over_gamma * self.gamma,
            dt=self.dt,
            t_i=0.0,
            t_f=self.t_total,
        )

    def combo_list(self) -> list[str]:
        combos = all27() if self.combos == "all27" else list(self.combos)
        for name in combos:
            parse_combo(name)
        return combos

    def groups(self) -> dict:
        """Map (observed, valid) pairs to the assumed setups they need.

        The valid setup is always included: the deviation correlation and
        every comparison verdict need the valid smoothing as reference.
        """
        out: dict = {}
        for name in self.combo_list():
            so, sv, sw = parse_combo(name)
            dus = out.setdefault((so, sv), [])
            for du in (sv, sw):
                if du not in dus:
                    dus.append(du)
        return out

    def validate(self) -> "ExperimentConfig":
        p = self.model_params()  # raises on bad gamma/dt/t ranges
        lo, hi = self.ss_window
        if not (0.0 <= lo < hi <= self.t_total):
            raise ConfigError("ss_window must satisfy 0 <= lo < hi <= t_total")
        if hi + self.tau_max > self.t_total or lo - self.tau_max < 0.0:
            raise ConfigError("ss_window plus tau_max must fit inside the horizon")
        for key in (
            "n_true_trajectories",
            "n_hypothetical",
            "n_correlator_trajectories",
            "bootstrap_resamples",
            "output_stride",
        ):
            if int(getattr(self, key)) < 1:
                raise ConfigError(f"{key} must be positive")
        if p.n_steps % self.output_stride:
            raise ConfigError("output_stride must divide the number of steps")
        if self.n_tau < 3 or self.n_tau % 2 == 0:
            raise ConfigError("n_tau must be odd and at least 3")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.initial_state not in ("ground", "excited"):
            raise ConfigError("initial_state must be 'ground' or 'excited'")
        self.combo_list()
        return self

    def psi0(self):
        return (1.0, 0.0) if self.initial_state == "excited" else (0.0, 1.0)

    def estimate(self) -> dict:
        """Projected work (Kraus applications) and memory; budget verdict."""
        p = self.model_params()
        steps = p.n_steps
        groups = self.groups()
        n_sweeps = sum(len(dus) for dus in groups.values())
        sweep_ops = n_sweeps * self.n_true_trajectories * self.n_hypothetical * steps
        support_ops = len(groups) * self.n_true_trajectories * steps * 4
        corr_ops = 6 * self.n_correlator_trajectories * steps * 2
        total = sweep_ops + support_ops + corr_ops
        bytes_per_sweep = (
            self.n_true_trajectories
            * self.n_hypothetical
            * (4 if self.single_precision else 8)
            * 2
            * 7
        )
        return {
            "steps_per_trajectory": steps,
            "groups": len(groups),
            "sweeps": n_sweeps,
            "kraus_ops_sweeps": float(sweep_ops),
            "kraus_ops_total": float(total),
            "peak_sweep_bytes": float(bytes_per_sweep),
            "budget": float(self.max_step_budget),
            "within_budget": bool(total <= self.max_step_budget),
        }
