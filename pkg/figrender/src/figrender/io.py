"""Input loading with strict schema checks.

The renderer consumes only the delimited outputs of a sweep directory, never
in-process state, so figures can be rebuilt from archived runs.
"""

import json
from pathlib import Path

import numpy as np

POWERS_COLUMNS = "t,R_S,R_S_err,R_F,R_F_err,R_P,R_P_err,alpha,ess_mean"
EXAMPLES_COLUMNS = (
    "t,x_T,y_T,z_T,x_F,y_F,z_F,x_SV,y_SV,z_SV,x_SW,y_SW,z_SW,"
    "ntrsd_F,ntrsd_SV,ntrsd_SW,fid_F,fid_SV,fid_SW"
)

SETUP_ORDER = ("X", "Y", "N")

# panel layout matching the usual 3x3 presentation of the nine observed/valid
# pairs; the diagonal pairs fill the first row
PANEL_PAIRS = (
    ("X", "X"), ("Y", "Y"), ("N", "N"),
    ("X", "Y"), ("Y", "X"), ("X", "N"),
    ("N", "X"), ("Y", "N"), ("N", "Y"),
)
PANEL_LABELS = "abcdefghi"


class SchemaError(RuntimeError):
    """An input file is missing or its columns do not match the contract."""


def _read_csv(path: Path, expected_header: str) -> np.ndarray:
    if not path.exists():
        raise SchemaError(f"missing input file: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
    if header != expected_header:
        expected = expected_header.split(",")
        got = header.split(",")
        missing = [c for c in expected if c not in got]
        raise SchemaError(
            f"{path}: column mismatch (missing {missing or 'none'}, got {got})"
        )
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim == 1:
        data = data[None, :]
    return data


def load_powers(indir: Path, combo: str) -> dict:
    data = _read_csv(indir / f"powers_{combo}.csv", POWERS_COLUMNS)
    cols = POWERS_COLUMNS.split(",")
    return {name: data[:, k] for k, name in enumerate(cols)}


def load_examples(indir: Path, combo: str) -> dict:
    data = _read_csv(indir / f"examples_{combo}.csv", EXAMPLES_COLUMNS)
    cols = EXAMPLES_COLUMNS.split(",")
    return {name: data[:, k] for k, name in enumerate(cols)}


def load_window(indir: Path) -> tuple:
    """Steady-state window from the run manifest; default if absent."""
    path = Path(indir) / "manifest.json"
    if path.exists():
        with open(path) as fh:
            manifest = json.load(fh)
        return tuple(manifest["config"]["ss_window"])
    return (4.5, 6.0)


def wrong_setups(valid: str) -> list:
    """The two non-valid setups in canonical order (first drawn black)."""
    return [s for s in SETUP_ORDER if s != valid]


def available_example_combos(indir: Path) -> list:
    return sorted(
        p.name[len("examples_") : -len(".csv")]
        for p in Path(indir).glob("examples_*.csv")
    )
