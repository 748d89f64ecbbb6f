import json

import numpy as np
import pytest

from figrender import SchemaError, alpha_grid, trajectory_example
from figrender.cli import main
from figrender.io import POWERS_COLUMNS, EXAMPLES_COLUMNS, load_powers

SETUPS = ("X", "Y", "N")


def _powers_rows(rng, n=81):
    t = np.linspace(0, 8, n)
    base = 0.05 * np.exp(-((t - 5) ** 2))
    rows = np.column_stack(
        [
            t,
            base + 0.01 * rng.normal(size=n),
            np.full(n, 0.004),
            base + 0.01 * rng.normal(size=n),
            np.full(n, 0.004),
            base + 0.01 * rng.normal(size=n),
            np.full(n, 0.004),
            np.clip(0.9 + 0.05 * rng.normal(size=n), -1, 1),
            np.full(n, 700.0),
        ]
    )
    return rows


@pytest.fixture()
def run_dir(tmp_path):
    rng = np.random.default_rng(0)
    for so in SETUPS:
        for sv in SETUPS:
            for sw in SETUPS:
                rows = _powers_rows(rng)
                path = tmp_path / f"powers_d{so}d{sv}d{sw}.csv"
                with open(path, "w") as fh:
                    fh.write(POWERS_COLUMNS + "\n")
                    np.savetxt(fh, rows, delimiter=",")
    t = np.linspace(0, 8, 81)
    ex = np.column_stack([t] + [np.sin(t + k) for k in range(12)]
                         + [np.cos(t + k) * 0.5 for k in range(6)])
    for combo in ("dYdYdX", "dYdXdY"):
        with open(tmp_path / f"examples_{combo}.csv", "w") as fh:
            fh.write(EXAMPLES_COLUMNS + "\n")
            np.savetxt(fh, ex, delimiter=",")
    manifest = {"config": {"ss_window": [4.5, 6.0]}}
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    return tmp_path


@pytest.mark.parametrize("kind,name", [
    ("power_grid_S", "rs.png"),
    ("power_grid_F", "rf.svg"),
    ("alpha_grid", "alpha.png"),
    ("trajectory_example", "traj.png"),
])
def test_render_kinds(run_dir, tmp_path, kind, name):
    out = tmp_path / name
    code = main(["render", "--kind", kind, "--in", str(run_dir), "--out", str(out)])
    assert code == 0
    assert out.exists() and out.stat().st_size > 1000


def test_svg_output_deterministic(run_dir, tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"grid_{tag}.svg"
        assert main(
            ["render", "--kind", "power_grid_S", "--in", str(run_dir), "--out", str(out)]
        ) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_schema_mismatch_names_columns(run_dir, tmp_path):
    path = run_dir / "powers_dXdXdX.csv"
    lines = path.read_text().splitlines()
    lines[0] = lines[0].replace("R_S_err", "rs_error")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="R_S_err"):
        load_powers(run_dir, "dXdXdX")
    code = main(
        ["render", "--kind", "power_grid_S", "--in", str(run_dir),
         "--out", str(tmp_path / "x.png")]
    )
    assert code == 2


def test_missing_combo_renders_blank_panel(run_dir, tmp_path):
    for sw in SETUPS:
        (run_dir / f"powers_dXdXd{sw}.csv").unlink()
    out = tmp_path / "partial.png"
    assert main(
        ["render", "--kind", "power_grid_S", "--in", str(run_dir), "--out", str(out)]
    ) == 0
    assert out.exists()


def test_missing_input_dir_fails_cleanly(tmp_path):
    code = main(
        ["render", "--kind", "alpha_grid", "--in", str(tmp_path / "nope"),
         "--out", str(tmp_path / "y.png")]
    )
    assert code == 2


def test_trajectory_example_requires_examples(tmp_path):
    (tmp_path / "manifest.json").write_text(json.dumps({"config": {"ss_window": [4.5, 6]}}))
    code = main(
        ["render", "--kind", "trajectory_example", "--in", str(tmp_path),
         "--out", str(tmp_path / "t.png")]
    )
    assert code == 2


def test_trajectory_example_combo_selection(run_dir, tmp_path):
    out = tmp_path / "sel.png"
    assert main(
        ["render", "--kind", "trajectory_example", "--in", str(run_dir),
         "--out", str(out), "--combos", "dYdXdY"]
    ) == 0
    assert out.exists()
