import csv
import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from pseudomode_control import cli
from pseudomode_control.config import ConfigError, load_config, parse_config
from pseudomode_control.dynamics import CASE1, ControlField, SystemParams, propagate
from pseudomode_control.output import read_csv
from pseudomode_control.reachable import GridSpec, constant_populations, map_reachable, status_counts

SQRT5 = math.sqrt(5.0)


def write(tmp_path, doc, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def base(**extra):
    doc = {"schema": 1, "system": {"p": SQRT5}, "initial": "case1", "dt": 0.02}
    doc.update(extra)
    return doc


def run(tmp_path, command, doc, *flags, out="out"):
    cfg = write(tmp_path, doc)
    code = cli.main([command, "--config", str(cfg), "--out", str(tmp_path / out), *flags])
    return code, tmp_path / out


def strict_floats(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    for row in rows[1:]:
        for v in row:
            if v not in ("constant_reachable", "reached", "near", "unreached"):
                float(v)
                assert "," not in v
    return rows


# -- config parsing -----------------------------------------------------------


def test_parse_minimal():
    cfg = parse_config(base(horizon=1.0, shape={"kind": "constant", "omega_max": 2.0}))
    assert cfg.system.p == pytest.approx(SQRT5)
    assert cfg.initial == CASE1 and cfg.optimizer.max_iters == 800


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"schema": 2, "system": {"p": 1}}, "schema"),
        ({"schema": 1}, "system"),
        ({"schema": 1, "system": {"p": -1}}, "system.p"),
        ({"schema": 1, "system": {"p": 1, "gamma": 3}}, "system"),
        ({"schema": 1, "system": {"p": 1}, "initial": "case3"}, "initial"),
        ({"schema": 1, "system": {"p": 1}, "dt": 0}, "config.dt"),
        ({"schema": 1, "system": {"p": 1}, "shape": {"kind": "ramp"}}, "shape.kind"),
        ({"schema": 1, "system": {"p": 1}, "optimizer": {"omega_max": "big"}}, "optimizer.omega_max"),
        ({"schema": 1, "system": {"p": 1}, "optimizer": {"target_pop": 2}}, "optimizer.target_pop"),
        ({"schema": 1, "system": {"p": 1}, "grid": {"t_max": 1, "n_t": 0, "n_pop": 2}}, "grid.n_t"),
        ({"schema": 1, "system": {"p": 1}, "selectivity": {"alpha": -2}}, "selectivity.alpha"),
        ({"schema": 1, "units": {"q": 2}, "system": {"p": 1, "q": 1}}, "system.q"),
        ({"schema": 1, "system": {"p": 1}, "samples": [1, "x"]}, "samples"),
    ],
)
def test_config_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(doc)


def test_json_syntax_error_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema": 1,\n  "system": {"p": 1,}\n}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_config_echo_round_trip():
    doc = base(
        horizon=2.0,
        shape={"kind": "square_wave", "omega_max": 5.0},
        optimizer={"omega_max": "unbounded", "restarts": 3},
        grid={"t_max": 3, "n_t": 4, "n_pop": 5, "omega_max": 2},
        selectivity={"alpha": 0.3, "lambda": 1.5, "t_f": 1.0, "sweep": [1, 2]},
    )
    cfg = parse_config(doc)
    again = parse_config(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_multimode_and_custom_initial_round_trip():
    doc = {
        "schema": 1,
        "system": {"modes": [[1.0, 1.0], [2.0, 3.0]]},
        "initial": {"c1": [0.6, 0.0], "y": [[0.0, 0.8], 0.0]},
        "horizon": 0.5,
        "samples": [0.0] * 25,
    }
    cfg = parse_config(doc)
    assert cfg.multimode and cfg.initial.y[0] == 0.8j
    assert parse_config(json.loads(json.dumps(cfg.to_dict()))) == cfg


# -- simulate -------------------------------------------------------------------


def test_simulate_matches_in_process(tmp_path):
    code, out = run(tmp_path, "simulate", base(horizon=3.0, shape={"kind": "constant", "omega_max": 0.0}))
    assert code == 0
    header, rows = read_csv(out / "trajectory.csv")
    assert header == ["t_q", "re_c1", "im_c1", "re_y", "im_y", "pop", "omega"]
    strict_floats(out / "trajectory.csv")
    traj = propagate(SystemParams(SQRT5), ControlField.constant(0.0, 0.02, 150), CASE1)
    assert np.array_equal(np.array([float(r[5]) for r in rows]), traj.pop)
    assert np.array_equal(np.array([float(r[1]) for r in rows]), traj.c1.real)
    assert (out / "config_echo.json").exists()


def test_simulate_zero_horizon(tmp_path):
    code, out = run(tmp_path, "simulate", base(horizon=0.0, shape={"kind": "constant", "omega_max": 1.0}))
    assert code == 0
    header, rows = read_csv(out / "trajectory.csv")
    assert len(rows) == 1 and float(rows[0][0]) == 0.0 and float(rows[0][5]) == 1.0


def test_simulate_needs_shape_or_samples(tmp_path):
    code, _ = run(tmp_path, "simulate", base(horizon=1.0))
    assert code == 2


def test_simulate_multimode_columns(tmp_path):
    doc = {"schema": 1, "system": {"modes": [[1.0, 1.0], [2.0, 3.0]]}, "horizon": 1.0, "dt": 0.02,
           "shape": {"kind": "constant", "omega_max": 0.0}}
    code, out = run(tmp_path, "simulate", doc)
    assert code == 0
    header, rows = read_csv(out / "trajectory.csv")
    assert header[3:7] == ["re_y", "im_y", "re_y2", "im_y2"] and len(rows) == 51


def test_simulate_magic_sinusoid_config(tmp_path):
    doc = base(horizon=3.0, dt=0.002, shape={"kind": "sinusoid", "omega_max": 2.40483 * 20, "theta": 20.0})
    code, out = run(tmp_path, "simulate", doc)
    assert code == 0
    _, rows = read_csv(out / "trajectory.csv")
    assert max(abs(float(r[6])) for r in rows) <= 2.40483 * 20


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    def bad(params, field, s0):
        traj = propagate(params, field, s0)
        return type(traj)(traj.times, traj.c1 * 2.0, traj.y)

    monkeypatch.setattr(cli, "propagate", bad)
    code, _ = run(tmp_path, "simulate", base(horizon=0.5, shape={"kind": "constant", "omega_max": 0.0}))
    assert code == 3


def test_missing_config_file(tmp_path):
    assert cli.main(["simulate", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2


# -- optimize -------------------------------------------------------------------


def test_optimize_writes_outputs(tmp_path):
    doc = base(optimizer={"omega_max": 10.0, "t_final": 1.5, "target_pop": 0.02})
    code, out = run(tmp_path, "optimize", doc, "--strict")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "reached" and summary["max_abs_omega"] <= 10.0
    header, rows = read_csv(out / "field.csv")
    assert header == ["t_q", "omega"] and len(rows) == 75


def test_optimize_strict_unreached(tmp_path):
    doc = base(optimizer={"omega_max": 0.1, "t_final": 0.2, "target_pop": 0.0, "max_iters": 20})
    assert run(tmp_path, "optimize", doc)[0] == 0
    assert run(tmp_path, "optimize", doc, "--strict", out="o2")[0] == 4


def test_optimize_requires_target(tmp_path):
    assert run(tmp_path, "optimize", base(optimizer={"omega_max": 1.0}))[0] == 2


# -- reachable ------------------------------------------------------------------


def test_reachable_matches_in_process(tmp_path):
    doc = base(dt=0.1, system={"p": 0.25},
               optimizer={"max_iters": 60, "seed": 3}, grid={"t_max": 20, "n_t": 5, "n_pop": 5, "omega_max": 2})
    code, out = run(tmp_path, "reachable", doc)
    assert code == 0
    rows = strict_floats(out / "grid.csv")
    assert rows[0] == ["t_q", "pop_target", "status", "final_cost"]
    cells = map_reachable(SystemParams(0.25), GridSpec(20, 5, 5, 2.0, dt=0.1), budget=60, seed=3)
    assert [r[2] for r in rows[1:]] == [c.status for c in cells]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["counts"] == status_counts(cells) and summary["seed"] == 3
    counts = summary["counts"]
    assert counts["constant_reachable"] + counts["unreached"] >= 0.8 * 25
    header, brows = read_csv(out / "boundary.csv")
    assert header == ["t_q", "pop_omega_zero", "pop_omega_max"] and len(brows) == 201


def test_reachable_single_free_cell(tmp_path):
    params = SystemParams(SQRT5)
    t_half = brentq(lambda t: constant_populations(params, [0.0], [t], CASE1)[0, 0] - 0.5, 0.05, 0.5)
    doc = base(grid={"t_max": 2 * t_half, "n_t": 1, "n_pop": 1, "omega_max": 2.0})
    code, out = run(tmp_path, "reachable", doc)
    _, rows = read_csv(out / "grid.csv")
    assert code == 0 and len(rows) == 1 and rows[0][2] in ("constant_reachable", "reached")


def test_reachable_needs_bound(tmp_path):
    assert run(tmp_path, "reachable", base(grid={"t_max": 1, "n_t": 2, "n_pop": 2}))[0] == 2


# -- selectivity ----------------------------------------------------------------


def test_selectivity_identical_qubits_gain_null(tmp_path):
    doc = base(optimizer={"max_iters": 30, "omega_max": 5.0}, selectivity={"alpha": 0.0, "lambda": 1.0, "t_f": 0.5})
    code, out = run(tmp_path, "selectivity", doc)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["G"] is None
    assert summary["C"] == pytest.approx(0.0, abs=1e-14)
    assert summary["pop1"] == pytest.approx(summary["pop2"], abs=1e-14)
    for key in ("C", "G", "pop1", "pop2", "restarts_used", "best_seed", "max_abs_omega"):
        assert key in summary


def test_selectivity_sweep_files(tmp_path):
    doc = base(optimizer={"max_iters": 10, "restarts": 1},
               selectivity={"alpha": 0.5, "lambda": 2.0, "t_f": 0.5, "sweep": [1, 2.5]})
    code, out = run(tmp_path, "selectivity", doc)
    assert code == 0
    for tag in ("1", "2.5"):
        assert (out / f"summary_wmax_{tag}.json").exists() and (out / f"field_wmax_{tag}.csv").exists()
    _, rows = read_csv(out / "sweep.csv")
    assert [float(r[0]) for r in rows] == [1.0, 2.5]


# -- determinism ------------------------------------------------------------------


def test_rerun_from_echo_is_byte_identical(tmp_path):
    doc = base(optimizer={"omega_max": 3.0, "t_final": 1.0, "target_pop": 0.3, "restarts": 2, "seed": 4})
    code, out = run(tmp_path, "optimize", doc)
    assert code == 0
    echo = out / "config_echo.json"
    out2 = tmp_path / "again"
    assert cli.main(["optimize", "--config", str(echo), "--out", str(out2)]) == 0
    for name in ("field.csv", "trajectory.csv", "config_echo.json"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    doc = base(optimizer={"omega_max": 3.0, "t_final": 0.5, "target_pop": 0.3, "seed": 4})
    run(tmp_path, "optimize", doc, "--seed", "9")
    echo = json.loads((tmp_path / "out" / "config_echo.json").read_text())
    assert echo["optimizer"]["seed"] == 9


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    args = cli.build_parser().parse_args(["simulate", "--config", "x"])
    assert cli._threads(args) == 2
    args = cli.build_parser().parse_args(["simulate", "--config", "x", "--threads", "1"])
    assert cli._threads(args) == 1
    monkeypatch.setenv(cli.THREADS_ENV, "lots")
    args = cli.build_parser().parse_args(["simulate", "--config", "x"])
    with pytest.raises(ConfigError):
        cli._threads(args)
