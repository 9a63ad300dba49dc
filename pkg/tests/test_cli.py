import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from tlsdecay.cli import (
    ConfigError,
    Curve,
    RunRecord,
    config_from_dict,
    parse_config,
    read_csv,
    run_preset,
    simulate,
    sweep,
    write_outputs,
)
from tlsdecay.cli.main import main
from tlsdecay.core import TimeGrid
from tlsdecay.pipeline import HeomOptions
from tlsdecay.polaron_me import closed_form_P_lambda0

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "config.schema.json").read_text())
MINIMAL = {"alpha": 0.25, "omega_c": 7.5, "epsilon": 1.0, "modulator": "none"}


def write_json(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def csvs(directory):
    return sorted(p for p in Path(directory).iterdir() if p.suffix == ".csv")


# -- configuration ---------------------------------------------------------

def test_minimal_config_defaults(tmp_path):
    cfg = parse_config(write_json(tmp_path, MINIMAL))
    assert cfg.solver == "all"
    assert cfg.modulator is None
    d = cfg.to_dict()
    assert d["grid"] == {"t_start": 0.0, "t_end": 2.0, "n_points": 401}
    assert d["rho_ee0"] == 1.0 and d["heom"]["ell_c"] == 8


def test_negative_alpha_rejected(tmp_path):
    with pytest.raises(ConfigError, match="alpha must be positive"):
        parse_config(write_json(tmp_path, MINIMAL | {"alpha": -1}))


def test_fig1_config_resolves_g0(tmp_path):
    cfg = parse_config(write_json(tmp_path, MINIMAL | {"modulator": {"type": "ho", "omega0": 5, "lambda": 1}}))
    assert cfg.modulator.g0 == 5.0


def test_unknown_fields_rejected():
    with pytest.raises(ConfigError, match="unknown field"):
        config_from_dict(MINIMAL | {"colour": "blue"})
    with pytest.raises(ConfigError, match="unknown field"):
        config_from_dict(MINIMAL | {"grid": {"t_end": 1, "dt": 0.1}})
    with pytest.raises(ConfigError, match="unknown field"):
        config_from_dict(MINIMAL | {"modulator": {"type": "ho", "omega0": 5, "lambda": 1, "eta": 2}})


def test_inconsistent_and_misplaced_values():
    with pytest.raises(ConfigError, match="disagree"):
        config_from_dict(MINIMAL | {"modulator": {"type": "ho", "omega0": 5, "lambda": 1, "g0": 4}})
    with pytest.raises(ConfigError, match="does not apply"):
        config_from_dict(MINIMAL | {"solver": "heom", "modulator": {"type": "reservoir", "eta": 3, "Lambda": 1}})
    with pytest.raises(ConfigError, match="n_points"):
        config_from_dict(MINIMAL | {"grid": {"n_points": 2.5}})
    with pytest.raises(ConfigError, match="rho_ee0"):
        config_from_dict(MINIMAL | {"rho_ee0": 2})


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "alpha": 0.25,\n  "omega_c": ,\n}')
    with pytest.raises(ConfigError, match="line 3"):
        parse_config(p)


def test_schema_accepts_resolved_configs_and_rejects_unknown_keys():
    for mod in ("none", {"type": "ho", "omega0": 5, "lambda": 1}, {"type": "reservoir", "eta": 3, "Lambda": 2},
                {"type": "drive", "amplitude": 1, "frequency": 2}):
        resolved = config_from_dict(MINIMAL | {"modulator": mod}).to_dict()
        jsonschema.validate(resolved, SCHEMA)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(MINIMAL | {"colour": "blue"}, SCHEMA)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(MINIMAL | {"heom": {"levels": 3}}, SCHEMA)


# -- records and files ---------------------------------------------------

def test_csv_line_count_and_bit_exact_roundtrip(tmp_path):
    t = np.linspace(0, 1, 201)
    y = np.cos(7 * t) / 3
    rec = RunRecord("test", {}, [Curve("volterra", "alpha", 0.25, t, y)])
    paths = write_outputs(rec, tmp_path)
    csv = [p for p in paths if p.suffix == ".csv"][0]
    assert csv.name == f"{rec.run_id}_volterra_alpha=0.25.csv"
    assert len(csv.read_text().splitlines()) == 202
    header, x, yy = read_csv(csv)
    assert header == ["t", "P"]
    assert np.array_equal(x, t) and np.array_equal(yy, y)


def test_record_roundtrip():
    rec = RunRecord("test", {"a": (1, 2), "b": np.float64(0.1)},
                    [Curve("laplace", "lambda", 1.0, [0, 1], [1, 0.5], params={"k": np.int64(3)})],
                    diagnostics={"x": np.array([1.0, 2.0])}, duration_s=0.5)
    again = RunRecord.loads(rec.dumps())
    assert again == rec
    assert again.to_dict() == rec.to_dict()


def test_write_failure_removes_partial_outputs(tmp_path):
    c = Curve("laplace", "lambda", 1.0, [0, 1], [1, 0])
    rec = RunRecord("test", {}, [c, c])
    with pytest.raises(ValueError, match="duplicate"):
        write_outputs(rec, tmp_path)
    assert list(tmp_path.iterdir()) == []


def test_unwritable_directory_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rec = RunRecord("test", {}, [Curve("laplace", "lambda", 1.0, [0, 1], [1, 0])])
    with pytest.raises(OSError, match="file"):
        write_outputs(rec, blocker / "sub")


# -- presets ---------------------------------------------------------------

def test_preset_fig1(tmp_path):
    rec = run_preset("fig1", tmp_path)
    files = csvs(tmp_path)
    assert len(files) == 10
    assert (tmp_path / f"{rec.run_id}_record.json").exists()
    assert sum("exp_approx" in f.name for f in files) == 5
    # lambda = 0 curve versus the closed form
    _, t, P = read_csv(tmp_path / f"{rec.run_id}_laplace_lambda=0.csv")
    assert np.max(np.abs(P - closed_form_P_lambda0(t, 0.25, 7.5))) < 1e-3
    assert rec.config["grid"] == [0.0, 2.0, 401]
    assert rec.config["epsilon"] == 1.0
    assert all(d["laplace_volterra_max_dev"] < 2e-3 for d in rec.diagnostics.values())


def test_preset_fig2(tmp_path):
    rec = run_preset("fig2", tmp_path)
    assert len(rec.curves) == 3
    header, lam, T1 = read_csv(csvs(tmp_path)[0])
    assert header == ["lambda", "T1"]
    assert len(lam) == 121 and np.all(np.diff(T1) > 0)


def test_preset_fig3(tmp_path):
    rec = run_preset("fig3", tmp_path)
    assert [c.value for c in rec.curves] == [0.0, 0.1, 1.0, 2.0, 3.0]
    assert rec.config["eta"] == 3.0


def test_preset_fig4_records_open_defaults(tmp_path):
    rec = run_preset("fig4", tmp_path, grid=TimeGrid(0.0, 4.0, 9),
                     heom=HeomOptions(fock_dim=4, ell_c=2, omega0=1.0))
    assert len(csvs(tmp_path)) == 4
    cfg = rec.config
    assert cfg["omega0"] == 1.0 and cfg["heom"]["ell_c"] == 2 and cfg["dt"] > 0
    assert cfg["grid"] == [0.0, 4.0, 9]


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown preset"):
        run_preset("nofig", "/nonexistent")


def test_presets_are_byte_identical(tmp_path):
    a = run_preset("fig3", tmp_path / "a")
    b = run_preset("fig3", tmp_path / "b")
    for c in a.curves:
        name = c.filename_stem + ".csv"
        assert (tmp_path / "a" / f"{a.run_id}_{name}").read_bytes() == \
            (tmp_path / "b" / f"{b.run_id}_{name}").read_bytes()


# -- simulate and sweep --------------------------------------------------

def test_simulate_runs_every_applicable_solver():
    cfg = config_from_dict(MINIMAL | {"grid": {"t_end": 1.0, "n_points": 21}, "heom": {"fock_dim": 1, "ell_c": 2}})
    rec = simulate(cfg)
    assert [c.solver for c in rec.curves] == ["laplace", "volterra", "closed_form", "heom"]
    assert rec.config == cfg.to_dict()


def test_sweep_validation():
    cfg = config_from_dict(MINIMAL)
    with pytest.raises(ConfigError, match="knob requires single-mode modulator"):
        sweep(cfg, "lambda", [0.1])
    with pytest.raises(ConfigError, match="knob requires reservoir modulator"):
        sweep(cfg, "Lambda", [0.1])
    with pytest.raises(ConfigError, match="empty sweep"):
        sweep(cfg, "alpha", [])
    with pytest.raises(ConfigError, match="rejected"):
        sweep(cfg, "alpha", [-0.1])


def test_alpha_sweep_orders_and_decays_faster():
    cfg = config_from_dict(MINIMAL | {"solver": "volterra", "grid": {"t_end": 2.0, "n_points": 41}})
    rec = sweep(cfg, "alpha", [0.3, 0.1, 0.2], workers=1)
    assert [c.value for c in rec.curves] == [0.1, 0.2, 0.3]
    finals = [c.y[-1] for c in rec.curves]
    assert finals[0] > finals[1] > finals[2]


def test_sweep_parallel_matches_serial():
    cfg = config_from_dict(MINIMAL | {"solver": "laplace", "modulator": {"type": "ho", "omega0": 5, "lambda": 0},
                                      "grid": {"n_points": 21}})
    serial = sweep(cfg, "lambda", [0.0, 1.0, 2.0], workers=1)
    parallel = sweep(cfg, "lambda", [2.0, 0.0, 1.0], workers=2)
    assert [c.to_dict() for c in serial.curves] == [c.to_dict() for c in parallel.curves]


# -- command line --------------------------------------------------------

def test_main_t1(capsys):
    assert main(["t1", "--alpha", "0.25", "--omega-c", "7.5", "--epsilon", "1", "--omega0", "5",
                 "--lambda", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["T1"] == 15.0 and out["T2"] == 30.0


def test_main_simulate_and_sweep(tmp_path, capsys):
    cfg = write_json(tmp_path, MINIMAL | {"solver": "closed_form", "grid": {"n_points": 11}})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")]) == 0
    assert len(csvs(tmp_path / "sim")) == 1
    assert main(["sweep", "--config", str(cfg), "--knob", "alpha", "--values", "0.1,0.2",
                 "--out", str(tmp_path / "sw")]) == 0
    assert len(csvs(tmp_path / "sw")) == 2


def test_main_preset_uses_output_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TLSDECAY_OUT", str(tmp_path / "env"))
    monkeypatch.setenv("TLSDECAY_WORKERS", "1")
    assert main(["preset", "fig2"]) == 0
    assert len(csvs(tmp_path / "env")) == 3


def test_main_reports_config_errors(tmp_path, capsys):
    cfg = write_json(tmp_path, MINIMAL | {"alpha": -1})
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert "alpha must be positive" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    cfg = write_json(tmp_path, MINIMAL, "ok.json")
    assert main(["sweep", "--config", str(cfg), "--knob", "lambda", "--values", "1"]) == 2
