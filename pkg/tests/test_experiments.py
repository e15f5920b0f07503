import json

import numpy as np
import pytest

from roughrecon.experiments import (
    ConfigError,
    MeasurementSet,
    ScenarioConfig,
    add_noise,
    parse_quantity,
    reconstruction_error,
    run_scenario,
    synthesize_measurements,
)
from roughrecon.forward import IncidentWave, Medium, ReceiverArray
from roughrecon.numerics import SeededRng
from roughrecon.scenarios import PRESETS, preset
from roughrecon.surface import SplineBasis, SurfaceModel


def tiny_config(**overrides):
    data = {
        "name": "tiny",
        "surface": {"kind": "coefficients", "coeffs": [0.0, 0.03, -0.02, 0.04, 0.0, -0.03], "n_splines": 6},
        "schedule": {"start": "200 MHz", "step": "50 MHz", "stop": "250 MHz"},
        "receivers": {"start": -8, "stop": 8, "step": "50 cm", "height": 3.0},
        "inverse": {"n_splines": 6, "max_iterations": 4},
        "noise_level": "2 %",
        "noise_seed": 3,
    }
    data.update(overrides)
    return data


def test_error_metric_examples():
    ref = np.array([0.1, -0.2, 0.05, 0.3])
    assert reconstruction_error(ref, ref) == 0.0
    assert reconstruction_error(np.zeros(4), ref) == pytest.approx(1.0, abs=1e-15)
    assert reconstruction_error(2 * ref, ref) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ZeroDivisionError):
        reconstruction_error(ref, np.zeros(4))
    with pytest.raises(ValueError):
        reconstruction_error(ref, ref[:3])


def test_noise_identity():
    rng = np.random.default_rng(0)
    clean = rng.normal(size=(3, 50)) + 1j * rng.normal(size=(3, 50))
    for level in (0.03, 0.5, 1.0):
        noisy = add_noise(clean, level, SeededRng(7))
        np.testing.assert_allclose(np.abs(noisy - clean), level * np.abs(clean), rtol=1e-14)
    np.testing.assert_array_equal(add_noise(clean, 0.0, SeededRng(7)), clean)
    with pytest.raises(ValueError):
        add_noise(clean, -0.1, SeededRng(7))


def test_noise_determinism_and_seed_dependence():
    clean = np.linspace(1, 2, 20) * (1 + 1j)
    a = add_noise(clean, 0.1, SeededRng(5))
    b = add_noise(clean, 0.1, SeededRng(5))
    c = add_noise(clean, 0.1, SeededRng(6))
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    np.testing.assert_allclose(np.abs(a - clean), np.abs(c - clean), rtol=1e-14)


def synth(noise=0.05, seed=1, freqs=(2e8, 2.5e8)):
    basis = SplineBasis(6, 3, 16.0)
    ref = SurfaceModel(basis, np.array([0.0, 0.03, -0.02, 0.04, 0.0, -0.03]))
    rec = ReceiverArray.from_grid(-8, 8, 1.0, 3.0)
    return synthesize_measurements(ref, Medium(), Medium(4.0, 1.0, 1e-5), IncidentWave(0.0, 8.0), rec, list(freqs), noise, seed, 1.0)


def test_synthesize_measurements_structure():
    data = synth()
    assert data.fields.shape == (2, 17)
    ratio = np.abs(data.fields - data.clean_fields) / np.abs(data.clean_fields)
    np.testing.assert_allclose(ratio, 0.05, rtol=1e-13)
    clean = synth(noise=0.0)
    np.testing.assert_array_equal(clean.fields, clean.clean_fields)
    np.testing.assert_array_equal(clean.clean_fields, data.clean_fields)


def test_noise_stream_per_frequency_is_prefix_stable():
    both = synth(freqs=(2e8, 2.5e8))
    first = synth(freqs=(2e8,))
    np.testing.assert_array_equal(both.fields[0], first.fields[0])


def test_measurement_set_round_trip(tmp_path):
    data = synth()
    data.save(tmp_path / "m.json")
    back = MeasurementSet.load(tmp_path / "m.json")
    np.testing.assert_array_equal(back.fields, data.fields)
    np.testing.assert_array_equal(back.frequencies, data.frequencies)
    np.testing.assert_array_equal(back.receivers.x, data.receivers.x)
    np.testing.assert_array_equal(back.select([2.5e8]), data.fields[1:])
    with pytest.raises(KeyError):
        back.select([3e8])


def test_measurement_set_validation():
    rec = ReceiverArray(np.array([0.0, 1.0]), 2.0)
    with pytest.raises(ValueError):
        MeasurementSet(rec, [2e8], np.zeros((1, 3)))
    with pytest.raises(ValueError):
        MeasurementSet(rec, [3e8, 2e8], np.zeros((2, 2)))


@pytest.mark.parametrize(
    "text, value",
    [("325 MHz", 325e6), ("10 cm", 0.1), ("5 %", 0.05), ("1e-5 S/m", 1e-5), (4.25, 4.25), ("0.7", 0.7), ("1 GHz", 1e9)],
)
def test_parse_quantity(text, value):
    assert parse_quantity(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("bad", ["ten MHz", "5 parsecs", True, None])
def test_parse_quantity_rejects(bad):
    with pytest.raises(ValueError):
        parse_quantity(bad)


def test_config_schema_errors_name_the_path():
    data = tiny_config()
    data["inverse"]["max_iterations"] = 0
    with pytest.raises(ConfigError, match="inverse/max_iterations"):
        ScenarioConfig.from_dict(data)
    with pytest.raises(ConfigError, match="schedule"):
        ScenarioConfig.from_dict({"surface": {"kind": "flat"}})
    bad_units = tiny_config(noise_level="5 furlongs")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(bad_units)
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(tiny_config(schedule={"start": "600 MHz", "step": "25 MHz", "stop": "400 MHz"}))


def test_config_units_and_round_trip():
    cfg = ScenarioConfig.from_dict(tiny_config())
    assert cfg.schedule.start == 200e6
    assert cfg.receivers["step"] == pytest.approx(0.5)
    assert cfg.noise_level == pytest.approx(0.02)
    again = ScenarioConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate(name):
    cfg = ScenarioConfig.from_dict(preset(name))
    assert cfg.name == name
    with pytest.raises(KeyError):
        preset("nope")


def test_single_point_scenario_and_byte_identical_reports(tmp_path):
    cfg = ScenarioConfig.from_dict(tiny_config())
    report = run_scenario(cfg)
    assert len(report.points) == 1
    point = report.points[0]
    assert point.error is None
    assert [r.frequency for r in point.results] == [200e6, 250e6]
    assert all(r.err is not None for r in point.results)

    a = report.write(tmp_path / "a")
    b = run_scenario(cfg).write(tmp_path / "b")
    for name in ("report.json", "err_curve.csv", "profile_f250.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    loaded = json.loads((a / "report.json").read_text())
    assert loaded["points"][0]["final_err"] == point.final_err
    with pytest.raises(FileExistsError):
        report.write(tmp_path / "a")
    report.write(tmp_path / "a", force=True)


def test_sweep_points_and_failure_isolation():
    data = tiny_config(sweep={"axis": "receiver_step", "values": ["1 m", "2 m"]})
    report = run_scenario(ScenarioConfig.from_dict(data))
    assert [p.n_receivers for p in report.points] == [17, 9]

    data = tiny_config(sweep={"axis": "noise_level", "values": ["0 %", "10 %"]})
    report = run_scenario(ScenarioConfig.from_dict(data))
    assert all(p.error is None for p in report.points)
    assert report.points[0].final_err != report.points[1].final_err


def test_flat_scenario_skips_error():
    # same-mesh synthesis makes the flat start an exact fixed point
    data = tiny_config(surface={"kind": "flat", "grid_count": 256}, noise_level=0.0, mesh_factor=1.0)
    report = run_scenario(ScenarioConfig.from_dict(data))
    point = report.points[0]
    assert point.error is None
    assert all(r.err is None and r.iterations == 1 and r.step_norm == 0.0 for r in point.results)
