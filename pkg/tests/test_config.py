import numpy as np
import pytest

from nvmag.config import DEFAULT_PRESET, load_config, parse_config
from nvmag.errors import ConfigError


def test_preset_preset():
    cfg = load_config("paper")
    assert cfg.sensor.fl_photocurrent == 6.4e-3
    assert cfg.sensor.zero_crossing_slope == 332e-12
    assert cfg.budget.p1 == 5.0e-19 and cfg.budget.p2 == 5.0e-17
    assert cfg.budget.p1_std == pytest.approx(0.6e-19)
    assert cfg.synth is not None and cfg.synth.duration == 5.0
    assert cfg.synth.line_harmonics == ((50.0, 200e-12), (100.0, 50e-12), (150.0, 20e-12))
    assert cfg.synth.servo is None
    assert [c for c, _ in cfg.filters.notches] == [50.0, 100.0, 150.0]
    assert cfg.filters.bandpass == (5.0, 100.0, 2)
    assert cfg.format == "csv"


def test_preset_matches_library_defaults():
    from nvmag.dsp_spectral import FilterChain
    from nvmag.trace_synth import preset_synth_spec

    cfg = load_config("paper")
    ref = preset_synth_spec()
    assert cfg.sensor == ref.sensor
    assert cfg.synth.line_harmonics == ref.line_harmonics
    assert cfg.synth.drift == ref.drift
    assert cfg.filters == FilterChain.standard()


def test_file_round_trip(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(DEFAULT_PRESET.replace("seed = 0", "seed = 9"))
    cfg = load_config(p)
    assert cfg.seed == 9 and cfg.synth.seed == 9
    assert cfg.with_seed(3).synth.seed == 3


def test_missing_sections_default_and_synth_absent():
    cfg = parse_config("[sensor]\nfl_photocurrent_a = 1e-3\n")
    assert cfg.sensor.fl_photocurrent == 1e-3
    assert cfg.synth is None


@pytest.mark.parametrize(
    "text",
    [
        "[sensors]\nx = 1\n",
        "[sensor]\nfl_photocurrent = 1e-3\n",
        "[sensor]\nfl_photocurrent_a = lots\n",
        "[synth]\nduration_s = 0\n",
        "[synth]\nline_harmonics_hz_t = 50\n",
        "[output]\nformat = xml\n",
        "not an ini file",
    ],
)
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/c.ini")


def test_notch_options():
    cfg = parse_config("[filters]\nnotch_centers_hz = none\nbandpass_lo_hz = 1\nbandpass_hi_hz = 50\n")
    assert cfg.filters.notches == () and cfg.filters.bandpass == (1.0, 50.0, 2)
    cfg = parse_config("[filters]\nnotch_centers_hz = 60, 120\nnotch_q = 10\n")
    assert cfg.filters.notches == ((60.0, 10.0), (120.0, 10.0))
    assert cfg.filters.bandpass is None


def test_servo_and_injected():
    cfg = parse_config("[synth]\nservo = on\nservo_loop_bw_hz = 1\ninjected_signals_hz_t_rad = 40:1e-10:0.5\n")
    assert cfg.synth.servo.loop_bandwidth == 1.0
    assert cfg.synth.injected_signals == ((40.0, 1e-10, 0.5),)
    assert np.isclose(cfg.budget.p1, 5.0e-19)
