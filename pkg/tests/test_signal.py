import json
import math

import numpy as np
import pytest

from multitone.errors import ConfigurationError
from multitone.signal import (TABLE2_TONES, SampleBuffer, Scenario, Tone, derive_seed, load_scenario,
                              save_scenario, snr_to_noise_variance, synthesize, table2_scenario,
                              two_tone_scenario, wrap_frequency)


def test_wrap_frequency_range():
    assert wrap_frequency(0.5) == -0.5
    assert wrap_frequency(-0.5) == -0.5
    assert wrap_frequency(1.25) == pytest.approx(0.25)
    w = wrap_frequency(np.linspace(-3, 3, 101))
    assert np.all(w >= -0.5) and np.all(w < 0.5)


def test_tone_wraps_and_rejects_zero_amplitude():
    assert Tone(1.0, 0.75).frequency == pytest.approx(-0.25)
    with pytest.raises(ConfigurationError):
        Tone(0.0, 0.1)
    with pytest.raises(ConfigurationError):
        Tone(1.0, float("nan"))


def test_tone_from_polar():
    t = Tone.from_polar(2.0, math.pi / 2, 0.1)
    assert t.amplitude == pytest.approx(2j)


@pytest.mark.parametrize("kwargs", [
    dict(tones=(), num_samples=64),
    dict(tones=(Tone(1, 0.1),), num_samples=3),
    dict(tones=(Tone(1, 0.1),), num_samples=64, noise_variance=-1.0),
    dict(tones=(Tone(1, 0.25), Tone(2, 1.25)), num_samples=64),
])
def test_scenario_validation(kwargs):
    with pytest.raises(ConfigurationError):
        Scenario(**kwargs)


def test_scenario_properties():
    sc = Scenario((Tone(2.0, 0.1), Tone(1.0, 0.3)), 64, 0.5)
    assert sc.num_components == 2
    assert sc.snr(0) == pytest.approx(8.0)
    assert sc.snr(1) == pytest.approx(2.0)
    assert sc.min_separation() == pytest.approx(0.2)
    assert Scenario((Tone(1, 0.1),), 8).snr() == math.inf


def test_scenario_json_round_trip(tmp_path):
    sc = Scenario((Tone.from_polar(0.5, 1.0, -0.2), Tone(1.0, 0.25)), 32, 0.1)
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert back.num_samples == 32 and back.noise_variance == 0.1
    np.testing.assert_allclose(back.amplitudes, sc.amplitudes, atol=1e-15)
    np.testing.assert_allclose(back.frequencies, sc.frequencies, atol=0)


def test_load_scenario_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 64}))
    with pytest.raises(ConfigurationError):
        load_scenario(bad)
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_scenario(bad)


def test_sample_buffer_is_read_only_copy():
    src = np.ones(8, dtype=complex)
    buf = SampleBuffer(src)
    src[0] = 5
    assert buf.samples[0] == 1
    with pytest.raises(ValueError):
        buf.samples[0] = 2


def test_synthesize_noiseless_matches_model():
    sc = two_tone_scenario(0.1, 5, 64, ratio=0.9, phase=0.3)
    x = synthesize(sc).samples
    n = np.arange(64)
    ref = np.exp(2j * np.pi * 0.1 * n) + 0.9 * np.exp(0.3j) * np.exp(2j * np.pi * (0.1 + 5 / 64) * n)
    np.testing.assert_allclose(x, ref, atol=1e-12)


def test_synthesize_is_seed_deterministic():
    sc = Scenario((Tone(1, 0.1),), 64, 0.5)
    a = synthesize(sc, 7).samples
    b = synthesize(sc, 7).samples
    c = synthesize(sc, 8).samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_noise_is_circular_with_total_variance():
    sc = Scenario((Tone(1e-300, 0.0),), 200_000, 2.0)
    w = synthesize(sc, 3).samples
    assert np.mean(np.abs(w) ** 2) == pytest.approx(2.0, rel=0.02)
    assert np.var(w.real) == pytest.approx(1.0, rel=0.02)
    assert abs(np.mean(w * w)) < 0.02


def test_snr_conversion():
    assert snr_to_noise_variance(1.0, 20.0) == pytest.approx(0.01)
    assert snr_to_noise_variance(2.0, 0.0) == pytest.approx(4.0)
    with pytest.raises(ConfigurationError):
        snr_to_noise_variance(0.0, 10.0)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(1, r, s) for r in range(200) for s in range(2)}
    assert len(seeds) == 400


def test_two_tone_scenario_layout():
    sc = two_tone_scenario(-0.48, 6.4, 64, ratio=0.5, snr_db=10)
    assert sc.frequencies[1] - sc.frequencies[0] == pytest.approx(0.1)
    assert abs(sc.amplitudes[1]) == pytest.approx(0.5)
    assert sc.snr(0) == pytest.approx(10.0)


def test_table2_scenario():
    sc = table2_scenario()
    assert sc.num_components == 15 == len(TABLE2_TONES)
    assert sc.snr(0) == pytest.approx(10 ** 0.5)
    assert table2_scenario(snr_db=None).noise_variance == 0.0
