"""Multi-tone test signals with seeded circular complex Gaussian noise.

A :class:`Scenario` holds the ground truth (tones, record length, noise
variance) and :func:`synthesize` turns it into a :class:`SampleBuffer`.
Noise variance is the *total* complex variance: each quadrature gets half,
so ``E|w(n)|^2 = noise_variance`` and the SNR of a tone is
``|A|^2 / noise_variance``.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``.
Monte Carlo run ``r`` of an experiment with base seed ``b`` uses
``derive_seed(b, r, ...)``, so every run can be regenerated on its own and
in any order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError

MIN_SAMPLES = 4

# Table II: (amplitude, frequency) of the 15-component scenario. SNR of the
# first component is 5 dB; the others share its noise variance.
TABLE2_TONES = (
    (1.0000, -0.3071),
    (0.6379, -0.2623),
    (0.3825, -0.2082),
    (0.8980, -0.1609),
    (0.6046, -0.1204),
    (0.9748, -0.0855),
    (0.4310, -0.0414),
    (0.5777, -0.0080),
    (0.9284, 0.0404),
    (0.8939, 0.0785),
    (0.3282, 0.1098),
    (0.4311, 0.1655),
    (0.6182, 0.2166),
    (0.8352, 0.2683),
    (0.8690, 0.3148),
)


def wrap_frequency(f):
    """Wrap normalized frequency (scalar or array) into [-0.5, 0.5)."""
    w = np.mod(np.asarray(f, dtype=float) + 0.5, 1.0) - 0.5
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class Tone:
    """One complex exponential ``amplitude * exp(j 2 pi frequency n)``."""

    amplitude: complex
    frequency: float

    def __post_init__(self):
        amp = complex(self.amplitude)
        freq = float(self.frequency)
        if not (math.isfinite(amp.real) and math.isfinite(amp.imag)) or abs(amp) == 0:
            raise ConfigurationError(f"tone amplitude must be finite and nonzero, got {amp!r}")
        if not math.isfinite(freq):
            raise ConfigurationError(f"tone frequency must be finite, got {freq!r}")
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "frequency", wrap_frequency(freq))

    @classmethod
    def from_polar(cls, magnitude: float, phase_rad: float, frequency: float) -> "Tone":
        return cls(magnitude * complex(math.cos(phase_rad), math.sin(phase_rad)), frequency)


@dataclass(frozen=True)
class Scenario:
    """Ground truth for one signal: tones, record length N and noise variance."""

    tones: tuple[Tone, ...]
    num_samples: int
    noise_variance: float = 0.0

    def __post_init__(self):
        tones = tuple(self.tones)
        object.__setattr__(self, "tones", tones)
        if len(tones) < 1:
            raise ConfigurationError("scenario needs at least one tone")
        if int(self.num_samples) != self.num_samples or self.num_samples < MIN_SAMPLES:
            raise ConfigurationError(f"num_samples must be an integer >= {MIN_SAMPLES}")
        object.__setattr__(self, "num_samples", int(self.num_samples))
        if not (self.noise_variance >= 0 and math.isfinite(self.noise_variance)):
            raise ConfigurationError("noise_variance must be finite and >= 0")
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        freqs = [t.frequency for t in tones]
        for i in range(len(freqs)):
            for k in range(i + 1, len(freqs)):
                if abs(wrap_frequency(freqs[i] - freqs[k])) == 0:
                    raise ConfigurationError(f"tones {i} and {k} share frequency {freqs[i]}")

    @property
    def num_components(self) -> int:
        return len(self.tones)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([t.frequency for t in self.tones])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([t.amplitude for t in self.tones], dtype=complex)

    def snr(self, component: int = 0) -> float:
        """Linear SNR ``|A|^2 / sigma^2`` of one component (inf when noiseless)."""
        power = abs(self.tones[component].amplitude) ** 2
        if self.noise_variance == 0:
            return math.inf
        return power / self.noise_variance

    def min_separation(self) -> float:
        """Smallest wrapped pairwise frequency gap (inf for a single tone)."""
        f = self.frequencies
        if len(f) < 2:
            return math.inf
        d = np.abs(wrap_frequency(f[:, None] - f[None, :]))
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    def to_dict(self) -> dict:
        return {
            "n": self.num_samples,
            "noise_variance": self.noise_variance,
            "tones": [
                {"amp": abs(t.amplitude), "phase_rad": math.atan2(t.amplitude.imag, t.amplitude.real),
                 "freq": t.frequency}
                for t in self.tones
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        try:
            tones = tuple(
                Tone.from_polar(float(t["amp"]), float(t.get("phase_rad", 0.0)), float(t["freq"]))
                for t in doc["tones"]
            )
            return cls(tones, int(doc["n"]), float(doc.get("noise_variance", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"malformed scenario document: {exc}") from exc


@dataclass(frozen=True)
class SampleBuffer:
    """Read-only length-N complex time series."""

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128, copy=True).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return Scenario.from_dict(doc)


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def snr_to_noise_variance(amplitude_mag: float, snr_db: float) -> float:
    """Noise variance giving a tone of magnitude ``amplitude_mag`` the SNR ``snr_db``."""
    if not amplitude_mag > 0:
        raise ConfigurationError("amplitude magnitude must be positive")
    return amplitude_mag**2 / 10.0 ** (snr_db / 10.0)


def derive_seed(base_seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``(base_seed, *keys)``."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def tone_samples(amplitude: complex, frequency: float, n: int) -> np.ndarray:
    """Noiseless samples of one tone. Phase is reduced mod 1 cycle before scaling."""
    k = np.arange(n)
    cycles = np.mod(frequency * k, 1.0)
    return amplitude * np.exp(2j * np.pi * cycles)


def synthesize(scenario: Scenario, seed: int = 0) -> SampleBuffer:
    """Draw ``x(n) = sum_l A_l exp(j 2 pi f_l n) + w(n)`` for ``n = 0..N-1``.

    Parameters
    ----------
    scenario : Scenario
        Tones, record length and total complex noise variance.
    seed : int
        Seed for the PCG64 noise stream. Same seed, same buffer, bit for bit.

    Returns
    -------
    SampleBuffer
    """
    if not isinstance(scenario, Scenario):
        raise ConfigurationError("synthesize expects a Scenario")
    n = scenario.num_samples
    x = np.zeros(n, dtype=np.complex128)
    for tone in scenario.tones:
        x += tone_samples(tone.amplitude, tone.frequency, n)
    if scenario.noise_variance > 0:
        rng = make_rng(seed)
        scale = math.sqrt(scenario.noise_variance / 2.0)
        noise = rng.standard_normal((2, n))
        x += scale * (noise[0] + 1j * noise[1])
    return SampleBuffer(x)


def two_tone_scenario(f1: float, separation_bins: float, n: int, *, ratio: float = 1.0,
                      phase: float = 0.0, snr_db: float | None = None) -> Scenario:
    """``exp(j2pi f1 n) + a exp(j phi) exp(j2pi (f1 + v) n)`` with ``v = separation_bins / n``.

    ``snr_db`` is the SNR of the first (unit) tone; ``None`` means noiseless.
    """
    tones = (Tone(1.0, f1), Tone.from_polar(ratio, phase, f1 + separation_bins / n))
    sigma2 = 0.0 if snr_db is None else snr_to_noise_variance(1.0, snr_db)
    return Scenario(tones, n, sigma2)


def table2_scenario(n: int = 64, snr_db: float | None = 5.0,
                    phases: Iterable[float] | None = None) -> Scenario:
    """The fixed 15-component scenario; ``snr_db`` refers to component 1."""
    phases = [0.0] * len(TABLE2_TONES) if phases is None else list(phases)
    tones = tuple(Tone.from_polar(a, ph, f) for (a, f), ph in zip(TABLE2_TONES, phases))
    sigma2 = 0.0 if snr_db is None else snr_to_noise_variance(1.0, snr_db)
    return Scenario(tones, n, sigma2)


def replace_tones(scenario: Scenario, tones: Sequence[Tone]) -> Scenario:
    return Scenario(tuple(tones), scenario.num_samples, scenario.noise_variance)
