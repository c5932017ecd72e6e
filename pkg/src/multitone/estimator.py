"""Iterative leakage-subtraction frequency estimator.

Each component is located by a coarse DFT peak ``m`` plus a fractional
residual ``d`` (in bins), so ``f = (m + d) / N``. The residual comes from
interpolating two Fourier coefficients half a bin either side of the current
position, after the leakage of every other component (predicted from its
current estimate) has been subtracted. Amplitudes are refreshed the same
way. Repeating the sweep over all components shrinks the leakage error
until the estimates settle at the true residuals.

The inner loop lives in a compiled extension (``multitone._kernels``) with a
pure-Python twin (``multitone._kernels_py``). The compiled one is used when
it imports; set ``MULTITONE_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels_py
from .errors import ConfigurationError
from .fourier import _as_array
from .signal import wrap_frequency

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_KERNELS = {"python": _kernels_py}
if _compiled is not None:
    _KERNELS["cython"] = _compiled


def _default_backend() -> str:
    wanted = os.environ.get("MULTITONE_BACKEND", "auto").lower()
    if wanted == "auto":
        return "cython" if "cython" in _KERNELS else "python"
    if wanted not in ("cython", "python"):
        raise ConfigurationError(f"MULTITONE_BACKEND must be auto, cython or python, not {wanted!r}")
    return wanted if wanted in _KERNELS else "python"


BACKEND = _default_backend()


def available_backends() -> list[str]:
    return sorted(_KERNELS)


def _kernels(backend: str | None):
    name = BACKEND if backend is None else backend
    try:
        return _KERNELS[name]
    except KeyError:
        raise ConfigurationError(
            f"backend {name!r} unavailable; have {available_backends()}") from None


@dataclass(frozen=True)
class ToneEstimate:
    """Running state of one component: coarse bin, residual (bins), amplitude."""

    coarse_bin: int
    residual: float
    amplitude: complex
    num_samples: int

    def __post_init__(self):
        if not -0.5 <= self.residual <= 0.5:
            raise ConfigurationError(f"residual {self.residual} outside [-0.5, 0.5]")

    @property
    def position(self) -> float:
        """Location in bins, ``coarse_bin + residual``."""
        return self.coarse_bin + self.residual

    @property
    def frequency(self) -> float:
        return wrap_frequency(self.position / self.num_samples)

    @classmethod
    def from_frequency(cls, frequency: float, amplitude: complex, num_samples: int) -> "ToneEstimate":
        pos = wrap_frequency(frequency) * num_samples
        m = int(math.floor(pos + 0.5))
        return cls(m % num_samples, min(0.5, max(-0.5, pos - m)), complex(amplitude), num_samples)

    def to_dict(self) -> dict:
        return {"coarse_bin": int(self.coarse_bin), "residual": float(self.residual),
                "freq": self.frequency, "amp_re": self.amplitude.real,
                "amp_im": self.amplitude.imag}


@dataclass(frozen=True)
class EstimatorConfig:
    """Number of components L, iteration budget Q and the early-stop threshold.

    ``stop_tolerance_bins = 0`` runs all Q iterations. Otherwise the loop stops
    after iteration ``i >= 2`` once no component moved by more than the
    threshold (in bins) since iteration ``i - 1``.
    """

    num_components: int
    max_iterations: int = 2
    stop_tolerance_bins: float = 0.0

    def __post_init__(self):
        if int(self.num_components) != self.num_components or self.num_components < 1:
            raise ConfigurationError("num_components must be a positive integer")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be a positive integer")
        if not self.stop_tolerance_bins >= 0:
            raise ConfigurationError("stop_tolerance_bins must be >= 0")

    def check(self, num_samples: int) -> None:
        if 4 * self.num_components > num_samples:
            raise ConfigurationError(
                f"L={self.num_components} components need N >= {4 * self.num_components} samples")


@dataclass(frozen=True)
class EstimationResult:
    estimates: tuple[ToneEstimate, ...]
    iterations_run: int
    residual_history: np.ndarray = field(repr=False)
    position_history: np.ndarray = field(repr=False)

    @property
    def num_samples(self) -> int:
        return self.estimates[0].num_samples

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([e.frequency for e in self.estimates])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([e.amplitude for e in self.estimates], dtype=complex)

    def frequency_history(self) -> np.ndarray:
        """Frequencies after each iteration, shape ``(iterations_run, L)``."""
        return wrap_frequency(self.position_history / self.num_samples)

    def to_dict(self) -> dict:
        return {
            "components": [e.to_dict() for e in self.estimates],
            "iterations_run": int(self.iterations_run),
            "residual_history": self.residual_history.tolist(),
        }


def am_interpolate(coef_minus: complex, coef_plus: complex, n: int, *,
                   backend: str | None = None) -> float:
    """Fractional-bin residual from the coefficients at ``-0.5`` and ``+0.5`` bins.

    ``h = (X+ + X-) / (2 (X+ - X-))``, ``z^-1 = cos(pi/N) - 2jh sin(pi/N)`` and
    the residual is ``-(N / 2pi) arg(z^-1)``, clamped to [-0.5, 0.5]. Exact for
    a noiseless single tone.

    Raises
    ------
    DegenerateInterpolationError
        If ``coef_plus == coef_minus``.
    """
    return float(_kernels(backend).am_residual(complex(coef_minus), complex(coef_plus), int(n)))


def leakage_term(source: ToneEstimate, target_location_bins: float, n: int, *,
                 backend: str | None = None) -> complex:
    """Coefficient that the tone described by ``source`` puts at a fractional bin.

    Raises CoincidentFrequencyError if the source sits on the target location.
    """
    return _kernels(backend).leakage(complex(source.amplitude), float(source.position),
                                     float(target_location_bins), int(n))


def estimate_amplitude(buffer, own_freq: float, others: Sequence[ToneEstimate], *,
                       backend: str | None = None) -> complex:
    """Complex amplitude at ``own_freq`` with the other components' leakage removed."""
    if not -0.5 <= own_freq < 0.5:
        raise ConfigurationError(f"own_freq {own_freq} outside [-0.5, 0.5)")
    x = _as_array(buffer)
    n = x.shape[0]
    k = _kernels(backend)
    own = own_freq * n
    amp = k.coefficient(x, own)
    for other in others:
        amp -= k.amplitude_leakage(complex(other.amplitude), float(other.position), own, n)
    return complex(amp)


def _pack(n, m, d, A, iterations, res_hist, pos_hist) -> EstimationResult:
    estimates = tuple(
        ToneEstimate(int(m[i]), float(d[i]), complex(A[i]), n) for i in range(len(m)))
    return EstimationResult(estimates, int(iterations), res_hist, pos_hist)


def _run(buffer, config: EstimatorConfig, subtract: bool, backend, init=None) -> EstimationResult:
    x = _as_array(buffer)
    n = x.shape[0]
    config.check(n)
    out = _kernels(backend).estimate_loop(
        x, int(config.num_components), int(config.max_iterations),
        float(config.stop_tolerance_bins), bool(subtract), init)
    return _pack(n, *out)


def estimate(buffer, config: EstimatorConfig, *, backend: str | None = None) -> EstimationResult:
    """Run the iterative leakage-subtraction estimator.

    Parameters
    ----------
    buffer : SampleBuffer or array_like
        Complex samples ``x(0..N-1)``.
    config : EstimatorConfig
        L, Q and the early-stop threshold.
    backend : {"cython", "python"}, optional
        Kernel implementation; defaults to :data:`BACKEND`.

    Returns
    -------
    EstimationResult
        Estimates in discovery order (descending coarse peak power).

    Raises
    ------
    UnresolvableComponentsError
        Two components land on the same coarse bin.
    CoincidentFrequencyError
        Two estimates collapse onto one frequency.
    """
    return _run(buffer, config, True, backend)


def estimate_no_subtraction(buffer, config: EstimatorConfig, *,
                            backend: str | None = None) -> EstimationResult:
    """Same loop with the interpolation and amplitude leakage terms forced to zero.

    The coarse search still peels off found components, otherwise every
    component would land on the strongest bin.
    """
    return _run(buffer, config, False, backend)


def refine(buffer, estimates: Sequence[ToneEstimate], iterations: int = 1, *,
           subtract: bool = True, backend: str | None = None) -> EstimationResult:
    """Run ``iterations`` further sweeps starting from ``estimates`` (no coarse search)."""
    ests = list(estimates)
    init = (np.array([e.coarse_bin for e in ests], dtype=np.int64),
            np.array([e.residual for e in ests], dtype=float),
            np.array([e.amplitude for e in ests], dtype=complex))
    config = EstimatorConfig(len(ests), iterations)
    return _run(buffer, config, subtract, backend, init)
