"""DFT, periodogram peak and fractional-bin Fourier coefficients.

Conventions differ on purpose: :func:`dft` is the unnormalized transform
``X(k) = sum_n x(n) exp(-j 2 pi k n / N)`` while :func:`coefficient_at`
carries a ``1/N`` factor, so ``coefficient_at(x, k) == dft(x)[k] / N``.
Locations are in bins and may be any real number; everything is periodic
in the location with period N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal import SampleBuffer

# |1 - exp(j 2 pi d / N)| below this counts as "on top of the tone".
SINGULAR_DENOMINATOR = 1e-14


def _as_array(buffer) -> np.ndarray:
    if isinstance(buffer, SampleBuffer):
        return buffer.samples
    return np.asarray(buffer, dtype=np.complex128).reshape(-1)


@dataclass(frozen=True)
class Spectrum:
    """Unnormalized N-point DFT bins ``X(k)``, ``k = 0..N-1``."""

    bins: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.bins.shape[0]

    def periodogram(self) -> np.ndarray:
        return np.abs(self.bins) ** 2


def dft(buffer) -> Spectrum:
    """N-point DFT (any N; numpy's pocketfft handles primes via Bluestein)."""
    bins = np.fft.fft(_as_array(buffer))
    bins.setflags(write=False)
    return Spectrum(bins)


def coefficient_at(buffer, location: float) -> complex:
    """``(1/N) sum_n x(n) exp(-j 2 pi location n / N)`` by direct summation."""
    x = _as_array(buffer)
    n = x.shape[0]
    cycles = np.mod(location * np.arange(n) / n, 1.0)
    return complex(np.dot(x, np.exp(-2j * np.pi * cycles)) / n)


def coarse_peak(spectrum) -> int:
    """Index of the largest ``|X(k)|^2``; ties go to the smallest k."""
    bins = spectrum.bins if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    if bins.size == 0:
        raise ValueError("empty spectrum")
    return int(np.argmax(bins.real**2 + bins.imag**2))


def tone_coefficient(amplitude: complex, position: float, location: float, n: int) -> complex:
    """Closed-form ``coefficient_at`` of a noiseless tone.

    The tone sits at ``position`` bins (``f = position / n``); the coefficient
    is taken at ``location`` bins::

        (A / N) (1 - exp(j 2 pi d)) / (1 - exp(j 2 pi d / N)),   d = position - location

    When ``d`` is a multiple of N the quotient's limit ``A`` is returned.
    """
    d = position - location
    den = 1.0 - np.exp(2j * np.pi * (np.mod(d, n) / n))
    if abs(den) < SINGULAR_DENOMINATOR:
        return complex(amplitude)
    num = 1.0 - np.exp(2j * np.pi * np.mod(d, 1.0))
    return complex(amplitude * num / (n * den))


def tone_spectrum(amplitude: complex, position: float, n: int) -> np.ndarray:
    """Closed-form DFT bins (unnormalized) of a noiseless tone at ``position`` bins."""
    d = position - np.arange(n)
    den = 1.0 - np.exp(2j * np.pi * (np.mod(d, n) / n))
    num = 1.0 - np.exp(2j * np.pi * np.mod(position, 1.0))
    out = np.empty(n, dtype=np.complex128)
    on_bin = np.abs(den) < SINGULAR_DENOMINATOR
    out[~on_bin] = amplitude * num / den[~on_bin]
    out[on_bin] = amplitude * n
    return out
