"""Pure-Python kernels; used when the compiled extension is unavailable.

Must stay numerically in step with ``_kernels.pyx`` (tests compare the two).
Positions are in bins; a component's position is ``m + d``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import (CoincidentFrequencyError, DegenerateInterpolationError,
                     UnresolvableComponentsError)
from .fourier import SINGULAR_DENOMINATOR, tone_spectrum

TWO_PI = 2.0 * math.pi
COINCIDENT_FREQUENCY = 1e-12


def _cis(cycles: float) -> complex:
    return cmath.exp(1j * TWO_PI * cycles)


def coefficient(x: np.ndarray, location: float) -> complex:
    n = x.shape[0]
    cycles = np.mod(location * np.arange(n) / n, 1.0)
    return complex(np.dot(x, np.exp(-2j * np.pi * cycles)) / n)


def am_residual(coef_minus: complex, coef_plus: complex, n: int) -> float:
    diff = coef_plus - coef_minus
    if diff == 0:
        raise DegenerateInterpolationError("X(+0.5) == X(-0.5); interpolation function undefined")
    h = 0.5 * (coef_plus + coef_minus) / diff
    z_inv = math.cos(math.pi / n) - 2j * h * math.sin(math.pi / n)
    if z_inv == 0:
        raise DegenerateInterpolationError("interpolated z^-1 is zero")
    delta = -n / TWO_PI * cmath.phase(z_inv)
    return min(0.5, max(-0.5, delta))


def leakage(amplitude: complex, position: float, location: float, n: int) -> complex:
    if amplitude == 0:
        return 0j
    d = position - location
    den = 1.0 - _cis(math.fmod(d, n) / n)
    if abs(den) < SINGULAR_DENOMINATOR:
        raise CoincidentFrequencyError(f"source tone sits on the target location {location}")
    return amplitude * (1.0 - _cis(d - math.floor(d))) / (n * den)


def amplitude_leakage(amplitude: complex, position: float, own_position: float, n: int) -> complex:
    if amplitude == 0:
        return 0j
    d = position - own_position
    if abs(math.remainder(d / n, 1.0)) < COINCIDENT_FREQUENCY:
        raise CoincidentFrequencyError("two components share a frequency estimate")
    return leakage(amplitude, position, own_position, n)


def _abs2(z: complex) -> float:
    return z.real * z.real + z.imag * z.imag


def _wrap_bins(d: float, n: int) -> float:
    return d - n * math.floor(d / n + 0.5)


def estimate_loop(x: np.ndarray, num_components: int, max_iterations: int,
                  tolerance: float, subtract: bool, init=None):
    """Iterative leakage-subtraction estimator on raw samples.

    ``init``, if given, is a ``(bins, residuals, amplitudes)`` starting state;
    the coarse search is then skipped. Returns ``(bins, residuals, amplitudes, iterations, residual_history,
    position_history)``; the histories have one row per completed iteration.
    """
    x = np.ascontiguousarray(x, dtype=np.complex128)
    n = x.shape[0]
    L = num_components
    spectrum = np.fft.fft(x)
    m = np.zeros(L, dtype=np.int64)
    d = np.zeros(L)
    A = np.zeros(L, dtype=np.complex128)
    if init is not None:
        m[:] = init[0]
        d[:] = init[1]
        A[:] = init[2]
    res_hist = np.zeros((max_iterations, L))
    pos_hist = np.zeros((max_iterations, L))
    iterations = 0

    def clean(p: int, location: float) -> complex:
        c = coefficient(x, location)
        if subtract:
            for l in range(L):
                if l != p:
                    c -= leakage(A[l], m[l] + d[l], location, n)
        return c

    for q in range(max_iterations):
        for p in range(L):
            if q == 0 and init is None:
                work = spectrum.copy()
                for l in range(p):
                    work -= tone_spectrum(A[l], m[l] + d[l], n)
                peak = int(np.argmax(work.real**2 + work.imag**2))
                for l in range(p):
                    if m[l] == peak:
                        raise UnresolvableComponentsError(
                            f"components {l} and {p} both resolve to bin {peak}")
                m[p] = peak
            centre = m[p] + d[p]
            s_plus = clean(p, centre + 0.5)
            s_minus = clean(p, centre - 0.5)
            raw = d[p] + am_residual(s_minus, s_plus, n)
            new = min(0.5, max(-0.5, raw))
            if raw > 0.5 or raw < -0.5:
                step = 1 if raw > 0.5 else -1
                if _abs2(clean(p, float(m[p] + step))) > _abs2(clean(p, float(m[p]))):
                    m[p] = (m[p] + step) % n
                    new = min(0.5, max(-0.5, raw - step))
            d[p] = new
            own = m[p] + d[p]
            a = coefficient(x, own)
            if subtract:
                for l in range(L):
                    if l != p:
                        a -= amplitude_leakage(A[l], m[l] + d[l], own, n)
            A[p] = a
        res_hist[q] = d
        pos_hist[q] = m + d
        iterations = q + 1
        if tolerance > 0 and q >= 1:
            change = max(abs(_wrap_bins(pos_hist[q, l] - pos_hist[q - 1, l], n)) for l in range(L))
            if change < tolerance:
                break
    return m, d, A, iterations, res_hist[:iterations].copy(), pos_hist[:iterations].copy()
