# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the iterative leakage-subtraction estimator.

Mirrors ``_kernels_py`` statement for statement; see that module for the
readable version.
"""

import numpy as np

from libc.math cimport cos, sin, floor, fmod, sqrt, atan2, M_PI

from .errors import (CoincidentFrequencyError, DegenerateInterpolationError,
                     UnresolvableComponentsError)

cdef double SINGULAR_DENOMINATOR = 1e-14
cdef double COINCIDENT_FREQUENCY = 1e-12
cdef double TWO_PI = 2.0 * M_PI


cdef inline double complex cis(double cycles) noexcept nogil:
    cdef double t = TWO_PI * cycles
    return cos(t) + 1j * sin(t)


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double clamp_half(double v) noexcept nogil:
    if v > 0.5:
        return 0.5
    if v < -0.5:
        return -0.5
    return v


cdef double complex coefficient_c(const double complex[::1] x, double location) noexcept nogil:
    cdef Py_ssize_t k, n = x.shape[0]
    cdef double c
    cdef double complex acc = 0
    for k in range(n):
        c = location * k / n
        c = c - floor(c)
        acc = acc + x[k] * cis(-c)
    return acc / n


cdef double complex leakage_c(double complex amplitude, double position, double location,
                              Py_ssize_t n):
    cdef double d
    cdef double complex den
    if amplitude == 0:
        return 0
    d = position - location
    den = 1.0 - cis(fmod(d, <double>n) / n)
    if sqrt(cabs2(den)) < SINGULAR_DENOMINATOR:
        raise CoincidentFrequencyError(f"source tone sits on the target location {location}")
    return amplitude * (1.0 - cis(d - floor(d))) / (n * den)


cdef double complex amplitude_leakage_c(double complex amplitude, double position,
                                        double own, Py_ssize_t n):
    cdef double r
    if amplitude == 0:
        return 0
    r = (position - own) / n
    r = r - floor(r + 0.5)
    if r < 0:
        r = -r
    if r < COINCIDENT_FREQUENCY:
        raise CoincidentFrequencyError("two components share a frequency estimate")
    return leakage_c(amplitude, position, own, n)


cdef double am_residual_c(double complex coef_minus, double complex coef_plus,
                          Py_ssize_t n):
    cdef double complex diff = coef_plus - coef_minus
    cdef double complex h, z_inv
    if diff == 0:
        raise DegenerateInterpolationError("X(+0.5) == X(-0.5); interpolation function undefined")
    h = 0.5 * (coef_plus + coef_minus) / diff
    z_inv = cos(M_PI / n) - 2j * h * sin(M_PI / n)
    if z_inv == 0:
        raise DegenerateInterpolationError("interpolated z^-1 is zero")
    return clamp_half(-n / TWO_PI * atan2(z_inv.imag, z_inv.real))


def coefficient(x, double location):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    return complex(coefficient_c(xv, location))


def am_residual(double complex coef_minus, double complex coef_plus, Py_ssize_t n):
    return am_residual_c(coef_minus, coef_plus, n)


def leakage(double complex amplitude, double position, double location, Py_ssize_t n):
    return complex(leakage_c(amplitude, position, location, n))


def amplitude_leakage(double complex amplitude, double position, double own, Py_ssize_t n):
    return complex(amplitude_leakage_c(amplitude, position, own, n))


cdef double complex clean_c(const double complex[::1] x, Py_ssize_t p, double location,
                            const long long[::1] m, const double[::1] d,
                            const double complex[::1] A, bint subtract):
    cdef Py_ssize_t l, L = m.shape[0], n = x.shape[0]
    cdef double complex c = coefficient_c(x, location)
    if subtract:
        for l in range(L):
            if l != p:
                c = c - leakage_c(A[l], m[l] + d[l], location, n)
    return c


def estimate_loop(x, int num_components, int max_iterations, double tolerance, bint subtract,
                  init=None):
    """Compiled twin of ``_kernels_py.estimate_loop``; same arguments and returns."""
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t L = num_components
    cdef Py_ssize_t q, p, l, k, peak, step
    cdef int iterations = 0
    cdef double centre, raw, new, own, best, power, change, diff, u
    cdef double complex s_plus, s_minus, a, num, den, w

    spectrum_arr = np.fft.fft(np.asarray(xv))
    cdef double complex[::1] spectrum = spectrum_arr
    work_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] work = work_arr

    m_arr = np.zeros(L, dtype=np.int64)
    d_arr = np.zeros(L, dtype=np.float64)
    A_arr = np.zeros(L, dtype=np.complex128)
    res_arr = np.zeros((max_iterations, L), dtype=np.float64)
    pos_arr = np.zeros((max_iterations, L), dtype=np.float64)
    cdef long long[::1] m = m_arr
    cdef double[::1] d = d_arr
    cdef double complex[::1] A = A_arr
    cdef double[:, ::1] res_hist = res_arr
    cdef double[:, ::1] pos_hist = pos_arr
    cdef bint seeded = init is not None
    if seeded:
        m_arr[:] = init[0]
        d_arr[:] = init[1]
        A_arr[:] = init[2]

    for q in range(max_iterations):
        for p in range(L):
            if q == 0 and not seeded:
                for k in range(n):
                    work[k] = spectrum[k]
                for l in range(p):
                    u = m[l] + d[l]
                    num = 1.0 - cis(u - floor(u))
                    for k in range(n):
                        den = 1.0 - cis(fmod(u - k, <double>n) / n)
                        if sqrt(cabs2(den)) < SINGULAR_DENOMINATOR:
                            w = A[l] * n
                        else:
                            w = A[l] * num / den
                        work[k] = work[k] - w
                peak = 0
                best = -1.0
                for k in range(n):
                    power = cabs2(work[k])
                    if power > best:
                        best = power
                        peak = k
                for l in range(p):
                    if m[l] == peak:
                        raise UnresolvableComponentsError(
                            f"components {l} and {p} both resolve to bin {peak}")
                m[p] = peak
            centre = m[p] + d[p]
            s_plus = clean_c(xv, p, centre + 0.5, m, d, A, subtract)
            s_minus = clean_c(xv, p, centre - 0.5, m, d, A, subtract)
            raw = d[p] + am_residual_c(s_minus, s_plus, n)
            new = clamp_half(raw)
            if raw > 0.5 or raw < -0.5:
                step = 1 if raw > 0.5 else -1
                if cabs2(clean_c(xv, p, <double>(m[p] + step), m, d, A, subtract)) > \
                        cabs2(clean_c(xv, p, <double>m[p], m, d, A, subtract)):
                    m[p] = (m[p] + step + n) % n
                    new = clamp_half(raw - step)
            d[p] = new
            own = m[p] + d[p]
            a = coefficient_c(xv, own)
            if subtract:
                for l in range(L):
                    if l != p:
                        a = a - amplitude_leakage_c(A[l], m[l] + d[l], own, n)
            A[p] = a
        for l in range(L):
            res_hist[q, l] = d[l]
            pos_hist[q, l] = m[l] + d[l]
        iterations = q + 1
        if tolerance > 0 and q >= 1:
            change = 0.0
            for l in range(L):
                diff = pos_hist[q, l] - pos_hist[q - 1, l]
                diff = diff - n * floor(diff / n + 0.5)
                if diff < 0:
                    diff = -diff
                if diff > change:
                    change = diff
            if change < tolerance:
                break
    return (m_arr, d_arr, A_arr, iterations,
            res_arr[:iterations].copy(), pos_arr[:iterations].copy())
