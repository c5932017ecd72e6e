import math

import numpy as np
import pytest

from multitone.estimator import available_backends

BACKENDS = available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def direct_coefficient(x, location):
    """Reference ``(1/N) sum_n x(n) exp(-j 2 pi location n / N)`` with per-term phase reduction."""
    x = np.asarray(x, dtype=complex)
    n = len(x)
    total = 0j
    for k in range(n):
        cycles = math.fmod(location * k, n) / n
        total += x[k] * complex(math.cos(2 * math.pi * cycles), -math.sin(2 * math.pi * cycles))
    return total / n


def direct_dft(x):
    """O(N^2) DFT with integer phase indices reduced mod N before scaling."""
    x = np.asarray(x, dtype=complex)
    n = len(x)
    idx = np.mod(np.outer(np.arange(n), np.arange(n)), n)
    return np.exp(-2j * np.pi * idx / n) @ x


def wrapped_abs(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b) + 0.5, 1.0) - 0.5
    return np.abs(d)
