"""Closed-form performance of the iterative leakage-subtraction estimator.

Everything here is asymptotic in N under well-separated components. The
state of the iteration is described by the residual errors ``d_l - nu_l``
(true residual minus current estimate, in bins) of every component; at the
true residuals the estimator is unbiased and its variance is
``pi^2 / (64 rho N^3)``, which is ``(pi^2/4)^2 / 6 ~= 1.0147`` times the
asymptotic CRLB ``6 / (4 pi^2 rho N^3)``.

Component indices in this module are 1-based, matching the usual
``p, l = 1..L`` numbering.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, SingularityError, UnresolvableComponentsError
from .signal import Scenario, wrap_frequency

# Variance at zero residual error divided by the ACRLB.
VARIANCE_RATIO = (0.25 * math.pi**2) ** 2 / 6.0

_POLE = 1e-14


def _cis(cycles: float) -> complex:
    return cmath.exp(2j * math.pi * cycles)


def true_bins(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Nearest DFT bin and residual (bins) of every tone."""
    pos = scenario.frequencies * scenario.num_samples
    m = np.floor(pos + 0.5)
    return m.astype(np.int64), pos - m


@dataclass(frozen=True)
class TheoryQuery:
    """Where to evaluate the theory: a scenario, the current residual errors and a component.

    ``residual_errors[l]`` is ``d_l - nu_l`` in bins for component ``l + 1``;
    ``None`` means every estimate sits on its true residual.
    """

    scenario: Scenario
    residual_errors: tuple[float, ...] | None = None
    component: int = 1

    def __post_init__(self):
        L = self.scenario.num_components
        errs = (0.0,) * L if self.residual_errors is None else tuple(float(e) for e in self.residual_errors)
        if len(errs) != L:
            raise ConfigurationError(f"need {L} residual errors, got {len(errs)}")
        object.__setattr__(self, "residual_errors", errs)
        if not 1 <= self.component <= L:
            raise ConfigurationError(f"component must be in [1, {L}]")

    def estimates(self) -> np.ndarray:
        """Current residual estimates ``nu_l``."""
        _, delta = true_bins(self.scenario)
        return delta - np.asarray(self.residual_errors)


def _check_pair(scenario: Scenario, p: int, l: int) -> None:
    L = scenario.num_components
    if not (1 <= p <= L and 1 <= l <= L):
        raise ConfigurationError(f"component indices must be in [1, {L}]")
    if p == l:
        raise ConfigurationError("interferer must differ from the target component")


def _geometric_ratio(x: float, n: int) -> complex:
    """``(1 - e^{j2pi x}) / (N (1 - e^{j2pi x/N}))``; tends to 1 as x -> 0."""
    den = n * (1.0 - _cis(x / n))
    if abs(den) < _POLE * n:
        return 1.0 + 0j
    return (1.0 - _cis(x)) / den


def _denominator(shift_bins: float, n: int) -> complex:
    den = 1.0 - _cis(shift_bins / n)
    if abs(den) < _POLE:
        raise SingularityError("interferer sits on an interpolation location")
    return den


def beta_terms(scenario: Scenario, p: int, l: int,
               residual_errors: Sequence[float] | None = None) -> tuple[complex, complex]:
    """Normalized leakage mismatch ``(beta_plus, beta_minus)`` of interferer ``l`` on ``p``.

    ``V_pm = (A_l / N) beta_pm`` is what remains of component l's leakage at
    ``m_p + nu_p +- 0.5`` after subtracting its estimate; both vanish when
    ``nu_l = d_l``.
    """
    _check_pair(scenario, p, l)
    query = TheoryQuery(scenario, residual_errors, p)
    n = scenario.num_samples
    m, delta = true_bins(scenario)
    nu = query.estimates()
    M = float(m[l - 1] - m[p - 1])
    d_l, nu_l, nu_p = delta[l - 1], nu[l - 1], nu[p - 1]
    gamma = _geometric_ratio(d_l - nu_l, n)
    out = []
    for half in (0.5, -0.5):
        true_leak = (1.0 + _cis(d_l - nu_p)) / _denominator(M + d_l - nu_p - half, n)
        est_leak = (1.0 + _cis(nu_l - nu_p)) / _denominator(M + nu_l - nu_p - half, n)
        out.append(true_leak - gamma * est_leak)
    return out[0], out[1]


def eta_terms(scenario: Scenario, p: int, l: int,
              residual_errors: Sequence[float] | None = None) -> tuple[complex, complex]:
    """Gains ``(eta_plus, eta_minus)`` carrying interferer l's amplitude noise to p's coefficients."""
    _check_pair(scenario, p, l)
    query = TheoryQuery(scenario, residual_errors, p)
    n = scenario.num_samples
    m, _ = true_bins(scenario)
    nu = query.estimates()
    M = float(m[l - 1] - m[p - 1])
    num = 1.0 + _cis(nu[l - 1] - nu[p - 1])
    return tuple(num / (n * _denominator(M + nu[l - 1] - nu[p - 1] - half, n)) for half in (0.5, -0.5))


def _cos_factor(err: float) -> float:
    c = math.cos(math.pi * err)
    if abs(c) < 1e-12:
        raise SingularityError("residual error of +-0.5 bins puts cos(pi d') at zero")
    return c


def theoretical_bias(query: TheoryQuery) -> float:
    """Asymptotic mean error of ``f_p`` (cycles/sample) at the queried iteration state.

    With ``e = d_p - nu_p``::

        mu = pi (e^2 - 1/4) / (2 N^2 cos(pi e))
             * Im{ e^{-j pi e} sum_{l != p} (A_l / A_p) [(1 - 2e) beta_+ + (1 + 2e) beta_-] }

    Exactly zero when every residual error is zero.
    """
    sc = query.scenario
    p = query.component
    n = sc.num_samples
    e = query.residual_errors[p - 1]
    c = _cos_factor(e)
    amps = sc.amplitudes
    total = 0j
    for l in range(1, sc.num_components + 1):
        if l == p:
            continue
        b_plus, b_minus = beta_terms(sc, p, l, query.residual_errors)
        total += amps[l - 1] / amps[p - 1] * ((1 - 2 * e) * b_plus + (1 + 2 * e) * b_minus)
    if total == 0:
        return 0.0
    return math.pi * (e * e - 0.25) / (2 * n * n * c) * (cmath.exp(-1j * math.pi * e) * total).imag


def theoretical_variance(query: TheoryQuery, exact: bool = False) -> float:
    """Asymptotic variance of ``f_p`` (cycles^2/sample^2).

    Default is ``pi^2 (e^2 - 1/4)^2 (1 + 4 e^2) / (4 rho_p N^3 cos^2(pi e))``.
    ``exact=True`` keeps the O(1/M) corrections from interferer amplitude
    noise, summed over interferers.
    """
    sc = query.scenario
    if sc.noise_variance <= 0:
        raise ConfigurationError("variance needs noise_variance > 0")
    p = query.component
    n = sc.num_samples
    e = query.residual_errors[p - 1]
    c = _cos_factor(e)
    rho = sc.snr(p - 1)
    base = math.pi**2 * (e * e - 0.25) ** 2 / (4 * rho * n**3 * c * c)
    bracket = 1 + 4 * e * e
    if exact:
        for l in range(1, sc.num_components + 1):
            if l == p:
                continue
            eta_p, eta_m = eta_terms(sc, p, l, query.residual_errors)
            bracket -= 0.5 * (1 - 2 * e) ** 2 * abs(eta_p) ** 2
            bracket -= 0.5 * (1 + 2 * e) ** 2 * abs(eta_m) ** 2
            bracket -= 0.5 * (1 - 4 * e * e) * (eta_p.conjugate() * eta_m + eta_p * eta_m.conjugate()).real
    return base * bracket


def acrlb(snr_linear: float, n: int) -> float:
    """Asymptotic CRLB on frequency, ``6 / (4 pi^2 rho N^3)``."""
    if not snr_linear > 0 or n < 1:
        raise ConfigurationError("acrlb needs snr > 0 and n >= 1")
    return 6.0 / (4.0 * math.pi**2 * snr_linear * n**3)


def crlb_single_tone(snr_linear: float, n: int) -> float:
    """Finite-N CRLB for one tone in white noise, ``6 / (4 pi^2 rho N (N^2 - 1))``."""
    if not snr_linear > 0 or n < 2:
        raise ConfigurationError("crlb needs snr > 0 and n >= 2")
    return 6.0 / (4.0 * math.pi**2 * snr_linear * n * (n * n - 1))


def leakage_ratios(scenario: Scenario) -> np.ndarray:
    """``Gamma[l, p] = |A_l|^2 / <N (f_l - f_p)>^2`` (diagonal zero)."""
    n = scenario.num_samples
    f = scenario.frequencies
    bins = np.rint(n * wrap_frequency(f[:, None] - f[None, :]))
    L = len(f)
    off = ~np.eye(L, dtype=bool)
    if np.any(bins[off] == 0):
        raise UnresolvableComponentsError("two components round to the same bin separation of 0")
    gamma = np.zeros((L, L))
    mag2 = np.abs(scenario.amplitudes) ** 2
    gamma[off] = (mag2[:, None] / np.where(off, bins, 1.0) ** 2)[off]
    return gamma


def noise_rate(n: int) -> float:
    return math.sqrt(math.log(n) / n)


def convergence_bound(scenario: Scenario) -> float:
    """Order bound (constant 1) on the contraction rate: ``sqrt(L) max{sqrt(Gamma), sqrt(ln N / N)}``."""
    if scenario.num_components < 2:
        raise ConfigurationError("convergence bound needs at least two components")
    gamma = leakage_ratios(scenario)
    worst = max(math.sqrt(gamma.max()), noise_rate(scenario.num_samples))
    return math.sqrt(scenario.num_components) * worst


def convergence_regime(scenario: Scenario) -> str:
    """``"noise"`` when max Gamma < ln N / N (two iterations suffice), else ``"leakage"``."""
    n = scenario.num_samples
    return "noise" if leakage_ratios(scenario).max() < math.log(n) / n else "leakage"


def implied_iterations(rate: float, tolerance_bins: float, initial_error_bins: float = 0.5) -> float:
    """Sweeps until a change below ``tolerance_bins`` is seen, for errors shrinking by ``rate``.

    After k sweeps the error is at most ``rate^k * initial_error_bins``; one
    more sweep is needed to observe the change, and the early-stop rule never
    stops before sweep 2. Returns ``inf`` when ``rate >= 1``.
    """
    if rate >= 1:
        return math.inf
    if tolerance_bins >= initial_error_bins or rate <= 0:
        return 2.0
    k = math.ceil(math.log(tolerance_bins / initial_error_bins) / math.log(rate))
    return float(max(2, k + 1))


@dataclass(frozen=True)
class TheoryReport:
    bias_freq: float
    variance_freq: float
    crlb_freq: float
    acrlb_freq: float
    variance_to_acrlb_ratio: float
    convergence_bound: float | None
    regime: str | None

    def to_dict(self) -> dict:
        return asdict(self)


def theory_report(query: TheoryQuery, exact: bool = False) -> TheoryReport:
    """Bias, variance, bounds and contraction rate for one component."""
    sc = query.scenario
    p = query.component
    rho = sc.snr(p - 1)
    n = sc.num_samples
    var = theoretical_variance(query, exact)
    bound = regime = None
    if sc.num_components >= 2:
        bound = convergence_bound(sc)
        regime = convergence_regime(sc)
    a = acrlb(rho, n)
    return TheoryReport(
        bias_freq=theoretical_bias(query),
        variance_freq=var,
        crlb_freq=crlb_single_tone(rho, n),
        acrlb_freq=a,
        variance_to_acrlb_ratio=var / a,
        convergence_bound=bound,
        regime=regime,
    )
