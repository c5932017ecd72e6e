"""Multi-component frequency estimation by iterative leakage subtraction."""

from .errors import (CoincidentFrequencyError, ConfigurationError, DegenerateInterpolationError,
                     MultitoneError, NumericalError, SingularityError, UnresolvableComponentsError)
from .estimator import (BACKEND, EstimationResult, EstimatorConfig, ToneEstimate, am_interpolate,
                        available_backends, estimate, estimate_amplitude, estimate_no_subtraction,
                        leakage_term, refine)
from .fourier import Spectrum, coarse_peak, coefficient_at, dft, tone_coefficient, tone_spectrum
from .harness import (Experiment, SweepResult, convergence_study, match_estimates,
                      run_experiment)
from .signal import SampleBuffer, Scenario, Tone, load_scenario, save_scenario, synthesize
from .theory import (TheoryQuery, acrlb, beta_terms, convergence_bound, crlb_single_tone,
                     eta_terms, theoretical_bias, theoretical_variance, theory_report)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CoincidentFrequencyError", "ConfigurationError", "DegenerateInterpolationError",
    "EstimationResult", "EstimatorConfig", "Experiment", "MultitoneError", "NumericalError",
    "SampleBuffer", "Scenario", "SingularityError", "Spectrum", "SweepResult", "TheoryQuery",
    "Tone", "ToneEstimate", "UnresolvableComponentsError", "acrlb", "am_interpolate",
    "available_backends", "beta_terms", "coarse_peak", "coefficient_at", "convergence_bound",
    "convergence_study", "crlb_single_tone", "dft", "estimate", "estimate_amplitude",
    "estimate_no_subtraction", "eta_terms", "leakage_term", "load_scenario", "match_estimates",
    "refine", "run_experiment", "save_scenario", "synthesize", "theoretical_bias",
    "theoretical_variance", "theory_report", "tone_coefficient", "tone_spectrum",
]
