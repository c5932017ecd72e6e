"""Seeded Monte Carlo experiments: RMSE/bias sweeps and convergence studies.

Run ``r`` of an experiment draws its random scenario parameters from
``derive_seed(base_seed, r, 0)`` and its noise from ``derive_seed(base_seed,
r, 1)``. Grid points share these streams (common random numbers), and
results are reduced in (grid point, run) order after all runs finish, so the
output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigurationError, NumericalError
from .estimator import EstimatorConfig, ToneEstimate, estimate, estimate_no_subtraction
from .signal import (Scenario, Tone, derive_seed, make_rng, snr_to_noise_variance, synthesize,
                     table2_scenario, two_tone_scenario, wrap_frequency)
from .theory import (TheoryQuery, acrlb, convergence_bound, crlb_single_tone, implied_iterations,
                     theoretical_variance)

log = logging.getLogger(__name__)

SWEEP_PARAMS = ("snr_db", "separation_bins", "n")
RANDOM_FIELDS = ("f1", "phase", "snr")
ESTIMATORS = {"subtracting": estimate, "no_subtraction": estimate_no_subtraction}
WORKERS_ENV = "MULTITONE_WORKERS"

CSV_COLUMNS = ("grid_value", "component", "rmse", "bias", "crlb", "acrlb", "theory_var",
               "mean_iters", "failures", "runs", "median_abs_error")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer") from None


@dataclass(frozen=True)
class Experiment:
    """One Monte Carlo design.

    ``snr_db`` is the SNR of the first template tone and sets the noise
    variance (``None`` keeps the template's). ``stop_tolerance`` is a
    threshold in bins, or ``"crlb"`` for ``N * sqrt(ACRLB)`` of the first
    tone in each run.
    """

    template: Scenario
    sweep: str
    grid: tuple[float, ...]
    runs: int
    base_seed: int = 0
    snr_db: float | None = None
    randomize: frozenset = frozenset()
    snr_range_db: tuple[float, float] = (0.0, 50.0)
    estimator: str = "subtracting"
    q: int = 2
    stop_tolerance: float | str = 0.0
    name: str = "experiment"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        object.__setattr__(self, "randomize", frozenset(self.randomize))
        if self.sweep not in SWEEP_PARAMS:
            raise ConfigurationError(f"sweep must be one of {SWEEP_PARAMS}, not {self.sweep!r}")
        if not self.grid:
            raise ConfigurationError("sweep grid is empty")
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.q < 1:
            raise ConfigurationError("q must be >= 1")
        unknown = self.randomize - set(RANDOM_FIELDS)
        if unknown:
            raise ConfigurationError(f"unknown randomized fields {sorted(unknown)}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {sorted(ESTIMATORS)}")
        if self.sweep == "separation_bins" and self.template.num_components < 2:
            raise ConfigurationError("separation sweep needs at least two tones")
        if isinstance(self.stop_tolerance, str):
            if self.stop_tolerance != "crlb":
                raise ConfigurationError("stop_tolerance must be a number or 'crlb'")
        elif not self.stop_tolerance >= 0:
            raise ConfigurationError("stop_tolerance must be >= 0")

    def scenario_at(self, value: float, rng: np.random.Generator | None = None) -> Scenario:
        """Scenario for one grid point; ``rng`` draws the randomized fields (f1, phases, snr)."""
        tpl = self.template
        n = int(value) if self.sweep == "n" else tpl.num_samples
        freqs = tpl.frequencies.copy()
        amps = tpl.amplitudes.copy()
        snr = self.snr_db
        if self.sweep == "separation_bins":
            freqs = freqs[0] + np.arange(len(freqs)) * value / n
        elif self.sweep == "snr_db":
            snr = value
        if rng is not None:
            if "f1" in self.randomize:
                freqs = freqs + (rng.uniform(-0.5, 0.5) - freqs[0])
            if "phase" in self.randomize:
                amps = amps * np.exp(1j * rng.uniform(-np.pi, np.pi, len(amps)))
            if "snr" in self.randomize:
                snr = rng.uniform(*self.snr_range_db)
        elif "snr" in self.randomize and snr is None:
            snr = 0.5 * (self.snr_range_db[0] + self.snr_range_db[1])
        if snr is None:
            sigma2 = tpl.noise_variance
        else:
            sigma2 = snr_to_noise_variance(abs(amps[0]), snr)
        return Scenario(tuple(Tone(a, f) for a, f in zip(amps, freqs)), n, sigma2)

    def tolerance_bins(self, scenario: Scenario) -> float:
        if self.stop_tolerance != "crlb":
            return float(self.stop_tolerance)
        if scenario.noise_variance == 0:
            return 1e-12
        return scenario.num_samples * math.sqrt(acrlb(scenario.snr(0), scenario.num_samples))


@dataclass(frozen=True)
class Pairing:
    """``order[i]`` is the estimate matched to truth component ``i``."""

    order: np.ndarray
    errors: np.ndarray
    cost: float


def _assign(truth_freqs: np.ndarray, est_freqs: np.ndarray) -> Pairing:
    dist = np.abs(wrap_frequency(est_freqs[None, :] - truth_freqs[:, None]))
    rows, cols = linear_sum_assignment(dist)
    order = cols[np.argsort(rows)]
    errors = wrap_frequency(est_freqs[order] - truth_freqs)
    return Pairing(order, np.atleast_1d(errors), float(dist[rows, cols].sum()))


def match_estimates(truth: Sequence[Tone], estimates: Sequence[ToneEstimate]) -> Pairing:
    """Minimum total wrapped-distance assignment of estimates to true tones."""
    if len(truth) != len(estimates):
        raise ConfigurationError("truth and estimates differ in length")
    return _assign(np.array([t.frequency for t in truth]), np.array([e.frequency for e in estimates]))


@dataclass
class RunBatch:
    """Raw per-run outcomes for one grid point, indexed by run."""

    errors: np.ndarray        # (runs, q, L) signed wrapped frequency error per iteration
    iterations: np.ndarray    # (runs,)
    failed: np.ndarray        # (runs,) bool
    tolerance: np.ndarray     # (runs,) stop threshold in bins
    bound: np.ndarray         # (runs,) convergence_bound of the run's scenario (nan for L=1)


def _simulate(exp: Experiment, value: float, run: int):
    rng = make_rng(derive_seed(exp.base_seed, run, 0))
    sc = exp.scenario_at(value, rng)
    buf = synthesize(sc, derive_seed(exp.base_seed, run, 1))
    tol = exp.tolerance_bins(sc)
    L = sc.num_components
    bound = convergence_bound(sc) if L >= 2 else math.nan
    errs = np.full((exp.q, L), np.nan)
    try:
        res = ESTIMATORS[exp.estimator](buf, EstimatorConfig(L, exp.q, tol))
    except NumericalError as exc:
        log.debug("run %d at %s failed: %s", run, value, exc)
        return errs, 0, True, tol, bound
    hist = res.frequency_history()
    truth = sc.frequencies
    for i in range(exp.q):
        errs[i] = _assign(truth, hist[min(i, res.iterations_run - 1)]).errors
    return errs, res.iterations_run, False, tol, bound


def _simulate_chunk(exp: Experiment, value: float, start: int, stop: int):
    return [_simulate(exp, value, r) for r in range(start, stop)]


def _collect(exp: Experiment, value: float, outcomes) -> RunBatch:
    return RunBatch(
        errors=np.stack([o[0] for o in outcomes]),
        iterations=np.array([o[1] for o in outcomes], dtype=np.int64),
        failed=np.array([o[2] for o in outcomes], dtype=bool),
        tolerance=np.array([o[3] for o in outcomes]),
        bound=np.array([o[4] for o in outcomes]),
    )


def simulate_runs(exp: Experiment, workers: int | None = None) -> list[RunBatch]:
    """All runs at every grid point, in grid order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1:
        return [_collect(exp, v, _simulate_chunk(exp, v, 0, exp.runs)) for v in exp.grid]
    chunk = max(1, math.ceil(exp.runs / (4 * workers)))
    bounds = [(s, min(s + chunk, exp.runs)) for s in range(0, exp.runs, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [[pool.submit(_simulate_chunk, exp, v, a, b) for a, b in bounds] for v in exp.grid]
        return [_collect(exp, v, [o for f in fs for o in f.result()])
                for v, fs in zip(exp.grid, futures)]


@dataclass
class ComponentStats:
    component: int
    rmse: float
    bias: float
    bias_se: float
    variance: float
    median_abs_error: float
    rmse_by_iteration: list[float]
    crlb: float
    acrlb: float
    theory_var: float


@dataclass
class SweepPoint:
    grid_value: float
    runs: int
    failures: int
    mean_iters: float
    components: list[ComponentStats]
    batch: RunBatch = field(repr=False)


@dataclass
class SweepResult:
    experiment: Experiment
    points: list[SweepPoint]

    def rows(self):
        for pt in self.points:
            for c in pt.components:
                yield (pt.grid_value, c.component, c.rmse, c.bias, c.crlb, c.acrlb, c.theory_var,
                       pt.mean_iters, pt.failures, pt.runs, c.median_abs_error)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in self.rows():
                w.writerow([_fmt(v) for v in row])

    def summary(self) -> dict:
        exp = self.experiment
        return {
            "name": exp.name,
            "sweep": exp.sweep,
            "runs": exp.runs,
            "base_seed": exp.base_seed,
            "estimator": exp.estimator,
            "q": exp.q,
            "points": [
                {"grid_value": pt.grid_value, "failures": pt.failures, "mean_iters": pt.mean_iters,
                 "components": [
                     {k: v for k, v in c.__dict__.items()} for c in pt.components]}
                for pt in self.points
            ],
        }


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _overlays(exp: Experiment, value: float, component: int):
    sc = exp.scenario_at(value)
    if sc.noise_variance == 0:
        return 0.0, 0.0, 0.0
    rho, n = sc.snr(component), sc.num_samples
    var = theoretical_variance(TheoryQuery(sc, None, component + 1))
    return crlb_single_tone(rho, n), acrlb(rho, n), var


def summarize(exp: Experiment, value: float, batch: RunBatch) -> SweepPoint:
    ok = ~batch.failed
    good = batch.errors[ok]             # (runs_ok, q, L)
    final = good[:, -1, :] if good.size else np.empty((0, batch.errors.shape[2]))
    comps = []
    for l in range(batch.errors.shape[2]):
        e = final[:, l]
        k = e.size
        crlb, ac, tv = _overlays(exp, value, l)
        comps.append(ComponentStats(
            component=l + 1,
            rmse=float(np.sqrt(np.mean(e**2))) if k else math.nan,
            bias=float(np.mean(e)) if k else math.nan,
            bias_se=float(np.std(e, ddof=1) / math.sqrt(k)) if k > 1 else math.nan,
            variance=float(np.var(e, ddof=1)) if k > 1 else math.nan,
            median_abs_error=float(np.median(np.abs(e))) if k else math.nan,
            rmse_by_iteration=[float(np.sqrt(np.mean(good[:, i, l] ** 2))) if k else math.nan
                               for i in range(good.shape[1])],
            crlb=crlb, acrlb=ac, theory_var=tv,
        ))
    return SweepPoint(value, len(batch.failed), int(batch.failed.sum()),
                      float(batch.iterations[ok].mean()) if ok.any() else math.nan, comps, batch)


def run_experiment(exp: Experiment, workers: int | None = None) -> SweepResult:
    """Simulate every grid point and reduce to per-component statistics.

    Estimator failures (coarse-bin collisions and other numerical errors)
    are counted per grid point and left out of the error statistics.
    """
    batches = simulate_runs(exp, workers)
    return SweepResult(exp, [summarize(exp, v, b) for v, b in zip(exp.grid, batches)])


@dataclass
class ConvergencePoint:
    n: int
    mean_iterations: float
    implied_iterations: float
    bound: float
    failures: int


def convergence_study(exp: Experiment, workers: int | None = None) -> list[ConvergencePoint]:
    """Mean sweeps until the early-stop rule fires, per record length N.

    ``implied_iterations`` is the run-average of the sweep count the
    contraction-rate bound predicts for that run's stop threshold.
    """
    if exp.sweep != "n":
        raise ConfigurationError("convergence study sweeps n")
    if exp.stop_tolerance == 0:
        raise ConfigurationError("convergence study needs a stop tolerance")
    out = []
    for v, b in zip(exp.grid, simulate_runs(exp, workers)):
        ok = ~b.failed
        implied = [implied_iterations(r, t) for r, t in zip(b.bound[ok], b.tolerance[ok])]
        out.append(ConvergencePoint(
            n=int(v),
            mean_iterations=float(b.iterations[ok].mean()) if ok.any() else math.nan,
            implied_iterations=float(np.mean(implied)) if implied else math.nan,
            bound=float(np.nanmean(b.bound)),
            failures=int(b.failed.sum()),
        ))
    return out


def write_convergence_csv(studies, path) -> None:
    """``studies`` is a sequence of ``(separation, points)`` pairs; one row per (separation, N)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("separation", "n", "mean_iters", "implied_iters", "bound", "failures"))
        for sep, points in studies:
            for p in points:
                w.writerow([_fmt(math.nan if sep is None else sep), p.n, _fmt(p.mean_iterations),
                            _fmt(p.implied_iterations), _fmt(p.bound), p.failures])


# -- config files -----------------------------------------------------------------------------

def _template(doc: dict) -> Scenario:
    if "scenario" in doc:
        return Scenario.from_dict(doc["scenario"])
    model = doc.get("model")
    if not isinstance(model, dict):
        raise ConfigurationError("config needs a 'scenario' or a 'model'")
    kind = model.get("type")
    n = int(model.get("n", 64))
    if kind == "two_tone":
        return two_tone_scenario(float(model.get("f1", 0.1)), float(model["separation_bins"]), n,
                                 ratio=float(model.get("ratio", 1.0)))
    if kind == "table2":
        return table2_scenario(n, None)
    if kind == "single":
        return Scenario((Tone(1.0, float(model.get("freq", 0.1))),), n)
    raise ConfigurationError(f"unknown model type {kind!r}")


def experiments_from_config(doc: dict) -> list[Experiment]:
    """Experiments described by a config document (several for a multi-separation study)."""
    try:
        sweep = doc["sweep"]
        common = dict(
            sweep=sweep["param"],
            grid=tuple(sweep["values"]),
            runs=int(doc["runs"]),
            base_seed=int(doc.get("base_seed", 0)),
            snr_db=None if doc.get("snr_db") is None else float(doc["snr_db"]),
            randomize=frozenset(doc.get("randomize", ())),
            snr_range_db=tuple(doc.get("snr_range_db", (0.0, 50.0))),
            estimator=doc.get("estimator", "subtracting"),
            q=int(doc.get("q", 2)),
            stop_tolerance=doc.get("stop_tolerance", 0.0),
            name=str(doc.get("name", "experiment")),
        )
        if doc.get("kind", "sweep") == "convergence" and "separations" in doc:
            n0 = int(doc["model"].get("n", 64))
            exps = []
            for v in doc["separations"]:
                model = dict(doc["model"], separation_bins=float(v) * n0)
                exps.append(Experiment(template=_template({"model": model}),
                                       **dict(common, name=f"{common['name']}_sep{v}")))
            return exps
        return [Experiment(template=_template(doc), **common)]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed experiment config: {exc}") from exc


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc


def bundled_config(name: str) -> Path:
    """Path of a shipped config (``fig1``, ``fig2``, ``fig34``, ``table2``)."""
    path = Path(__file__).with_name("configs") / f"{name}.json"
    if not path.exists():
        raise ConfigurationError(f"no bundled config {name!r}")
    return path


def with_seed(exp: Experiment, seed: int) -> Experiment:
    return replace(exp, base_seed=int(seed))
