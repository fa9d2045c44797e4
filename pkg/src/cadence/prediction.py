"""End-to-end next-CDM prediction and the two gap-based baselines."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import DiagnosticsError, InsufficientHistoryError
from .inference import PosteriorSamples, SamplerConfig, make_log_posterior, sample_posterior
from .ingest import ConjunctionEvent, split_at_cutoff
from .point_process import ArrivalPrediction, mixture_next_arrival
from .priors import GaussianPrior

logger = logging.getLogger(__name__)

RHAT_THRESHOLD = 1.05

NHPP = "nhpp"
NAIVE = "naive"
MEAN = "mean"


@dataclass(frozen=True)
class PredictionRun:
    """One model's prediction for one event at one cutoff.

    ``point_estimate`` is in window coordinates; for the NHPP model the
    full ArrivalPrediction (interval, censoring) rides along.
    """

    event_id: str
    model: str
    cutoff: float
    window_days: float
    point_estimate: float | None = None
    prediction: ArrivalPrediction | None = None
    actual_next: float | None = None
    note: str | None = None


def posterior_for_event(
    event: ConjunctionEvent,
    prior: GaussianPrior,
    cutoff_days_before_tca: float,
    sampler: SamplerConfig,
    clamp_floor: float = 1e-6,
    strict_diagnostics: bool = False,
) -> tuple[PosteriorSamples, float, list[float], list[float]]:
    """Sample the coefficient posterior conditioned on pre-cutoff history.

    Returns (samples, t_c, history, future).  Samples whose split R-hat
    exceeds the gate threshold trigger a warning, or a DiagnosticsError
    when strict.
    """
    history, future = split_at_cutoff(event, cutoff_days_before_tca)
    t_c = event.window_days - cutoff_days_before_tca
    density = make_log_posterior(prior, history, t_c, clamp_floor=clamp_floor)
    samples = sample_posterior(density, prior.mu, prior.sigma, sampler)
    _check_diagnostics(event.event_id, samples, strict_diagnostics)
    return samples, t_c, history, future


def _check_diagnostics(event_id: str, samples: PosteriorSamples, strict: bool):
    worst = max(samples.r_hat)
    if worst > RHAT_THRESHOLD:
        message = f"event {event_id}: split R-hat {worst:.3f} exceeds {RHAT_THRESHOLD}"
        if strict:
            raise DiagnosticsError(message)
        logger.warning("%s; using samples anyway", message)


def predict_next_cdm(
    event: ConjunctionEvent,
    prior: GaussianPrior,
    cutoff_days_before_tca: float,
    sampler: SamplerConfig,
    clamp_floor: float = 1e-6,
    strict_diagnostics: bool = False,
) -> ArrivalPrediction:
    """Predict the next CDM after the cutoff with a 95% credible interval.

    Composes the cutoff split, posterior sampling over the history on
    [0, t_c], and the posterior-mixture next-arrival quantiles with
    horizon equal to the time remaining to the TCA.
    """
    samples, t_c, _, _ = posterior_for_event(
        event, prior, cutoff_days_before_tca, sampler,
        clamp_floor=clamp_floor, strict_diagnostics=strict_diagnostics,
    )
    horizon = event.window_days - t_c
    return mixture_next_arrival(samples.flat_draws(), t_c, horizon, clamp_floor=clamp_floor)


def naive_baseline(history: list[float]) -> float:
    """Repeat the previous inter-arrival gap: last arrival plus last gap."""
    if len(history) < 2:
        raise InsufficientHistoryError("naive baseline needs at least 2 arrivals")
    return history[-1] + (history[-1] - history[-2])


def mean_baseline(history: list[float]) -> float:
    """Extrapolate by the mean of all previous inter-arrival gaps."""
    if len(history) < 2:
        raise InsufficientHistoryError("mean baseline needs at least 2 arrivals")
    mean_gap = (history[-1] - history[0]) / (len(history) - 1)
    return history[-1] + mean_gap


def predict_event_sequence(
    event: ConjunctionEvent,
    prior: GaussianPrior,
    sampler: SamplerConfig,
    clamp_floor: float = 1e-6,
    strict_diagnostics: bool = False,
) -> list[PredictionRun]:
    """Sequentially predict each arrival from the ones before it.

    After the i-th arrival (i >= 1) the cutoff is that arrival's time and
    the first i arrivals form the history; baselines join once two
    arrivals are in hand.  The realized next arrival is attached for
    evaluation.
    """
    arrivals = list(event.arrivals)
    if len(arrivals) < 2:
        raise InsufficientHistoryError("sequence prediction needs at least 2 arrivals")
    runs: list[PredictionRun] = []
    for i in range(1, len(arrivals)):
        t_c = arrivals[i - 1]
        history = arrivals[:i]
        actual = arrivals[i]
        horizon = event.window_days - t_c
        if horizon <= 0:
            break
        density = make_log_posterior(prior, history, t_c, clamp_floor=clamp_floor)
        samples = sample_posterior(density, prior.mu, prior.sigma, sampler)
        _check_diagnostics(event.event_id, samples, strict_diagnostics)
        prediction = mixture_next_arrival(
            samples.flat_draws(), t_c, horizon, clamp_floor=clamp_floor
        )
        runs.append(
            PredictionRun(
                event_id=event.event_id,
                model=NHPP,
                cutoff=t_c,
                window_days=event.window_days,
                point_estimate=prediction.point_estimate,
                prediction=prediction,
                actual_next=actual,
            )
        )
        for name, baseline in ((NAIVE, naive_baseline), (MEAN, mean_baseline)):
            try:
                point = baseline(history)
            except InsufficientHistoryError as exc:
                runs.append(
                    PredictionRun(
                        event_id=event.event_id, model=name, cutoff=t_c,
                        window_days=event.window_days, actual_next=actual,
                        note=str(exc),
                    )
                )
                continue
            runs.append(
                PredictionRun(
                    event_id=event.event_id, model=name, cutoff=t_c,
                    window_days=event.window_days, point_estimate=point,
                    actual_next=actual,
                )
            )
    return runs
