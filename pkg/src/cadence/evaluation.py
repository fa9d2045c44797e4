"""MAE/RMSE metrics, interval coverage, and the paired benchmark harness."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistoryError
from .inference import SamplerConfig
from .ingest import ConjunctionEvent, split_at_cutoff
from .prediction import (
    MEAN,
    NAIVE,
    NHPP,
    PredictionRun,
    mean_baseline,
    naive_baseline,
    predict_next_cdm,
)
from .priors import GaussianPrior

logger = logging.getLogger(__name__)

MODEL_ORDER = (NHPP, NAIVE, MEAN)


@dataclass(frozen=True)
class MetricsReport:
    """Per-model accuracy summary over the scored prediction set."""

    model: str
    n: int
    mae: float
    rmse: float
    coverage95: float | None = None
    censored_count: int = 0


def mae(actuals: list[float], predictions: list[float]) -> float:
    """Mean absolute error, in the units of the inputs."""
    y, y_hat = _paired(actuals, predictions)
    return float(np.mean(np.abs(y - y_hat)))


def rmse(actuals: list[float], predictions: list[float]) -> float:
    """Root mean squared error, in the units of the inputs."""
    y, y_hat = _paired(actuals, predictions)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


def _paired(actuals, predictions) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(actuals, dtype=float)
    y_hat = np.asarray(predictions, dtype=float)
    if y.shape != y_hat.shape or y.size == 0:
        raise ValueError("actuals and predictions must be equal-length and non-empty")
    return y, y_hat


def interval_coverage(runs: list[PredictionRun]) -> float:
    """Fraction of scorable runs whose actual falls inside the 95% interval.

    An absent upper bound means the 0.025 survival quantile lies beyond
    the horizon; any realized arrival is necessarily before the horizon,
    so the upper check passes.  An absent lower bound means the 0.975
    quantile is beyond the horizon, so the actual precedes the interval
    and the run is not covered.
    """
    scorable = [
        r for r in runs
        if r.prediction is not None
        and not r.prediction.censored
        and r.actual_next is not None
    ]
    if not scorable:
        raise ValueError("no scorable (non-censored, with actual) runs")
    hits = 0
    for r in scorable:
        p = r.prediction
        if p.lower_95 is None or r.actual_next < p.lower_95:
            continue
        if p.upper_95 is None or r.actual_next <= p.upper_95:
            hits += 1
    return hits / len(scorable)


def run_benchmark(
    events: list[ConjunctionEvent],
    prior: GaussianPrior,
    cutoff_days_before_tca: float,
    sampler: SamplerConfig,
    clamp_floor: float = 1e-6,
) -> list[MetricsReport]:
    """Score all three models on the same events at a fixed cutoff.

    The scoring set is identical across models: an event is scored only
    when its history holds >= 2 arrivals, a post-cutoff arrival exists
    (otherwise it counts as censored ground truth), and the NHPP
    prediction is not censored.  Reports come back in nhpp/naive/mean
    order.
    """
    nhpp_runs: list[PredictionRun] = []
    predictions: dict[str, list[float]] = {m: [] for m in MODEL_ORDER}
    actuals: list[float] = []
    ground_truth_censored = 0
    model_censored = 0

    for event in events:
        try:
            history, future = split_at_cutoff(event, cutoff_days_before_tca)
        except InsufficientHistoryError:
            logger.warning("event %s: empty history, skipped", event.event_id)
            continue
        if len(history) < 2:
            logger.warning("event %s: fewer than 2 history arrivals, skipped", event.event_id)
            continue
        if not future:
            ground_truth_censored += 1
            continue
        prediction = predict_next_cdm(
            event, prior, cutoff_days_before_tca, sampler, clamp_floor=clamp_floor
        )
        if prediction.censored:
            model_censored += 1
            continue
        actual = future[0]
        actuals.append(actual)
        predictions[NHPP].append(prediction.point_estimate)
        predictions[NAIVE].append(naive_baseline(history))
        predictions[MEAN].append(mean_baseline(history))
        nhpp_runs.append(
            PredictionRun(
                event_id=event.event_id, model=NHPP,
                cutoff=event.window_days - cutoff_days_before_tca,
                window_days=event.window_days,
                point_estimate=prediction.point_estimate,
                prediction=prediction, actual_next=actual,
            )
        )

    if not actuals:
        raise ValueError("zero scorable events")

    reports = []
    for model in MODEL_ORDER:
        censored = ground_truth_censored
        coverage = None
        if model == NHPP:
            censored += model_censored
            coverage = interval_coverage(nhpp_runs)
        reports.append(
            MetricsReport(
                model=model,
                n=len(actuals),
                mae=mae(actuals, predictions[model]),
                rmse=rmse(actuals, predictions[model]),
                coverage95=coverage,
                censored_count=censored,
            )
        )
    return reports
