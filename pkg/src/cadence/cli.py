"""Command-line front end: simulate, fit-prior, predict, evaluate, plot-data.

Configuration comes from flags, an optional JSON config file (flags win),
and the CADENCE_SEED environment variable for the seed.  All file writes
are whole-file atomic (write to a temp file, then rename).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import CadenceError, InsufficientHistoryError
from .evaluation import MODEL_ORDER, MetricsReport, interval_coverage, mae, rmse
from .inference import SamplerConfig
from .ingest import ConjunctionEvent, assemble_events, events_to_csv, parse_csv, split_at_cutoff
from .intensity import PolynomialIntensity, RidgeConfig, bin_events, fit_ridge, prior_from_fit
from .point_process import ObservationWindow, simulate_thinning
from .prediction import (
    MEAN,
    NAIVE,
    NHPP,
    PredictionRun,
    mean_baseline,
    naive_baseline,
    posterior_for_event,
    predict_event_sequence,
)
from .point_process import mixture_next_arrival
from .priors import GaussianPrior

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "CADENCE_SEED"
SIMULATION_EPOCH = datetime(2030, 1, 1, tzinfo=timezone.utc)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class RunConfig:
    """All tunables shared across subcommands, with their defaults."""

    window_days: float = 7.0
    cutoff_days_before_tca: float = 2.5
    degree: int = 3
    alpha: float = 1.0
    bin_width: float = 0.5
    chains: int = 4
    draws: int = 1000
    warmup: int = 1000
    seed: int = 0
    sigma_floor: float = 1e-3
    clamp_floor: float = 1e-6

    def __post_init__(self):
        positive = (
            "window_days", "cutoff_days_before_tca", "alpha", "bin_width",
            "sigma_floor", "clamp_floor",
        )
        for name in positive:
            value = getattr(self, name)
            if name == "alpha":
                if value < 0:
                    raise ValueError("alpha must be non-negative")
            elif value <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cutoff_days_before_tca >= self.window_days:
            raise ValueError("cutoff must be smaller than the window")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        for name in ("chains", "draws", "warmup"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(
            chains=self.chains, draws=self.draws, warmup=self.warmup, seed=self.seed
        )

    def ridge(self) -> RidgeConfig:
        return RidgeConfig(alpha=self.alpha, degree=self.degree, bin_width=self.bin_width)


def _add_config_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("configuration")
    group.add_argument("--config", help="JSON config file; explicit flags win")
    group.add_argument("--window-days", type=float, dest="window_days")
    group.add_argument("--cutoff", type=float, dest="cutoff_days_before_tca",
                       help="days before TCA at which to split (default 2.5)")
    group.add_argument("--degree", type=int)
    group.add_argument("--alpha", type=float)
    group.add_argument("--bin-width", type=float, dest="bin_width")
    group.add_argument("--chains", type=int)
    group.add_argument("--draws", type=int)
    group.add_argument("--warmup", type=int)
    group.add_argument("--seed", type=int,
                       help=f"RNG seed (default 0; {SEED_ENV_VAR} overrides the default)")
    group.add_argument("--sigma-floor", type=float, dest="sigma_floor")
    group.add_argument("--clamp-floor", type=float, dest="clamp_floor")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flag, config-file, environment, and default values."""
    file_values = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as handle:
            file_values = json.load(handle)
    values = {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
        elif f.name in file_values:
            values[f.name] = file_values[f.name]
        elif f.name == "seed" and SEED_ENV_VAR in os.environ:
            values[f.name] = int(os.environ[SEED_ENV_VAR])
    return RunConfig(**values)


def _write_atomic(path: str, text: str):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    os.replace(tmp, path)


def _days_to_tca(window_days: float, t: float | None) -> float | None:
    return None if t is None else window_days - t


def _load_events(path: str, window_days: float) -> list[ConjunctionEvent]:
    with open(path, "rb") as handle:
        records = parse_csv(handle.read())
    return assemble_events(records, window_days)


def cmd_simulate(config: RunConfig, n_events: int, true_beta: list[float], out_path: str):
    """Generate synthetic events from a known intensity and write them as CSV."""
    model = PolynomialIntensity(tuple(true_beta), clamp_floor=config.clamp_floor)
    window = ObservationWindow(0.0, config.window_days)
    seed_rng = np.random.default_rng(config.seed)
    event_seeds = seed_rng.integers(0, 2**63 - 1, size=max(n_events, 1))

    events = []
    width = max(len(str(max(n_events, 1))), 3)
    for k in range(n_events):
        arrivals = simulate_thinning(model, window, int(event_seeds[k]))
        if not arrivals:
            continue
        events.append(
            ConjunctionEvent(
                event_id=f"SYN{k:0{width}d}",
                tca=SIMULATION_EPOCH + timedelta(days=k),
                window_days=config.window_days,
                arrivals=tuple(arrivals),
            )
        )
    _write_atomic(out_path, events_to_csv(events))
    sidecar = {
        "beta": list(true_beta),
        "window_days": config.window_days,
        "clamp_floor": config.clamp_floor,
        "n_events_requested": n_events,
        "n_events_written": len(events),
        "seed": config.seed,
    }
    _write_atomic(out_path + ".truth.json", json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote {len(events)} events to {out_path}")


def fit_prior_from_events(config: RunConfig, events: list[ConjunctionEvent]) -> GaussianPrior:
    """Per-event ridge fits pooled into Gaussian priors."""
    if not events:
        raise CadenceError("no events to fit a prior from")
    ridge_config = config.ridge()
    coefficient_sets = []
    for event in events:
        binned = bin_events([event], ridge_config.bin_width)
        coefficient_sets.append(fit_ridge(binned, ridge_config, n_events=1))
    return prior_from_fit(coefficient_sets, sigma_floor=config.sigma_floor)


def cmd_fit_prior(config: RunConfig, train_csv: str, out_prior_json: str):
    events = _load_events(train_csv, config.window_days)
    prior = fit_prior_from_events(config, events)
    _write_atomic(out_prior_json, prior.to_json())
    print(f"fit prior from {len(events)} events -> {out_prior_json}")


def _run_to_json(run: PredictionRun) -> dict:
    w = run.window_days
    record = {
        "event_id": run.event_id,
        "model": run.model,
        "cutoff_days_to_tca": _days_to_tca(w, run.cutoff),
        "predicted_days_to_tca": _days_to_tca(w, run.point_estimate),
        "lower95": None,
        "upper95": None,
        "censored": False,
        "actual_days_to_tca": _days_to_tca(w, run.actual_next),
    }
    p = run.prediction
    if p is not None:
        record["censored"] = p.censored
        # In days-to-TCA coordinates the time axis flips, so the interval's
        # later time becomes the numerically smaller bound.
        record["lower95"] = _days_to_tca(w, p.upper_95)
        record["upper95"] = _days_to_tca(w, p.lower_95)
        record["predicted_mean_days_to_tca"] = _days_to_tca(w, p.mean_estimate)
    if run.note is not None:
        record["error"] = run.note
    return record


def cmd_predict(
    config: RunConfig,
    data_csv: str,
    prior_json: str,
    out_jsonl: str,
    sequence: bool = False,
    dump_posterior: str | None = None,
):
    """Predict per event at the fixed cutoff (or sequentially) to JSON lines.

    Per-event failures are reported inline and do not abort the run.
    """
    with open(prior_json, encoding="utf-8") as handle:
        prior = GaussianPrior.from_json(handle.read())
    events = _load_events(data_csv, config.window_days)
    if not events:
        raise CadenceError(f"no events found in {data_csv}")

    lines = []
    for event in events:
        if sequence:
            try:
                runs = predict_event_sequence(event, prior, config.sampler(),
                                              clamp_floor=config.clamp_floor)
            except (CadenceError, ValueError) as exc:
                runs = [PredictionRun(event_id=event.event_id, model=NHPP,
                                      cutoff=0.0, window_days=event.window_days,
                                      note=str(exc))]
            lines.extend(json.dumps(_run_to_json(r)) for r in runs)
            continue
        lines.extend(
            json.dumps(_run_to_json(r))
            for r in _predict_single_cutoff(config, event, prior, dump_posterior)
        )
    _write_atomic(out_jsonl, "\n".join(lines) + "\n")
    print(f"wrote {len(lines)} prediction records to {out_jsonl}")


def _predict_single_cutoff(
    config: RunConfig,
    event: ConjunctionEvent,
    prior: GaussianPrior,
    dump_posterior: str | None,
) -> list[PredictionRun]:
    cutoff = config.cutoff_days_before_tca
    t_c = event.window_days - cutoff
    try:
        samples, t_c, history, future = posterior_for_event(
            event, prior, cutoff, config.sampler(), clamp_floor=config.clamp_floor
        )
    except (CadenceError, ValueError) as exc:
        return [
            PredictionRun(event_id=event.event_id, model=m, cutoff=t_c,
                          window_days=event.window_days, note=str(exc))
            for m in MODEL_ORDER
        ]
    if dump_posterior is not None:
        _dump_posterior_csv(dump_posterior, event.event_id, samples)
    actual = future[0] if future else None
    horizon = event.window_days - t_c
    prediction = mixture_next_arrival(
        samples.flat_draws(), t_c, horizon, clamp_floor=config.clamp_floor
    )
    runs = [
        PredictionRun(
            event_id=event.event_id, model=NHPP, cutoff=t_c,
            window_days=event.window_days, point_estimate=prediction.point_estimate,
            prediction=prediction, actual_next=actual,
        )
    ]
    for name, baseline in ((NAIVE, naive_baseline), (MEAN, mean_baseline)):
        try:
            point = baseline(history)
            runs.append(
                PredictionRun(event_id=event.event_id, model=name, cutoff=t_c,
                              window_days=event.window_days, point_estimate=point,
                              actual_next=actual)
            )
        except InsufficientHistoryError as exc:
            runs.append(
                PredictionRun(event_id=event.event_id, model=name, cutoff=t_c,
                              window_days=event.window_days, actual_next=actual,
                              note=str(exc))
            )
    return runs


def _dump_posterior_csv(directory: str, event_id: str, samples):
    os.makedirs(directory, exist_ok=True)
    dim = samples.dim
    header = "chain,draw," + ",".join(f"beta{j}" for j in range(dim))
    rows = [header]
    for c in range(samples.draws.shape[0]):
        for d in range(samples.draws.shape[1]):
            coeffs = ",".join(repr(float(v)) for v in samples.draws[c, d])
            rows.append(f"{c},{d},{coeffs}")
    _write_atomic(os.path.join(directory, f"{event_id}_posterior.csv"), "\n".join(rows) + "\n")


def _read_runs(runs_jsonl: str) -> list[dict]:
    with open(runs_jsonl, encoding="utf-8") as handle:
        rows = [json.loads(line) for line in handle if line.strip()]
    if not rows:
        raise CadenceError(f"no prediction records in {runs_jsonl}")
    return rows


def metrics_from_rows(rows: list[dict]) -> list[MetricsReport]:
    """Rebuild the paired benchmark table from prediction JSON lines.

    An event is scored only when all three models produced a prediction,
    the actual next arrival is known, and the NHPP prediction is not
    censored; censored or incomplete events are counted separately.
    """
    by_event: dict[str, dict[str, dict]] = {}
    for row in rows:
        if "error" in row:
            continue
        by_event.setdefault(row["event_id"], {})[row["model"]] = row

    actuals = []
    predictions: dict[str, list[float]] = {m: [] for m in MODEL_ORDER}
    covered = 0
    censored = 0
    for event_rows in by_event.values():
        if any(m not in event_rows for m in MODEL_ORDER):
            continue
        nhpp_row = event_rows[NHPP]
        if nhpp_row.get("censored") or nhpp_row.get("actual_days_to_tca") is None:
            censored += 1
            continue
        if any(event_rows[m].get("predicted_days_to_tca") is None for m in MODEL_ORDER):
            censored += 1
            continue
        actual = nhpp_row["actual_days_to_tca"]
        actuals.append(actual)
        for m in MODEL_ORDER:
            predictions[m].append(event_rows[m]["predicted_days_to_tca"])
        lower, upper = nhpp_row.get("lower95"), nhpp_row.get("upper95")
        if lower is not None and upper is not None and lower <= actual <= upper:
            covered += 1

    if not actuals:
        raise CadenceError("zero scorable prediction records")
    reports = []
    for model in MODEL_ORDER:
        reports.append(
            MetricsReport(
                model=model,
                n=len(actuals),
                mae=mae(actuals, predictions[model]),
                rmse=rmse(actuals, predictions[model]),
                coverage95=covered / len(actuals) if model == NHPP else None,
                censored_count=censored,
            )
        )
    return reports


def format_report_table(reports: list[MetricsReport]) -> str:
    header = f"{'Model':<12}{'N':>6}{'MAE [days]':>14}{'RMSE [days]':>14}{'Coverage95':>12}{'Censored':>10}"
    lines = [header, "-" * len(header)]
    for r in reports:
        coverage = f"{r.coverage95:.3f}" if r.coverage95 is not None else "-"
        lines.append(
            f"{r.model:<12}{r.n:>6}{r.mae:>14.4f}{r.rmse:>14.4f}{coverage:>12}{r.censored_count:>10}"
        )
    return "\n".join(lines)


def cmd_evaluate(config: RunConfig, runs_jsonl: str, out_json: str):
    reports = metrics_from_rows(_read_runs(runs_jsonl))
    payload = [
        {
            "model": r.model, "n": r.n, "mae": r.mae, "rmse": r.rmse,
            "coverage95": r.coverage95, "censored_count": r.censored_count,
        }
        for r in reports
    ]
    _write_atomic(out_json, json.dumps(payload, indent=2) + "\n")
    print(format_report_table(reports))


def cmd_plot_data(config: RunConfig, runs_jsonl: str, event_id: str, out_csv: str):
    """Emit tidy plot data (kind,t_days_to_tca,value,model) for one event."""
    rows = [r for r in _read_runs(runs_jsonl) if r["event_id"] == event_id]
    if not rows:
        raise CadenceError(f"unknown event_id: {event_id}")
    scored = [r for r in rows if "error" not in r]
    nhpp_rows = sorted(
        (r for r in scored if r["model"] == NHPP),
        key=lambda r: r["cutoff_days_to_tca"], reverse=True,
    )

    arrival_times: set[float] = set()
    for r in scored:
        if r.get("cutoff_days_to_tca") is not None:
            arrival_times.add(r["cutoff_days_to_tca"])
        if r.get("actual_days_to_tca") is not None:
            arrival_times.add(r["actual_days_to_tca"])

    lines = ["kind,t_days_to_tca,value,model"]
    for idx, t in enumerate(sorted(arrival_times, reverse=True), start=1):
        lines.append(f"arrival,{t!r},{idx},")
    for step, r in enumerate(nhpp_rows, start=1):
        if r.get("predicted_days_to_tca") is not None:
            lines.append(f"prediction,{r['predicted_days_to_tca']!r},{step},{NHPP}")
        for bound in ("lower95", "upper95"):
            if r.get(bound) is not None:
                lines.append(f"bound,{r[bound]!r},{step},{NHPP}")
    for model in (NAIVE, MEAN):
        model_rows = sorted(
            (r for r in scored if r["model"] == model and r.get("predicted_days_to_tca") is not None),
            key=lambda r: r["cutoff_days_to_tca"], reverse=True,
        )
        for step, r in enumerate(model_rows, start=1):
            lines.append(f"prediction,{r['predicted_days_to_tca']!r},{step},{model}")
    _write_atomic(out_csv, "\n".join(lines) + "\n")
    print(f"wrote plot data for {event_id} to {out_csv}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cadence",
        description="Model CDM arrival cadence with a Bayesian non-homogeneous "
                    "Poisson process and predict the next arrival.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic events as ingestion CSV")
    p.add_argument("--n-events", type=int, required=True)
    p.add_argument("--beta", required=True,
                   help="comma-separated true coefficients, ascending power")
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("fit-prior", help="fit Gaussian coefficient priors from a training CSV")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("predict", help="predict the next CDM per event")
    p.add_argument("--data", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sequence", action="store_true",
                   help="predict every arrival from the ones before it")
    p.add_argument("--dump-posterior", metavar="DIR",
                   help="write per-event posterior draws as CSV into DIR")
    _add_config_flags(p)

    p = sub.add_parser("evaluate", help="compute MAE/RMSE/coverage from prediction output")
    p.add_argument("--runs", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("plot-data", help="emit tidy per-event plot data as CSV")
    p.add_argument("--runs", required=True)
    p.add_argument("--event-id", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        parser.exit(EXIT_USAGE, f"invalid configuration: {exc}\n")
    try:
        if args.command == "simulate":
            beta = [float(v) for v in args.beta.split(",")]
            cmd_simulate(config, args.n_events, beta, args.out)
        elif args.command == "fit-prior":
            cmd_fit_prior(config, args.train, args.out)
        elif args.command == "predict":
            cmd_predict(config, args.data, args.prior, args.out,
                        sequence=args.sequence, dump_posterior=args.dump_posterior)
        elif args.command == "evaluate":
            cmd_evaluate(config, args.runs, args.out)
        elif args.command == "plot-data":
            cmd_plot_data(config, args.runs, args.event_id, args.out)
    except (CadenceError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
