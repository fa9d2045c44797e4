"""Polynomial intensity family, its integral, event binning, and ridge fits.

The intensity lambda(t) = beta_0 + beta_1 t + ... + beta_m t^m is clamped
below at a small positive floor so that rates and log-likelihoods stay
finite; its integral uses a fixed-resolution composite trapezoid rule for
determinism.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .ingest import ConjunctionEvent
from .priors import GaussianPrior

QUADRATURE_INTERVALS = 4096
DEFAULT_CLAMP_FLOOR = 1e-6


@dataclass(frozen=True)
class PolynomialIntensity:
    """Clamped polynomial rate, coefficients in ascending power order."""

    coefficients: tuple[float, ...]
    clamp_floor: float = DEFAULT_CLAMP_FLOOR

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise ValueError("at least one coefficient required")
        if self.clamp_floor <= 0:
            raise ValueError("clamp_floor must be positive")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


@dataclass(frozen=True)
class BinnedCounts:
    """Pooled arrival counts per time bin, with regression abscissae."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        edges = np.asarray(self.bin_edges)
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin_edges must be strictly increasing, >= 2 entries")
        if len(self.counts) != len(edges) - 1:
            raise ValueError("need exactly one count per bin")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(np.asarray(self.bin_edges))

    @property
    def midpoints(self) -> np.ndarray:
        edges = np.asarray(self.bin_edges)
        return 0.5 * (edges[:-1] + edges[1:])


@dataclass(frozen=True)
class RidgeConfig:
    """Ridge fit settings: L2 strength, polynomial degree, bin width (days)."""

    alpha: float = 1.0
    degree: int = 3
    bin_width: float = 0.5

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")


def intensity_on_grid(model: PolynomialIntensity, t: np.ndarray) -> np.ndarray:
    """Clamped intensity evaluated on an array of times (Horner ordering)."""
    raw = np.polynomial.polynomial.polyval(t, model.coefficients)
    return np.maximum(raw, model.clamp_floor)


def eval_intensity(model: PolynomialIntensity, t: float) -> float:
    """Clamped rate at time t, in arrivals per day."""
    return float(intensity_on_grid(model, np.asarray(float(t))))


def cumulative_intensity(model: PolynomialIntensity, a: float, b: float) -> float:
    """Expected arrival count on [a, b]: integral of the clamped rate.

    Composite trapezoid on a fixed uniform grid of QUADRATURE_INTERVALS
    intervals per call.
    """
    if a > b:
        raise ValueError("interval start must not exceed its end")
    if a == b:
        return 0.0
    grid = np.linspace(a, b, QUADRATURE_INTERVALS + 1)
    lam = intensity_on_grid(model, grid)
    dx = (b - a) / QUADRATURE_INTERVALS
    return float(dx * (lam.sum() - 0.5 * (lam[0] + lam[-1])))


def bin_events(events: list[ConjunctionEvent], bin_width: float) -> BinnedCounts:
    """Pool arrivals from all events into uniform bins over the shared window.

    A final partial bin is kept with its true width.  The last bin is
    right-inclusive so an arrival exactly at the window end is counted.
    """
    if not events:
        raise ValueError("at least one event required")
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    window = events[0].window_days
    if any(abs(e.window_days - window) > 1e-9 for e in events):
        raise ValueError("all events must share the same window_days")

    edges = list(np.arange(0.0, window, bin_width))
    if window - edges[-1] > 1e-12 * max(1.0, window):
        edges.append(window)
    else:
        edges[-1] = window
    edges_arr = np.asarray(edges)

    counts = np.zeros(len(edges) - 1, dtype=int)
    for event in events:
        for t in event.arrivals:
            idx = int(np.searchsorted(edges_arr, t, side="right")) - 1
            idx = min(max(idx, 0), len(counts) - 1)
            counts[idx] += 1
    return BinnedCounts(bin_edges=tuple(edges), counts=tuple(int(c) for c in counts))


def fit_ridge(binned: BinnedCounts, config: RidgeConfig, n_events: int) -> tuple[float, ...]:
    """Ridge-fit polynomial coefficients to per-event binned counts.

    Minimizes sum_i [N_i/n_events - lambda(t_i) dt_i]^2 + alpha * sum_j beta_j^2
    via the normal equations, solved with a Cholesky factorization.  Counts
    are divided by n_events so lambda is a per-event rate.
    """
    if n_events < 1:
        raise ValueError("n_events must be at least 1")
    mids = binned.midpoints
    widths = binned.widths
    n_bins = len(mids)
    if config.alpha == 0 and n_bins < config.degree + 1:
        raise ValueError("need at least degree+1 bins when alpha is 0")

    y = np.asarray(binned.counts, dtype=float) / n_events
    powers = np.vander(mids, config.degree + 1, increasing=True)
    design = powers * widths[:, None]

    gram = design.T @ design + config.alpha * np.eye(config.degree + 1)
    rhs = design.T @ y
    try:
        cho = scipy.linalg.cho_factor(gram)
        beta = scipy.linalg.cho_solve(cho, rhs)
    except scipy.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular ridge system: {exc}") from exc

    residual = np.linalg.norm(gram @ beta - rhs)
    if residual > 1e-8 * max(1.0, np.linalg.norm(rhs)):
        raise np.linalg.LinAlgError("normal-equation solve failed to converge")
    return tuple(float(b) for b in beta)


def prior_from_fit(
    per_event_coefficients: list[tuple[float, ...]], sigma_floor: float = 1e-3
) -> GaussianPrior:
    """Pool per-event coefficient fits into per-coefficient Normal priors.

    mu is the sample mean; sigma the unbiased sample standard deviation,
    floored at sigma_floor (a single event gives the floor everywhere).
    """
    if not per_event_coefficients:
        raise ValueError("at least one coefficient vector required")
    if sigma_floor <= 0:
        raise ValueError("sigma_floor must be positive")
    mat = np.asarray(per_event_coefficients, dtype=float)
    if mat.ndim != 2:
        raise ValueError("all coefficient vectors must have the same length")
    mu = mat.mean(axis=0)
    if mat.shape[0] > 1:
        sigma = np.maximum(mat.std(axis=0, ddof=1), sigma_floor)
    else:
        sigma = np.full(mat.shape[1], sigma_floor)
    return GaussianPrior(mu=tuple(map(float, mu)), sigma=tuple(map(float, sigma)))
