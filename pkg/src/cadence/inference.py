"""Bayesian inference over intensity coefficients.

Gaussian priors combined with the exact NHPP likelihood of the pre-cutoff
history give the per-event log-posterior; an adaptive random-walk
Metropolis sampler draws from it across several independent chains, and
split R-hat / effective sample size diagnostics gate the result.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .intensity import QUADRATURE_INTERVALS, PolynomialIntensity
from .point_process import ObservationWindow, log_likelihood
from .priors import GaussianPrior

logger = logging.getLogger(__name__)

LOG_SQRT_TWO_PI = 0.5 * math.log(2.0 * math.pi)
TARGET_ACCEPTANCE = 0.234


@dataclass(frozen=True)
class SamplerConfig:
    """Multi-chain sampling protocol: chain count, lengths, seed, step scale."""

    chains: int = 4
    draws: int = 1000
    warmup: int = 1000
    seed: int = 0
    step_scale: float = 0.1

    def __post_init__(self):
        if self.chains < 2:
            raise ValueError("at least 2 chains required for diagnostics")
        if self.draws < 1 or self.warmup < 0:
            raise ValueError("draws must be >= 1 and warmup >= 0")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")


@dataclass(frozen=True)
class PosteriorSamples:
    """Retained MCMC draws plus per-chain and per-coefficient diagnostics."""

    draws: np.ndarray  # (chains, draws, dim)
    acceptance: tuple[float, ...]
    r_hat: tuple[float, ...]
    ess: tuple[float, ...]

    @property
    def dim(self) -> int:
        return self.draws.shape[2]

    def flat_draws(self) -> np.ndarray:
        """All chains stacked: (chains * draws, dim)."""
        return self.draws.reshape(-1, self.dim)


def log_prior(prior: GaussianPrior, beta) -> float:
    """Sum of independent Normal log-densities of beta under the prior."""
    beta = np.asarray(beta, dtype=float)
    mu = np.asarray(prior.mu)
    sigma = np.asarray(prior.sigma)
    if beta.shape != mu.shape:
        raise ValueError("beta length must match the prior")
    z = (beta - mu) / sigma
    return float(np.sum(-np.log(sigma) - LOG_SQRT_TWO_PI - 0.5 * z * z))


def log_posterior(
    prior: GaussianPrior,
    arrivals: list[float],
    t_c: float,
    beta,
    clamp_floor: float = 1e-6,
) -> float:
    """Log-posterior of beta given the history observed on [0, t_c].

    The likelihood window ends at the cutoff, not the TCA: the model
    conditions only on information available at decision time.  A
    zero-width window contributes no likelihood.
    """
    lp = log_prior(prior, beta)
    if t_c <= 0:
        return lp
    model = PolynomialIntensity(tuple(float(b) for b in beta), clamp_floor=clamp_floor)
    return lp + log_likelihood(model, list(arrivals), ObservationWindow(0.0, t_c))


def make_log_posterior(
    prior: GaussianPrior,
    arrivals: list[float],
    t_c: float,
    clamp_floor: float = 1e-6,
) -> Callable[[np.ndarray], float]:
    """Fast log-posterior closure with precomputed quadrature tables.

    Matches ``log_posterior`` (same clamp, same trapezoid resolution) to
    floating-point accuracy while avoiding per-call grid construction;
    the sampler evaluates it tens of thousands of times per event.
    """
    dim = len(prior.mu)
    mu = np.asarray(prior.mu)
    sigma = np.asarray(prior.sigma)
    norm_const = float(np.sum(-np.log(sigma) - LOG_SQRT_TWO_PI))

    if t_c > 0:
        grid = np.linspace(0.0, t_c, QUADRATURE_INTERVALS + 1)
        grid_powers = np.vander(grid, dim, increasing=True)
        dx = t_c / QUADRATURE_INTERVALS
        trap_w = np.full(len(grid), dx)
        trap_w[0] = trap_w[-1] = 0.5 * dx
        arrival_powers = np.vander(np.asarray(arrivals, dtype=float), dim, increasing=True)
    else:
        grid_powers = None

    def density(beta: np.ndarray) -> float:
        z = (beta - mu) / sigma
        lp = norm_const - 0.5 * float(z @ z)
        if grid_powers is None:
            return lp
        lam_grid = np.maximum(grid_powers @ beta, clamp_floor)
        integral = float(trap_w @ lam_grid)
        lam_points = np.maximum(arrival_powers @ beta, clamp_floor)
        return lp + float(np.log(lam_points).sum()) - integral

    return density


def _proposal_cholesky(states: np.ndarray, init_scale: np.ndarray) -> np.ndarray:
    """Cholesky factor of a regularized empirical covariance of warmup states.

    Falls back to a diagonal factor built from init_scale when the states
    are too few or too degenerate to support a full-rank estimate.
    """
    dim = states.shape[1]
    fallback = np.diag(init_scale)
    if states.shape[0] < max(10, 2 * dim):
        return fallback
    cov = np.cov(states, rowvar=False).reshape(dim, dim)
    cov += 1e-10 * np.eye(dim) * max(np.trace(cov) / dim, 1.0)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return fallback


def sample_posterior(
    log_density: Callable[[np.ndarray], float],
    init_mean,
    init_scale,
    config: SamplerConfig,
) -> PosteriorSamples:
    """Covariance-adaptive random-walk Metropolis.

    Each chain starts at the prior mean jittered by a tenth of the prior
    scale.  Warmup runs in two stages: first, coordinate-at-a-time updates
    whose per-coordinate scales adapt by Robbins-Monro toward the target
    acceptance rate; then joint Gaussian proposals whose covariance is the
    empirical covariance of the warmup states (polynomial coefficients are
    strongly correlated, so axis-aligned proposals alone mix too slowly),
    with a single Robbins-Monro scale factor.  Everything freezes after
    warmup so the retained draws satisfy detailed balance.  Deterministic
    given the seed.
    """
    init_mean = np.asarray(init_mean, dtype=float)
    init_scale = np.asarray(init_scale, dtype=float)
    dim = len(init_mean)
    root = np.random.SeedSequence(config.seed)
    chain_seeds = root.spawn(config.chains)

    stage_a = config.warmup // 2
    all_draws = np.empty((config.chains, config.draws, dim))
    acceptance = []
    for c in range(config.chains):
        rng = np.random.default_rng(chain_seeds[c])
        x = init_mean + 0.1 * init_scale * rng.standard_normal(dim)
        lp = log_density(x)
        if not np.isfinite(lp):
            raise RuntimeError(f"chain {c}: non-finite log-density at initialization")

        # Stage A: per-coordinate adaptation, collecting states for the
        # covariance estimate.
        log_scales = np.log(config.step_scale * init_scale)
        stage_a_states = np.empty((max(stage_a, 1), dim))
        stage_a_states[0] = x
        for it in range(stage_a):
            for j in range(dim):
                proposal = x.copy()
                proposal[j] += math.exp(log_scales[j]) * rng.standard_normal()
                lp_prop = log_density(proposal)
                log_ratio = lp_prop - lp
                accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
                if rng.uniform() < accept_prob:
                    x = proposal
                    lp = lp_prop
                gamma = (it + 1) ** -0.6
                log_scales[j] += gamma * (accept_prob - TARGET_ACCEPTANCE)
            stage_a_states[it] = x

        chol = _proposal_cholesky(stage_a_states[stage_a // 2 :], init_scale)
        log_factor = math.log(2.38 / math.sqrt(dim))

        # Stage B: joint proposals, scale-only adaptation, one covariance
        # refresh halfway through.
        stage_b = config.warmup - stage_a
        stage_b_states = np.empty((max(stage_b, 1), dim))
        stage_b_states[0] = x
        for it in range(stage_b):
            if stage_b >= 20 and it == stage_b // 2:
                chol = _proposal_cholesky(stage_b_states[: it], init_scale)
            proposal = x + math.exp(log_factor) * (chol @ rng.standard_normal(dim))
            lp_prop = log_density(proposal)
            log_ratio = lp_prop - lp
            accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
            if rng.uniform() < accept_prob:
                x = proposal
                lp = lp_prop
            gamma = (it + 1) ** -0.6
            log_factor += gamma * (accept_prob - TARGET_ACCEPTANCE)
            stage_b_states[it] = x

        # Sampling: frozen kernel.
        step = math.exp(log_factor) * chol
        accepted = 0
        for it in range(config.draws):
            proposal = x + step @ rng.standard_normal(dim)
            lp_prop = log_density(proposal)
            log_ratio = lp_prop - lp
            if log_ratio >= 0 or rng.uniform() < math.exp(log_ratio):
                x = proposal
                lp = lp_prop
                accepted += 1
            all_draws[c, it] = x
        acceptance.append(accepted / config.draws)

    r_hats = tuple(r_hat(all_draws[:, :, j]) for j in range(dim))
    ess_vals = tuple(ess(all_draws[:, :, j]) for j in range(dim))
    return PosteriorSamples(
        draws=all_draws,
        acceptance=tuple(acceptance),
        r_hat=r_hats,
        ess=ess_vals,
    )


def r_hat(chain_draws: np.ndarray) -> float:
    """Split R-hat: each chain halved, between/within half-chain variances."""
    chain_draws = np.asarray(chain_draws, dtype=float)
    if chain_draws.ndim != 2 or chain_draws.shape[0] < 2 or chain_draws.shape[1] < 4:
        raise ValueError("need >= 2 chains with >= 4 draws each")
    n_half = chain_draws.shape[1] // 2
    halves = np.vstack(
        [chain_draws[:, :n_half], chain_draws[:, n_half : 2 * n_half]]
    )
    if np.ptp(halves) == 0.0:
        return 1.0
    within = float(np.mean(np.var(halves, axis=1, ddof=1)))
    if within == 0.0:
        return 1.0
    between = n_half * float(np.var(np.mean(halves, axis=1), ddof=1))
    var_est = (n_half - 1) / n_half * within + between / n_half
    return float(math.sqrt(var_est / within))


def ess(chain_draws: np.ndarray) -> float:
    """Effective sample size via the initial-positive-sequence estimator.

    Autocorrelations are averaged across chains and summed in adjacent
    pairs, truncating at the first non-positive pair; the result is
    capped at the total draw count.
    """
    chain_draws = np.asarray(chain_draws, dtype=float)
    if chain_draws.ndim != 2:
        raise ValueError("expected (chains, draws) array")
    n_chains, n = chain_draws.shape
    total = n_chains * n
    if total < 100:
        raise ValueError("need at least 100 total draws")
    if np.ptp(chain_draws) == 0.0:
        warnings.warn("degenerate (constant) draws: ESS capped at the draw count")
        return float(total)

    acf = np.zeros(n)
    for c in range(n_chains):
        centered = chain_draws[c] - chain_draws[c].mean()
        var = float(centered @ centered) / n
        if var == 0.0:
            acf += np.concatenate([[1.0], np.zeros(n - 1)])
            continue
        padded = np.zeros(2 * n)
        padded[:n] = centered
        spectrum = np.fft.rfft(padded)
        autocov = np.fft.irfft(spectrum * np.conj(spectrum))[:n] / n
        acf += autocov / var
    acf /= n_chains

    tau = 1.0
    k = 1
    while k + 1 < n:
        pair = acf[k] + acf[k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        k += 2
    return float(min(total / tau, total))
