"""Renyi-DP accounting for (subsampled) Gaussian mechanisms.

Composition is linear in Renyi orders; conversion to (epsilon, delta) takes
the minimum of eps_alpha + log(1/delta)/(alpha - 1). With sampling rate 1
the exact Gaussian-mechanism curve eps_alpha = alpha/(2 sigma^2) admits a
closed-form minimizer, used directly. For Poisson subsampling the per-step
Renyi divergence at integer orders is the binomial-expansion bound.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccountingError, CalibrationError, ConfigError

INTEGER_ORDERS = np.arange(2, 257)

SIGMA_MIN = 0.3
SIGMA_MAX = 100.0
CALIBRATION_RTOL = 1e-3

# delta grid used when scanning eps(delta) for the TPR bound
DELTA_GRID = np.logspace(np.log10(1e-9), np.log10(0.5), 40)


@dataclass(frozen=True)
class DpSpec:
    epsilon: float
    delta: float
    accountant: str = "rdp"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must be in (0, 1), got {self.delta}")
        if self.accountant != "rdp":
            raise ConfigError(f"unsupported accountant {self.accountant!r}")


def _log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def subsampled_gaussian_rdp(q: float, sigma: float, order: int) -> float:
    """Per-step Renyi divergence of the Poisson-subsampled Gaussian mechanism
    at an integer order >= 2."""
    log_terms = [
        _log_binom(order, k)
        + k * math.log(q)
        + (order - k) * math.log1p(-q)
        + k * (k - 1) / (2.0 * sigma * sigma)
        for k in range(order + 1)
    ]
    peak = max(log_terms)
    total = peak + math.log(sum(math.exp(t - peak) for t in log_terms))
    return max(total / (order - 1), 0.0)


def account_epsilon(
    noise_multiplier: float, steps: int, sampling_rate: float, delta: float
) -> float:
    """Epsilon spent by `steps` noisy gradient steps at the given rate."""
    if not noise_multiplier > 0:
        raise ConfigError(f"noise_multiplier must be > 0, got {noise_multiplier}")
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if not 0 < sampling_rate <= 1:
        raise ConfigError(f"sampling_rate must be in (0, 1], got {sampling_rate}")
    if not 0 < delta < 1:
        raise ConfigError(f"delta must be in (0, 1), got {delta}")
    log_inv_delta = math.log(1.0 / delta)
    if sampling_rate == 1.0:
        # composed Gaussian RDP: minimize A*alpha + log(1/delta)/(alpha-1)
        a = steps / (2.0 * noise_multiplier**2)
        return a + 2.0 * math.sqrt(a * log_inv_delta)
    candidates = [
        steps * subsampled_gaussian_rdp(sampling_rate, noise_multiplier, int(order))
        + log_inv_delta / (order - 1)
        for order in INTEGER_ORDERS
    ]
    eps = min(candidates)
    if not math.isfinite(eps):
        raise AccountingError(
            f"no Renyi order gives a finite epsilon for sigma={noise_multiplier}"
        )
    return eps


def calibrate_noise(target: DpSpec, steps: int, sampling_rate: float) -> float:
    """Smallest noise multiplier in [0.3, 100] whose accounted epsilon lands
    in [target*(1 - 1e-3), target]."""
    goal = target.epsilon

    def eps(sigma):
        return account_epsilon(sigma, steps, sampling_rate, target.delta)

    if eps(SIGMA_MAX) > goal:
        raise CalibrationError(
            f"epsilon {goal} unreachable with sigma <= {SIGMA_MAX}; "
            "use more noise or fewer steps"
        )
    if eps(SIGMA_MIN) <= goal:
        # even the floor already over-delivers privacy
        return SIGMA_MIN
    lo, hi = SIGMA_MIN, SIGMA_MAX
    for _ in range(200):
        if eps(hi) >= goal * (1.0 - CALIBRATION_RTOL):
            return hi
        mid = 0.5 * (lo + hi)
        if eps(mid) > goal:
            lo = mid
        else:
            hi = mid
    return hi


def epsilon_delta_curve(
    noise_multiplier: float, steps: int, sampling_rate: float, deltas=None
) -> list[tuple[float, float]]:
    """(epsilon, delta) pairs over a delta grid, for the TPR bound scan."""
    deltas = DELTA_GRID if deltas is None else deltas
    return [
        (account_epsilon(noise_multiplier, steps, sampling_rate, float(d)), float(d))
        for d in deltas
    ]


def training_epsilon_curve(
    noise_multiplier: float, batch_size: int, epochs: int, n_samples: int, deltas=None
) -> list[tuple[float, float]]:
    """eps(delta) curve actually spent by one training run, from its shape."""
    batch_eff = min(batch_size, n_samples)
    steps = epochs * math.ceil(n_samples / batch_eff)
    return epsilon_delta_curve(noise_multiplier, steps, batch_eff / n_samples, deltas)
