"""Job stress and service-time laws shared by every stream."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .process import ArrivalRealization, IntensityFunction, sample_arrival_batch

__all__ = [
    "StressDistribution",
    "ServiceDistribution",
    "Exponential",
    "Uniform",
    "Weibull",
    "WorkloadRealization",
    "service_survival",
    "stress_expectation",
    "shock_exposure",
    "exposure_on_grid",
    "sample_workload",
]

PROB_TOL = 1e-12
# Sums this close to 1 are left alone so that reloading is idempotent.
_RENORM_TOL = 1e-15


@dataclass(frozen=True)
class StressDistribution:
    """Finite discrete stress law: ``P(H = support[i]) = probs[i]``."""

    support: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        support = tuple(float(x) for x in self.support)
        probs = tuple(float(p) for p in self.probs)
        if not support:
            raise ValueError("stress support must be nonempty")
        if len(support) != len(probs):
            raise ValueError("stress support and probs must have equal length")
        if any(not (x > 0 and math.isfinite(x)) for x in support):
            raise ValueError(f"stress values must be positive and finite, got {support}")
        if len(set(support)) != len(support):
            raise ValueError(f"stress support values must be distinct, got {support}")
        if any(not (p > 0) for p in probs):
            raise ValueError(f"stress probabilities must be positive, got {probs}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"stress probabilities must sum to 1, got {total!r}")
        object.__setattr__(self, "support", support)
        if abs(total - 1.0) > _RENORM_TOL:
            probs = tuple(p / total for p in probs)
        object.__setattr__(self, "probs", probs)

    @property
    def mean(self) -> float:
        return stress_expectation(self, lambda x: x)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if len(self.support) == 1:
            return np.full(size, self.support[0])
        idx = rng.choice(len(self.support), size=size, p=np.asarray(self.probs))
        return np.asarray(self.support)[idx]


class ServiceDistribution:
    """Continuous service-time law with survival ``G_bar(w) = P(W > w)``."""

    def survival(self, w):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def kinks(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    rate: float

    def __post_init__(self) -> None:
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"exponential rate must be positive, got {self.rate!r}")

    def survival(self, w):
        return np.exp(-self.rate * np.asarray(w, dtype=float))

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size=size)


@dataclass(frozen=True)
class Uniform(ServiceDistribution):
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (self.lo >= 0 and math.isfinite(self.hi) and self.hi > self.lo):
            raise ValueError(f"uniform service needs 0 <= lo < hi, got lo={self.lo!r}, hi={self.hi!r}")

    def survival(self, w):
        w = np.asarray(w, dtype=float)
        return np.clip((self.hi - w) / (self.hi - self.lo), 0.0, 1.0)

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size=size)

    def kinks(self) -> tuple[float, ...]:
        return (self.lo, self.hi) if self.lo > 0 else (self.hi,)


@dataclass(frozen=True)
class Weibull(ServiceDistribution):
    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError(f"weibull shape and scale must be positive, got {self.shape!r}, {self.scale!r}")

    def survival(self, w):
        w = np.asarray(w, dtype=float)
        return np.exp(-((w / self.scale) ** self.shape))

    def sample(self, rng, size):
        return self.scale * rng.weibull(self.shape, size=size)


@dataclass(frozen=True)
class WorkloadRealization:
    arrivals: ArrivalRealization
    services: np.ndarray
    stresses: np.ndarray

    def __post_init__(self) -> None:
        services = np.asarray(self.services, dtype=float)
        stresses = np.asarray(self.stresses, dtype=float)
        object.__setattr__(self, "services", services)
        object.__setattr__(self, "stresses", stresses)
        n = len(self.arrivals)
        if services.shape != (n,) or stresses.shape != (n,):
            raise ValueError("services and stresses must match the number of arrivals")

    @property
    def horizon(self) -> float:
        return self.arrivals.horizon


def service_survival(dist: ServiceDistribution, w: float) -> float:
    if w < 0:
        raise ValueError(f"service_survival requires w >= 0, got {w!r}")
    return float(dist.survival(w))


def stress_expectation(dist: StressDistribution, f: Callable[[float], float]) -> float:
    """``E_H[f(H)]`` for the finite stress law."""
    return math.fsum(p * f(x) for x, p in zip(dist.support, dist.probs))


def shock_exposure(real: WorkloadRealization, t: float) -> float:
    """Realized cumulative hazard ``sum_j H_j * min(W_j, t - T_j)`` over ``T_j <= t``."""
    if t < 0:
        raise ValueError(f"shock_exposure requires t >= 0, got {t!r}")
    elapsed = t - real.arrivals.arrival_times
    active = elapsed >= 0
    return math.fsum(real.stresses[active] * np.minimum(real.services[active], elapsed[active]))


def exposure_on_grid(
    owner: np.ndarray,
    times: np.ndarray,
    services: np.ndarray,
    stresses: np.ndarray,
    grid: np.ndarray,
    size: int,
) -> np.ndarray:
    """Shock exposure of many flat-packed realizations at every grid time.

    Returns an array of shape ``(size, len(grid))``.
    """
    out = np.zeros((size, grid.size))
    if times.size == 0:
        return out
    for g, t in enumerate(grid):
        contrib = stresses * np.clip(np.minimum(services, t - times), 0.0, None)
        out[:, g] = np.bincount(owner, weights=contrib, minlength=size)
    return out


def sample_workload_batch(
    intensity: IntensityFunction,
    stress: StressDistribution,
    service: ServiceDistribution,
    horizon: float,
    size: int,
    rng: np.random.Generator,
):
    """Flat-packed batch of workloads: ``(counts, owner, times, services, stresses)``."""
    counts, times = sample_arrival_batch(intensity, horizon, size, rng)
    n = times.size
    services = service.sample(rng, n)
    stresses = stress.sample(rng, n)
    owner = np.repeat(np.arange(size), counts)
    return counts, owner, times, services, stresses


def sample_workload(
    intensity: IntensityFunction,
    stress: StressDistribution,
    service: ServiceDistribution,
    horizon: float,
    rng: np.random.Generator,
) -> WorkloadRealization:
    _, _, times, services, stresses = sample_workload_batch(
        intensity, stress, service, horizon, 1, rng
    )
    return WorkloadRealization(ArrivalRealization(times, float(horizon)), services, stresses)
