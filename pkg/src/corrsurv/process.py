"""Nonhomogeneous Poisson process primitives.

Intensities carry an exact mean function ``m(t) = int_0^t lambda(s) ds`` so
that no quadrature is ever nested inside another quadrature.  Sampling uses
exact inversion of ``m`` for piecewise-constant rates and thinning against a
piecewise-constant majorant otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "IntensityFunction",
    "Constant",
    "Linear",
    "PiecewiseConstant",
    "SumIntensity",
    "ArrivalRealization",
    "mean_function",
    "superpose",
    "sample_arrivals",
    "sample_arrival_batch",
]


class IntensityFunction:
    """Base class for nonnegative rates ``lambda(t)`` on ``t >= 0``."""

    def rate(self, t):
        raise NotImplementedError

    def mean(self, t):
        """Vectorised ``m(t)``; callers guarantee ``t >= 0``."""
        raise NotImplementedError

    def kinks(self) -> tuple[float, ...]:
        """Times where ``lambda`` is not smooth."""
        return ()

    def majorant(self, horizon: float) -> "PiecewiseConstant":
        """A piecewise-constant rate dominating ``lambda`` on ``[0, horizon]``."""
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class Constant(IntensityFunction):
    rate_value: float

    def __post_init__(self) -> None:
        if not (self.rate_value >= 0 and math.isfinite(self.rate_value)):
            raise ValueError(f"constant rate must be finite and >= 0, got {self.rate_value!r}")

    def rate(self, t):
        return np.zeros_like(np.asarray(t, dtype=float)) + self.rate_value

    def mean(self, t):
        return self.rate_value * np.asarray(t, dtype=float)

    def majorant(self, horizon: float) -> "PiecewiseConstant":
        return PiecewiseConstant((), (self.rate_value,))

    @property
    def is_zero(self) -> bool:
        return self.rate_value == 0


@dataclass(frozen=True)
class Linear(IntensityFunction):
    """``lambda(t) = max(base + slope * t, 0)``."""

    base: float
    slope: float

    def __post_init__(self) -> None:
        if not (self.base >= 0 and math.isfinite(self.base)):
            raise ValueError(f"linear base must be finite and >= 0, got {self.base!r}")
        if not math.isfinite(self.slope):
            raise ValueError(f"linear slope must be finite, got {self.slope!r}")

    @property
    def zero_time(self) -> float:
        """Time at which the clipped rate reaches zero (inf if never)."""
        if self.slope >= 0:
            return math.inf
        return -self.base / self.slope

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(self.base + self.slope * t, 0.0)

    def mean(self, t):
        t = np.minimum(np.asarray(t, dtype=float), self.zero_time)
        return self.base * t + 0.5 * self.slope * t * t

    def kinks(self) -> tuple[float, ...]:
        t0 = self.zero_time
        return (t0,) if 0 < t0 < math.inf else ()

    def majorant(self, horizon: float) -> "PiecewiseConstant":
        top = max(self.base, self.base + self.slope * horizon)
        return PiecewiseConstant((), (top,))

    @property
    def is_zero(self) -> bool:
        return self.base == 0 and self.slope <= 0


@dataclass(frozen=True)
class PiecewiseConstant(IntensityFunction):
    """Rate ``rates[i]`` on ``[breakpoints[i-1], breakpoints[i])``; the last
    rate extends to infinity."""

    breakpoints: tuple[float, ...]
    rates: tuple[float, ...]
    _edges: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        breaks = tuple(float(b) for b in self.breakpoints)
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "breakpoints", breaks)
        object.__setattr__(self, "rates", rates)
        if len(rates) != len(breaks) + 1:
            raise ValueError(
                f"piecewise intensity needs len(rates) == len(breakpoints) + 1, "
                f"got {len(rates)} rates for {len(breaks)} breakpoints"
            )
        if any(not (r >= 0 and math.isfinite(r)) for r in rates):
            raise ValueError(f"piecewise rates must be finite and >= 0, got {rates}")
        if breaks and (breaks[0] <= 0 or any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:]))):
            raise ValueError(f"breakpoints must be positive and strictly increasing, got {breaks}")
        if any(not math.isfinite(b) for b in breaks):
            raise ValueError("breakpoints must be finite")
        edges = np.array((0.0,) + breaks)
        widths = np.diff(edges)
        cum = np.concatenate(([0.0], np.cumsum(widths * np.array(rates[:-1]))))
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_cum", cum)

    def _segment(self, t: np.ndarray) -> np.ndarray:
        return np.searchsorted(self._edges, t, side="right") - 1

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(self._segment(t), 0, len(self.rates) - 1)
        return np.asarray(self.rates)[idx]

    def mean(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(self._segment(t), 0, len(self.rates) - 1)
        return self._cum[idx] + np.asarray(self.rates)[idx] * (t - self._edges[idx])

    def inverse_mean(self, y: np.ndarray) -> np.ndarray:
        """Smallest ``t`` with ``m(t) = y``; ``y`` must be below ``m(inf)``."""
        y = np.asarray(y, dtype=float)
        rates = np.asarray(self.rates)
        # Zero-rate segments have equal cumulative endpoints; side="right"
        # skips them so every hit lands in a segment with positive rate.
        idx = np.searchsorted(self._cum, y, side="right") - 1
        idx = np.clip(idx, 0, len(rates) - 1)
        return self._edges[idx] + (y - self._cum[idx]) / rates[idx]

    def kinks(self) -> tuple[float, ...]:
        return self.breakpoints

    def majorant(self, horizon: float) -> "PiecewiseConstant":
        return self

    @property
    def is_zero(self) -> bool:
        return all(r == 0 for r in self.rates)


@dataclass(frozen=True)
class SumIntensity(IntensityFunction):
    """Explicit superposition; used when no exact single-variant form exists."""

    parts: tuple[IntensityFunction, ...]

    def rate(self, t):
        return sum(p.rate(t) for p in self.parts)

    def mean(self, t):
        return sum(p.mean(t) for p in self.parts)

    def kinks(self) -> tuple[float, ...]:
        return tuple(sorted({k for p in self.parts for k in p.kinks()}))

    def majorant(self, horizon: float) -> PiecewiseConstant:
        if horizon <= 0:
            return PiecewiseConstant((), (float(self.rate(0.0)),))
        cuts = sorted({k for k in self.kinks() if 0 < k < horizon})
        edges = [0.0] + cuts + [float(horizon)]
        # Each part is monotone between kinks, so its supremum on [a, b)
        # is attained at a or as the left limit at b.
        rates = [
            sum(max(float(p.rate(a)), float(p.rate(np.nextafter(b, a)))) for p in self.parts)
            for a, b in zip(edges, edges[1:])
        ]
        rates.append(rates[-1])
        return PiecewiseConstant(tuple(edges[1:]), tuple(rates))

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in self.parts)


@dataclass(frozen=True)
class ArrivalRealization:
    arrival_times: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        times = np.asarray(self.arrival_times, dtype=float)
        object.__setattr__(self, "arrival_times", times)
        if times.size and (times[0] < 0 or times[-1] > self.horizon):
            raise ValueError("arrival times must lie in [0, horizon]")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("arrival times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.arrival_times.size)

    def count(self, t: float) -> int:
        return int(np.searchsorted(self.arrival_times, t, side="right"))


def mean_function(intensity: IntensityFunction, t: float) -> float:
    """Exact cumulative intensity ``m(t)``."""
    if t < 0:
        raise ValueError(f"mean_function requires t >= 0, got {t!r}")
    return float(intensity.mean(t))


def superpose(intensities: Sequence[IntensityFunction]) -> IntensityFunction:
    """Intensity of the sum of independent NHPPs.

    Constants collapse to a constant, constants and piecewise rates to a
    piecewise rate, and nonnegative-slope linear rates (which never clip) to
    a linear rate.  Anything else becomes a :class:`SumIntensity`.
    """
    parts = list(intensities)
    if not parts:
        raise ValueError("superpose needs at least one intensity")
    if len(parts) == 1:
        return parts[0]
    flat: list[IntensityFunction] = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, SumIntensity) else (p,))

    if all(isinstance(p, Constant) for p in flat):
        return Constant(sum(p.rate_value for p in flat))
    if all(isinstance(p, (Constant, PiecewiseConstant)) for p in flat):
        breaks = sorted({b for p in flat for b in p.kinks()})
        probe = np.array([0.0] + breaks)
        rates = sum(np.asarray(p.rate(probe), dtype=float) for p in flat)
        return PiecewiseConstant(tuple(breaks), tuple(float(r) for r in rates))
    if all(isinstance(p, Constant) or (isinstance(p, Linear) and p.slope >= 0) for p in flat):
        base = sum(p.rate_value if isinstance(p, Constant) else p.base for p in flat)
        slope = sum(p.slope for p in flat if isinstance(p, Linear))
        return Linear(base, slope)
    return SumIntensity(tuple(flat))


def _separate_ties(times: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Ties have probability zero; nudge duplicates upward by a few ulps.
    while times.size > 1:
        dup = np.flatnonzero(np.diff(times) <= 0) + 1
        if dup.size == 0:
            break
        steps = 1 + rng.integers(0, 4, size=dup.size)
        for i, k in zip(dup, steps):
            v = times[i - 1]
            for _ in range(int(k)):
                v = np.nextafter(v, np.inf)
            times[i] = v
    return times


def sample_arrival_batch(
    intensity: IntensityFunction,
    horizon: float,
    size: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``size`` independent realizations on ``[0, horizon]``.

    Returns ``(counts, times)`` where ``times`` is flat, grouped by
    realization in order, and sorted within each group.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon!r}")
    if intensity.is_zero or horizon == 0:
        return np.zeros(size, dtype=np.int64), np.empty(0)

    exact = isinstance(intensity, (Constant, PiecewiseConstant))
    envelope = intensity.majorant(horizon) if not exact else None
    if isinstance(intensity, Constant):
        envelope = PiecewiseConstant((), (intensity.rate_value,))
    elif isinstance(intensity, PiecewiseConstant):
        envelope = intensity

    total_mass = float(envelope.mean(horizon))
    counts = rng.poisson(total_mass, size=size)
    n = int(counts.sum())
    owner = np.repeat(np.arange(size), counts)
    levels = rng.uniform(0.0, total_mass, size=n)
    times = np.minimum(envelope.inverse_mean(levels), horizon)

    if not exact:
        u = rng.uniform(0.0, 1.0, size=n)
        keep = u * envelope.rate(times) < intensity.rate(times)
        owner, times = owner[keep], times[keep]
        counts = np.bincount(owner, minlength=size).astype(np.int64)

    order = np.lexsort((times, owner))
    times, owner = times[order], owner[order]
    tied = (np.diff(times) <= 0) & (owner[1:] == owner[:-1])
    if tied.any():
        starts = np.concatenate(([0], np.cumsum(counts)))
        for i in np.unique(owner[1:][tied]):
            seg = times[starts[i] : starts[i + 1]]
            times[starts[i] : starts[i + 1]] = _separate_ties(seg.copy(), rng)
    return counts, times


def sample_arrivals(
    intensity: IntensityFunction, horizon: float, rng: np.random.Generator
) -> ArrivalRealization:
    """One NHPP realization on ``[0, horizon]``."""
    _, times = sample_arrival_batch(intensity, horizon, 1, rng)
    return ArrivalRealization(np.minimum(times, horizon), float(horizon))
