"""Per-node survival: baseline reliability, the workload kernel, and the
node survival conditional on a correlator realization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .process import Constant, IntensityFunction
from .quadrature import QuadratureSettings, adaptive_simpson
from .workload import (
    ServiceDistribution,
    StressDistribution,
    WorkloadRealization,
    shock_exposure,
)

__all__ = [
    "NodeSpec",
    "QuadratureSettings",
    "baseline_reliability",
    "f_kernel",
    "conditional_node_survival",
    "node_survival_unconditional",
]


@dataclass(frozen=True)
class NodeSpec:
    id: str
    baseline: IntensityFunction = Constant(0.0)
    private_intensity: IntensityFunction = Constant(0.0)

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("node id must be a nonempty string")


def baseline_reliability(node: NodeSpec, t: float) -> float:
    """``exp(-int_0^t r0(x) dx)``."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    return math.exp(-float(node.baseline.mean(t)))


def f_kernel(
    intensity: IntensityFunction,
    q: int,
    stress: StressDistribution,
    service: ServiceDistribution,
    t: float,
    quad: QuadratureSettings = QuadratureSettings(),
) -> float:
    """``E_H[q H int_0^t exp(-q H w) m(t - w) G_bar(w) dw]``.

    ``m`` is the mean function of ``intensity``.  The stress expectation is
    a weighted sum of one integral per support point.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if q < 1 or int(q) != q:
        raise ValueError(f"q must be a positive integer, got {q!r}")
    if t == 0 or intensity.is_zero:
        return 0.0
    splits = [t - k for k in intensity.kinks() if 0 < k < t]
    splits += [k for k in service.kinks() if 0 < k < t]

    total = 0.0
    for eta, p in zip(stress.support, stress.probs):
        rate = q * eta

        def integrand(w, rate=rate):
            return rate * np.exp(-rate * w) * intensity.mean(np.maximum(t - w, 0.0)) * service.survival(w)

        value, _ = adaptive_simpson(integrand, 0.0, t, quad, splits)
        total += p * value
    return max(total, 0.0)


def conditional_node_survival(
    node: NodeSpec,
    correlator_real: WorkloadRealization,
    stress: StressDistribution,
    service: ServiceDistribution,
    t: float,
    quad: QuadratureSettings = QuadratureSettings(),
) -> float:
    """Survival of ``node`` past ``t`` given the correlator's arrivals,
    services and stresses; the private stream is integrated out."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if correlator_real.horizon < t:
        raise ValueError(f"correlator realization horizon {correlator_real.horizon} < t={t}")
    private = f_kernel(node.private_intensity, 1, stress, service, t, quad)
    return baseline_reliability(node, t) * math.exp(-shock_exposure(correlator_real, t)) * math.exp(-private)


def node_survival_unconditional(
    node: NodeSpec,
    correlator_intensity: IntensityFunction,
    stress: StressDistribution,
    service: ServiceDistribution,
    t: float,
    quad: QuadratureSettings = QuadratureSettings(),
) -> float:
    private = f_kernel(node.private_intensity, 1, stress, service, t, quad)
    shared = f_kernel(correlator_intensity, 1, stress, service, t, quad)
    return baseline_reliability(node, t) * math.exp(-private - shared)
