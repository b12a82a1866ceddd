"""Closed-form system survival for nodes coupled by a shared correlator stream.

Each monomial ``prod x_l**q_l`` of the structure-function expansion maps to

    prod_l F0_l(t)**q_l * exp(-sum_l q_l * K_l) * exp(-K_c(Q))

where ``K_l`` is the private-stream kernel with multiplier 1 and ``K_c(Q)``
is the correlator kernel with multiplier ``Q = sum_l q_l``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .node_survival import NodeSpec, baseline_reliability, f_kernel
from .process import IntensityFunction, superpose
from .quadrature import QuadratureSettings, adaptive_simpson
from .structure import (
    Component,
    MonomialExpansion,
    Parallel,
    Series,
    StructureExpr,
    component_ids,
    expand,
    min_path_sets,
)
from .workload import ServiceDistribution, StressDistribution

__all__ = [
    "SystemModel",
    "SurvivalCurve",
    "TermSurvival",
    "ProbabilityRangeWarning",
    "model_expansion",
    "term_breakdown",
    "term_survival",
    "system_survival",
    "series_survival_direct",
    "parallel_survival_direct",
    "survival_curve",
    "stream_correlation",
]

RANGE_SLACK = 1e-9


class ProbabilityRangeWarning(RuntimeWarning):
    """A closed-form value fell outside [0, 1] by more than ``RANGE_SLACK``."""


@dataclass(frozen=True)
class SystemModel:
    nodes: tuple[NodeSpec, ...]
    correlator: IntensityFunction
    stress: StressDistribution
    service: ServiceDistribution
    topology: StructureExpr

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.nodes:
            raise ValueError("a system needs at least one node")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"node ids must be unique, got {ids}")
        unknown = component_ids(self.topology) - set(ids)
        if unknown:
            raise ValueError(f"topology references undeclared nodes: {sorted(unknown)}")

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(f"unknown node id {node_id!r}")


@dataclass(frozen=True)
class SurvivalCurve:
    grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    provenance: Mapping[str, object] = field(default_factory=dict)
    out_of_range: bool = False

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))
        if grid.shape != values.shape:
            raise ValueError("grid and values must have the same shape")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class TermSurvival:
    """Audit record for one monomial's unconditional survival."""

    value: float
    correlator_multiplier: int
    baseline_factor: float
    private_exponent: float
    correlator_exponent: float


class _KernelCache:
    """Memoises kernels per (stream, multiplier) at a fixed time."""

    def __init__(self, model: SystemModel, t: float, quad: QuadratureSettings):
        self.model, self.t, self.quad = model, t, quad
        self._private: dict[str, float] = {}
        self._shared: dict[int, float] = {}
        self._baseline: dict[str, float] = {}

    def private(self, node_id: str) -> float:
        if node_id not in self._private:
            node = self.model.node(node_id)
            self._private[node_id] = f_kernel(
                node.private_intensity, 1, self.model.stress, self.model.service, self.t, self.quad
            )
        return self._private[node_id]

    def shared(self, q: int) -> float:
        if q not in self._shared:
            self._shared[q] = f_kernel(
                self.model.correlator, q, self.model.stress, self.model.service, self.t, self.quad
            )
        return self._shared[q]

    def baseline(self, node_id: str) -> float:
        if node_id not in self._baseline:
            self._baseline[node_id] = baseline_reliability(self.model.node(node_id), self.t)
        return self._baseline[node_id]


def model_expansion(model: SystemModel, mode: str = "idempotent") -> MonomialExpansion:
    return expand(min_path_sets(model.topology), mode)


def _term(cache: _KernelCache, exponents: Mapping[str, int]) -> TermSurvival:
    if not exponents:
        raise ValueError("exponents must be nonempty")
    q_total = 0
    base = 1.0
    private = 0.0
    for node_id, q in exponents.items():
        if q < 1:
            raise ValueError(f"exponent for {node_id!r} must be a positive integer, got {q!r}")
        base *= cache.baseline(node_id) ** q
        private += q * cache.private(node_id)
        q_total += q
    shared = cache.shared(q_total)
    return TermSurvival(
        value=base * math.exp(-private - shared),
        correlator_multiplier=q_total,
        baseline_factor=base,
        private_exponent=private,
        correlator_exponent=shared,
    )


def term_breakdown(
    model: SystemModel,
    exponents: Mapping[str, int],
    t: float,
    quad: QuadratureSettings = QuadratureSettings(),
) -> TermSurvival:
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    for node_id in exponents:
        model.node(node_id)
    return _term(_KernelCache(model, t, quad), exponents)


def term_survival(
    model: SystemModel,
    exponents: Mapping[str, int],
    t: float,
    quad: QuadratureSettings = QuadratureSettings(),
) -> float:
    """Unconditional expectation of ``prod_l xi_l(t)**q_l``."""
    return term_breakdown(model, exponents, t, quad).value


def _from_expansion(
    model: SystemModel, expansion: MonomialExpansion, t: float, quad: QuadratureSettings
) -> float:
    cache = _KernelCache(model, t, quad)
    return math.fsum(term.coeff * _term(cache, term.exponents).value for term in expansion.terms)


def _check_range(value: float, t: float, mode: str) -> bool:
    if value < -RANGE_SLACK or value > 1 + RANGE_SLACK:
        warnings.warn(
            f"{mode}-mode survival at t={t!r} is {value!r}, outside [0, 1]",
            ProbabilityRangeWarning,
            stacklevel=3,
        )
        return True
    return False


def system_survival(
    model: SystemModel,
    t: float,
    mode: str = "idempotent",
    quad: QuadratureSettings = QuadratureSettings(),
) -> float:
    """Closed-form ``P(Y_S > t)``.

    Values outside [0, 1] by more than ``RANGE_SLACK`` emit a
    ``ProbabilityRangeWarning`` and are returned unclamped.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    value = _from_expansion(model, model_expansion(model, mode), t, quad)
    _check_range(value, t, mode)
    return value


def _flat_members(model: SystemModel, kind: type) -> list[str]:
    topo = model.topology
    if isinstance(topo, Component):
        members = [topo.id]
    elif isinstance(topo, kind) and all(isinstance(c, Component) for c in topo.children):
        members = [c.id for c in topo.children]
    else:
        raise ValueError(f"topology is not a flat {kind.__name__.lower()} of components")
    if sorted(members) != sorted(n.id for n in model.nodes):
        raise ValueError(f"topology must be a {kind.__name__.lower()} of all nodes exactly once")
    return members


def _combined_kernel(
    model: SystemModel,
    private: Sequence[IntensityFunction],
    multiplier: int,
    t: float,
    quad: QuadratureSettings,
) -> float:
    """One integral per stress value of the summed private mean functions plus
    the correlator term with multiplier ``multiplier``."""
    if t == 0:
        return 0.0
    pooled = superpose(list(private)) if private else None
    service, corr = model.service, model.correlator
    kinks = set(service.kinks()) | {t - k for k in corr.kinks()}
    if pooled is not None:
        kinks |= {t - k for k in pooled.kinks()}
    total = 0.0
    for eta, p in zip(model.stress.support, model.stress.probs):

        def integrand(w, eta=eta):
            back = np.maximum(t - w, 0.0)
            own = eta * np.exp(-eta * w) * pooled.mean(back) if pooled is not None else 0.0
            shared = multiplier * eta * np.exp(-multiplier * eta * w) * corr.mean(back)
            return service.survival(w) * (own + shared)

        value, _ = adaptive_simpson(integrand, 0.0, t, quad, kinks)
        total += p * value
    return total


def series_survival_direct(
    model: SystemModel, t: float, quad: QuadratureSettings = QuadratureSettings()
) -> float:
    """Series of all ``K`` nodes with the pooled private stream integrated once
    and the correlator kernel at multiplier ``K``."""
    members = _flat_members(model, Series)
    nodes = [model.node(i) for i in members]
    base = math.prod(baseline_reliability(n, t) for n in nodes)
    exponent = _combined_kernel(model, [n.private_intensity for n in nodes], len(nodes), t, quad)
    return base * math.exp(-exponent)


def parallel_survival_direct(
    model: SystemModel, t: float, quad: QuadratureSettings = QuadratureSettings()
) -> float:
    """Parallel of all ``K`` nodes by explicit inclusion-exclusion over the
    ``2**K`` choices of surviving index set."""
    members = _flat_members(model, Parallel)
    nodes = [model.node(i) for i in members]
    total = []
    for s in product((0, 1), repeat=len(nodes)):
        chosen = [n for n, s_l in zip(nodes, s) if s_l == 0]
        if not chosen:
            # Empty product contributes the leading 1 of 1 - prod(1 - xi).
            continue
        base = math.prod(baseline_reliability(n, t) for n in chosen)
        exponent = _combined_kernel(model, [n.private_intensity for n in chosen], len(chosen), t, quad)
        total.append((-1) ** (len(chosen) + 1) * base * math.exp(-exponent))
    return math.fsum(total)


def survival_curve(
    model: SystemModel,
    grid: Sequence[float],
    mode: str = "idempotent",
    quad: QuadratureSettings = QuadratureSettings(),
) -> SurvivalCurve:
    grid = np.asarray(grid, dtype=float)
    if grid.size and grid[0] < 0:
        raise ValueError("grid must be nonnegative")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    expansion = model_expansion(model, mode)
    values = np.array([_from_expansion(model, expansion, float(t), quad) for t in grid])
    flagged = any(_check_range(v, t, mode) for v, t in zip(values, grid))
    return SurvivalCurve(
        grid, values, None, {"kind": "closed_form", "mode": mode}, out_of_range=flagged
    )


def stream_correlation(
    model: SystemModel,
    i: str,
    j: str,
    t: float,
    convention: str = "mean_function",
) -> float:
    """Correlation of the composite streams of nodes ``i`` and ``j`` at ``t``.

    ``mean_function`` uses cumulative intensities (the NHPP count variance);
    ``paper_intensity`` substitutes instantaneous rates.
    """
    if i == j:
        raise ValueError("stream_correlation needs two distinct nodes")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t!r}")
    if convention == "mean_function":
        g = lambda f: float(f.mean(t))  # noqa: E731
    elif convention == "paper_intensity":
        g = lambda f: float(f.rate(t))  # noqa: E731
    else:
        raise ValueError(f"unknown convention {convention!r}")
    gi = g(model.node(i).private_intensity)
    gj = g(model.node(j).private_intensity)
    gc = g(model.correlator)
    denom = math.sqrt((gi + gc) * (gj + gc))
    if denom == 0:
        raise ValueError("correlation undefined: both composite streams have zero rate")
    return gc / denom
