"""Monte Carlo ground truth for the closed forms.

Replications are grouped into fixed-size blocks.  Block ``b`` draws from a
Philox stream keyed by ``(seed, b)``, so results depend only on
``(seed, reps)`` and never on how blocks are scheduled across threads.
Per-block means and sums of squares are merged in block order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import optimize, stats

from .node_survival import NodeSpec, baseline_reliability, f_kernel
from .process import (
    Constant,
    IntensityFunction,
    PiecewiseConstant,
    sample_arrival_batch,
    superpose,
)
from .quadrature import QuadratureSettings
from .structure import evaluate, expand, min_path_sets
from .system_survival import SurvivalCurve, SystemModel
from .workload import (
    WorkloadRealization,
    exposure_on_grid,
    sample_workload,
    sample_workload_batch,
    shock_exposure,
)

__all__ = [
    "BLOCK_SIZE",
    "ESTIMATORS",
    "SystemRealization",
    "EstimatorConfig",
    "NodeLifetime",
    "CovarianceEstimate",
    "SuperpositionReport",
    "block_rng",
    "sample_system_realization",
    "integrated_hazard",
    "sample_node_lifetime",
    "simulate_node_states",
    "estimate_system_survival",
    "estimate_stream_covariance",
    "verify_superposition",
]

BLOCK_SIZE = 4096
ESTIMATORS = ("crude", "rao_blackwell")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


@dataclass(frozen=True)
class SystemRealization:
    private: Mapping[str, WorkloadRealization]
    correlator: WorkloadRealization
    horizon: float

    def __post_init__(self) -> None:
        horizons = {r.horizon for r in self.private.values()} | {self.correlator.horizon}
        if horizons != {self.horizon}:
            raise ValueError("all realizations must share the system horizon")


@dataclass(frozen=True)
class EstimatorConfig:
    reps: int
    seed: int
    estimator: str = "crude"

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")


@dataclass(frozen=True)
class NodeLifetime:
    time: float
    censored: bool


@dataclass(frozen=True)
class CovarianceEstimate:
    covariance: float
    covariance_se: float
    correlation: float
    se: float


@dataclass(frozen=True)
class SuperpositionReport:
    expected_mean: float
    sample_mean: float
    statistic: float
    p_value: float
    dof: int
    independent_statistic: float
    independent_p_value: float


def sample_system_realization(
    model: SystemModel, horizon: float, rng: np.random.Generator
) -> SystemRealization:
    correlator = sample_workload(model.correlator, model.stress, model.service, horizon, rng)
    private = {
        n.id: sample_workload(n.private_intensity, model.stress, model.service, horizon, rng)
        for n in model.nodes
    }
    return SystemRealization(private, correlator, float(horizon))


def integrated_hazard(node: NodeSpec, sysreal: SystemRealization, t: float) -> float:
    """``int_0^t B(s) ds``: baseline plus private and correlator shock exposure."""
    if t < 0 or t > sysreal.horizon:
        raise ValueError(f"t={t!r} outside [0, horizon={sysreal.horizon}]")
    return (
        float(node.baseline.mean(t))
        + shock_exposure(sysreal.private[node.id], t)
        + shock_exposure(sysreal.correlator, t)
    )


def _exposure_curve(real: WorkloadRealization, grid: np.ndarray) -> np.ndarray:
    owner = np.zeros(real.services.size, dtype=np.int64)
    times = real.arrivals.arrival_times
    return exposure_on_grid(owner, times, real.services, real.stresses, grid, 1)[0]


def sample_node_lifetime(
    node: NodeSpec,
    sysreal: SystemRealization,
    rng: np.random.Generator | None = None,
    exposure: float | None = None,
) -> NodeLifetime:
    """Invert the integrated hazard at a standard exponential level.

    ``exposure`` overrides the random level.  Lifetimes beyond the horizon
    come back censored at the horizon.
    """
    level = rng.standard_exponential() if exposure is None else float(exposure)
    horizon = sysreal.horizon
    if level <= 0:
        return NodeLifetime(0.0, False)
    if integrated_hazard(node, sysreal, horizon) < level:
        return NodeLifetime(horizon, True)

    points = {0.0, horizon}
    for real in (sysreal.private[node.id], sysreal.correlator):
        starts = real.arrivals.arrival_times
        points.update(starts.tolist())
        points.update((starts + real.services).tolist())
    points.update(node.baseline.kinks())
    knots = np.array(sorted(p for p in points if 0.0 <= p <= horizon))
    values = node.baseline.mean(knots) + sum(
        _exposure_curve(real, knots) for real in (sysreal.private[node.id], sysreal.correlator)
    )
    k = int(np.searchsorted(values, level, side="left"))
    if values[k] == level:
        return NodeLifetime(float(knots[k]), False)
    a, b = knots[k - 1], knots[k]
    if isinstance(node.baseline, (Constant, PiecewiseConstant)):
        # Hazard is linear between knots.
        frac = (level - values[k - 1]) / (values[k] - values[k - 1])
        return NodeLifetime(float(a + frac * (b - a)), False)
    root = optimize.brentq(
        lambda s: integrated_hazard(node, sysreal, s) - level, a, b, xtol=1e-14, rtol=1e-15
    )
    return NodeLifetime(float(root), False)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d sequence")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be nonnegative and strictly increasing")
    return grid


def _block_sizes(reps: int) -> list[int]:
    full, rest = divmod(reps, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _correlator_exposure(model, grid, size, rng) -> np.ndarray:
    _, owner, times, services, stresses = sample_workload_batch(
        model.correlator, model.stress, model.service, float(grid[-1]), size, rng
    )
    return exposure_on_grid(owner, times, services, stresses, grid, size)


def _node_states(model, grid, size, rng):
    """Correlator exposure ``(size, G)`` and node up-states ``(size, G, n)``."""
    horizon = float(grid[-1])
    shared = _correlator_exposure(model, grid, size, rng)
    up = np.empty((size, grid.size, len(model.nodes)), dtype=bool)
    for k, node in enumerate(model.nodes):
        _, owner, times, services, stresses = sample_workload_batch(
            node.private_intensity, model.stress, model.service, horizon, size, rng
        )
        hazard = node.baseline.mean(grid)[None, :] + shared
        hazard = hazard + exposure_on_grid(owner, times, services, stresses, grid, size)
        level = rng.standard_exponential(size)
        # Y > t exactly when the integrated hazard at t is below the level.
        up[:, :, k] = hazard < level[:, None]
    return shared, up


def simulate_node_states(model: SystemModel, grid, reps: int, seed: int):
    """Per-replication correlator exposure and node states (crude sampler)."""
    grid = _check_grid(grid)
    parts = [_node_states(model, grid, n, block_rng(seed, b)) for b, n in enumerate(_block_sizes(reps))]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _merge(stats_list):
    n_tot, mean_tot, m2_tot = 0, None, None
    for n, mean, m2 in stats_list:
        if mean_tot is None:
            n_tot, mean_tot, m2_tot = n, mean, m2
            continue
        combined = n_tot + n
        delta = mean - mean_tot
        mean_tot = mean_tot + delta * (n / combined)
        m2_tot = m2_tot + m2 + delta * delta * (n_tot * n / combined)
        n_tot = combined
    return n_tot, mean_tot, m2_tot


def _summary(values: np.ndarray):
    mean = values.mean(axis=0)
    return values.shape[0], mean, ((values - mean) ** 2).sum(axis=0)


def estimate_system_survival(
    model: SystemModel,
    grid,
    cfg: EstimatorConfig,
    quad: QuadratureSettings = QuadratureSettings(),
    workers: int = 1,
) -> SurvivalCurve:
    """Monte Carlo estimate of ``P(Y_S > t)`` with standard errors.

    ``crude`` samples every node lifetime; ``rao_blackwell`` samples only the
    correlator and averages the conditional system survival.
    """
    grid = _check_grid(grid)
    paths = min_path_sets(model.topology)
    index = {n.id: k for k, n in enumerate(model.nodes)}
    columns = [[index[i] for i in sorted(p)] for p in paths]

    if cfg.estimator == "crude":

        def run(block: int, size: int):
            _, up = _node_states(model, grid, size, block_rng(cfg.seed, block))
            state = np.zeros((size, grid.size), dtype=bool)
            for cols in columns:
                state |= up[:, :, cols].all(axis=2)
            return _summary(state.astype(float))

    else:
        expansion = expand(paths, "idempotent")
        own = {
            n.id: np.array(
                [
                    baseline_reliability(n, float(t))
                    * math.exp(-f_kernel(n.private_intensity, 1, model.stress, model.service, float(t), quad))
                    for t in grid
                ]
            )
            for n in model.nodes
        }

        def run(block: int, size: int):
            shared = np.exp(-_correlator_exposure(model, grid, size, block_rng(cfg.seed, block)))
            xi = {i: own[i][None, :] * shared for i in expansion.component_ids}
            return _summary(np.broadcast_to(evaluate(expansion, xi), (size, grid.size)))

    jobs = list(enumerate(_block_sizes(cfg.reps)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: run(*job), jobs))
    else:
        results = [run(*job) for job in jobs]

    n, mean, m2 = _merge(results)
    if n > 1:
        stderr = np.sqrt(m2 / (n - 1) / n)
    else:
        stderr = np.zeros(grid.size)
    return SurvivalCurve(
        grid,
        mean,
        stderr,
        {"kind": "simulated", "estimator": cfg.estimator, "reps": cfg.reps, "seed": cfg.seed},
    )


def _jackknife_correlation_se(x: np.ndarray, y: np.ndarray) -> float:
    n = x.size
    x = x - x.mean()
    y = y - y.mean()
    sx, sy = x.sum(), y.sum()
    sxx, syy, sxy = (x * x).sum(), (y * y).sum(), (x * y).sum()
    m = n - 1
    lx, ly = sx - x, sy - y
    cxy = (sxy - x * y) - lx * ly / m
    cxx = (sxx - x * x) - lx * lx / m
    cyy = (syy - y * y) - ly * ly / m
    with np.errstate(invalid="ignore", divide="ignore"):
        r = cxy / np.sqrt(cxx * cyy)
    if not np.all(np.isfinite(r)):
        return math.nan
    return float(np.sqrt((n - 1) / n * ((r - r.mean()) ** 2).sum()))


def estimate_stream_covariance(
    model: SystemModel, i: str, j: str, t: float, reps: int, seed: int
) -> CovarianceEstimate:
    """Sample covariance and correlation of ``N_i(t) + N_c(t)`` and
    ``N_j(t) + N_c(t)`` with a shared correlator draw."""
    if i == j:
        raise ValueError("need two distinct nodes")
    if t <= 0:
        raise ValueError(f"t must be > 0, got {t!r}")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    node_i, node_j = model.node(i), model.node(j)
    xs, ys = [], []
    for b, size in enumerate(_block_sizes(reps)):
        rng = block_rng(seed, b)
        nc, _ = sample_arrival_batch(model.correlator, t, size, rng)
        ni, _ = sample_arrival_batch(node_i.private_intensity, t, size, rng)
        nj, _ = sample_arrival_batch(node_j.private_intensity, t, size, rng)
        xs.append(ni + nc)
        ys.append(nj + nc)
    x = np.concatenate(xs).astype(float)
    y = np.concatenate(ys).astype(float)
    dx, dy = x - x.mean(), y - y.mean()
    prod = dx * dy
    cov = float(prod.sum() / (x.size - 1))
    cov_se = float(prod.std(ddof=1) / math.sqrt(x.size))
    denom = math.sqrt(float((dx * dx).sum() * (dy * dy).sum()))
    corr = float(prod.sum() / denom) if denom > 0 else math.nan
    return CovarianceEstimate(cov, cov_se, corr, _jackknife_correlation_se(x, y))


def _poisson_bins(mu: float, reps: int):
    """Group Poisson(mu) outcomes into bins with expected count >= 5."""
    upper = int(stats.poisson.ppf(1 - 1e-12, mu)) + 2 if mu > 0 else 1
    pmf = stats.poisson.pmf(np.arange(upper), mu)
    pmf[-1] += stats.poisson.sf(upper - 1, mu)
    edges, acc = [0], 0.0
    for k in range(upper):
        acc += pmf[k] * reps
        if acc >= 5:
            edges.append(k + 1)
            acc = 0.0
    if edges[-1] != upper:
        if len(edges) > 1:
            edges[-1] = upper
        else:
            edges.append(upper)
    probs = np.array([pmf[a:b].sum() for a, b in zip(edges, edges[1:])])
    return edges, probs / probs.sum()


def _chi_square(counts: np.ndarray, mu: float) -> tuple[float, float, int]:
    reps = counts.size
    edges, probs = _poisson_bins(mu, reps)
    if probs.size < 2:
        return 0.0, 1.0, 0
    clipped = np.minimum(counts, edges[-1] - 1)
    observed = np.array(
        [np.count_nonzero((clipped >= a) & (clipped < b)) for a, b in zip(edges, edges[1:])]
    )
    result = stats.chisquare(observed, probs * reps)
    return float(result.statistic), float(result.pvalue), probs.size - 1


def verify_superposition(
    int_a: IntensityFunction, int_b: IntensityFunction, t: float, reps: int, seed: int
) -> SuperpositionReport:
    """Chi-square fit of superposed counts at ``t`` to ``Poisson(m_a(t) + m_b(t))``.

    Also checks the sum of counts drawn independently from each part.
    """
    if reps < 1000:
        raise ValueError("verify_superposition needs reps >= 1000")
    mu = float(int_a.mean(t) + int_b.mean(t))
    merged = superpose([int_a, int_b])
    pooled, separate = [], []
    for b, size in enumerate(_block_sizes(reps)):
        rng = block_rng(seed, b)
        pooled.append(sample_arrival_batch(merged, t, size, rng)[0])
        na = sample_arrival_batch(int_a, t, size, rng)[0]
        nb = sample_arrival_batch(int_b, t, size, rng)[0]
        separate.append(na + nb)
    pooled_counts = np.concatenate(pooled)
    stat, p, dof = _chi_square(pooled_counts, mu)
    stat_ind, p_ind, _ = _chi_square(np.concatenate(separate), mu)
    return SuperpositionReport(mu, float(pooled_counts.mean()), stat, p, dof, stat_ind, p_ind)
