"""Shared model builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from corrsurv import (
    Bridge,
    Component,
    Constant,
    Exponential,
    KofN,
    Linear,
    NodeSpec,
    Parallel,
    PiecewiseConstant,
    Series,
    StressDistribution,
    SystemModel,
    Uniform,
    Weibull,
)

STRESS = StressDistribution((0.2, 0.5), (0.7, 0.3))


def components(ids):
    return tuple(Component(i) for i in ids)


def constant_model(ids, topology, private=0.5, baseline=0.1, correlator=0.6,
                   stress=STRESS, service=Exponential(1.5)):
    nodes = [NodeSpec(i, Constant(baseline), Constant(private)) for i in ids]
    return SystemModel(tuple(nodes), Constant(correlator), stress, service, topology)


def series_model(k=2, **kw):
    ids = [f"s{i}" for i in range(1, k + 1)]
    return constant_model(ids, Series(components(ids)), **kw)


def parallel_model(k=2, **kw):
    ids = [f"p{i}" for i in range(1, k + 1)]
    return constant_model(ids, Parallel(components(ids)), **kw)


def bridge_model(**kw):
    ids = [f"n{i}" for i in range(1, 6)]
    return constant_model(ids, Bridge(tuple(ids)), **kw)


def two_of_three_model(**kw):
    ids = ["x1", "x2", "x3"]
    return constant_model(ids, KofN(2, components(ids)), **kw)


def random_intensity(rng, scale=1.0):
    kind = rng.integers(3)
    if kind == 0:
        return Constant(float(rng.uniform(0, scale)))
    if kind == 1:
        return Linear(float(rng.uniform(0, scale)), float(rng.uniform(-0.3, 0.3) * scale))
    n = int(rng.integers(1, 4))
    breaks = tuple(np.sort(rng.uniform(0.1, 4.0, n)))
    rates = tuple(float(r) for r in rng.uniform(0, scale, n + 1))
    return PiecewiseConstant(breaks, rates)


def random_service(rng):
    kind = rng.integers(3)
    if kind == 0:
        return Exponential(float(rng.uniform(0.5, 3.0)))
    if kind == 1:
        lo = float(rng.uniform(0, 0.5))
        return Uniform(lo, lo + float(rng.uniform(0.2, 2.0)))
    return Weibull(float(rng.uniform(0.6, 2.5)), float(rng.uniform(0.3, 1.5)))


def random_stress(rng):
    m = int(rng.integers(1, 4))
    support = tuple(float(x) for x in rng.choice(np.arange(1, 20) / 10, m, replace=False))
    probs = rng.dirichlet(np.ones(m))
    return StressDistribution(support, tuple(float(p) for p in probs))


def random_topology(rng, ids):
    choice = rng.integers(4) if len(ids) != 5 else rng.integers(5)
    kids = components(ids)
    if choice == 0:
        return Series(kids)
    if choice == 1:
        return Parallel(kids)
    if choice == 2:
        return KofN(int(rng.integers(1, len(ids) + 1)), kids)
    if choice == 3 and len(ids) >= 3:
        return Series((Parallel(kids[:2]), *kids[2:]))
    if choice == 4:
        return Bridge(tuple(ids))
    return Parallel(kids)


def random_model(seed, n_nodes=None, correlator=None):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6)) if n_nodes is None else n_nodes
    ids = [f"c{i}" for i in range(n)]
    nodes = tuple(
        NodeSpec(i, random_intensity(rng, 0.2), random_intensity(rng, 1.0)) for i in ids
    )
    corr = random_intensity(rng, 1.0) if correlator is None else correlator
    return SystemModel(nodes, corr, random_stress(rng), random_service(rng), random_topology(rng, ids))


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
