"""Logical topologies, minimal path sets, and multilinear expansion of the
structure function ``phi(x) = 1 - prod_P (1 - prod_{i in P} x_i)``.

Two expansion modes are supported.  ``idempotent`` applies ``x**2 == x``
before combining like terms, so the result is the multilinear form whose
value at independent survival probabilities is the system survival.
``paper`` keeps repeated factors as powers.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence, Union

__all__ = [
    "Component",
    "Series",
    "Parallel",
    "KofN",
    "Bridge",
    "Paths",
    "StructureExpr",
    "Term",
    "MonomialExpansion",
    "CapacityError",
    "MAX_PATH_SETS",
    "MODES",
    "component_ids",
    "min_path_sets",
    "expand",
    "evaluate",
    "boolean_state",
]

MAX_PATH_SETS = 24
MODES = ("idempotent", "paper")


class CapacityError(ValueError):
    """More path sets than the inclusion-exclusion expansion supports."""


@dataclass(frozen=True)
class Component:
    id: str


@dataclass(frozen=True)
class Series:
    children: tuple["StructureExpr", ...]


@dataclass(frozen=True)
class Parallel:
    children: tuple["StructureExpr", ...]


@dataclass(frozen=True)
class KofN:
    k: int
    children: tuple["StructureExpr", ...]


@dataclass(frozen=True)
class Bridge:
    """Five components in diagram order: 1 and 2 on the inputs, 3 the
    bridging link, 4 and 5 on the outputs."""

    ids: tuple[str, str, str, str, str]


@dataclass(frozen=True)
class Paths:
    sets: tuple[frozenset[str], ...]


StructureExpr = Union[Component, Series, Parallel, KofN, Bridge, Paths]

# Positions (1-based diagram numbering) of the bridge's minimal path sets.
_BRIDGE_PATHS = ((1, 3, 5), (1, 4), (2, 3, 4), (2, 5))


def _validate(expr: StructureExpr) -> None:
    if isinstance(expr, Component):
        if not isinstance(expr.id, str) or not expr.id:
            raise ValueError("component id must be a nonempty string")
    elif isinstance(expr, (Series, Parallel)):
        if not expr.children:
            raise ValueError(f"{type(expr).__name__.lower()} needs at least one child")
        for child in expr.children:
            _validate(child)
    elif isinstance(expr, KofN):
        if not expr.children:
            raise ValueError("k_of_n needs at least one child")
        if not (1 <= expr.k <= len(expr.children)):
            raise ValueError(f"k_of_n needs 1 <= k <= n, got k={expr.k}, n={len(expr.children)}")
        for child in expr.children:
            _validate(child)
    elif isinstance(expr, Bridge):
        if len(expr.ids) != 5 or len(set(expr.ids)) != 5:
            raise ValueError("bridge needs exactly 5 distinct component ids")
    elif isinstance(expr, Paths):
        if not expr.sets or any(not s for s in expr.sets):
            raise ValueError("paths needs a nonempty list of nonempty sets")
    else:
        raise TypeError(f"not a structure expression: {expr!r}")


def component_ids(expr: StructureExpr) -> set[str]:
    if isinstance(expr, Component):
        return {expr.id}
    if isinstance(expr, Bridge):
        return set(expr.ids)
    if isinstance(expr, Paths):
        return set().union(*expr.sets)
    return set().union(*(component_ids(c) for c in expr.children))


def _minimal(sets: Iterable[frozenset[str]]) -> list[frozenset[str]]:
    unique = sorted(set(sets), key=lambda s: (len(s), sorted(s)))
    kept: list[frozenset[str]] = []
    for s in unique:
        if not any(k <= s for k in kept):
            kept.append(s)
    return sorted(kept, key=sorted)


def _cross(groups: Sequence[list[frozenset[str]]]) -> list[frozenset[str]]:
    acc = [frozenset()]
    for group in groups:
        acc = _minimal(a | b for a in acc for b in group)
    return acc


def _paths(expr: StructureExpr) -> list[frozenset[str]]:
    if isinstance(expr, Component):
        return [frozenset((expr.id,))]
    if isinstance(expr, Series):
        return _cross([_paths(c) for c in expr.children])
    if isinstance(expr, Parallel):
        return _minimal(p for c in expr.children for p in _paths(c))
    if isinstance(expr, KofN):
        child_paths = [_paths(c) for c in expr.children]
        return _minimal(
            p for chosen in combinations(child_paths, expr.k) for p in _cross(chosen)
        )
    if isinstance(expr, Bridge):
        return _minimal(frozenset(expr.ids[i - 1] for i in path) for path in _BRIDGE_PATHS)
    return _minimal(frozenset(s) for s in expr.sets)


def min_path_sets(expr: StructureExpr) -> list[frozenset[str]]:
    """Minimal path sets, sorted lexicographically by their sorted ids."""
    _validate(expr)
    return _paths(expr)


@dataclass(frozen=True)
class Term:
    coeff: int
    exponents: Mapping[str, int]

    @property
    def degree(self) -> int:
        """Total multiplicity; this is the correlator multiplier of the term."""
        return sum(self.exponents.values())


@dataclass(frozen=True)
class MonomialExpansion:
    terms: tuple[Term, ...]
    mode: str

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def component_ids(self) -> set[str]:
        return {i for term in self.terms for i in term.exponents}

    def to_json(self) -> list[dict]:
        return [{"coeff": t.coeff, "exponents": dict(t.exponents)} for t in self.terms]


def expand(path_sets: Sequence[Iterable[str]], mode: str = "idempotent") -> MonomialExpansion:
    """Inclusion-exclusion expansion over all nonempty subsets of path sets."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    sets = [frozenset(s) for s in path_sets]
    if not sets or any(not s for s in sets):
        raise ValueError("expand needs a nonempty list of nonempty path sets")
    if len(sets) > MAX_PATH_SETS:
        raise CapacityError(f"{len(sets)} path sets exceeds the limit of {MAX_PATH_SETS}")

    ids = sorted(set().union(*sets))
    index = {c: i for i, c in enumerate(ids)}
    coeffs: Counter = Counter()

    if mode == "idempotent":
        masks = [sum(1 << index[c] for c in s) for s in sets]

        def walk(i: int, mask: int, sign: int) -> None:
            for j in range(i, len(masks)):
                m = mask | masks[j]
                coeffs[m] += sign
                walk(j + 1, m, -sign)

        walk(0, 0, 1)
        raw = {
            tuple((ids[b], 1) for b in range(len(ids)) if key >> b & 1): c
            for key, c in coeffs.items()
        }
    else:
        vecs = [tuple(1 if c in s else 0 for c in ids) for s in sets]

        def walk(i: int, vec: tuple[int, ...], sign: int) -> None:
            for j in range(i, len(vecs)):
                v = tuple(a + b for a, b in zip(vec, vecs[j]))
                coeffs[v] += sign
                walk(j + 1, v, -sign)

        walk(0, (0,) * len(ids), 1)
        raw = {
            tuple((ids[b], e) for b, e in enumerate(key) if e): c for key, c in coeffs.items()
        }

    terms = [Term(c, dict(key)) for key, c in sorted(raw.items()) if c != 0]
    return MonomialExpansion(tuple(terms), mode)


def evaluate(expansion: MonomialExpansion, assignment: Mapping[str, object]):
    """``sum coeff * prod value**exponent``; values may be numpy arrays."""
    missing = expansion.component_ids - set(assignment)
    if missing:
        raise KeyError(f"assignment is missing component ids: {sorted(missing)}")
    total = 0
    for term in expansion.terms:
        prod = term.coeff
        for cid, e in term.exponents.items():
            prod = prod * assignment[cid] ** e
        total = total + prod
    return total


def boolean_state(expr: StructureExpr, up: Iterable[str]) -> int:
    """Structure function evaluated directly on the topology tree."""
    up = set(up)
    if isinstance(expr, Component):
        return int(expr.id in up)
    if isinstance(expr, Series):
        return int(all(boolean_state(c, up) for c in expr.children))
    if isinstance(expr, Parallel):
        return int(any(boolean_state(c, up) for c in expr.children))
    if isinstance(expr, KofN):
        return int(sum(boolean_state(c, up) for c in expr.children) >= expr.k)
    if isinstance(expr, Bridge):
        x = [i in up for i in expr.ids]
        return int(
            (x[0] and x[3]) or (x[1] and x[4]) or (x[0] and x[2] and x[4]) or (x[1] and x[2] and x[3])
        )
    if isinstance(expr, Paths):
        return int(any(set(s) <= up for s in expr.sets))
    raise TypeError(f"not a structure expression: {expr!r}")
