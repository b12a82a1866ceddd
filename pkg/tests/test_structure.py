import itertools
from collections import Counter

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from corrsurv.structure import (
    MAX_PATH_SETS,
    Bridge,
    CapacityError,
    Component,
    KofN,
    Parallel,
    Paths,
    Series,
    boolean_state,
    component_ids,
    evaluate,
    expand,
    min_path_sets,
)

from conftest import components

BRIDGE = Bridge(("1", "2", "3", "4", "5"))


def sympy_expansion(path_sets, idempotent=False):
    """Brute-force ``1 - prod(1 - prod x)`` as {exponent tuple: coeff}."""
    ids = sorted(set().union(*path_sets))
    xs = sp.symbols(ids)
    sym = dict(zip(ids, xs))
    poly = 1 - sp.prod([1 - sp.prod([sym[i] for i in p]) for p in path_sets])
    terms = Counter()
    for monom, coeff in sp.Poly(sp.expand(poly), *xs).terms():
        key = tuple((i, min(e, 1) if idempotent else e) for i, e in zip(ids, monom) if e)
        terms[key] += int(coeff)
    return {k: v for k, v in terms.items() if v}


def as_dict(expansion):
    return {tuple(sorted(t.exponents.items())): t.coeff for t in expansion.terms}


class TestMinPathSets:
    def test_bridge(self):
        assert [sorted(p) for p in min_path_sets(BRIDGE)] == [
            ["1", "3", "5"], ["1", "4"], ["2", "3", "4"], ["2", "5"]
        ]

    def test_series(self):
        assert min_path_sets(Series(components("ab"))) == [frozenset("ab")]

    def test_two_of_three(self):
        assert set(min_path_sets(KofN(2, components("abc")))) == {
            frozenset("ab"), frozenset("ac"), frozenset("bc")
        }

    def test_supersets_pruned(self):
        paths = min_path_sets(Paths((frozenset("ab"), frozenset("a"), frozenset("abc"))))
        assert paths == [frozenset("a")]

    def test_nested(self):
        expr = Series((Parallel(components("ab")), Component("c")))
        assert set(min_path_sets(expr)) == {frozenset("ac"), frozenset("bc")}

    @pytest.mark.parametrize(
        "expr",
        [Series(()), Parallel(()), KofN(3, components("ab")), KofN(0, components("ab")),
         Bridge(("a", "a", "b", "c", "d")), Paths(()), Paths((frozenset(),))],
    )
    def test_malformed(self, expr):
        with pytest.raises(ValueError):
            min_path_sets(expr)


class TestExpand:
    def test_series(self):
        exp = expand(min_path_sets(Series(components("abcd"))))
        assert exp.to_json() == [{"coeff": 1, "exponents": {"a": 1, "b": 1, "c": 1, "d": 1}}]

    @pytest.mark.parametrize("mode", ["paper", "idempotent"])
    def test_parallel_pair(self, mode):
        exp = expand(min_path_sets(Parallel(components("ab"))), mode)
        assert as_dict(exp) == {(("a", 1),): 1, (("b", 1),): 1, (("a", 1), ("b", 1)): -1}

    def test_two_of_three_paper_pattern(self):
        exp = expand(min_path_sets(KofN(2, components("123"))), "paper")
        got = as_dict(exp)
        expected = {}
        for i, j in itertools.combinations("123", 2):
            expected[((i, 1), (j, 1))] = 1
        for i in "123":
            expected[tuple(sorted((k, 2 if k == i else 1) for k in "123"))] = -1
        expected[(("1", 2), ("2", 2), ("3", 2))] = 1
        assert got == expected
        assert len(exp) == 7

    def test_two_of_three_idempotent(self):
        exp = expand(min_path_sets(KofN(2, components("123"))), "idempotent")
        assert as_dict(exp) == sympy_expansion(min_path_sets(KofN(2, components("123"))), True)
        assert sorted(t.coeff for t in exp.terms) == [-2, 1, 1, 1]

    def test_bridge_paper_against_sympy(self):
        paths = min_path_sets(BRIDGE)
        exp = expand(paths, "paper")
        assert as_dict(exp) == sympy_expansion(paths)
        assert len(exp) == 15

        # Each subset of path sets yields a distinct monomial; group them by
        # overlap order and check the degrees and inclusion-exclusion sign.
        by_order = {}
        for r in range(1, 5):
            for combo in itertools.combinations(paths, r):
                c = Counter()
                for p in combo:
                    c.update(p)
                key = tuple(sorted(c.items()))
                assert as_dict(exp)[key] == (-1) ** (r + 1)
                by_order.setdefault(r, []).append(sum(c.values()))
        assert {r: sorted(d) for r, d in by_order.items()} == {
            1: [2, 2, 3, 3], 2: [4, 5, 5, 5, 5, 6], 3: [7, 7, 8, 8], 4: [10]
        }

    def test_bridge_idempotent_half(self):
        exp = expand(min_path_sets(BRIDGE), "idempotent")
        assert evaluate(exp, {i: 0.5 for i in "12345"}) == pytest.approx(0.5, abs=1e-15)
        working = sum(
            boolean_state(BRIDGE, {i for i, b in zip("12345", bits) if b})
            for bits in itertools.product((0, 1), repeat=5)
        )
        assert working == 16

    @pytest.mark.parametrize("n", range(1, 8))
    def test_parallel_term_count(self, n):
        ids = [f"c{i}" for i in range(n)]
        assert len(expand(min_path_sets(Parallel(components(ids))))) == 2**n - 1

    def test_capacity(self):
        ids = [f"c{i}" for i in range(MAX_PATH_SETS + 1)]
        with pytest.raises(CapacityError):
            expand(min_path_sets(Parallel(components(ids))))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            expand([frozenset("a")], "boolean")

    def test_evaluate_missing_id(self):
        exp = expand([frozenset("ab")])
        with pytest.raises(KeyError):
            evaluate(exp, {"a": 1.0})

    def test_evaluate_vectorized(self):
        exp = expand(min_path_sets(Parallel(components("ab"))))
        out = evaluate(exp, {"a": np.array([0.0, 0.5, 1.0]), "b": np.array([0.0, 0.5, 0.0])})
        np.testing.assert_allclose(out, [0.0, 0.75, 1.0])


class TestBooleanState:
    def test_examples(self):
        assert boolean_state(BRIDGE, {"1", "4"}) == 1
        assert boolean_state(BRIDGE, {"3"}) == 0
        assert boolean_state(Series(components("ab")), {"a"}) == 0


@st.composite
def topologies(draw, max_leaves=8):
    pool = [f"c{i}" for i in range(draw(st.integers(1, max_leaves)))]

    def build(ids, depth):
        if len(ids) == 1 or depth > 2 or draw(st.booleans()) and depth > 0:
            if len(ids) == 1:
                return Component(ids[0])
        kind = draw(st.sampled_from(["series", "parallel", "kofn", "leaf"]))
        if kind == "leaf" or len(ids) == 1:
            return Component(ids[0])
        cut = draw(st.integers(1, len(ids) - 1))
        groups = [ids[:cut], ids[cut:]]
        if draw(st.booleans()) and len(ids) >= 3:
            groups = [[i] for i in ids]
        kids = tuple(build(g, depth + 1) for g in groups)
        if kind == "series":
            return Series(kids)
        if kind == "parallel":
            return Parallel(kids)
        return KofN(draw(st.integers(1, len(kids))), kids)

    if len(pool) == 5 and draw(st.booleans()):
        return Bridge(tuple(pool))
    if draw(st.integers(0, 5)) == 0:
        sets = draw(st.lists(st.sets(st.sampled_from(pool), min_size=1), min_size=1, max_size=6))
        return Paths(tuple(frozenset(s) for s in sets))
    return build(pool, 0)


def all_states(ids):
    for bits in itertools.product((0, 1), repeat=len(ids)):
        yield {i for i, b in zip(ids, bits) if b}, dict(zip(ids, map(float, bits)))


def small_paths(expr, limit=12):
    paths = min_path_sets(expr)
    assume(len(paths) <= limit)
    return paths


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(topologies())
    def test_idempotent_matches_boolean_exhaustively(self, expr):
        exp = expand(small_paths(expr), "idempotent")
        ids = sorted(component_ids(expr))
        for up, x in all_states(ids):
            assert evaluate(exp, x) == boolean_state(expr, up)

    @settings(max_examples=60, deadline=None)
    @given(topologies())
    def test_normalization(self, expr):
        ids = component_ids(expr)
        paths = small_paths(expr)
        for mode in ("idempotent", "paper"):
            exp = expand(paths, mode)
            assert evaluate(exp, {i: 1.0 for i in ids}) == 1
            assert evaluate(exp, {i: 0.0 for i in ids}) == 0
            assert all(t.coeff != 0 for t in exp.terms)

    @settings(max_examples=60, deadline=None)
    @given(topologies(), st.data())
    def test_coherence(self, expr, data):
        ids = sorted(component_ids(expr))
        up = set(data.draw(st.sets(st.sampled_from(ids))))
        more = up | set(data.draw(st.sets(st.sampled_from(ids))))
        assert boolean_state(expr, up) <= boolean_state(expr, more)
        assert boolean_state(expr, set()) == 0 and boolean_state(expr, set(ids)) == 1

    @settings(max_examples=60, deadline=None)
    @given(topologies())
    def test_modes_agree_without_repeats(self, expr):
        paths = small_paths(expr)
        counts = Counter(i for p in paths for i in p)
        if max(counts.values()) == 1:
            assert expand(paths, "paper").terms == expand(paths, "idempotent").terms

    @settings(max_examples=40, deadline=None)
    @given(topologies(max_leaves=6))
    def test_paper_mode_matches_sympy(self, expr):
        paths = small_paths(expr, 7)
        assert as_dict(expand(paths, "paper")) == sympy_expansion(paths)
        assert as_dict(expand(paths, "idempotent")) == sympy_expansion(paths, True)
