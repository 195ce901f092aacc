import itertools
import math
from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dpgen.aligner import NULL, train_model1, viterbi_align
from dpgen.errors import ConfigError, EmptyCorpus

WORDS = "a b c d e f g h i j".split()
# every word shares a sentence with four others, in three sentences
COPY_CORPUS = [[WORDS[i], WORDS[(i + 1) % 10], WORDS[(i + 3) % 10]] for i in range(10)]


def brute_force_em(pairs, iterations):
    """Model-1 EM whose E-step enumerates every alignment vector, in exact
    arithmetic. Returns t[(target, source)]."""
    tvocab = sorted({e for _, tgt in pairs for e in tgt})
    t = {}
    for src, tgt in pairs:
        for f in [NULL] + src:
            for e in tgt:
                t[(e, f)] = Fraction(1, len(tvocab))
    for _ in range(iterations):
        counts = defaultdict(Fraction)
        for src, tgt in pairs:
            srcn = [NULL] + src
            vectors = list(itertools.product(range(len(srcn)), repeat=len(tgt)))
            weights = [math.prod((t[(e, srcn[a])] for e, a in zip(tgt, vec)), start=Fraction(1))
                       for vec in vectors]
            z = sum(weights)
            for vec, w in zip(vectors, weights):
                for e, a in zip(tgt, vec):
                    counts[(e, srcn[a])] += w / z
        totals = defaultdict(Fraction)
        for (e, f), c in counts.items():
            totals[f] += c
        t = {k: c / totals[k[1]] for k, c in counts.items()}
    return t


def test_single_pair_forces_mass():
    table = train_model1([(["x"], ["a"])], iterations=3)
    assert table.prob("a", "x") == pytest.approx(1.0)


def test_hand_executed_em():
    # worked by hand: t(x|a) = 235/307 after two iterations
    pairs = [(["a", "b"], ["x", "y"]), (["a"], ["x"])]
    table = train_model1(pairs, iterations=2)
    assert brute_force_em(pairs, 2)[("x", "a")] == Fraction(235, 307)
    assert table.prob("x", "a") == pytest.approx(235 / 307, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.lists(st.sampled_from("abc"), min_size=1, max_size=3),
                          st.lists(st.sampled_from("xyz"), min_size=1, max_size=3)),
                min_size=1, max_size=3),
       st.integers(1, 3))
def test_matches_enumeration_oracle(pairs, iterations):
    table = train_model1(pairs, iterations)
    oracle = brute_force_em(pairs, iterations)
    assert set(table.t) == set(oracle)
    for key, p in oracle.items():
        assert table.t[key] == pytest.approx(float(p), rel=1e-9)


def test_copy_corpus_learns_identity():
    table = train_model1([(s, s) for s in COPY_CORPUS], iterations=20)
    assert all(table.prob(w, w) > 0.9 for w in WORDS)
    for s in COPY_CORPUS:
        assert viterbi_align(table, (s, s)) == {(i, i) for i in range(len(s))}


@given(st.lists(st.tuples(st.lists(st.sampled_from("abcd"), min_size=1, max_size=4),
                          st.lists(st.sampled_from("wxyz"), min_size=1, max_size=4)),
                min_size=1, max_size=5))
def test_log_likelihood_monotone_and_table_normalized(pairs):
    table = train_model1(pairs, iterations=6)
    lls = table.log_likelihoods
    assert len(lls) == 7
    for a, b in zip(lls, lls[1:]):
        assert b >= a - 1e-9 * abs(a)
    for total in table.totals_by_source().values():
        assert total == pytest.approx(1.0, abs=1e-9)


def test_viterbi_ties_go_to_smallest_source_index():
    table = train_model1([(["p", "q"], ["r"])], iterations=1)
    assert table.prob("r", "p") == table.prob("r", "q")
    assert viterbi_align(table, (["p", "q"], ["r"])) == {(0, 0)}


def test_viterbi_null_must_win_strictly():
    # equal to NULL keeps the link
    table = train_model1([(["p"], ["r"])], iterations=1)
    assert table.prob("r", "p") == table.prob("r", NULL)
    assert viterbi_align(table, (["p"], ["r"])) == {(0, 0)}
    table.t[("r", NULL)] = 0.9
    table.t[("r", "p")] = 0.1
    assert viterbi_align(table, (["p"], ["r"])) == frozenset()


def test_errors():
    with pytest.raises(EmptyCorpus):
        train_model1([], iterations=1)
    with pytest.raises(ConfigError):
        train_model1([(["a"], ["x"])], iterations=0)
