import math
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from dpgen.errors import EmptyCorpus
from dpgen.lm import BOS, EOS, UNK, NGramLM, train_lm


def oracle_prob(corpus, order, word, history, discount=Fraction(3, 4)):
    """Interpolated absolute discounting recomputed from raw counts, in
    exact arithmetic. Vocabulary: every corpus word (min_count=1) plus
    EOS and UNK; BOS is never predicted."""
    vocab = sorted({w for s in corpus for w in s} | {EOS, UNK})
    seqs = [[BOS] * (order - 1) + list(s) + [EOS] for s in corpus]

    def counts(h):
        c = Counter()
        for seq in seqs:
            for t in range(order - 1, len(seq)):
                if tuple(seq[t - len(h):t]) == h or not h:
                    c[seq[t]] += 1
        return c

    p = Fraction(1, len(vocab))
    history = tuple(history)[-(order - 1):] if order > 1 else ()
    for m in range(len(history) + 1):
        h = history[len(history) - m:] if m else ()
        c = counts(h)
        total = sum(c.values())
        if not total:
            break
        p = max(c[word] - discount, 0) / total + discount * len(c) / total * p
    return p


def test_degenerate_corpus_bigram():
    lm = train_lm([["a", "b"], ["a", "b"]], order=2)
    assert lm.prob("b", ["a"]) > 0.7
    assert lm.prob(EOS, ["b"]) > 0.7


def test_hand_count_oracle():
    # unigram: a:2 b:1 c:1 EOS:2 over 5 predictable types -> p1(b) = 0.25/6 + 0.5/5
    # bigram after a: b:1 c:1 -> P(b|a) = 0.25/2 + 0.75 * p1(b) = 37/160
    lm = train_lm([["a", "b"], ["a", "c"]], order=2, min_count=1)
    assert lm.prob("b", ["a"]) == pytest.approx(37 / 160, abs=1e-15)
    assert oracle_prob([["a", "b"], ["a", "c"]], 2, "b", ["a"]) == Fraction(37, 160)


def test_order_five_is_default():
    assert train_lm([["a"]]).order == 5


def test_singletons_become_unk():
    lm = train_lm([["a", "b"], ["a", "c"]], order=2)
    assert "b" not in lm.vocab and UNK in lm.vocab
    assert lm.prob("b", ["a"]) == lm.prob("zzz", ["a"]) == lm.prob(UNK, ["a"])


def test_perplexity_counts_eos():
    lm = train_lm([["a", "b", "c"], ["b", "a"]], order=3, min_count=1)
    words = ["a", "b"]
    lp = (math.log(lm.prob("a", [BOS, BOS])) + math.log(lm.prob("b", [BOS, "a"]))
          + math.log(lm.prob(EOS, ["a", "b"])))
    assert lm.perplexity(words) == pytest.approx(math.exp(-lp / 3), rel=1e-12)


def test_uniform_unigram_perplexity_is_vocab_size():
    # a, b, UNK (from singletons) and EOS each occur 5 times
    corpus = [["a", "b", f"u{i}"] for i in range(5)]
    lm = train_lm(corpus, order=1)
    assert len(lm.predictable()) == 4
    for sent in (["a"], ["b", "a", "b"], ["q", "r"]):
        assert lm.perplexity(sent) == pytest.approx(4.0, rel=1e-12)


def test_all_oov_sentence_is_finite():
    lm = train_lm([["a", "b"], ["a", "b"]], order=3)
    ppl = lm.perplexity(["x", "y", "z"])
    assert 0 < ppl < math.inf


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        train_lm([])


def test_file_round_trip():
    lm = train_lm([["a", "b", "c"], ["b", "c"], ["a", "c", "c"]], order=3, min_count=1)
    text = lm.dumps()
    assert text.startswith(f"NGRAM 3 {len(lm.vocab)}\n")
    back = NGramLM.loads(text)
    assert back.dumps() == text
    for s in (["a", "c"], ["c", "b", "a"]):
        assert back.perplexity(s) == pytest.approx(lm.perplexity(s), rel=1e-10)


sentences = st.lists(st.sampled_from("abcde"), min_size=1, max_size=6)
corpora = st.lists(sentences, min_size=1, max_size=6)


@given(corpora, st.integers(1, 4), st.data())
def test_matches_independent_oracle(corpus, order, data):
    lm = train_lm(corpus, order=order, min_count=1)
    history = data.draw(st.lists(st.sampled_from(list("abcde") + [BOS]), max_size=order - 1))
    for w in lm.predictable():
        assert lm.prob(w, history) == pytest.approx(float(oracle_prob(corpus, order, w, history)), rel=1e-12)


@given(corpora, st.integers(1, 4), st.integers(1, 2))
def test_every_context_normalizes(corpus, order, min_count):
    lm = train_lm(corpus, order=order, min_count=min_count)
    for hist in list(lm.contexts()) + [("zz",) * (order - 1)]:
        probs = [lm.prob(w, hist) for w in lm.predictable()]
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)
        assert all(0 < p <= 1 for p in probs)


@given(corpora, sentences, st.integers(1, 4))
def test_perplexity_positive_and_finite(corpus, sent, order):
    ppl = train_lm(corpus, order=order).perplexity(sent)
    assert 0 < ppl < math.inf


@settings(max_examples=60)
@given(sentences, st.integers(1, 4), st.permutations(range(6)))
def test_training_sentence_beats_its_permutations(sent, order, perm):
    lm = train_lm([sent], order=order, min_count=1)
    shuffled = [sent[i] for i in perm if i < len(sent)]
    assert lm.perplexity(sent) <= lm.perplexity(shuffled) * (1 + 1e-12)


@given(corpora, sentences, st.integers(1, 4))
def test_adding_a_copy_never_hurts(corpus, sent, order):
    # min_count=1 keeps the vocabulary fixed once ``sent`` is in the corpus
    base = corpus + [sent]
    before = train_lm(base, order=order, min_count=1).perplexity(sent)
    after = train_lm(base + [sent], order=order, min_count=1).perplexity(sent)
    assert after <= before * (1 + 1e-12)
