"""Lexical-translation (Model 1) EM aligner.

Each target word is generated by one source word or by NULL. The table
stores t(target | source), normalized over target words for every source
word including NULL, which is what Viterbi alignment needs to decide
whether a target word has a source link at all.
"""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable, Sequence

from .corpus import AlignedSentencePair, Sentence
from .errors import ConfigError, EmptyCorpus

NULL = "<null>"


def _words(s):
    return s.words if isinstance(s, Sentence) else list(s)


class LexTable:
    def __init__(self, t: dict[tuple[str, str], float], log_likelihoods: Sequence[float] = ()):
        # (target word, source word) -> t(target | source)
        self.t = t
        self.log_likelihoods = list(log_likelihoods)

    def prob(self, target: str, source: str) -> float:
        return self.t.get((target, source), 0.0)

    def totals_by_source(self) -> dict[str, float]:
        out: dict[str, float] = defaultdict(float)
        for (_, f), p in self.t.items():
            out[f] += p
        return dict(out)


def _log_likelihood(pairs, t) -> float:
    ll = 0.0
    for src, tgt in pairs:
        srcn = [NULL] + src
        for e in tgt:
            ll += math.log(sum(t[(e, f)] for f in srcn) / len(srcn))
    return ll


def train_model1(pairs: Iterable[tuple], iterations: int = 5) -> LexTable:
    """EM from a uniform table; ``log_likelihoods[i]`` is the corpus
    log-likelihood of the parameters entering iteration ``i``, with the
    final entry measured after the last M-step."""
    if iterations < 1:
        raise ConfigError("iterations must be >= 1", field="iterations")
    data = []
    for p in pairs:
        src, tgt = (p.source, p.target) if isinstance(p, AlignedSentencePair) else p
        data.append((_words(src), _words(tgt)))
    if not data:
        raise EmptyCorpus("cannot align an empty corpus")

    tgt_vocab = sorted({e for _, tgt in data for e in tgt})
    init = 1.0 / len(tgt_vocab)
    t: dict[tuple[str, str], float] = {}
    for src, tgt in data:
        for f in [NULL] + src:
            for e in tgt:
                t[(e, f)] = init

    lls = []
    for _ in range(iterations):
        lls.append(_log_likelihood(data, t))
        counts: dict[tuple[str, str], float] = defaultdict(float)
        totals: dict[str, float] = defaultdict(float)
        for src, tgt in data:
            srcn = [NULL] + src
            for e in tgt:
                z = sum(t[(e, f)] for f in srcn)
                for f in srcn:
                    c = t[(e, f)] / z
                    counts[(e, f)] += c
                    totals[f] += c
        t = {k: c / totals[k[1]] for k, c in counts.items()}
    lls.append(_log_likelihood(data, t))
    return LexTable(t, lls)


def viterbi_align(table: LexTable, pair) -> frozenset[tuple[int, int]]:
    """Link each target word to its best source word; NULL must win strictly
    to leave the word unaligned, source ties go to the smallest index."""
    src, tgt = (pair.source, pair.target) if isinstance(pair, AlignedSentencePair) else pair
    src, tgt = _words(src), _words(tgt)
    links = set()
    for j, e in enumerate(tgt):
        best_i, best_p = None, -1.0
        for i, f in enumerate(src):
            p = table.prob(e, f)
            if p > best_p:
                best_i, best_p = i, p
        if best_i is not None and best_p >= table.prob(e, NULL):
            links.add((best_i, j))
    return frozenset(links)
