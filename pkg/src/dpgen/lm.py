"""Interpolated absolute-discounting n-gram language model.

For a history ``h`` seen in training::

    P(w | h) = max(c(h w) - D, 0) / c(h) + D * N1+(h .) / c(h) * P(w | h')

with ``h'`` the history minus its oldest word. Unseen histories back off
to ``h'`` directly, and the empty history interpolates with a uniform
distribution over the predictable vocabulary (every vocab item except BOS).
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Sentence
from .errors import ConfigError, EmptyCorpus, ModelFormatError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

BACKOFF = "*BACKOFF*"


@dataclass
class LMConfig:
    order: int = 5
    discount: float = 0.75
    # tokens seen fewer times than this are trained as UNK
    min_count: int = 2

    def validate(self):
        if self.order < 1:
            raise ConfigError("order must be >= 1", field="order")
        if not 0 < self.discount < 1:
            raise ConfigError("discount must lie in (0, 1)", field="discount")
        if self.min_count < 1:
            raise ConfigError("min_count must be >= 1", field="min_count")


class NGramLM:
    def __init__(self, order: int, vocab: Sequence[str], levels: list[dict]):
        self.order = order
        self.vocab = list(vocab)
        self._vocab_set = frozenset(vocab)
        # levels[m]: history tuple of length m -> (discounted probs, backoff weight)
        self.levels = levels
        self._base = 1.0 / len(self.predictable())

    def predictable(self) -> list[str]:
        return [w for w in self.vocab if w != BOS]

    def map_token(self, w: str) -> str:
        return w if w in self._vocab_set and w != BOS else UNK

    def prob(self, word: str, history: Sequence[str] = ()) -> float:
        """P(word | history); both are mapped to the vocabulary first."""
        word = self.map_token(word)
        history = tuple(h if h == BOS else self.map_token(h) for h in history)
        return self._prob(word, history[len(history) - (self.order - 1):] if self.order > 1 else ())

    def _prob(self, word: str, history: tuple[str, ...]) -> float:
        p = self._base
        n = len(history)
        for m in range(0, n + 1):
            entry = self.levels[m].get(history[n - m:] if m else ())
            if entry is None:
                break
            alpha, gamma = entry
            p = alpha.get(word, 0.0) + gamma * p
        return p

    def logprob_sentence(self, words: Sequence[str]) -> float:
        ctx = [BOS] * (self.order - 1)
        seq = [self.map_token(w) for w in words] + [EOS]
        total = 0.0
        for w in seq:
            hist = tuple(ctx[len(ctx) - (self.order - 1):]) if self.order > 1 else ()
            total += math.log(self._prob(w, hist))
            ctx.append(w)
        return total

    def perplexity(self, sentence: Sentence | Sequence[str]) -> float:
        words = sentence.words if isinstance(sentence, Sentence) else list(sentence)
        return math.exp(-self.logprob_sentence(words) / (len(words) + 1))

    def contexts(self):
        for level in self.levels:
            yield from level.keys()

    # ------------------------------------------------------------ persistence

    def dumps(self) -> str:
        lines = [f"NGRAM {self.order} {len(self.vocab)}", " ".join(self.vocab)]
        for level in self.levels:
            for hist in sorted(level):
                alpha, gamma = level[hist]
                ctx = " ".join(hist)
                lines.append(f"{ctx}\t{BACKOFF}\t{gamma:.12g}")
                for w in sorted(alpha):
                    lines.append(f"{ctx}\t{w}\t{alpha[w]:.12g}")
        return "".join(line + "\n" for line in lines)

    @classmethod
    def loads(cls, text: str) -> "NGramLM":
        lines = text.split("\n")
        head = lines[0].split()
        if len(head) != 3 or head[0] != "NGRAM":
            raise ModelFormatError("not an NGRAM model file")
        order, size = int(head[1]), int(head[2])
        vocab = lines[1].split(" ")
        if len(vocab) != size:
            raise ModelFormatError("vocab size disagrees with header")
        levels: list[dict] = [dict() for _ in range(order)]
        for n, line in enumerate(lines[2:], start=3):
            if not line:
                continue
            try:
                ctx, word, value = line.split("\t")
            except ValueError:
                raise ModelFormatError("LM records need 3 tab-separated fields", line=n) from None
            hist = tuple(ctx.split(" ")) if ctx else ()
            alpha, gamma = levels[len(hist)].setdefault(hist, ({}, 0.0))
            if word == BACKOFF:
                levels[len(hist)][hist] = (alpha, float(value))
            else:
                alpha[word] = float(value)
        return cls(order, vocab, levels)


def train_lm(corpus: Iterable[Sentence | Sequence[str]], order: int = 5,
             discount: float = 0.75, min_count: int = 2) -> NGramLM:
    LMConfig(order, discount, min_count).validate()
    sents = [s.words if isinstance(s, Sentence) else list(s) for s in corpus]
    if not sents:
        raise EmptyCorpus("cannot train a language model on an empty corpus")
    freq = Counter(w for s in sents for w in s)
    keep = {w for w, c in freq.items() if c >= min_count} - {BOS, EOS, UNK}
    vocab = [BOS, EOS, UNK] + sorted(keep)

    counts: list[dict[tuple, Counter]] = [defaultdict(Counter) for _ in range(order)]
    for s in sents:
        seq = [BOS] * (order - 1) + [w if w in keep else UNK for w in s] + [EOS]
        for t in range(order - 1, len(seq)):
            w = seq[t]
            for m in range(order):
                counts[m][tuple(seq[t - m:t])][w] += 1

    levels = []
    for m in range(order):
        level = {}
        for hist, nxt in counts[m].items():
            total = sum(nxt.values())
            alpha = {w: max(c - discount, 0.0) / total for w, c in nxt.items()}
            level[hist] = (alpha, discount * len(nxt) / total)
        levels.append(level)
    return NGramLM(order, vocab, levels)


def perplexity(lm: NGramLM, sentence) -> float:
    return lm.perplexity(sentence)
