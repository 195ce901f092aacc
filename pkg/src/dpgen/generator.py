"""DP generation for raw input and confusion-network output.

CN text format: one column per line, arcs separated by a single space and
rendered ``token|weight``; a blank line closes every sentence. Weights that
are exact finite decimals (1/N with N = 2^a 5^b, and 1) are printed
exactly, anything else with 12 significant digits. ``*EPS*`` is the empty
arc. The layout maps one-to-one onto Moses' confusion-network input (one
column per line, ``token prob`` pairs, ``*EPS*`` for epsilon) and onto PLF
via :func:`to_plf`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .corpus import Sentence, default_inventory, split_documents
from .detector import RnnDetector, detect
from .predictor import MlpPredictor, extract_features, predict_nbest

EPS = "*EPS*"


@dataclass(frozen=True)
class Column:
    arcs: tuple[tuple[str, Fraction | float], ...]
    is_dp: bool = False

    def total(self):
        return sum(w for _, w in self.arcs)


@dataclass(frozen=True)
class ConfusionNetwork:
    columns: tuple[Column, ...]

    def tokens(self) -> list[str]:
        """The input sentence, i.e. the network with its DP columns removed."""
        return [c.arcs[0][0] for c in self.columns if not c.is_dp]


@dataclass(frozen=True)
class SentenceResult:
    sentence: Sentence
    slots: tuple[int, ...]
    nbest: tuple[tuple[tuple[str, float], ...], ...]


# ---------------------------------------------------------------- generation


def generate(detector: RnnDetector, predictor: MlpPredictor, doc: Sequence[Sentence], n: int,
             threshold: float = 0.5, pronouns: frozenset[str] | None = None) -> list[SentenceResult]:
    if n < 1:
        raise ValueError("N must be >= 1")
    if pronouns is None:
        pronouns = default_inventory().chinese_pronouns
    n = min(n, len(predictor.classes))
    out = []
    for i, sent in enumerate(doc):
        slots = tuple(detect(detector, sent, threshold))
        lists = tuple(
            tuple(predict_nbest(predictor, extract_features(doc, i, p, predictor.features, pronouns), n))
            for p in slots
        )
        out.append(SentenceResult(sent, slots, lists))
    return out


def generate_corpus(detector, predictor, sentences: Iterable[Sentence], n: int, **kw) -> list[SentenceResult]:
    out = []
    for doc in split_documents(sentences):
        out.extend(generate(detector, predictor, doc, n, **kw))
    return out


def insert_1best(sentence: Sentence | Sequence[str], slots: Sequence[int],
                 nbest_lists: Sequence[Sequence[tuple[str, float]]]) -> list[str]:
    words = sentence.words if isinstance(sentence, Sentence) else list(sentence)
    for slot, nb in sorted(zip(slots, nbest_lists), key=lambda x: x[0], reverse=True):
        words.insert(slot, nb[0][0])
    return words


def build_cn(sentence: Sentence | Sequence[str], slots: Sequence[int],
             nbest_lists: Sequence[Sequence[tuple[str, float]]], n: int,
             weighting: str = "uniform") -> ConfusionNetwork:
    """Each DP slot gets a column of its N-best pronouns at weight exactly 1/N;
    a list shorter than N leaves the missing mass on an epsilon arc.

    ``weighting="prob"`` is an extension: arcs carry the classifier
    probabilities renormalized over the list.
    """
    words = sentence.words if isinstance(sentence, Sentence) else list(sentence)
    by_slot = dict(zip(slots, nbest_lists))
    cols = []
    for pos in range(len(words) + 1):
        if pos in by_slot:
            cols.append(_dp_column(by_slot[pos], n, weighting))
        if pos < len(words):
            cols.append(Column(((words[pos], Fraction(1)),)))
    return ConfusionNetwork(tuple(cols))


def _dp_column(nb, n, weighting) -> Column:
    if len(nb) > n:
        raise ValueError(f"N-best list longer than N={n}")
    if weighting == "uniform":
        arcs = [(tok, Fraction(1, n)) for tok, _ in nb]
        rest = Fraction(n - len(nb), n)
        if rest:
            arcs.append((EPS, rest))
    elif weighting == "prob":
        z = sum(p for _, p in nb)
        arcs = [(tok, p / z) for tok, p in nb]
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return Column(tuple(arcs), is_dp=True)


# ---------------------------------------------------------------- text format


def format_weight(w: Fraction | float) -> str:
    if isinstance(w, float):
        w = Fraction(w)
    den = w.denominator
    k = 0
    while den % 2 == 0:
        den //= 2
        k += 1
    m = 0
    while den % 5 == 0:
        den //= 5
        m += 1
    if den != 1 or w < 0:
        return _sig12(w)
    digits = max(k, m)
    # exact decimal: numerator * 10^digits / denominator is an integer
    scaled = w.numerator * 10 ** digits // w.denominator
    if len(str(scaled)) > 17:
        return _sig12(w)
    s = str(scaled).rjust(digits + 1, "0")
    whole, frac = s[:len(s) - digits], s[len(s) - digits:]
    frac = frac.rstrip("0")
    return whole + ("." + frac if frac else "")


def _sig12(w) -> str:
    # positional, so that parsing and re-emitting reproduces the same digits
    return np.format_float_positional(float(w), precision=12, unique=False,
                                      fractional=False, trim="-")


def emit_cn(cn: ConfusionNetwork) -> str:
    lines = [" ".join(f"{tok}|{format_weight(w)}" for tok, w in col.arcs) for col in cn.columns]
    return "".join(line + "\n" for line in lines) + "\n"


def emit_cns(cns: Iterable[ConfusionNetwork]) -> str:
    return "".join(emit_cn(cn) for cn in cns)


def parse_cns(text: str) -> list[ConfusionNetwork]:
    """Inverse of :func:`emit_cns`. A column counts as a DP column when it
    has several arcs or an epsilon arc; an N=1 DP column reads back as a
    token column."""
    out, cols = [], []
    for line in text.split("\n"):
        if not line:
            if cols:
                out.append(ConfusionNetwork(tuple(cols)))
                cols = []
            continue
        arcs = []
        for item in line.split(" "):
            tok, sep, w = item.rpartition("|")
            if not sep or not tok:
                raise ValueError(f"bad arc {item!r}")
            arcs.append((tok, Fraction(w)))
        is_dp = len(arcs) > 1 or any(t == EPS for t, _ in arcs)
        cols.append(Column(tuple(arcs), is_dp))
    if cols:
        out.append(ConfusionNetwork(tuple(cols)))
    return out


def to_plf(cn: ConfusionNetwork) -> str:
    """Python Lattice Format rendering (each arc spans one column)."""
    cols = []
    for col in cn.columns:
        arcs = "".join(f"({tok!r},{float(w)!r},1)," for tok, w in col.arcs)
        cols.append(f"({arcs}),")
    return "(" + "".join(cols) + ")"


# ---------------------------------------------------------------- N-best dump


def format_nbest(results: Sequence[SentenceResult]) -> str:
    """TSV: sentence index, slot, rank, pronoun, probability."""
    lines = []
    for k, r in enumerate(results):
        for slot, nb in zip(r.slots, r.nbest):
            for rank, (tok, p) in enumerate(nb):
                lines.append(f"{k}\t{slot}\t{rank}\t{tok}\t{p:.12g}")
    return "".join(line + "\n" for line in lines)


def parse_nbest(text: str, n_sentences: int):
    """-> per-sentence (slots, nbest lists)."""
    table: list[dict[int, list[tuple[str, float]]]] = [dict() for _ in range(n_sentences)]
    for line in text.splitlines():
        if not line:
            continue
        k, slot, _, tok, p = line.split("\t")
        table[int(k)].setdefault(int(slot), []).append((tok, float(p)))
    out = []
    for row in table:
        slots = sorted(row)
        out.append((slots, [row[s] for s in slots]))
    return out
