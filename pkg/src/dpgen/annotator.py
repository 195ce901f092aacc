"""Project unaligned target pronouns onto the source side.

An insertion point ``g`` means "before source token g"; ``len(source)`` is
the sentence-final point. For an unaligned target pronoun the nearest
aligned target words on either side act as anchors, and the candidate
insertion points are those strictly inside the source interval they span.
Every (point, Chinese pronoun) candidate is scored with the LM together
with the unmodified sentence; a candidate wins only if it is strictly more
fluent than the original.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import (
    AlignedSentencePair,
    DPAnnotation,
    LabeledSentence,
    PronounInventory,
    Sentence,
)
from .errors import NoAnchors
from .lm import NGramLM


@dataclass(frozen=True)
class ProjectionSpan:
    lo: int | None
    hi: int | None
    gaps: tuple[int, ...]


@dataclass(frozen=True)
class InsertionCandidate:
    position: int
    pronoun: str
    score: float


def find_unaligned_pronouns(pair: AlignedSentencePair, inv: PronounInventory) -> list[int]:
    aligned = pair.aligned_targets()
    return [j for j, w in enumerate(pair.target.words) if j not in aligned and w in inv]


def diagonal_span(pair: AlignedSentencePair, tgt_index: int) -> ProjectionSpan:
    aligned = pair.aligned_targets()
    lo = hi = None
    for j in range(tgt_index - 1, -1, -1):
        if j in aligned:
            lo = max(pair.sources_of(j))
            break
    for j in range(tgt_index + 1, len(pair.target)):
        if j in aligned:
            hi = min(pair.sources_of(j))
            break
    if lo is None and hi is None:
        raise NoAnchors("no aligned target word on either side", tgt_index=tgt_index)
    first = 0 if lo is None else lo + 1
    last = len(pair.source) if hi is None else hi
    # crossing or collapsed anchors leave no interior point
    return ProjectionSpan(lo, hi, tuple(range(first, last + 1)))


def score_candidates(sentence: Sentence, gaps: Sequence[int], pronouns: Sequence[str],
                     lm: NGramLM) -> list[InsertionCandidate]:
    words = sentence.words
    out = []
    for g in gaps:
        for p in pronouns:
            out.append(InsertionCandidate(g, p, lm.perplexity(words[:g] + [p] + words[g:])))
    return out


def score_and_select(sentence: Sentence, span: ProjectionSpan | Sequence[int],
                     pronoun_candidates: Sequence[str], lm: NGramLM) -> DPAnnotation | None:
    gaps = span.gaps if isinstance(span, ProjectionSpan) else tuple(span)
    cands = score_candidates(sentence, gaps, pronoun_candidates, lm)
    if not cands:
        return None
    order = {p: k for k, p in enumerate(pronoun_candidates)}
    best = min(cands, key=lambda c: (c.score, c.position, order[c.pronoun]))
    if best.score < lm.perplexity(sentence):
        return DPAnnotation(best.position, best.pronoun)
    return None


def annotate_pair(pair: AlignedSentencePair, inv: PronounInventory, lm: NGramLM):
    """Returns (LabeledSentence over the original source, DP-inserted source).

    Pronouns are handled left to right; every accepted insertion is part of
    the working sentence when the next pronoun is scored. Positions in the
    returned annotations refer to the original source tokens.
    """
    source = pair.source
    working = source
    inserted: list[int] = []  # original insertion points accepted so far
    dps = []
    for j in find_unaligned_pronouns(pair, inv):
        try:
            span = diagonal_span(pair, j)
        except NoAnchors:
            continue
        if not span.gaps:
            continue
        # a later pronoun lands after earlier insertions at the same point
        shift = {g: g + sum(1 for q in inserted if q <= g) for g in span.gaps}
        back = {w: g for g, w in shift.items()}
        word = pair.target.words[j]
        choice = score_and_select(working, [shift[g] for g in span.gaps], inv.candidates(word), lm)
        if choice is None:
            continue
        orig = back[choice.position]
        dps.append(DPAnnotation(orig, choice.pronoun, (word, j)))
        inserted.append(orig)
        working = working.insert(choice.position, choice.pronoun)
    return LabeledSentence.from_dps(source, dps), working


def annotate_corpus(pairs: Iterable[AlignedSentencePair], inv: PronounInventory, lm: NGramLM):
    labeled, inserted = [], []
    for pair in pairs:
        ls, ins = annotate_pair(pair, inv, lm)
        labeled.append(ls)
        inserted.append(ins)
    return labeled, inserted
