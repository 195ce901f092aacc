"""Micro-averaged P/R/F1 for DP detection and prediction, and label agreement.

Counts are pooled over the corpus before any ratio is taken. Ratios are
exact :class:`~fractions.Fraction` values.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .corpus import LabeledSentence
from .errors import SentenceCountMismatch


@dataclass(frozen=True)
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> Fraction:
        d = self.tp + self.fp
        return Fraction(self.tp, d) if d else Fraction(0)

    @property
    def recall(self) -> Fraction:
        d = self.tp + self.fn
        return Fraction(self.tp, d) if d else Fraction(0)

    @property
    def f1(self) -> Fraction:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else Fraction(0)

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _count(pred: Sequence[set], gold: Sequence[set]) -> PRF:
    if len(pred) != len(gold):
        raise SentenceCountMismatch(f"{len(pred)} predicted vs {len(gold)} gold sentences")
    tp = fp = fn = 0
    for p, g in zip(pred, gold):
        p, g = set(p), set(g)
        tp += len(p & g)
        fp += len(p - g)
        fn += len(g - p)
    return PRF(tp, fp, fn)


def eval_detection(pred: Sequence[Iterable[int]], gold: Sequence[Iterable[int]]) -> PRF:
    """Per-sentence sets of insertion slots."""
    return _count(list(pred), list(gold))


def eval_prediction(pred: Sequence[Iterable[tuple[int, str]]],
                    gold: Sequence[Iterable[tuple[int, str]]]) -> PRF:
    """Per-sentence sets of (slot, pronoun); both parts must match."""
    return _count(list(pred), list(gold))


class Agreement(NamedTuple):
    detection: Fraction
    generation: Fraction


def agreement(auto: Sequence[LabeledSentence], manual: Sequence[LabeledSentence]) -> Agreement:
    """Fraction of insertion slots on which two label streams agree; the
    generation figure also requires the same pronouns at DP slots."""
    auto, manual = list(auto), list(manual)
    if len(auto) != len(manual):
        raise SentenceCountMismatch(f"{len(auto)} vs {len(manual)} sentences")
    total = det = gen = 0
    for a, m in zip(auto, manual):
        if len(a.labels) != len(m.labels):
            raise SentenceCountMismatch("paired sentences differ in length")
        pa = _pronouns_by_slot(a)
        pm = _pronouns_by_slot(m)
        for i, (la, lm) in enumerate(zip(a.labels, m.labels)):
            total += 1
            if la == lm:
                det += 1
                if pa.get(i) == pm.get(i):
                    gen += 1
    if not total:
        return Agreement(Fraction(1), Fraction(1))
    return Agreement(Fraction(det, total), Fraction(gen, total))


def _pronouns_by_slot(ls: LabeledSentence) -> dict[int, tuple[str, ...]]:
    out: dict[int, list[str]] = {}
    for d in ls.dps:
        out.setdefault(d.position, []).append(d.pronoun)
    return {k: tuple(sorted(v)) for k, v in out.items()}


def evaluate_labels(pred: Sequence[LabeledSentence], gold: Sequence[LabeledSentence]):
    """-> (detection PRF, prediction PRF, agreement of pred with gold)."""
    pred, gold = list(pred), list(gold)
    det = eval_detection([p.slots for p in pred], [g.slots for g in gold])
    prd = eval_prediction([p.slot_pronouns() for p in pred], [g.slot_pronouns() for g in gold])
    return det, prd, agreement(pred, gold)


def format_report(results: dict[str, PRF], agree: Agreement | None = None) -> str:
    """Aligned table followed by a key=value block."""
    lines = [f"{'':<12}{'P':>8}{'R':>8}{'F1':>8}{'TP':>7}{'FP':>7}{'FN':>7}"]
    for name, r in results.items():
        lines.append(f"{name:<12}{float(r.precision):>8.4f}{float(r.recall):>8.4f}"
                     f"{float(r.f1):>8.4f}{r.tp:>7d}{r.fp:>7d}{r.fn:>7d}")
    if agree is not None:
        lines.append(f"agreement   detection={float(agree.detection):.4f} "
                     f"generation={float(agree.generation):.4f}")
    lines.append("")
    for name, r in results.items():
        for key in ("tp", "fp", "fn"):
            lines.append(f"{name}.{key}={getattr(r, key)}")
        for key in ("precision", "recall", "f1"):
            lines.append(f"{name}.{key}={float(getattr(r, key)):.6f}")
    if agree is not None:
        lines.append(f"agreement.detection={float(agree.detection):.6f}")
        lines.append(f"agreement.generation={float(agree.generation):.6f}")
    return "\n".join(lines) + "\n"
