"""Corpus data model and the plain-text formats the pipeline reads and writes.

Formats (all UTF-8, newline-terminated):

* sentence files: one whitespace-tokenized sentence per line, a blank line
  starts a new document;
* alignment files: one line per sentence pair with "i-j" links (0-indexed,
  source index first);
* sidecar TSV: ``token<TAB>pos<TAB>path`` per token, "_" for an absent
  value, a blank line after each sentence;
* label TSV: ``token<TAB>label<TAB>pronoun`` per token plus one sentinel row
  for the sentence-final slot, a blank line after each sentence and a
  ``# newdoc`` line in front of every document.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    DataError,
    IndexOutOfRange,
    LineCountMismatch,
    MalformedLink,
)

NA = "NA"
DP = "DP"
ABSENT = "_"
END_TOKEN = "*END*"
NEWDOC = "# newdoc"


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str | None = None
    path: str | None = None

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise DataError(f"invalid token surface {self.surface!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    discourse_index: int = 0

    def __post_init__(self):
        if not self.tokens:
            raise DataError("sentence has no tokens")
        if self.discourse_index < 0:
            raise DataError("discourse_index must be >= 0")

    @classmethod
    def from_words(cls, words: Iterable[str], discourse_index: int = 0) -> "Sentence":
        return cls(tuple(Token(w) for w in words), discourse_index)

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def __len__(self):
        return len(self.tokens)

    def with_tokens(self, tokens: Sequence[Token]) -> "Sentence":
        return Sentence(tuple(tokens), self.discourse_index)

    def insert(self, position: int, word: str) -> "Sentence":
        toks = list(self.tokens)
        toks.insert(position, Token(word))
        return self.with_tokens(toks)

    def text(self) -> str:
        return " ".join(self.words)


@dataclass(frozen=True)
class AlignedSentencePair:
    source: Sentence
    target: Sentence
    links: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        for i, j in self.links:
            if not (0 <= i < len(self.source) and 0 <= j < len(self.target)):
                raise IndexOutOfRange(f"link {i}-{j} outside sentence bounds")

    def aligned_targets(self) -> set[int]:
        return {j for _, j in self.links}

    def sources_of(self, tgt_index: int) -> list[int]:
        return sorted(i for i, j in self.links if j == tgt_index)


class Category(str, Enum):
    SUBJ_PERSONAL = "SubjPersonal"
    OBJ_PERSONAL = "ObjPersonal"
    POSSESSIVE = "Possessive"
    OBJ_POSSESSIVE = "ObjPossessive"
    REFLEXIVE = "Reflexive"


@dataclass(frozen=True)
class InventoryEntry:
    category: Category
    candidates: tuple[str, ...]


# (category, English pronoun, Chinese forms) in table order.
_TABLE = [
    (Category.SUBJ_PERSONAL, "I", "我"),
    (Category.SUBJ_PERSONAL, "we", "我们"),
    (Category.SUBJ_PERSONAL, "you", "你/你们"),
    (Category.SUBJ_PERSONAL, "he", "他"),
    (Category.SUBJ_PERSONAL, "she", "她"),
    (Category.SUBJ_PERSONAL, "it", "它"),
    (Category.SUBJ_PERSONAL, "they", "他们/她们/它们"),
    (Category.OBJ_PERSONAL, "me", "我"),
    (Category.OBJ_PERSONAL, "us", "我们"),
    (Category.OBJ_PERSONAL, "you", "你/你们"),
    (Category.OBJ_PERSONAL, "him", "他"),
    (Category.OBJ_PERSONAL, "her", "她"),
    (Category.OBJ_PERSONAL, "it", "它"),
    (Category.OBJ_PERSONAL, "them", "她们/他们/它们"),
    (Category.POSSESSIVE, "my", "我的"),
    (Category.POSSESSIVE, "our", "我们的"),
    (Category.POSSESSIVE, "your", "你的/你们的"),
    (Category.POSSESSIVE, "his", "他的"),
    (Category.POSSESSIVE, "her", "她的"),
    (Category.POSSESSIVE, "its", "它的"),
    (Category.POSSESSIVE, "their", "他们的/她们的/它们的"),
    (Category.OBJ_POSSESSIVE, "mine", "我的"),
    (Category.OBJ_POSSESSIVE, "ours", "我们的"),
    (Category.OBJ_POSSESSIVE, "yours", "你的/你们的"),
    (Category.OBJ_POSSESSIVE, "his", "他的"),
    (Category.OBJ_POSSESSIVE, "hers", "她的"),
    (Category.OBJ_POSSESSIVE, "its", "它的"),
    (Category.OBJ_POSSESSIVE, "theirs", "她们的/他们的/它们的"),
    (Category.REFLEXIVE, "myself", "我自己"),
    (Category.REFLEXIVE, "ourselves", "我们自己"),
    (Category.REFLEXIVE, "yourself", "你自己"),
    (Category.REFLEXIVE, "yourselves", "你们自己"),
    (Category.REFLEXIVE, "himself", "他自己"),
    (Category.REFLEXIVE, "herself", "她自己"),
    (Category.REFLEXIVE, "itself", "它自己"),
    (Category.REFLEXIVE, "themselves", "他们自己/她们自己/它们自己"),
]


class PronounInventory:
    """English pronoun -> category and candidate Chinese pronouns.

    Lookup is case-insensitive. An English form listed under several
    categories ("her", "his", "you", "it") keeps its first category and the
    union of all its Chinese forms, in table order.
    """

    def __init__(self, entries: dict[str, InventoryEntry]):
        self.entries = {k.lower(): v for k, v in entries.items()}
        self._chinese = frozenset(c for e in self.entries.values() for c in e.candidates)

    def lookup(self, english: str) -> InventoryEntry | None:
        return self.entries.get(english.lower())

    def __contains__(self, english: str) -> bool:
        return english.lower() in self.entries

    def candidates(self, english: str) -> tuple[str, ...]:
        entry = self.lookup(english)
        return entry.candidates if entry else ()

    @property
    def chinese_pronouns(self) -> frozenset[str]:
        return self._chinese

    def is_chinese_pronoun(self, word: str) -> bool:
        return word in self._chinese


def default_inventory() -> PronounInventory:
    entries: dict[str, InventoryEntry] = {}
    for category, english, forms in _TABLE:
        key = english.lower()
        cands = tuple(forms.split("/"))
        if key in entries:
            old = entries[key]
            merged = old.candidates + tuple(c for c in cands if c not in old.candidates)
            entries[key] = InventoryEntry(old.category, merged)
        else:
            entries[key] = InventoryEntry(category, cands)
    return PronounInventory(entries)


@dataclass(frozen=True)
class DPAnnotation:
    """A pronoun to insert before token ``position`` (``len(sentence)`` = sentence-final)."""

    position: int
    pronoun: str
    trigger: tuple[str, int] | None = None


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    labels: tuple[str, ...]
    dps: tuple[DPAnnotation, ...] = ()

    def __post_init__(self):
        if len(self.labels) != len(self.sentence) + 1:
            raise DataError("labels must cover every token plus the sentinel slot")
        dp_slots = {d.position for d in self.dps}
        for i, lab in enumerate(self.labels):
            if (lab == DP) != (i in dp_slots):
                raise DataError(f"label at slot {i} disagrees with DP annotations")

    @classmethod
    def from_dps(cls, sentence: Sentence, dps: Iterable[DPAnnotation]) -> "LabeledSentence":
        dps = tuple(sorted(dps, key=lambda d: d.position))
        slots = {d.position for d in dps}
        for d in dps:
            if not 0 <= d.position <= len(sentence):
                raise IndexOutOfRange(f"DP position {d.position} outside sentence")
        labels = tuple(DP if i in slots else NA for i in range(len(sentence) + 1))
        return cls(sentence, labels, dps)

    @property
    def slots(self) -> set[int]:
        return {d.position for d in self.dps}

    def slot_pronouns(self) -> set[tuple[int, str]]:
        return {(d.position, d.pronoun) for d in self.dps}


# ---------------------------------------------------------------- text I/O


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file in the same directory and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_lines(path: str | os.PathLike) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def parse_sentences(lines: Iterable[str]) -> list[Sentence]:
    out = []
    idx = 0
    for line in lines:
        words = line.split()
        if not words:
            idx = 0
            continue
        out.append(Sentence.from_words(words, idx))
        idx += 1
    return out


def read_sentences(path: str | os.PathLike) -> list[Sentence]:
    return parse_sentences(read_lines(path))


def format_sentences(sentences: Iterable[Sentence]) -> str:
    lines = []
    for s in sentences:
        if s.discourse_index == 0 and lines:
            lines.append("")
        lines.append(s.text())
    return "".join(line + "\n" for line in lines)


def split_documents(sentences: Iterable[Sentence]) -> list[list[Sentence]]:
    docs: list[list[Sentence]] = []
    for s in sentences:
        if s.discourse_index == 0 or not docs:
            docs.append([])
        docs[-1].append(s)
    return docs


def parse_alignment(line: str, line_no: int, n_src: int, n_tgt: int) -> frozenset[tuple[int, int]]:
    links = set()
    for item in line.split():
        i, sep, j = item.partition("-")
        if not sep or not i.isdigit() or not j.isdigit():
            raise MalformedLink(f"bad alignment token {item!r}", line=line_no)
        i, j = int(i), int(j)
        if i >= n_src or j >= n_tgt:
            raise IndexOutOfRange(f"link {item} outside {n_src}x{n_tgt} sentence pair", line=line_no)
        links.add((i, j))
    return frozenset(links)


def format_alignment(links: Iterable[tuple[int, int]]) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def load_parallel(src_path, tgt_path, align_path) -> list[AlignedSentencePair]:
    src, tgt, aln = read_lines(src_path), read_lines(tgt_path), read_lines(align_path)
    return parse_parallel(src, tgt, aln)


def parse_parallel(src: Sequence[str], tgt: Sequence[str], aln: Sequence[str]) -> list[AlignedSentencePair]:
    if not len(src) == len(tgt) == len(aln):
        raise LineCountMismatch(
            f"line counts differ: source={len(src)} target={len(tgt)} alignment={len(aln)}"
        )
    pairs = []
    idx = 0
    for n, (s, t, a) in enumerate(zip(src, tgt, aln), start=1):
        sw, tw = s.split(), t.split()
        if not sw or not tw:
            if sw or tw or a.strip():
                raise LineCountMismatch("document boundaries differ between files", line=n)
            idx = 0
            continue
        links = parse_alignment(a, n, len(sw), len(tw))
        pairs.append(
            AlignedSentencePair(Sentence.from_words(sw, idx), Sentence.from_words(tw, idx), links)
        )
        idx += 1
    return pairs


def format_parallel(pairs: Sequence[AlignedSentencePair]) -> tuple[str, str, str]:
    src = format_sentences(p.source for p in pairs)
    tgt = format_sentences(p.target for p in pairs)
    lines = []
    for p in pairs:
        if p.source.discourse_index == 0 and lines:
            lines.append("")
        lines.append(format_alignment(p.links))
    return src, tgt, "".join(line + "\n" for line in lines)


def _opt(value: str) -> str | None:
    return None if value == ABSENT else value


def parse_sidecar(lines: Iterable[str]) -> list[list[tuple[str, str | None, str | None]]]:
    sents: list[list[tuple[str, str | None, str | None]]] = []
    cur: list[tuple[str, str | None, str | None]] = []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            if cur:
                sents.append(cur)
                cur = []
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise DataError("sidecar rows need 3 tab-separated columns", line=n)
        cur.append((cols[0], _opt(cols[1]), _opt(cols[2])))
    if cur:
        sents.append(cur)
    return sents


def read_sidecar(path):
    return parse_sidecar(read_lines(path))


def format_sidecar(sentences: Iterable[Sentence]) -> str:
    out = []
    for s in sentences:
        for t in s.tokens:
            out.append(f"{t.surface}\t{t.pos or ABSENT}\t{t.path or ABSENT}\n")
        out.append("\n")
    return "".join(out)


def apply_sidecar(sentences: Sequence[Sentence], sidecar) -> list[Sentence]:
    """Attach POS and path annotations; token surfaces must agree."""
    if len(sidecar) != len(sentences):
        raise LineCountMismatch(
            f"sidecar has {len(sidecar)} sentences, corpus has {len(sentences)}"
        )
    out = []
    for n, (s, rows) in enumerate(zip(sentences, sidecar), start=1):
        if [r[0] for r in rows] != s.words:
            raise DataError("sidecar tokens do not match corpus tokens", sentence=n)
        out.append(s.with_tokens([Token(w, pos, path) for w, pos, path in rows]))
    return out


def format_labels(labeled: Iterable[LabeledSentence]) -> str:
    out = []
    for ls in labeled:
        if ls.sentence.discourse_index == 0:
            out.append(NEWDOC + "\n")
        by_slot: dict[int, list[str]] = {}
        for d in ls.dps:
            by_slot.setdefault(d.position, []).append(d.pronoun)
        words = ls.sentence.words + [END_TOKEN]
        for i, (w, lab) in enumerate(zip(words, ls.labels)):
            pron = "+".join(by_slot[i]) if i in by_slot else ABSENT
            out.append(f"{w}\t{lab}\t{pron}\n")
        out.append("\n")
    return "".join(out)


def parse_labels(lines: Iterable[str]) -> list[LabeledSentence]:
    out: list[LabeledSentence] = []
    rows: list[list[str]] = []
    idx = 0

    def flush(line_no):
        nonlocal idx
        if rows[-1][0] != END_TOKEN:
            raise DataError("label block lacks the sentinel row", line=line_no)
        words = [r[0] for r in rows[:-1]]
        dps = []
        for pos, (_, lab, pron) in enumerate(rows):
            if lab not in (NA, DP):
                raise DataError(f"unknown label {lab!r}", line=line_no)
            if (lab == DP) != (pron != ABSENT):
                raise DataError("pronoun column disagrees with label", line=line_no)
            if pron != ABSENT:
                dps.extend(DPAnnotation(pos, p) for p in pron.split("+"))
        out.append(LabeledSentence.from_dps(Sentence.from_words(words, idx), dps))
        idx += 1
        rows.clear()

    n = 0
    for n, line in enumerate(lines, start=1):
        if line == NEWDOC:
            if rows:
                flush(n)
            idx = 0
            continue
        if not line.strip():
            if rows:
                flush(n)
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise DataError("label rows need 3 tab-separated columns", line=n)
        rows.append(cols)
    if rows:
        flush(n)
    return out


def read_labels(path):
    return parse_labels(read_lines(path))
