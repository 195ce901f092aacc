"""Synthetic Chinese-English dialogue corpus with planted pronoun drops.

Sentences come from three templates. Every pronoun is cued by an adjacent
verb (each verb belongs to exactly one pronoun), so a drop is recoverable
from local context:

* subject:  [TIME] PRON [ADV] VERB [了] NOUN   /  [time] pron [adv] verb the noun
* embedded: PRON VERB 过 PRON VERB [了] NOUN   /  pron verb pron verb the noun
* object:   NAME [ADV] VERB [了] PRON          /  name [adv] verb pron

了/过 and "the" stay unaligned, which widens some projection spans to two
insertion points. Each pronoun is dropped independently with probability
``drop_rate``; the English side and its gold alignment are left intact,
so a dropped pronoun shows up as an unaligned English pronoun.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import (
    AlignedSentencePair,
    DPAnnotation,
    LabeledSentence,
    Sentence,
    Token,
    atomic_write,
    format_alignment,
    format_labels,
    format_sentences,
    format_sidecar,
)
from .errors import ConfigError

PRONOUNS = [
    ("我", "I", "me"), ("我们", "we", "us"), ("你", "you", "you"), ("你们", "you", "you"),
    ("他", "he", "him"), ("她", "she", "her"), ("它", "it", "it"),
    ("他们", "they", "them"), ("她们", "they", "them"), ("它们", "they", "them"),
]
SUBJECT_VERBS = {
    "我": [("想", "want"), ("需要", "need"), ("记得", "remember")],
    "我们": [("讨论", "discuss"), ("准备", "prepare"), ("分享", "share")],
    "你": [("知道", "know"), ("相信", "believe"), ("忘记", "forget")],
    "你们": [("参观", "visit"), ("打扫", "clean"), ("修理", "repair")],
    "他": [("喜欢", "like"), ("买", "buy"), ("卖", "sell")],
    "她": [("画", "paint"), ("写", "write"), ("唱", "sing")],
    "它": [("吃", "eat"), ("闻", "smell"), ("咬", "bite")],
    "他们": [("建造", "build"), ("驾驶", "drive"), ("检查", "check")],
    "她们": [("设计", "design"), ("缝", "sew"), ("布置", "decorate")],
    "它们": [("追", "chase"), ("抓", "catch"), ("藏", "hide")],
}
OBJECT_VERBS = {
    "我": [("帮助", "helps"), ("邀请", "invites")],
    "你": [("想念", "misses"), ("感谢", "thanks")],
    "他": [("批评", "criticizes"), ("表扬", "praises")],
    "她": [("拥抱", "hugs"), ("保护", "protects")],
    "它": [("喂", "feeds"), ("洗", "washes")],
    "他们": [("教", "teaches"), ("训练", "trains")],
    "它们": [("放", "releases"), ("数", "counts")],
}
NOUNS = [("苹果", "apple"), ("电影", "movie"), ("问题", "problem"), ("房子", "house"),
         ("汽车", "car"), ("衣服", "clothes"), ("歌", "song"), ("书", "book"),
         ("饭", "meal"), ("照片", "photo")]
NAMES = [("小明", "Xiaoming"), ("小红", "Xiaohong"), ("老王", "Wang"), ("妈妈", "mom"), ("老师", "teacher")]
TIMES = [("昨天", "yesterday"), ("今天", "today"), ("现在", "now"), ("明天", "tomorrow")]
ADVERBS = [("也", "also"), ("真的", "really")]

_EN = {zh: (subj, obj) for zh, subj, obj in PRONOUNS}


@dataclass
class SynthConfig:
    sentences: int = 5000
    seed: int = 7
    drop_rate: float = 0.3
    doc_len: int = 5

    def validate(self):
        if self.sentences < 1:
            raise ConfigError("sentences must be >= 1", field="sentences")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ConfigError("drop_rate must lie in [0, 1]", field="drop_rate")
        if self.doc_len < 1:
            raise ConfigError("doc_len must be >= 1", field="doc_len")


@dataclass
class SynthCorpus:
    full: list[Sentence]  # source with every pronoun overt
    source: list[Sentence]  # source after drops
    target: list[Sentence]
    pairs: list[AlignedSentencePair]  # dropped source, target, gold links
    gold: list[LabeledSentence]

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            "full": (out / "full.zh", format_sentences(self.full)),
            "source": (out / "src.zh", format_sentences(self.source)),
            "target": (out / "tgt.en", format_sentences(self.target)),
            "align": (out / "gold.align", _format_links(self.pairs)),
            "gold": (out / "gold.labels.tsv", format_labels(self.gold)),
            "sidecar": (out / "src.sidecar.tsv", format_sidecar(self.source)),
            "full_sidecar": (out / "full.sidecar.tsv", format_sidecar(self.full)),
        }
        for path, text in files.values():
            atomic_write(path, text)
        return {k: p for k, (p, _) in files.items()}


def _format_links(pairs):
    lines = []
    for p in pairs:
        if p.source.discourse_index == 0 and lines:
            lines.append("")
        lines.append(format_alignment(p.links))
    return "".join(line + "\n" for line in lines)


class _Builder:
    def __init__(self, depth=""):
        self.zh: list[tuple[str, str, str, int | None, bool]] = []
        self.en: list[str] = []
        self.depth = depth

    def add(self, zh, pos, role, en=None, pron=False):
        """Append a source token, optionally aligned to a new target word."""
        j = None
        if en is not None:
            j = len(self.en)
            self.en.append(en)
        self.zh.append((zh, pos, f"{pos}-{role}{self.depth}", j, pron))

    def en_only(self, word):
        self.en.append(word)


def _subject(rng):
    pron = rng.choice(PRONOUNS)[0]
    verb = rng.choice(SUBJECT_VERBS[pron])
    return pron, verb


def _sentence(rng: random.Random) -> _Builder:
    b = _Builder()
    kind = rng.random()
    if kind < 0.4:
        if rng.random() < 0.5:
            b.add(*_pair(rng.choice(TIMES), "NT", "NP-IP"))
        pron, (v, ve) = _subject(rng)
        b.add(pron, "PN", "NP-IP", _EN[pron][0], pron=True)
        if rng.random() < 0.4:
            b.add(*_pair(rng.choice(ADVERBS), "AD", "ADVP-VP-IP"))
        b.add(v, "VV", "VP-IP", ve)
        _object_noun(rng, b)
    elif kind < 0.7:
        pron, (v, ve) = _subject(rng)
        b.add(pron, "PN", "NP-IP", _EN[pron][0], pron=True)
        b.add(v, "VV", "VP-IP", ve)
        b.add("过", "AS", "VP-IP")
        b.depth = "-VP-IP"
        pron2, (v2, ve2) = _subject(rng)
        b.add(pron2, "PN", "NP-IP", _EN[pron2][0], pron=True)
        b.add(v2, "VV", "VP-IP", ve2)
        _object_noun(rng, b)
    else:
        name, name_en = rng.choice(NAMES)
        b.add(name, "NR", "NP-IP", name_en)
        if rng.random() < 0.3:
            b.add(*_pair(rng.choice(ADVERBS), "AD", "ADVP-VP-IP"))
        pron = rng.choice(sorted(OBJECT_VERBS))
        v, ve = rng.choice(OBJECT_VERBS[pron])
        b.add(v, "VV", "VP-IP", ve)
        if rng.random() < 0.5:
            b.add("了", "AS", "VP-IP")
        b.add(pron, "PN", "NP-VP-IP", _EN[pron][1], pron=True)
    return b


def _pair(item, pos, role):
    zh, en = item
    return zh, pos, role, en


def _object_noun(rng, b):
    if rng.random() < 0.5:
        b.add("了", "AS", "VP-IP")
    noun, noun_en = rng.choice(NOUNS)
    b.en_only("the")
    b.add(noun, "NN", "NP-VP-IP", noun_en)


def synth_corpus(config: SynthConfig | None = None) -> SynthCorpus:
    cfg = config or SynthConfig()
    cfg.validate()
    rng = random.Random(cfg.seed)
    full, source, target, pairs, gold = [], [], [], [], []
    for k in range(cfg.sentences):
        idx = k % cfg.doc_len
        b = _sentence(rng)
        full_toks = tuple(Token(zh, pos, path) for zh, pos, path, _, _ in b.zh)
        kept, links, dps = [], set(), []
        for zh, pos, path, j, pron in b.zh:
            if pron and rng.random() < cfg.drop_rate:
                dps.append(DPAnnotation(len(kept), zh, (b.en[j], j)))
                continue
            if j is not None:
                links.add((len(kept), j))
            kept.append(Token(zh, pos, path))
        if not kept:
            raise ConfigError("a template produced an empty source sentence")
        src = Sentence(tuple(kept), idx)
        tgt = Sentence.from_words(b.en, idx)
        full.append(Sentence(full_toks, idx))
        source.append(src)
        target.append(tgt)
        pairs.append(AlignedSentencePair(src, tgt, frozenset(links)))
        gold.append(LabeledSentence.from_dps(src, dps))
    return SynthCorpus(full, source, target, pairs, gold)
