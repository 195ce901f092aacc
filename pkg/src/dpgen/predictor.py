"""Feature-embedding MLP choosing which pronoun fills a detected slot.

Every feature value is looked up in the embedding table of its slot type
(word, pos, pronoun, noun, path); the concatenation feeds two ReLU layers
and a bias-free softmax output layer.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import LabeledSentence, Sentence, default_inventory, split_documents
from .errors import (
    ConfigError,
    DataError,
    EmptyCorpus,
    ModelFormatError,
    ShapeMismatch,
    SingleClassCorpus,
)
from .neural import (
    NONE,
    EmbeddingTable,
    dump_model,
    init_uniform,
    parse_model,
    relu,
    relu_grad,
    sgd_step,
    softmax,
)

log = logging.getLogger(__name__)

KIND = "mlp-predictor"
TABLES = ("word", "pos", "pronoun", "noun", "path")


@dataclass
class FeatureConfig:
    S: int = 3  # words/tags taken on each side of the slot
    X: int = 2  # sentences searched for context pronouns
    Y: int = 2  # sentences searched for context nouns
    cap: int = 4  # nearest items kept per variable-length group

    def validate(self):
        for name in ("S", "X", "Y", "cap"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", field=name)

    def slot_names(self) -> list[tuple[str, str]]:
        """(slot name, table) pairs in bundle order."""
        offs = range(-self.S, self.S)
        slots = [(f"w{o:+d}", "word") for o in offs]
        slots += [(f"t{o:+d}", "pos") for o in offs]
        slots += [("pron_prev", "pronoun"), ("pron_next", "pronoun")]
        for group, table in (("ctxpron_prev", "pronoun"), ("ctxpron_next", "pronoun"),
                             ("ctxnoun_prev", "noun"), ("ctxnoun_next", "noun")):
            slots += [(f"{group}{i}", table) for i in range(self.cap)]
        slots += [("path_p", "path"), ("path_p-1", "path")]
        return slots


@dataclass(frozen=True)
class FeatureBundle:
    names: tuple[str, ...]
    values: tuple[str | None, ...]

    def __len__(self):
        return len(self.values)

    def dumps(self) -> str:
        return "\t".join(f"{n}={NONE if v is None else v}" for n, v in zip(self.names, self.values))

    @classmethod
    def loads(cls, text: str) -> "FeatureBundle":
        names, values = [], []
        for item in text.split("\t"):
            n, sep, v = item.partition("=")
            if not sep:
                raise DataError(f"feature item {item!r} lacks '='")
            names.append(n)
            values.append(None if v == NONE else v)
        return cls(tuple(names), tuple(values))


def _is_noun(pos: str | None) -> bool:
    return pos is not None and pos.startswith("N")


def _nearest(sentences: Sequence[Sentence], pick, cap: int, backwards: bool) -> list[str | None]:
    found: list[str] = []
    for s in sentences:
        toks = reversed(s.tokens) if backwards else s.tokens
        for t in toks:
            if pick(t):
                found.append(t.surface)
                if len(found) == cap:
                    return found
    return found + [None] * (cap - len(found))


def extract_features(doc: Sequence[Sentence], sentence_idx: int, p: int,
                     cfg: FeatureConfig | None = None,
                     pronouns: frozenset[str] | None = None) -> FeatureBundle:
    """Features for inserting a pronoun before token ``p`` of ``doc[sentence_idx]``.

    Only overt pronouns (members of ``pronouns``) count as pronoun features.
    """
    cfg = cfg or FeatureConfig()
    if pronouns is None:
        pronouns = default_inventory().chinese_pronouns
    sent = doc[sentence_idx]
    toks = sent.tokens
    n = len(toks)
    if not 0 <= p <= n:
        raise DataError(f"slot {p} outside sentence of length {n}")

    def tok(i):
        return toks[i] if 0 <= i < n else None

    offs = range(-cfg.S, cfg.S)
    values: list[str | None] = [t.surface if (t := tok(p + o)) else None for o in offs]
    values += [t.pos if (t := tok(p + o)) else None for o in offs]
    is_pron = lambda t: t.surface in pronouns  # noqa: E731
    values.append(next((t.surface for t in reversed(toks[:p]) if is_pron(t)), None))
    values.append(next((t.surface for t in toks[p:] if is_pron(t)), None))
    before_x = [doc[i] for i in range(sentence_idx - 1, max(sentence_idx - cfg.X, 0) - 1, -1)]
    after_x = list(doc[sentence_idx + 1:sentence_idx + 1 + cfg.X])
    before_y = [doc[i] for i in range(sentence_idx - 1, max(sentence_idx - cfg.Y, 0) - 1, -1)]
    after_y = list(doc[sentence_idx + 1:sentence_idx + 1 + cfg.Y])
    is_noun = lambda t: _is_noun(t.pos)  # noqa: E731
    values += _nearest(before_x, is_pron, cfg.cap, True)
    values += _nearest(after_x, is_pron, cfg.cap, False)
    values += _nearest(before_y, is_noun, cfg.cap, True)
    values += _nearest(after_y, is_noun, cfg.cap, False)
    values.append(t.path if (t := tok(p)) else None)
    values.append(t.path if (t := tok(p - 1)) else None)
    names = tuple(name for name, _ in cfg.slot_names())
    return FeatureBundle(names, tuple(values))


def training_instances(labeled: Iterable[LabeledSentence], cfg: FeatureConfig | None = None,
                       pronouns: frozenset[str] | None = None,
                       sentences: Sequence[Sentence] | None = None):
    """One (bundle, pronoun) per DP annotation. ``sentences`` may supply
    POS/path-annotated copies of the labelled sentences."""
    labeled = list(labeled)
    sents = list(sentences) if sentences is not None else [ls.sentence for ls in labeled]
    if len(sents) != len(labeled):
        raise DataError("annotated sentences do not match the label corpus")
    out = []
    k = 0
    for doc in split_documents(sents):
        for i in range(len(doc)):
            for dp in labeled[k].dps:
                out.append((extract_features(doc, i, dp.position, cfg, pronouns), dp.pronoun))
            k += 1
    return out


def dump_instances(instances) -> str:
    return "".join(f"{gold}\t{b.dumps()}\n" for b, gold in instances)


def parse_instances(text: str):
    out = []
    for line in text.splitlines():
        if line:
            gold, _, rest = line.partition("\t")
            out.append((FeatureBundle.loads(rest), gold))
    return out


@dataclass
class PredictorConfig:
    hidden: int = 200
    embedding_dim: int = 100
    epochs: int = 200
    lr: float = 0.1
    seed: int = 7
    features: FeatureConfig = field(default_factory=FeatureConfig)

    def validate(self):
        for name in ("hidden", "embedding_dim", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", field=name)
        if self.lr <= 0:
            raise ConfigError("lr must be > 0", field="lr")
        self.features.validate()


class MlpPredictor:
    def __init__(self, tables: dict[str, EmbeddingTable], slot_tables: Sequence[str],
                 slot_names: Sequence[str], params: dict[str, np.ndarray],
                 classes: Sequence[str], features: FeatureConfig):
        self.tables = tables
        self.slot_tables = list(slot_tables)
        self.slot_names = tuple(slot_names)
        self.classes = list(classes)
        self.features = features
        self.epoch_losses: list[float] = []
        self.params = {f"emb:{k}": t.vectors for k, t in tables.items()}
        self.params.update({k: np.asarray(v, dtype=np.float64) for k, v in params.items()})
        self._check()

    def _check(self):
        if len(self.classes) < 2:
            raise ShapeMismatch("a predictor needs at least two classes")
        width = sum(self.tables[t].dim for t in self.slot_tables)
        W1, b1, W2, b2, W3 = (self.params[k] for k in ("W1", "b1", "W2", "b2", "W3"))
        if W1.shape[1] != width or b1.shape != (W1.shape[0],):
            raise ShapeMismatch("first layer does not match the feature width")
        if W2.shape[1] != W1.shape[0] or b2.shape != (W2.shape[0],):
            raise ShapeMismatch("second layer does not chain with the first")
        if W3.shape != (len(self.classes), W2.shape[0]):
            raise ShapeMismatch("output layer does not match the class list")

    @classmethod
    def initialize(cls, instances, cfg: PredictorConfig, classes: Sequence[str],
                   rng: np.random.Generator) -> "MlpPredictor":
        slots = cfg.features.slot_names()
        vocab: dict[str, list[str]] = {t: [] for t in TABLES}
        seen: dict[str, set] = {t: set() for t in TABLES}
        for bundle, _ in instances:
            for (_, table), v in zip(slots, bundle.values):
                if v is not None and v not in seen[table]:
                    seen[table].add(v)
                    vocab[table].append(v)
        tables = {t: EmbeddingTable.build(sorted(vocab[t]), cfg.embedding_dim, rng) for t in TABLES}
        width = len(slots) * cfg.embedding_dim
        h = cfg.hidden
        params = {
            "W1": init_uniform(rng, (h, width)), "b1": init_uniform(rng, h),
            "W2": init_uniform(rng, (h, h)), "b2": init_uniform(rng, h),
            "W3": init_uniform(rng, (len(classes), h)),
        }
        return cls(tables, [t for _, t in slots], [n for n, _ in slots], params, classes, cfg.features)

    def _ids(self, bundle: FeatureBundle) -> list[int]:
        if len(bundle) != len(self.slot_tables):
            raise ShapeMismatch(f"bundle has {len(bundle)} slots, model expects {len(self.slot_tables)}")
        return [self.tables[t].id(v) for t, v in zip(self.slot_tables, bundle.values)]

    def _forward(self, ids):
        x = np.concatenate([self.tables[t].vectors[i] for t, i in zip(self.slot_tables, ids)])
        z1 = self.params["b1"] + self.params["W1"] @ x
        a1 = relu(z1)
        z2 = self.params["b2"] + self.params["W2"] @ a1
        a2 = relu(z2)
        logits = self.params["W3"] @ a2
        return x, z1, a1, z2, a2, logits

    def logits(self, bundle: FeatureBundle) -> np.ndarray:
        return self._forward(self._ids(bundle))[-1]

    def forward(self, bundle: FeatureBundle) -> np.ndarray:
        return softmax(self.logits(bundle))

    def loss_and_grads(self, bundle: FeatureBundle, target: int | str, dense: bool = True):
        """Cross-entropy and gradients. With ``dense=False`` the embedding
        gradients come back as (table, row, vector) triples."""
        if isinstance(target, str):
            target = self.classes.index(target)
        ids = self._ids(bundle)
        x, z1, a1, z2, a2, logits = self._forward(ids)
        y = softmax(logits)
        top = logits.max()
        loss = float(top + np.log(np.exp(logits - top).sum()) - logits[target])
        dz3 = y.copy()
        dz3[target] -= 1.0
        dW3 = np.outer(dz3, a2)
        dz2 = (self.params["W3"].T @ dz3) * relu_grad(z2)
        dW2 = np.outer(dz2, a1)
        dz1 = (self.params["W2"].T @ dz2) * relu_grad(z1)
        dW1 = np.outer(dz1, x)
        dx = self.params["W1"].T @ dz1
        grads = {"W1": dW1, "b1": dz1, "W2": dW2, "b2": dz2, "W3": dW3}
        rows = []
        off = 0
        for t, i in zip(self.slot_tables, ids):
            d = self.tables[t].dim
            rows.append((t, i, dx[off:off + d]))
            off += d
        if not dense:
            return loss, grads, rows
        for t in self.tables:
            grads[f"emb:{t}"] = np.zeros_like(self.tables[t].vectors)
        for t, i, g in rows:
            grads[f"emb:{t}"][i] += g
        return loss, grads

    def dumps(self) -> str:
        f = self.features
        meta = {"S": f.S, "X": f.X, "Y": f.Y, "cap": f.cap, "classes": len(self.classes)}
        vocabs = {"classes": self.classes,
                  "slots": [f"{n}:{t}" for n, t in zip(self.slot_names, self.slot_tables)]}
        vocabs.update({f"table:{k}": t.vocab for k, t in self.tables.items()})
        return dump_model(KIND, meta, vocabs, self.params)

    @classmethod
    def loads(cls, text: str) -> "MlpPredictor":
        mf = parse_model(text, KIND)
        try:
            features = FeatureConfig(*(int(mf.meta[k]) for k in ("S", "X", "Y", "cap")))
            tables = {k: EmbeddingTable(mf.vocabs[f"table:{k}"], mf.arrays[f"emb:{k}"]) for k in TABLES}
            slots = [s.rsplit(":", 1) for s in mf.vocabs["slots"]]
            params = {k: mf.arrays[k] for k in ("W1", "b1", "W2", "b2", "W3")}
            return cls(tables, [t for _, t in slots], [n for n, _ in slots], params,
                       mf.vocabs["classes"], features)
        except KeyError as exc:
            raise ModelFormatError(f"predictor file lacks {exc}") from None


def train_predictor(instances, config: PredictorConfig | None = None) -> MlpPredictor:
    cfg = config or PredictorConfig()
    cfg.validate()
    instances = list(instances)
    if not instances:
        raise EmptyCorpus("no DP instances to train the predictor on")
    classes = sorted({gold for _, gold in instances})
    if len(classes) < 2:
        raise SingleClassCorpus(f"only one pronoun class observed: {classes[0]}")
    rng = np.random.default_rng(cfg.seed)
    model = MlpPredictor.initialize(instances, cfg, classes, rng)
    cls_index = {c: i for i, c in enumerate(classes)}
    data = [(cls_index[g], b) for b, g in instances]
    for epoch in range(cfg.epochs):
        total = 0.0
        for k in rng.permutation(len(data)):
            target, bundle = data[k]
            loss, grads, rows = model.loss_and_grads(bundle, target, dense=False)
            sgd_step(model.params, grads, cfg.lr)
            for t, i, g in rows:
                model.tables[t].vectors[i] -= cfg.lr * g
            total += loss
        model.epoch_losses.append(total)
        log.info("predictor epoch %d loss %.6f", epoch + 1, total)
    return model


def nbest_from_probs(probs, classes: Sequence[str], n: int) -> list[tuple[str, float]]:
    if not 1 <= n <= len(classes):
        raise ValueError(f"N must lie in [1, {len(classes)}]")
    order = sorted(range(len(classes)), key=lambda i: (-probs[i], i))
    return [(classes[i], float(probs[i])) for i in order[:n]]


def predict_nbest(predictor: MlpPredictor, bundle: FeatureBundle, n: int) -> list[tuple[str, float]]:
    return nbest_from_probs(predictor.forward(bundle), predictor.classes, n)
