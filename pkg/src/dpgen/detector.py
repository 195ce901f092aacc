"""Elman RNN labelling every insertion slot of a sentence as NA or DP.

Slot ``t`` is "before token t"; slot ``len(sentence)`` is the sentence-final
sentinel. The input at slot ``t`` is the concatenated embeddings of tokens
``t-k .. t+k`` (PAD outside the sentence), the hidden layer is a sigmoid
recurrence without bias, and the output is a bias-free softmax over
{NA, DP}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import DP, LabeledSentence, Sentence
from .errors import ConfigError, EmptyCorpus, ModelFormatError, ShapeMismatch
from .neural import (
    PAD,
    EmbeddingTable,
    dump_model,
    init_uniform,
    parse_model,
    sgd_step,
    sigmoid,
    softmax,
)

log = logging.getLogger(__name__)

LABELS = ("NA", "DP")
KIND = "rnn-detector"


@dataclass
class DetectorConfig:
    window: int = 5
    hidden: int = 200
    epochs: int = 10
    embedding_dim: int = 200
    lr: float = 0.1
    seed: int = 7
    threshold: float = 0.5

    def validate(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigError("window must be a positive odd number", field="window")
        for name in ("hidden", "epochs", "embedding_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", field=name)
        if self.lr <= 0:
            raise ConfigError("lr must be > 0", field="lr")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)", field="threshold")


class RnnDetector:
    def __init__(self, embeddings: EmbeddingTable, U, V, W, k: int):
        self.emb = embeddings
        if PAD not in self.emb.index:
            raise ModelFormatError("detector embeddings lack the PAD entry")
        self.k = k
        self.epoch_losses: list[float] = []
        self.params = {"E": self.emb.vectors, "U": np.asarray(U, dtype=np.float64),
                       "V": np.asarray(V, dtype=np.float64), "W": np.asarray(W, dtype=np.float64)}
        self._check()

    def _check(self):
        d, h = self.emb.dim, self.hidden
        if self.U.shape != (h, (2 * self.k + 1) * d):
            raise ShapeMismatch(f"U has shape {self.U.shape}, expected {(h, (2 * self.k + 1) * d)}")
        if self.V.shape != (h, h):
            raise ShapeMismatch("V must be hidden x hidden")
        if self.W.shape != (len(LABELS), h):
            raise ShapeMismatch("W must be 2 x hidden")

    U = property(lambda self: self.params["U"])
    V = property(lambda self: self.params["V"])
    W = property(lambda self: self.params["W"])

    @property
    def hidden(self) -> int:
        return self.params["U"].shape[0]

    @classmethod
    def initialize(cls, vocab: Iterable[str], cfg: DetectorConfig,
                   rng: np.random.Generator | None = None,
                   pretrained: EmbeddingTable | None = None) -> "RnnDetector":
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        k = cfg.window // 2
        emb = EmbeddingTable.build(vocab, cfg.embedding_dim, rng, extra=(PAD,))
        if pretrained is not None:
            if pretrained.dim != cfg.embedding_dim:
                raise ShapeMismatch("pretrained embedding dim differs from embedding_dim")
            for w, i in emb.index.items():
                if w in pretrained.index:
                    emb.vectors[i] = pretrained.lookup(w)
        d, h = cfg.embedding_dim, cfg.hidden
        U = init_uniform(rng, (h, (2 * k + 1) * d))
        V = init_uniform(rng, (h, h))
        W = init_uniform(rng, (len(LABELS), h))
        return cls(emb, U, V, W, k)

    # ------------------------------------------------------------ forward

    def window_ids(self, words: Sequence[str]) -> np.ndarray:
        n, k = len(words), self.k
        pad = self.emb.index[PAD]
        ids = [self.emb.id(w) for w in words]
        return np.array([[ids[j] if 0 <= j < n else pad for j in range(t - k, t + k + 1)]
                         for t in range(n + 1)], dtype=np.int64)

    def window_embed(self, sentence, t: int) -> np.ndarray:
        words = _words(sentence)
        return self.emb.vectors[self.window_ids(words)[t]].reshape(-1)

    def _forward(self, words):
        ids = self.window_ids(words)
        X = self.emb.vectors[ids].reshape(len(ids), -1)
        A = X @ self.U.T
        H = np.empty_like(A)
        h = np.zeros(self.hidden)
        for t in range(len(A)):
            h = sigmoid(A[t] + self.V @ h)
            H[t] = h
        Y = softmax(H @ self.W.T)
        return ids, X, H, Y

    def forward(self, sentence) -> np.ndarray:
        """(|tokens| + 1) x 2 array of [P(NA), P(DP)]."""
        return self._forward(_words(sentence))[3]

    def loss_and_grads(self, sentence, labels: Sequence[int]):
        ids, X, H, Y = self._forward(_words(sentence))
        labels = np.asarray(labels)
        T = len(ids)
        loss = -float(np.sum(np.log(Y[np.arange(T), labels])))
        dZ = Y.copy()
        dZ[np.arange(T), labels] -= 1.0
        dW = dZ.T @ H
        dH = dZ @ self.W
        dA = np.empty_like(H)
        carry = np.zeros(self.hidden)
        for t in range(T - 1, -1, -1):
            dh = dH[t] + carry
            dA[t] = dh * H[t] * (1.0 - H[t])
            carry = self.V.T @ dA[t]
        Hprev = np.vstack([np.zeros((1, self.hidden)), H[:-1]])
        dU = dA.T @ X
        dV = dA.T @ Hprev
        dX = (dA @ self.U).reshape(ids.shape + (self.emb.dim,))
        dE = np.zeros_like(self.emb.vectors)
        np.add.at(dE, ids, dX)
        return loss, {"E": dE, "U": dU, "V": dV, "W": dW}

    # ------------------------------------------------------------ persistence

    def dumps(self) -> str:
        return dump_model(KIND, {"window_half": self.k, "hidden": self.hidden, "dim": self.emb.dim},
                          {"words": self.emb.vocab}, {k: v for k, v in self.params.items()})

    @classmethod
    def loads(cls, text: str) -> "RnnDetector":
        mf = parse_model(text, KIND)
        try:
            emb = EmbeddingTable(mf.vocabs["words"], mf.arrays["E"])
            return cls(emb, mf.arrays["U"], mf.arrays["V"], mf.arrays["W"], int(mf.meta["window_half"]))
        except KeyError as exc:
            raise ModelFormatError(f"detector file lacks {exc}") from None


def _words(sentence):
    return sentence.words if isinstance(sentence, Sentence) else list(sentence)


def slot_labels(ls: LabeledSentence) -> list[int]:
    return [1 if lab == DP else 0 for lab in ls.labels]


def train_detector(corpus: Iterable[LabeledSentence], config: DetectorConfig | None = None,
                   pretrained: EmbeddingTable | None = None) -> RnnDetector:
    """Per-sentence SGD with full-sentence BPTT; returns the last-epoch model."""
    cfg = config or DetectorConfig()
    cfg.validate()
    data = [(ls.sentence.words, slot_labels(ls)) for ls in corpus]
    if not data:
        raise EmptyCorpus("no labelled sentences to train the detector on")
    rng = np.random.default_rng(cfg.seed)
    vocab = sorted({w for words, _ in data for w in words})
    model = RnnDetector.initialize(vocab, cfg, rng, pretrained)
    for epoch in range(cfg.epochs):
        total = 0.0
        for i in rng.permutation(len(data)):
            words, labels = data[i]
            loss, grads = model.loss_and_grads(words, labels)
            sgd_step(model.params, grads, cfg.lr)
            total += loss
        model.epoch_losses.append(total)
        log.info("detector epoch %d loss %.6f", epoch + 1, total)
    return model


def detect(detector: RnnDetector, sentence, threshold: float = 0.5) -> list[int]:
    probs = detector.forward(sentence)
    return [t for t in range(len(probs)) if probs[t, 1] >= threshold]
