"""Numeric pieces shared by the detector and the predictor."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ModelFormatError, NonFiniteGradient, ShapeMismatch

UNK = "<unk>"
NONE = "<none>"
PAD = "<pad>"

INIT_SCALE = 0.1
FORMAT_VERSION = 1


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - np.max(z, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def relu(z):
    return np.maximum(np.asarray(z, dtype=np.float64), 0.0)


def relu_grad(z):
    """Subgradient with the kink at 0 mapped to 0."""
    return (np.asarray(z) > 0).astype(np.float64)


def cross_entropy(probs, target: int) -> float:
    return -float(np.log(probs[target]))


def init_uniform(rng: np.random.Generator, shape, scale: float = INIT_SCALE):
    return rng.uniform(-scale, scale, size=shape)


def sgd_step(params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray], lr: float):
    """In-place ``p -= lr * g`` for every gradient given; returns ``params``."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    for name, g in grads.items():
        p = params[name]
        if p.shape != np.shape(g):
            raise ShapeMismatch(f"gradient for {name} has shape {np.shape(g)}, parameter {p.shape}")
        p -= lr * g
    return params


def grad_check(loss_and_grads: Callable[[], tuple[float, Mapping[str, np.ndarray]]],
               params: dict[str, np.ndarray], epsilon: float = 1e-5,
               max_coords: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grads`` must read ``params`` by reference. Relative error is
    ``|a - n| / max(|a| + |n|, 1e-6)`` so coordinates with a vanishing
    gradient are judged on absolute error. With ``max_coords`` set, that many
    coordinates per array are sampled with ``rng``; otherwise all are checked.
    """
    _, grads = loss_and_grads()
    grads = {k: np.array(v, dtype=np.float64) for k, v in grads.items()}
    worst = 0.0
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"analytic gradient of {name} is not finite")
        flat = p.reshape(-1)
        n = flat.size
        idx = np.arange(n)
        if max_coords is not None and n > max_coords:
            idx = (rng or np.random.default_rng(0)).choice(n, size=max_coords, replace=False)
        gflat = g.reshape(-1)
        for i in idx:
            old = flat[i]
            flat[i] = old + epsilon
            up, _ = loss_and_grads()
            flat[i] = old - epsilon
            down, _ = loss_and_grads()
            flat[i] = old
            num = (up - down) / (2 * epsilon)
            if not np.isfinite(num):
                raise NonFiniteGradient(f"numeric gradient of {name}[{i}] is not finite")
            a = gflat[i]
            worst = max(worst, abs(a - num) / max(abs(a) + abs(num), 1e-6))
    return worst


class EmbeddingTable:
    """Token -> vector lookup; UNK and NONE are always present."""

    def __init__(self, vocab: Sequence[str], vectors: np.ndarray):
        self.vocab = list(vocab)
        self.index = {w: i for i, w in enumerate(self.vocab)}
        if len(self.index) != len(self.vocab):
            raise ModelFormatError("duplicate embedding vocabulary entries")
        for special in (UNK, NONE):
            if special not in self.index:
                raise ModelFormatError(f"embedding vocabulary lacks {special}")
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(self.vocab):
            raise ShapeMismatch("embedding matrix does not match vocabulary")
        self.vectors = vectors

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def build(cls, words: Iterable[str], dim: int, rng: np.random.Generator,
              extra: Sequence[str] = ()) -> "EmbeddingTable":
        vocab = [UNK, NONE, *extra]
        seen = set(vocab)
        for w in words:
            if w not in seen:
                seen.add(w)
                vocab.append(w)
        return cls(vocab, init_uniform(rng, (len(vocab), dim)))

    def id(self, w: str | None) -> int:
        if w is None:
            return self.index[NONE]
        return self.index.get(w, self.index[UNK])

    def lookup(self, w: str | None) -> np.ndarray:
        return self.vectors[self.id(w)]

    def dumps(self) -> str:
        lines = [f"{len(self.vocab)} {self.dim}"]
        lines.extend(w + " " + _row(v) for w, v in zip(self.vocab, self.vectors))
        return "".join(line + "\n" for line in lines)

    @classmethod
    def loads(cls, text: str) -> "EmbeddingTable":
        lines = [ln for ln in text.split("\n") if ln]
        try:
            size, dim = map(int, lines[0].split())
        except (IndexError, ValueError):
            raise ModelFormatError("embedding header must be 'vocab_size dim'") from None
        vocab, rows = [], []
        for ln in lines[1:]:
            parts = ln.split(" ")
            if len(parts) != dim + 1:
                raise ModelFormatError(f"embedding row for {parts[0]!r} has wrong width")
            vocab.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
        if len(vocab) != size:
            raise ModelFormatError("embedding row count disagrees with header")
        for special in (UNK, NONE):
            if special not in vocab:
                vocab.append(special)
                rows.append([0.0] * dim)
        return cls(vocab, np.array(rows, dtype=np.float64).reshape(len(vocab), dim))


def _row(values) -> str:
    return " ".join(f"{x:.9g}" for x in values)


@dataclass
class ModelFile:
    kind: str
    meta: dict[str, str]
    vocabs: dict[str, list[str]]
    arrays: dict[str, np.ndarray]


def dump_model(kind: str, meta: Mapping[str, object], vocabs: Mapping[str, Sequence[str]],
               arrays: Mapping[str, np.ndarray]) -> str:
    lines = [f"DPGEN {kind} {FORMAT_VERSION}"]
    for k, v in meta.items():
        lines.append(f"meta {k} {v}")
    for name, vocab in vocabs.items():
        lines.append(f"vocab {name} {len(vocab)}")
        lines.extend(vocab)
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        lines.append(f"array {name} " + " ".join(str(d) for d in arr.shape))
        if arr.ndim == 1:
            lines.append(_row(arr))
        else:
            lines.extend(_row(r) for r in arr.reshape(arr.shape[0], -1))
    return "".join(line + "\n" for line in lines)


def parse_model(text: str, kind: str | None = None) -> ModelFile:
    lines = text.split("\n")
    head = lines[0].split(" ")
    if len(head) != 3 or head[0] != "DPGEN":
        raise ModelFormatError("not a dpgen model file")
    if kind is not None and head[1] != kind:
        raise ModelFormatError(f"expected a {kind} model, found {head[1]}")
    if int(head[2]) != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {head[2]}")
    meta: dict[str, str] = {}
    vocabs: dict[str, list[str]] = {}
    arrays: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        line = lines[i]
        i += 1
        if not line:
            continue
        tag, name, rest = (line.split(" ", 2) + [""])[:3]
        if tag == "meta":
            meta[name] = rest
        elif tag == "vocab":
            n = int(rest)
            vocabs[name] = lines[i:i + n]
            i += n
        elif tag == "array":
            shape = tuple(int(d) for d in rest.split(" "))
            nrows = 1 if len(shape) == 1 else shape[0]
            rows = lines[i:i + nrows]
            i += nrows
            try:
                data = [float(x) for r in rows for x in r.split(" ") if x != ""]
                arrays[name] = np.array(data, dtype=np.float64).reshape(shape)
            except ValueError:
                raise ModelFormatError(f"array {name} does not match its shape") from None
        else:
            raise ModelFormatError(f"unknown record {tag!r}", line=i)
    return ModelFile(head[1], meta, vocabs, arrays)
