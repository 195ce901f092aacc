"""Pipeline-wide configuration and the synthetic end-to-end run.

:class:`PipelineConfig` flattens every module config into one namespace so a
single key=value file can drive all subcommands.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from .annotator import annotate_corpus
from .corpus import default_inventory, format_labels, read_lines
from .detector import DetectorConfig, detect, train_detector
from .errors import ConfigError
from .evaluator import eval_detection, eval_prediction
from .generator import build_cn, emit_cns, generate_corpus
from .lm import LMConfig, train_lm
from .predictor import FeatureConfig, PredictorConfig, train_predictor, training_instances
from .synth import SynthConfig, synth_corpus

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    lm_order: int = 5
    lm_discount: float = 0.75
    lm_min_count: int = 2
    align_iterations: int = 5
    det_window: int = 5
    det_hidden: int = 200
    det_epochs: int = 10
    det_embedding_dim: int = 200
    det_lr: float = 0.1
    threshold: float = 0.5
    pred_hidden: int = 200
    pred_embedding_dim: int = 100
    pred_epochs: int = 200
    pred_lr: float = 0.1
    S: int = 3
    X: int = 2
    Y: int = 2
    cap: int = 4
    nbest: int = 6
    seed: int = 7
    weighting: str = "uniform"

    def lm(self) -> LMConfig:
        return LMConfig(self.lm_order, self.lm_discount, self.lm_min_count)

    def detector(self) -> DetectorConfig:
        return DetectorConfig(self.det_window, self.det_hidden, self.det_epochs,
                              self.det_embedding_dim, self.det_lr, self.seed, self.threshold)

    def features(self) -> FeatureConfig:
        return FeatureConfig(self.S, self.X, self.Y, self.cap)

    def predictor(self) -> PredictorConfig:
        return PredictorConfig(self.pred_hidden, self.pred_embedding_dim, self.pred_epochs,
                               self.pred_lr, self.seed, self.features())

    def validate(self) -> "PipelineConfig":
        own = {f.name for f in fields(self)}
        for prefix, cfg in [("lm_", self.lm()), ("det_", self.detector()), ("pred_", self.predictor())]:
            try:
                cfg.validate()
            except ConfigError as exc:
                # report the name the user wrote, e.g. det_hidden rather than hidden
                name = exc.context.get("field", "")
                if name not in own and prefix + name in own:
                    name = prefix + name
                raise ConfigError(str(exc), field=name) from None
        if self.align_iterations < 1:
            raise ConfigError("align_iterations must be >= 1", field="align_iterations")
        if self.nbest < 1:
            raise ConfigError("nbest must be >= 1", field="nbest")
        if self.weighting not in ("uniform", "prob"):
            raise ConfigError("weighting must be 'uniform' or 'prob'", field="weighting")
        return self

    @classmethod
    def from_dict(cls, values: dict[str, object]) -> "PipelineConfig":
        """Build from strings or typed values; unknown keys are rejected."""
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}", field=key)
            kw[key] = coerce(key, raw, types[key])
        return cls(**kw)


def coerce(key: str, raw, type_name):
    conv = {"int": int, "float": float, "str": str}[type_name if isinstance(type_name, str) else type_name.__name__]
    if not isinstance(raw, str):
        return raw
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {conv.__name__}", field=key) from None


def read_config_file(path) -> dict[str, str]:
    """key=value lines; ``#`` starts a comment, blank lines are skipped.
    Dashes in keys are read as underscores."""
    out = {}
    for n, line in enumerate(read_lines(path), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {line!r}", line=n)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


# ---------------------------------------------------------------- synthetic run


@dataclass
class SyntheticResult:
    recovery: float
    planted: int
    recovered: int
    extra: int
    detection: object
    prediction: object
    seconds: dict[str, float] = field(default_factory=dict)


def _planted(labeled):
    return {(k, d.position, d.pronoun) for k, ls in enumerate(labeled) for d in ls.dps}


def run_synthetic(synth: SynthConfig, cfg: PipelineConfig, held_out: int = 500,
                  out_dir: str | Path | None = None) -> SyntheticResult:
    """Synthesize, annotate with gold alignments, train both networks on the
    annotated non-held-out part and score generation on the held-out part.

    The LM is trained on the source text with every pronoun overt. With
    ``out_dir`` all artifacts are written there.
    """
    cfg.validate()
    secs = {}
    t0 = time.perf_counter()
    corpus = synth_corpus(synth)
    inv = default_inventory()
    lm_cfg = cfg.lm()
    lm = train_lm(corpus.full, lm_cfg.order, lm_cfg.discount, lm_cfg.min_count)
    labeled, inserted = annotate_corpus(corpus.pairs, inv, lm)
    secs["annotate"] = time.perf_counter() - t0

    gold = _planted(corpus.gold)
    found = _planted(labeled)
    hit = len(gold & found)

    split = len(corpus.source) - held_out
    if split < 1 or held_out < 1:
        raise ConfigError("held-out split must leave training data", field="held_out")

    t0 = time.perf_counter()
    det = train_detector(labeled[:split], cfg.detector())
    secs["detector"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    # annotated labels on the POS/path-bearing source
    pred = train_predictor(training_instances(labeled[:split], cfg.features(),
                                              inv.chinese_pronouns, corpus.source[:split]),
                           cfg.predictor())
    secs["predictor"] = time.perf_counter() - t0

    held = corpus.source[split:]
    held_gold = corpus.gold[split:]
    t0 = time.perf_counter()
    det_pred = [detect(det, s, cfg.threshold) for s in held]
    results = generate_corpus(det, pred, held, cfg.nbest, threshold=cfg.threshold,
                              pronouns=inv.chinese_pronouns)
    secs["generate"] = time.perf_counter() - t0
    det_prf = eval_detection(det_pred, [g.slots for g in held_gold])
    prd_prf = eval_prediction([{(s, nb[0][0]) for s, nb in zip(r.slots, r.nbest)} for r in results],
                              [g.slot_pronouns() for g in held_gold])

    if out_dir is not None:
        from .corpus import atomic_write, format_sentences
        out = Path(out_dir)
        corpus.write(out)
        atomic_write(out / "lm.5g", lm.dumps())
        atomic_write(out / "auto.labels.tsv", format_labels(labeled))
        atomic_write(out / "auto.dp.zh", format_sentences(inserted))
        atomic_write(out / "detector.model", det.dumps())
        atomic_write(out / "predictor.model", pred.dumps())
        n = min(cfg.nbest, len(pred.classes))
        cns = [build_cn(r.sentence, r.slots, r.nbest, n, cfg.weighting) for r in results]
        atomic_write(out / "held.cn", emit_cns(cns))
    return SyntheticResult(hit / len(gold) if gold else 1.0, len(gold), hit, len(found - gold),
                           det_prf, prd_prf, secs)
