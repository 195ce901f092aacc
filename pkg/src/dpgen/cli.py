"""Command-line front end.

Every subcommand accepts ``--config FILE`` with key=value lines; keys are
pipeline settings (see :class:`~dpgen.pipeline.PipelineConfig`) or the
subcommand's own path options. Flags given on the command line win.

Exit status: 0 ok, 2 config, 3 I/O, 4 model, 5 data. Failures print one
line on stderr: ``error: kind=<Type> [key=value ...] message='...'``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import corpus as C
from .aligner import train_model1, viterbi_align
from .annotator import annotate_corpus
from .detector import RnnDetector, train_detector
from .errors import ConfigError, DataError, DpgenError, FileAccessError
from .evaluator import evaluate_labels, format_report
from .generator import build_cn, emit_cns, format_nbest, generate_corpus, parse_nbest
from .lm import NGramLM, train_lm
from .neural import EmbeddingTable
from .pipeline import PipelineConfig, coerce, read_config_file
from .predictor import MlpPredictor, train_predictor, training_instances
from .synth import SynthConfig, synth_corpus

log = logging.getLogger("dpgen")

PIPELINE_FIELDS = {f.name: f for f in fields(PipelineConfig)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(ConfigError(message).one_line(), file=sys.stderr)
        raise SystemExit(2)


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_settings(p, names):
    for name in names:
        f = PIPELINE_FIELDS[name]
        p.add_argument(_flag(name), dest=name, default=None, metavar=f.type.upper(),
                       help=f"default {f.default}")


def _add_paths(p, spec):
    for name, required, help_ in spec:
        p.add_argument(_flag(name), dest=name, default=None, help=help_ + ("" if required else " (optional)"))
    p.set_defaults(_paths=[(n, r) for n, r, _ in spec])


LM_KEYS = ["lm_order", "lm_discount", "lm_min_count"]
DET_KEYS = ["det_window", "det_hidden", "det_epochs", "det_embedding_dim", "det_lr", "seed"]
FEAT_KEYS = ["S", "X", "Y", "cap"]
PRED_KEYS = ["pred_hidden", "pred_embedding_dim", "pred_epochs", "pred_lr", "seed"] + FEAT_KEYS


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dpgen", description="Dropped-pronoun annotation, generation and evaluation.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="key=value settings file")
        return p

    p = cmd("synth", "build the synthetic corpus with planted drops")
    p.add_argument("--sentences", type=int, default=None)
    p.add_argument("--drop-rate", dest="drop_rate", type=float, default=None)
    p.add_argument("--doc-len", dest="doc_len", type=int, default=None)
    _add_settings(p, ["seed"])
    _add_paths(p, [("out", True, "output directory")])

    p = cmd("align", "IBM Model 1 alignment in Pharaoh format")
    _add_settings(p, ["align_iterations"])
    _add_paths(p, [("src", True, "source text"), ("tgt", True, "target text"),
                   ("out", True, "alignment output")])

    p = cmd("train-lm", "train the n-gram LM")
    _add_settings(p, LM_KEYS)
    _add_paths(p, [("corpus", True, "tokenized training text"), ("out", True, "LM output")])

    p = cmd("annotate", "project unaligned target pronouns onto the source")
    _add_paths(p, [("src", True, "source text"), ("tgt", True, "target text"),
                   ("align", True, "Pharaoh alignment"), ("lm", True, "LM file"),
                   ("out", True, "label corpus output"),
                   ("inserted", False, "DP-inserted source output, default <out>.dp.zh")])

    p = cmd("train-detector", "train the RNN DP detector")
    _add_settings(p, DET_KEYS)
    _add_paths(p, [("labels", True, "label corpus"), ("out", True, "model output"),
                   ("pretrained", False, "embedding file")])

    p = cmd("train-predictor", "train the MLP DP predictor")
    _add_settings(p, PRED_KEYS)
    _add_paths(p, [("labels", True, "label corpus"), ("out", True, "model output"),
                   ("sidecar", False, "POS/path sidecar for the labelled sentences")])

    p = cmd("generate", "detect and predict DPs, write confusion networks")
    _add_settings(p, ["nbest", "threshold", "weighting"])
    _add_paths(p, [("detector", True, "detector model"), ("predictor", True, "predictor model"),
                   ("in", True, "input text"), ("out", False, "CN output, default <in>.cn"),
                   ("sidecar", False, "POS/path sidecar for the input"),
                   ("nbest_out", False, "N-best TSV output"),
                   ("labels_out", False, "1-best label corpus output")])

    p = cmd("emit-cn", "render confusion networks from an N-best TSV")
    _add_settings(p, ["nbest", "weighting"])
    _add_paths(p, [("in", True, "input text"), ("nbest_file", True, "N-best TSV"),
                   ("out", True, "CN output")])

    p = cmd("evaluate", "score predicted labels against gold labels")
    _add_paths(p, [("pred", True, "predicted label corpus"), ("gold", True, "gold label corpus"),
                   ("out", False, "report output, default stdout")])
    return ap


# ---------------------------------------------------------------- config merge


def resolve(args: argparse.Namespace) -> tuple[PipelineConfig, dict]:
    """Merge defaults, the config file and flags (in increasing priority);
    returns the validated pipeline config and the remaining options."""
    ns = {k: v for k, v in vars(args).items() if k not in ("config", "command", "verbose", "_paths")}
    from_file = read_config_file(args.config) if args.config else {}
    for key, value in from_file.items():
        # one settings file may serve every subcommand
        if key not in ns and key not in PIPELINE_FIELDS:
            raise ConfigError(f"key {key!r} does not apply to {args.command}", field=key)
        if ns.get(key) is None:
            ns[key] = value
    settings = {k: v for k, v in ns.items() if k in PIPELINE_FIELDS and v is not None}
    cfg = PipelineConfig.from_dict(settings).validate()
    opts = {k: v for k, v in ns.items() if k not in PIPELINE_FIELDS}
    for name, required in getattr(args, "_paths", []):
        if required and opts.get(name) is None:
            raise ConfigError(f"{_flag(name)} is required", field=name)
    return cfg, opts


# ---------------------------------------------------------------- subcommands


def _synth(cfg, o):
    sc = SynthConfig(
        sentences=coerce("sentences", o["sentences"], "int") if o["sentences"] is not None else 5000,
        seed=cfg.seed,
        drop_rate=coerce("drop_rate", o["drop_rate"], "float") if o["drop_rate"] is not None else 0.3,
        doc_len=coerce("doc_len", o["doc_len"], "int") if o["doc_len"] is not None else 5,
    )
    sc.validate()
    written = synth_corpus(sc).write(o["out"])
    log.info("wrote %s", ", ".join(str(p) for p in written.values()))


def _align(cfg, o):
    src = C.read_lines(o["src"])
    pairs = C.parse_parallel(src, C.read_lines(o["tgt"]), [""] * len(src))
    table = train_model1([(p.source.words, p.target.words) for p in pairs], cfg.align_iterations)
    aligned = [C.AlignedSentencePair(p.source, p.target, viterbi_align(table, p)) for p in pairs]
    C.atomic_write(o["out"], C.format_parallel(aligned)[2])


def _train_lm(cfg, o):
    lc = cfg.lm()
    lm = train_lm(C.read_sentences(o["corpus"]), lc.order, lc.discount, lc.min_count)
    C.atomic_write(o["out"], lm.dumps())


def _load(cls, path):
    text = Path(path).read_text(encoding="utf-8")
    return cls.loads(text)


def _annotate(cfg, o):
    pairs = C.load_parallel(o["src"], o["tgt"], o["align"])
    lm = _load(NGramLM, o["lm"])
    labeled, inserted = annotate_corpus(pairs, C.default_inventory(), lm)
    C.atomic_write(o["out"], C.format_labels(labeled))
    C.atomic_write(o["inserted"] or f"{o['out']}.dp.zh", C.format_sentences(inserted))
    log.info("annotated %d DPs in %d sentences", sum(len(ls.dps) for ls in labeled), len(labeled))


def _train_detector(cfg, o):
    labeled = C.read_labels(o["labels"])
    pre = _load(EmbeddingTable, o["pretrained"]) if o["pretrained"] else None
    det = train_detector(labeled, cfg.detector(), pre)
    C.atomic_write(o["out"], det.dumps())


def _with_sidecar(sentences, path):
    return C.apply_sidecar(sentences, C.read_sidecar(path)) if path else sentences


def _train_predictor(cfg, o):
    labeled = C.read_labels(o["labels"])
    sents = _with_sidecar([ls.sentence for ls in labeled], o["sidecar"])
    inv = C.default_inventory()
    inst = training_instances(labeled, cfg.features(), inv.chinese_pronouns, sents)
    pred = train_predictor(inst, cfg.predictor())
    C.atomic_write(o["out"], pred.dumps())


def _generate(cfg, o):
    det = _load(RnnDetector, o["detector"])
    pred = _load(MlpPredictor, o["predictor"])
    sents = _with_sidecar(C.read_sentences(o["in"]), o["sidecar"])
    results = generate_corpus(det, pred, sents, cfg.nbest, threshold=cfg.threshold,
                              pronouns=C.default_inventory().chinese_pronouns)
    n = min(cfg.nbest, len(pred.classes))
    cns = [build_cn(r.sentence, r.slots, r.nbest, n, cfg.weighting) for r in results]
    C.atomic_write(o["out"] or f"{o['in']}.cn", emit_cns(cns))
    if o["nbest_out"]:
        C.atomic_write(o["nbest_out"], format_nbest(results))
    if o["labels_out"]:
        labeled = [C.LabeledSentence.from_dps(r.sentence, [C.DPAnnotation(s, nb[0][0])
                                                           for s, nb in zip(r.slots, r.nbest)])
                   for r in results]
        C.atomic_write(o["labels_out"], C.format_labels(labeled))


def _emit_cn(cfg, o):
    sents = C.read_sentences(o["in"])
    table = parse_nbest(Path(o["nbest_file"]).read_text(encoding="utf-8"), len(sents))
    n = max([cfg.nbest] + [len(nb) for _, lists in table for nb in lists])
    cns = []
    for s, (slots, lists) in zip(sents, table):
        if any(p > len(s) for p in slots):
            raise DataError("N-best slot beyond sentence end", slot=max(slots), length=len(s))
        cns.append(build_cn(s, slots, lists, n, cfg.weighting))
    C.atomic_write(o["out"], emit_cns(cns))


def _evaluate(cfg, o):
    det, prd, agree = evaluate_labels(C.read_labels(o["pred"]), C.read_labels(o["gold"]))
    report = format_report({"detection": det, "prediction": prd}, agree)
    if o["out"]:
        C.atomic_write(o["out"], report)
    else:
        sys.stdout.write(report)


COMMANDS = {
    "synth": _synth, "align": _align, "train-lm": _train_lm, "annotate": _annotate,
    "train-detector": _train_detector, "train-predictor": _train_predictor,
    "generate": _generate, "emit-cn": _emit_cn, "evaluate": _evaluate,
}


def run(command: str, cfg: PipelineConfig, opts: dict) -> int:
    COMMANDS[command](cfg, opts)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg, opts = resolve(args)
        return run(args.command, cfg, opts)
    except DpgenError as exc:
        print(exc.one_line(), file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # malformed numbers and the like inside input files
        print(DataError(str(exc)).one_line(), file=sys.stderr)
        return DataError.exit_code
    except OSError as exc:
        err = FileAccessError(exc.strerror or str(exc), path=exc.filename)
        print(err.one_line(), file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
