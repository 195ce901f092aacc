from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpgen.corpus import Sentence
from dpgen.detector import DetectorConfig, RnnDetector
from dpgen.generator import (
    EPS,
    build_cn,
    emit_cn,
    emit_cns,
    format_nbest,
    format_weight,
    generate,
    insert_1best,
    parse_cns,
    parse_nbest,
    to_plf,
)
from dpgen.predictor import PredictorConfig, extract_features, train_predictor

PRON = ["我", "你", "他", "她", "它", "我们"]


def nb(k, n=None):
    return [(p, 1.0 / (i + 2)) for i, p in enumerate(PRON[:k])]


def test_uniform_columns():
    cn = build_cn(["想", "去"], [0], [nb(4)], 4)
    dp = cn.columns[0]
    assert dp.is_dp and [w for _, w in dp.arcs] == [Fraction(1, 4)] * 4
    assert emit_cn(cn).split("\n")[0] == "我|0.25 你|0.25 他|0.25 她|0.25"
    one = build_cn(["想"], [0], [nb(1)], 1)
    assert one.columns[0].arcs == (("我", Fraction(1)),)


def test_short_list_gets_epsilon():
    cn = build_cn(["想"], [1], [nb(5)], 6)
    col = cn.columns[1]
    assert col.arcs[-1] == (EPS, Fraction(1, 6)) and col.total() == 1


def test_emit_examples():
    assert emit_cn(build_cn(["好"], [], [], 3)) == "好|1\n\n"
    assert emit_cn(build_cn(["好"], [0], [nb(2)], 2)).startswith("我|0.5 你|0.5\n")


def test_weight_format():
    assert [format_weight(Fraction(1, n)) for n in (1, 2, 4, 5, 8, 16)] == \
        ["1", "0.5", "0.25", "0.2", "0.125", "0.0625"]
    assert format_weight(Fraction(1, 3)) == "0.333333333333"
    assert format_weight(Fraction(1, 6)) == "0.166666666667"
    assert format_weight(Fraction(5, 6)) == "0.833333333333"


def test_insert_1best():
    s = Sentence.from_words("说 过 想".split())
    assert insert_1best(s, [], []) == s.words
    assert insert_1best(s, [0, 2], [nb(2), [("你", 0.9)]]) == ["我", "说", "过", "你", "想"]


def test_plf_rendering():
    plf = to_plf(build_cn(["想"], [0], [nb(2)], 2))
    assert plf == "((('我',0.5,1),('你',0.5,1),),(('想',1.0,1),),)"


words = st.lists(st.sampled_from(["想", "去", "了", "饭", "*x*"]), min_size=1, max_size=6)


@st.composite
def networks(draw):
    w = draw(words)
    n = draw(st.integers(1, 6))
    slots = sorted(draw(st.sets(st.integers(0, len(w)), max_size=3)))
    lists = [nb(draw(st.integers(1, n))) for _ in slots]
    weighting = draw(st.sampled_from(["uniform", "prob"]))
    return w, slots, lists, n, weighting


@given(networks())
def test_cn_invariants_and_round_trip(case):
    w, slots, lists, n, weighting = case
    cn = build_cn(w, slots, lists, n, weighting)
    assert len(cn.columns) == len(w) + len(slots)
    for col in cn.columns:
        if weighting == "uniform" or not col.is_dp:
            assert col.total() == 1
        else:
            assert abs(float(col.total()) - 1.0) < 1e-12
    assert cn.tokens() == w
    text = emit_cn(cn)
    assert emit_cns(parse_cns(text)) == text


def test_nbest_dump_round_trip():
    from dpgen.generator import SentenceResult
    rs = [SentenceResult(Sentence.from_words(["想"]), (0,), (tuple(nb(3)),)),
          SentenceResult(Sentence.from_words(["去", "了"]), (), ())]
    text = format_nbest(rs)
    table = parse_nbest(text, 2)
    assert table[1] == ([], [])
    assert table[0][0] == [0] and [t for t, _ in table[0][1][0]] == PRON[:3]


def test_generate_with_clamped_n():
    rng = np.random.default_rng(0)
    det = RnnDetector.initialize(["想", "去"], DetectorConfig(hidden=3, embedding_dim=2), rng)
    det.params["W"][:] = [[0.0] * 3, [5.0] * 3]  # every slot is a DP
    inst = [(extract_features([Sentence.from_words(["想"])], 0, 0), p) for p in ("我", "你")]
    pred = train_predictor(inst, PredictorConfig(hidden=4, embedding_dim=2, epochs=1))
    doc = [Sentence.from_words(["想", "去"])]
    (res,) = generate(det, pred, doc, 6)
    assert res.slots == (0, 1, 2)
    assert all(len(x) == 2 for x in res.nbest)
    with pytest.raises(ValueError):
        generate(det, pred, doc, 0)
    det.params["W"][:] = [[5.0] * 3, [0.0] * 3]
    (res,) = generate(det, pred, doc, 1)
    assert res.slots == () and len(build_cn(res.sentence, res.slots, res.nbest, 1).columns) == 2
