"""Scoring math against hand-specified distribution tables, including the
release criterion tying all three quantities to a brute-force oracle."""
import json
import math
import time

import pytest

from binoculars_service.backends import (
    ToyModel,
    certain_model,
    load_model,
    load_toy_json,
    uniform_model,
)
from binoculars_service.errors import (
    DegenerateScore,
    ModelLoadError,
    TextTooShort,
    VocabMismatch,
)
from binoculars_service.scoring import (
    PROB_FLOOR,
    SCORE_FLOOR,
    ModelPairConfig,
    ScoringEngine,
    binoculars_score,
    cross_log_ppl,
    log_ppl,
)

VOCAB = ("a", "b", "c")
OBS_TABLE = {
    "a": {"a": 0.1, "b": 0.7, "c": 0.2},
    "b": {"a": 0.3, "b": 0.3, "c": 0.4},
    "c": {"a": 0.5, "b": 0.25, "c": 0.25},
}
PERF_TABLE = {
    "a": {"a": 0.6, "b": 0.2, "c": 0.2},
    "b": {"a": 0.1, "b": 0.8, "c": 0.1},
    "c": {"a": 0.3, "b": 0.3, "c": 0.4},
}


def toy(model_id, table):
    return ToyModel(model_id=model_id, vocab=VOCAB, table=table)


def dist_for(table, prev, vocab):
    if prev in table:
        row = table[prev]
        return [row.get(v, 0.0) for v in vocab]
    return [1.0 / len(vocab)] * len(vocab)


def oracle_log_ppl(words, table, vocab):
    """Independent pure-Python computation from the raw tables."""
    total = 0.0
    for i in range(1, len(words)):
        dist = dist_for(table, words[i - 1], vocab)
        p = dist[vocab.index(words[i])]
        total += math.log(max(p, PROB_FLOOR))
    return -total / (len(words) - 1)


def oracle_cross(words, obs_table, perf_table, vocab):
    total = 0.0
    for i in range(1, len(words)):
        obs = dist_for(obs_table, words[i - 1], vocab)
        perf = dist_for(perf_table, words[i - 1], vocab)
        for po, pp in zip(obs, perf):
            if po:
                total += po * math.log(max(pp, PROB_FLOOR))
    return -total / (len(words) - 1)


def test_criterion_9_toy_model_math_oracle():
    start = time.perf_counter()
    failures = []

    observer = toy("obs", OBS_TABLE)
    performer = toy("perf", PERF_TABLE)
    texts = ["a b a c b", "b b b b", "c a b c a b c", "a c", "b c a"]
    for text in texts:
        words = text.split()
        ids = observer.encode(text)
        want_lp = oracle_log_ppl(words, OBS_TABLE, VOCAB)
        want_cross = oracle_cross(words, OBS_TABLE, PERF_TABLE, VOCAB)
        got_lp = log_ppl(ids, observer)
        got_cross = cross_log_ppl(ids, observer, performer)
        got_score = binoculars_score(ids, observer, performer)
        if abs(got_lp - want_lp) > 1e-9:
            failures.append(f"log_ppl({text!r}): {got_lp} != {want_lp}")
        if abs(got_cross - want_cross) > 1e-9:
            failures.append(f"cross_log_ppl({text!r}): {got_cross} != {want_cross}")
        if abs(got_score - want_lp / want_cross) > 1e-9:
            failures.append(f"score({text!r}): {got_score} != {want_lp / want_cross}")

    uniform = uniform_model("u")
    ids = uniform.encode("the a and of to in")
    if binoculars_score(ids, uniform, uniform) != 1.0:
        failures.append("uniform pair score is not exactly 1.0")

    elapsed = time.perf_counter() - start
    status = "FAIL" if failures else "PASS"
    print(f"[{status}] criterion 9: toy-model scoring matches brute-force oracle "
          f"({elapsed:.1f}s)")
    assert not failures, "; ".join(failures)


# --- analytic special cases ---

def test_uniform_log_ppl_is_log_vocab():
    uniform = uniform_model("u")
    ids = uniform.encode("the a and of is")
    assert log_ppl(ids, uniform) == pytest.approx(math.log(uniform.vocab_size), abs=1e-12)
    assert cross_log_ppl(ids, uniform, uniform) == pytest.approx(
        math.log(uniform.vocab_size), abs=1e-12)


def test_certain_model_zero_log_ppl():
    certain = certain_model("c")
    # the cyclic-successor text is predicted with probability 1 at every step
    text = " ".join(certain.vocab[:5])
    ids = certain.encode(text)
    assert log_ppl(ids, certain) == 0.0


def test_certain_observer_score_floors():
    certain = certain_model("c")
    uniform = uniform_model("u", vocab=certain.vocab)
    ids = certain.encode(" ".join(certain.vocab[:5]))
    assert binoculars_score(ids, certain, uniform) == SCORE_FLOOR


def test_one_hot_cross_is_neg_log_q():
    observer = toy("obs", {"a": {"b": 1.0}})
    performer = toy("perf", {"a": {"a": 0.75, "b": 0.25}})
    ids = observer.encode("a b")
    assert cross_log_ppl(ids, observer, performer) == pytest.approx(
        -math.log(0.25), abs=1e-12)


def test_degenerate_score_raises():
    certain = certain_model("c")
    ids = certain.encode(" ".join(certain.vocab[:4]))
    with pytest.raises(DegenerateScore):
        binoculars_score(ids, certain, certain)


def test_vocab_mismatch():
    a = uniform_model("a", vocab=("x", "y"))
    b = uniform_model("b", vocab=("x", "y", "z"))
    with pytest.raises(VocabMismatch):
        cross_log_ppl([0, 1], a, b)


def test_short_text_raises():
    uniform = uniform_model("u")
    with pytest.raises(TextTooShort):
        log_ppl(uniform.encode("the"), uniform)


# --- engine behavior ---

def make_engine(max_tokens=512):
    return ScoringEngine(ModelPairConfig(max_tokens=max_tokens),
                         toy("obs", OBS_TABLE), toy("perf", PERF_TABLE))


def test_engine_batch_composition_invariance():
    engine = make_engine()
    texts = ["a b a c b", "b b b b", "c a b c"]
    batched, counts = engine.score_batch(texts)
    for text, want in zip(texts, batched):
        (alone,), _ = engine.score_batch([text])
        assert alone == pytest.approx(want, abs=1e-6)
    assert counts == [len(t.split()) for t in texts]


def test_engine_truncates_to_max_tokens():
    engine = make_engine(max_tokens=16)
    _, (count,) = engine.score_batch(["a b c " * 50])
    assert count == 16


def test_engine_short_text_reports_index():
    engine = make_engine()
    with pytest.raises(TextTooShort) as exc:
        engine.score_batch(["a b", "a"])
    assert exc.value.index == 1


def test_engine_scorer_id():
    assert make_engine().scorer_id == "obs+perf@v1"


# --- model loading ---

def test_invalid_table_rejected():
    with pytest.raises(ModelLoadError):
        ToyModel(model_id="bad", vocab=VOCAB, table={"a": {"a": 0.5, "b": 0.6}})
    with pytest.raises(ModelLoadError):
        ToyModel(model_id="bad", vocab=VOCAB, table={"a": {"q": 1.0}})


def test_load_toy_json_round_trip(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps({
        "model_id": "json-toy", "vocab": list(VOCAB), "table": OBS_TABLE,
    }))
    model = load_toy_json(path)
    assert model.model_id == "json-toy"
    ids = model.encode("a b a")
    assert log_ppl(ids, model) == pytest.approx(
        oracle_log_ppl(["a", "b", "a"], OBS_TABLE, VOCAB), abs=1e-12)


def test_load_model_specs(tmp_path):
    assert load_model("toy:uniform").model_id == "toy:uniform"
    assert load_model("toy:certain").model_id == "toy:certain"
    with pytest.raises(ModelLoadError):
        load_model("toy:nope")
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"model_id": "m", "vocab": list(VOCAB)}))
    assert load_model(str(path)).model_id == "m"
