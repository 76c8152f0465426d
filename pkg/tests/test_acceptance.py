"""Acceptance suite: one test per exit criterion, each printing a verdict.

Criteria 3, 4, 8, and 9 train real models on the bundled corpora under
``data/`` and together take several minutes on one CPU core; run with
``pytest tests/test_acceptance.py -v -s`` to watch the verdict lines.
"""

from pathlib import Path

import numpy as np
import pytest

from factdesc import corpus, metrics, training
from factdesc.alignment import Source, align_description
from factdesc.decoder import DecoderParams
from factdesc.encoder import positional_weights
from factdesc.metrics import EvalPair
from factdesc.tensor import grad_check
from factdesc.training import TrainConfig

DATA = Path(__file__).resolve().parent.parent / "data"

REFERENCE_PARAM_COUNT = 979_986
PARAM_BAND = 0.15


def _verdict(criterion, ok, detail):
    print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


def _load(path, config):
    return corpus.load_entities(path, config.max_facts, config.max_factual_words)


def _bleu_scores(checkpoint, entities, n):
    pairs = [EvalPair(training.generate_description(checkpoint, e), e.description_tokens)
             for e in entities if e.description_tokens]
    return metrics.bleu(pairs, n)


# --- criterion 1: parameter count ------------------------------------------

def test_criterion_1_parameter_count():
    total, rows = training.count_parameters(TrainConfig())
    lo = REFERENCE_PARAM_COUNT * (1 - PARAM_BAND)
    hi = REFERENCE_PARAM_COUNT * (1 + PARAM_BAND)
    ok = lo <= total <= hi
    detail = (f"default config totals {total:,} learnable parameters over "
              f"{len(rows)} tensors; band is [{lo:,.0f}, {hi:,.0f}] around "
              f"{REFERENCE_PARAM_COUNT:,}")
    assert _verdict(1, ok, detail), detail


# --- criterion 2: full-model gradient check ---------------------------------

def toy_setup():
    config = TrainConfig(vocab_size=17, embed_dim=8, hidden_dim=8, attn_dim=8,
                         head_dim=8, max_facts=3, max_factual_words=8)
    entity = corpus.Entity(
        "Qtoy",
        [corpus.Fact.build("kind", "statue"),
         corpus.Fact.build("location", "paris"),
         corpus.Fact.build("creator", "rodin")],
        ["statue", "in", "rodin", "paris"],
    )
    extras = [f"w{i}" for i in range(12)]
    vocab = corpus.Vocabulary(["<UNK>", "<SOS>", "<EOS>", "in", "statue", "paris",
                               "rodin", "kind", "location"] + extras[:11])
    assert len(vocab) == 20
    return entity, vocab, config


def test_criterion_2_full_model_gradients():
    entity, vocab, config = toy_setup()
    aligned = align_description(entity, vocab)
    sources = [t.source for t in aligned.tokens]
    assert sources == [Source.FACT, Source.VOCAB, Source.FACT, Source.FACT, Source.VOCAB]
    params = DecoderParams(config.dims(), rng=np.random.default_rng(12))

    def f(_):
        return training.step_loss(entity, aligned, params, vocab, config)

    err = grad_check(f, params.learnable(), perturbation=1e-6)
    total = sum(t.data.size for t in params.learnable())
    ok = err < 1e-4
    assert _verdict(2, ok, f"max relative error {err:.3e} over {total:,} parameters "
                           f"(tolerance 1e-4)"), err


# --- criterion 3: overfit oracle --------------------------------------------

def test_criterion_3_overfit_oracle():
    config = TrainConfig(epochs=200, batch_size=5, max_facts=12,
                         max_factual_words=8, seed=42)
    entities = _load(DATA / "overfit50.jsonl", config)
    assert len(entities) == 50
    checkpoint = training.train(entities, [], config)
    history = checkpoint.meta["loss_history"]
    ratio = history[-1] / history[0]
    bleu1 = _bleu_scores(checkpoint, entities, 1)
    ok = bleu1 >= 95.0 and ratio < 0.10
    assert _verdict(3, ok, f"training BLEU-1 {bleu1:.2f} (need >= 95), final/initial "
                           f"loss {ratio:.4f} (need < 0.10)"), (bleu1, ratio)


# --- criteria 4 and 9 share three trained models ----------------------------

def _sample_config(**overrides):
    base = dict(epochs=25, batch_size=16, max_facts=12, max_factual_words=8, seed=42)
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def sample_models():
    """Full, copy-only, and mean-pool models trained on the 1k subsample."""
    results = {}
    for label, overrides in (("full", {}),
                             ("copy_only", {"copy_only": True}),
                             ("mean_pool", {"encoding": "mean_pool"})):
        config = _sample_config(**overrides)
        train_split = _load(DATA / "sample1k" / "train.jsonl", config)
        dev_split = _load(DATA / "sample1k" / "dev.jsonl", config)
        assert len(train_split) == 1000
        results[label] = training.train(train_split, dev_split, config)
    return results


def test_criterion_4_ablation_ordering(sample_models):
    config = _sample_config()
    test_split = _load(DATA / "sample1k" / "test.jsonl", config)
    scores = {label: _bleu_scores(ckpt, test_split, 4)
              for label, ckpt in sample_models.items()}
    copy_gap = scores["full"] - scores["copy_only"]
    pos_gap = scores["full"] - scores["mean_pool"]
    ok = copy_gap >= 10.0 and pos_gap > 0.0
    assert _verdict(4, ok, f"test BLEU-4: full {scores['full']:.2f}, copy-only "
                           f"{scores['copy_only']:.2f} (gap {copy_gap:.2f}, need >= 10), "
                           f"mean-pool {scores['mean_pool']:.2f} (gap {pos_gap:.2f}, "
                           f"need > 0)"), scores


# --- criterion 5: positional-encoder closed form ----------------------------

def test_criterion_5_positional_closed_form():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(200):
        J = int(rng.integers(1, 61))
        d = int(rng.integers(1, 101))
        got = positional_weights(J, d)
        k = np.arange(1, d + 1)[:, None]
        j = np.arange(1, J + 1)[None, :]
        want = (1 - j / J) - (k / d) * (1 - 2 * j / J)
        worst = max(worst, float(np.abs(got - want).max()))
        if J % 2 == 0:
            worst = max(worst, float(np.abs(got[:, J // 2 - 1] - 0.5).max()))
    ok = worst <= 1e-15
    assert _verdict(5, ok, f"max deviation {worst:.2e} over randomized (J <= 60, "
                           f"d <= 100) including the j = J/2 half-column"), worst


# --- criterion 6: alignment fixture ------------------------------------------

def test_criterion_6_alignment_fixture():
    entity = corpus.Entity(
        "Q19345316",
        [corpus.Fact.build("instance of", "street"),
         corpus.Fact.build("location", "Elsloo")],
        ["street", "in", "elsloo"],
    )
    vocab = corpus.Vocabulary(["<UNK>", "<SOS>", "<EOS>", "in", "street", "elsloo"])
    aligned = align_description(entity, vocab)
    got = [(t.surface, t.source, t.fact_index) for t in aligned.tokens]
    want = [("street", Source.FACT, 0), ("in", Source.VOCAB, None),
            ("elsloo", Source.FACT, 1), ("<EOS>", Source.VOCAB, None)]
    collision = corpus.Entity(
        "Qtie",
        [corpus.Fact.build("first", "shared"), corpus.Fact.build("second", "shared")],
        ["shared"],
    )
    tie = align_description(collision, vocab).tokens[0]
    ok = got == want and tie.fact_index == 0
    assert _verdict(6, ok, f"street/in/elsloo/<EOS> aligned as fact-0/vocab/fact-1/vocab; "
                           f"two-fact collision chose fact {tie.fact_index}"), got


# --- criterion 7: metric oracles ---------------------------------------------

def test_criterion_7_metric_oracles():
    identical = [EvalPair(t.split(), t.split())
                 for t in ("street in elsloo netherlands",
                           "painting by hendrick avercamp museum")]
    checks = []
    for n in (1, 2, 3, 4):
        checks.append(("BLEU-%d identical" % n,
                       metrics.bleu(identical, n), 100.0))
    checks.append(("ROUGE-L identical", metrics.rouge_l(identical), 100.0))
    checks.append(("BLEU-1 brevity",
                   metrics.bleu([EvalPair("the cat sat".split(),
                                          "the cat sat on mat".split())], 1), 51.3))
    checks.append(("ROUGE-L half",
                   metrics.rouge_l([EvalPair(["the", "cat"], ["the", "dog"])]), 50.0))
    checks.append(("METEOR identical",
                   metrics.meteor_exact([EvalPair(list("abc"), list("abc"))]), 98.1))
    checks.append(("METEOR swapped",
                   metrics.meteor_exact([EvalPair(["b", "a"], ["a", "b"])]), 50.0))
    checks.append(("CIDEr disjoint exact", metrics.cider(identical), 10.0))
    checks.append(("CIDEr no overlap",
                   metrics.cider([EvalPair("x y z".split(), "a b c".split()),
                                  EvalPair("p q r".split(), "d e f".split())]), 0.0))
    checks.append(("CIDEr degenerate single pair",
                   metrics.cider([EvalPair(list("abcd"), list("abcd"))]), 0.0))
    failures = [f"{name}: {got:.3f} != {want}" for name, got, want in checks
                if abs(got - want) > 0.1]
    ok = not failures
    assert _verdict(7, ok, "all %d fixtures within 0.1" % len(checks)
                    if ok else "; ".join(failures)), failures


# --- criterion 8: determinism -------------------------------------------------

def test_criterion_8_determinism(tmp_path):
    config = TrainConfig(epochs=3, batch_size=8, max_facts=12,
                         max_factual_words=8, seed=31)
    entities = _load(DATA / "overfit50.jsonl", config)[:30]
    paths = []
    for i in range(2):
        checkpoint = training.train(entities, entities[:5], config)
        path = tmp_path / f"run{i}.fks"
        training.save_checkpoint(checkpoint, path)
        paths.append(path)
    identical = paths[0].read_bytes() == paths[1].read_bytes()
    loaded = training.load_checkpoint(paths[0])
    resaved = tmp_path / "resaved.fks"
    training.save_checkpoint(loaded, resaved)
    round_trip = resaved.read_bytes() == paths[0].read_bytes()
    ok = identical and round_trip
    assert _verdict(8, ok, f"two seeded runs byte-identical: {identical}; "
                           f"save/load/save byte-identical: {round_trip}"), (identical,
                                                                             round_trip)


# --- criterion 9: attention validity ------------------------------------------

def test_criterion_9_attention_validity(sample_models):
    config = _sample_config()
    dev_split = _load(DATA / "sample1k" / "dev.jsonl", config)
    checkpoint = sample_models["full"]
    worst_sum = 0.0
    worst_masked = 0.0
    rows = 0
    for entity in dev_split:
        enc_mask_len = min(len(entity.facts), config.max_facts) + 1
        _, trace = training.generate_description(checkpoint, entity, return_trace=True)
        for _, alpha in trace:
            rows += 1
            worst_sum = max(worst_sum, abs(float(alpha.sum()) - 1.0))
            if alpha.shape[0] > enc_mask_len:
                worst_masked = max(worst_masked, float(np.abs(alpha[enc_mask_len:]).max()))
    ok = rows > 0 and worst_sum <= 1e-6 and worst_masked == 0.0
    assert _verdict(9, ok, f"{rows} attention rows over the dev split; worst row-sum "
                           f"deviation {worst_sum:.2e} (tolerance 1e-6), worst masked-slot "
                           f"mass {worst_masked}"), (worst_sum, worst_masked)
