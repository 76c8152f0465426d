import json
import math

import numpy as np
import pytest

from factdesc import corpus, toycorpus, training
from factdesc.alignment import align_description
from factdesc.decoder import DecoderParams
from factdesc.errors import CheckpointError, ConfigError, DataError, ShapeError
from factdesc.tensor import Tape, backward, grad_check
from factdesc.training import Checkpoint, TrainConfig


def tiny_config(**kw):
    base = dict(epochs=2, batch_size=4, seed=7, max_facts=5, max_factual_words=6,
                vocab_size=30, embed_dim=6, hidden_dim=6, attn_dim=6, head_dim=6,
                max_decode_len=10)
    base.update(kw)
    return TrainConfig(**base)


def load_toy(n, seed=0, **cfg_kw):
    config = tiny_config(**cfg_kw)
    records = toycorpus.generate_corpus(n, seed=seed)
    entities = [corpus.parse_record(r, config.max_facts, config.max_factual_words)
                for r in records]
    return entities, config


def test_config_json_round_trip(tmp_path):
    config = tiny_config()
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config.to_dict()))
    assert TrainConfig.from_file(path) == config


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"learning_rat": 0.1})


def test_config_rejects_nonpositive_values():
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)


def _uniform_loss_fixture():
    config = tiny_config(vocab_size=5)  # |V| = 8 with specials
    entity = corpus.Entity(
        "Q1",
        [corpus.Fact.build("kind", "qqq"), corpus.Fact.build("place", "www")],
        ["hello", "world", "zzz"],  # zzz is out of vocabulary -> <UNK> class
    )
    vocab = corpus.Vocabulary(["<UNK>", "<SOS>", "<EOS>", "hello", "world",
                               "aa", "bb", "cc"])
    params = DecoderParams(config.dims(), rng=np.random.default_rng(0))
    for _, t in params.named_tensors():
        t.data[:] = 0.0
    return entity, vocab, params, config


def test_step_loss_uniform_model_closed_form():
    entity, vocab, params, config = _uniform_loss_fixture()
    aligned = align_description(entity, vocab)
    assert [t.source.value for t in aligned.tokens] == ["vocab", "vocab", "unk", "vocab"]
    loss = training.step_loss(entity, aligned, params, vocab, config)
    # unknown gold words score against the <UNK> class, so under a uniform
    # model every token costs ln|V| + ln(slots) regardless of source
    slots = len(entity.facts) + 1
    expected = len(aligned.tokens) * (math.log(len(vocab)) + math.log(slots))
    assert float(loss.data) == pytest.approx(expected, rel=1e-12)


def test_step_loss_decomposes_into_nonnegative_parts():
    entities, config = load_toy(6)
    vocab = corpus.build_vocabulary(entities, config.vocab_size)
    params = DecoderParams(config.dims(), rng=np.random.default_rng(1))
    for entity in entities:
        aligned = align_description(entity, vocab)
        total, fact_term, word_term = training.step_loss(
            entity, aligned, params, vocab, config, parts=True)
        assert float(fact_term.data) >= 0.0
        assert float(word_term.data) >= 0.0
        assert float(total.data) == pytest.approx(
            float(fact_term.data) + float(word_term.data))
        assert np.isfinite(total.data)
        assert float(total.data) > 0.0


def test_step_loss_near_zero_for_hand_routed_model():
    from .test_decoder import routing_fixture

    entity, params, vocab = routing_fixture()
    params.attn_energy_w.data[:] = [[8.0, 8.0]]
    params.vocab_out_b.data[vocab.word_index("<EOS>")] = 15.0
    config = TrainConfig(max_facts=1, max_factual_words=4, vocab_size=2,
                         embed_dim=1, hidden_dim=1, attn_dim=2, head_dim=1,
                         mean_fact="fixed_random")
    aligned = align_description(entity, vocab)
    loss = training.step_loss(entity, aligned, params, vocab, config)
    assert 0.0 < float(loss.data) < 1e-3


def test_step_loss_rejects_mismatched_alignment():
    entity, vocab, params, config = _uniform_loss_fixture()
    other = corpus.Entity("Q2", entity.facts, ["hello"])
    aligned = align_description(other, vocab)
    with pytest.raises(DataError):
        training.step_loss(entity, aligned, params, vocab, config)


def test_step_loss_gradients_match_finite_differences():
    entities, config = load_toy(3, seed=3)
    entity = entities[0]
    vocab = corpus.build_vocabulary(entities, config.vocab_size)
    aligned = align_description(entity, vocab)
    params = DecoderParams(config.dims(), rng=np.random.default_rng(2))

    def f(_):
        return training.step_loss(entity, aligned, params, vocab, config)

    small = [t for name, t in params.named_tensors()
             if name in ("attn_hidden_w", "gru_update_x", "vocab_out_b", "copy_out_w")]
    assert grad_check(f, small, perturbation=1e-6) < 1e-6


def test_copy_only_loss_skips_vocabulary_tokens():
    entities, config = load_toy(6, copy_only=True)
    vocab = corpus.build_vocabulary(entities, config.vocab_size)
    entity = entities[0]
    aligned = align_description(entity, vocab)
    total, fact_term, word_term = training.step_loss(
        entity, aligned, params := DecoderParams(config.dims(), rng=np.random.default_rng(3)),
        vocab, config, parts=True)
    # only fact-aligned steps score; with none, the loss is a constant zero
    n_fact = sum(1 for t in aligned.tokens if t.source.value == "fact")
    if n_fact == 0:
        assert float(total.data) == 0.0
    else:
        assert float(total.data) > 0.0
        with Tape() as tape:
            loss = training.step_loss(entity, aligned, params, vocab, config)
        backward(loss, tape)
        assert params.vocab_out_w.grad is None  # vocabulary head untouched


def test_gradient_clipping_scales_to_global_norm():
    grads = [np.array([3.0, 4.0]), np.zeros(2)]  # norm 5
    training._clip_gradients(grads, 1.0)
    total = np.sqrt(sum((g * g).sum() for g in grads))
    assert total == pytest.approx(1.0)
    assert np.allclose(grads[0], [0.6, 0.8])

    untouched = [np.array([0.3, 0.4])]  # norm 0.5 stays put
    training._clip_gradients(untouched, 1.0)
    assert np.allclose(untouched[0], [0.3, 0.4])


def test_train_accepts_grad_clip():
    entities, config = load_toy(6, grad_clip=0.5)
    checkpoint = training.train(entities, [], config)
    assert np.isfinite(checkpoint.meta["loss_history"]).all()


def test_train_smoke_and_history(caplog):
    entities, config = load_toy(12)
    checkpoint = training.train(entities, entities[:3], config)
    assert isinstance(checkpoint, Checkpoint)
    assert len(checkpoint.meta["loss_history"]) == config.epochs
    assert len(checkpoint.meta["dev_bleu4_history"]) == config.epochs
    assert checkpoint.meta["epoch"] >= 1
    assert checkpoint.meta["seed"] == config.seed
    assert all(np.isfinite(v) for v in checkpoint.meta["loss_history"])


def test_train_rejects_empty_split():
    _, config = load_toy(1)
    with pytest.raises(ConfigError):
        training.train([], [], config)


def test_train_is_deterministic():
    entities, config = load_toy(8)
    first = training.train(entities, entities[:2], config)
    second = training.train(entities, entities[:2], config)
    for (name_a, ta), (_, tb) in zip(first.params.named_tensors(),
                                     second.params.named_tensors()):
        assert np.array_equal(ta.data, tb.data), name_a
    assert first.meta == second.meta


def test_overfit_loss_shrinks():
    entities, config = load_toy(8, epochs=30)
    checkpoint = training.train(entities, [], config)
    history = checkpoint.meta["loss_history"]
    assert np.mean(history[-10:]) < np.mean(history[:10])


def test_generate_description_uses_checkpoint_settings():
    entities, config = load_toy(10)
    checkpoint = training.train(entities, entities[:2], config)
    tokens = training.generate_description(checkpoint, entities[0])
    assert isinstance(tokens, list)
    assert len(tokens) <= config.max_decode_len
    assert "<EOS>" not in tokens and "<UNK>" not in tokens


def test_count_parameters_tiny_hand_sum():
    config = TrainConfig(vocab_size=1, embed_dim=1, hidden_dim=1, attn_dim=1,
                         head_dim=1, max_factual_words=1, max_facts=1)
    total, rows = training.count_parameters(config)
    # emb 4, attention 5, three gates 5 each, vocab head 11, copy head 5
    assert total == 4 + 5 + 15 + 11 + 5
    assert sum(count for _, _, count in rows) == total


def test_count_parameters_linear_in_vocab():
    base = TrainConfig()
    doubled = TrainConfig(vocab_size=2000)
    total_base, _ = training.count_parameters(base)
    total_doubled, _ = training.count_parameters(doubled)
    # each added word costs one embedding row, one softmax row, one bias
    assert total_doubled - total_base == 1000 * (100 + 100 + 1)


def test_count_parameters_default_config_documented_value():
    total, _ = training.count_parameters(TrainConfig())
    assert total == 376_364


def test_count_parameters_excludes_frozen_mean():
    with_frozen = TrainConfig(mean_fact="fixed_random")
    total_frozen, rows = training.count_parameters(with_frozen)
    total_plain, _ = training.count_parameters(TrainConfig())
    assert total_frozen == total_plain
    assert all(name != "mean_fact_fixed" for name, _, _ in rows)


def test_format_param_table_lists_total():
    table = training.format_param_table(TrainConfig())
    assert "total" in table
    assert "376,364" in table


def _trained_checkpoint(tmp_path):
    entities, config = load_toy(8)
    return training.train(entities, entities[:2], config), tmp_path / "model.fks"


def test_checkpoint_round_trip_byte_identical(tmp_path):
    checkpoint, path = _trained_checkpoint(tmp_path)
    training.save_checkpoint(checkpoint, path)
    loaded = training.load_checkpoint(path)
    second = tmp_path / "again.fks"
    training.save_checkpoint(loaded, second)
    assert path.read_bytes() == second.read_bytes()
    assert loaded.config == checkpoint.config
    assert loaded.vocab.words == checkpoint.vocab.words
    assert loaded.meta == checkpoint.meta


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.fks"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(CheckpointError):
        training.load_checkpoint(path)


def test_checkpoint_rejects_truncated_payload(tmp_path):
    checkpoint, path = _trained_checkpoint(tmp_path)
    training.save_checkpoint(checkpoint, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-20])
    with pytest.raises(CheckpointError) as exc:
        training.load_checkpoint(path)
    assert "payload" in str(exc.value)


def test_checkpoint_rejects_version_mismatch(tmp_path):
    import struct

    checkpoint, path = _trained_checkpoint(tmp_path)
    training.save_checkpoint(checkpoint, path)
    raw = path.read_bytes()
    (mlen,) = struct.unpack("<I", raw[4:8])
    manifest = json.loads(raw[8:8 + mlen])
    manifest["version"] = 99
    blob = json.dumps(manifest, ensure_ascii=False, separators=(",", ":")).encode()
    path.write_bytes(raw[:4] + struct.pack("<I", len(blob)) + blob + raw[8 + mlen:])
    with pytest.raises(CheckpointError) as exc:
        training.load_checkpoint(path)
    assert "version" in str(exc.value)


def test_checkpoint_rejects_vocab_size_mismatch(tmp_path):
    import struct

    checkpoint, path = _trained_checkpoint(tmp_path)
    training.save_checkpoint(checkpoint, path)
    raw = path.read_bytes()
    (mlen,) = struct.unpack("<I", raw[4:8])
    manifest = json.loads(raw[8:8 + mlen])
    manifest["config"]["vocab_size"] = 999  # payload no longer matches
    blob = json.dumps(manifest, ensure_ascii=False, separators=(",", ":")).encode()
    path.write_bytes(raw[:4] + struct.pack("<I", len(blob)) + blob + raw[8 + mlen:])
    with pytest.raises((CheckpointError, ShapeError)) as exc:
        training.load_checkpoint(path)
    assert "word_emb" in str(exc.value) or "payload" in str(exc.value)
