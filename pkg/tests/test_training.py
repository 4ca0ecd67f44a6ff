"""Training loop: batching and padding, feedback wiring, determinism,
early stopping, and the NaN abort."""

import math

import numpy as np
import pytest

from nndialog import autodiff as ad
from nndialog.corpus import generate_kb, generate_synthetic_corpus
from nndialog.corpus.labels import TurnLabels
from nndialog.errors import ConfigError, NumericError
from nndialog.model import feedback_from_labels
from nndialog.schema import default_schema
from nndialog.training import (
    EncodedDialog,
    TrainingConfig,
    batch_forward,
    batched_accuracy,
    build_model_config,
    encode_corpus,
    loss_on_batches,
    make_batches,
    prepare_batch,
    split_corpus,
    train,
)

SCHEMA = default_schema()

TINY = dict(
    epochs=3,
    batch_size=4,
    lr=1e-2,
    clip_norm=5.0,
    dropout=0.0,
    patience=10,
    seed=0,
    dev_fraction=0.2,
    emb_dim=12,
    enc_hidden=8,
    dlg_hidden=12,
    head_hidden=(12,),
)


@pytest.fixture(scope="module")
def corpus():
    kb = generate_kb(seed=1, n_entities=25, schema=SCHEMA)
    dialogs = generate_synthetic_corpus(kb, 24, seed=2, schema=SCHEMA)
    return kb, dialogs


def small_config(**over):
    values = dict(TINY)
    values.update(over)
    return TrainingConfig(**values)


def turn_labels(area, food, price, entity, response, indicator):
    return TurnLabels(
        slots={"area": area, "food": food, "pricerange": price},
        entity=entity, response=response, indicator=indicator,
    )


def fabricated_dialogs():
    d1 = EncodedDialog(
        id="a",
        tokens=[[2, 3, 4], [5]],
        labels=[turn_labels(0, 1, 2, 8, 0, 0), turn_labels(0, 1, 2, 0, 1, 1)],
    )
    d2 = EncodedDialog(
        id="b",
        tokens=[[6, 7]],
        labels=[turn_labels(3, 0, 0, 8, -1, 0)],
    )
    return [d1, d2]


class TestBatching:
    def test_buckets_sorted_by_turn_count_then_id(self):
        dialogs = [
            EncodedDialog(id="z", tokens=[[1]], labels=[None]),
            EncodedDialog(id="a", tokens=[[1], [1]], labels=[None, None]),
            EncodedDialog(id="m", tokens=[[1]], labels=[None]),
        ]
        batches = make_batches(dialogs, 2)
        assert [[d.id for d in b] for b in batches] == [["m", "z"], ["a"]]

    def test_padding_and_masks(self):
        config = build_model_config(small_config(), SCHEMA, 4, 10)
        batch = prepare_batch(fabricated_dialogs(), config)
        assert batch.tokens.shape == (3, 3)  # three real turns, longest 3 tokens
        assert batch.tokens[1].tolist() == [5, 0, 0]  # zero-padded
        assert batch.tok_mask[1].tolist() == [1.0, 0.0, 0.0]
        assert batch.row_of.tolist() == [[0, 2], [1, 3]]  # 3 = padding row
        assert batch.labels[0].mask.tolist() == [1.0, 1.0]
        assert batch.labels[1].mask.tolist() == [1.0, 0.0]
        assert batch.indicators.tolist() == [[0.0, 0.0], [1.0, 0.0]]
        assert batch.n_dialogs == 2 and batch.n_turns == 3

    def test_feedback_is_previous_turn_labels(self):
        config = build_model_config(small_config(variant="feed_both"), SCHEMA, 4, 10)
        batch = prepare_batch(fabricated_dialogs(), config)
        assert np.array_equal(batch.feedbacks[0], np.zeros((2, config.feedback_width)))
        prev = batch.labels[0]
        want = feedback_from_labels(config, prev.slots, prev.response)
        assert np.array_equal(batch.feedbacks[1], want)

    def test_base_variant_has_no_feedback_rows(self):
        config = build_model_config(small_config(), SCHEMA, 4, 10)
        batch = prepare_batch(fabricated_dialogs(), config)
        assert batch.feedbacks == [None, None]

    def test_padded_turn_carries_state_through(self):
        # Dialog b is one turn long; its padded turn must leave h unchanged
        config = build_model_config(small_config(), SCHEMA, 4, 10)
        from nndialog.model import init_model

        params = init_model(config, seed=3, zero_heads=False)
        batch = prepare_batch(fabricated_dialogs(), config)
        with ad.tape():
            outs = batch_forward(params, batch)
        assert np.array_equal(outs[0].h.data[1], outs[1].h.data[1])
        assert not np.array_equal(outs[0].h.data[0], outs[1].h.data[0])

    def test_zero_init_loss_matches_uniform_sum(self, corpus):
        kb, dialogs = corpus
        from nndialog.corpus import Lexicon, build_candidates, build_vocab
        from nndialog.model import init_model

        lexicon = Lexicon.build(SCHEMA, kb)
        candidates = build_candidates(dialogs, lexicon)
        vocab = build_vocab(dialogs)
        index = {c: i for i, c in enumerate(candidates)}
        config = build_model_config(small_config(), SCHEMA, len(candidates), len(vocab))
        encoded = encode_corpus(dialogs, vocab, index, lexicon, SCHEMA)
        batches = [prepare_batch(b, config) for b in make_batches(encoded, 4)]
        params = init_model(config, seed=0)
        got = loss_on_batches(params, batches)
        per_turn = (
            math.log(7) + math.log(93) + math.log(5)
            + math.log(9) + math.log(len(candidates))
        )
        turns = sum(d.n_turns for d in encoded)
        assert abs(got - per_turn * turns / len(encoded)) < 1e-9


class TestEncoding:
    def test_unknown_words_map_to_unk(self, corpus):
        _, dialogs = corpus
        from nndialog.corpus import Lexicon, build_candidates, build_vocab

        kb = corpus[0]
        lexicon = Lexicon.build(SCHEMA, kb)
        index = {c: i for i, c in enumerate(build_candidates(dialogs, lexicon))}
        vocab = build_vocab(dialogs)
        encoded = encode_corpus(dialogs, vocab, index, lexicon, SCHEMA)
        flat = {t for d in encoded for turn in d.tokens for t in turn}
        assert flat <= set(range(len(vocab)))
        assert all(d.tokens and all(turn for turn in d.tokens) for d in encoded)

    def test_split_is_deterministic_and_disjoint(self, corpus):
        _, dialogs = corpus
        a_train, a_dev = split_corpus(dialogs, 0.25, seed=5)
        b_train, b_dev = split_corpus(dialogs, 0.25, seed=5)
        assert [d.id for d in a_train] == [d.id for d in b_train]
        assert [d.id for d in a_dev] == [d.id for d in b_dev]
        assert len(a_dev) == round(len(dialogs) * 0.25)
        assert {d.id for d in a_train}.isdisjoint({d.id for d in a_dev})
        c_train, _ = split_corpus(dialogs, 0.25, seed=6)
        assert [d.id for d in c_train] != [d.id for d in a_train]


class TestAccuracy:
    def test_zero_init_predictions_count_index_zero_hits(self):
        from nndialog.model import init_model

        config = build_model_config(small_config(), SCHEMA, 4, 10)
        params = init_model(config, seed=0)
        dialogs = fabricated_dialogs()
        batches = [prepare_batch(dialogs, config)]
        acc, turns = batched_accuracy(params, batches)
        assert turns == 3
        labels = [lab for d in dialogs for lab in d.labels]
        assert acc["slot.area"] == sum(l.slots["area"] == 0 for l in labels) / 3
        assert acc["entity"] == sum(l.entity == 0 for l in labels) / 3
        assert acc["response"] == sum(l.response == 0 for l in labels) / 3
        assert acc["joint"] == sum(
            all(l.slots[s] == 0 for s in l.slots) for l in labels
        ) / 3


class TestTrain:
    def test_same_seed_same_history_and_checkpoint_bytes(self, corpus, tmp_path):
        kb, dialogs = corpus
        tconfig = small_config(epochs=2)
        paths = [tmp_path / "a.ckpt", tmp_path / "b.ckpt"]
        histories = []
        for path in paths:
            _, history = train(tconfig, dialogs, kb, SCHEMA, path)
            histories.append(history)
        assert histories[0] == histories[1]
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_different_seed_changes_the_run(self, corpus, tmp_path):
        kb, dialogs = corpus
        _, h0 = train(small_config(epochs=1), dialogs, kb, SCHEMA, tmp_path / "a.ckpt")
        _, h1 = train(small_config(epochs=1, seed=9), dialogs, kb, SCHEMA, tmp_path / "b.ckpt")
        assert h0[0]["train_loss"] != h1[0]["train_loss"]

    def test_history_rows_have_metrics(self, corpus, tmp_path):
        kb, dialogs = corpus
        _, history = train(small_config(epochs=2), dialogs, kb, SCHEMA, tmp_path / "m.ckpt")
        assert len(history) == 2
        for row in history:
            assert {"epoch", "train_loss", "dev_loss", "joint_goal", "entity", "response"} <= set(row)
            assert np.isfinite(row["train_loss"])

    def test_returned_bundle_is_best_epoch(self, corpus, tmp_path):
        kb, dialogs = corpus
        tconfig = small_config(epochs=4)
        bundle, history = train(tconfig, dialogs, kb, SCHEMA, tmp_path / "m.ckpt")
        scores = [row["dev_loss"] for row in history]
        assert bundle.meta["epoch"] == int(np.argmin(scores))
        assert bundle.meta["training"]["lr"] == tconfig.lr

    def test_early_stopping_respects_patience(self, corpus, tmp_path):
        kb, dialogs = corpus
        # Huge steps make dev loss bounce; the loop must stop early
        tconfig = small_config(epochs=60, lr=0.5, patience=2)
        bundle, history = train(tconfig, dialogs, kb, SCHEMA, tmp_path / "m.ckpt")
        assert len(history) < 60
        best = bundle.meta["epoch"]
        assert len(history) - 1 - best >= 2

    def test_nan_loss_aborts_with_clear_error(self, corpus, tmp_path):
        kb, dialogs = corpus
        vectors = tmp_path / "bad-vectors.txt"
        dim = TINY["emb_dim"]
        vectors.write_text("restaurant " + " ".join(["nan"] * dim) + "\n")
        tconfig = small_config(word_vectors=str(vectors))
        with pytest.raises(NumericError, match="diverged at epoch 0"):
            train(tconfig, dialogs, kb, SCHEMA, tmp_path / "m.ckpt")

    def test_word_vectors_overwrite_embedding_rows(self, corpus, tmp_path):
        kb, dialogs = corpus
        from nndialog.corpus import build_vocab

        vocab = build_vocab(dialogs)
        dim = TINY["emb_dim"]
        row = np.linspace(-0.5, 0.5, dim)
        vectors = tmp_path / "vectors.txt"
        vectors.write_text("restaurant " + " ".join(f"{v:.6f}" for v in row) + "\n")
        # lr=0 keeps parameters frozen, so the loaded row survives training
        tconfig = small_config(epochs=1, lr=0.0, word_vectors=str(vectors))
        bundle, _ = train(tconfig, dialogs, kb, SCHEMA, tmp_path / "m.ckpt")
        got = bundle.params.embedding.table.data[vocab["restaurant"]]
        assert np.allclose(got, row, atol=1e-6)

    def test_empty_corpus_rejected(self, corpus, tmp_path):
        kb, _ = corpus
        with pytest.raises(ConfigError, match="empty"):
            train(small_config(), [], kb, SCHEMA, tmp_path / "m.ckpt")
