"""Teacher-forced mini-batch training.

Dialogs are encoded once (token ids plus derived labels), bucketed into
batches by turn count, padded, and scanned turn by turn with masked loss.
Adam with global-norm clipping optimizes the joint loss; training stops
early when dev loss stops improving and the best-dev checkpoint is kept.
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from nndialog import autodiff as ad
from nndialog.checkpoint import load_checkpoint, save_checkpoint
from nndialog.corpus import Lexicon, build_candidates, build_vocab, derive_labels, tokenize
from nndialog.corpus.labels import UNK_TOKEN, encode_tokens
from nndialog.errors import ConfigError, NumericError
from nndialog.layers import Adam, clip_by_global_norm, load_word_vectors
from nndialog.model import (
    ModelConfig,
    TurnLabelBatch,
    dialog_step,
    feedback_from_labels,
    init_model,
    initial_state,
    joint_loss,
)

log = logging.getLogger("nndialog.training")


@dataclass
class TrainingConfig:
    """Optimization and model-size settings for one training run."""

    epochs: int = 50
    batch_size: int = 32
    lr: float = 1e-3
    clip_norm: float = 5.0
    dropout: float = 0.5
    patience: int = 5
    seed: int = 0
    dev_fraction: float = 0.1
    variant: str = "base"
    word_vectors: str = None
    min_count: int = 1
    emb_dim: int = 300
    enc_hidden: int = 150
    dlg_hidden: int = 200
    head_hidden: tuple = (128,)
    max_entities: int = 8
    slot_weights: dict = None
    entity_weight: float = 1.0
    response_weight: float = 1.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ConfigError("dev fraction must be in [0, 1)")
        self.head_hidden = tuple(self.head_hidden)


@dataclass
class EncodedDialog:
    """One dialog as token-id rows plus per-turn supervision."""

    id: str
    tokens: list  # per turn: list of token ids, never empty
    labels: list  # per turn: corpus TurnLabels

    @property
    def n_turns(self):
        return len(self.tokens)


def encode_corpus(dialogs, vocab, candidate_index, lexicon, schema, max_entities=8):
    encoded = []
    unk = vocab[UNK_TOKEN]
    for dialog in dialogs:
        labels = derive_labels(dialog, candidate_index, lexicon, schema, max_entities)
        rows = []
        for turn in dialog.turns:
            ids = encode_tokens(tokenize(turn.user), vocab)
            rows.append(ids if ids else [unk])
        encoded.append(EncodedDialog(id=dialog.id, tokens=rows, labels=labels))
    return encoded


def split_corpus(dialogs, dev_fraction, seed):
    """Deterministic shuffled split; dev gets round(n * dev_fraction)."""
    order = np.random.default_rng(seed).permutation(len(dialogs))
    n_dev = int(round(len(dialogs) * dev_fraction))
    dev_idx = set(order[:n_dev].tolist())
    train = [d for i, d in enumerate(dialogs) if i not in dev_idx]
    dev = [d for i, d in enumerate(dialogs) if i in dev_idx]
    return train, dev


def make_batches(encoded, batch_size):
    """Bucket by turn count so padding stays small; stable order."""
    ordered = sorted(encoded, key=lambda d: (d.n_turns, d.id))
    return [ordered[i:i + batch_size] for i in range(0, len(ordered), batch_size)]


@dataclass
class BatchData:
    tokens: np.ndarray  # [N, Tok] int token ids over all real turns
    tok_mask: np.ndarray  # [N, Tok] float
    row_of: np.ndarray  # [T, B] int row into tokens, N = padding row
    labels: list  # per turn: TurnLabelBatch (mask marks live rows)
    indicators: np.ndarray  # [T, B] float
    feedbacks: list  # per turn: [B, F] float or None for the base variant
    n_dialogs: int
    n_turns: int  # total live turns
    dialog_ids: list


def prepare_batch(batch, config):
    """Pad a list of EncodedDialog into dense arrays for one forward pass."""
    nbatch = len(batch)
    max_turns = max(d.n_turns for d in batch)
    flat_tokens = []
    row_of = np.full((max_turns, nbatch), 0, dtype=np.int64)
    for b, dialog in enumerate(batch):
        for k, ids in enumerate(dialog.tokens):
            row_of[k, b] = len(flat_tokens)
            flat_tokens.append(ids)
    n_rows = len(flat_tokens)
    for b, dialog in enumerate(batch):
        row_of[dialog.n_turns:, b] = n_rows  # points at the zero padding row
    max_tok = max(len(ids) for ids in flat_tokens)
    tokens = np.zeros((n_rows, max_tok), dtype=np.int64)
    tok_mask = np.zeros((n_rows, max_tok))
    for i, ids in enumerate(flat_tokens):
        tokens[i, : len(ids)] = ids
        tok_mask[i, : len(ids)] = 1.0

    slot_names = config.slot_names
    labels = []
    indicators = np.zeros((max_turns, nbatch))
    for k in range(max_turns):
        slots = {name: np.zeros(nbatch, dtype=np.int64) for name in slot_names}
        entity = np.zeros(nbatch, dtype=np.int64)
        response = np.zeros(nbatch, dtype=np.int64)
        mask = np.zeros(nbatch)
        for b, dialog in enumerate(batch):
            if k >= dialog.n_turns:
                continue
            lab = dialog.labels[k]
            for name in slot_names:
                slots[name][b] = lab.slots[name]
            entity[b] = lab.entity
            response[b] = lab.response
            indicators[k, b] = lab.indicator
            mask[b] = 1.0
        labels.append(TurnLabelBatch(slots=slots, entity=entity, response=response, mask=mask))

    feedbacks = [None] * max_turns
    if config.feedback_width:
        feedbacks[0] = np.zeros((nbatch, config.feedback_width))
        for k in range(1, max_turns):
            prev = labels[k - 1]
            feedbacks[k] = feedback_from_labels(config, prev.slots, prev.response)

    return BatchData(
        tokens=tokens,
        tok_mask=tok_mask,
        row_of=row_of,
        labels=labels,
        indicators=indicators,
        feedbacks=feedbacks,
        n_dialogs=nbatch,
        n_turns=int(sum(d.n_turns for d in batch)),
        dialog_ids=[d.id for d in batch],
    )


def batch_forward(params, batch, training=False, rng=None):
    """Run the full hierarchical forward over one BatchData; returns the
    per-turn TurnOutput list (teacher-forced inputs throughout)."""
    config = params.config
    u_all = params.encoder.encode_batch(params.embedding, batch.tokens, batch.tok_mask)
    pad_row = ad.tensor(np.zeros((1, 2 * config.enc_hidden)))
    u_pad = ad.concat([u_all, pad_row], axis=0)
    h, c = initial_state(config, batch.n_dialogs)
    outputs = []
    for k in range(len(batch.labels)):
        u_k = ad.take_rows(u_pad, batch.row_of[k])
        out = dialog_step(
            params,
            (h, c),
            u_k,
            batch.indicators[k],
            prev_feedback=batch.feedbacks[k],
            mask=batch.labels[k].mask,
            training=training,
            rng=rng,
        )
        h, c = out.h, out.c
        outputs.append(out)
    return outputs


def batch_loss(params, batch, training=False, rng=None):
    outputs = batch_forward(params, batch, training=training, rng=rng)
    return joint_loss(params.config, outputs, batch.labels)


def loss_on_batches(params, batches):
    """Mean per-dialog joint loss over prepared batches, without dropout."""
    total = 0.0
    count = 0
    for batch in batches:
        with ad.tape():
            loss = batch_loss(params, batch, training=False)
        total += float(loss.data) * batch.n_dialogs
        count += batch.n_dialogs
    return total / max(count, 1)


def batched_accuracy(params, batches):
    """Teacher-forced argmax accuracy counts over prepared batches."""
    config = params.config
    slot_names = config.slot_names
    hits = {f"slot.{name}": 0 for name in slot_names}
    hits.update(joint=0, entity=0, response=0)
    turns = 0
    for batch in batches:
        with ad.tape():
            outputs = batch_forward(params, batch, training=False)
        for out, lab in zip(outputs, batch.labels):
            live = lab.mask > 0
            turns += int(live.sum())
            joint = live.copy()
            for name in slot_names:
                pred = np.argmax(out.slot_logits[name].data, axis=1)
                good = live & (pred == lab.slots[name])
                hits[f"slot.{name}"] += int(good.sum())
                joint &= good
            hits["joint"] += int(joint.sum())
            pred_e = np.argmax(out.entity_logits.data, axis=1)
            hits["entity"] += int((live & (pred_e == lab.entity)).sum())
            pred_r = np.argmax(out.response_logits.data, axis=1)
            hits["response"] += int((live & (pred_r == lab.response)).sum())
    return {name: count / max(turns, 1) for name, count in hits.items()}, turns


def build_model_config(tconfig, schema, n_candidates, vocab_size):
    return ModelConfig(
        slots=dict(schema.slots),
        n_candidates=n_candidates,
        vocab_size=vocab_size,
        max_entities=tconfig.max_entities,
        emb_dim=tconfig.emb_dim,
        enc_hidden=tconfig.enc_hidden,
        dlg_hidden=tconfig.dlg_hidden,
        head_hidden=tconfig.head_hidden,
        variant=tconfig.variant,
        dropout=tconfig.dropout,
        slot_weights=tconfig.slot_weights,
        entity_weight=tconfig.entity_weight,
        response_weight=tconfig.response_weight,
    )


def train(tconfig, dialogs, kb, schema, checkpoint_path):
    """Full training run; returns (bundle of the best epoch, history).

    The vocabulary, candidate templates, and lexicon come from the given
    corpus and KB; the best-dev checkpoint (best-train when there is no dev
    split) is written to checkpoint_path and reloaded before returning.
    """
    if not dialogs:
        raise ConfigError("training corpus is empty")
    lexicon = Lexicon.build(schema, kb)
    candidates = build_candidates(dialogs, lexicon)
    vocab = build_vocab(dialogs, min_count=tconfig.min_count)
    candidate_index = {c: i for i, c in enumerate(candidates)}
    config = build_model_config(tconfig, schema, len(candidates), len(vocab))

    train_dialogs, dev_dialogs = split_corpus(dialogs, tconfig.dev_fraction, tconfig.seed)
    encoded_train = encode_corpus(
        train_dialogs, vocab, candidate_index, lexicon, schema, config.max_entities
    )
    encoded_dev = encode_corpus(
        dev_dialogs, vocab, candidate_index, lexicon, schema, config.max_entities
    )
    train_batches = [
        prepare_batch(b, config) for b in make_batches(encoded_train, tconfig.batch_size)
    ]
    dev_batches = [
        prepare_batch(b, config) for b in make_batches(encoded_dev, tconfig.batch_size)
    ]

    params = init_model(config, tconfig.seed)
    if tconfig.word_vectors:
        loaded = load_word_vectors(tconfig.word_vectors, vocab, params.embedding.table.data)
        log.info("loaded %d pre-trained word vectors", loaded)

    named = params.named_params()
    optimizer = Adam(named, lr=tconfig.lr)
    rng = np.random.default_rng(tconfig.seed)
    history = []
    best_score = np.inf
    best_epoch = -1
    patience_left = tconfig.patience

    def save_best(epoch, score):
        save_checkpoint(
            checkpoint_path,
            params,
            vocab,
            candidates,
            schema,
            extra={
                "seed": tconfig.seed,
                "epoch": epoch,
                "score": score,
                "training": asdict(tconfig),
            },
        )

    for epoch in range(tconfig.epochs):
        order = rng.permutation(len(train_batches))
        epoch_loss = 0.0
        for step, batch_idx in enumerate(order):
            batch = train_batches[batch_idx]
            with ad.tape() as tape:
                loss = batch_loss(params, batch, training=True, rng=rng)
                value = float(loss.data)
                if not np.isfinite(value):
                    raise NumericError(
                        f"loss diverged at epoch {epoch} step {step}: {value}"
                    )
                tape.backward(loss)
            params.embedding.zero_pad_grad()
            grads = [p.grad for p in named.values() if p.grad is not None]
            clip_by_global_norm(grads, tconfig.clip_norm)
            optimizer.step()
            optimizer.zero_grads()
            epoch_loss += value * batch.n_dialogs
        train_loss = epoch_loss / max(len(encoded_train), 1)

        if dev_batches:
            dev_loss = loss_on_batches(params, dev_batches)
            accs, _ = batched_accuracy(params, dev_batches)
            score = dev_loss
        else:
            dev_loss = None
            accs, _ = batched_accuracy(params, train_batches)
            score = train_loss
        history.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "dev_loss": dev_loss,
                "joint_goal": accs["joint"],
                "entity": accs["entity"],
                "response": accs["response"],
            }
        )
        log.info(
            "epoch %d train_loss %.4f dev_loss %s joint %.3f response %.3f",
            epoch, train_loss, f"{dev_loss:.4f}" if dev_loss is not None else "n/a",
            accs["joint"], accs["response"],
        )
        if score < best_score - 1e-9:
            best_score = score
            best_epoch = epoch
            patience_left = tconfig.patience
            save_best(epoch, score)
        else:
            patience_left -= 1
            if patience_left <= 0:
                log.info("early stop at epoch %d (best %d)", epoch, best_epoch)
                break

    bundle = load_checkpoint(checkpoint_path)
    return bundle, history
