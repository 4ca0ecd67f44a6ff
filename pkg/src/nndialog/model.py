"""The hierarchical dialog network.

A bidirectional utterance LSTM turns each user utterance into a vector
U_k; a dialog-level LSTM consumes [U_k, I_k] (plus, in the feedback
variants, one-hot encodings of the previous turn's response template
and/or slot labels) and its state s_k feeds softmax MLP heads: one per
goal slot, one entity pointer over the ranked KB result list plus an
abstain index, and one over the delexicalised response candidates.

The joint loss is the weighted sum of all head cross-entropies, summed
over the turns of each dialog and averaged over the dialogs of a batch;
padding turns are masked out.
"""

from dataclasses import dataclass, field

import numpy as np

from nndialog import autodiff as ad
from nndialog import kernels
from nndialog.errors import CheckpointError, ConfigError
from nndialog.layers import BiLstmEncoder, Embedding, LstmParams, MlpHead, lstm_step
from nndialog.schema import DONTCARE, NONE_VALUE

VARIANTS = ("base", "feed_response", "feed_slots", "feed_both")


@dataclass
class ModelConfig:
    """Architecture and loss-weight description; fully JSON-serializable so
    checkpoints are self-describing."""

    slots: dict  # slot name -> tuple of candidate values (with specials)
    n_candidates: int
    vocab_size: int
    max_entities: int = 8
    emb_dim: int = 300
    enc_hidden: int = 150
    dlg_hidden: int = 200
    head_hidden: tuple = (128,)
    variant: str = "base"
    dropout: float = 0.5
    slot_weights: dict = None  # slot name -> lambda, default 1.0
    entity_weight: float = 1.0
    response_weight: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.n_candidates < 1:
            raise ConfigError("need at least one response candidate")
        if not self.slots:
            raise ConfigError("slot schema is empty")
        self.slots = {name: tuple(values) for name, values in self.slots.items()}
        for name, values in self.slots.items():
            if not values:
                raise ConfigError(f"slot {name!r} has an empty candidate list")
            if DONTCARE not in values or NONE_VALUE not in values:
                raise ConfigError(f"slot {name!r} candidates must include the special values")
        self.head_hidden = tuple(self.head_hidden)
        if self.slot_weights is None:
            self.slot_weights = {name: 1.0 for name in self.slots}
        missing = set(self.slots) - set(self.slot_weights)
        if missing:
            raise ConfigError(f"slot_weights missing entries for {sorted(missing)}")

    @property
    def slot_names(self):
        return tuple(self.slots)

    def arity(self, slot):
        return len(self.slots[slot])

    @property
    def entity_arity(self):
        return self.max_entities + 1

    @property
    def feeds_response(self):
        return self.variant in ("feed_response", "feed_both")

    @property
    def feeds_slots(self):
        return self.variant in ("feed_slots", "feed_both")

    @property
    def feedback_width(self):
        width = 0
        if self.feeds_response:
            width += self.n_candidates
        if self.feeds_slots:
            width += sum(self.arity(s) for s in self.slot_names)
        return width

    @property
    def dialog_input_dim(self):
        return 2 * self.enc_hidden + 1 + self.feedback_width

    def to_json(self):
        return {
            "slots": {name: list(values) for name, values in self.slots.items()},
            "n_candidates": self.n_candidates,
            "vocab_size": self.vocab_size,
            "max_entities": self.max_entities,
            "emb_dim": self.emb_dim,
            "enc_hidden": self.enc_hidden,
            "dlg_hidden": self.dlg_hidden,
            "head_hidden": list(self.head_hidden),
            "variant": self.variant,
            "dropout": self.dropout,
            "slot_weights": dict(self.slot_weights),
            "entity_weight": self.entity_weight,
            "response_weight": self.response_weight,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(**obj)
        except TypeError as exc:
            raise CheckpointError(f"bad model config: {exc}") from None


class ModelParams:
    """All trainable tensors, addressable through a flat sorted name map.

    Head output layers start at zero by default (uniform initial
    distributions); zero_heads=False randomizes them, which the gradient
    checker needs so every parameter sees nonzero gradient flow.
    """

    def __init__(self, config, rng, zero_heads=True):
        self.config = config
        self.embedding = Embedding(config.vocab_size, config.emb_dim, rng)
        self.encoder = BiLstmEncoder(config.emb_dim, config.enc_hidden, rng)
        self.dialog = LstmParams(config.dialog_input_dim, config.dlg_hidden, rng)
        self.slot_heads = {
            name: MlpHead(
                config.dlg_hidden, config.head_hidden, config.arity(name), rng,
                zero_output=zero_heads,
            )
            for name in config.slot_names
        }
        self.entity_head = MlpHead(
            config.dlg_hidden, config.head_hidden, config.entity_arity, rng,
            zero_output=zero_heads,
        )
        self.response_head = MlpHead(
            config.dlg_hidden, config.head_hidden, config.n_candidates, rng,
            zero_output=zero_heads,
        )

    def named_params(self):
        out = {}
        for name, p in self.embedding.params().items():
            out[f"emb.{name}"] = p
        for name, p in self.encoder.params().items():
            out[f"enc.{name}"] = p
        for name, p in self.dialog.params().items():
            out[f"dlg.{name}"] = p
        for slot, head in self.slot_heads.items():
            for name, p in head.params().items():
                out[f"slot.{slot}.{name}"] = p
        for name, p in self.entity_head.params().items():
            out[f"entity.{name}"] = p
        for name, p in self.response_head.params().items():
            out[f"response.{name}"] = p
        return out

    def zero_grads(self):
        for p in self.named_params().values():
            p.grad = None

    def state_arrays(self):
        return {name: p.data for name, p in self.named_params().items()}

    def load_arrays(self, arrays):
        params = self.named_params()
        missing = sorted(set(params) - set(arrays))
        extra = sorted(set(arrays) - set(params))
        if missing or extra:
            raise CheckpointError(
                f"parameter names do not match model: missing {missing}, unexpected {extra}"
            )
        for name, p in params.items():
            if arrays[name].shape != p.data.shape:
                raise CheckpointError(
                    f"parameter {name!r} has shape {arrays[name].shape}, expected {p.data.shape}"
                )
            p.data[...] = arrays[name]


def init_model(config, seed, zero_heads=True):
    """Reproducible parameter initialization from an integer seed."""
    return ModelParams(config, np.random.default_rng(seed), zero_heads=zero_heads)


@dataclass
class TurnOutput:
    """State and head logits for one dialog turn (batch-leading shapes)."""

    h: object
    c: object
    slot_logits: dict
    entity_logits: object
    response_logits: object

    @property
    def state(self):
        return self.h, self.c

    def distributions(self):
        """Softmax of every head as plain arrays (no tape participation)."""
        out = {
            f"slot.{name}": kernels.softmax_rows(logits.data)
            for name, logits in self.slot_logits.items()
        }
        out["entity"] = kernels.softmax_rows(self.entity_logits.data)
        out["response"] = kernels.softmax_rows(self.response_logits.data)
        return out


def initial_state(config, batch_size):
    zeros = np.zeros((batch_size, config.dlg_hidden))
    return ad.tensor(zeros), ad.tensor(zeros.copy())


def feedback_from_labels(config, slot_labels, response_labels):
    """One-hot feedback rows [B, feedback_width] from the previous turn's
    labels; negative response labels (novel templates) encode as zeros."""
    width = config.feedback_width
    if width == 0:
        return None
    response_labels = np.asarray(response_labels)
    nbatch = response_labels.shape[0]
    out = np.zeros((nbatch, width))
    offset = 0
    rows = np.arange(nbatch)
    if config.feeds_response:
        known = response_labels >= 0
        out[rows[known], response_labels[known]] = 1.0
        offset += config.n_candidates
    if config.feeds_slots:
        for name in config.slot_names:
            idx = np.asarray(slot_labels[name])
            out[rows, offset + idx] = 1.0
            offset += config.arity(name)
    return out


def dialog_step(params, s_prev, u_k, i_k, prev_feedback=None, mask=None, training=False, rng=None):
    """One turn of the dialog-level LSTM plus all heads.

    s_prev is the (h, c) pair from the previous turn, u_k the [B, 2H]
    utterance vectors, i_k the KB indicator bits. prev_feedback must be a
    [B, feedback_width] one-hot array for feedback variants and is ignored
    by the base variant. mask marks live batch rows on padded turns.
    """
    config = params.config
    h_prev, c_prev = s_prev
    nbatch = u_k.data.shape[0]
    indicator = ad.tensor(np.asarray(i_k, dtype=np.float64).reshape(nbatch, 1))
    if training and config.dropout > 0.0:
        u_k = ad.dropout(u_k, config.dropout, rng, training=True)
    parts = [u_k, indicator]
    width = config.feedback_width
    if width:
        if prev_feedback is None:
            raise ConfigError(
                f"variant {config.variant!r} needs feedback of width {width}"
            )
        feedback = prev_feedback if isinstance(prev_feedback, ad.Tensor) else ad.tensor(prev_feedback)
        if feedback.data.shape != (nbatch, width):
            raise ConfigError(
                f"feedback shape {feedback.data.shape} does not match ({nbatch}, {width})"
            )
        parts.append(feedback)
    x = ad.concat(parts, axis=1)
    h, c = lstm_step(params.dialog, x, h_prev, c_prev, mask)
    s = h
    if training and config.dropout > 0.0:
        s = ad.dropout(s, config.dropout, rng, training=True)
    return TurnOutput(
        h=h,
        c=c,
        slot_logits={name: head.logits(s) for name, head in params.slot_heads.items()},
        entity_logits=params.entity_head.logits(s),
        response_logits=params.response_head.logits(s),
    )


@dataclass
class TurnLabelBatch:
    """Per-turn supervision for a batch: index arrays [B] per head, plus a
    row mask for dialogs already finished at this turn."""

    slots: dict
    entity: np.ndarray
    response: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        self.entity = np.asarray(self.entity, dtype=np.int64)
        self.response = np.asarray(self.response, dtype=np.int64)
        self.slots = {k: np.asarray(v, dtype=np.int64) for k, v in self.slots.items()}
        if self.mask is None:
            self.mask = np.ones(self.entity.shape[0])
        self.mask = np.asarray(self.mask, dtype=np.float64)


def joint_loss(config, outputs, labels):
    """Cross-entropy over every head and turn, per-dialog sums averaged
    over the batch; returns a scalar tensor on the active tape."""
    if len(outputs) != len(labels):
        raise ConfigError(f"{len(outputs)} outputs vs {len(labels)} label sets")
    if not outputs:
        raise ConfigError("no turns to score")
    nbatch = labels[0].entity.shape[0]
    total = None
    for output, lab in zip(outputs, labels):
        pieces = []
        for name in config.slot_names:
            if name not in lab.slots:
                raise ConfigError(f"missing labels for slot {name!r}")
            weight = config.slot_weights[name]
            pieces.append((output.slot_logits[name], lab.slots[name], lab.mask * weight))
        pieces.append((output.entity_logits, lab.entity, lab.mask * config.entity_weight))
        known = (lab.response >= 0).astype(np.float64)
        pieces.append(
            (
                output.response_logits,
                np.where(lab.response >= 0, lab.response, 0),
                lab.mask * known * config.response_weight,
            )
        )
        for logits, idx, row_weights in pieces:
            losses = ad.softmax_xent(logits, np.asarray(idx, dtype=np.int64))
            term = ad.weighted_sum(losses, row_weights / nbatch)
            total = term if total is None else ad.add(total, term)
    return total


def decode_turn(config, output, row=0):
    """Argmax decode of one batch row; ties break toward the lowest index."""
    slots = {}
    for name, logits in output.slot_logits.items():
        idx = int(np.argmax(logits.data[row]))
        slots[name] = config.slots[name][idx]
    return {
        "slots": slots,
        "entity": int(np.argmax(output.entity_logits.data[row])),
        "response": int(np.argmax(output.response_logits.data[row])),
    }
