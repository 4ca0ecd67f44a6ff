"""Model checkpoints: the binary parameter container plus a manifest
carrying the model config, slot schema, response candidates, and
vocabulary, so a checkpoint alone can serve inference."""

from dataclasses import dataclass, field

from nndialog.errors import CheckpointError
from nndialog.model import ModelConfig, init_model
from nndialog.params_io import load_params, save_params
from nndialog.schema import SlotSchema


@dataclass
class ModelBundle:
    """Everything inference needs, loaded from one checkpoint file."""

    params: object
    vocab: dict
    candidates: list
    schema: SlotSchema
    meta: dict = field(default_factory=dict)

    @property
    def config(self):
        return self.params.config


def save_checkpoint(path, params, vocab, candidates, schema, extra=None):
    """extra: optional JSON-safe dict merged into the manifest (seeds,
    training metadata); reserved keys are rejected."""
    meta = {
        "kind": "dialog-model",
        "config": params.config.to_json(),
        "schema": schema.to_json(),
        "candidates": list(candidates),
        "vocab": dict(vocab),
    }
    if extra:
        overlap = set(extra) & set(meta)
        if overlap:
            raise CheckpointError(f"extra metadata may not override {sorted(overlap)}")
        meta.update(extra)
    save_params(path, params.state_arrays(), meta=meta)


def load_checkpoint(path):
    arrays, meta = load_params(path)
    for key in ("config", "schema", "candidates", "vocab"):
        if key not in meta:
            raise CheckpointError(f"checkpoint manifest lacks {key!r}")
    if meta.get("kind") != "dialog-model":
        raise CheckpointError(f"not a dialog model checkpoint: kind={meta.get('kind')!r}")
    config = ModelConfig.from_json(meta["config"])
    schema = SlotSchema.from_json(meta["schema"])
    params = init_model(config, seed=0)
    params.load_arrays(arrays)
    vocab = {token: int(idx) for token, idx in meta["vocab"].items()}
    return ModelBundle(
        params=params,
        vocab=vocab,
        candidates=list(meta["candidates"]),
        schema=schema,
        meta=meta,
    )
