"""Whole-model gradient verification.

Builds a miniature model (a few hundred parameters) with non-zero head
weights, runs the exact teacher-forced training forward (padded two-dialog
batch, KB indicators, feedback, masked joint loss), and compares every
tape gradient against a central finite difference. The relative-error
denominator is floored so double-precision FD noise on near-zero
gradients cannot register as a huge ratio.
"""

from dataclasses import dataclass

import numpy as np

from nndialog import autodiff as ad
from nndialog.corpus.labels import TurnLabels
from nndialog.model import ModelConfig, init_model
from nndialog.training import EncodedDialog, batch_loss, prepare_batch

FD_EPS = 1e-5
REL_FLOOR = 1e-3

_TINY_SLOTS = {
    "area": ("north", "south", "dontcare", "none"),
    "food": ("thai", "pub", "dontcare", "none"),
}


def miniature_config(variant="feed_both"):
    """Smallest config that still exercises every architectural path."""
    return ModelConfig(
        slots=_TINY_SLOTS,
        n_candidates=3,
        vocab_size=9,
        max_entities=2,
        emb_dim=3,
        enc_hidden=2,
        dlg_hidden=3,
        head_hidden=(3,),
        variant=variant,
        dropout=0.0,
    )


def _miniature_batch(config):
    """Two fabricated dialogs of unequal length: padding masks, a novel
    response (masked response loss), both indicator values, and every
    label head get exercised."""

    def turn(area, food, entity, response, indicator):
        return TurnLabels(
            slots={"area": area, "food": food}, entity=entity,
            response=response, indicator=indicator,
        )

    d1 = EncodedDialog(
        id="gc-1",
        tokens=[[2, 3, 4], [5, 3], [6]],
        labels=[turn(0, 3, 2, 0, 0), turn(0, 1, 2, 1, 0), turn(0, 1, 0, 2, 1)],
    )
    d2 = EncodedDialog(
        id="gc-2",
        tokens=[[7, 8], [4, 2, 5, 3]],
        labels=[turn(3, 2, 2, -1, 0), turn(1, 2, 1, 1, 1)],
    )
    return prepare_batch([d1, d2], config)


@dataclass
class GradCheckReport:
    max_rel_err: float
    n_params: int
    loss: float
    per_param: dict  # param name -> worst relative error in that array
    worst: tuple  # (param name, flat index, analytic, numeric)

    def text(self):
        lines = [
            f"checked {self.n_params} parameters, loss {self.loss:.6f}",
            f"max relative error {self.max_rel_err:.3e}",
            f"worst: {self.worst[0]}[{self.worst[1]}] analytic {self.worst[2]:.6e} numeric {self.worst[3]:.6e}",
            "",
            f"{'parameter':<28}{'max rel err':>14}",
            "-" * 42,
        ]
        for name in sorted(self.per_param):
            lines.append(f"{name:<28}{self.per_param[name]:>14.3e}")
        return "\n".join(lines)


def run_gradcheck(seed=0, eps=FD_EPS, variant="feed_both"):
    """Exhaustive central-difference check of every model parameter."""
    config = miniature_config(variant)
    params = init_model(config, seed=seed, zero_heads=False)
    batch = _miniature_batch(config)

    with ad.tape() as t:
        loss = batch_loss(params, batch, training=False)
        t.backward(loss)
    loss_value = float(loss.data)
    analytic = {name: p.grad.copy() for name, p in params.named_params().items()}

    def loss_at():
        with ad.tape():
            return float(batch_loss(params, batch, training=False).data)

    per_param = {}
    worst = ("", -1, 0.0, 0.0)
    max_rel = 0.0
    n_params = 0
    for name, p in sorted(params.named_params().items()):
        flat = p.data.reshape(-1)
        gflat = analytic[name].reshape(-1)
        param_worst = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = loss_at()
            flat[i] = orig - eps
            f_minus = loss_at()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            denom = max(abs(gflat[i]), abs(numeric), REL_FLOOR)
            rel = abs(gflat[i] - numeric) / denom
            if rel > param_worst:
                param_worst = rel
            if rel > max_rel:
                max_rel = rel
                worst = (name, i, float(gflat[i]), float(numeric))
            n_params += 1
        per_param[name] = param_worst

    return GradCheckReport(
        max_rel_err=max_rel,
        n_params=n_params,
        loss=loss_value,
        per_param=per_param,
        worst=worst,
    )
