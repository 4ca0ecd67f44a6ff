"""Evaluation harness: per-slot / joint-goal / entity-pointer / response
metrics in teacher-forced and free-running modes, machine-readable report
files, and the four-variant comparison table.

Teacher-forced mode conditions every turn on ground-truth history (the
ranking protocol); free-running mode lets the model's own API calls drive
KB queries and feeds back its own predictions. Final-response accuracy
requires the reference template AND an exact lexicalised string match, so
it can never exceed the de-lex accuracy.
"""

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from nndialog import autodiff as ad
from nndialog.corpus import Lexicon, lexicalise, normalize
from nndialog.corpus.delex import API_CALL_TEMPLATE
from nndialog.errors import ConfigError, LexicalisationError
from nndialog.kb import ApiCall, compute_kb_indicator, format_api_call, resolve_entity
from nndialog.model import decode_turn, dialog_step, feedback_from_labels, initial_state
from nndialog.schema import DONTCARE, NONE_VALUE
from nndialog.training import TrainingConfig, batch_forward, encode_corpus, make_batches, prepare_batch, train

log = logging.getLogger("nndialog.evaluation")

MODES = ("teacher_forced", "free_running")


@dataclass
class EvalReport:
    mode: str
    n_dialogs: int
    n_turns: int
    slot_accuracy: dict
    joint_goal: float
    entity: float
    delex_response: float
    final_response: float
    per_response: float
    errors: list = field(default_factory=list)

    def to_json(self):
        return asdict(self)


def _predicted_text(candidates, response_idx, slot_values, entity):
    """Surface string for a predicted template. API-call templates format
    through the belief directly (dontcare is legal there); anything else
    lexicalises and may raise LexicalisationError."""
    template = candidates[response_idx]
    if template == API_CALL_TEMPLATE:
        return format_api_call(slot_values)
    return lexicalise(template.split(), slot_values, entity)


class _MetricTally:
    def __init__(self, slot_names, max_errors):
        self.slot_hits = {name: 0 for name in slot_names}
        self.joint_hits = 0
        self.entity_hits = 0
        self.delex_hits = 0
        self.final_hits = 0
        self.turns = 0
        self.max_errors = max_errors
        self.errors = []

    def log_error(self, dialog_id, turn_idx, kind, expected, got):
        if len(self.errors) < self.max_errors:
            self.errors.append(
                {
                    "dialog": dialog_id,
                    "turn": turn_idx,
                    "kind": kind,
                    "expected": expected,
                    "got": got,
                }
            )

    def score_turn(self, dialog, turn_idx, labels, preds, produced_text, reference_text):
        """labels: corpus TurnLabels; preds: dict with slot index map,
        entity, response ints; produced_text may be None (lexicalisation
        failure or abstention mismatch)."""
        self.turns += 1
        all_slots = True
        for name, want in labels.slots.items():
            got = preds["slots"][name]
            if got == want:
                self.slot_hits[name] += 1
            else:
                all_slots = False
                self.log_error(dialog.id, turn_idx, f"slot.{name}", want, got)
        if all_slots:
            self.joint_hits += 1
        if preds["entity"] == labels.entity:
            self.entity_hits += 1
        else:
            self.log_error(dialog.id, turn_idx, "entity", labels.entity, preds["entity"])
        delex_ok = labels.response >= 0 and preds["response"] == labels.response
        if delex_ok:
            self.delex_hits += 1
        else:
            self.log_error(dialog.id, turn_idx, "response", labels.response, preds["response"])
        final_ok = delex_ok and produced_text is not None and produced_text == reference_text
        if final_ok:
            self.final_hits += 1
        elif delex_ok:
            self.log_error(dialog.id, turn_idx, "lexicalise", reference_text, produced_text)

    def report(self, mode, n_dialogs):
        turns = max(self.turns, 1)
        return EvalReport(
            mode=mode,
            n_dialogs=n_dialogs,
            n_turns=self.turns,
            slot_accuracy={name: hits / turns for name, hits in self.slot_hits.items()},
            joint_goal=self.joint_hits / turns,
            entity=self.entity_hits / turns,
            delex_response=self.delex_hits / turns,
            final_response=self.final_hits / turns,
            per_response=self.final_hits / turns,
            errors=self.errors,
        )


def _slot_values_from_indices(config, indices):
    return {name: config.slots[name][indices[name]] for name in config.slot_names}


def _teacher_forced(bundle, dialogs, encoded, max_errors):
    config = bundle.config
    tally = _MetricTally(config.slot_names, max_errors)
    batches = make_batches(encoded, 32)
    by_id = {d.id: d for d in dialogs}
    for raw in batches:
        batch = prepare_batch(raw, config)
        with ad.tape():
            outputs = batch_forward(bundle.params, batch, training=False)
        for b, dialog_id in enumerate(batch.dialog_ids):
            dialog = by_id[dialog_id]
            encoded_dialog = raw[b]
            last_result = None
            for k, turn in enumerate(dialog.turns):
                if turn.kb_result is not None:
                    last_result = turn.kb_result
                out = outputs[k]
                preds = {
                    "slots": {
                        name: int(np.argmax(out.slot_logits[name].data[b]))
                        for name in config.slot_names
                    },
                    "entity": int(np.argmax(out.entity_logits.data[b])),
                    "response": int(np.argmax(out.response_logits.data[b])),
                }
                slot_values = _slot_values_from_indices(config, preds["slots"])
                entity = resolve_entity(last_result, out.entity_logits.data[b])
                try:
                    produced = _predicted_text(
                        bundle.candidates, preds["response"], slot_values, entity
                    )
                except LexicalisationError:
                    produced = None
                tally.score_turn(
                    dialog, k, encoded_dialog.labels[k], preds, produced,
                    normalize(turn.system),
                )
    return tally


def _free_running(bundle, dialogs, encoded, kb, max_errors):
    config = bundle.config
    params = bundle.params
    tally = _MetricTally(config.slot_names, max_errors)
    api_template_idx = None
    if API_CALL_TEMPLATE in bundle.candidates:
        api_template_idx = bundle.candidates.index(API_CALL_TEMPLATE)
    for dialog, encoded_dialog in zip(dialogs, encoded):
        h, c = initial_state(config, 1)
        last_result = None
        pointer = 0
        feedback = (
            np.zeros((1, config.feedback_width)) if config.feedback_width else None
        )
        for k, turn in enumerate(dialog.turns):
            indicator = compute_kb_indicator(last_result, pointer)
            tokens = np.asarray(encoded_dialog.tokens[k]).reshape(1, -1)
            mask = np.ones_like(tokens, dtype=np.float64)
            with ad.tape():
                u = params.encoder.encode_batch(params.embedding, tokens, mask)
                out = dialog_step(
                    params, (h, c), u, np.array([float(indicator)]),
                    prev_feedback=feedback,
                )
            h, c = out.h, out.c
            decoded = decode_turn(config, out, row=0)
            preds = {
                "slots": {
                    name: int(np.argmax(out.slot_logits[name].data[0]))
                    for name in config.slot_names
                },
                "entity": decoded["entity"],
                "response": decoded["response"],
            }
            slot_values = decoded["slots"]
            entity = resolve_entity(last_result, out.entity_logits.data[0])
            try:
                produced = _predicted_text(
                    bundle.candidates, preds["response"], slot_values, entity
                )
            except LexicalisationError:
                produced = None
            tally.score_turn(
                dialog, k, encoded_dialog.labels[k], preds, produced,
                normalize(turn.system),
            )
            template = bundle.candidates[preds["response"]]
            if api_template_idx is not None and preds["response"] == api_template_idx:
                call = ApiCall(
                    *(
                        DONTCARE if slot_values[s] == NONE_VALUE else slot_values[s]
                        for s in ("area", "food", "pricerange")
                    )
                )
                last_result = kb.execute(call, config.max_entities)
                pointer = 0
            elif produced is not None and entity is not None and "<r_name>" in template.split():
                pointer = max(pointer, preds["entity"] + 1)
            if config.feedback_width:
                feedback = feedback_from_labels(
                    config,
                    {name: np.array([idx]) for name, idx in preds["slots"].items()},
                    np.array([preds["response"]]),
                )
    return tally


def evaluate(bundle, dialogs, kb, mode="teacher_forced", max_errors=200):
    """Scores every system turn of the given dialogs; deterministic, so
    repeated calls return identical reports."""
    if mode not in MODES:
        raise ConfigError(f"unknown evaluation mode {mode!r}, expected one of {MODES}")
    if not dialogs:
        raise ConfigError("evaluation corpus is empty")
    config = bundle.config
    lexicon = Lexicon.build(bundle.schema, kb)
    candidate_index = {c: i for i, c in enumerate(bundle.candidates)}
    encoded = encode_corpus(
        dialogs, bundle.vocab, candidate_index, lexicon, bundle.schema, config.max_entities
    )
    if mode == "teacher_forced":
        tally = _teacher_forced(bundle, dialogs, encoded, max_errors)
    else:
        tally = _free_running(bundle, dialogs, encoded, kb, max_errors)
    report = tally.report(mode, len(dialogs))
    _check_metric_laws(report)
    return report


def _check_metric_laws(report):
    floor = min(report.slot_accuracy.values())
    if report.joint_goal > floor + 1e-12:
        raise AssertionError("joint-goal accuracy exceeded a per-slot accuracy")
    if report.final_response > report.delex_response + 1e-12:
        raise AssertionError("final-response accuracy exceeded de-lex accuracy")


def report_text(report):
    """Human-readable metric table."""
    lines = [
        f"mode: {report.mode}   dialogs: {report.n_dialogs}   turns: {report.n_turns}",
        "",
        f"{'metric':<24}{'accuracy':>10}",
        "-" * 34,
    ]
    for name, value in report.slot_accuracy.items():
        lines.append(f"{'slot ' + name + ' goal':<24}{value:>10.4f}")
    lines.append(f"{'joint goal':<24}{report.joint_goal:>10.4f}")
    lines.append(f"{'entity pointer':<24}{report.entity:>10.4f}")
    lines.append(f"{'de-lex response':<24}{report.delex_response:>10.4f}")
    lines.append(f"{'final response':<24}{report.final_response:>10.4f}")
    lines.append(f"{'per-response':<24}{report.per_response:>10.4f}")
    return "\n".join(lines)


def write_report(path, report, extra=None):
    """One JSON object: metrics plus config echo / seed / corpus checksum."""
    payload = {"report": report.to_json()}
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def compare_variants(tconfig, train_dialogs, eval_dialogs, kb, schema, out_dir,
                     mode="teacher_forced", variants=("base", "feed_response", "feed_slots", "feed_both")):
    """Trains one model per architecture variant with identical settings and
    evaluates each; returns [(variant, EvalReport, history)] in order."""
    import dataclasses
    import os

    rows = []
    for variant in variants:
        vconfig = dataclasses.replace(tconfig, variant=variant)
        path = os.path.join(out_dir, f"model-{variant}.ckpt")
        log.info("training variant %s", variant)
        bundle, history = train(vconfig, train_dialogs, kb, schema, path)
        report = evaluate(bundle, eval_dialogs, kb, mode=mode)
        rows.append((variant, report, history))
    return rows


_VARIANT_LABELS = {
    "base": "Hierarchical LSTM",
    "feed_response": " + feed de-lex res (1)",
    "feed_slots": " + feed goal slots (2)",
    "feed_both": " + feed both (3)",
}


def variants_table(rows):
    """Four-metric comparison table, one row per architecture variant."""
    header = f"{'Model':<26}{'Entity Ptr':>11}{'Joint Goal':>11}{'De-lex Res':>11}{'Final Res':>11}"
    lines = [header, "-" * len(header)]
    for variant, report, _ in rows:
        label = _VARIANT_LABELS.get(variant, variant)
        lines.append(
            f"{label:<26}"
            f"{100 * report.entity:>11.1f}"
            f"{100 * report.joint_goal:>11.1f}"
            f"{100 * report.delex_response:>11.1f}"
            f"{100 * report.final_response:>11.1f}"
        )
    return "\n".join(lines)
