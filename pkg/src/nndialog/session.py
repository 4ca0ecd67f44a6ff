"""Stateful inference session: one live conversation against a trained
model and a knowledge base.

Each user message runs one dialog turn. When the model picks the API-call
template the session executes the query itself, then advances through the
internal silence turn (the convention the model was trained on) so the
caller always receives a user-facing utterance. Entity-pointer state
advances whenever the system offers a venue by name.
"""

import itertools

import numpy as np

from nndialog import autodiff as ad
from nndialog.corpus import lexicalise, normalize, tokenize
from nndialog.corpus.delex import API_CALL_TEMPLATE
from nndialog.corpus.dialogs import SILENCE
from nndialog.corpus.labels import UNK_TOKEN, encode_tokens
from nndialog.errors import LexicalisationError
from nndialog.kb import compute_kb_indicator, format_api_call, parse_api_call, resolve_entity
from nndialog.model import dialog_step, feedback_from_labels, initial_state

FALLBACK_RESPONSE = "sorry , i did not catch that . could you rephrase ?"
_session_counter = itertools.count(1)


class InferenceSession:
    """Belief, dialog-LSTM state, and KB cursor for one conversation."""

    def __init__(self, bundle, kb):
        self.bundle = bundle
        self.config = bundle.config
        self.kb = kb
        self.id = f"s{next(_session_counter)}"
        self.h, self.c = initial_state(self.config, 1)
        self.last_result = None
        self.pointer = 0
        self.feedback = (
            np.zeros((1, self.config.feedback_width))
            if self.config.feedback_width
            else None
        )
        self.turn_index = 0
        self.transcript = []
        self.last_distributions = None

    def _forward(self, text):
        config = self.config
        ids = encode_tokens(tokenize(text), self.bundle.vocab)
        if not ids:
            ids = [self.bundle.vocab[UNK_TOKEN]]
        tokens = np.asarray(ids, dtype=np.int64).reshape(1, -1)
        mask = np.ones(tokens.shape)
        indicator = compute_kb_indicator(self.last_result, self.pointer)
        with ad.tape():
            u = self.bundle.params.encoder.encode_batch(
                self.bundle.params.embedding, tokens, mask
            )
            out = dialog_step(
                self.bundle.params,
                (self.h, self.c),
                u,
                np.array([float(indicator)]),
                prev_feedback=self.feedback,
            )
        self.h, self.c = out.h, out.c
        slots = {
            name: int(np.argmax(out.slot_logits[name].data[0]))
            for name in config.slot_names
        }
        if config.feedback_width:
            self.feedback = feedback_from_labels(
                self.config,
                {name: np.array([idx]) for name, idx in slots.items()},
                np.array([int(np.argmax(out.response_logits.data[0]))]),
            )
        return out, slots, indicator

    def _belief_values(self, slot_indices):
        return {
            name: self.config.slots[name][idx] for name, idx in slot_indices.items()
        }

    def step(self, text):
        """Run one user message through the model; returns a dict with the
        system utterance plus everything the turn decided."""
        text = normalize(text)
        out, slot_indices, indicator = self._forward(text)
        response_idx = int(np.argmax(out.response_logits.data[0]))
        template = self.bundle.candidates[response_idx]
        api_call = None

        if template == API_CALL_TEMPLATE:
            belief = self._belief_values(slot_indices)
            api_call = format_api_call(belief)
            self.last_result = self.kb.execute(
                parse_api_call(api_call, self.bundle.schema), self.config.max_entities
            )
            self.pointer = 0
            out, slot_indices, indicator = self._forward(SILENCE)
            response_idx = int(np.argmax(out.response_logits.data[0]))
            template = self.bundle.candidates[response_idx]

        belief = self._belief_values(slot_indices)
        entity_idx = int(np.argmax(out.entity_logits.data[0]))
        entity = resolve_entity(self.last_result, out.entity_logits.data[0])
        lexicalised = False
        if template == API_CALL_TEMPLATE:
            # Model asked for a second query straight after the first; emit
            # the command itself rather than looping.
            system = format_api_call(belief)
            api_call = system
        else:
            try:
                system = lexicalise(template.split(), belief, entity)
                lexicalised = True
            except LexicalisationError:
                system = FALLBACK_RESPONSE
        # The pointer passes an entity only when its name was actually said
        if lexicalised and entity is not None and "<r_name>" in template.split():
            self.pointer = max(self.pointer, entity_idx + 1)

        self.last_distributions = {
            name: out.slot_logits[name].data[0] for name in self.config.slot_names
        }
        self.last_distributions["entity"] = out.entity_logits.data[0]
        self.turn_index += 1
        result = {
            "turn": self.turn_index,
            "user": text,
            "system": system,
            "template": template,
            "belief": belief,
            "api_call": api_call,
            "kb_count": self.last_result.count if self.last_result is not None else None,
            "entity_index": entity_idx,
            "entity_name": entity.name if entity is not None else None,
            "kb_indicator": indicator,
        }
        self.transcript.append(result)
        return result

    def state(self):
        """Snapshot for inspection: belief distributions, KB cursor, and
        the transcript so far."""
        belief = {}
        if self.last_distributions is not None:
            for name in self.config.slot_names:
                probs = _softmax(self.last_distributions[name])
                belief[name] = {
                    "values": list(self.config.slots[name]),
                    "probs": [float(p) for p in probs],
                    "argmax": self.config.slots[name][int(np.argmax(probs))],
                }
        kb = None
        if self.last_result is not None:
            kb = {
                "call": self.last_result.call.command(),
                "count": self.last_result.count,
                "names": [e.name for e in self.last_result.entities],
                "pointer": self.pointer,
            }
        return {
            "session_id": self.id,
            "turns": self.turn_index,
            "belief": belief,
            "kb": kb,
            "transcript": list(self.transcript),
        }


def _softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def describe_bundle(bundle, kb):
    """Static model facts for service metadata."""
    config = bundle.config
    return {
        "variant": config.variant,
        "slots": {name: len(values) for name, values in config.slots.items()},
        "n_candidates": config.n_candidates,
        "vocab_size": config.vocab_size,
        "max_entities": config.max_entities,
        "kb_size": len(kb.entities),
    }
