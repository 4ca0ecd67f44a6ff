"""Tokenization, the surface-form lexicon, and template (de)lexicalisation.

Tokenization is lowercase, punctuation split from words, whitespace split.
Delexicalisation replaces known surface forms with placeholders by
longest-match scanning left to right; slot placeholders are <area>,
<food>, <pricerange>, entity-attribute placeholders are <r_name>,
<r_phone>, <r_address>, <r_postcode>. "dontcare" and "none" are slot
*states*, not surface forms, and are never replaced.

API-call commands are special-cased to the single canonical template
"api_call <area> <food> <pricerange>" with position-based bindings, since
their literal "dontcare" arguments have no lexicon entry.
"""

import re

from nndialog.errors import LexicalisationError
from nndialog.kb import API_CALL_PREFIX
from nndialog.schema import DONTCARE, ENTITY_ATTRIBUTES, INFORMABLE_SLOTS, NONE_VALUE

SLOT_PLACEHOLDERS = {f"<{slot}>": slot for slot in INFORMABLE_SLOTS}
ENTITY_PLACEHOLDERS = {f"<r_{attr}>": attr for attr in ENTITY_ATTRIBUTES}

API_CALL_TEMPLATE = "api_call <area> <food> <pricerange>"

_PUNCT = re.compile(r"([.,!?;:])")


def tokenize(text):
    return _PUNCT.sub(r" \1 ", text.lower()).split()


def normalize(text):
    return " ".join(tokenize(text))


class Lexicon:
    """Maps tokenized surface forms to placeholders.

    Slot values map to their slot placeholder; KB entity attribute values
    map to <r_*> placeholders. When one surface would serve both, the slot
    reading wins (belief supervision depends on it).
    """

    def __init__(self):
        self._by_slot = {slot: {} for slot in INFORMABLE_SLOTS}  # slot -> {tokens: surface}
        self._table = {}  # tokens tuple -> placeholder
        self.max_len = 1

    def add_slot_value(self, slot, surface):
        tokens = tuple(tokenize(surface))
        if not tokens or surface in (DONTCARE, NONE_VALUE):
            return
        self._by_slot[slot][tokens] = surface
        self._table[tokens] = f"<{slot}>"
        self.max_len = max(self.max_len, len(tokens))

    def add_entity_value(self, attr, surface):
        tokens = tuple(tokenize(str(surface)))
        if not tokens:
            return
        # slot readings take precedence over entity-attribute readings
        self._table.setdefault(tokens, f"<r_{attr}>")
        self.max_len = max(self.max_len, len(tokens))

    def lookup(self, tokens):
        return self._table.get(tuple(tokens))

    def match_slot(self, tokens, pos, slot):
        """Greedy match of a slot value (or the literal dontcare) at pos;
        returns (surface, token_count) or None."""
        if tokens[pos] == DONTCARE:
            return DONTCARE, 1
        for take in range(min(self.max_len, len(tokens) - pos), 0, -1):
            surface = self._by_slot[slot].get(tuple(tokens[pos:pos + take]))
            if surface is not None:
                return surface, take
        return None

    @classmethod
    def build(cls, schema, kb=None):
        lex = cls()
        for slot in INFORMABLE_SLOTS:
            for value in schema.domain_values(slot):
                lex.add_slot_value(slot, value)
        if kb is not None:
            for entity in kb.entities:
                lex.add_entity_value("name", entity.name)
                for attr in ENTITY_ATTRIBUTES:
                    if attr != "name" and attr in entity.attrs:
                        lex.add_entity_value(attr, entity.attrs[attr])
        return lex


def _delex_api_call(tokens, lexicon):
    template = API_CALL_TEMPLATE.split()
    bindings = {}
    pos = 1
    for slot in INFORMABLE_SLOTS:
        hit = lexicon.match_slot(tokens, pos, slot) if pos < len(tokens) else None
        if hit is None:
            # unknown value: pass the raw token through as the binding
            surface, take = tokens[pos] if pos < len(tokens) else "", 1
        else:
            surface, take = hit
        bindings[f"<{slot}>"] = surface
        pos += take
    return template, bindings


def delexicalise(utterance, lexicon):
    """Returns (template token list, bindings placeholder -> surface)."""
    tokens = tokenize(utterance)
    if tokens and tokens[0] == API_CALL_PREFIX:
        return _delex_api_call(tokens, lexicon)
    out = []
    bindings = {}
    pos = 0
    while pos < len(tokens):
        hit = None
        for take in range(min(lexicon.max_len, len(tokens) - pos), 0, -1):
            placeholder = lexicon.lookup(tokens[pos:pos + take])
            if placeholder is not None:
                hit = (placeholder, take)
                break
        if hit is None:
            out.append(tokens[pos])
            pos += 1
        else:
            placeholder, take = hit
            bindings.setdefault(placeholder, " ".join(tokens[pos:pos + take]))
            out.append(placeholder)
            pos += take
    return out, bindings


def fill_template(template_tokens, bindings):
    """Inverse of delexicalise for recorded bindings."""
    out = []
    for token in template_tokens:
        if token in bindings:
            out.append(bindings[token])
        else:
            out.append(token)
    return " ".join(out)


def lexicalise(template_tokens, belief_argmax, entity):
    """Fill a template from predicted belief argmax values and the resolved
    entity. Raises LexicalisationError when a placeholder has no usable
    filler (no entity selected, or the belief says dontcare/none)."""
    out = []
    for token in template_tokens:
        if token in SLOT_PLACEHOLDERS:
            slot = SLOT_PLACEHOLDERS[token]
            value = (belief_argmax or {}).get(slot)
            if value is None or value in (DONTCARE, NONE_VALUE):
                raise LexicalisationError(f"no concrete belief value for {token}")
            out.append(value)
        elif token in ENTITY_PLACEHOLDERS:
            if entity is None:
                raise LexicalisationError(f"no entity selected to fill {token}")
            attr = ENTITY_PLACEHOLDERS[token]
            value = entity.name if attr == "name" else entity.attrs.get(attr)
            if value is None:
                raise LexicalisationError(f"entity {entity.name!r} lacks attribute {attr!r}")
            out.append(str(value))
        else:
            out.append(token)
    return normalize(" ".join(out))
