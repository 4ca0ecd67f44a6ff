"""Supervision labels: response-template candidates, vocabulary, and the
per-turn label derivation (slot indices, entity pointer, response id, KB
indicator)."""

from collections import Counter
from dataclasses import dataclass

from nndialog.corpus.delex import ENTITY_PLACEHOLDERS, delexicalise, normalize
from nndialog.errors import CorpusError
from nndialog.kb import compute_kb_indicator

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
SILENCE_TOKEN = "<silence>"

UNKNOWN_RESPONSE = -1


@dataclass
class TurnLabels:
    slots: dict  # slot name -> index into the slot's candidate values
    entity: int  # rank in the last KB result, or arity-1 for "none"
    response: int  # candidate template index, UNKNOWN_RESPONSE if novel
    indicator: int  # the binary KB input bit for this turn


def build_candidates(dialogs, lexicon):
    """Deduplicated, lexicographically sorted delexicalised system responses
    (API-call command templates included)."""
    seen = set()
    for dialog in dialogs:
        for turn in dialog.turns:
            template, _ = delexicalise(turn.system, lexicon)
            seen.add(" ".join(template))
    return sorted(seen)


def build_vocab(dialogs, min_count=1):
    """Token -> index over training user utterances; PAD=0, UNK=1, and the
    silence sentinel is always present. Sorted by count desc then token."""
    counts = Counter()
    for dialog in dialogs:
        for turn in dialog.turns:
            counts.update(normalize(turn.user).split())
    vocab = {PAD_TOKEN: 0, UNK_TOKEN: 1, SILENCE_TOKEN: 2}
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    for token, count in ordered:
        if count >= min_count and token not in vocab:
            vocab[token] = len(vocab)
    return vocab


def encode_tokens(tokens, vocab):
    unk = vocab[UNK_TOKEN]
    return [vocab.get(t, unk) for t in tokens]


def _match_entity_rank(bindings, result):
    """Rank of the unique entity in result consistent with every
    entity-attribute binding of the turn; None when no entity matches."""
    wanted = {
        ENTITY_PLACEHOLDERS[ph]: surface
        for ph, surface in bindings.items()
        if ph in ENTITY_PLACEHOLDERS
    }
    if not wanted or result is None:
        return None
    for rank, entity in enumerate(result.entities):
        ok = True
        for attr, surface in wanted.items():
            actual = entity.name if attr == "name" else entity.attrs.get(attr)
            if actual is None or normalize(str(actual)) != surface:
                ok = False
                break
        if ok:
            return rank
    return None


def derive_labels(dialog, candidate_index, lexicon, schema, max_entities=8):
    """Per-turn TurnLabels for one dialog.

    Slot labels carry forward: a slot keeps its last annotated value until an
    annotation changes it; unannotated slots are "none". The entity label is
    the rank of the entity whose name appears in the system response (falling
    back to a unique match on other referenced attributes); the pointer
    advances past every offered (name-mentioning) entity, driving the KB
    indicator for later turns.
    """
    if not dialog.turns:
        raise CorpusError(f"dialog {dialog.id!r} has no turns")
    carry = {slot: "none" for slot in schema.slot_names}
    last_result = None
    pointer = 0
    none_index = max_entities
    out = []
    for turn in dialog.turns:
        if turn.kb_result is not None:
            last_result = turn.kb_result
            pointer = 0
        if turn.state:
            for slot, value in turn.state.items():
                schema.validate(slot, value)
                carry[slot] = value
        indicator = compute_kb_indicator(last_result, pointer)
        template, bindings = delexicalise(turn.system, lexicon)
        response = candidate_index.get(" ".join(template), UNKNOWN_RESPONSE)
        rank = _match_entity_rank(bindings, last_result)
        entity = none_index if rank is None or rank >= max_entities else rank
        out.append(
            TurnLabels(
                slots={slot: schema.index_of(slot, carry[slot]) for slot in schema.slot_names},
                entity=entity,
                response=response,
                indicator=indicator,
            )
        )
        if rank is not None and "<r_name>" in bindings:
            pointer = max(pointer, rank + 1)
    return out
