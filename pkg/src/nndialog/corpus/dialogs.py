"""Dialog corpus types and the JSONL / bAbI-text readers and writer.

A Turn is one full exchange: the user utterance and the system response,
plus optional belief annotation, an API-call marker on the response, and
the KB result delivered with the user side of the exchange (which happens
exactly when the previous system turn was an API call).

Canonical JSONL: one dialog per line,
  {"id": ..., "turns": [{"speaker": "user"|"system", "text": ...,
                         "api_call"?: true, "state"?: {slot: value},
                         "kb_result"?: [{"name":..., "attrs": {...}}]}]}
Speakers strictly alternate user, system, user, system, ...; "state" and
"api_call" live on system entries, "kb_result" on user entries.
"""

import json
import logging
from dataclasses import dataclass, field

from nndialog.errors import CorpusError, SchemaError, StructureError
from nndialog.kb import API_CALL_PREFIX, KBEntity, KBResult, parse_api_call

log = logging.getLogger("nndialog.corpus")

SILENCE = "<silence>"


@dataclass
class Turn:
    user: str
    system: str
    state: dict = None
    api_call: bool = False
    kb_result: KBResult = None


@dataclass
class Dialog:
    id: str
    turns: list = field(default_factory=list)


def _validate_state(state, schema, where):
    for slot, value in state.items():
        try:
            schema.validate(slot, value)
        except SchemaError as exc:
            raise SchemaError(f"{where}: {exc}") from None


def _dialog_from_obj(obj, schema, where):
    raw_turns = obj.get("turns")
    if not isinstance(raw_turns, list) or len(raw_turns) % 2 != 0:
        raise CorpusError(f"{where}: turns must be an even-length list")
    turns = []
    prev_system_api = False
    prev_system_text = ""
    for i in range(0, len(raw_turns), 2):
        u, s = raw_turns[i], raw_turns[i + 1]
        if u.get("speaker") != "user" or s.get("speaker") != "system":
            raise CorpusError(f"{where}: speakers must alternate user/system")
        kb_result = None
        if "kb_result" in u:
            if not prev_system_api:
                raise StructureError(
                    f"{where}: KB result with no preceding API call (exchange {i // 2})"
                )
            call = parse_api_call(prev_system_text, schema=schema)
            kb_result = KBResult(
                call=call,
                entities=tuple(
                    KBEntity(str(e["name"]), dict(e.get("attrs", {})))
                    for e in u["kb_result"]
                ),
            )
        state = s.get("state")
        if state is not None:
            state = dict(state)
            _validate_state(state, schema, where)
        is_api = bool(s.get("api_call", False))
        text = str(s.get("text", ""))
        if is_api and not text.startswith(API_CALL_PREFIX):
            raise CorpusError(f"{where}: api_call turn does not start with the command prefix")
        turns.append(
            Turn(
                user=str(u.get("text", "")),
                system=text,
                state=state,
                api_call=is_api,
                kb_result=kb_result,
            )
        )
        prev_system_api = is_api
        prev_system_text = text
    return Dialog(id=str(obj.get("id", where)), turns=turns)


def _parse_jsonl(path, schema, lenient):
    dialogs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
                dialogs.append(_dialog_from_obj(obj, schema, where))
            except (CorpusError, SchemaError, ValueError, KeyError, TypeError) as exc:
                if not lenient:
                    raise
                log.warning("skipping malformed dialog at %s: %s", where, exc)
    return dialogs


_BABI_ATTR_MAP = {
    "r_cuisine": "food",
    "r_location": "area",
    "r_price": "pricerange",
    "r_rating": "rating",
    "r_phone": "phone",
    "r_address": "address",
    "r_post_code": "postcode",
    "r_number": "number",
}


def _flush_babi_dialog(lines, schema, where, lenient):
    """lines: raw (text-after-line-number) strings of one dialog block."""
    turns = []
    pending = {}  # entity name -> attrs, in insertion order
    prev_api_text = ""
    for text in lines:
        if "\t" in text:
            user, system = text.split("\t", 1)
            user = user.strip().lower().replace("<silence>", SILENCE)
            system = system.strip().lower()
            kb_result = None
            if pending:
                call = parse_api_call(prev_api_text, schema=schema)
                kb_result = KBResult(
                    call=call,
                    entities=tuple(KBEntity(n, a) for n, a in pending.items()),
                )
                pending = {}
            is_api = system.startswith(API_CALL_PREFIX)
            turns.append(
                Turn(user=user, system=system, api_call=is_api, kb_result=kb_result)
            )
            if is_api:
                prev_api_text = system
        else:
            parts = text.strip().lower().split()
            # fact lines read "<name> r_<attr> <value>"; names may span tokens
            attr_pos = next(
                (i for i, tok in enumerate(parts[1:], start=1) if tok.startswith("r_")), 0
            )
            if attr_pos == 0 or attr_pos == len(parts) - 1:
                raise CorpusError(f"{where}: unparseable KB fact line {text!r}")
            name = " ".join(parts[:attr_pos])
            attr = parts[attr_pos]
            value = " ".join(parts[attr_pos + 1:])
            if not prev_api_text:
                raise StructureError(f"{where}: KB facts with no preceding API call")
            pending.setdefault(name, {})[_BABI_ATTR_MAP.get(attr, attr)] = value
    if pending:
        raise StructureError(f"{where}: KB facts not followed by any exchange")
    return Dialog(id=where, turns=turns)


def _parse_babi(path, schema, lenient):
    dialogs = []
    block = []
    block_start = 1
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    lines.append("")  # terminate the final block
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.rstrip("\n")
        if not stripped.strip():
            if block:
                where = f"{path}:{block_start}"
                try:
                    dialogs.append(_flush_babi_dialog(block, schema, where, lenient))
                except (CorpusError, SchemaError, StructureError) as exc:
                    if not lenient:
                        raise
                    log.warning("skipping malformed dialog at %s: %s", where, exc)
                block = []
            block_start = lineno + 1
            continue
        # each line starts with an in-dialog line number
        head, _, rest = stripped.partition(" ")
        if not head.isdigit():
            raise CorpusError(f"{path}:{lineno}: expected a line number prefix")
        block.append(rest)
    return dialogs


def parse_corpus(path, schema, fmt="jsonl", lenient=False):
    """Read a corpus file; fmt is "jsonl" or "babi". Malformed dialogs raise,
    or are logged with line numbers and skipped when lenient=True."""
    if fmt == "jsonl":
        return _parse_jsonl(path, schema, lenient)
    if fmt == "babi":
        return _parse_babi(path, schema, lenient)
    raise CorpusError(f"unknown corpus format {fmt!r}")


def dialog_to_obj(dialog):
    raw_turns = []
    for turn in dialog.turns:
        user = {"speaker": "user", "text": turn.user}
        if turn.kb_result is not None:
            user["kb_result"] = [e.to_json() for e in turn.kb_result.entities]
        system = {"speaker": "system", "text": turn.system}
        if turn.api_call:
            system["api_call"] = True
        if turn.state is not None:
            system["state"] = dict(turn.state)
        raw_turns.append(user)
        raw_turns.append(system)
    return {"id": dialog.id, "turns": raw_turns}


def serialize_corpus(path, dialogs):
    """Write canonical JSONL; byte-deterministic for a given dialog list."""
    with open(path, "w", encoding="utf-8") as fh:
        for dialog in dialogs:
            fh.write(json.dumps(dialog_to_obj(dialog), sort_keys=True, separators=(",", ":")))
            fh.write("\n")
