"""Knowledge base: entity storage, API-call execution, ranked results,
the binary KB indicator, and entity resolution from a pointer distribution.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from nndialog.errors import CorpusError, SchemaError
from nndialog.schema import DONTCARE, INFORMABLE_SLOTS, NONE_VALUE

DEFAULT_MAX_ENTITIES = 8

API_CALL_PREFIX = "api_call"


@dataclass(frozen=True)
class KBEntity:
    name: str
    attrs: dict = field(default_factory=dict)

    def to_json(self):
        return {"name": self.name, "attrs": dict(self.attrs)}


@dataclass(frozen=True)
class ApiCall:
    area: str
    food: str
    pricerange: str

    def command(self):
        return f"{API_CALL_PREFIX} {self.area} {self.food} {self.pricerange}"

    def constraints(self):
        return {"area": self.area, "food": self.food, "pricerange": self.pricerange}


@dataclass(frozen=True)
class KBResult:
    call: ApiCall
    entities: tuple

    @property
    def count(self):
        return len(self.entities)


def format_api_call(belief_argmax):
    """Command string from per-slot argmax values; "none" queries as wildcard."""
    parts = []
    for slot in INFORMABLE_SLOTS:
        value = belief_argmax.get(slot, NONE_VALUE)
        parts.append(DONTCARE if value == NONE_VALUE else value)
    return f"{API_CALL_PREFIX} {parts[0]} {parts[1]} {parts[2]}"


def parse_api_call(command, schema=None):
    """Inverse of format_api_call; multiword values resolved greedily against
    the schema when one is supplied (e.g. "asian oriental")."""
    words = command.strip().split()
    if not words or words[0] != API_CALL_PREFIX:
        raise CorpusError(f"not an API call command: {command!r}")
    rest = words[1:]
    if schema is None:
        if len(rest) != 3:
            raise CorpusError(f"API call needs 3 values: {command!r}")
        return ApiCall(*rest)
    values = []
    pos = 0
    for slot in INFORMABLE_SLOTS:
        matched = None
        allowed = set(schema.values(slot)) | {DONTCARE}
        for take in range(min(4, len(rest) - pos), 0, -1):
            cand = " ".join(rest[pos:pos + take])
            if cand in allowed:
                matched = cand
                pos += take
                break
        if matched is None:
            raise CorpusError(f"cannot parse slot {slot!r} in API call {command!r}")
        values.append(matched)
    if pos != len(rest):
        raise CorpusError(f"trailing tokens in API call {command!r}")
    return ApiCall(*values)


class KnowledgeBase:
    """Immutable entity collection with deterministic ranked retrieval."""

    def __init__(self, entities, schema=None):
        seen = set()
        for e in entities:
            if e.name in seen:
                raise CorpusError(f"duplicate KB entity name {e.name!r}")
            seen.add(e.name)
            if schema is not None:
                for slot in INFORMABLE_SLOTS:
                    value = e.attrs.get(slot)
                    if value is not None:
                        try:
                            schema.validate(slot, value)
                        except SchemaError:
                            raise SchemaError(
                                f"entity {e.name!r}: {value!r} is not a valid {slot}"
                            ) from None
        self.entities = tuple(entities)

    def __len__(self):
        return len(self.entities)

    def execute(self, call, max_entities=DEFAULT_MAX_ENTITIES):
        """Entities matching all non-dontcare constraints, ranked by rating
        descending then name, truncated to the pointer arity."""
        matches = []
        for e in self.entities:
            ok = True
            for slot, want in call.constraints().items():
                if want != DONTCARE and e.attrs.get(slot) != want:
                    ok = False
                    break
            if ok:
                matches.append(e)
        matches.sort(key=lambda e: (-float(e.attrs.get("rating", 0)), e.name))
        return KBResult(call=call, entities=tuple(matches[:max_entities]))

    def to_json(self):
        return [e.to_json() for e in self.entities]


def compute_kb_indicator(result, pointer):
    """1 iff a result exists and an unoffered entity remains at the pointer."""
    if pointer < 0:
        raise ValueError(f"entity pointer must be >= 0, got {pointer}")
    return 1 if result is not None and pointer < result.count else 0


def resolve_entity(result, pointer_dist):
    """Argmax the pointer distribution ([|E|+1], last slot = none).

    Returns the selected entity, or None on abstention or an out-of-range
    index (the model pointed past the retrieved list).
    """
    dist = np.asarray(pointer_dist)
    idx = int(dist.argmax())
    if idx == dist.shape[0] - 1:
        return None
    if result is None or idx >= result.count:
        return None
    return result.entities[idx]


def _entity_from_obj(obj):
    if "attrs" in obj:
        return KBEntity(name=str(obj["name"]), attrs=dict(obj["attrs"]))
    attrs = {k: v for k, v in obj.items() if k != "name"}
    return KBEntity(name=str(obj["name"]), attrs=attrs)


def load_kb(path, schema=None):
    """Load a KB from a JSON array (entities flat or {name, attrs}) or a
    CSV file with a header row (name + attribute columns)."""
    path = str(path)
    if path.endswith(".csv"):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "name" not in reader.fieldnames:
                raise CorpusError(f"KB CSV needs a header with a 'name' column: {path}")
            rows = [_entity_from_obj(row) for row in reader]
        return KnowledgeBase(rows, schema=schema)
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except ValueError as exc:
            raise CorpusError(f"KB JSON parse error in {path}: {exc}") from exc
    if not isinstance(data, list):
        raise CorpusError(f"KB JSON must be an array of entities: {path}")
    return KnowledgeBase([_entity_from_obj(obj) for obj in data], schema=schema)


def save_kb(path, kb):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(kb.to_json(), fh, indent=1, sort_keys=True)
        fh.write("\n")
