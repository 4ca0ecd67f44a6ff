"""Rule-based restaurant KB and dialog generator.

A scripted user with a sampled goal talks to a deterministic oracle policy:
optional greeting, constraint filling (the system requests missing slots in
a fixed order), an API call annotated with the belief state, a silence
exchange delivering the KB result, entity offers with possible rejections,
one constraint revision after a no-match, attribute requests, goodbye.
Every system utterance comes from a closed template set, every offer names
a real ranked entity, and every slot value is annotated, so labels derive
with zero unknown responses by construction.
"""

import numpy as np

from nndialog.corpus.dialogs import SILENCE, Dialog, Turn
from nndialog.errors import ConfigError
from nndialog.kb import ApiCall, KBEntity, KnowledgeBase
from nndialog.schema import DONTCARE, default_schema

ORDER = ("area", "food", "pricerange")

FOOD_SUBSET = (
    "italian", "chinese", "indian", "thai", "french", "spanish",
    "turkish", "japanese", "korean", "mexican", "portuguese", "vietnamese",
)

ADJECTIVES = (
    "golden", "silver", "royal", "old", "little", "happy", "grand", "blue",
    "red", "green", "white", "black", "lucky", "cosy", "velvet", "ivory",
    "sunny", "river", "corner", "garden",
)

NOUNS = (
    "fork", "spoon", "table", "kitchen", "house", "lantern", "rose",
    "crown", "anchor", "bridge", "castle", "harbour", "lion", "swan",
    "oak", "willow", "star", "moon", "pearl", "dragon",
)

STREETS = (
    "mill road", "king street", "regent street", "station road",
    "bridge street", "market square", "castle hill", "queen anne terrace",
    "hills road", "magdalene street",
)

GREET_USER = ("hello", "hi there", "good morning")
GREET_SYSTEM = "hello , what can i help you with today ?"

INITIAL = {
    (): (
        "i am looking for a restaurant",
        "i want to find a restaurant",
        "can you find me a restaurant",
    ),
    ("area",): (
        "i want a restaurant in the {area}",
        "somewhere in the {area} please",
        "find me a place in the {area}",
    ),
    ("food",): (
        "i would like {food} food",
        "im looking for {food} food",
        "do you have {food} restaurants",
    ),
    ("pricerange",): (
        "i am looking for a {pricerange} restaurant",
        "something {pricerange} please",
        "i want a {pricerange} place",
    ),
    ("area", "food"): (
        "i want {food} food in the {area}",
        "im looking for {food} food in the {area} part of town",
    ),
    ("area", "pricerange"): (
        "a {pricerange} restaurant in the {area}",
        "im looking for a {pricerange} place in the {area}",
    ),
    ("food", "pricerange"): (
        "i would like a {pricerange} {food} restaurant",
        "{pricerange} {food} food please",
    ),
    ("area", "food", "pricerange"): (
        "i want a {pricerange} {food} restaurant in the {area}",
        "{food} food in the {area} {pricerange} please",
    ),
}

REQUEST = {
    "area": "what part of town do you have in mind ?",
    "food": "what kind of food would you like ?",
    "pricerange": "what price range are you looking for ?",
}

REPLY = {
    "area": ("{area}", "in the {area}", "the {area} part of town"),
    "food": ("{food}", "{food} food", "i would like {food}"),
    "pricerange": ("{pricerange}", "{pricerange} please", "something {pricerange}"),
}

DONTCARE_REPLIES = ("it does not matter", "i dont care", "any will do", "anything is fine")

OFFER = {
    (False, False, False): "{name} is a nice restaurant",
    (True, False, False): "{name} is a nice restaurant in the {area} of town",
    (False, True, False): "{name} is a nice restaurant serving {food} food",
    (False, False, True): "{name} is a nice restaurant in the {pricerange} price range",
    (True, True, False): "{name} is a nice restaurant in the {area} of town serving {food} food",
    (True, False, True): "{name} is a nice {pricerange} restaurant in the {area} of town",
    (False, True, True): "{name} is a nice {pricerange} restaurant serving {food} food",
    (True, True, True): (
        "{name} is a nice {pricerange} restaurant in the {area} of town serving {food} food"
    ),
}

SECOND_OFFER = "how about {name} ?"
NO_MATCH = "i am sorry but there is no restaurant matching your request"
NO_OTHER = "sorry there is no other restaurant matching your request"

REJECT = ("is there anything else ?", "what else is there ?", "anything else ?")

ATTR_REQUEST = {
    "phone": ("what is the phone number ?", "can i get the phone number ?"),
    "address": ("what is the address ?", "may i have the address ?"),
    "postcode": ("what is the postcode ?", "can i get the postcode ?"),
}

ATTR_ANSWER = {
    "phone": "the phone number of {name} is {value}",
    "address": "{name} is on {value}",
    "postcode": "the postcode of {name} is {value}",
}

BYE_USER = ("thank you good bye", "thank you , good bye", "thanks , bye")
BYE_SYSTEM = "you are welcome , good bye"


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def generate_kb(seed=0, n_entities=60, schema=None):
    """Deterministic restaurant KB; unique names, phones, addresses,
    postcodes; attributes drawn from the slot schema."""
    schema = schema or default_schema()
    max_names = len(ADJECTIVES) * len(NOUNS)
    if n_entities > max_names:
        raise ConfigError(f"cannot generate more than {max_names} unique names")
    rng = np.random.default_rng(seed)
    name_idx = rng.permutation(max_names)[:n_entities]
    addr_idx = rng.permutation(97 * len(STREETS))[:n_entities]
    areas = schema.domain_values("area")
    prices = schema.domain_values("pricerange")
    phone_base = int(rng.integers(100000, 800000))
    entities = []
    for i in range(n_entities):
        name = f"{ADJECTIVES[name_idx[i] // len(NOUNS)]} {NOUNS[name_idx[i] % len(NOUNS)]}"
        entities.append(
            KBEntity(
                name=name,
                attrs={
                    "area": _pick(rng, areas),
                    "food": _pick(rng, FOOD_SUBSET),
                    "pricerange": _pick(rng, prices),
                    "rating": int(rng.integers(1, 10)),
                    "phone": f"01223 {phone_base + 911 * i}",
                    "address": f"{1 + addr_idx[i] // len(STREETS)} {STREETS[addr_idx[i] % len(STREETS)]}",
                    "postcode": f"cb{10 + i}qr",
                },
            )
        )
    return KnowledgeBase(entities, schema=schema)


def _sample_goal(rng, kb, schema):
    adopt = None
    if len(kb) and rng.random() < 0.7:
        adopt = kb.entities[int(rng.integers(len(kb)))]
    goal = {}
    pools = {
        "area": schema.domain_values("area"),
        "food": FOOD_SUBSET,
        "pricerange": schema.domain_values("pricerange"),
    }
    for slot in ORDER:
        if rng.random() < 0.2:
            goal[slot] = DONTCARE
        elif adopt is not None:
            goal[slot] = adopt.attrs[slot]
        else:
            goal[slot] = _pick(rng, pools[slot])
    return goal


def _pick_revision(rng, kb, goal, max_entities):
    """Revise one concrete slot so the new query has matches when possible."""
    concrete = [s for s in ORDER if goal[s] != DONTCARE]
    slot = _pick(rng, concrete)
    viable = []
    seen = set()
    for entity in kb.entities:
        value = entity.attrs[slot]
        if value == goal[slot] or value in seen:
            continue
        seen.add(value)
        trial = dict(goal)
        trial[slot] = value
        if kb.execute(ApiCall(*(trial[s] for s in ORDER)), max_entities).count > 0:
            viable.append(value)
    if viable:
        return slot, sorted(viable)[int(rng.integers(len(viable)))]
    return slot, DONTCARE


def _revision_utterance(rng, slot, value):
    if value == DONTCARE:
        return {
            "area": "any area will do",
            "food": "any kind of food will do",
            "pricerange": "any price is fine",
        }[slot]
    return {
        "area": f"how about the {value} ?",
        "food": f"how about {value} food ?",
        "pricerange": f"how about something {value} ?",
    }[slot]


def _offer_text(goal, entity):
    combo = tuple(goal[s] != DONTCARE for s in ORDER)
    return OFFER[combo].format(name=entity.name, **goal)


def _gen_dialog(rng, kb, schema, max_entities, dialog_id):
    goal = _sample_goal(rng, kb, schema)
    turns = []
    if rng.random() < 0.5:
        turns.append(Turn(user=_pick(rng, GREET_USER), system=GREET_SYSTEM))

    concrete = [s for s in ORDER if goal[s] != DONTCARE]
    mention = tuple(s for s in concrete if rng.random() < 0.6)
    user_text = _pick(rng, INITIAL[mention]).format(**goal)
    conveyed = set(mention)
    newly = list(mention)
    call = None
    while call is None:
        state = {s: goal[s] for s in newly} or None
        missing = [s for s in ORDER if s not in conveyed]
        if missing:
            slot = missing[0]
            turns.append(Turn(user=user_text, system=REQUEST[slot], state=state))
            if goal[slot] == DONTCARE:
                user_text = _pick(rng, DONTCARE_REPLIES)
            else:
                user_text = _pick(rng, REPLY[slot]).format(**goal)
            conveyed.add(slot)
            newly = [slot]
        else:
            call = ApiCall(*(goal[s] for s in ORDER))
            turns.append(Turn(user=user_text, system=call.command(), state=state, api_call=True))

    result = kb.execute(call, max_entities)
    offered = None
    n_offered = 0
    if result.count > 0:
        offered = result.entities[0]
        n_offered = 1
        turns.append(Turn(user=SILENCE, system=_offer_text(goal, offered), kb_result=result))
        reject_p = 0.25
        while rng.random() < reject_p:
            reject_p = 0.15
            if n_offered < result.count:
                offered = result.entities[n_offered]
                n_offered += 1
                turns.append(
                    Turn(user=_pick(rng, REJECT), system=SECOND_OFFER.format(name=offered.name))
                )
            else:
                turns.append(Turn(user=_pick(rng, REJECT), system=NO_OTHER))
                offered = None
                break
    else:
        turns.append(Turn(user=SILENCE, system=NO_MATCH, kb_result=result))
        if rng.random() < 0.8 and len(kb):
            slot, value = _pick_revision(rng, kb, goal, max_entities)
            goal[slot] = value
            call = ApiCall(*(goal[s] for s in ORDER))
            turns.append(
                Turn(
                    user=_revision_utterance(rng, slot, value),
                    system=call.command(),
                    state={slot: value},
                    api_call=True,
                )
            )
            result = kb.execute(call, max_entities)
            if result.count > 0:
                offered = result.entities[0]
                n_offered = 1
                turns.append(
                    Turn(user=SILENCE, system=_offer_text(goal, offered), kb_result=result)
                )
            else:
                turns.append(Turn(user=SILENCE, system=NO_MATCH, kb_result=result))

    if offered is not None:
        for attr in ("phone", "address", "postcode"):
            if rng.random() < 0.4:
                turns.append(
                    Turn(
                        user=_pick(rng, ATTR_REQUEST[attr]),
                        system=ATTR_ANSWER[attr].format(
                            name=offered.name, value=offered.attrs[attr]
                        ),
                    )
                )

    turns.append(Turn(user=_pick(rng, BYE_USER), system=BYE_SYSTEM))
    return Dialog(id=dialog_id, turns=turns)


def generate_synthetic_corpus(kb, n_dialogs, seed, schema=None, max_entities=8):
    """n_dialogs rule-generated dialogs; identical (kb, n, seed) inputs
    produce an identical corpus."""
    schema = schema or default_schema()
    rng = np.random.default_rng(seed)
    return [
        _gen_dialog(rng, kb, schema, max_entities, f"syn-{seed}-{i:05d}")
        for i in range(n_dialogs)
    ]
