"""Restaurant-domain slot schema.

Three informable slots with closed value sets (5 areas, 91 cuisines, 3
price bands). Every slot's candidate list is extended with "dontcare"
(user accepts anything) and "none" (not specified yet), in that order,
after the sorted domain values.
"""

from dataclasses import dataclass

from nndialog.errors import SchemaError

DONTCARE = "dontcare"
NONE_VALUE = "none"

AREAS = (
    "centre", "east", "north", "south", "west",
)

FOODS = (
    "afghan", "african", "afternoon tea", "asian oriental", "australasian",
    "australian", "austrian", "barbeque", "basque", "belgian", "bistro",
    "brazilian", "british", "canapes", "cantonese", "caribbean", "catalan",
    "chinese", "christmas", "corsica", "creative", "crossover", "cuban",
    "danish", "eastern european", "english", "eritrean", "european",
    "french", "fusion", "gastropub", "german", "greek", "halal",
    "hungarian", "indian", "indonesian", "international", "irish",
    "italian", "jamaican", "japanese", "korean", "kosher", "latin american",
    "lebanese", "light bites", "malaysian", "mediterranean", "mexican",
    "middle eastern", "modern american", "modern eclectic",
    "modern european", "modern global", "molecular gastronomy", "moroccan",
    "new zealand", "north african", "north american", "north indian",
    "northern european", "panasian", "persian", "polish", "polynesian",
    "portuguese", "romanian", "russian", "scandinavian", "scottish",
    "seafood", "singaporean", "south african", "south indian", "spanish",
    "sri lankan", "steakhouse", "swedish", "swiss", "thai", "the americas",
    "traditional", "turkish", "tuscan", "unusual", "vegetarian",
    "venetian", "vietnamese", "welsh", "world",
)

PRICERANGES = ("cheap", "expensive", "moderate")

INFORMABLE_SLOTS = ("area", "food", "pricerange")

# Entity attributes a template may reference via <r_...> placeholders.
ENTITY_ATTRIBUTES = ("name", "phone", "address", "postcode")


@dataclass(frozen=True)
class SlotSchema:
    """Slot name -> full candidate value tuple (domain values + specials)."""

    slots: dict

    def __post_init__(self):
        for slot, values in self.slots.items():
            if DONTCARE not in values or NONE_VALUE not in values:
                raise SchemaError(f"slot {slot!r} candidates must include specials")
            if len(set(values)) != len(values):
                raise SchemaError(f"slot {slot!r} has duplicate candidate values")

    @property
    def slot_names(self):
        return tuple(self.slots)

    def values(self, slot):
        try:
            return self.slots[slot]
        except KeyError:
            raise SchemaError(f"unknown slot {slot!r}") from None

    def index_of(self, slot, value):
        values = self.values(slot)
        try:
            return values.index(value)
        except ValueError:
            raise SchemaError(f"value {value!r} not in slot {slot!r}") from None

    def validate(self, slot, value):
        self.index_of(slot, value)

    def arity(self, slot):
        return len(self.values(slot))

    def domain_values(self, slot):
        """Candidates minus the dontcare/none specials."""
        return tuple(v for v in self.values(slot) if v not in (DONTCARE, NONE_VALUE))

    def to_json(self):
        return {slot: list(values) for slot, values in self.slots.items()}

    @classmethod
    def from_json(cls, obj):
        return cls({slot: tuple(values) for slot, values in obj.items()})


def default_schema():
    return SlotSchema(
        {
            "area": tuple(sorted(AREAS)) + (DONTCARE, NONE_VALUE),
            "food": tuple(sorted(FOODS)) + (DONTCARE, NONE_VALUE),
            "pricerange": tuple(sorted(PRICERANGES)) + (DONTCARE, NONE_VALUE),
        }
    )
