"""Tokenization, lexicon matching, and the delexicalise / fill_template /
lexicalise trio, including the canonical API-command template."""

import pytest

from nndialog.corpus import Lexicon, delexicalise, fill_template, lexicalise, normalize, tokenize
from nndialog.corpus.delex import API_CALL_TEMPLATE
from nndialog.errors import LexicalisationError
from nndialog.kb import KBEntity, KnowledgeBase
from nndialog.schema import default_schema


@pytest.fixture(scope="module")
def schema():
    return default_schema()


@pytest.fixture(scope="module")
def kb(schema):
    return KnowledgeBase(
        [
            KBEntity(
                "prezzo",
                {
                    "area": "centre",
                    "food": "italian",
                    "pricerange": "moderate",
                    "rating": 8,
                    "phone": "01223 351234",
                    "address": "21 regent street",
                    "postcode": "cb21ab",
                },
            ),
            KBEntity(
                "golden house",
                {
                    "area": "north",
                    "food": "north american",
                    "pricerange": "cheap",
                    "rating": 5,
                    "phone": "01223 904576",
                    "address": "12 mill road",
                    "postcode": "cb41xy",
                },
            ),
        ],
        schema=schema,
    )


@pytest.fixture(scope="module")
def lexicon(schema, kb):
    return Lexicon.build(schema, kb)


def test_tokenize_lowercases_and_splits_punctuation():
    assert tokenize("Hello, World!") == ["hello", ",", "world", "!"]
    assert tokenize("ok.") == ["ok", "."]
    assert tokenize("  spaced   out  ") == ["spaced", "out"]


def test_normalize_is_idempotent():
    text = "Prezzo is GREAT, really!"
    once = normalize(text)
    assert normalize(once) == once


def test_delexicalise_slot_and_entity_values(lexicon):
    template, bindings = delexicalise(
        "prezzo is a nice italian restaurant in the centre of town", lexicon
    )
    assert " ".join(template) == (
        "<r_name> is a nice <food> restaurant in the <area> of town"
    )
    assert bindings == {"<r_name>": "prezzo", "<food>": "italian", "<area>": "centre"}


def test_longest_match_wins(lexicon):
    # "north american" is a cuisine even though "north" alone is an area
    template, bindings = delexicalise("they serve north american food", lexicon)
    assert " ".join(template) == "they serve <food> food"
    assert bindings["<food>"] == "north american"
    template, bindings = delexicalise("somewhere in the north please", lexicon)
    assert " ".join(template) == "somewhere in the <area> please"
    assert bindings["<area>"] == "north"


def test_multiword_entity_values(lexicon):
    template, bindings = delexicalise(
        "golden house is on 12 mill road , postcode cb41xy", lexicon
    )
    assert " ".join(template) == "<r_name> is on <r_address> , postcode <r_postcode>"
    assert bindings["<r_address>"] == "12 mill road"
    assert bindings["<r_postcode>"] == "cb41xy"


def test_phone_number_delexicalises(lexicon):
    template, bindings = delexicalise("the phone number of prezzo is 01223 351234", lexicon)
    assert " ".join(template) == "the phone number of <r_name> is <r_phone>"
    assert bindings["<r_phone>"] == "01223 351234"


def test_first_binding_wins_for_repeated_placeholder(lexicon):
    template, bindings = delexicalise("italian or french ?", lexicon)
    assert template == ["<food>", "or", "<food>", "?"]
    assert bindings["<food>"] == "italian"


def test_dontcare_never_delexicalised_in_plain_text(lexicon):
    template, bindings = delexicalise("dontcare is not a value here", lexicon)
    assert template[0] == "dontcare"
    assert bindings == {}


def test_api_call_uses_canonical_template(lexicon):
    template, bindings = delexicalise("api_call centre italian moderate", lexicon)
    assert " ".join(template) == API_CALL_TEMPLATE
    assert bindings == {
        "<area>": "centre",
        "<food>": "italian",
        "<pricerange>": "moderate",
    }


def test_api_call_with_dontcare_and_multiword_food(lexicon):
    template, bindings = delexicalise("api_call dontcare north american cheap", lexicon)
    assert " ".join(template) == API_CALL_TEMPLATE
    assert bindings == {
        "<area>": "dontcare",
        "<food>": "north american",
        "<pricerange>": "cheap",
    }


def test_fill_template_inverts_delexicalise(lexicon):
    for text in [
        "prezzo is a nice italian restaurant in the centre of town",
        "the phone number of golden house is 01223 904576",
        "api_call dontcare north american cheap",
        "sorry there is no other restaurant matching your request",
    ]:
        template, bindings = delexicalise(text, lexicon)
        assert fill_template(template, bindings) == normalize(text)


def test_lexicalise_from_belief_and_entity(lexicon, kb):
    entity = kb.entities[0]
    belief = {"area": "centre", "food": "italian", "pricerange": "moderate"}
    template = "<r_name> is a nice <food> restaurant in the <area> of town".split()
    assert (
        lexicalise(template, belief, entity)
        == "prezzo is a nice italian restaurant in the centre of town"
    )
    template = "the phone number of <r_name> is <r_phone>".split()
    assert lexicalise(template, belief, entity) == "the phone number of prezzo is 01223 351234"


def test_lexicalise_plain_template_needs_nothing(lexicon):
    template = "you are welcome , good bye".split()
    assert lexicalise(template, None, None) == "you are welcome , good bye"


def test_lexicalise_rejects_missing_entity():
    with pytest.raises(LexicalisationError, match="no entity"):
        lexicalise("how about <r_name> ?".split(), {}, None)


def test_lexicalise_rejects_dontcare_and_none_belief(kb):
    template = "restaurants in the <area> of town".split()
    with pytest.raises(LexicalisationError, match="<area>"):
        lexicalise(template, {"area": "dontcare"}, kb.entities[0])
    with pytest.raises(LexicalisationError, match="<area>"):
        lexicalise(template, {"area": "none"}, kb.entities[0])
    with pytest.raises(LexicalisationError, match="<area>"):
        lexicalise(template, {}, kb.entities[0])


def test_lexicalise_rejects_missing_attribute():
    bare = KBEntity("noinfo", {})
    with pytest.raises(LexicalisationError, match="lacks attribute"):
        lexicalise("call them on <r_phone>".split(), {}, bare)


def test_slot_reading_beats_entity_reading(schema):
    # a restaurant named after a cuisine must still delexicalise as the slot
    kb = KnowledgeBase(
        [KBEntity("italian", {"area": "north", "food": "thai", "pricerange": "cheap"})],
        schema=schema,
    )
    lex = Lexicon.build(schema, kb)
    template, _ = delexicalise("do you like italian food", lex)
    assert template == ["do", "you", "like", "<food>", "food"]
