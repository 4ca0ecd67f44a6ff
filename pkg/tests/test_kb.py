"""Slot schema and knowledge base: arities, API calls, ranked retrieval,
indicator and pointer semantics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_kb_filter

from nndialog.errors import CorpusError, SchemaError
from nndialog.kb import (
    ApiCall,
    KBEntity,
    KBResult,
    KnowledgeBase,
    compute_kb_indicator,
    format_api_call,
    load_kb,
    parse_api_call,
    resolve_entity,
    save_kb,
)
from nndialog.schema import DONTCARE, NONE_VALUE, default_schema

FIXTURE_ROWS = [
    {"name": "prezzo", "area": "west", "food": "italian", "pricerange": "moderate", "rating": 3},
    {"name": "roma", "area": "west", "food": "italian", "pricerange": "cheap", "rating": 5},
    {"name": "luca", "area": "centre", "food": "italian", "pricerange": "expensive", "rating": 4},
    {"name": "golden wok", "area": "west", "food": "chinese", "pricerange": "cheap", "rating": 4},
    {"name": "taj", "area": "east", "food": "indian", "pricerange": "moderate", "rating": 5},
    {"name": "sala thong", "area": "west", "food": "thai", "pricerange": "expensive", "rating": 2},
    {"name": "pasta house", "area": "west", "food": "italian", "pricerange": "cheap", "rating": 3},
    {"name": "curry prince", "area": "east", "food": "indian", "pricerange": "cheap", "rating": 1},
    {"name": "bangkok city", "area": "centre", "food": "thai", "pricerange": "expensive", "rating": 4},
    {"name": "anatolia", "area": "centre", "food": "turkish", "pricerange": "moderate", "rating": 3},
]


def _fixture_kb():
    return KnowledgeBase(
        [KBEntity(r["name"], {k: v for k, v in r.items() if k != "name"}) for r in FIXTURE_ROWS],
        schema=default_schema(),
    )


# ----------------------------------------------------------------- schema


def test_schema_arities_match_domain_counts():
    schema = default_schema()
    assert schema.arity("area") == 5 + 2
    assert schema.arity("food") == 91 + 2
    assert schema.arity("pricerange") == 3 + 2
    for slot in schema.slot_names:
        assert DONTCARE in schema.values(slot)
        assert NONE_VALUE in schema.values(slot)


def test_schema_rejects_unknown_slot_and_value():
    schema = default_schema()
    with pytest.raises(SchemaError):
        schema.values("color")
    with pytest.raises(SchemaError):
        schema.index_of("food", "plutonium")


def test_schema_index_roundtrip():
    schema = default_schema()
    for slot in schema.slot_names:
        for value in schema.values(slot):
            assert schema.values(slot)[schema.index_of(slot, value)] == value


def test_schema_json_roundtrip():
    schema = default_schema()
    again = type(schema).from_json(schema.to_json())
    assert again.slots == schema.slots


# ---------------------------------------------------------------- api call


def test_format_api_call_examples():
    assert (
        format_api_call({"area": "west", "food": "italian", "pricerange": "dontcare"})
        == "api_call west italian dontcare"
    )
    assert (
        format_api_call({"area": "dontcare", "food": "dontcare", "pricerange": "dontcare"})
        == "api_call dontcare dontcare dontcare"
    )
    assert (
        format_api_call({"area": "south", "food": "italian", "pricerange": "expensive"})
        == "api_call south italian expensive"
    )


def test_format_api_call_maps_none_to_dontcare():
    assert (
        format_api_call({"area": "none", "food": "italian", "pricerange": "none"})
        == "api_call dontcare italian dontcare"
    )


def test_parse_api_call_roundtrip():
    call = ApiCall("west", "italian", "dontcare")
    assert parse_api_call(call.command()) == call


def test_parse_api_call_multiword_food_with_schema():
    schema = default_schema()
    call = parse_api_call("api_call north asian oriental cheap", schema=schema)
    assert call == ApiCall("north", "asian oriental", "cheap")


def test_parse_api_call_rejects_garbage():
    with pytest.raises(CorpusError):
        parse_api_call("hello world")
    with pytest.raises(CorpusError):
        parse_api_call("api_call west italian")
    with pytest.raises(CorpusError):
        parse_api_call("api_call west italian cheap extra", schema=default_schema())


# ----------------------------------------------------------------- execute


def test_execute_empty_kb():
    kb = KnowledgeBase([])
    result = kb.execute(ApiCall("west", "italian", DONTCARE))
    assert result.count == 0 and result.entities == ()


def test_execute_all_dontcare_returns_truncated_kb():
    kb = _fixture_kb()
    result = kb.execute(ApiCall(DONTCARE, DONTCARE, DONTCARE), max_entities=8)
    assert result.count == 8
    ratings = [e.attrs["rating"] for e in result.entities]
    assert ratings == sorted(ratings, reverse=True)


def test_execute_fixture_matches_brute_force_oracle():
    kb = _fixture_kb()
    call = ApiCall("west", "italian", DONTCARE)
    result = kb.execute(call)
    expected = brute_force_kb_filter(FIXTURE_ROWS, call.constraints())
    assert [e.name for e in result.entities] == expected
    assert expected == ["roma", "pasta house", "prezzo"]  # committed subset


def test_execute_truncates_to_pointer_arity():
    kb = _fixture_kb()
    result = kb.execute(ApiCall("west", "italian", DONTCARE), max_entities=2)
    assert [e.name for e in result.entities] == ["roma", "pasta house"]
    assert result.count == 2


def test_execute_deterministic():
    kb = _fixture_kb()
    call = ApiCall(DONTCARE, "italian", DONTCARE)
    assert kb.execute(call) == kb.execute(call)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["centre", "east", "north", "south", "west"]),
            st.sampled_from(["italian", "chinese", "indian"]),
            st.sampled_from(["cheap", "moderate", "expensive"]),
            st.integers(0, 5),
        ),
        max_size=12,
    ),
    st.sampled_from(["centre", "west"]),
)
def test_execute_monotone_under_added_constraint(rows, area):
    entities = [
        KBEntity(f"e{i}", {"area": a, "food": f, "pricerange": p, "rating": r})
        for i, (a, f, p, r) in enumerate(rows)
    ]
    kb = KnowledgeBase(entities)
    loose = kb.execute(ApiCall(DONTCARE, "italian", DONTCARE), max_entities=100)
    tight = kb.execute(ApiCall(area, "italian", DONTCARE), max_entities=100)
    assert tight.count <= loose.count
    assert {e.name for e in tight.entities} <= {e.name for e in loose.entities}


def test_duplicate_entity_names_rejected():
    with pytest.raises(CorpusError):
        KnowledgeBase([KBEntity("x", {}), KBEntity("x", {})])


# --------------------------------------------------------------- indicator


def test_indicator_no_result_is_zero():
    assert compute_kb_indicator(None, 0) == 0


def test_indicator_pointer_dynamics():
    result = KBResult(ApiCall(DONTCARE, DONTCARE, DONTCARE), tuple(KBEntity(f"e{i}") for i in range(3)))
    assert compute_kb_indicator(result, 0) == 1
    assert compute_kb_indicator(result, 2) == 1
    assert compute_kb_indicator(result, 3) == 0
    assert compute_kb_indicator(result, 7) == 0
    with pytest.raises(ValueError):
        compute_kb_indicator(result, -1)


# ----------------------------------------------------------------- resolve


def _result_of(n):
    return KBResult(ApiCall(DONTCARE, DONTCARE, DONTCARE), tuple(KBEntity(f"e{i}") for i in range(n)))


def test_resolve_one_hot_rank_zero():
    dist = np.zeros(9)
    dist[0] = 1.0
    assert resolve_entity(_result_of(3), dist).name == "e0"


def test_resolve_none_slot_abstains():
    dist = np.zeros(9)
    dist[8] = 1.0
    assert resolve_entity(_result_of(3), dist) is None


def test_resolve_out_of_range_abstains():
    dist = np.zeros(9)
    dist[5] = 1.0
    assert resolve_entity(_result_of(2), dist) is None
    assert resolve_entity(None, dist) is None


# ------------------------------------------------------------------ loader


def test_load_kb_json_both_shapes(tmp_path):
    path = tmp_path / "kb.json"
    path.write_text(
        '[{"name": "a", "attrs": {"area": "west", "food": "thai", "pricerange": "cheap", "rating": 2}},'
        ' {"name": "b", "area": "east", "food": "indian", "pricerange": "cheap", "rating": 4}]'
    )
    kb = load_kb(path, schema=default_schema())
    assert len(kb) == 2
    assert kb.entities[1].attrs["food"] == "indian"


def test_load_kb_csv(tmp_path):
    path = tmp_path / "kb.csv"
    path.write_text(
        "name,area,food,pricerange,rating,phone\n"
        "roma,west,italian,cheap,5,01223 111\n"
        "taj,east,indian,moderate,4,01223 222\n"
    )
    kb = load_kb(path, schema=default_schema())
    assert [e.name for e in kb.entities] == ["roma", "taj"]
    assert kb.entities[0].attrs["phone"] == "01223 111"


def test_load_kb_rejects_invalid_slot_value(tmp_path):
    path = tmp_path / "kb.json"
    path.write_text('[{"name": "a", "area": "mars", "food": "thai", "pricerange": "cheap"}]')
    with pytest.raises(SchemaError):
        load_kb(path, schema=default_schema())


def test_save_load_roundtrip(tmp_path):
    kb = _fixture_kb()
    path = tmp_path / "kb.json"
    save_kb(path, kb)
    again = load_kb(path, schema=default_schema())
    assert again.entities == kb.entities
