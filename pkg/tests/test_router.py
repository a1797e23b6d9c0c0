import pytest

from flightrag import llm as llm_mod
from flightrag import router
from flightrag.router import QuestionCategory as QC


@pytest.mark.parametrize("question,expected", [
    ("Which flight is currently at gate B24?", QC.TAQ),
    ("It is now 2023-05-14 06:30:00+0000. Which flight is at gate D07?", QC.TAQ),
    ("What's at A74?", QC.BGQ),
    ("Which flights are at C05?", QC.BGQ),
    ("What is the connecting flight of KL1234?", QC.NFQ),
    ("What is KL1234's next flight from the same ramp?", QC.NFQ),
    ("When is KLM landing?", QC.TWAQ),
    ("Is Transavia departing soon?", QC.TWAQ),
    ("Where is the Delta?", QC.BQA),
    ("Iberia, any information?", QC.BQA),
    ("Which gate is assigned to the 0164 flight?", QC.AFQ),
    ("At what gate is the 123?", QC.AFQ),
    ("Which ramp is assigned for flight KL1234?", QC.STRAIGHTFORWARD),
    ("Who is the main ground handler for flight BA3087?", QC.STRAIGHTFORWARD),
])
def test_rules_classifier(question, expected):
    assert router.classify_rules(question) == expected


def test_confusable_gate_question_lands_in_taq():
    assert router.classify_rules("Which flights are at D07 right now?") == QC.TAQ


def test_confusable_airline_question_lands_in_twaq():
    assert router.classify_rules("KLM, any information on when it boards?") == QC.TWAQ


def test_timestamp_digits_do_not_fake_partial_numbers():
    question = "It is now 2023-05-14 06:30:00+0000. Which flight is at gate D07?"
    assert router.find_partial_number(question) is None


def test_gate_extraction_zero_pads():
    assert router.find_gate_code("what's at C5?") == "C05"
    assert router.find_gate_code("what's at B24?") == "B24"
    assert router.find_gate_code("nothing here") is None


def test_gate_extraction_takes_first_code():
    assert router.find_gate_code("compare gates A5 and B24 please") == "A05"


def test_llm_classifier_parses_bracketed_digit():
    handle = llm_mod.scripted_handle(
        [llm_mod.FixtureRule(match=("Question to classify:",), response="['3']")]
    )
    assert router.classify("anything", handle) == QC.NFQ


def test_llm_classifier_falls_back_to_rules():
    handle = llm_mod.scripted_handle(
        [llm_mod.FixtureRule(match=("Question to classify:",), response="gibberish")]
    )
    assert router.classify("What's at A74?", handle) == QC.BGQ
    with pytest.raises(llm_mod.LlmUnavailable):
        router.classify("What's at A74?", handle, allow_fallback=False)


def test_gate_slot_llm_convention():
    handle = llm_mod.scripted_handle(
        [llm_mod.FixtureRule(match=("Extract the gate",), response="['ramp': 'A74']")]
    )
    assert router.extract_gate("irrelevant", handle).gate == "A74"


def test_gate_slot_sentinel_zero():
    handle = llm_mod.scripted_handle(
        [llm_mod.FixtureRule(match=("Extract the gate",), response="['0']")]
    )
    extraction = router.extract_gate("no gate mentioned here", handle)
    assert extraction.gate is None
    assert extraction.sentinel_zero


def test_route_gate_question_goes_to_gate_retrieval():
    decision = router.route("What's at A74?")
    assert decision.action == "gate_retrieval"
    assert decision.extraction.gate == "A74"


def test_route_time_question_without_gate_clarifies():
    decision = router.route("Which flight is boarding right now?")
    assert decision.category == QC.TAQ
    assert decision.action == "clarify"
    assert "I cannot determine the specific location" in decision.clarification_text


def test_route_airline_question_clarifies_with_subject():
    decision = router.route("Where is the KLM?")
    assert decision.action == "clarify"
    assert "KLM" in decision.clarification_text


def test_route_partial_number_clarifies():
    decision = router.route("Which gate is assigned to the 0164 flight?")
    assert decision.action == "partial_number_clarify"
    assert decision.extraction.partial_number == "0164"
    assert decision.clarification_text.startswith("We could not find more information")


def test_route_next_flight_carries_number():
    decision = router.route("What is the connecting flight of KL1234?")
    assert decision.action == "next_flight"
    assert decision.extraction.flight_nr == "KL1234"


def test_route_straightforward():
    decision = router.route("Which ramp is assigned for flight KL1234?")
    assert decision.action == "direct_answer"
    assert decision.extraction.flight_nr == "KL1234"


def test_merge_clarification_format():
    merged = router.merge_clarification("Where is the KLM?", "Flight KL1234, the ramp please")
    assert merged == (
        "Original question: Where is the KLM? "
        "Additional information: Flight KL1234, the ramp please"
    )
    assert router.classify_rules(merged) == QC.STRAIGHTFORWARD
