import pytest

from flightrag import prompting


def test_render_interpolates_question():
    text = prompting.render(
        prompting.TEMPLATES["classification"], {"question": "What's at B24?"}
    )
    assert "Question to classify: What's at B24?" in text
    assert text.endswith("Category:")


def test_missing_variable_raises():
    with pytest.raises(prompting.MissingVariable) as err:
        prompting.render(prompting.TEMPLATES["classification"], {})
    assert err.value.name == "question"


def test_fewshot_blocks_use_example_marker():
    text = prompting.render(
        prompting.TEMPLATES["classification"],
        {"question": "real question"},
        fewshot=[("demo one", "2"), ("demo two", "0")],
    )
    assert "Example question: demo one\nCategory: ['2']" in text
    assert "Example question: demo two\nCategory: ['0']" in text
    # the final question marker appears exactly once and is distinct
    assert text.count("Question to classify:") == 1


def test_fewshot_truncates_from_tail():
    examples = [(f"q{i}", "0") for i in range(10)]
    full = prompting.render(
        prompting.TEMPLATES["classification"], {"question": "q"}, fewshot=examples
    )
    small = prompting.render(
        prompting.TEMPLATES["classification"],
        {"question": "q"},
        fewshot=examples,
        max_prompt_chars=len(full) - 1,
    )
    assert "Example question: q9" not in small
    assert "Example question: q0" in small
    assert "Question to classify: q" in small


def test_sql_templates_carry_schema_and_rule_line():
    from flightrag.sqlrag import SqlSchema

    variables = prompting.build_schema_vars("sql", SqlSchema())
    variables["question"] = "Which ramp?"
    odp = prompting.render(prompting.TEMPLATES["sql_odp"], variables)
    assert "Include only valid SQL syntax, without additional formatting or explanation." in odp
    assert "flights(" in odp
    assert odp.endswith("SELECT")
    crp = prompting.render(prompting.TEMPLATES["sql_crp"], variables)
    assert "CREATE TABLE flights" in crp
    assert "/* SQL question: Which ramp? */" in crp


def test_graph_template_embeds_schema_json():
    variables = {"schema_json": '{"labels": {}}', "question": "q"}
    text = prompting.render(prompting.TEMPLATES["graph_schema"], variables)
    assert '{"labels": {}}' in text
    assert "Graph question: q" in text


def test_clarification_texts():
    text = prompting.render(prompting.TEMPLATES["clarification"], {"subject": "KLM"})
    assert text.startswith("I cannot determine the specific location of the KLM flight")
    assert "Connecting Flight Number" in text
    partial = prompting.render(prompting.TEMPLATES["partial_number_clarification"], {})
    assert partial.startswith("We could not find more information")


def test_leftover_placeholder_detected():
    with pytest.raises(prompting.MissingVariable):
        prompting.render(prompting.TEMPLATES["sql_odp"], {"question": "q", "table_listing": "{oops}"})


def test_glossary_lists_labels():
    text = prompting.glossary_text()
    assert "flight number" in text
    assert all(line.startswith("- ") for line in text.splitlines())
    assert len(text.splitlines()) >= 8


def test_build_schema_vars_unknown_kind():
    with pytest.raises(ValueError):
        prompting.build_schema_vars("yaml", None)
