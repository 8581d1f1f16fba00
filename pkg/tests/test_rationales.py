"""Prompt templates, response parsing, and rationale generation."""

import pytest

from iris.core import Sample, StanceLabel
from iris.errors import ConfigError, ResponseParseError
from iris.providers import DiskCache, LlmClient, MockLlm
from iris.rationales import (
    EMPTY_MARKER,
    ParsedSpan,
    PromptTemplate,
    RationaleSet,
    default_template,
    format_implicit_response,
    gen_explicit,
    gen_implicit,
    generate_rationales,
    parse_implicit_response,
)

SAMPLE = Sample(id="s1", text="The plan is great. The cost is brutal.",
                target="the plan", gold=StanceLabel.FAVOR)


def _client(response=None, table=None, tmp_path=None):
    cache = DiskCache(tmp_path) if tmp_path else None
    return LlmClient(MockLlm(responses=table, default=response), cache)


class TestPromptTemplate:
    def test_placeholders_required(self):
        with pytest.raises(ConfigError):
            PromptTemplate(name="x", system="s", user="no placeholders")
        with pytest.raises(ConfigError):
            PromptTemplate(name="x", system="s", user="only {text}")

    def test_render_fills_both_placeholders(self):
        tpl = PromptTemplate(name="x", system="sys",
                             user="T: {target} P: {text}")
        system, user = tpl.render(SAMPLE)
        assert system == "sys"
        assert user == "T: the plan P: The plan is great. The cost is brutal."

    def test_braces_in_post_text_survive(self):
        sample = Sample(id="b", text="curly {braces} here", target="t")
        tpl = PromptTemplate(name="x", system="s", user="{target}|{text}")
        _, user = tpl.render(sample)
        assert user == "t|curly {braces} here"

    def test_file_loading_with_separator(self, tmp_path):
        path = tmp_path / "tpl.txt"
        path.write_text("the system\n---\nuser {text} {target}",
                        encoding="utf-8")
        tpl = PromptTemplate.from_file(path)
        assert tpl.system == "the system"
        assert tpl.user == "user {text} {target}"

    def test_packaged_defaults_load(self):
        implicit = default_template("implicit")
        explicit = default_template("explicit")
        assert "{text}" in implicit.user and "{target}" in implicit.user
        assert "{text}" in explicit.user and "{target}" in explicit.user
        # the implicit template pins the machine-parseable reply format
        assert "favor score" in implicit.user
        assert EMPTY_MARKER in implicit.user


class TestParser:
    def test_three_delimited_spans_in_order(self):
        raw = ("favor | 0.8,0.1,0.1 | span one\n"
               "against | 0.1,0.8,0.1 | span two\n"
               "neutral | 0.2,0.2,0.6 | span three")
        spans = parse_implicit_response(raw)
        assert [s.text for s in spans] == ["span one", "span two", "span three"]
        assert spans[0].scores == (0.8, 0.1, 0.1)

    def test_empty_marker_yields_empty_list(self):
        assert parse_implicit_response("NONE") == []
        assert parse_implicit_response(" none \n") == []

    def test_scores_optional(self):
        spans = parse_implicit_response("favor | just text")
        assert spans == [ParsedSpan(label="favor", scores=None,
                                    text="just text")]

    def test_unparseable_line_raises_with_raw_attached(self):
        raw = "favor | 0.9,0.05,0.05 | ok\ngarbage line without delimiter"
        with pytest.raises(ResponseParseError) as err:
            parse_implicit_response(raw)
        assert err.value.raw_response == raw

    def test_bad_label_and_bad_scores_rejected(self):
        with pytest.raises(ResponseParseError):
            parse_implicit_response("sideways | 0.5,0.3,0.2 | text")
        with pytest.raises(ResponseParseError):
            parse_implicit_response("favor | 0.5,0.3 | text")
        with pytest.raises(ResponseParseError):
            parse_implicit_response("favor | a,b,c | text")
        with pytest.raises(ResponseParseError):
            parse_implicit_response("favor | -1,0,0 | text")

    def test_round_trip_format_parse_format_is_identity(self):
        spans = [
            ParsedSpan(label="favor", scores=(0.85, 0.05, 0.1), text="t1"),
            ParsedSpan(label="against", scores=None, text="t2 | not split"),
            ParsedSpan(label="neutral", scores=(1.0, 2.0, 3.0), text="t3"),
        ]
        # the second span contains no pipe in its own text by construction
        spans[1] = ParsedSpan(label="against", scores=None, text="t2")
        text = format_implicit_response(spans)
        assert format_implicit_response(parse_implicit_response(text)) == text
        assert format_implicit_response([]) == EMPTY_MARKER
        assert parse_implicit_response(EMPTY_MARKER) == []

    def test_parser_handles_zero_to_n_items(self):
        for n in range(5):
            raw = "\n".join(
                f"favor | 0.5,0.25,0.25 | span {i}" for i in range(n)
            ) or "NONE"
            assert len(parse_implicit_response(raw)) == n


class TestGenImplicit:
    def test_parsed_rationales_in_response_order(self, tmp_path):
        raw = ("favor | 0.8,0.1,0.1 | The plan is great\n"
               "against | 0.1,0.8,0.1 | The cost is brutal")
        client = _client(response=raw, tmp_path=tmp_path)
        rationales, scores = gen_implicit(SAMPLE, default_template("implicit"),
                                          client)
        assert [r.text for r in rationales] == ["The plan is great",
                                                "The cost is brutal"]
        assert [r.rationale_id for r in rationales] == ["s1#r000", "s1#r001"]
        assert all(r.verbatim for r in rationales)
        assert scores is not None and len(scores) == 2

    def test_empty_marker_gives_empty_list(self, tmp_path):
        client = _client(response="NONE", tmp_path=tmp_path)
        rationales, scores = gen_implicit(SAMPLE, default_template("implicit"),
                                          client)
        assert rationales == [] and scores is None

    def test_paraphrased_span_flagged(self, tmp_path):
        client = _client(response="favor | a paraphrase not in the post",
                         tmp_path=tmp_path)
        rationales, _ = gen_implicit(SAMPLE, default_template("implicit"),
                                     client)
        assert rationales[0].verbatim is False

    def test_scores_normalized_to_unit_sum(self, tmp_path):
        client = _client(response="favor | 2,1,1 | The plan is great",
                         tmp_path=tmp_path)
        _, scores = gen_implicit(SAMPLE, default_template("implicit"), client)
        assert scores[0] == pytest.approx((0.5, 0.25, 0.25), abs=1e-9)
        assert sum(scores[0]) == pytest.approx(1.0, abs=1e-6)

    def test_partial_scores_drop_the_whole_score_set(self, tmp_path):
        raw = "favor | 0.8,0.1,0.1 | a\nagainst | b"
        client = _client(response=raw, tmp_path=tmp_path)
        rationales, scores = gen_implicit(SAMPLE, default_template("implicit"),
                                          client)
        assert len(rationales) == 2 and scores is None

    def test_strict_raises_degrade_returns_empty(self, tmp_path):
        client = _client(response="not parseable at all", tmp_path=tmp_path)
        with pytest.raises(ResponseParseError):
            gen_implicit(SAMPLE, default_template("implicit"), client,
                         error_policy="strict")
        rationales, scores = gen_implicit(
            SAMPLE, default_template("implicit"), client,
            error_policy="degrade")
        assert rationales == [] and scores is None

    def test_idempotent_under_warm_cache(self, tmp_path):
        raw = "favor | 0.8,0.1,0.1 | The plan is great"
        client = _client(response=raw, tmp_path=tmp_path)
        first = gen_implicit(SAMPLE, default_template("implicit"), client)
        second = gen_implicit(SAMPLE, default_template("implicit"), client)
        assert first == second
        assert client.backend_calls == 1


class TestGenExplicit:
    def test_mock_passthrough(self, tmp_path):
        client = _client(response="exactly this assessment",
                         tmp_path=tmp_path)
        explicit = gen_explicit(SAMPLE, default_template("explicit"), client)
        assert explicit.text == "exactly this assessment"
        assert explicit.source_sample == "s1"

    def test_degrade_returns_empty_rationale(self, tmp_path):
        client = LlmClient(MockLlm(), DiskCache(tmp_path))  # always fails
        explicit = gen_explicit(SAMPLE, default_template("explicit"), client,
                                error_policy="degrade")
        assert explicit.text == ""


# Canned responses shaped like the published worked examples; they flow
# through the real parser and generation path.
GINSBURG_TEXT = (
    "If any of the dire prediction of a Trump presidency turning into a "
    "fascist dictatorship should start to occur... I do not find Justice "
    "Ginsburg's comments any less dignified..justices were to condemn Ms. "
    "Clinton's trustworthiness over her lies... The dignity of the court.. "
    "is lessened when..political maelstrom."
)

GINSBURG_RATIONALES = [
    "I do not find Justice Ginsburg's comments any less dignified",
    "less dignified than if one of the more conservative justices were to "
    "condemn Ms. Clinton's trustworthiness",
    "The dignity of the court, as well as the appearance of impartiality, "
    "is lessened when the justices lower themselves into the political "
    "maelstrom.",
    "than if one of the more conservative justices were to condemn",
    "I do not find Justice Ginsburg's comments",
]

GINSBURG_SCORES = [(0.85, 0.05, 0.10), (0.05, 0.75, 0.20), (0.25, 0.55, 0.20),
                   (0.3, 0.2, 0.5), (0.4, 0.3, 0.3)]


class TestWorkedExamples:
    def test_five_rationales_with_scores_flow_through(self, tmp_path):
        sample = Sample(id="ginsburg", text=GINSBURG_TEXT,
                        target="Justice Ginsburg", gold=StanceLabel.AGAINST)
        labels = ["favor", "against", "against", "neutral", "favor"]
        raw = "\n".join(
            f"{label} | {s[0]},{s[1]},{s[2]} | {text}"
            for label, s, text in zip(labels, GINSBURG_SCORES,
                                      GINSBURG_RATIONALES)
        )
        implicit_tpl = default_template("implicit")
        explicit_tpl = default_template("explicit")
        explicit_text = ("The post exhibits low empathy, as it criticizes "
                         "Justice Ginsburg's comments without considering "
                         "her perspective or feelings.")
        _, imp_prompt = implicit_tpl.render(sample)
        _, exp_prompt = explicit_tpl.render(sample)
        client = _client(table={imp_prompt: raw, exp_prompt: explicit_text},
                         tmp_path=tmp_path)
        rset = generate_rationales(sample, implicit_tpl, explicit_tpl, client)
        assert len(rset.implicit) == 5
        assert GINSBURG_RATIONALES[2] in [r.text for r in rset.implicit]
        assert rset.llm_stance_scores[0] == pytest.approx((0.85, 0.05, 0.10))
        assert rset.explicit.text.startswith(
            "The post exhibits low empathy, as it criticizes Justice "
            "Ginsburg's comments")

    def test_linguistic_assessment_terms_pass_through(self, tmp_path):
        sample = Sample(id="prices", text="Increased electricity gas prices "
                        "again incompetent stupid useless", target="prices",
                        gold=StanceLabel.AGAINST)
        assessment = ("The post exhibits low empathy as it contains "
                      "insulting language, confrontational and critical, "
                      "indicating absolutist thinking.")
        client = _client(response=assessment, tmp_path=tmp_path)
        explicit = gen_explicit(sample, default_template("explicit"), client)
        assert "low empathy" in explicit.text
        assert "absolutist thinking" in explicit.text


class TestRationaleSetRecord:
    def test_record_round_trip(self, tmp_path):
        raw = ("favor | 0.6,0.2,0.2 | The plan is great\n"
               "against | 0.1,0.7,0.2 | The cost is brutal")
        client = _client(response=raw, tmp_path=tmp_path)
        rset = generate_rationales(SAMPLE, default_template("implicit"),
                                   default_template("explicit"), client)
        again = RationaleSet.from_record(rset.to_record())
        assert again == rset

    def test_score_count_must_match_rationales(self):
        from iris.core import ExplicitRationale, ImplicitRationale

        with pytest.raises(ValueError):
            RationaleSet(
                sample_id="s",
                implicit=(ImplicitRationale("s#r000", "t", "s"),),
                explicit=ExplicitRationale(text="e", source_sample="s"),
                llm_stance_scores=((0.5, 0.25, 0.25), (0.9, 0.05, 0.05)),
            )
