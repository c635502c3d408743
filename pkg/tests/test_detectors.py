import pytest
from hypothesis import given
from hypothesis import strategies as st

from anonengine import (CharSpan, DetectorConfig, DetectorUnavailable,
                        EntitySpan, InvalidConfig, ProtocolViolation,
                        RegexRule, detect_conventional, detect_gazetteer,
                        detect_model, detect_regex, merge, run_detectors)

from conftest import RULING_DE, ent, make_doc


def test_regex_rule_must_compile():
    with pytest.raises(InvalidConfig):
        RegexRule("[unclosed", "PER")


def test_detect_regex_party_placeholders():
    doc = make_doc("A.________ gegen B.________")
    spans = detect_regex(doc, [RegexRule(r"[A-Z]\.________", "PER")])
    assert [(s.start, s.end) for s in spans] == [(0, 10), (17, 27)]
    assert all(s.source == "regex" and s.confidence == 1.0 for s in spans)


def test_detect_regex_no_rules():
    assert detect_regex(make_doc("Irgendein Text."), []) == []


def test_detect_regex_iban(ruling_de):
    spans = detect_regex(ruling_de,
                         [RegexRule(r"CH\d{2}(?:\s?\d{4}){4,5}", "MISC")])
    assert len(spans) == 1
    assert spans[0].label == "MISC"
    assert spans[0].surface.startswith("CH93")


def test_detect_gazetteer_whole_token():
    doc = make_doc("Die Zugfahrt nach Zug beginnt in Zug.")
    spans = detect_gazetteer(doc, {"LOC": ("Zug",)})
    # "Zugfahrt" must not match; the two standalone tokens must.
    assert [doc.text[s.start:s.end] for s in spans] == ["Zug", "Zug"]


def test_detect_gazetteer_longest_surface_wins():
    doc = make_doc("Zurich Insurance Group versichert Zurich.")
    spans = detect_gazetteer(doc, {
        "ORG": ("Zurich Insurance Group",),
        "LOC": ("Zurich",),
    })
    assert [(s.surface, s.label) for s in spans] == [
        ("Zurich Insurance Group", "ORG"), ("Zurich", "LOC")]


def test_detect_gazetteer_empty():
    assert detect_gazetteer(make_doc("Text ohne alles."), {}) == []


def test_conventional_two_stage(ruling_de):
    warnings = []
    spans = detect_conventional(ruling_de, DetectorConfig(), warnings)
    surfaces = {s.surface for s in spans}
    assert surfaces == {"Hans Meier", "Paul Huber"}
    meier = [s for s in spans if s.surface == "Hans Meier"]
    assert len(meier) == 3          # rubrum + facts + considerations
    assert all(s.source == "conventional" and s.confidence == 0.8
               for s in spans)
    assert not warnings


def test_conventional_org_label():
    text = ("Brunner Holding AG, Beschwerdeführerin, gegen X.\n"
            "Sachverhalt:\nDie Brunner Holding AG zahlte nie.")
    doc = make_doc(text)
    spans = detect_conventional(doc, DetectorConfig())
    assert spans
    assert {s.label for s in spans} == {"ORG"}
    assert {s.surface for s in spans} == {"Brunner Holding AG"}
    assert len(spans) == 2


def test_conventional_no_marker_falls_back_with_warning():
    doc = make_doc("Hans Meier, Beschwerdeführer, gegen Unbekannt. " * 4)
    warnings = []
    spans = detect_conventional(doc, DetectorConfig(), warnings)
    assert any("marker" in w for w in warnings)
    assert {s.surface for s in spans} == {"Hans Meier"}


def test_conventional_nothing_near_cues():
    doc = make_doc("gegen den Beschwerdeführer.\nSachverhalt:\nNichts.")
    assert detect_conventional(doc, DetectorConfig()) == []


def test_conventional_stopword_bounds_name():
    text = ("Gestern klagte Die Anna Keller, Beschwerdeführerin.\n"
            "Sachverhalt:\nAnna Keller war abwesend.")
    doc = make_doc(text)
    spans = detect_conventional(doc, DetectorConfig())
    assert {s.surface for s in spans} == {"Anna Keller"}
    assert len(spans) == 2


# --- merge ------------------------------------------------------------------

def test_merge_priority_regex_over_model():
    text = "Hans Meier"
    a = [ent(0, 10, text, source="regex")]
    b = [ent(0, 10, text, source="model")]
    merged = merge([a, b])
    assert len(merged) == 1
    assert merged[0].source == "regex"


def test_merge_model_outranks_conventional():
    text = "Hans Meier zahlt"
    model = [ent(0, 5, text, source="model")]
    conventional = [ent(0, 8, text, source="conventional")]
    merged = merge([model, conventional])
    assert [(s.start, s.end, s.source) for s in merged] == [(0, 5, "model")]


def test_merge_disjoint_concatenates_sorted():
    text = "Hans Meier und Paul Huber"
    a = [ent(15, 25, text, source="model")]
    b = [ent(0, 10, text, source="regex")]
    merged = merge([a, b])
    assert [(s.start, s.end) for s in merged] == [(0, 10), (15, 25)]


def test_merge_same_priority_prefers_longer_then_earlier():
    text = "Hans Meier Huber"
    short = ent(5, 10, text, source="model")
    long_ = ent(0, 10, text, source="model", label="LOC")
    assert merge([[short], [long_]]) == [long_]
    first = ent(0, 4, text, source="model")
    second = ent(2, 6, text, source="model")
    assert merge([[second], [first]]) == [first]


@given(st.lists(st.lists(st.tuples(
    st.integers(0, 30), st.integers(1, 5),
    st.sampled_from(["regex", "model", "gazetteer", "made-up"]),
    st.sampled_from(["PER", "LOC"])), max_size=6), max_size=4))
def test_merge_output_sorted_non_overlapping(groups):
    text = "x" * 40
    results = [[ent(a, min(40, a + ln), text, label, src)
                for a, ln, src, label in g] for g in groups]
    merged = merge(results)
    for s1, s2 in zip(merged, merged[1:]):
        assert s1.end <= s2.start or (s1.start, s1.end) <= (s2.start, s2.end)
        assert not s1.span.overlaps(s2.span)
    starts = [(s.start, s.end) for s in merged]
    assert starts == sorted(starts)


def test_merge_schedule_independence():
    text = "Hans Meier und Paul Huber in Zug"
    groups = [
        [ent(0, 10, text, source="model")],
        [ent(0, 10, text, source="regex"), ent(15, 25, text, source="regex")],
        [ent(29, 32, text, "LOC", source="gazetteer")],
    ]
    import itertools
    baselines = merge(groups)
    for perm in itertools.permutations(groups):
        assert merge(list(perm)) == baselines


# --- model detector / wire protocol -----------------------------------------

def first_token_per_behavior(path, payload):
    assert path == "/v1/label"
    out = []
    for sentence in payload["sentences"]:
        labels = ["O"] * len(sentence["tokens"])
        if labels:
            labels[0] = "B-PER"
        out.append({"labels": labels})
    return 200, {"sentences": out}


def test_detect_model_spans(stub_server, stub_endpoint):
    def behavior(path, payload):
        out = []
        for sentence in payload["sentences"]:
            tokens = sentence["tokens"]
            labels = ["O"] * len(tokens)
            for i, token in enumerate(tokens):
                if token == "Hans":
                    labels[i] = "B-PER"
                elif token == "Meier":
                    labels[i] = "I-PER" if i and tokens[i - 1] == "Hans" \
                        else "B-PER"
            out.append({"labels": labels,
                        "confidences": [0.9] * len(tokens)})
        return 200, {"sentences": out}

    stub_server.behavior = behavior
    doc = make_doc("vs Hans Meier. Meier zahlt.")
    spans = detect_model(doc, stub_endpoint)
    assert [(doc.text[s.start:s.end], s.label) for s in spans] == [
        ("Hans Meier", "PER"), ("Meier", "PER")]
    assert all(s.source == "model" for s in spans)
    assert spans[0].confidence == pytest.approx(0.9)


def test_detect_model_all_o(stub_server, stub_endpoint):
    doc = make_doc("Nichts zu melden hier.")
    assert detect_model(doc, stub_endpoint) == []


def test_detect_model_length_mismatch(stub_server, stub_endpoint):
    def behavior(path, payload):
        return 200, {"sentences": [
            {"labels": ["O"] * (len(s["tokens"]) - 1)}
            for s in payload["sentences"]
        ]}

    stub_server.behavior = behavior
    with pytest.raises(ProtocolViolation):
        detect_model(make_doc("Drei kleine Worte."), stub_endpoint)


def test_detect_model_sentence_count_mismatch(stub_server, stub_endpoint):
    stub_server.behavior = lambda path, payload: (200, {"sentences": []})
    with pytest.raises(ProtocolViolation):
        detect_model(make_doc("Ein Satz. Noch ein Satz."), stub_endpoint)


def test_detect_model_unreachable():
    with pytest.raises(DetectorUnavailable):
        detect_model(make_doc("Text."), "http://127.0.0.1:1", timeout_ms=300)


def test_detect_model_chunks_long_sentences(stub_server, stub_endpoint):
    seen = []

    def behavior(path, payload):
        seen.extend(len(s["tokens"]) for s in payload["sentences"])
        return first_token_per_behavior(path, payload)

    stub_server.behavior = behavior
    words = " ".join(f"w{i}" for i in range(10))
    doc = make_doc(words)
    spans = detect_model(doc, stub_endpoint, max_seq_len=4, stride_ratio=0.5)
    assert seen == [4, 4, 4, 4]      # windows (0,4),(2,6),(4,8),(6,10)
    assert spans and spans[0].start == 0


def test_detect_model_confidence_averaged(stub_server, stub_endpoint):
    def behavior(path, payload):
        tokens = payload["sentences"][0]["tokens"]
        labels = ["B-PER", "I-PER"] + ["O"] * (len(tokens) - 2)
        confidences = [0.8, 0.6] + [1.0] * (len(tokens) - 2)
        return 200, {"sentences": [{"labels": labels,
                                    "confidences": confidences}]}

    stub_server.behavior = behavior
    doc = make_doc("Hans Meier zahlt nie")
    spans = detect_model(doc, stub_endpoint)
    assert len(spans) == 1
    assert spans[0].confidence == pytest.approx(0.7)


# --- orchestration -----------------------------------------------------------

def test_run_detectors_all_available(ruling_de):
    result = run_detectors(ruling_de, DetectorConfig())
    assert result.spans
    assert not result.unavailable
    assert set(result.detectors) == {"regex", "gazetteer", "conventional"}
    spans = list(result.spans)
    for s1, s2 in zip(spans, spans[1:]):
        assert not s1.span.overlaps(s2.span)
    # The IBAN from the default rules and the rubrum names both appear.
    assert {"MISC", "PER"} <= {s.label for s in spans}


def test_run_detectors_min_confidence_filters(ruling_de):
    cfg = DetectorConfig(min_confidence=0.9)
    result = run_detectors(ruling_de, cfg)
    assert all(s.confidence >= 0.9 for s in result.spans)
    assert all(s.source != "conventional" for s in result.spans)


def test_run_detectors_unknown_name(ruling_de):
    with pytest.raises(InvalidConfig):
        run_detectors(ruling_de, DetectorConfig(), ["telepathy"])


def test_run_detectors_model_needs_endpoint(ruling_de):
    with pytest.raises(InvalidConfig):
        run_detectors(ruling_de, DetectorConfig(), ["model"])


def test_run_detectors_survives_unreachable_model(ruling_de):
    cfg = DetectorConfig(model_endpoint="http://127.0.0.1:1", timeout_ms=300)
    result = run_detectors(ruling_de, cfg)
    assert "model" in result.unavailable
    assert result.spans  # other detectors still contributed


def test_detector_config_validation():
    with pytest.raises(InvalidConfig):
        DetectorConfig(min_confidence=1.5)
    with pytest.raises(InvalidConfig):
        DetectorConfig(timeout_ms=0)
    with pytest.raises(InvalidConfig):
        DetectorConfig(rubrum_markers={"de": ()})
