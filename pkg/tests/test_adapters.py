from __future__ import annotations

import json
import urllib.parse

import pytest
from hypothesis import given, strategies as st

from uiq.adapters import (
    HttpSearchAdapter,
    HumanAdapter,
    ScriptedAdapter,
    extract_first_result,
    load_adapter_config,
)
from uiq.mockserp import DEFAULT_RESULTS, MockSearchServer, render_results_page

from conftest import fixture_json, fixture_text

THREE_BLOCKS = """
<html><body>
  <div class="result"><p class="snippet">first block</p></div>
  <div class="result"><p class="snippet">second block</p></div>
  <div class="result"><p class="snippet">third block</p></div>
</body></html>
"""


class TestExtractFirstResult:
    def test_first_of_three_blocks(self):
        assert extract_first_result(THREE_BLOCKS, "div.result") == "first block"
        assert extract_first_result(THREE_BLOCKS, "p.snippet") == "first block"

    def test_no_match_returns_none(self):
        assert extract_first_result(THREE_BLOCKS, "div.organic") is None

    def test_malformed_rule_raises(self):
        for rule in ("", "div..x", "div[attr=1]", "p:first", "#a#b"):
            with pytest.raises(ValueError, match="malformed selector"):
                extract_first_result(THREE_BLOCKS, rule)

    def test_descendant_combinator(self):
        doc = "<div class='a'><span>inside</span></div><span>outside</span>"
        assert extract_first_result(doc, "div.a span") == "inside"
        assert extract_first_result(doc, "span") == "inside"
        assert extract_first_result(doc, "div.b span") is None

    def test_recorded_sample_page(self):
        # extraction expectations recorded when the sample page was authored
        doc = fixture_text("serp_sample.html")
        for case in fixture_json("serp_sample_expected.json")["cases"]:
            assert extract_first_result(doc, case["rule"]) == case["text"]

    def test_rendered_mock_page_roundtrip(self):
        page = render_results_page("q", ["alpha & beta", "second"])
        assert extract_first_result(page, "div.result p.snippet") == "alpha & beta"


class TestScriptedAdapter:
    def test_fixture_echo(self):
        adapter = ScriptedAdapter(
            {"subject": {"id": "x", "display_name": "x"}, "answers": {"q-calc-1": {"answer": "100", "latency_ms": 50}}}
        )

        class Q:
            id = "q-calc-1"

        record = adapter.probe(Q)
        assert record.answer == "100"
        assert record.elapsed_ms == 50

    def test_simulated_latency_reproduces_exactly(self, bank_2014):
        adapter = ScriptedAdapter(
            {"subject": {"id": "x", "display_name": "x"}, "answers": {"s01-q1": {"answer": "2", "latency_ms": 12345}}}
        )
        q = bank_2014.question("s01-q1")
        assert adapter.probe(q).elapsed_ms == 12345
        assert adapter.probe(q).elapsed_ms == 12345

    def test_missing_entry_is_delivery_failure(self, bank_2014):
        adapter = ScriptedAdapter({"subject": {"id": "x", "display_name": "x"}, "answers": {}})
        record = adapter.probe(bank_2014.question("s01-q1"))
        assert record.delivery_failed
        assert "no scripted entry" in record.note

    def test_capabilities_configurable(self):
        adapter = ScriptedAdapter({"subject": {"id": "x", "display_name": "x"}, "capabilities": ["text", "audio"]})
        assert adapter.capabilities() == {"text", "audio"}


class TestHttpSearchAdapter:
    def make(self, template, **extra):
        config = {
            "kind": "http_search",
            "subject": {"id": "mock", "display_name": "mock"},
            "query_url_template": template,
            "result_selector": "div.result p.snippet",
            "min_request_interval_ms": 0,
            "request_timeout_ms": 3000,
        }
        config.update(extra)
        return HttpSearchAdapter(config)

    def test_default_capabilities_text_only(self):
        assert self.make("http://h/search?q={QUERY}").capabilities() == {"text"}

    def test_template_must_have_exactly_one_placeholder(self):
        with pytest.raises(ValueError, match="exactly one"):
            self.make("http://h/search?q=fixed")
        with pytest.raises(ValueError, match="exactly one"):
            self.make("http://h/{QUERY}/{QUERY}")

    @given(st.text(max_size=120))
    def test_hostile_prompts_cannot_escape_the_query(self, prompt):
        adapter = self.make("http://host.example:1234/search?q={QUERY}")
        url = adapter.query_url(prompt)
        parts = urllib.parse.urlsplit(url)
        assert parts.netloc == "host.example:1234"
        assert parts.path == "/search"
        assert parts.fragment == ""
        q = urllib.parse.parse_qs(parts.query)["q"] if parts.query != "q=" else [""]
        assert q == [prompt] or prompt == ""

    def test_mock_probe_extracts_first_result(self, bank_2014):
        with MockSearchServer() as server:
            adapter = self.make(server.query_url_template)
            q = bank_2014.question("s06-q1")
            record = adapter.probe(q)
            assert not record.delivery_failed
            assert "100" in record.answer
            assert record.answer == DEFAULT_RESULTS["How much is 25 multiply by 4?"][0]
            assert record.elapsed_ms >= 0

    def test_unknown_query_yields_extraction_failure(self, bank_2014):
        with MockSearchServer() as server:
            adapter = self.make(server.query_url_template)
            record = adapter.probe(bank_2014.question("s07-q1"))
            assert record.delivery_failed
            assert "no node matched" in record.note

    def test_unreachable_host_is_delivery_failure(self, bank_2014):
        adapter = self.make("http://127.0.0.1:9/search?q={QUERY}")  # discard port, nothing listens
        record = adapter.probe(bank_2014.question("s06-q1"))
        assert record.delivery_failed
        assert "probe failed" in record.note

    def test_reported_latency_covers_the_round_trip(self, bank_2014):
        with MockSearchServer(delay_ms=120) as server:
            adapter = self.make(server.query_url_template)
            record = adapter.probe(bank_2014.question("s06-q1"))
            assert not record.delivery_failed
            assert record.elapsed_ms >= 120

    def test_per_host_politeness_interval(self):
        from uiq.adapters import _HostThrottle
        import time

        throttle = _HostThrottle()
        throttle.wait("host-a", 0.08)
        started = time.monotonic()
        throttle.wait("host-a", 0.08)  # same host: must wait out the interval
        assert time.monotonic() - started >= 0.07
        started = time.monotonic()
        throttle.wait("host-b", 0.08)  # different host: no wait
        assert time.monotonic() - started < 0.05


class TestAdapterConfigLoading:
    def test_kind_dispatch(self, tmp_path):
        path = tmp_path / "adapter.json"
        path.write_text(
            json.dumps({"kind": "scripted", "subject": {"id": "a", "display_name": "a"}, "answers": {}}),
            encoding="utf-8",
        )
        assert isinstance(load_adapter_config(path), ScriptedAdapter)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown adapter kind"):
            load_adapter_config({"kind": "telepathy"})

    def test_human_defaults(self):
        adapter = HumanAdapter({"subject": {"id": "h", "display_name": "h"}})
        assert adapter.capabilities() == {"text", "audio", "image"}
        assert adapter.probe(type("Q", (), {"id": "s01-q1"})).delivery_failed

    def test_bundled_google_fixture_loads(self):
        adapter = load_adapter_config(fixture_json("scripted_google_2014.json"))
        assert isinstance(adapter, ScriptedAdapter)
        assert adapter.subject().display_name == "google"
        assert adapter.capabilities() == {"text", "audio", "image"}
        assert len(adapter.manual_verdicts) == 8
