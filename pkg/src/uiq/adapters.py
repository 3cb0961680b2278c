"""Subject adapters: a uniform probe contract over very different subjects.

Four kinds:
  scripted     deterministic fixture playback (answers + simulated latency)
  http_search  live search-engine probe; the answer is the text of the
               FIRST result block only, extracted with a CSS-ish selector
  generic_api  JSON question-answering endpoint (auth via env var)
  human        placeholder; human answers arrive through submit_answer

probe() never raises at a session's expense: network errors, extraction
misses, and missing fixtures all come back as delivery_failed answer
records that grade to zero.
"""

from __future__ import annotations

import json
import re
import threading
import time
import urllib.parse
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path
from typing import IO

import httpx

from uiq.bank import Question
from uiq.grading import AnswerRecord
from uiq.session import SubjectDescriptor

DEFAULT_USER_AGENT = "uiq-probe/0.1"
DEFAULT_REQUEST_TIMEOUT_MS = 10_000
DEFAULT_MIN_REQUEST_INTERVAL_MS = 1_000


# -- first-result extraction -------------------------------------------------

_VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

_COMPOUND = re.compile(r"^(?P<tag>[a-zA-Z][a-zA-Z0-9-]*)?(?P<rest>(?:[.#][\w-]+)*)$")
_SIMPLE_TOKEN = re.compile(r"[.#][\w-]+")
_WS = re.compile(r"\s+")


class _Element:
    __slots__ = ("tag", "classes", "elem_id", "parent", "children")

    def __init__(self, tag: str, attrs: list[tuple[str, str | None]], parent: "_Element | None"):
        self.tag = tag.lower()
        self.classes: frozenset[str] = frozenset()
        self.elem_id: str | None = None
        for name, value in attrs:
            if name == "class" and value:
                self.classes = frozenset(value.split())
            elif name == "id" and value:
                self.elem_id = value
        self.parent = parent
        self.children: list[object] = []  # _Element or str

    def text(self) -> str:
        out: list[str] = []

        def collect(node: "_Element") -> None:
            for child in node.children:
                if isinstance(child, str):
                    out.append(child)
                else:
                    collect(child)

        collect(self)
        # inline text nodes concatenate directly; markup whitespace separates blocks
        return _WS.sub(" ", "".join(out)).strip()


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = _Element("#document", [], None)
        self._stack = [self.root]

    def handle_starttag(self, tag, attrs):
        el = _Element(tag, attrs, self._stack[-1])
        self._stack[-1].children.append(el)
        if tag.lower() not in _VOID_TAGS:
            self._stack.append(el)

    def handle_startendtag(self, tag, attrs):
        self._stack[-1].children.append(_Element(tag, attrs, self._stack[-1]))

    def handle_endtag(self, tag):
        tag = tag.lower()
        for i in range(len(self._stack) - 1, 0, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                break

    def handle_data(self, data):
        if data:
            self._stack[-1].children.append(data)


@dataclass(frozen=True)
class _Compound:
    tag: str | None
    classes: frozenset[str]
    elem_id: str | None

    def matches(self, el: _Element) -> bool:
        if self.tag is not None and el.tag != self.tag:
            return False
        if self.elem_id is not None and el.elem_id != self.elem_id:
            return False
        return self.classes <= el.classes


def _parse_rule(rule: str) -> list[_Compound]:
    parts = rule.split()
    if not parts:
        raise ValueError("malformed selector rule: empty")
    compounds = []
    for part in parts:
        m = _COMPOUND.match(part)
        if not m or (m.group("tag") is None and not m.group("rest")):
            raise ValueError(f"malformed selector rule: {part!r}")
        rest = m.group("rest") or ""
        tokens = _SIMPLE_TOKEN.findall(rest)
        if "".join(tokens) != rest:
            raise ValueError(f"malformed selector rule: {part!r}")
        classes = frozenset(t[1:] for t in tokens if t[0] == ".")
        ids = [t[1:] for t in tokens if t[0] == "#"]
        if len(ids) > 1:
            raise ValueError(f"malformed selector rule: {part!r}")
        compounds.append(_Compound(tag=m.group("tag").lower() if m.group("tag") else None,
                                   classes=classes, elem_id=ids[0] if ids else None))
    return compounds


def _iter_elements(root: _Element):
    for child in root.children:
        if isinstance(child, _Element):
            yield child
            yield from _iter_elements(child)


def _ancestors_match(el: _Element, compounds: list[_Compound]) -> bool:
    # descendant combinator: each earlier compound must match some strict ancestor, in order
    node = el.parent
    for compound in reversed(compounds):
        while node is not None and node.tag != "#document":
            if compound.matches(node):
                break
            node = node.parent
        if node is None or node.tag == "#document":
            return False
        node = node.parent
    return True


def extract_first_result(document: str, rule: str) -> str | None:
    """Text of the first node the selector matches, whitespace-normalized.

    Supports tag/.class/#id compounds and the descendant combinator, which
    covers period results pages. Returns None when nothing matches; raises
    ValueError for a rule outside that grammar.
    """
    compounds = _parse_rule(rule)
    builder = _TreeBuilder()
    builder.feed(document)
    builder.close()
    for el in _iter_elements(builder.root):
        if compounds[-1].matches(el) and _ancestors_match(el, compounds[:-1]):
            return el.text()
    return None


# -- politeness throttle -------------------------------------------------------

class _HostThrottle:
    """Per-host minimum interval between outbound probes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._last: dict[str, float] = {}

    def wait(self, host: str, min_interval_s: float) -> None:
        if min_interval_s <= 0:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                last = self._last.get(host)
                if last is None or now - last >= min_interval_s:
                    self._last[host] = now
                    return
                delay = min_interval_s - (now - last)
            time.sleep(delay)


_throttle = _HostThrottle()


# -- adapters ------------------------------------------------------------------

def _subject_from_config(data: dict, kind: str, capabilities: frozenset[str]) -> SubjectDescriptor:
    sub = data.get("subject", {})
    return SubjectDescriptor(
        id=str(sub.get("id", "subject")),
        display_name=str(sub.get("display_name", sub.get("id", "subject"))),
        kind=kind,
        group=str(sub.get("group", "")),
        region=str(sub.get("region", "")),
        capabilities=capabilities,
    )


class ScriptedAdapter:
    """Replays a fixture: question id -> (answer, simulated latency)."""

    kind = "scripted"

    def __init__(self, config: dict):
        self.config = config
        self._answers: dict[str, dict] = dict(config.get("answers", {}))
        self._capabilities = frozenset(config.get("capabilities", ["text"]))
        # question id -> (pass, grader note); either a bare bool or {"pass":, "note":}
        self.manual_verdicts: dict[str, tuple[bool, str]] = {}
        for qid, value in config.get("manual_verdicts", {}).items():
            if isinstance(value, dict):
                self.manual_verdicts[qid] = (bool(value.get("pass", False)), str(value.get("note", "")))
            else:
                self.manual_verdicts[qid] = (bool(value), "")
        self._subject = _subject_from_config(config, self.kind, self._capabilities)

    def subject(self) -> SubjectDescriptor:
        return self._subject

    def capabilities(self) -> frozenset[str]:
        return self._capabilities

    def probe(self, question: Question) -> AnswerRecord:
        entry = self._answers.get(question.id)
        if entry is None:
            return AnswerRecord(question_id=question.id, delivery_failed=True, note="no scripted entry")
        return AnswerRecord(
            question_id=question.id,
            answer=entry.get("answer"),
            elapsed_ms=int(entry.get("latency_ms", 0)),
            delivery_failed=bool(entry.get("delivery_failed", False)),
            note=str(entry.get("note", "")),
        )


class HttpSearchAdapter:
    """Probes a search engine and keeps only the first result's text."""

    kind = "http_search"

    def __init__(self, config: dict):
        template = config["query_url_template"]
        if template.count("{QUERY}") != 1:
            raise ValueError("query_url_template must contain exactly one {QUERY} placeholder")
        self.template = template
        self.result_selector = config.get("result_selector", "div.result")
        _parse_rule(self.result_selector)  # fail fast on malformed config
        self.request_timeout_ms = int(config.get("request_timeout_ms", DEFAULT_REQUEST_TIMEOUT_MS))
        self.user_agent = str(config.get("user_agent", DEFAULT_USER_AGENT))
        self.min_request_interval_ms = int(
            config.get("min_request_interval_ms", DEFAULT_MIN_REQUEST_INTERVAL_MS)
        )
        self._capabilities = frozenset(config.get("capabilities", ["text"]))
        self._subject = _subject_from_config(config, self.kind, self._capabilities)

    def subject(self) -> SubjectDescriptor:
        return self._subject

    def capabilities(self) -> frozenset[str]:
        return self._capabilities

    def query_url(self, prompt: str) -> str:
        # the prompt is percent-encoded wholesale: it can never alter host or path
        return self.template.replace("{QUERY}", urllib.parse.quote(prompt, safe=""))

    def probe(self, question: Question) -> AnswerRecord:
        url = self.query_url(question.prompt)
        host = urllib.parse.urlsplit(url).netloc
        _throttle.wait(host, self.min_request_interval_ms / 1000)
        started = time.monotonic()
        try:
            response = httpx.get(
                url,
                headers={"User-Agent": self.user_agent},
                timeout=self.request_timeout_ms / 1000,
                follow_redirects=True,
            )
            response.raise_for_status()
            text = extract_first_result(response.text, self.result_selector)
        except Exception as exc:
            elapsed = int((time.monotonic() - started) * 1000)
            return AnswerRecord(
                question_id=question.id,
                elapsed_ms=elapsed,
                delivery_failed=True,
                note=f"probe failed: {type(exc).__name__}: {exc}",
            )
        elapsed = int((time.monotonic() - started) * 1000)
        if text is None:
            return AnswerRecord(
                question_id=question.id,
                elapsed_ms=elapsed,
                delivery_failed=True,
                note=f"no node matched {self.result_selector!r}",
            )
        return AnswerRecord(question_id=question.id, answer=text, elapsed_ms=elapsed)


class GenericApiAdapter:
    """POSTs each prompt to a JSON question-answering endpoint."""

    kind = "generic_api"

    def __init__(self, config: dict):
        self.endpoint = config["endpoint"]
        self.request_field = str(config.get("request_field", "question"))
        self.response_field = str(config.get("response_field", "answer"))
        self.auth_env = config.get("auth_env")
        self.request_timeout_ms = int(config.get("request_timeout_ms", DEFAULT_REQUEST_TIMEOUT_MS))
        self._capabilities = frozenset(config.get("capabilities", ["text"]))
        self._subject = _subject_from_config(config, self.kind, self._capabilities)

    def subject(self) -> SubjectDescriptor:
        return self._subject

    def capabilities(self) -> frozenset[str]:
        return self._capabilities

    def _headers(self) -> dict[str, str]:
        headers = {"User-Agent": DEFAULT_USER_AGENT}
        if self.auth_env:
            import os

            token = os.environ.get(self.auth_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def probe(self, question: Question) -> AnswerRecord:
        started = time.monotonic()
        try:
            response = httpx.post(
                self.endpoint,
                json={self.request_field: question.prompt},
                headers=self._headers(),
                timeout=self.request_timeout_ms / 1000,
            )
            response.raise_for_status()
            payload = response.json()
            value = payload
            for key in self.response_field.split("."):
                value = value[key]
        except Exception as exc:
            elapsed = int((time.monotonic() - started) * 1000)
            return AnswerRecord(
                question_id=question.id,
                elapsed_ms=elapsed,
                delivery_failed=True,
                note=f"probe failed: {type(exc).__name__}: {exc}",
            )
        elapsed = int((time.monotonic() - started) * 1000)
        return AnswerRecord(question_id=question.id, answer=str(value), elapsed_ms=elapsed)


class HumanAdapter:
    """Humans answer through the session API, not through probes."""

    kind = "human"

    def __init__(self, config: dict | None = None):
        self.config = config or {}
        self._capabilities = frozenset(self.config.get("capabilities", ["text", "audio", "image"]))
        self._subject = _subject_from_config(self.config, self.kind, self._capabilities)

    def subject(self) -> SubjectDescriptor:
        return self._subject

    def capabilities(self) -> frozenset[str]:
        return self._capabilities

    def probe(self, question: Question) -> AnswerRecord:
        return AnswerRecord(
            question_id=question.id,
            delivery_failed=True,
            note="human subjects answer via submit_answer, not probes",
        )


def apply_scripted_manual_verdicts(queue, adapter: ScriptedAdapter, session_id: str) -> int:
    """Clear a session's pending manual verdicts from the scripted fixture. Returns count applied."""
    applied = 0
    for item in queue.pending():
        if item.session_id != session_id:
            continue
        if item.question_id in adapter.manual_verdicts:
            passed, note = adapter.manual_verdicts[item.question_id]
            queue.record_manual_verdict(item.answer_id, passed, note)
            applied += 1
    return applied


_ADAPTERS = {
    "scripted": ScriptedAdapter,
    "http_search": HttpSearchAdapter,
    "generic_api": GenericApiAdapter,
    "human": HumanAdapter,
}


def load_adapter_config(source: str | Path | IO[str] | dict):
    """Build an adapter from a kind-discriminated JSON config."""
    if isinstance(source, dict):
        data = source
    elif isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        data = json.load(source)
    kind = data.get("kind")
    if kind not in _ADAPTERS:
        raise ValueError(f"unknown adapter kind {kind!r} (expected one of {sorted(_ADAPTERS)})")
    return _ADAPTERS[kind](data)
