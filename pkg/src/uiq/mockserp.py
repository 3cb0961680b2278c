"""Embedded mock search engine for deterministic probe tests and demos.

Serves a period-style results page at /search?q=... . Queries are matched
after the same normalization grading applies to answers; unknown queries
get a page with no result blocks, which exercises the extraction-failure
path. The 2014 engines this harness was built around are gone, so every
shipped probe test runs against this server instead of the live network.
"""

from __future__ import annotations

import html
import threading
import time
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from uiq.grading import normalize_answer

# first-result snippets for the bundled bank's text questions
DEFAULT_RESULTS: dict[str, list[str]] = {
    "1+1=?": ["1+1=2 - Math Reference", "Addition worksheets for beginners"],
    "How much is 25 multiply by 4?": [
        "25 × 4 = 100 - Instant Calculator",
        "Multiplication drills: times tables up to 12",
    ],
    "How much is 36 divide 3?": ["36 / 3 = 12 - Instant Calculator"],
    "How much is the biquadrate of 2?": ["2 to the 4th power equals 16"],
    "How much is 128 extract three roots?": ["The cube root of 128 is 5.0397"],
    "Which planet is the largest in the solar system?": [
        "Jupiter is the largest planet in the solar system - AstroPedia",
        "Planets of the solar system, compared",
    ],
    "How much is 1 plus 1, please answer via characters": ["1 plus 1 equals 2"],
}


def render_results_page(query: str, snippets: list[str]) -> str:
    """A minimal table-era results page: one div.result per hit."""
    blocks = "\n".join(
        f'<div class="result"><h3 class="title">Result {i + 1}</h3>'
        f'<p class="snippet">{html.escape(text)}</p></div>'
        for i, text in enumerate(snippets)
    )
    return (
        "<html><head><title>mock search</title></head><body>"
        f"<form action='/search'><input name='q' value='{html.escape(query)}'></form>"
        f"<div id='results'>{blocks}</div>"
        "</body></html>"
    )


class MockSearchServer:
    """Threaded HTTP server; use as a context manager in tests."""

    def __init__(
        self,
        results: dict[str, list[str]] | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
        delay_ms: int = 0,
    ):
        table = results if results is not None else DEFAULT_RESULTS
        self._results = {normalize_answer(k): v for k, v in table.items()}
        self._delay_ms = delay_ms
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                if outer._delay_ms:
                    time.sleep(outer._delay_ms / 1000)
                parsed = urllib.parse.urlsplit(self.path)
                if parsed.path != "/search":
                    self.send_error(404)
                    return
                params = urllib.parse.parse_qs(parsed.query)
                query = params.get("q", [""])[0]
                snippets = outer._results.get(normalize_answer(query), [])
                body = render_results_page(query, snippets).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "text/html; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def query_url_template(self) -> str:
        return f"{self.base_url}/search?q={{QUERY}}"

    def start(self) -> "MockSearchServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockSearchServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
