"""Shared fixtures: the treebank corpus on disk and tiny HTTP stubs."""

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

import fixture_treebank as ft  # noqa: E402
from genmine.conllu import to_conllu  # noqa: E402


@pytest.fixture()
def fixture_corpus(tmp_path):
    """Write the 60-document corpus and its parses; returns (inputs, parses)."""
    inputs = ft.write_corpus(tmp_path)
    parses = ft.write_parses(tmp_path / "parses.conllu")
    return inputs, parses


@pytest.fixture()
def http_stub():
    """Start throwaway JSON-over-HTTP services on ephemeral ports.

    Usage: base_url = http_stub({"POST /parse": fn}) where fn takes the
    decoded request payload and returns (status, response_object).
    """
    servers = []

    def start(routes):
        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                self._dispatch("POST")

            def do_GET(self):
                self._dispatch("GET")

            def _dispatch(self, method):
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length) if length else b""
                payload = json.loads(raw) if raw else None
                handler = routes.get(f"{method} {self.path.split('?')[0]}")
                if handler is None:
                    self.send_response(404)
                    self.end_headers()
                    return
                status, body = handler(payload)
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, fmt, *args):
                pass

        server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_address[1]}"

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()


def parse_service_routes(calls=None):
    """Routes for a parse service that knows every treebank sentence.

    Unknown texts get a one-token placeholder parse, which the prefilter
    rejects, so filler sentences flow through without special cases.
    """
    blocks = {e.text: to_conllu(ft.parsed(e)) for e in ft.ENTRIES}

    def handle(payload):
        texts = payload["texts"]
        if calls is not None:
            calls.append(list(texts))
        out = []
        for text in texts:
            block = blocks.get(text)
            if block is None:
                block = ("# doc_id = stub\n# sent_index = 0\n"
                         f"1\t{text}\t{text}\tX\t_\t_\t0\troot\t_\t_\n")
            out.append(block)
        return 200, {"conllu": out}

    return {"POST /parse": handle}
