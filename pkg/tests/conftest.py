import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from anonengine import CharSpan, EntitySpan, attach_gold, ingest_text

RULING_DE = (
    "Hans Meier, Beschwerdeführer, gegen Paul Huber, Beschwerdegegner.\n"
    "Sachverhalt:\n"
    "A. Hans Meier wohnt in Zug. Paul Huber bestreitet dies. Die Zahlung "
    "ging auf das Konto CH93 0076 2011 6238 5295 7.\n"
    "Erwägungen:\n"
    "1. Das Gericht folgt Hans Meier."
)


@pytest.fixture
def ruling_de():
    return ingest_text(RULING_DE, "de")


@pytest.fixture
def ruling_de_gold(ruling_de):
    """The same ruling with every person name annotated as gold."""
    text = ruling_de.text
    spans = []
    for surface in ("Hans Meier", "Paul Huber"):
        offset = text.find(surface)
        while offset != -1:
            spans.append((offset, offset + len(surface), "PER"))
            offset = text.find(surface, offset + 1)
    return attach_gold(ruling_de, sorted(spans))


def make_doc(text, language="de", gold=()):
    doc = ingest_text(text, language)
    if gold:
        doc = attach_gold(doc, gold)
    return doc


def ent(start, end, text, label="PER", source="model", confidence=1.0):
    return EntitySpan(span=CharSpan(start, end), label=label,
                      surface=text[start:end], source=source,
                      confidence=confidence)


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length).decode("utf-8"))
        status, response = self.server.behavior(self.path, payload)
        body = json.dumps(response).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def all_o_behavior(path, payload):
    return 200, {"sentences": [
        {"labels": ["O"] * len(s["tokens"])} for s in payload["sentences"]
    ]}


@pytest.fixture
def stub_server():
    """HTTP stub speaking the inference protocol; behavior swappable."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.behavior = all_o_behavior
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        thread.join(timeout=5)


@pytest.fixture
def stub_endpoint(stub_server):
    return f"http://127.0.0.1:{stub_server.server_address[1]}"
