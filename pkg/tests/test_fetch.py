import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from phishbench.features import FetchError, extract, fetch_many, fetch_page, parse_html

PAGE = (b"<html><title>Fixture</title><a href='http://other.net/'>x</a><a href='/in'>y</a>"
        b"<form action='mailto:a@b.c'><input type=text></form></html>")


class _Fixture(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _send(self, status, body=b"", headers=()):
        self.send_response(status)
        for k, v in headers:
            self.send_header(k, v)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/page":
            self._send(200, PAGE, [("Content-Type", "text/html; charset=utf-8")])
        elif self.path == "/big":
            self._send(200, b"a" * 5000, [("Content-Type", "text/html")])
        elif self.path == "/moved":
            self._send(302, headers=[("Location", "/page")])
        elif self.path.startswith("/loop"):
            self._send(302, headers=[("Location", "/loop")])
        else:
            self._send(404, b"nope")


@pytest.fixture(scope="module")
def server():
    srv = ThreadingHTTPServer(("127.0.0.1", 0), _Fixture)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()
    srv.server_close()


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_inventory_matches_fixture(server):
    doc = fetch_page(server + "/page")
    assert doc.inventory == parse_html(PAGE.decode())
    assert not doc.truncated
    v = extract(server + "/page", page=doc)
    assert v.values["SubmitInfoToEmail"] == 1 and v.values["PctExtHyperlinks"] == 0.5


def test_connect_error():
    with pytest.raises(FetchError) as err:
        fetch_page(f"http://127.0.0.1:{free_port()}/", timeout=2)
    assert err.value.category == "connect"


def test_oversize_truncated(server):
    doc = fetch_page(server + "/big", max_bytes=1000)
    assert doc.truncated and len(doc.html) == 1000


def test_non_2xx(server):
    with pytest.raises(FetchError) as err:
        fetch_page(server + "/missing")
    assert err.value.category == "status"


def test_redirect_followed_and_base_updated(server):
    doc = fetch_page(server + "/moved")
    assert doc.base.path == "/page"
    with pytest.raises(FetchError) as err:
        fetch_page(server + "/loop")
    assert err.value.category == "redirect"


def test_fetch_many_keeps_order(server):
    out = fetch_many([server + "/page", server + "/missing", server + "/big"], max_concurrent=2)
    assert out[0].inventory.title == "Fixture"
    assert isinstance(out[1], FetchError)
    assert len(out[2].html) == 5000
    with pytest.raises(ValueError):
        fetch_many([], max_concurrent=0)
