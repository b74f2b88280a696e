import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from seacorpus.errors import HostDisallowed, HttpStatusError
from seacorpus.ingest.fetch import Fetcher, PolitenessConfig, fetch_resource


class ScriptedHandler(BaseHTTPRequestHandler):
    script: dict[str, list[int]] = {}
    hits: list[tuple[str, float]] = []
    inflight = 0
    max_inflight = 0
    _lock = threading.Lock()

    def log_message(self, *args):
        pass

    def do_GET(self):
        cls = type(self)
        with cls._lock:
            cls.inflight += 1
            cls.max_inflight = max(cls.max_inflight, cls.inflight)
            cls.hits.append((self.path, time.monotonic()))
            statuses = cls.script.get(self.path)
            status = statuses.pop(0) if statuses else 200
        time.sleep(0.02)
        body = b"payload:" + self.path.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/octet-stream")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
        with cls._lock:
            cls.inflight -= 1


@pytest.fixture
def server():
    ScriptedHandler.script = {}
    ScriptedHandler.hits = []
    ScriptedHandler.inflight = 0
    ScriptedHandler.max_inflight = 0
    httpd = ThreadingHTTPServer(("127.0.0.1", 0), ScriptedHandler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}"
    httpd.shutdown()
    httpd.server_close()


def fast_config(**overrides):
    defaults = dict(min_host_interval=0.0, attempts=3, backoff_base=0.01, timeout=5.0)
    defaults.update(overrides)
    return PolitenessConfig(**defaults)


def test_fetch_passthrough(server):
    body, media_type = fetch_resource(f"{server}/a", fast_config())
    assert body == b"payload:/a"
    assert media_type == "application/octet-stream"


def test_retry_on_503_then_success(server):
    ScriptedHandler.script["/flaky"] = [503, 503]
    body, _ = fetch_resource(f"{server}/flaky", fast_config())
    assert body == b"payload:/flaky"
    assert len([h for h in ScriptedHandler.hits if h[0] == "/flaky"]) == 3


def test_http_status_error_after_retries(server):
    ScriptedHandler.script["/gone"] = [404, 404, 404]
    with pytest.raises(HttpStatusError) as err:
        fetch_resource(f"{server}/gone", fast_config())
    assert err.value.code == 404


def test_min_host_spacing(server):
    fetcher = Fetcher(config=fast_config(min_host_interval=0.1))
    fetcher.fetch(f"{server}/one")
    fetcher.fetch(f"{server}/two")
    times = [t for _, t in ScriptedHandler.hits]
    assert times[1] - times[0] >= 0.1


def test_denied_host():
    config = PolitenessConfig(denied_hosts=frozenset({"blocked.example"}))
    with pytest.raises(HostDisallowed):
        fetch_resource("http://blocked.example/x", config)


def test_non_http_scheme_rejected():
    with pytest.raises(HostDisallowed):
        fetch_resource("ftp://host/x", PolitenessConfig())


def test_one_outstanding_request_per_host(server):
    fetcher = Fetcher(config=fast_config())
    threads = [
        threading.Thread(target=fetcher.fetch, args=(f"{server}/c{i}",)) for i in range(5)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert ScriptedHandler.max_inflight == 1
