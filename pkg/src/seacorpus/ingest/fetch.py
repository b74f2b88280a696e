"""Rate-limited resource fetching.

One outstanding request per host at a time, a configurable minimum gap
between requests to the same host, and exponential-backoff retries.
"""

from __future__ import annotations

import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Optional
from urllib.parse import urlparse

from ..errors import FetchTimeout, HostDisallowed, HttpStatusError

# transport(uri, timeout) -> (status code, media type, body bytes)
Transport = Callable[[str, float], tuple[int, str, bytes]]


@dataclass(frozen=True)
class PolitenessConfig:
    min_host_interval: float = 1.0  # seconds between requests to one host
    attempts: int = 3
    backoff_base: float = 0.5  # doubled per retry
    timeout: float = 30.0
    denied_hosts: frozenset[str] = frozenset()
    user_agent: str = "seacorpus/0.1"


def _urllib_transport(user_agent: str) -> Transport:
    def transport(uri: str, timeout: float) -> tuple[int, str, bytes]:
        request = urllib.request.Request(uri, headers={"User-Agent": user_agent})
        try:
            with urllib.request.urlopen(request, timeout=timeout) as response:
                media_type = response.headers.get_content_type()
                return response.status, media_type, response.read()
        except urllib.error.HTTPError as exc:
            return exc.code, exc.headers.get_content_type(), exc.read()
        except (socket.timeout, TimeoutError) as exc:
            raise FetchTimeout(uri) from exc
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                raise FetchTimeout(uri) from exc
            raise

    return transport


@dataclass
class Fetcher:
    """Shared politeness state; one instance per ingestion run."""

    config: PolitenessConfig = field(default_factory=PolitenessConfig)
    transport: Optional[Transport] = None
    _host_locks: dict[str, threading.Lock] = field(default_factory=dict)
    _last_request: dict[str, float] = field(default_factory=dict)
    _registry_lock: threading.Lock = field(default_factory=threading.Lock)

    def _host_lock(self, host: str) -> threading.Lock:
        with self._registry_lock:
            return self._host_locks.setdefault(host, threading.Lock())

    def fetch(self, uri: str) -> tuple[bytes, str]:
        """Fetch `uri`, honoring per-host spacing and the retry policy.

        Returns (body bytes, media type). Raises HostDisallowed,
        FetchTimeout, or HttpStatusError(code) for non-2xx after retries.
        """
        parsed = urlparse(uri)
        if parsed.scheme not in ("http", "https"):
            raise HostDisallowed(f"unsupported scheme: {uri}")
        host = (parsed.hostname or "").lower()
        if not host or host in self.config.denied_hosts:
            raise HostDisallowed(host or uri)

        transport = self.transport or _urllib_transport(self.config.user_agent)
        status = 0
        # The host lock is held across the whole request so at most one
        # request per host is ever outstanding.
        with self._host_lock(host):
            for attempt in range(self.config.attempts):
                if attempt:
                    time.sleep(self.config.backoff_base * (2 ** (attempt - 1)))
                self._wait_for_host_slot(host)
                status, media_type, body = transport(uri, self.config.timeout)
                self._last_request[host] = time.monotonic()
                if 200 <= status < 300:
                    return body, media_type
        raise HttpStatusError(status, uri)

    def _wait_for_host_slot(self, host: str):
        last = self._last_request.get(host)
        if last is None:
            return
        wait = self.config.min_host_interval - (time.monotonic() - last)
        if wait > 0:
            time.sleep(wait)


def fetch_resource(
    uri: str,
    politeness: PolitenessConfig,
    *,
    fetcher: Optional[Fetcher] = None,
    transport: Optional[Transport] = None,
) -> tuple[bytes, str]:
    """One-shot fetch; prefer a shared Fetcher when fetching many URIs."""
    if fetcher is None:
        fetcher = Fetcher(config=politeness, transport=transport)
    return fetcher.fetch(uri)
