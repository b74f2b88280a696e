"""Remote model clients and their offline stand-ins.

The captioner, embedding, and LLM services are HTTP endpoints with JSON
bodies (see API.md for the exact field names). Stub implementations are
deterministic and keep the whole pipeline runnable with no services up;
a client spec string picks the implementation: `stub://<seed>` or an
`http(s)://` endpoint URL.
"""

from __future__ import annotations

import json
import random
import urllib.error
import urllib.request
from dataclasses import dataclass

from .errors import BackendUnavailable, CaptionerUnavailable, LlmUnavailable


def _post_json(url: str, payload: dict, timeout: float) -> dict:
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return json.loads(response.read().decode("utf-8"))


@dataclass
class HttpCaptionerClient:
    url: str
    timeout: float = 60.0

    def sample(self, record_id: str, n: int) -> list[str]:
        try:
            reply = _post_json(self.url, {"record_id": record_id, "n": n}, self.timeout)
            return [str(c) for c in reply["captions"]]
        except (urllib.error.URLError, OSError, KeyError, ValueError) as exc:
            raise CaptionerUnavailable(f"{self.url}: {exc}") from exc


@dataclass
class HttpEmbeddingBackend:
    url: str
    timeout: float = 60.0

    def score(self, a: str, b: str) -> float:
        try:
            reply = _post_json(self.url, {"pairs": [[a, b]]}, self.timeout)
            return float(reply["scores"][0])
        except (urllib.error.URLError, OSError, KeyError, ValueError, IndexError) as exc:
            raise BackendUnavailable(f"{self.url}: {exc}") from exc


@dataclass
class HttpLlmClient:
    url: str
    timeout: float = 120.0

    def complete(self, system: str, user: str) -> str:
        try:
            reply = _post_json(self.url, {"system": system, "user": user}, self.timeout)
            return str(reply["completion"])
        except (urllib.error.URLError, OSError, KeyError, ValueError) as exc:
            raise LlmUnavailable(f"{self.url}: {exc}") from exc


# --- deterministic stubs --------------------------------------------------------

_SUBJECTS = (
    "a marine animal", "the pictured organism", "a sea creature",
    "the subject", "an underwater animal",
)
_SCENES = (
    "over a coral outcrop", "in open blue water", "near a sandy seabed",
    "among rocks and algae", "inside a reef crevice", "under dappled light",
    "beside a sponge garden",
)
_DETAILS = (
    "with strong color contrast", "showing its full body profile",
    "partly hidden from view", "facing the camera", "swimming with the current",
    "surrounded by smaller fish", "seen from the side",
)


@dataclass
class StubCaptionerClient:
    """Seeded pseudo-captioner: varied lengths, stable output per record."""

    seed: int = 0

    def sample(self, record_id: str, n: int) -> list[str]:
        rng = random.Random(f"{self.seed}:{record_id}")
        captions = []
        for _ in range(n):
            parts = [rng.choice(_SUBJECTS), rng.choice(_SCENES)]
            for _ in range(rng.randint(0, 2)):
                parts.append(rng.choice(_DETAILS))
            captions.append(" ".join(parts) + ".")
        return captions


@dataclass
class StubLlmClient:
    """Composes a grounded answer from the facts present in the prompt.

    Echoing the instruction keeps the rendered category in the response, so
    stub output passes the default validation rules whenever facts exist.
    """

    seed: int = 0

    def complete(self, system: str, user: str) -> str:
        del system
        lines = user.splitlines()
        instruction = lines[0].strip() if lines else ""
        facts = [
            line.split(": ", 1)[1].strip()
            for line in lines
            if line.startswith("- ") and ": " in line
        ]
        opener = f"On the request ({instruction.rstrip('.')}): reliable references report the following."
        body = " ".join(f if f.endswith((".", "!", "?")) else f + "." for f in facts)
        closing = "Together these points give a concise and well grounded summary."
        return " ".join(part for part in (opener, body, closing) if part)


def make_captioner(spec: str):
    if spec.startswith("stub://"):
        return StubCaptionerClient(seed=int(spec[len("stub://") :] or 0))
    return HttpCaptionerClient(url=spec)


def make_embedder(spec: str):
    from .caption import OfflineTfCosineBackend

    if spec in ("", "offline", "tf-cosine"):
        return OfflineTfCosineBackend()
    return HttpEmbeddingBackend(url=spec)


def make_llm(spec: str):
    if spec.startswith("stub://"):
        return StubLlmClient(seed=int(spec[len("stub://") :] or 0))
    return HttpLlmClient(url=spec)
