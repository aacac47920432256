"""Proposal engines: an HTTP chat-completions client and deterministic mocks."""
from __future__ import annotations

import hashlib
import os
import time

import httpx

from ..errors import ConfigError, EmptyResponse, EngineUnreachable, RateLimited

PRESET_TEMPERATURES = {"llama": 0.2, "qwen": 0.15, "r1": 0.1}
DEFAULT_TEMPERATURE = 0.2
RETRIES = 3


def prompt_hash(prompt):
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ProposalEngine:
    """Anything with ``complete(prompt, temperature) -> str``."""

    temperature = DEFAULT_TEMPERATURE

    def complete(self, prompt, temperature=None):
        raise NotImplementedError


def propose(prompt, engine, temperature=None):
    text = engine.complete(prompt, temperature if temperature is not None else engine.temperature)
    if text is None or not str(text).strip():
        raise EmptyResponse("the engine returned no text")
    return str(text)


class HTTPEngine(ProposalEngine):
    """POSTs ``{model, messages, temperature, max_tokens}`` to ``<base_url>/chat/completions``.

    Transport errors, 429 and 5xx responses are retried ``retries`` times
    with exponential backoff; ``sleep`` and ``transport`` are injectable so
    the retry logic can be tested without a network.
    """

    def __init__(self, base_url, model, api_key_env="COGFORGE_API_KEY", temperature=None,
                 max_tokens=4096, timeout=120.0, retries=RETRIES, backoff=1.0, sleep=time.sleep,
                 transport=None, preset=None):
        if not base_url:
            raise ConfigError("engine base_url is required")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        if temperature is None:
            temperature = PRESET_TEMPERATURES.get(preset or "", DEFAULT_TEMPERATURE)
        self.temperature = float(temperature)
        self.max_tokens = int(max_tokens)
        self.timeout = timeout
        self.retries = int(retries)
        self.backoff = float(backoff)
        self.sleep = sleep
        self.transport = transport

    def _headers(self):
        h = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "") if self.api_key_env else ""
        if key:
            h["Authorization"] = f"Bearer {key}"
        return h

    def complete(self, prompt, temperature=None):
        body = {"model": self.model, "messages": [{"role": "user", "content": prompt}],
                "temperature": self.temperature if temperature is None else float(temperature),
                "max_tokens": self.max_tokens}
        url = self.base_url + "/chat/completions"
        last = None
        with httpx.Client(timeout=self.timeout, transport=self.transport) as client:
            for attempt in range(self.retries + 1):
                if attempt:
                    self.sleep(self.backoff * 2 ** (attempt - 1))
                try:
                    r = client.post(url, json=body, headers=self._headers())
                except httpx.TransportError as e:
                    last = EngineUnreachable(f"{url}: {e}")
                    continue
                if r.status_code == 429:
                    last = RateLimited(f"{url} kept answering 429")
                    continue
                if r.status_code >= 500:
                    last = EngineUnreachable(f"{url} answered {r.status_code}")
                    continue
                if r.status_code >= 400:
                    raise EngineUnreachable(f"{url} rejected the request: {r.status_code} {r.text[:200]}")
                try:
                    text = r.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as e:
                    raise EmptyResponse(f"malformed completion payload: {e}") from e
                if not text or not text.strip():
                    raise EmptyResponse("completion had no content")
                return text
        raise last


class MockEngine(ProposalEngine):
    """Canned responses looked up by the SHA-256 of the prompt."""

    def __init__(self, responses, default=None):
        self.responses = dict(responses)
        self.default = default
        self.calls = []

    def complete(self, prompt, temperature=None):
        h = prompt_hash(prompt)
        self.calls.append(h)
        if h in self.responses:
            return self.responses[h]
        if prompt in self.responses:
            return self.responses[prompt]
        if self.default is None:
            raise EmptyResponse(f"no canned response for prompt {h[:12]}")
        return self.default


class ScriptedEngine(ProposalEngine):
    """Returns the scripted responses in order; the last one repeats."""

    def __init__(self, script):
        if not script:
            raise ConfigError("a scripted engine needs at least one response")
        self.script = list(script)
        self.calls = 0

    def reset(self):
        self.calls = 0

    def complete(self, prompt, temperature=None):
        i = min(self.calls, len(self.script) - 1)
        self.calls += 1
        return self.script[i]
