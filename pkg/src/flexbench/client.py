"""Streaming completion client with first-token and completion timestamping.

Speaks the OpenAI-compatible completions protocol with server-sent-event
streaming (the de facto interface of vLLM-style servers), so the harness
works unchanged against real inference servers and the bundled simulator.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import httpx

from flexbench.errors import ConfigError, TransportError
from flexbench.scenario import QueryMeasurement, QuerySample


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to reach the inference server."""

    base_url: str
    model_name: str
    request_timeout: float = 120.0
    stream: bool = True
    api_key: str | None = None

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ConfigError("base_url must be non-empty")
        if self.request_timeout <= 0:
            raise ConfigError("request_timeout must be > 0")


@dataclass
class TokenEvent:
    """One decoded stream frame."""

    request_id: int
    token_text: str
    is_final: bool
    usage: dict[str, int] | None = None


def _parse_frame(request_id: int, payload: dict) -> TokenEvent:
    choices = payload.get("choices") or []
    text = ""
    is_final = False
    if choices:
        text = choices[0].get("text") or ""
        is_final = choices[0].get("finish_reason") is not None
    usage = payload.get("usage") or None
    return TokenEvent(request_id=request_id, token_text=text, is_final=is_final, usage=usage)


class CompletionClient:
    """Shareable handle for concurrent in-flight requests.

    Each request owns its own stream state; the underlying connection pool is
    unbounded by default because the scenario engine enforces its own
    concurrency cap.
    """

    def __init__(self, endpoint: EndpointConfig, max_connections: int | None = None):
        self.endpoint = endpoint
        headers = {}
        if endpoint.api_key:
            headers["Authorization"] = f"Bearer {endpoint.api_key}"
        self._http = httpx.AsyncClient(
            base_url=endpoint.base_url.rstrip("/"),
            headers=headers,
            timeout=httpx.Timeout(endpoint.request_timeout),
            limits=httpx.Limits(max_connections=max_connections),
        )

    async def __aenter__(self) -> "CompletionClient":
        return self

    async def __aexit__(self, *exc: object) -> None:
        await self.aclose()

    async def aclose(self) -> None:
        await self._http.aclose()

    async def send_query(
        self, sample: QuerySample, scheduled_at: int | None = None
    ) -> QueryMeasurement:
        """Stream one completion and timestamp its lifecycle.

        Never raises for per-query failures; the returned measurement carries
        error="timeout" | "transport" | "protocol" instead, with any tokens
        received before the failure preserved.
        """
        body = {
            "model": self.endpoint.model_name,
            "prompt": sample.prompt_text,
            "max_tokens": sample.requested_output_tokens,
            "stream": True,
            "temperature": 0,
        }
        first_token_at: int | None = None
        last_frame_at: int | None = None
        saw_final = False
        usage: dict[str, int] | None = None
        parts: list[str] = []
        error: str | None = None

        issued_at = time.perf_counter_ns()
        try:
            async with self._http.stream("POST", "/v1/completions", json=body) as resp:
                if resp.status_code != 200:
                    await resp.aread()
                    error = "protocol"
                else:
                    async for line in resp.aiter_lines():
                        if not line.startswith("data:"):
                            continue
                        now = time.perf_counter_ns()
                        data = line[len("data:") :].strip()
                        if data == "[DONE]":
                            break
                        try:
                            event = _parse_frame(sample.id, json.loads(data))
                        except json.JSONDecodeError:
                            error = "protocol"
                            break
                        last_frame_at = now
                        if event.token_text:
                            parts.append(event.token_text)
                            if first_token_at is None:
                                first_token_at = now
                        if event.usage:
                            usage = event.usage
                        if event.is_final:
                            saw_final = True
                    if error is None and not saw_final:
                        error = "protocol"
        except (httpx.ConnectError, httpx.ConnectTimeout):
            error = "transport"
        except httpx.TimeoutException:
            error = "timeout"
        except httpx.HTTPError:
            error = "protocol"

        completed_at = last_frame_at if (error is None and last_frame_at) else time.perf_counter_ns()
        # Stream events are the token count; trust the server's usage numbers
        # over event counting when the final frame reports them.
        output_tokens = len(parts)
        if usage and int(usage.get("completion_tokens", 0)) >= 1:
            output_tokens = int(usage["completion_tokens"])

        return QueryMeasurement(
            id=sample.id,
            scheduled_at=scheduled_at if scheduled_at is not None else issued_at,
            issued_at=issued_at,
            first_token_at=first_token_at,
            completed_at=completed_at,
            output_tokens=output_tokens,
            output_text="".join(parts),
            error=error,
        )

    async def probe(self) -> str:
        """Identify the serving framework, e.g. "flexsim 0.1.0" or "vLLM v0.7.3".

        Servers without an identity route report "unknown". Raises
        TransportError when the endpoint is unreachable.
        """
        caps = await self._get_json("/v1/capabilities")
        if caps and caps.get("identity"):
            return str(caps["identity"])
        version = await self._get_json("/version")
        if version and version.get("version"):
            return f"vLLM v{version['version']}"
        return "unknown"

    async def _get_json(self, path: str) -> dict | None:
        try:
            resp = await self._http.get(path)
        except (httpx.ConnectError, httpx.ConnectTimeout, httpx.TimeoutException) as exc:
            raise TransportError(f"endpoint {self.endpoint.base_url} unreachable: {exc}") from exc
        except httpx.HTTPError:
            return None
        if resp.status_code != 200:
            return None
        try:
            data = resp.json()
        except ValueError:
            return None
        return data if isinstance(data, dict) else None
