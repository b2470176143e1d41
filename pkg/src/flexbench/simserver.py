"""Deterministic stand-in for a vLLM-style inference server.

Serves the same streaming completions protocol the client speaks, but with a
closed-form performance model (queue + prefill + per-token decode), so every
harness metric has an analytic oracle and runs need no GPU. An admission gate
caps active decodes at ``max_concurrency``; excess requests queue FIFO.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import random
import socket
import threading
import time
import zlib
from dataclasses import asdict, dataclass

import httpx
import uvicorn
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from flexbench import __version__
from flexbench.errors import ConfigError

IDENTITY = f"flexsim {__version__}"

_VOCAB = (
    "the of and to in a is that for it as was with be by on not he this are or "
    "his from at which but have an had they you were their one all we can her "
    "has there been if more when will would who so no out up into them about"
).split()


@dataclass(frozen=True)
class SimProfile:
    """Performance model: all times in milliseconds."""

    prefill_base: float = 50.0
    prefill_per_token: float = 0.0
    decode_per_token: float = 10.0
    max_concurrency: int = 4
    jitter_pct: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.prefill_base, self.prefill_per_token, self.decode_per_token) < 0:
            raise ConfigError("sim delays must be >= 0")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if not 0 <= self.jitter_pct <= 50:
            raise ConfigError("jitter_pct must be in [0, 50]")


def completion_tokens(prompt: str, n_tokens: int) -> list[str]:
    """The exact token texts the simulator emits for a prompt.

    Filler words are drawn deterministically from the prompt digest and the
    token position, so tests can construct known references.
    """
    base = zlib.crc32(prompt.encode("utf-8"))
    return [_VOCAB[(base + 31 * k) % len(_VOCAB)] + " " for k in range(n_tokens)]


def completion_text(prompt: str, n_tokens: int) -> str:
    return "".join(completion_tokens(prompt, n_tokens))


def _jitter_rng_seed(profile: SimProfile, prompt: str) -> int:
    return (profile.seed * 0x9E3779B1 + zlib.crc32(prompt.encode("utf-8"))) & 0xFFFFFFFFFFFFFFFF


async def _sleep_until(deadline_s: float) -> None:
    delay = deadline_s - time.perf_counter()
    if delay > 0:
        await asyncio.sleep(delay)


def build_app(profile: SimProfile) -> FastAPI:
    app = FastAPI(title="flexsim")
    gate = asyncio.Semaphore(profile.max_concurrency)
    request_ids = itertools.count()

    def frame(req_id: int, model: str, text: str, final: bool, usage: dict | None) -> str:
        payload: dict = {
            "id": f"cmpl-{req_id}",
            "object": "text_completion",
            "model": model,
            "choices": [
                {"index": 0, "text": text, "logprobs": None,
                 "finish_reason": "length" if final else None}
            ],
        }
        if usage is not None:
            payload["usage"] = usage
        return f"data: {json.dumps(payload)}\n\n"

    @app.get("/v1/capabilities")
    async def capabilities() -> JSONResponse:
        return JSONResponse({"identity": IDENTITY, "profile": asdict(profile)})

    @app.get("/health")
    async def health() -> JSONResponse:
        return JSONResponse({"status": "ok"})

    @app.post("/v1/completions")
    async def completions(request: Request):
        body = await request.json()
        prompt = str(body.get("prompt", ""))
        model = str(body.get("model", "sim"))
        n_out = max(1, int(body.get("max_tokens") or 16))
        n_in = max(1, len(prompt.split()))
        req_id = next(request_ids)

        rng = random.Random(_jitter_rng_seed(profile, prompt))
        j = profile.jitter_pct / 100.0

        def scaled(ms: float) -> float:
            return ms * (1.0 + rng.uniform(-j, j)) if j > 0 else ms

        tokens = completion_tokens(prompt, n_out)
        usage = {"prompt_tokens": n_in, "completion_tokens": n_out,
                 "total_tokens": n_in + n_out}

        if not body.get("stream", False):
            async with gate:
                service_ms = scaled(profile.prefill_base + profile.prefill_per_token * n_in)
                service_ms += sum(scaled(profile.decode_per_token) for _ in range(n_out - 1))
                await asyncio.sleep(service_ms / 1000.0)
            return JSONResponse(
                {
                    "id": f"cmpl-{req_id}",
                    "object": "text_completion",
                    "model": model,
                    "choices": [{"index": 0, "text": "".join(tokens),
                                 "logprobs": None, "finish_reason": "length"}],
                    "usage": usage,
                }
            )

        async def stream():
            # Gate held for the whole decode: FIFO admission, no batching model.
            # Tokens are paced against absolute deadlines so sleep jitter does
            # not accumulate across a long generation.
            async with gate:
                start = time.perf_counter()
                due_ms = scaled(profile.prefill_base + profile.prefill_per_token * n_in)
                await _sleep_until(start + due_ms / 1000.0)
                yield frame(req_id, model, tokens[0], final=False, usage=None)
                for tok in tokens[1:]:
                    due_ms += scaled(profile.decode_per_token)
                    await _sleep_until(start + due_ms / 1000.0)
                    yield frame(req_id, model, tok, final=False, usage=None)
                yield frame(req_id, model, "", final=True, usage=usage)
                yield "data: [DONE]\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


# ---------------------------------------------------------------------------
# Lifecycle helpers


class SimServer:
    """Handle for a simulator running in a background thread."""

    def __init__(self, profile: SimProfile, server: uvicorn.Server, thread: threading.Thread,
                 host: str, port: int):
        self.profile = profile
        self.host = host
        self.port = port
        self._server = server
        self._thread = thread

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)

    def __enter__(self) -> "SimServer":
        return self

    def __exit__(self, *exc: object) -> None:
        self.stop()


def _claim_port(host: str, port: int) -> int:
    """Resolve port 0 to a free port; raise if an explicit port is taken."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, port))  # OSError when in use
        return sock.getsockname()[1]


def start_server(profile: SimProfile, port: int = 0, host: str = "127.0.0.1") -> SimServer:
    """Start the simulator in a daemon thread and wait until it accepts requests."""
    port = _claim_port(host, port)
    config = uvicorn.Config(build_app(profile), host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, name=f"flexsim-{port}", daemon=True)
    thread.start()

    deadline = time.monotonic() + 15.0
    url = f"http://{host}:{port}/health"
    while time.monotonic() < deadline:
        try:
            if httpx.get(url, timeout=1.0).status_code == 200:
                return SimServer(profile, server, thread, host, port)
        except httpx.HTTPError:
            time.sleep(0.02)
    server.should_exit = True
    raise RuntimeError(f"simulator failed to start on {host}:{port}")


def run_server(profile: SimProfile, port: int, host: str = "127.0.0.1") -> None:
    """Run the simulator in the foreground (CLI entry)."""
    _claim_port(host, port)
    uvicorn.run(build_app(profile), host=host, port=port, log_level="info")


def capability_report(base_url: str, timeout: float = 5.0) -> tuple[SimProfile, str]:
    """Fetch the active profile and identity from a running simulator."""
    resp = httpx.get(f"{base_url.rstrip('/')}/v1/capabilities", timeout=timeout)
    resp.raise_for_status()
    data = resp.json()
    return SimProfile(**data["profile"]), str(data["identity"])
