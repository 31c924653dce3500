"""Backend speaking the OpenAI-compatible chat-completions / embeddings API."""

from __future__ import annotations

from typing import Optional, Sequence

import httpx

from ..errors import MalformedResponse, ProviderUnavailable
from .base import ChatRequest, TransientError

RETRYABLE_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class OpenAICompatBackend:
    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        *,
        timeout: float = 120.0,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._http = httpx.Client(
            base_url=base_url.rstrip("/") + "/",
            headers=headers,
            timeout=timeout,
            transport=transport,
        )

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._http.post(path, json=payload)
        except httpx.TransportError as exc:
            raise TransientError(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code in RETRYABLE_STATUS:
            raise TransientError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise MalformedResponse("response body is not JSON") from exc

    def chat(self, req: ChatRequest) -> str:
        body = self._post(
            "chat/completions",
            {
                "model": req.model,
                "messages": [
                    {"role": "system", "content": req.system_prompt},
                    {"role": "user", "content": req.user_prompt},
                ],
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            },
        )
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            text = None
        if not text:
            raise MalformedResponse(f"{req.model}: completion has no text")
        return text

    def embed(self, model: str, texts: Sequence[str]) -> list[list[float]]:
        body = self._post("embeddings", {"model": model, "input": list(texts)})
        try:
            rows = sorted(body["data"], key=lambda d: d.get("index", 0))
            return [list(map(float, r["embedding"])) for r in rows]
        except (KeyError, TypeError) as exc:
            raise MalformedResponse(f"{model}: embedding response missing data") from exc

    def close(self) -> None:
        self._http.close()
