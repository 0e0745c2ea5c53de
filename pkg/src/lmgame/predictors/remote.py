"""Client for predictors served over the JSON-over-HTTP wire protocol.

    POST /v1/distribution {"context": [int, ...]}
        -> {"logprobs": [float x V], "vocab_size": V}   (log probs in nats)
    GET  /v1/info -> {"name": str, "vocab_size": int}

The server must return the full V-length log-probability vector; truncated
(top-k) replies would silently bias importance weights and are rejected.
"""

from __future__ import annotations

from typing import Sequence

import httpx
import numpy as np

from lmgame.predictors.base import Distribution, floor_and_normalize


class TransportError(RuntimeError):
    """Remote predictor unreachable or its reply malformed; carries the cause."""


class RemotePredictor:
    """Stateless per request; concurrent in-flight requests are fine."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
        display_name: str | None = None,
    ):
        self._client = httpx.Client(base_url=base_url, timeout=timeout, transport=transport)
        info = self._get_info()
        self.vocab_size = info["vocab_size"]
        self.display_name = display_name or info.get("name", base_url)

    def _get_info(self) -> dict:
        try:
            resp = self._client.get("/v1/info")
            resp.raise_for_status()
            info = resp.json()
            if not isinstance(info.get("vocab_size"), int) or info["vocab_size"] < 1:
                raise ValueError(f"bad vocab_size in info reply: {info!r}")
            return info
        except (httpx.HTTPError, ValueError) as err:
            raise TransportError(f"remote predictor info failed: {err}") from err

    def distribution(self, context: Sequence[int]) -> Distribution:
        try:
            resp = self._client.post("/v1/distribution", json={"context": list(context)})
            resp.raise_for_status()
            body = resp.json()
            logprobs = np.asarray(body["logprobs"], dtype=np.float64)
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as err:
            raise TransportError(f"remote distribution request failed: {err}") from err
        if logprobs.shape != (self.vocab_size,):
            raise TransportError(
                f"expected {self.vocab_size} logprobs, got shape {logprobs.shape}"
            )
        if not np.all(np.isfinite(logprobs)):
            raise TransportError("remote reply contains non-finite logprobs")
        # Stable exponentiation; flooring and renormalizing absorbs the shift.
        return floor_and_normalize(np.exp(logprobs - logprobs.max()))

    def close(self) -> None:
        self._client.close()
