"""HTTP plumbing shared by remote providers."""

from __future__ import annotations

import logging
import os
import time
from typing import Callable

import httpx

from .errors import ProviderError

log = logging.getLogger(__name__)

BACKOFF = (1.0, 2.0, 4.0)


def api_key(env_var: str | None) -> str | None:
    """Secrets come from the environment only."""
    if not env_var:
        return None
    key = os.environ.get(env_var)
    if not key:
        raise ProviderError(f"environment variable {env_var} is not set", kind="config")
    return key


def post_with_retry(
    client: httpx.Client,
    url: str,
    *,
    backoff: tuple[float, ...] = BACKOFF,
    sleep: Callable[[float], None] | None = None,
    **kwargs,
) -> httpx.Response:
    """POST, retrying transport errors and 5xx/429 responses.

    One initial attempt plus one retry per ``backoff`` delay. Other 4xx
    responses fail immediately.
    """
    sleep = sleep or time.sleep
    attempts = len(backoff) + 1
    last = "no attempt made"
    for attempt in range(attempts):
        if attempt:
            sleep(backoff[attempt - 1])
        try:
            resp = client.post(url, **kwargs)
        except httpx.HTTPError as exc:
            last = f"{type(exc).__name__}: {exc}"
            log.warning("POST %s failed (attempt %d/%d): %s", url, attempt + 1, attempts, last)
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last = f"HTTP {resp.status_code}"
            log.warning("POST %s returned %s (attempt %d/%d)", url, resp.status_code, attempt + 1, attempts)
            continue
        if resp.status_code >= 400:
            raise ProviderError(f"POST {url} returned HTTP {resp.status_code}", kind="http", attempts=attempt + 1)
        return resp
    raise ProviderError(f"POST {url} failed after {attempts} attempts: {last}", kind="transport", attempts=attempts)
