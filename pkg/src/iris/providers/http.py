"""Shared HTTP plumbing for the remote provider clients."""

from __future__ import annotations

import os
import time

import requests

from ..errors import ProviderError

__all__ = ["auth_headers", "post_json"]


def auth_headers(token_env: str) -> dict[str, str]:
    """Build request headers; API tokens come from the environment."""
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(token_env) or os.environ.get("IRIS_API_TOKEN")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def post_json(
    session: requests.Session,
    endpoint: str,
    body: dict,
    headers: dict[str, str],
    retries: int,
    timeout: float,
    backoff: float,
    digest: str,
    kind: str,
) -> dict:
    """POST with bounded retries on transport errors and 5xx responses.

    4xx responses are not retried: they indicate a malformed request, not
    a transient failure.  The raised error carries the request digest.
    """
    last_error: Exception | None = None
    for attempt in range(max(1, retries)):
        try:
            resp = session.post(endpoint, json=body, headers=headers,
                                timeout=timeout)
        except requests.RequestException as e:
            last_error = e
        else:
            if resp.status_code < 400:
                try:
                    return resp.json()
                except ValueError as e:
                    raise ProviderError(
                        f"{kind} returned non-JSON response", digest) from e
            if resp.status_code < 500:
                raise ProviderError(
                    f"{kind} request rejected ({resp.status_code}): "
                    f"{resp.text[:200]}",
                    digest,
                )
            last_error = ProviderError(
                f"{kind} server error {resp.status_code}", digest)
        if attempt + 1 < retries:
            time.sleep(backoff * 2**attempt)
    raise ProviderError(
        f"{kind} transport failure after {retries} attempts: {last_error}",
        digest,
    )
