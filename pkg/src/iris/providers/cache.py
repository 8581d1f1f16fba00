"""Content-addressed disk cache for provider responses.

The cache is the unit of experiment reproducibility: every provider call
is keyed by a digest of its canonical request serialization, so reruns
with a warm cache perform zero remote calls and reproduce byte-identical
stage outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from pathlib import Path
from typing import Any

__all__ = ["request_digest", "DiskCache", "NullCache"]


def request_digest(kind: str, payload: dict[str, Any]) -> str:
    """256-bit digest of a provider request.

    The serialization is field-order-fixed (sorted keys, no whitespace),
    so equal requests always produce equal digests.
    """
    canon = json.dumps(
        {"kind": kind, "payload": payload},
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class DiskCache:
    """One JSON file per digest, holding request, response and timestamp.

    Writes are atomic (write-temp-then-rename), so concurrent workers can
    share a cache directory; the worst case is writing the same content
    twice.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> Any | None:
        path = self._path(digest)
        try:
            with path.open("r", encoding="utf-8") as fh:
                entry = json.load(fh)
        except FileNotFoundError:
            with self._lock:
                self.misses += 1
            return None
        with self._lock:
            self.hits += 1
        return entry["response"]

    def put(self, digest: str, request: dict[str, Any], response: Any) -> None:
        entry = {
            "digest": digest,
            "request": request,
            "response": response,
            "timestamp": time.time(),
        }
        data = json.dumps(entry, ensure_ascii=False, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(data)
            os.replace(tmp, self._path(digest))
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


class NullCache:
    """Cache interface that never stores anything."""

    hits = 0
    misses = 0

    def get(self, digest: str) -> None:
        return None

    def put(self, digest: str, request: dict[str, Any], response: Any) -> None:
        pass
