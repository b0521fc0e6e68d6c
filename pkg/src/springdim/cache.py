"""On-disk result cache for dimension reports.

Entries are JSON files named by a SHA-256 of the canonical request (type,
slope, parahoric, path flags, monomial order and a code-version stamp).
Writes go to a temporary file in the same directory and are renamed into
place, so concurrent processes never observe a partial entry.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Optional

CACHE_ENV = "SPRINGDIM_CACHE_DIR"
# bump when any algorithm change can alter cached numbers
CODE_VERSION = "springdim-1"
MONOMIAL_ORDER = "grevlex"


def default_root() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "springdim"


def request_key(**fields) -> str:
    payload = dict(fields, order=MONOMIAL_ORDER, version=CODE_VERSION)
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class ResultCache:
    def __init__(self, root: Optional[os.PathLike] = None, enabled: bool = True):
        self.root = Path(root) if root is not None else default_root()
        self.enabled = enabled

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        if not self.enabled:
            return None
        p = self._path(key)
        try:
            with open(p, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError):
            return None
        if data.get("version") != CODE_VERSION:
            return None
        return data.get("report")

    def put(self, key: str, report: dict) -> None:
        if not self.enabled:
            return
        p = self._path(key)
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump({"version": CODE_VERSION, "report": report}, fh)
            os.replace(tmp, p)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
