"""Content-addressed response cache: one JSON file per request digest."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

from ..io import atomic_write_text


class ResponseCache:
    def __init__(self, root: Path):
        self.root = Path(root)

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[dict[str, Any]]:
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except json.JSONDecodeError:
            # torn files cannot happen with atomic writes; treat as a miss anyway
            return None

    def put(self, key: str, payload: dict[str, Any]) -> None:
        atomic_write_text(self._path(key), json.dumps(payload, ensure_ascii=False))

    def __contains__(self, key: str) -> bool:
        return self._path(key).exists()

    def __len__(self) -> int:
        return sum(1 for _ in self.root.glob("*/*.json")) if self.root.exists() else 0
