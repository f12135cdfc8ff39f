"""Versioned pickle container for trained artifacts."""

from __future__ import annotations

import pickle
from pathlib import Path
from typing import Any

from .errors import IoFailure, ModelNotFound

FORMAT = "hsforecast"
VERSION = 1


def save(obj: Any, path: str | Path, kind: str) -> Path:
    path = Path(path)
    blob = {"format": FORMAT, "version": VERSION, "kind": kind, "payload": obj}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            pickle.dump(blob, fh, protocol=pickle.HIGHEST_PROTOCOL)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def load(path: str | Path, kind: str) -> Any:
    path = Path(path)
    if not path.is_file():
        raise ModelNotFound(f"no trained {kind} at {path}; run `train` first")
    try:
        with open(path, "rb") as fh:
            blob = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError) as exc:
        raise ModelNotFound(f"unreadable artifact {path}: {exc}") from exc
    if not isinstance(blob, dict) or blob.get("format") != FORMAT:
        raise ModelNotFound(f"{path} is not an {FORMAT} artifact")
    if blob.get("version") != VERSION or blob.get("kind") != kind:
        raise ModelNotFound(f"{path} holds {blob.get('kind')!r} v{blob.get('version')}, "
                            f"expected {kind!r} v{VERSION}")
    return blob["payload"]
