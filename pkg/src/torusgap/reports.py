"""JSON report writers; every report embeds the config hash and version."""
from __future__ import annotations

import json
from datetime import datetime, timezone

import numpy as np

from . import __version__

__all__ = ["write_report", "stamp", "to_jsonable"]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def stamp(config_hash: str | None = None) -> dict:
    meta = {"tool": "torusgap", "version": __version__,
            "created": datetime.now(timezone.utc).isoformat()}
    if config_hash is not None:
        meta["config_hash"] = config_hash
    return meta


def write_report(payload: dict, path, config_hash: str | None = None) -> None:
    body = {"meta": stamp(config_hash)}
    body.update(to_jsonable(payload))
    with open(path, "w", encoding="ascii") as fh:
        json.dump(body, fh, indent=2, sort_keys=False)
        fh.write("\n")
