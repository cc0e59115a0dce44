from __future__ import annotations

import csv
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from app.gap_lab import __version__
from .settings import output_dir

logger = logging.getLogger(__name__)


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, BaseModel):
        return jsonable(value.model_dump())
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


def build_metadata(command: str, config: dict[str, Any], schema_version: int, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    meta = {
        "version": __version__,
        "schema_version": schema_version,
        "command": command,
        "config": jsonable(config),
        "timestamp": utc_now_iso(),
    }
    if extra:
        meta.update(jsonable(extra))
    return meta


def default_output_path(command: str, fmt: str) -> Path:
    return output_dir() / f"{command}.{fmt}"


def write_json(path: Path, metadata: dict[str, Any], data: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump({"metadata": metadata, "data": jsonable(data)}, f, indent=2)
        f.write("\n")
    logger.info("wrote %s", path)
    return path


def write_csv(path: Path, metadata: dict[str, Any], rows: list[dict[str, Any]]) -> Path:
    """Rows under a block of '# key: <json>' metadata lines."""
    path.parent.mkdir(parents=True, exist_ok=True)
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with path.open("w", encoding="utf-8", newline="") as f:
        for key, value in metadata.items():
            f.write(f"# {key}: {json.dumps(jsonable(value), sort_keys=True)}\n")
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.items()})
    logger.info("wrote %s (%d rows)", path, len(rows))
    return path


def _cell(value: Any) -> Any:
    value = jsonable(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True)
    if value is None:
        return ""
    return value


def read_csv_metadata(path: Path) -> dict[str, Any]:
    meta: dict[str, Any] = {}
    with path.open("r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, _, raw = line[2:].partition(": ")
            meta[key] = json.loads(raw)
    return meta
