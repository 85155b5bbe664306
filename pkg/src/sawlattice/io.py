"""Deterministic CSV / JSON writers.

Every output carries one timestamp line and a config hash.  In CSV the
timestamp line is the first line (``# generated=... config_hash=...``); in
JSON it is the ``"_generated"`` member, which sorts first and sits alone on
the second line.  Dropping that single line leaves output that is
byte-identical across reruns with the same flags.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

TIMESTAMP_MARKERS = ("# generated=", '"_generated"')


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def config_hash(config: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical config JSON."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()[:16]


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], config: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# generated={_now()} config_hash={config_hash(config)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(payload: dict, config: dict) -> str:
    doc = dict(payload)
    doc["_generated"] = _now()
    doc["config"] = config
    doc["config_hash"] = config_hash(config)
    return json.dumps(doc, sort_keys=True, indent=2, default=_default) + "\n"


def emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    # newline="" keeps LF endings on every platform
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def strip_timestamp(text: str) -> str:
    """The output with its timestamp line removed, for reproducibility checks."""
    return "".join(
        line for line in text.splitlines(keepends=True)
        if not line.lstrip().startswith(TIMESTAMP_MARKERS)
    )


def read_csv_rows(path: str) -> list:
    """Rows of a CSV written by :func:`render_csv`, as dicts of strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
