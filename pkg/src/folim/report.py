"""Canonical report serialization (JSON and, for tables, CSV)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, is_dataclass
from fractions import Fraction

from . import __version__
from .errors import FolimError
from .evaluation import PRNG_NAME
from .rational import format_fraction


@dataclass
class RunManifest:
    command: str
    inputs: list[str] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    output: str | None = None
    tool_version: str = __version__
    prng: str = PRNG_NAME


def _decimal(x: float) -> float:
    return float(format(x, ".10g"))


def to_jsonable(obj):
    """Fractions become "p/q" strings, floats keep 10 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, float):
        return _decimal(obj)
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = [to_jsonable(v) for v in obj]
        return sorted(items, key=json.dumps) if isinstance(obj, (set, frozenset)) else items
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit_report(result: dict, fmt: str = "json") -> bytes:
    """Serialize a report; CSV is only defined for results carrying a ``table``."""
    data = to_jsonable(result)
    if fmt == "json":
        return (json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if fmt == "csv":
        table = data.get("table") if isinstance(data, dict) else None
        if not table:
            raise FolimError("CSV output is only available for tabular results (traces)")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table["columns"])
        writer.writerows(table["rows"])
        return buf.getvalue().encode("utf-8")
    raise FolimError(f"unknown report format {fmt!r}")
