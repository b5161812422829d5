"""CSV output with a provenance header.

Files start with ``# key: value`` comment lines, then a header row and data
rows.  Floats are written with 9 significant digits, so re-reading and
re-writing a report reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from . import __version__

SIG_DIGITS = 9


class ReportError(ValueError):
    pass


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        # adding 0.0 maps -0.0 to 0.0 so the text re-parses to the same bytes
        return format(v + 0.0, f".{SIG_DIGITS}g")
    if v is None:
        return ""
    return str(v)


def parse_value(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def content_hash(obj) -> str:
    """sha256 of the canonical JSON form of ``obj``."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def provenance(scenario_hash: str, tol, **extra) -> dict:
    out = {"tool": "holoqc", "version": __version__, "scenario_sha256": scenario_hash, "tol": format_value(tol)}
    out.update({k: format_value(v) for k, v in extra.items()})
    return out


def render(rows: Sequence[Mapping], columns: Optional[Sequence[str]] = None,
           header: Optional[Mapping[str, str]] = None) -> str:
    if not rows:
        raise ReportError("nothing to report")
    columns = list(columns or rows[0].keys())
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in columns])
    return buf.getvalue()


def emit_report(rows: Sequence[Mapping], path: Optional[Path] = None, columns: Optional[Sequence[str]] = None,
                header: Optional[Mapping[str, str]] = None) -> str:
    """Render ``rows`` as CSV and write it to ``path`` if given.  Returns the text."""
    text = render(rows, columns, header)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def read_report(path_or_text) -> tuple[dict, list[dict]]:
    """Inverse of :func:`emit_report`: (header, rows) with values parsed."""
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    else:
        text = path_or_text
    header, body = {}, []
    for line in text.splitlines():
        if line.startswith("# ") and not body:
            k, _, v = line[2:].partition(": ")
            header[k] = v
        else:
            body.append(line)
    reader = csv.DictReader(body)
    rows = [{k: parse_value(v) for k, v in r.items()} for r in reader]
    return header, rows


def summarize(rows: Iterable[Mapping], keys: Sequence[str]) -> str:
    """One human-readable line per row."""
    lines = []
    for r in rows:
        lines.append("  ".join(f"{k}={format_value(r.get(k))}" for k in keys))
    return "\n".join(lines)
