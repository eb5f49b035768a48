"""CSV and text-report writing with a provenance header (tool version, config hash)."""

from __future__ import annotations

import csv
import math
import os

from . import __version__


def header_lines(config_sha256: str, command: str, extra=()) -> list:
    lines = [f"cylscat {__version__}", f"config_sha256 {config_sha256}", f"command {command}"]
    lines.extend(extra)
    return lines


def _fmt(v):
    if hasattr(v, "item"):  # numpy scalars
        v = v.item()
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, fieldnames, rows, header=()) -> str:
    """Write ``rows`` (dicts) under ``# ``-prefixed header lines; floats in round-trip form."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fieldnames)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in fieldnames])
    return str(path)


def read_csv(path):
    """Rows of a file written by ``write_csv`` as dicts of strings (header comments skipped)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_text(path, text: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return str(path)
