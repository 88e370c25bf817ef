"""Tabular text output with a commented units/criteria header."""

from __future__ import annotations

import json
from pathlib import Path


def write_table(path, columns, rows, header: dict | None = None) -> None:
    lines = []
    for key, val in (header or {}).items():
        lines.append(f"# {key}: {json.dumps(val, sort_keys=True)}")
    lines.append("# " + " ".join(columns))
    for row in rows:
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path) -> tuple[dict, list[str], list[list]]:
    header, columns, rows = {}, [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            body = line[2:]
            if ": " in body and not columns:
                key, val = body.split(": ", 1)
                header[key] = json.loads(val)
            else:
                columns = body.split()
        elif line.strip():
            rows.append([_parse(x) for x in line.split()])
    return header, columns, rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(x: str):
    try:
        return int(x)
    except ValueError:
        try:
            return float(x)
        except ValueError:
            return x
