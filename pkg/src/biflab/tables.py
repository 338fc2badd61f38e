"""CSV output: comma separated, '#'-prefixed header, round-trip float text."""

from __future__ import annotations

import os


def fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if x == float("-inf"):
        return "-inf"
    return repr(x)


def write_csv(path, header, rows) -> str:
    """Write rows (iterables of numbers) under a '# a, b, c' header line."""
    path = os.fspath(path)
    with open(path, "w", newline="\n") as fh:
        fh.write("# " + ", ".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path):
    """(header fields, list of float rows)."""
    header, rows = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = [h.strip() for h in line[1:].split(",")]
                continue
            rows.append([float(v) for v in line.split(",")])
    return header, rows
