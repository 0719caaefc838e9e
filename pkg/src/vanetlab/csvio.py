"""CSV output with a leading config comment line, and the flat key-value
config-file parser.  All files carry a header row, '.' decimal separator and
LF line endings; readers skip '#' comment lines so parse(write(x)) == x.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration file or option value."""


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str | Path, header: list[str], rows: list, config: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        if config:
            fh.write("# config: " + " ".join(f"{k}={format_value(v)}"
                                             for k, v in config.items()) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def read_csv(path: str | Path) -> tuple[list[str], list[str], list[list[str]]]:
    """Returns (comment lines, header, rows) with all cells as strings."""
    comments: list[str] = []
    data: list[list[str]] = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            else:
                data.append(next(csv.reader(io.StringIO(line))))
    if not data:
        raise ConfigError(f"{path}: no header row")
    return comments, data[0], data[1:]


def read_table(path: str | Path) -> list[dict[str, str]]:
    """Rows as dicts keyed by the header."""
    _, header, rows = read_csv(path)
    return [dict(zip(header, row)) for row in rows]


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; '#' comments and blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
