"""Versioned CSV schemas and the writer/reader pair for result rows.

Floats are written with 17 significant digits so every double survives a
write/read round trip unchanged. Rows are dicts keyed by column name.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # float | int | bool | str; empty bool cells read back as None


@dataclass(frozen=True)
class Schema:
    kind: str
    columns: tuple[Column, ...]
    version: int = SCHEMA_VERSION

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]


def _cols(spec: str) -> tuple[Column, ...]:
    out = []
    for item in spec.split():
        name, kind = item.split(":")
        out.append(Column(name, kind))
    return tuple(out)


DATADEP = Schema("datadep", _cols(
    "epsilon_nominal:float epsilon_realized:float delta:float k:int scheme:str "
    "observed:float bound:float theorem:str satisfied:bool seed:int"))

SWEEP = Schema("sweep", _cols(
    "cell:int epsilon_nominal:float epsilon_realized:float delta:float k:int scheme:str mode:str "
    "observed:float bound:float theorem:str satisfied:bool seed:int ratio:float status:str"))

REDUCE_CHECK = Schema("reduce_check", _cols("k:int horizon:int max_deviation:float passed:bool seed:int"))

LEMMA1 = Schema("lemma1", _cols(
    "a0:float mu_family:str eta_family:str horizon:int limsup_a:float limsup_eta:float satisfied:bool seed:int"))


def converge_schema(dim: int) -> Schema:
    coords = tuple(Column(f"x{i}", "float") for i in range(dim))
    return Schema("converge", (Column("n", "int"),) + coords + (Column("residual", "float"), Column("error", "float")))


def certify_schema(dim: int) -> Schema:
    wx = tuple(Column(f"witness_x{i}", "float") for i in range(dim))
    wy = tuple(Column(f"witness_y{i}", "float") for i in range(dim))
    return Schema("certify", (Column("condition", "str"), Column("verdict", "str")) + wx + wy + _cols(
        "slack:float samples:int seed:int"))


def format_value(value, kind: str) -> str:
    if kind == "float":
        v = float("nan") if value is None else float(value)
        return "nan" if math.isnan(v) else format(v, ".17g")
    if kind == "int":
        return str(int(value))
    if kind == "bool":
        if value is None:
            return ""
        return "true" if value else "false"
    s = str(value)
    if any(ch in s for ch in ",\n\r\""):
        raise ValueError(f"string field {s!r} would need quoting")
    return s


def parse_value(text: str, kind: str):
    if kind == "float":
        return float(text)
    if kind == "int":
        return int(text)
    if kind == "bool":
        if text == "":
            return None
        if text not in ("true", "false"):
            raise ValueError(f"not a boolean: {text!r}")
        return text == "true"
    return text


def emit_csv(rows, path, schema: Schema) -> None:
    """Write a header line and one line per row, LF-terminated, in the given order."""
    lines = [",".join(schema.names)]
    for i, row in enumerate(rows):
        if set(row) != set(schema.names):
            raise ValueError(f"row {i} does not match the {schema.kind} schema: {sorted(set(row) ^ set(schema.names))}")
        lines.append(",".join(format_value(row[c.name], c.kind) for c in schema.columns))
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path, schema: Schema) -> list[dict]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != schema.names:
                raise ValueError(f"{path}: header {header} does not match the {schema.kind} schema")
            return [{c.name: parse_value(v, c.kind) for c, v in zip(schema.columns, line)} for line in reader]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
