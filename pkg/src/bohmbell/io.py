"""CSV tables, their schemas, and the run manifest.

Floats are written with 17 significant digits so that reading a table back
gives the exact same doubles.
"""
from __future__ import annotations

import csv
import json
import subprocess
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_hash, config_to_mapping

__all__ = [
    "SchemaError",
    "Column",
    "SCHEMAS",
    "write_table",
    "read_table",
    "validate_table",
    "version_string",
    "write_manifest",
]


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # "int", "float" or "str"


def _cols(spec: str) -> tuple[Column, ...]:
    return tuple(Column(*item.split(":")) for item in spec.split())


SCHEMAS = {
    "sg_trajectories": _cols("run_id:int t:float z:float"),
    "sg_summary": _cols(
        "n:int n_up:int fraction_up:float expected_up:float stderr:float ci_low:float ci_high:float"
    ),
    "trajectories": _cols("pair_index:int t:float zA:float zB:float"),
    "pairs": _cols("pair_index:int r:float theta:float zA0:float zB0:float zA:float zB:float sA:int sB:int"),
    "chsh": _cols("theta:float M_hat:float stderr:float M_theory:float"),
    "disk_points": _cols("gamma:float pair_index:int r:float theta:float zA0:float zB0:float sA:int sB:int"),
    "separatrix": _cols("gamma:float arc:str theta:float U:float"),
    "marginals": _cols(
        "gamma:float P_A_plus:float P_B_plus:float n:int stderr_A:float stderr_B:float "
        "ci_A_low:float ci_A_high:float ci_B_low:float ci_B_high:float"
    ),
}


def _fmt(kind: str, value) -> str:
    if kind == "float":
        return "%.17g" % float(value)
    if kind == "int":
        return "%d" % int(value)
    return str(value)


def write_table(path: str | Path, schema: str, columns: dict) -> int:
    """Write ``columns`` (name -> equal-length sequence) under ``SCHEMAS[schema]``.

    Returns the number of rows written.
    """
    cols = SCHEMAS[schema]
    names = [c.name for c in cols]
    if set(columns) != set(names):
        raise SchemaError(f"{schema}: columns {sorted(columns)} do not match {names}")
    data = [np.asarray(columns[n]).ravel() for n in names]
    n_rows = data[0].size
    if any(d.size != n_rows for d in data):
        raise SchemaError(f"{schema}: columns have different lengths")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n_rows):
            w.writerow([_fmt(c.kind, d[i]) for c, d in zip(cols, data)])
    return n_rows


def _parse(kind: str, text: str):
    if kind == "float":
        return float(text)
    if kind == "int":
        return int(text)
    return text


def read_table(path: str | Path, schema: str) -> dict[str, np.ndarray]:
    """Read a table, checking it against its schema on the way."""
    cols = SCHEMAS[schema]
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = rows[0]
    if header != [c.name for c in cols]:
        raise SchemaError(f"{path}: header {header} does not match schema {schema}")
    values = {c.name: [] for c in cols}
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(cols):
            raise SchemaError(f"{path}:{line}: expected {len(cols)} fields, got {len(row)}")
        for c, text in zip(cols, row):
            try:
                values[c.name].append(_parse(c.kind, text))
            except ValueError:
                raise SchemaError(f"{path}:{line}: {c.name}={text!r} is not {c.kind}") from None
    kinds = {"float": float, "int": np.int64, "str": object}
    return {c.name: np.array(values[c.name], dtype=kinds[c.kind]) for c in cols}


def validate_table(path: str | Path, schema: str, n_rows: int | None = None) -> dict[str, np.ndarray]:
    table = read_table(path, schema)
    got = len(next(iter(table.values())))
    if n_rows is not None and got != n_rows:
        raise SchemaError(f"{path}: expected {n_rows} rows, found {got}")
    return table


def version_string() -> str:
    """Package version, plus ``git describe`` when run from a checkout."""
    try:
        version = metadata.version("bohmbell")
    except metadata.PackageNotFoundError:
        version = "unknown"
    try:
        here = Path(__file__).resolve().parent
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        desc = ""
    return f"{version}+{desc}" if desc else version


def write_manifest(
    out_dir: str | Path,
    config: ExperimentConfig,
    command: str,
    options: dict,
    outputs: list[str],
    workers: int,
    wall_time: float,
) -> Path:
    """Write ``manifest.json`` next to the outputs it describes."""
    manifest = {
        "command": command,
        "options": options,
        "config": config_to_mapping(config),
        "config_hash": config_hash(config),
        "seed": config.seed,
        "version": version_string(),
        "workers": workers,
        "outputs": outputs,
        "wall_time": wall_time,
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
