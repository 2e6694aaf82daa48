"""Output writers. Each file starts with a metadata header (tool, version, config hash)."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__

TOOL = "cavitylattice"


def config_hash(canonical: str) -> str:
    return hashlib.sha256(canonical.encode()).hexdigest()


def metadata(canonical: str, **extra) -> dict:
    out = {"tool": TOOL, "version": __version__, "config_sha256": config_hash(canonical)}
    out.update(extra)
    return out


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def write_json(path: Path, payload: dict, meta: dict) -> Path:
    path = Path(path)
    doc = {"metadata": meta, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_default) + "\n")
    return path


def _default(o):
    import numpy as np
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def read_csv(path: Path) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of :func:`write_csv`: ``(metadata, header, rows)`` as strings."""
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# ") and not lines:
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        else:
            lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]
