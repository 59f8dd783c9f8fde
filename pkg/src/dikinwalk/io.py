"""Output files: sample CSVs, JSON documents and run manifests.

Every file is written to a temporary sibling and renamed into place, so an
error never leaves a partial file behind.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"


def atomic_write(path: str | Path, data: str | bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def samples_csv(samples, header: bool = True) -> str:
    """Rows of ``x_1..x_n`` at 17 significant digits."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[1]
    buf = io.StringIO()
    if header:
        buf.write(",".join(f"x_{i + 1}" for i in range(n)) + "\n")
    if samples.shape[0]:
        np.savetxt(buf, samples, fmt=FLOAT_FORMAT, delimiter=",")
    return buf.getvalue()


def table_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_cell(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return FLOAT_FORMAT % v
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        # strict JSON has no NaN/Infinity
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_document(payload: dict, kind: str) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind}
    doc.update(_jsonable(payload))
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(path, payload: dict, kind: str) -> None:
    atomic_write(path, json_document(payload, kind))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def timestamp() -> str:
    """UTC time in ISO 8601; honours ``SOURCE_DATE_EPOCH`` for reproducible builds."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else time.time()
    return datetime.fromtimestamp(t, tz=timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict
    spec_sha256: dict
    seed: int
    outputs: list = field(default_factory=list)
    version: str = __version__
    started: str = field(default_factory=timestamp)
    finished: str | None = None

    def finish(self) -> None:
        self.finished = timestamp()

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "spec_sha256": self.spec_sha256,
            "seed": self.seed,
            "outputs": self.outputs,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
        }

    def write(self, path) -> None:
        write_json(path, self.to_dict(), "manifest")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
