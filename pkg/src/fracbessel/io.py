"""CSV and JSON writers with a fixed, reproducible number format."""

import json
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "%.17g"


def write_csv(path, header, columns):
    """Write equal-length ``columns`` under ``header``.

    Floats use 17 significant digits, ``.`` as decimal point and LF line
    endings, so a payload round-trips exactly.
    """
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    if data.shape[1] != len(header):
        raise ValueError(f"{len(header)} header fields for {data.shape[1]} columns")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, data, fmt=FLOAT_FORMAT, delimiter=",", newline="\n",
                   header=",".join(header), comments="")
    return path


def read_csv(path):
    """Return ``(header, data)`` for a file written by :func:`write_csv`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path, payload):
    """Write ``payload`` as UTF-8 JSON, keeping the insertion order of keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_plain(payload), fh, indent=2, ensure_ascii=False, allow_nan=True)
        fh.write("\n")
    return path
