"""JSON-lines files of time/frequency attribution pairs.

One record per line::

    {"id": "...", "time": [...], "freq": [...], "meta": {...}}

``freq`` holds either the half spectrum (``len(time) // 2 + 1`` bins) or the
full spectrum (``len(time)`` entries).  A line carrying a ``"config"`` key and
no ``"id"`` is a header and is skipped by readers.  Records produced from a
degenerate attribution carry an ``"error"`` string instead of being dropped.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .spectral import n_bins
from .updetect import AttributionPair

__all__ = ["PairRecord", "read_pair_file", "write_pair_file", "record_from_pair", "parse_record"]


@dataclass
class PairRecord:
    sample_id: str
    time: Optional[np.ndarray] = None
    freq: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)
    error: Optional[str] = None
    line: int = 0

    def to_pair(self):
        return AttributionPair(self.time, self.freq, self.sample_id, dict(self.meta))


def _finite_floats(values, name):
    if not isinstance(values, list) or not values:
        raise ValueError(f"field {name!r} must be a non-empty array")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValueError(f"field {name!r} contains a non-finite or non-numeric entry")
        out.append(float(v))
    return np.array(out)


def parse_record(obj, line=0):
    """Validate one decoded JSON object; never raises, errors go to ``.error``."""
    sid = str(obj.get("id", f"line{line}")) if isinstance(obj, dict) else f"line{line}"
    if not isinstance(obj, dict):
        return PairRecord(sid, error="record is not a JSON object", line=line)
    meta = obj.get("meta") or {}
    if obj.get("error"):
        return PairRecord(sid, meta=meta, error=str(obj["error"]), line=line)
    try:
        t = _finite_floats(obj.get("time"), "time")
        f = _finite_floats(obj.get("freq"), "freq")
    except ValueError as exc:
        return PairRecord(sid, meta=meta, error=str(exc), line=line)
    if f.size not in (t.size, n_bins(t.size)):
        return PairRecord(sid, meta=meta, line=line,
                          error=f"freq length {f.size} is neither {t.size} nor {n_bins(t.size)}")
    return PairRecord(sid, t, f, meta, line=line)


def read_pair_file(path):
    """Read all records and the optional header.

    Returns
    -------
    header : dict or None
    records : list of PairRecord
        Malformed lines appear as records with ``error`` set.
    parse_errors : int
        Number of lines that were not valid JSON.
    """
    header = None
    records: List[PairRecord] = []
    parse_errors = 0
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                parse_errors += 1
                records.append(PairRecord(f"line{lineno}", error=f"invalid JSON: {exc}", line=lineno))
                continue
            if isinstance(obj, dict) and "config" in obj and "id" not in obj:
                header = obj
                continue
            records.append(parse_record(obj, lineno))
    return header, records, parse_errors


def record_from_pair(pair: AttributionPair, meta=None):
    """JSON-ready dict for a pair (with an ``error`` marker when degenerate)."""
    meta = dict(meta or {})
    rec = {"id": pair.sample_id, "time": [float(v) for v in pair.time_scores],
           "freq": [float(v) for v in pair.freq_scores], "meta": meta}
    degenerate = pair.meta.get("degenerate") if pair.meta else None
    if degenerate:
        rec["error"] = "degenerate attribution: " + ",".join(degenerate)
    return rec


def write_pair_file(path, records, header=None):
    with Path(path).open("w") as fh:
        if header is not None:
            fh.write(json.dumps({"config": header}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
