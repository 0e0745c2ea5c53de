"""Ratio-sample records: the common currency between the games and the estimator.

Human data exported by the service and simulated data produced by the
simulation harness both take this shape, so the whole estimation pipeline
runs on one input format.

Export format is JSON lines, one object per unit-weight sample:

    {"round_id", "context_len", "x", "y_true", "r", "g_x", "g_y",
     "responder_id", "auto"}

round_id is structured "<prompt_id>/<k>"; the prefix before the final "/"
groups samples belonging to one prompt. Monte-Carlo multiplicities are
expanded into repeated lines on export (the weighted mean is unchanged);
ingest also accepts an optional "weight" key so exhaustive-mode files, whose
weights are generator probabilities, can round-trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, TextIO

EXPORT_FIELDS = (
    "round_id",
    "context_len",
    "x",
    "y_true",
    "r",
    "g_x",
    "g_y",
    "responder_id",
    "auto",
)


@dataclass(frozen=True)
class RatioSample:
    """One elicited probability ratio r = h(x)/h(y_true) with its generator context."""

    x: int
    y_true: int
    r: float
    g_x: float
    g_y: float
    weight: float = 1.0
    auto: bool = False
    prompt_id: str = ""
    round_id: str = ""
    responder_id: str = ""
    context_len: int = 0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"ratio must be positive, got {self.r}")
        if not (0 < self.g_x < 1 and 0 < self.g_y < 1):
            raise ValueError(f"generator probabilities must be in (0,1): {self.g_x}, {self.g_y}")
        if self.weight <= 0:
            raise ValueError(f"weight must be positive, got {self.weight}")
        if self.auto and (self.x != self.y_true or self.r != 1.0):
            raise ValueError("auto-answered samples must have x == y_true and r == 1")


def prompt_key(round_id: str) -> str:
    """The per-prompt grouping key embedded in a round id."""
    return round_id.rsplit("/", 1)[0]


def to_export_dicts(sample: RatioSample) -> list[dict]:
    base = {
        "round_id": sample.round_id,
        "context_len": sample.context_len,
        "x": sample.x,
        "y_true": sample.y_true,
        "r": sample.r,
        "g_x": sample.g_x,
        "g_y": sample.g_y,
        "responder_id": sample.responder_id,
        "auto": sample.auto,
    }
    if sample.weight == int(sample.weight):
        return [dict(base) for _ in range(int(sample.weight))]
    base["weight"] = sample.weight
    return [base]


def from_export_dict(obj: dict) -> RatioSample:
    return RatioSample(
        x=int(obj["x"]),
        y_true=int(obj["y_true"]),
        r=float(obj["r"]),
        g_x=float(obj["g_x"]),
        g_y=float(obj["g_y"]),
        weight=float(obj.get("weight", 1.0)),
        auto=bool(obj.get("auto", False)),
        prompt_id=obj.get("prompt_id") or prompt_key(str(obj.get("round_id", ""))),
        round_id=str(obj.get("round_id", "")),
        responder_id=str(obj.get("responder_id", "")),
        context_len=int(obj.get("context_len", 0)),
    )


def write_jsonl(samples: Iterable[RatioSample], fp: TextIO) -> int:
    n = 0
    for sample in samples:
        for obj in to_export_dicts(sample):
            fp.write(json.dumps(obj, sort_keys=True) + "\n")
            n += 1
    return n


def read_jsonl(source: str | Path | TextIO) -> list[RatioSample]:
    """Parse an export file; malformed lines raise with their line number."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fp:
            return read_jsonl(fp)
    samples = []
    for lineno, line in enumerate(source, 1):
        line = line.strip()
        if not line:
            continue
        try:
            samples.append(from_export_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
            raise ValueError(f"line {lineno}: malformed ratio record: {err}") from err
    return samples


def with_responder(sample: RatioSample, responder_id: str) -> RatioSample:
    return replace(sample, responder_id=responder_id)
