"""Readers for the data formats and the bundled example dataset."""

from __future__ import annotations

import csv
import io
import json
from importlib import resources

from .model import PriorParams, SequentialDataset, TrialData

SEQ_HEADER = ["y1", "n1", "y2", "n2"]


def load_seqdata() -> SequentialDataset:
    """Resilience-training example: 1000 observations, 500 per group.

    Final counts are 249/500 (no training) and 269/500 (training). The
    order of arrivals is synthetic (fixed shuffle), so only the final row
    corresponds to published numbers.
    """
    text = resources.files("abkit").joinpath("data/seqdata.csv").read_text()
    return parse_sequential_csv(text)


def parse_sequential_csv(text: str) -> SequentialDataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("line 1: empty file") from None
    if header != SEQ_HEADER:
        raise ValueError(f"line 1: header must be {','.join(SEQ_HEADER)}, got {','.join(header)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(rec)}")
        try:
            rows.append(tuple(int(c) for c in rec))
        except ValueError:
            raise ValueError(f"line {lineno}: counts must be integers") from None
    if not rows:
        raise ValueError("no data rows")
    try:
        return SequentialDataset(rows)
    except ValueError as exc:
        # rows are 0-based in the dataset, the header is line 1
        msg = str(exc)
        if msg.startswith("row "):
            idx, rest = msg[4:].split(":", 1)
            raise ValueError(f"line {int(idx) + 2}:{rest}") from None
        raise


def read_trial_json(text: str) -> TrialData:
    obj = json.loads(text)
    missing = [k for k in ("y1", "n1", "y2", "n2") if k not in obj]
    if missing:
        raise ValueError(f"data JSON lacks {', '.join(missing)}")
    return TrialData(obj["y1"], obj["n1"], obj["y2"], obj["n2"])


def read_prior_json(text: str) -> PriorParams:
    obj = json.loads(text)
    try:
        return PriorParams(obj["mu_beta"], obj["sigma_beta"], obj["mu_psi"], obj["sigma_psi"])
    except KeyError as exc:
        raise ValueError(f"prior JSON lacks {exc.args[0]}") from None
