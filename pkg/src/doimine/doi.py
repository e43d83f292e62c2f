"""Domains of interaction: bucket communities plus fuzzy message assignment.

A DoI is one community of buckets.  Its top terms are ranked by summing
term weights over the member buckets.  A message joins every DoI holding
at least one of its representative buckets, with probability equal to the
best such bucket probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from doimine.community import Partition
from doimine.errors import DataError
from doimine.nmf import BucketAssignment


@dataclass
class DoI:
    id: int
    buckets: list[int]
    top_terms: list[str]
    label: str | None = None


@dataclass
class DoIModel:
    dois: list[DoI]

    def bucket_to_doi(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for d in self.dois:
            for b in d.buckets:
                out[b] = d.id
        return out

    def label_of(self, doi_id: int) -> str:
        d = self.dois[doi_id]
        return d.label if d.label is not None else f"doi{d.id}"

    def set_labels(self, labels: dict[int, str]) -> None:
        for d in self.dois:
            if d.id in labels:
                d.label = labels[d.id]

    def to_dict(self) -> dict:
        return {
            "dois": [
                {"id": d.id, "label": d.label, "buckets": d.buckets, "top_terms": d.top_terms}
                for d in self.dois
            ]
        }

    def write_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def read_json(cls, path: str | Path) -> "DoIModel":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            dois=[
                DoI(id=d["id"], buckets=d["buckets"], top_terms=d["top_terms"], label=d["label"])
                for d in raw["dois"]
            ]
        )


@dataclass
class MessageDoIAssignment:
    """Per message: (DoI id, probability) list, descending, ties by DoI id."""

    entries: dict[str, list[tuple[int, float]]]

    def top_doi(self, message_id: str) -> int:
        return self.entries[message_id][0][0]

    def doi_ids(self, message_id: str) -> list[int]:
        return [d for d, _ in self.entries[message_id]]

    def write_jsonl(self, path: str | Path, model: DoIModel) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for mid in sorted(self.entries):
                record = {
                    "message_id": mid,
                    "dois": [
                        {"id": d, "label": model.label_of(d), "p": p}
                        for d, p in self.entries[mid]
                    ],
                }
                fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False))
                fh.write("\n")

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "MessageDoIAssignment":
        entries: dict[str, list[tuple[int, float]]] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                rec = json.loads(line)
                entries[rec["message_id"]] = [(d["id"], d["p"]) for d in rec["dois"]]
        return cls(entries=entries)


def form_dois(partition: Partition, W: np.ndarray, terms: Sequence[str], n_terms: int) -> DoIModel:
    """One DoI per community; top terms ranked by summed bucket weight."""
    if W.shape[1] != len(partition.labels):
        raise DataError(
            f"partition covers {len(partition.labels)} buckets but W has {W.shape[1]}"
        )
    dois: list[DoI] = []
    for com, buckets in sorted(partition.members().items()):
        scores = W[:, buckets].sum(axis=1)
        n_take = min(n_terms, len(terms))
        order = sorted(range(len(terms)), key=lambda i: (-scores[i], terms[i]))
        dois.append(DoI(id=com, buckets=sorted(buckets), top_terms=[terms[i] for i in order[:n_take]]))
    return DoIModel(dois=dois)


def assign_messages(assignments: BucketAssignment, model: DoIModel) -> MessageDoIAssignment:
    """Max bucket probability per DoI; never summed across buckets."""
    lookup = model.bucket_to_doi()
    missing = [b for mid in assignments.entries for b, _ in assignments.entries[mid] if b not in lookup]
    if missing:
        raise DataError(f"buckets {sorted(set(missing))} not covered by any DoI")
    out: dict[str, list[tuple[int, float]]] = {}
    for mid, buckets in assignments.entries.items():
        best: dict[int, float] = {}
        for b, p in buckets:
            d = lookup[b]
            if p > best.get(d, -1.0):
                best[d] = p
        ranked = sorted(best.items(), key=lambda dp: (-dp[1], dp[0]))
        out[mid] = ranked
    return MessageDoIAssignment(entries=out)
