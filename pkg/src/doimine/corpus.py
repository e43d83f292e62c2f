"""Message ingestion, dyad indexing, and corpus statistics.

A corpus is a list of directed, timestamped messages between distinct users.
Messages are grouped per unordered user pair into time-ordered conversation
sequences (dyads); ties in timestamp are broken by message id so the whole
pipeline is deterministic.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from doimine.errors import DataError

JSONL_KEYS = ("id", "sender", "recipient", "timestamp", "text")


@dataclass(frozen=True)
class Message:
    """One directed, timestamped text communication between two users."""

    id: str
    sender: str
    recipient: str
    timestamp: int
    text: str

    def dyad(self) -> tuple[str, str]:
        """Unordered user pair, canonically sorted."""
        return (self.sender, self.recipient) if self.sender <= self.recipient else (self.recipient, self.sender)


@dataclass
class LoadReport:
    """Counters for records dropped during loading."""

    self_messages: int = 0
    malformed: int = 0
    duplicate_ids: int = 0

    def total(self) -> int:
        return self.self_messages + self.malformed + self.duplicate_ids


@dataclass
class LoadResult:
    messages: list[Message]
    report: LoadReport = field(default_factory=LoadReport)


@dataclass
class DyadIndex:
    """Map from unordered user pair to the time-ordered message-id sequence.

    Every message of the corpus appears in exactly one sequence; each
    sequence is sorted ascending by (timestamp, id).
    """

    pairs: dict[tuple[str, str], list[str]]
    by_id: dict[str, Message]

    def sequence(self, u: str, v: str) -> list[str]:
        key = (u, v) if u <= v else (v, u)
        return self.pairs[key]

    def messages_of(self, pair: tuple[str, str]) -> list[Message]:
        return [self.by_id[mid] for mid in self.pairs[pair]]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass
class CorpusStats:
    user_count: int
    dyad_count: int
    message_count: int
    conv_len_mean: float
    conv_len_median: float
    msg_len_mean: float
    msg_len_median: float

    def to_dict(self) -> dict:
        return {
            "user_count": self.user_count,
            "dyad_count": self.dyad_count,
            "message_count": self.message_count,
            "conv_len_mean": self.conv_len_mean,
            "conv_len_median": self.conv_len_median,
            "msg_len_mean": self.msg_len_mean,
            "msg_len_median": self.msg_len_median,
        }


def _coerce_record(raw: dict, where: str) -> Message:
    missing = [k for k in JSONL_KEYS if k not in raw]
    if missing:
        raise DataError(f"{where}: missing fields {missing}")
    ts = raw["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        # Sub-second or non-integer sources must be pre-truncated upstream.
        raise DataError(f"{where}: timestamp must be an integer, got {ts!r}")
    if ts < 0:
        raise DataError(f"{where}: negative timestamp {ts}")
    msg = Message(
        id=str(raw["id"]),
        sender=str(raw["sender"]),
        recipient=str(raw["recipient"]),
        timestamp=ts,
        text=str(raw["text"]),
    )
    if not msg.id:
        raise DataError(f"{where}: empty message id")
    return msg


def load_messages(path: str | Path, format: str = "jsonl", strict: bool = True) -> LoadResult:
    """Load messages from a JSONL or CSV file, preserving file order.

    Self-messages (sender == recipient) are always skipped and counted.
    Malformed records and duplicate ids raise DataError naming the line in
    strict mode; with strict=False they are skipped and counted instead.
    """
    fmt = format.lower()
    if fmt == "jsonl":
        raw_records = _iter_jsonl(path)
    elif fmt == "csv":
        raw_records = _iter_csv(path)
    else:
        raise DataError(f"unknown corpus format {format!r}")

    messages: list[Message] = []
    seen: set[str] = set()
    report = LoadReport()
    for where, raw, err in raw_records:
        if err is not None:
            if strict:
                raise DataError(f"{where}: {err}")
            report.malformed += 1
            continue
        try:
            msg = _coerce_record(raw, where)
        except DataError:
            if strict:
                raise
            report.malformed += 1
            continue
        if msg.sender == msg.recipient:
            report.self_messages += 1
            continue
        if msg.id in seen:
            if strict:
                raise DataError(f"{where}: duplicate message id {msg.id!r}")
            report.duplicate_ids += 1
            continue
        seen.add(msg.id)
        messages.append(msg)
    return LoadResult(messages=messages, report=report)


def _iter_jsonl(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                yield where, None, f"invalid JSON ({exc.msg})"
                continue
            if not isinstance(raw, dict):
                yield where, None, "record is not an object"
                continue
            yield where, raw, None


def _iter_csv(path: str | Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(JSONL_KEYS) - set(reader.fieldnames):
            raise DataError(f"{path}: CSV header must contain columns {','.join(JSONL_KEYS)}")
        for record in reader:
            where = f"{path}:{reader.line_num}"
            raw = {k: record.get(k) for k in JSONL_KEYS}
            if any(v is None for v in raw.values()):
                yield where, None, "short row"
                continue
            try:
                raw["timestamp"] = int(raw["timestamp"])
            except ValueError:
                yield where, None, f"non-integer timestamp {raw['timestamp']!r}"
                continue
            yield where, raw, None


def write_messages_jsonl(path: str | Path, messages: Iterable[Message]) -> None:
    """Write messages in the canonical JSONL interchange format."""
    with open(path, "w", encoding="utf-8") as fh:
        for m in messages:
            fh.write(
                json.dumps(
                    {"id": m.id, "sender": m.sender, "recipient": m.recipient, "timestamp": m.timestamp, "text": m.text},
                    sort_keys=True,
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def build_dyads(messages: Sequence[Message]) -> DyadIndex:
    """Partition messages into per-pair sequences sorted by (timestamp, id)."""
    by_id: dict[str, Message] = {}
    pairs: dict[tuple[str, str], list[str]] = {}
    for msg in messages:
        if msg.id in by_id:
            raise DataError(f"duplicate message id {msg.id!r}")
        by_id[msg.id] = msg
        pairs.setdefault(msg.dyad(), []).append(msg.id)
    for key, ids in pairs.items():
        ids.sort(key=lambda mid: (by_id[mid].timestamp, mid))
    # canonical pair order keeps downstream iteration deterministic
    ordered = dict(sorted(pairs.items()))
    return DyadIndex(pairs=ordered, by_id=by_id)


def corpus_stats(
    messages: Sequence[Message],
    dyads: DyadIndex,
    tokenizer: Callable[[str], list[str]],
) -> CorpusStats:
    """Conversation-length and message-length statistics.

    conv_len is measured in messages per dyad; msg_len in tokens per message
    using the raw (pre-filter) tokenizer.
    """
    if not messages:
        raise DataError("empty corpus")
    conv_lens = [len(ids) for ids in dyads.pairs.values()]
    msg_lens = [len(tokenizer(m.text)) for m in messages]
    users = {m.sender for m in messages} | {m.recipient for m in messages}
    return CorpusStats(
        user_count=len(users),
        dyad_count=len(dyads.pairs),
        message_count=len(messages),
        conv_len_mean=statistics.fmean(conv_lens),
        conv_len_median=float(statistics.median(conv_lens)),
        msg_len_mean=statistics.fmean(msg_lens),
        msg_len_median=float(statistics.median(msg_lens)),
    )
