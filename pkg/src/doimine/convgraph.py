"""Reply transitions and the weighted directed conversation graph over buckets.

A transition is an adjacent pair of opposite-direction messages inside a
dyad's merged timeline.  Each transition spreads the product of the two
endpoint bucket probabilities over all cross-bucket pairs; same-bucket mass
is discarded (no self-loops).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from doimine.corpus import DyadIndex
from doimine.errors import DataError
from doimine.nmf import BucketAssignment


@dataclass(frozen=True)
class Transition:
    first: str
    second: str
    dyad: tuple[str, str]


@dataclass
class ConversationGraph:
    """Directed bucket graph; edge weights accumulate transition mass."""

    k: int
    edges: dict[tuple[int, int], float] = field(default_factory=dict)
    message_mass: list[float] = field(default_factory=list)
    skipped_transitions: int = 0

    def __post_init__(self):
        if not self.message_mass:
            self.message_mass = [0.0] * self.k

    def weight(self, i: int, j: int) -> float:
        return self.edges.get((i, j), 0.0)

    def total_weight(self) -> float:
        return sum(self.edges.values())

    def write_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("src\tdst\tweight\n")
            for (i, j), w in sorted(self.edges.items()):
                fh.write(f"{i}\t{j}\t{w!r}\n")

    @classmethod
    def read_tsv(cls, path: str | Path, k: int | None = None) -> "ConversationGraph":
        edges: dict[tuple[int, int], float] = {}
        max_node = -1
        with open(path, encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                i, j, w = line.rstrip("\n").split("\t")
                edges[(int(i), int(j))] = float(w)
                max_node = max(max_node, int(i), int(j))
        return cls(k=k if k is not None else max_node + 1, edges=edges)


def extract_transitions(dyads: DyadIndex) -> list[Transition]:
    """Adjacent opposite-direction message pairs in every dyad timeline.

    Same-direction runs yield no pair; chaining is allowed (a message can
    close one transition and open the next).  No elapsed-time cutoff.
    """
    transitions: list[Transition] = []
    for pair, ids in dyads.pairs.items():
        for prev_id, next_id in zip(ids, ids[1:]):
            if dyads.by_id[prev_id].sender != dyads.by_id[next_id].sender:
                transitions.append(Transition(first=prev_id, second=next_id, dyad=pair))
    return transitions


def build_graph(
    transitions: Sequence[Transition],
    assignments: BucketAssignment,
    k: int,
) -> ConversationGraph:
    """Accumulate cross-bucket probability products over all transitions."""
    if k < 1:
        raise DataError(f"bucket count must be >= 1, got {k}")
    graph = ConversationGraph(k=k)
    for mid, buckets in assignments.entries.items():
        for b, p in buckets:
            if not 0 <= b < k:
                raise DataError(f"bucket {b} out of range for k={k}")
            graph.message_mass[b] += p
    for t in transitions:
        src = assignments.entries.get(t.first)
        dst = assignments.entries.get(t.second)
        if src is None or dst is None:
            graph.skipped_transitions += 1
            continue
        for bi, pi in src:
            for bj, pj in dst:
                if bi == bj:
                    continue
                key = (bi, bj)
                graph.edges[key] = graph.edges.get(key, 0.0) + pi * pj
    return graph
