"""Potts-model community detection on the conversation graph.

Minimizes the Reichardt-Bornholdt Hamiltonian with a weighted
configuration-model null term by simulated annealing over single-node spin
flips, followed by a deterministic greedy sweep that only accepts strictly
improving moves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from doimine.convgraph import ConversationGraph
from doimine.errors import ConfigError, DataError


@dataclass
class SpinglassConfig:
    gamma: float = 1.0
    spins_max: int = 25
    start_temp: float = 1.0
    stop_temp: float = 0.01
    cooling: float = 0.99
    sweeps_per_temp: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.stop_temp < self.start_temp:
            raise ConfigError("require 0 < stop_temp < start_temp")
        if not 0 < self.cooling < 1:
            raise ConfigError(f"cooling must be in (0, 1), got {self.cooling}")
        if self.spins_max < 1:
            raise ConfigError(f"spins_max must be >= 1, got {self.spins_max}")
        if self.sweeps_per_temp < 1:
            raise ConfigError(f"sweeps_per_temp must be >= 1, got {self.sweeps_per_temp}")


@dataclass
class UndirectedGraph:
    """Weighted undirected graph with dense node ids 0..n-1."""

    n: int
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def add(self, i: int, j: int, w: float) -> None:
        if i == j:
            return
        key = (i, j) if i < j else (j, i)
        self.edges[key] = self.edges.get(key, 0.0) + w

    def strengths(self) -> np.ndarray:
        s = np.zeros(self.n)
        for (i, j), w in self.edges.items():
            s[i] += w
            s[j] += w
        return s

    def total_weight(self) -> float:
        return sum(self.edges.values())

    def adjacency_lists(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for (i, j), w in sorted(self.edges.items()):
            adj[i].append((j, w))
            adj[j].append((i, w))
        return adj


@dataclass
class Partition:
    """Dense community labels per node plus the final Potts energy."""

    labels: list[int]
    c: int
    hamiltonian: float

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for node, com in enumerate(self.labels):
            out.setdefault(com, []).append(node)
        return out

    def write_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("bucket\tcommunity\n")
            for node, com in enumerate(self.labels):
                fh.write(f"{node}\t{com}\n")

    @classmethod
    def read_tsv(cls, path: str | Path) -> "Partition":
        labels: list[int] = []
        with open(path, encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                _, com = line.rstrip("\n").split("\t")
                labels.append(int(com))
        c = len(set(labels))
        return cls(labels=labels, c=c, hamiltonian=math.nan)


def symmetrize(graph: ConversationGraph) -> UndirectedGraph:
    """Undirected weight = forward plus backward weight; isolated nodes kept."""
    und = UndirectedGraph(n=graph.k)
    for (i, j), w in graph.edges.items():
        und.add(i, j, w)
    return und


def _hamiltonian(graph: UndirectedGraph, labels: np.ndarray, gamma: float,
                 strengths: np.ndarray, total: float) -> float:
    intra = sum(w for (i, j), w in graph.edges.items() if labels[i] == labels[j])
    null = 0.0
    two_s = 2.0 * total
    for c in np.unique(labels):
        sc = strengths[labels == c]
        null += (sc.sum() ** 2 - np.dot(sc, sc)) / 2.0
    return -(intra - gamma * null / two_s)


def _compact(labels: np.ndarray) -> list[int]:
    remap: dict[int, int] = {}
    out = []
    for lab in labels:
        if lab not in remap:
            remap[lab] = len(remap)
        out.append(remap[lab])
    return out


def spinglass(graph: UndirectedGraph, config: SpinglassConfig) -> Partition:
    """Anneal single-node spin flips, then greedily refine; seed-deterministic."""
    if not graph.edges:
        raise DataError("spinglass requires a graph with at least one edge")
    n = graph.n
    q = config.spins_max
    rng = np.random.default_rng(config.seed)
    adj = graph.adjacency_lists()
    strengths = graph.strengths()
    total = graph.total_weight()
    two_s = 2.0 * total
    gamma = config.gamma

    labels = rng.integers(0, q, size=n)
    comm_strength = np.zeros(q)
    for v in range(n):
        comm_strength[labels[v]] += strengths[v]

    def delta(v: int, target: int) -> float:
        cur = labels[v]
        link_cur = 0.0
        link_tgt = 0.0
        for u, w in adj[v]:
            if labels[u] == cur:
                link_cur += w
            elif labels[u] == target:
                link_tgt += w
        null_cur = strengths[v] * (comm_strength[cur] - strengths[v]) / two_s
        null_tgt = strengths[v] * comm_strength[target] / two_s
        return -(link_tgt - gamma * null_tgt) + (link_cur - gamma * null_cur)

    def move(v: int, target: int) -> None:
        comm_strength[labels[v]] -= strengths[v]
        comm_strength[target] += strengths[v]
        labels[v] = target

    temp = config.start_temp
    while temp >= config.stop_temp:
        for _ in range(config.sweeps_per_temp):
            order = rng.permutation(n)
            targets = rng.integers(0, q - 1, size=n) if q > 1 else np.zeros(n, dtype=int)
            accept_draws = rng.random(n)
            for idx, v in enumerate(order):
                tgt = targets[idx]
                if tgt >= labels[v]:
                    tgt += 1
                if tgt >= q:
                    continue
                dh = delta(v, tgt)
                if dh <= 0 or accept_draws[idx] < math.exp(-dh / temp):
                    move(v, tgt)
        temp *= config.cooling

    uphill = greedy_refine(labels, adj, strengths, comm_strength, gamma, two_s, q)
    assert uphill == 0, "greedy sweep accepted an uphill move"

    compact = _compact(labels)
    ham = _hamiltonian(graph, np.asarray(compact), gamma, strengths, total)
    return Partition(labels=compact, c=len(set(compact)), hamiltonian=ham)


def greedy_refine(
    labels: np.ndarray,
    adj: list[list[tuple[int, float]]],
    strengths: np.ndarray,
    comm_strength: np.ndarray,
    gamma: float,
    two_s: float,
    q: int,
) -> int:
    """Repeated best-move passes in node order; returns uphill-move count (0)."""
    n = len(labels)
    uphill = 0
    improved = True
    while improved:
        improved = False
        for v in range(n):
            cur = labels[v]
            link = np.zeros(q)
            for u, w in adj[v]:
                link[labels[u]] += w
            null_cur = strengths[v] * (comm_strength[cur] - strengths[v]) / two_s
            base = link[cur] - gamma * null_cur
            best_tgt, best_dh = cur, 0.0
            for tgt in range(q):
                if tgt == cur:
                    continue
                dh = -(link[tgt] - gamma * strengths[v] * comm_strength[tgt] / two_s) + base
                if dh < best_dh - 1e-12:
                    best_tgt, best_dh = tgt, dh
            if best_tgt != cur:
                if best_dh > 0:
                    uphill += 1
                comm_strength[cur] -= strengths[v]
                comm_strength[best_tgt] += strengths[v]
                labels[v] = best_tgt
                improved = True
    return uphill


def spinglass_restarts(graph: UndirectedGraph, config: SpinglassConfig, restarts: int) -> Partition:
    """Best of several seeded runs; ties resolved toward the lowest seed."""
    if restarts < 1:
        raise ConfigError(f"restarts must be >= 1, got {restarts}")
    best: Partition | None = None
    for i in range(restarts):
        cfg = SpinglassConfig(
            gamma=config.gamma,
            spins_max=config.spins_max,
            start_temp=config.start_temp,
            stop_temp=config.stop_temp,
            cooling=config.cooling,
            sweeps_per_temp=config.sweeps_per_temp,
            seed=config.seed + i,
        )
        part = spinglass(graph, cfg)
        if best is None or part.hamiltonian < best.hamiltonian:
            best = part
    return best


def modularity(graph: UndirectedGraph, partition: Partition) -> float:
    """Weighted Newman-Girvan modularity of a full node partition."""
    if len(partition.labels) != graph.n:
        raise DataError("partition does not cover all nodes")
    total = graph.total_weight()
    if total <= 0:
        raise DataError("modularity undefined on zero total weight")
    strengths = graph.strengths()
    labels = np.asarray(partition.labels)
    q_val = 0.0
    for c in np.unique(labels):
        mask = labels == c
        intra = sum(w for (i, j), w in graph.edges.items() if labels[i] == c and labels[j] == c)
        s_c = strengths[mask].sum()
        q_val += intra / total - (s_c / (2.0 * total)) ** 2
    return float(q_val)
