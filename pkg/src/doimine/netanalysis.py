"""Social-network statistics over the per-domain communication subgraphs.

The communication graph has users as nodes and one directed arc per
retained message.  Each DoI induces the sub-multigraph of arcs whose
message belongs to it.  This module computes coverage, reciprocity, tie
share, tie-strength indicators, evolution curves, Lorenz/Gini inequality,
and in-in degree assortativity with jackknife errors and rewired baselines.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from doimine.corpus import DyadIndex, Message
from doimine.doi import MessageDoIAssignment
from doimine.errors import ConfigError, DataError, NumericalError
from doimine.seeds import substream
from doimine.textprep import split_tokens


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

@dataclass
class CommGraph:
    """User-level directed multigraph; one arc per retained message."""

    arcs: list[Message]
    neighbors: dict[str, frozenset[str]] | None = None
    groups: dict[str, frozenset[str]] | None = None
    items: dict[str, frozenset[str]] | None = None
    kinship: set[tuple[str, str]] | None = None

    def nodes(self) -> set[str]:
        out = set()
        for m in self.arcs:
            out.add(m.sender)
            out.add(m.recipient)
        return out

    def dyads(self) -> set[tuple[str, str]]:
        return {m.dyad() for m in self.arcs}


@dataclass
class DoISubgraph:
    doi_id: int
    arcs: list[Message]

    def nodes(self) -> set[str]:
        out = set()
        for m in self.arcs:
            out.add(m.sender)
            out.add(m.recipient)
        return out

    def dyads(self) -> set[tuple[str, str]]:
        return {m.dyad() for m in self.arcs}


def build_comm_graph(
    messages: Sequence[Message],
    assignments: MessageDoIAssignment,
    **metadata,
) -> CommGraph:
    """Keep the messages that carry a DoI assignment, in corpus order."""
    kept = [m for m in messages if m.id in assignments.entries]
    return CommGraph(arcs=kept, **metadata)


def induce_subgraph(comm: CommGraph, assignments: MessageDoIAssignment, doi_id: int) -> DoISubgraph:
    """Arcs whose message's DoI list contains doi_id; multi-assigned arcs repeat."""
    known = {d for ranked in assignments.entries.values() for d, _ in ranked}
    if doi_id not in known:
        raise DataError(f"unknown DoI id {doi_id}")
    arcs = [m for m in comm.arcs if doi_id in {d for d, _ in assignments.entries[m.id]}]
    return DoISubgraph(doi_id=doi_id, arcs=arcs)


def coverage(sub: DoISubgraph, full: CommGraph) -> tuple[float, float, float]:
    """(node, dyad, message) fractions of the full communication graph."""
    if not full.arcs:
        raise DataError("empty communication graph")
    return (
        len(sub.nodes()) / len(full.nodes()),
        len(sub.dyads()) / len(full.dyads()),
        len(sub.arcs) / len(full.arcs),
    )


# ---------------------------------------------------------------------------
# reciprocity and tie composition
# ---------------------------------------------------------------------------

def dyad_reciprocity(messages: Iterable[Message]) -> float:
    """min/max of the two directional message counts of one dyad."""
    counts = Counter(m.sender for m in messages)
    if not counts:
        raise DataError("dyad has no messages")
    if len(counts) == 1:
        return 0.0
    a, b = sorted(counts.values())[-2:]
    return a / b if b else 0.0


def _arcs_by_dyad(arcs: Iterable[Message]) -> dict[tuple[str, str], list[Message]]:
    grouped: dict[tuple[str, str], list[Message]] = defaultdict(list)
    for m in arcs:
        grouped[m.dyad()].append(m)
    return grouped


def reciprocity(arcs: Sequence[Message]) -> float:
    """Unweighted mean of per-dyad reciprocity over dyads with >= 1 message."""
    grouped = _arcs_by_dyad(arcs)
    if not grouped:
        raise DataError("no messages")
    return sum(dyad_reciprocity(ms) for ms in grouped.values()) / len(grouped)


def tie_share(
    assignments: MessageDoIAssignment,
    dyads: DyadIndex,
    mode: str = "hard",
) -> dict[int, float]:
    """Mean per-dyad proportion of messages attributed to each DoI.

    Hard mode credits each message's top DoI; soft mode splits credit
    p(m, D) / sum p over the message's DoIs.
    """
    if mode not in ("hard", "soft"):
        raise ConfigError(f"mode must be hard or soft, got {mode!r}")
    doi_ids = sorted({d for ranked in assignments.entries.values() for d, _ in ranked})
    totals = {d: 0.0 for d in doi_ids}
    n_dyads = 0
    for pair, ids in dyads.pairs.items():
        assigned = [mid for mid in ids if mid in assignments.entries]
        if not assigned:
            continue
        n_dyads += 1
        share = {d: 0.0 for d in doi_ids}
        for mid in assigned:
            ranked = assignments.entries[mid]
            if mode == "hard":
                share[ranked[0][0]] += 1.0
            else:
                total_p = sum(p for _, p in ranked)
                for d, p in ranked:
                    share[d] += p / total_p
        for d in doi_ids:
            totals[d] += share[d] / len(assigned)
    if n_dyads == 0:
        raise DataError("no dyad has assigned messages")
    return {d: totals[d] / n_dyads for d in doi_ids}


def jaccard(set_a: Iterable, set_b: Iterable) -> float:
    """|A & B| / |A | B|; defined as 0 when both sets are empty."""
    a, b = set(set_a), set(set_b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


# ---------------------------------------------------------------------------
# lexicon categories
# ---------------------------------------------------------------------------

@dataclass
class Lexicon:
    """Category word lists; entries ending in '*' match by prefix."""

    exact: dict[str, frozenset[str]]
    prefixes: dict[str, tuple[str, ...]]

    def categories(self) -> list[str]:
        return sorted(self.exact)

    def matches(self, category: str, token: str) -> bool:
        if category not in self.exact:
            raise ConfigError(f"unknown lexicon category {category!r}")
        if token in self.exact[category]:
            return True
        return any(token.startswith(p) for p in self.prefixes[category])


def load_lexicon(path: str | Path) -> Lexicon:
    """Lexicon file: "[category]" header lines followed by one entry per line."""
    exact: dict[str, set[str]] = {}
    prefixes: dict[str, list[str]] = {}
    current: str | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().lower()
                exact.setdefault(current, set())
                prefixes.setdefault(current, [])
                continue
            if current is None:
                raise DataError(f"{path}:{lineno}: entry before any [category] header")
            entry = line.lower()
            if entry.endswith("*"):
                prefixes[current].append(entry[:-1])
            else:
                exact[current].add(entry)
    if not exact:
        raise DataError(f"{path}: no categories found")
    return Lexicon(
        exact={c: frozenset(v) for c, v in exact.items()},
        prefixes={c: tuple(sorted(v)) for c, v in prefixes.items()},
    )


def lexicon_ratio(
    messages: Sequence[Message],
    lexicon: Lexicon,
    categories: Sequence[str],
) -> dict[str, float]:
    """Per category: matching tokens / total tokens, on raw pre-stem tokens."""
    for cat in categories:
        if cat not in lexicon.exact:
            raise ConfigError(f"unknown lexicon category {cat!r}")
    tokens = [tok for m in messages for tok in split_tokens(m.text)]
    if not tokens:
        return {cat: 0.0 for cat in categories}
    out = {}
    for cat in categories:
        hits = sum(1 for tok in tokens if lexicon.matches(cat, tok))
        out[cat] = hits / len(tokens)
    return out


# ---------------------------------------------------------------------------
# evolution curves
# ---------------------------------------------------------------------------

@dataclass
class EvolutionCurves:
    """family_length: conversation length -> DoI -> mean proportion.
    family_step: step index (1-based) -> DoI -> mean proportion of that step's message."""

    family_length: dict[int, dict[int, float]]
    family_step: dict[int, dict[int, float]]


def evolution_curves(
    assignments: MessageDoIAssignment,
    dyads: DyadIndex,
    max_step: int | None = None,
) -> EvolutionCurves:
    """Per-DoI message proportions at fixed conversation length and per step.

    Messages are attributed to their top-probability DoI.  Dyads whose
    messages lack assignments are skipped; steps count only assigned dyad
    sequences to keep proportions convex.
    """
    doi_ids = sorted({d for ranked in assignments.entries.values() for d, _ in ranked})
    by_length: dict[int, list[dict[int, float]]] = defaultdict(list)
    step_counts: dict[int, Counter] = defaultdict(Counter)
    step_totals: Counter = Counter()

    for pair, ids in dyads.pairs.items():
        tops = [assignments.entries[mid][0][0] for mid in ids if mid in assignments.entries]
        if not tops:
            continue
        length = len(tops)
        share = Counter(tops)
        by_length[length].append({d: share.get(d, 0) / length for d in doi_ids})
        for step, top in enumerate(tops, start=1):
            if max_step is not None and step > max_step:
                break
            step_counts[step][top] += 1
            step_totals[step] += 1

    family_length = {
        length: {
            d: sum(row[d] for row in rows) / len(rows) for d in doi_ids
        }
        for length, rows in sorted(by_length.items())
    }
    family_step = {
        step: {d: step_counts[step].get(d, 0) / step_totals[step] for d in doi_ids}
        for step in sorted(step_totals)
    }
    return EvolutionCurves(family_length=family_length, family_step=family_step)


def reciprocity_vs_length(dyads: DyadIndex) -> tuple[list[tuple[int, float]], float, float]:
    """Mean dyad reciprocity at each conversation length, plus an OLS fit.

    Returns (points, slope, intercept).
    """
    per_length: dict[int, list[float]] = defaultdict(list)
    for pair, ids in dyads.pairs.items():
        msgs = dyads.messages_of(pair)
        per_length[len(ids)].append(dyad_reciprocity(msgs))
    points = [(length, sum(vals) / len(vals)) for length, vals in sorted(per_length.items())]
    if len(points) < 2:
        raise DataError("need at least two distinct conversation lengths for a fit")
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    slope, intercept = np.polyfit(xs, ys, 1)
    return points, float(slope), float(intercept)


# ---------------------------------------------------------------------------
# inequality
# ---------------------------------------------------------------------------

@dataclass
class LorenzGini:
    points: list[tuple[float, float]]
    gini: float


def lorenz_gini(wealth: Sequence[float]) -> LorenzGini:
    """Lorenz curve points and the Gini coefficient of a wealth vector.

    The Gini is the mean absolute pairwise difference normalized by twice
    the mean, computed exactly via the sorted prefix-sum identity.
    """
    x = np.asarray(wealth, dtype=np.float64)
    if x.size == 0:
        raise DataError("empty wealth vector")
    if np.any(x < 0):
        raise DataError("wealth must be non-negative")
    total = float(x.sum())
    if total == 0.0:
        raise DataError("all-zero wealth vector")
    x = np.sort(x)
    n = x.size
    cum = np.cumsum(x)
    points = [(0.0, 0.0)] + [(float((i + 1) / n), float(cum[i] / total)) for i in range(n)]
    # sum_{i,j} |x_i - x_j| = 2 * sum_j (j * x_j - prefix_j), 0-indexed
    prefix = np.concatenate([[0.0], cum[:-1]])
    abs_diff_sum = 2.0 * float(np.sum(np.arange(n) * x - prefix))
    mu = total / n
    gini = abs_diff_sum / (2.0 * n * n * mu)
    return LorenzGini(points=points, gini=float(gini))


def in_degrees(arcs: Sequence[Message], collapse: bool = False) -> dict[str, int]:
    """In-degree per node: arc count, or distinct predecessors if collapsed."""
    deg: dict[str, int] = defaultdict(int)
    if collapse:
        preds: dict[str, set[str]] = defaultdict(set)
        for m in arcs:
            preds[m.recipient].add(m.sender)
        for node in {m.sender for m in arcs} | set(preds):
            deg[node] = len(preds.get(node, ()))
    else:
        for m in arcs:
            deg[m.recipient] += 1
        for m in arcs:
            deg.setdefault(m.sender, 0)
    return dict(deg)


def in_strengths(arcs: Sequence[Message]) -> dict[str, int]:
    """Alias of the multigraph in-degree: messages received per node."""
    return in_degrees(arcs, collapse=False)


# ---------------------------------------------------------------------------
# assortativity
# ---------------------------------------------------------------------------

@dataclass
class AssortativityReport:
    r: float
    jackknife_stderr: float
    rewired_r: float
    edge_count: int

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "jackknife_stderr": self.jackknife_stderr,
            "rewired_r": self.rewired_r,
            "edge_count": self.edge_count,
        }


def _pearson_from_sums(n, sx, sy, sxx, syy, sxy):
    num = n * sxy - sx * sy
    den = np.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))
    return num / den


def _edge_endpoint_values(edges: Sequence[tuple[str, str]], deg: Mapping[str, int]):
    x = np.array([deg[s] for s, _ in edges], dtype=np.float64)
    y = np.array([deg[t] for _, t in edges], dtype=np.float64)
    return x, y


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    n = len(x)
    den = (n * np.dot(x, x) - x.sum() ** 2) * (n * np.dot(y, y) - y.sum() ** 2)
    if den <= 0:
        raise NumericalError("assortativity undefined: zero variance of endpoint degrees")
    return float((n * np.dot(x, y) - x.sum() * y.sum()) / np.sqrt(den))


def _jackknife_stderr(x: np.ndarray, y: np.ndarray) -> float:
    n = len(x)
    sx, sy = x.sum(), y.sum()
    sxx, syy, sxy = np.dot(x, x), np.dot(y, y), np.dot(x, y)
    n1 = n - 1
    xs, ys = sx - x, sy - y
    xxs, yys, xys = sxx - x * x, syy - y * y, sxy - x * y
    num = n1 * xys - xs * ys
    den_sq = (n1 * xxs - xs * xs) * (n1 * yys - ys * ys)
    den_sq = np.maximum(den_sq, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_i = np.where(den_sq > 0, num / np.sqrt(den_sq), 0.0)
    var = (n - 1) / n * float(np.sum((r_i - r_i.mean()) ** 2))
    return math.sqrt(max(var, 0.0))


def rewire_edges(
    edges: list[tuple[str, str]],
    rng: np.random.Generator,
    swaps: int,
) -> list[tuple[str, str]]:
    """Degree-preserving double edge swaps; self-loop-creating swaps skipped."""
    out = list(edges)
    n = len(out)
    if n < 2:
        return out
    idx_a = rng.integers(0, n, size=swaps)
    idx_b = rng.integers(0, n, size=swaps)
    for a, b in zip(idx_a, idx_b):
        if a == b:
            continue
        (s1, t1), (s2, t2) = out[a], out[b]
        if s1 == t2 or s2 == t1:
            continue
        out[a], out[b] = (s1, t2), (s2, t1)
    return out


def assortativity(
    sub: DoISubgraph | CommGraph,
    collapse: bool = False,
    rewires: int = 20,
    swap_factor: int = 10,
    seed: int = 0,
) -> AssortativityReport:
    """In-in assortativity: Pearson correlation of (source, target) in-degrees
    over directed edges, with a leave-one-edge-out jackknife error and a
    degree-preserving rewired baseline.

    collapse=True first merges parallel arcs into simple directed edges.
    """
    arcs = sub.arcs
    if collapse:
        edges = sorted({(m.sender, m.recipient) for m in arcs})
    else:
        edges = [(m.sender, m.recipient) for m in arcs]
    if len(edges) < 2:
        raise DataError("assortativity needs at least 2 edges")
    deg = in_degrees(arcs, collapse=collapse)
    x, y = _edge_endpoint_values(edges, deg)
    r = _pearson(x, y)
    stderr = _jackknife_stderr(x, y)

    swaps = swap_factor * len(edges)
    rewired_vals = []
    for rep in range(rewires):
        rng = substream(seed, "rewire", rep)
        shuffled = rewire_edges(edges, rng, swaps)
        # swaps preserve both degree sequences, so the degree map carries over
        xr, yr = _edge_endpoint_values(shuffled, deg)
        try:
            rewired_vals.append(_pearson(xr, yr))
        except NumericalError:
            continue
    rewired_r = float(np.mean(rewired_vals)) if rewired_vals else math.nan
    return AssortativityReport(
        r=r, jackknife_stderr=stderr, rewired_r=rewired_r, edge_count=len(edges)
    )


# ---------------------------------------------------------------------------
# strength indicators
# ---------------------------------------------------------------------------

@dataclass
class StrengthReport:
    doi_id: int
    tie_share: float
    sigma_neighbors: float | None
    sigma_groups: float | None
    sigma_items: float | None
    conv_len_mean: float
    msg_len_mean: float
    lexicon_ratios: dict[str, float] = field(default_factory=dict)
    kinship_ratio: float | None = None

    def to_dict(self) -> dict:
        return {
            "doi_id": self.doi_id,
            "tie_share": self.tie_share,
            "sigma_neighbors": self.sigma_neighbors,
            "sigma_groups": self.sigma_groups,
            "sigma_items": self.sigma_items,
            "conv_len_mean": self.conv_len_mean,
            "msg_len_mean": self.msg_len_mean,
            "lexicon_ratios": self.lexicon_ratios,
            "kinship_ratio": self.kinship_ratio,
        }


def _mean_jaccard(dyad_pairs: Iterable[tuple[str, str]], sets: Mapping[str, frozenset[str]]) -> float:
    vals = [jaccard(sets.get(u, frozenset()), sets.get(v, frozenset())) for u, v in dyad_pairs]
    return sum(vals) / len(vals) if vals else 0.0


def strength_report(
    comm: CommGraph,
    assignments: MessageDoIAssignment,
    dyads: DyadIndex,
    doi_id: int,
    lexicon: Lexicon | None = None,
    lexicon_categories: Sequence[str] = (),
) -> StrengthReport:
    """Tie-strength indicators of one DoI subgraph.

    conv_len averages the full conversation length of dyads touched by the
    DoI; msg_len and lexicon ratios are computed on the DoI's own messages.
    """
    sub = induce_subgraph(comm, assignments, doi_id)
    if not sub.arcs:
        raise DataError(f"DoI {doi_id} has no arcs")
    sub_dyads = sorted(sub.dyads())
    shares = tie_share(assignments, dyads, mode="hard")

    conv_lens = [len(dyads.pairs[pair]) for pair in sub_dyads if pair in dyads.pairs]
    msg_lens = [len(split_tokens(m.text)) for m in sub.arcs]

    sigma_n = _mean_jaccard(sub_dyads, comm.neighbors) if comm.neighbors else None
    sigma_g = _mean_jaccard(sub_dyads, comm.groups) if comm.groups else None
    sigma_i = _mean_jaccard(sub_dyads, comm.items) if comm.items else None

    ratios = (
        lexicon_ratio(sub.arcs, lexicon, lexicon_categories)
        if lexicon is not None and lexicon_categories
        else {}
    )
    kin = None
    if comm.kinship is not None:
        kin = sum(1 for pair in sub_dyads if pair in comm.kinship) / len(sub_dyads)

    return StrengthReport(
        doi_id=doi_id,
        tie_share=shares.get(doi_id, 0.0),
        sigma_neighbors=sigma_n,
        sigma_groups=sigma_g,
        sigma_items=sigma_i,
        conv_len_mean=sum(conv_lens) / len(conv_lens) if conv_lens else 0.0,
        msg_len_mean=sum(msg_lens) / len(msg_lens) if msg_lens else 0.0,
        lexicon_ratios=ratios,
        kinship_ratio=kin,
    )


# ---------------------------------------------------------------------------
# metadata loaders
# ---------------------------------------------------------------------------

def load_user_sets(path: str | Path) -> dict[str, frozenset[str]]:
    """CSV adjacency: columns user, values (semicolon-separated)."""
    out: dict[str, frozenset[str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "user" not in reader.fieldnames or "values" not in reader.fieldnames:
            raise DataError(f"{path}: header must contain user and values")
        for row in reader:
            out[row["user"]] = frozenset(x for x in (row["values"] or "").split(";") if x)
    return out


def load_kinship(path: str | Path) -> set[tuple[str, str]]:
    """CSV: user_a, user_b, relation; pairs are stored unordered."""
    out: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"user_a", "user_b"} <= set(reader.fieldnames):
            raise DataError(f"{path}: header must contain user_a and user_b")
        for row in reader:
            a, b = row["user_a"], row["user_b"]
            out.add((a, b) if a <= b else (b, a))
    return out
