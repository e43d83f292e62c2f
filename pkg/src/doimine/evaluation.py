"""Scoring of fuzzy domain assignments against editorial ground truth.

Implements the four-way match taxonomy (perfect / first / partial / none),
per-message precision, a size-matched random baseline, and Fleiss' kappa
for inter-annotator agreement.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from doimine.doi import DoIModel, MessageDoIAssignment
from doimine.errors import ConfigError, DataError


@dataclass
class GroundTruth:
    """Message id -> label set (empty = unlabeled), plus optional per-annotator sets."""

    labels: dict[str, frozenset[str]]
    alphabet: tuple[str, ...]
    per_annotator: dict[str, dict[str, frozenset[str]]] | None = None

    def scored_ids(self) -> list[str]:
        return sorted(mid for mid, labs in self.labels.items() if labs)


@dataclass
class MatchReport:
    perfect: float
    first: float
    partial: float
    none: float
    precision: float
    scored: int

    def to_dict(self) -> dict:
        return {
            "perfect": self.perfect,
            "first": self.first,
            "partial": self.partial,
            "none": self.none,
            "precision": self.precision,
            "scored": self.scored,
        }


def load_ground_truth(path: str | Path, alphabet: Sequence[str] | None = None) -> GroundTruth:
    """Ground-truth CSV: message_id, labels (semicolon-separated), [annotator_id].

    With an annotator column, per-annotator sets are kept for agreement
    computation and the scoring truth is the union over annotators.
    """
    per_annotator: dict[str, dict[str, frozenset[str]]] = {}
    merged: dict[str, set[str]] = {}
    has_annotators = False
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "message_id" not in reader.fieldnames or "labels" not in reader.fieldnames:
            raise DataError(f"{path}: header must contain message_id and labels")
        has_annotators = "annotator_id" in reader.fieldnames
        for row in reader:
            mid = row["message_id"]
            labs = frozenset(x for x in (row["labels"] or "").split(";") if x)
            merged.setdefault(mid, set()).update(labs)
            if has_annotators:
                ann = row.get("annotator_id") or "a0"
                per_annotator.setdefault(ann, {})[mid] = labs
    observed = sorted({lab for labs in merged.values() for lab in labs})
    alpha = tuple(alphabet) if alphabet is not None else tuple(observed)
    stray = set(observed) - set(alpha)
    if stray:
        raise DataError(f"{path}: labels {sorted(stray)} outside declared alphabet {alpha}")
    return GroundTruth(
        labels={mid: frozenset(labs) for mid, labs in merged.items()},
        alphabet=alpha,
        per_annotator=per_annotator if has_annotators else None,
    )


def write_ground_truth(path: str | Path, labels: Mapping[str, Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["message_id", "labels"])
        for mid in sorted(labels):
            writer.writerow([mid, ";".join(labels[mid])])


def apply_labels(assignment: MessageDoIAssignment, model: DoIModel) -> dict[str, list[str]]:
    """Ordered per-message label lists from a labeled DoI model."""
    return {
        mid: [model.label_of(d) for d, _ in ranked]
        for mid, ranked in assignment.entries.items()
    }


def classify_match(algo: Sequence[str], edit: frozenset[str]) -> str:
    """One of perfect/first/partial/none; categories checked in that order."""
    if not algo:
        return "none"
    algo_set = set(algo)
    if algo_set == edit:
        return "perfect"
    if algo[0] in edit:
        return "first"
    if algo_set & edit:
        return "partial"
    return "none"


def match_assignments(
    algo_labels: Mapping[str, Sequence[str]],
    truth: GroundTruth,
    mode: str = "soft",
) -> MatchReport:
    """Score labeled assignments; unlabeled truth messages are excluded.

    Hard mode truncates every assignment to its top label; with singleton
    ground-truth sets the taxonomy then collapses to perfect/none.
    """
    if mode not in ("soft", "hard"):
        raise ConfigError(f"mode must be soft or hard, got {mode!r}")
    used = {lab for labs in algo_labels.values() for lab in labs}
    stray = used - set(truth.alphabet)
    if stray:
        raise DataError(f"assignment labels {sorted(stray)} outside truth alphabet")
    counts = Counter()
    precision_sum = 0.0
    scored = 0
    for mid in truth.scored_ids():
        if mid not in algo_labels:
            continue
        algo = list(algo_labels[mid])
        if mode == "hard":
            algo = algo[:1]
        edit = truth.labels[mid]
        counts[classify_match(algo, edit)] += 1
        algo_set = set(algo)
        precision_sum += len(algo_set & edit) / len(algo_set) if algo_set else 0.0
        scored += 1
    if scored == 0:
        raise DataError("no scored messages: ground truth and assignments are disjoint")
    return MatchReport(
        perfect=counts["perfect"] / scored,
        first=counts["first"] / scored,
        partial=counts["partial"] / scored,
        none=counts["none"] / scored,
        precision=precision_sum / scored,
        scored=scored,
    )


def random_baseline(
    truth: GroundTruth,
    alphabet: Sequence[str],
    size_distribution: Sequence[int],
    trials: int,
    seed: int,
) -> MatchReport:
    """Match fractions for uniformly random ordered label lists.

    Each scored message draws a list size from the empirical size
    distribution of the real assignments, then an ordered sample of distinct
    labels; fractions and precision are averaged over trials.

    The candidate lists are enumerable for realistic alphabets, so each
    trial draws from one categorical distribution over (size, permutation)
    pairs and scores through precomputed outcome tables.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if not size_distribution:
        raise ConfigError("size_distribution is empty")
    alpha = list(alphabet)
    sizes = np.asarray(size_distribution, dtype=np.int64)
    if sizes.min() < 1:
        raise ConfigError("assignment sizes must be >= 1")
    scored_ids = truth.scored_ids()
    if not scored_ids:
        raise DataError("ground truth has no labeled messages")

    # categorical space of ordered label lists, weighted by the size pool
    size_counts = Counter(min(int(s), len(alpha)) for s in sizes)
    pool_n = len(sizes)
    cat_lists: list[tuple[str, ...]] = []
    cat_prob: list[float] = []
    for s, cnt in sorted(size_counts.items()):
        perms = list(permutations(alpha, s))
        for pm in perms:
            cat_lists.append(pm)
            cat_prob.append((cnt / pool_n) / len(perms))
    probs = np.asarray(cat_prob)
    probs /= probs.sum()

    # outcome and precision tables per distinct truth set
    distinct_sets: list[frozenset[str]] = []
    set_index: dict[frozenset[str], int] = {}
    ts_ids = np.empty(len(scored_ids), dtype=np.int64)
    for i, mid in enumerate(scored_ids):
        edit = truth.labels[mid]
        if edit not in set_index:
            set_index[edit] = len(distinct_sets)
            distinct_sets.append(edit)
        ts_ids[i] = set_index[edit]
    keys = ("perfect", "first", "partial", "none")
    key_code = {k: i for i, k in enumerate(keys)}
    outcome_tab = np.empty((len(distinct_sets), len(cat_lists)), dtype=np.int64)
    precision_tab = np.empty((len(distinct_sets), len(cat_lists)))
    for t, edit in enumerate(distinct_sets):
        for c, picked in enumerate(cat_lists):
            outcome_tab[t, c] = key_code[classify_match(picked, edit)]
            precision_tab[t, c] = len(set(picked) & edit) / len(picked)

    rng = np.random.default_rng(seed)
    totals = np.zeros(4)
    precision_total = 0.0
    n = len(scored_ids)
    for _ in range(trials):
        draws = rng.choice(len(cat_lists), size=n, p=probs)
        outcomes = outcome_tab[ts_ids, draws]
        totals += np.bincount(outcomes, minlength=4) / n
        precision_total += float(precision_tab[ts_ids, draws].mean())
    totals /= trials
    return MatchReport(
        perfect=float(totals[0]),
        first=float(totals[1]),
        partial=float(totals[2]),
        none=float(totals[3]),
        precision=precision_total / trials,
        scored=n,
    )


def _binary_fleiss(label_counts: np.ndarray, n_raters: int) -> float:
    """Fleiss' kappa for one N x 2 category-count table."""
    n = n_raters
    if n < 2:
        raise ConfigError("Fleiss' kappa needs at least 2 raters")
    p_i = (np.sum(label_counts**2, axis=1) - n) / (n * (n - 1))
    p_bar = float(np.mean(p_i))
    p_j = label_counts.sum(axis=0) / label_counts.sum()
    p_e = float(np.sum(p_j**2))
    if np.isclose(p_e, 1.0):
        return 1.0 if np.isclose(p_bar, 1.0) else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


def fleiss_kappa(annotator_matrices: Sequence[np.ndarray]) -> float:
    """Macro-averaged binary Fleiss' kappa over labels.

    Input: one (items x labels) binary matrix per annotator, same shape and
    item order across annotators.
    """
    if len(annotator_matrices) < 2:
        raise ConfigError("Fleiss' kappa needs at least 2 annotators")
    mats = [np.asarray(m, dtype=np.int64) for m in annotator_matrices]
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise DataError("annotator matrices differ in shape")
    n_raters = len(mats)
    stacked = np.stack(mats)  # (raters, items, labels)
    kappas = []
    for j in range(shape[1]):
        yes = stacked[:, :, j].sum(axis=0)  # votes per item
        table = np.column_stack([yes, n_raters - yes])
        kappas.append(_binary_fleiss(table, n_raters))
    return float(np.mean(kappas))


def kappa_from_truth(truth: GroundTruth) -> float:
    """Fleiss' kappa over the per-annotator sets of a loaded ground truth."""
    if not truth.per_annotator or len(truth.per_annotator) < 2:
        raise DataError("ground truth carries fewer than 2 annotators")
    annotators = sorted(truth.per_annotator)
    items = sorted(set.intersection(*(set(truth.per_annotator[a]) for a in annotators)))
    if not items:
        raise DataError("annotators share no items")
    labels = list(truth.alphabet)
    mats = []
    for a in annotators:
        rows = [[1 if lab in truth.per_annotator[a][mid] else 0 for lab in labels] for mid in items]
        mats.append(np.asarray(rows))
    return fleiss_kappa(mats)


def infer_label_mapping(
    assignment: MessageDoIAssignment,
    truth: GroundTruth,
) -> dict[int, str]:
    """Best one-to-one DoI-to-label mapping by top-DoI/truth co-occurrence.

    Benchmarking helper for corpora with known labels; a human analyst
    normally names DoIs from their top terms instead.  Surplus DoIs (more
    DoIs than labels) each fall back to their own best label.
    """
    doi_ids = sorted({d for ranked in assignment.entries.values() for d, _ in ranked})
    labels = list(truth.alphabet)
    if not labels:
        raise DataError("truth alphabet is empty")
    contingency = np.zeros((len(doi_ids), len(labels)))
    idx_of = {d: i for i, d in enumerate(doi_ids)}
    lab_of = {lab: j for j, lab in enumerate(labels)}
    for mid, ranked in assignment.entries.items():
        edit = truth.labels.get(mid)
        if not edit:
            continue
        top = ranked[0][0]
        for lab in edit:
            contingency[idx_of[top], lab_of[lab]] += 1.0 / len(edit)
    rows, cols = linear_sum_assignment(-contingency)
    mapping = {doi_ids[r]: labels[c] for r, c in zip(rows, cols)}
    for d in doi_ids:
        if d not in mapping:
            mapping[d] = labels[int(np.argmax(contingency[idx_of[d]]))]
    return mapping
