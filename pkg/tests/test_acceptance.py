"""Acceptance gate: the eight release criteria at their stated tolerances.

Runs under pytest, or standalone for one pass/fail line per criterion:

    python tests/test_acceptance.py
"""

import json
import math
import sys
import tempfile
import time
from itertools import permutations
from pathlib import Path

import numpy as np

from doimine.community import SpinglassConfig, UndirectedGraph, spinglass
from doimine.corpus import build_dyads
from doimine.doi import MessageDoIAssignment
from doimine.evaluation import (
    GroundTruth,
    classify_match,
    fleiss_kappa,
    match_assignments,
    random_baseline,
)
from doimine.netanalysis import (
    CommGraph,
    assortativity,
    evolution_curves,
    in_degrees,
    lorenz_gini,
    reciprocity_vs_length,
)
from doimine.nmf import NmfConfig, factorize, select_k
from doimine.synth import SynthSpec, emit, generate, planted_crossover
from doimine.textprep import PrepConfig, build_vocabulary, vectorize

WORKDIR = Path(tempfile.mkdtemp(prefix="doimine_acceptance_"))


def planted_assignment(result):
    entries = {mid: [(int(lab[1:]), 1.0)] for mid, lab in result.labels.items()}
    return MessageDoIAssignment(entries=entries)


# ---------------------------------------------------------------------------
# 1. end-to-end planted recovery
# ---------------------------------------------------------------------------

def criterion_1_end_to_end() -> str:
    from doimine.cli import RunConfig, run_pipeline

    seeds = range(20)
    doi_hits = 0
    perfects = []
    slowest = 0.0
    for seed in seeds:
        spec = SynthSpec(
            domains=3, in_kind=0.95, overlap=0.05, users=3000, dyad_count=5000,
            conv_len_mean=4.0, msg_len_mean=8.0, vocab_per_domain=120, seed=1000 + seed,
        )
        corpus_dir = WORKDIR / f"c1_corpus_{seed}"
        run_dir = WORKDIR / f"c1_run_{seed}"
        emit(generate(spec), corpus_dir)
        cfg = RunConfig(
            corpus=str(corpus_dir / "corpus.jsonl"), output_dir=str(run_dir),
            truth=str(corpus_dir / "labels.csv"), seed=seed, k_grid=[12], mode="hard",
            low_df_cut=0.002, max_iter=200, init="random_uniform",
            cooling=0.95, sweeps_per_temp=30, analyze=False, baseline_trials=5,
        )
        started = time.time()
        run_pipeline(cfg)
        slowest = max(slowest, time.time() - started)
        detect = json.loads((run_dir / "detect_summary.json").read_text())
        match = json.loads((run_dir / "match_report.json").read_text())
        if detect["communities"] == 3:
            doi_hits += 1
        perfects.append(match["match"]["perfect"])
    assert doi_hits >= 18, f"3 DoIs in only {doi_hits}/20 seeds"
    assert min(perfects) >= 0.85, f"worst perfect-match fraction {min(perfects):.3f} < 0.85"
    assert slowest <= 300.0, f"slowest pipeline run {slowest:.0f}s > 5 min"
    return f"3 DoIs in {doi_hits}/20 seeds, perfect >= {min(perfects):.3f}, slowest run {slowest:.0f}s"


def test_criterion_1_end_to_end():
    print(criterion_1_end_to_end())


# ---------------------------------------------------------------------------
# 2. NMF correctness
# ---------------------------------------------------------------------------

def criterion_2_nmf() -> str:
    # (a) monotone objective on 20 random matrices
    for seed in range(20):
        rng = np.random.default_rng(seed)
        G = rng.uniform(0.0, 1.0, (rng.integers(10, 30), rng.integers(20, 60)))
        pair = factorize(G, int(rng.integers(2, 7)), NmfConfig(seed=seed, max_iter=150, rel_tol=1e-12))
        slack = 1e-10 * pair.trace[0]
        assert np.all(np.diff(pair.trace) <= slack), f"uphill objective at seed {seed}"

    # (b) exact-rank reconstruction below 1e-4 relative error at k = r
    for r in (1, 2, 3, 4, 5):
        rng = np.random.default_rng(100 + r)
        G = rng.uniform(0.1, 1.0, (25, r)) @ rng.uniform(0.1, 1.0, (r, 40))
        pair = factorize(G, r, NmfConfig(seed=r, max_iter=8000, rel_tol=1e-13))
        rel = pair.final_error / np.linalg.norm(G)
        assert rel < 1e-4, f"rank {r}: relative error {rel:.2e}"

    # (c) planted-rank recovery on grids {1..8}
    wins = 0
    for trial in range(20):
        rng = np.random.default_rng(1000 + trial)
        G = rng.uniform(0.1, 1.0, (30, 3)) @ rng.uniform(0.1, 1.0, (3, 60))
        cfg = NmfConfig(seed=100 + trial, max_iter=1500, rel_tol=1e-13, init="nndsvd")
        wins += select_k(G, list(range(1, 9)), 0.15, cfg, mask_replicates=5) == 3
    assert wins >= 18, f"planted rank recovered in only {wins}/20 trials"
    return f"monotone 20/20, exact-rank < 1e-4 for r=1..5, select_k {wins}/20"


def test_criterion_2_nmf():
    print(criterion_2_nmf())


# ---------------------------------------------------------------------------
# 3. spinglass correctness
# ---------------------------------------------------------------------------

def _two_cliques():
    g = UndirectedGraph(n=10)
    for block in (range(0, 5), range(5, 10)):
        nodes = list(block)
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                g.add(nodes[i], nodes[j], 1.0)
    g.add(0, 5, 1.0)
    return g


def _three_blocks():
    g = UndirectedGraph(n=24)
    for a in range(24):
        for b in range(a + 1, 24):
            g.add(a, b, 1.0 if a // 8 == b // 8 else 0.05)
    return g


def criterion_3_spinglass() -> str:
    fast = dict(cooling=0.95, sweeps_per_temp=30)
    clique_truth = {frozenset(range(0, 5)), frozenset(range(5, 10))}
    clique_hits = 0
    g2 = _two_cliques()
    for seed in range(20):
        part = spinglass(g2, SpinglassConfig(seed=seed, **fast))
        groups = {frozenset(nodes) for nodes in part.members().values()}
        clique_hits += groups == clique_truth
    assert clique_hits == 20, f"two-clique recovery {clique_hits}/20"

    block_truth = {frozenset(range(b * 8, (b + 1) * 8)) for b in range(3)}
    block_hits = 0
    g3 = _three_blocks()
    for seed in range(20):
        part = spinglass(g3, SpinglassConfig(seed=seed, **fast))
        groups = {frozenset(nodes) for nodes in part.members().values()}
        block_hits += groups == block_truth
    assert block_hits >= 18, f"three-block recovery {block_hits}/20"
    # zero uphill moves is asserted inside spinglass() on every run above
    return f"two-clique {clique_hits}/20, three-block {block_hits}/20, greedy sweep clean"


def test_criterion_3_spinglass():
    print(criterion_3_spinglass())


# ---------------------------------------------------------------------------
# 4. metric oracles
# ---------------------------------------------------------------------------

def criterion_4_metric_oracles() -> str:
    # Gini pairwise vs Lorenz-area on 100 random vectors
    rng = np.random.default_rng(7)
    for _ in range(100):
        wealth = rng.uniform(0.0, 10.0, rng.integers(2, 50))
        if wealth.sum() == 0:
            continue
        lg = lorenz_gini(wealth)
        xs = np.array([p[0] for p in lg.points])
        ys = np.array([p[1] for p in lg.points])
        area_gini = 1.0 - 2.0 * float(np.trapezoid(ys, xs))
        assert abs(lg.gini - area_gini) < 1e-9

    assert lorenz_gini([0, 0, 0, 1]).gini == 0.75

    # assortativity vs brute-force Pearson on the 4-node fixture
    from doimine.corpus import Message

    arcs = [
        Message(id=i, sender=s, recipient=t, timestamp=0, text="")
        for i, (s, t) in enumerate([("a", "h"), ("b", "h"), ("c", "h"), ("a", "h"), ("h", "a")])
    ]
    report = assortativity(CommGraph(arcs=arcs), rewires=0)
    deg = in_degrees(arcs)
    xs = np.array([deg[m.sender] for m in arcs], dtype=float)
    ys = np.array([deg[m.recipient] for m in arcs], dtype=float)
    brute = float(np.corrcoef(xs, ys)[0, 1])
    assert abs(report.r - brute) < 1e-12

    # Fleiss kappa goldens
    a1 = np.array([[1], [1], [1], [0]])
    a2 = np.array([[1], [1], [0], [1]])
    assert abs(fleiss_kappa([a1, a2]) - (-1 / 3)) < 1e-9
    ident = np.array([[1, 0], [0, 1], [1, 1]])
    assert abs(fleiss_kappa([ident, ident.copy()]) - 1.0) < 1e-9

    # sublinear TF-IDF spot value: tf=2, df=1, n=10
    grams = [["t", "t"]] + [["filler"]] * 9
    vocab = build_vocabulary(grams, PrepConfig(low_df_cut=0.0, high_df_cut=1.0))
    tdm = vectorize(grams, [str(i) for i in range(10)], vocab)
    got = tdm.matrix[vocab.index["t"], 0]
    assert abs(got - (1 + math.log(2)) * math.log(10)) < 1e-9
    return "gini dual-route, exact 0.75, assortativity 1e-12, kappa goldens, tf-idf spot"


def test_criterion_4_metric_oracles():
    print(criterion_4_metric_oracles())


# ---------------------------------------------------------------------------
# 5. match taxonomy
# ---------------------------------------------------------------------------

def criterion_5_match_taxonomy() -> str:
    labels = ("A", "B", "C")
    algo_lists = [list(p) for s in (1, 2, 3) for p in permutations(labels, s)]
    truth_sets = [
        frozenset(c)
        for r in (1, 2, 3)
        for c in permutations(labels, r)
    ]
    combos = 0
    for algo in algo_lists:
        for edit in set(truth_sets):
            # independent re-derivation of the taxonomy
            fired = []
            if set(algo) == edit:
                fired.append("perfect")
            elif algo[0] in edit:
                fired.append("first")
            elif set(algo) & edit:
                fired.append("partial")
            else:
                fired.append("none")
            assert classify_match(algo, edit) == fired[0]
            truth = GroundTruth(labels={"m": edit}, alphabet=labels)
            report = match_assignments({"m": algo}, truth)
            cats = [report.perfect, report.first, report.partial, report.none]
            assert cats.count(1.0) == 1 and cats.count(0.0) == 3
            assert sum(cats) == 1.0
            combos += 1

    truth = GroundTruth(
        labels={f"m{i}": frozenset({labels[i % 3]}) for i in range(10)}, alphabet=labels
    )
    baseline = random_baseline(truth, labels, [1] * 10, trials=10_000, seed=3)
    assert abs(baseline.perfect - 1 / 3) <= 0.02, f"baseline perfect {baseline.perfect:.4f}"
    return f"{combos} taxonomy combos exclusive, baseline perfect {baseline.perfect:.4f}"


def test_criterion_5_match_taxonomy():
    print(criterion_5_match_taxonomy())


# ---------------------------------------------------------------------------
# 6. evolution and reciprocity analogues
# ---------------------------------------------------------------------------

def criterion_6_evolution_and_reciprocity() -> str:
    spec = SynthSpec(
        domains=3, start_decay=1.2, in_kind=0.7, seed=61, users=16_000,
        dyad_count=40_000, vocab_per_domain=10, msg_len_mean=1.0, conv_len_mean=4.0,
    )
    result = generate(spec)
    dyads = build_dyads(result.messages)
    curves = evolution_curves(planted_assignment(result), dyads)
    steps = [n for n in sorted(curves.family_step) if n <= 8]
    status = [curves.family_step[n][0] for n in steps]
    assert all(a > b for a, b in zip(status, status[1:])), f"status curve not decreasing: {status}"
    others = [max(curves.family_step[n][1], curves.family_step[n][2]) for n in steps]
    measured_cross = next(n for n, s, o in zip(steps, status, others) if s < o)
    planted = planted_crossover(spec)
    assert abs(measured_cross - planted) <= 1, f"crossover {measured_cross} vs planted {planted}"

    positive = 0
    for seed in range(20):
        s = SynthSpec(
            survival_bias=True, seed=700 + seed, users=3000, dyad_count=4000,
            vocab_per_domain=10, msg_len_mean=1.0, conv_len_mean=3.0,
        )
        r = generate(s)
        _, slope, _ = reciprocity_vs_length(build_dyads(r.messages))
        positive += slope > 0
    assert positive >= 18, f"positive slope in only {positive}/20 seeds"
    return (
        f"status curve decreasing over steps {steps[0]}..{steps[-1]}, "
        f"crossover {measured_cross} (planted {planted}), positive slope {positive}/20"
    )


def test_criterion_6_evolution_and_reciprocity():
    print(criterion_6_evolution_and_reciprocity())


# ---------------------------------------------------------------------------
# 7. pipeline determinism
# ---------------------------------------------------------------------------

def criterion_7_determinism() -> str:
    from doimine.cli import RunConfig, run_pipeline

    corpus_dir = WORKDIR / "c7_corpus"
    spec = SynthSpec(domains=2, users=200, dyad_count=300, vocab_per_domain=30, seed=77)
    emit(generate(spec), corpus_dir)
    digests = []
    for attempt in ("a", "b"):
        run_dir = WORKDIR / f"c7_run_{attempt}"
        cfg = RunConfig(
            corpus=str(corpus_dir / "corpus.jsonl"), output_dir=str(run_dir),
            truth=str(corpus_dir / "labels.csv"), seed=5, k_grid=[6], mode="hard",
            low_df_cut=0.002, max_iter=120, cooling=0.9, sweeps_per_temp=20,
            baseline_trials=10,
        )
        manifest = run_pipeline(cfg)
        digests.append(manifest["artifacts"])
    assert digests[0] == digests[1], "artifact digests differ between reruns"
    return f"{len(digests[0])} artifacts byte-identical across reruns"


def test_criterion_7_determinism():
    print(criterion_7_determinism())


# ---------------------------------------------------------------------------
# 8. status-star structural analogue
# ---------------------------------------------------------------------------

def criterion_8_status_star() -> str:
    spec = SynthSpec(
        topology="status_star", domains=3, seed=88, users=800, dyad_count=1200,
        vocab_per_domain=20, hub_count=5, hub_bias=0.8, conv_len_mean=4.0,
        msg_len_mean=1.0,
    )
    result = generate(spec)
    ginis = {}
    assorts = {}
    for d in range(3):
        arcs = [m for m in result.messages if result.labels[m.id] == f"d{d}"]
        wealth = list(in_degrees(arcs).values())
        ginis[d] = lorenz_gini(wealth).gini
        assorts[d] = assortativity(CommGraph(arcs=arcs), rewires=5, seed=d).r
    assert ginis[0] == max(ginis.values()), f"status gini {ginis} not the highest"
    assert ginis[0] > ginis[1] and ginis[0] > ginis[2]
    assert assorts[0] < 0, f"status assortativity {assorts[0]:.3f} not negative"
    return (
        f"gini status {ginis[0]:.3f} > others ({ginis[1]:.3f}, {ginis[2]:.3f}), "
        f"status r {assorts[0]:.3f} < 0"
    )


def test_criterion_8_status_star():
    print(criterion_8_status_star())


CRITERIA = [
    ("1 end-to-end planted recovery", criterion_1_end_to_end),
    ("2 NMF correctness", criterion_2_nmf),
    ("3 spinglass correctness", criterion_3_spinglass),
    ("4 metric oracles", criterion_4_metric_oracles),
    ("5 match taxonomy", criterion_5_match_taxonomy),
    ("6 evolution and reciprocity", criterion_6_evolution_and_reciprocity),
    ("7 pipeline determinism", criterion_7_determinism),
    ("8 status-star structure", criterion_8_status_star),
]


def main() -> int:
    failures = 0
    for name, fn in CRITERIA:
        try:
            detail = fn()
            print(f"PASS  criterion {name}: {detail}")
        except AssertionError as exc:
            failures += 1
            print(f"FAIL  criterion {name}: {exc}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
