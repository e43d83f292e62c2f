import collections

import numpy as np
import pytest

from doimine.corpus import build_dyads, load_messages
from doimine.errors import ConfigError
from doimine.evaluation import load_ground_truth
from doimine.synth import (
    STOPWORDS,
    SynthSpec,
    emit,
    expected_step_distribution,
    generate,
    planted_crossover,
    restart_matrix,
    start_distribution,
)

SMALL = dict(users=60, dyad_count=80, vocab_per_domain=20, msg_len_mean=4.0)


class TestSpecValidation:
    def test_domain_floor(self):
        with pytest.raises(ConfigError):
            SynthSpec(domains=1)

    def test_overlap_bounds(self):
        with pytest.raises(ConfigError):
            SynthSpec(overlap=0.5)

    def test_infeasible_vocabulary(self):
        with pytest.raises(ConfigError):
            SynthSpec(vocab_per_domain=0)

    def test_too_many_dyads(self):
        with pytest.raises(ConfigError):
            SynthSpec(users=3, dyad_count=10)


class TestGenerate:
    def test_deterministic_given_seed(self):
        a = generate(SynthSpec(seed=5, **SMALL))
        b = generate(SynthSpec(seed=5, **SMALL))
        assert a.messages == b.messages
        assert a.labels == b.labels

    def test_different_seeds_differ(self):
        a = generate(SynthSpec(seed=5, **SMALL))
        b = generate(SynthSpec(seed=6, **SMALL))
        assert a.messages != b.messages

    def test_pure_in_kind_keeps_dyads_single_domain(self):
        res = generate(SynthSpec(in_kind=1.0, overlap=0.0, seed=2, **SMALL))
        dyads = build_dyads(res.messages)
        for ids in dyads.pairs.values():
            assert len({res.labels[mid] for mid in ids}) == 1

    def test_zero_overlap_keeps_tokens_in_domain(self):
        res = generate(SynthSpec(overlap=0.0, seed=3, **SMALL))
        for m in res.messages:
            dom = res.labels[m.id]
            assert all(tok.startswith(dom) for tok in m.text.split())

    def test_label_marginals_near_uniform(self):
        spec = SynthSpec(seed=7, users=400, dyad_count=600, vocab_per_domain=20, conv_len_mean=3.0)
        res = generate(spec)
        counts = collections.Counter(res.labels.values())
        total = sum(counts.values())
        # start and restart are symmetric at start_decay=0
        p = 1 / spec.domains
        sigma = np.sqrt(p * (1 - p) / total)
        for d in spec.labels():
            assert abs(counts[d] / total - p) < 5 * sigma + 0.01

    def test_dyad_shares_match_labels(self):
        res = generate(SynthSpec(seed=11, **SMALL))
        dyads = build_dyads(res.messages)
        for pair, ids in dyads.pairs.items():
            share = res.dyad_shares[pair]
            counted = collections.Counter(res.labels[mid] for mid in ids)
            for dom, frac in share.items():
                assert frac == pytest.approx(counted.get(dom, 0) / len(ids))

    def test_balanced_restarts_at_half_in_kind(self):
        # rho = 0.5, D = 2: staying and switching are equally likely
        spec = SynthSpec(domains=2, in_kind=0.5, seed=13, users=600, dyad_count=1500,
                         vocab_per_domain=20, conv_len_mean=6.0)
        res = generate(spec)
        dyads = build_dyads(res.messages)
        stay = switch = 0
        for ids in dyads.pairs.values():
            labs = [res.labels[mid] for mid in ids]
            for a, b in zip(labs, labs[1:]):
                if a == b:
                    stay += 1
                else:
                    switch += 1
        ratio = stay / (stay + switch)
        assert ratio == pytest.approx(0.5, abs=0.05)

    def test_alternating_directions_by_default(self):
        res = generate(SynthSpec(seed=17, **SMALL))
        dyads = build_dyads(res.messages)
        for ids in dyads.pairs.values():
            senders = [dyads.by_id[mid].sender for mid in ids]
            assert all(a != b for a, b in zip(senders, senders[1:]))

    def test_stopword_mode_inserts_fillers(self):
        res = generate(SynthSpec(seed=19, stopword_rate=0.5, **SMALL))
        tokens = [tok for m in res.messages for tok in m.text.split()]
        assert any(tok in STOPWORDS for tok in tokens)


class TestPlantedCurves:
    def test_start_distribution_decays_over_domains(self):
        spec = SynthSpec(domains=3, start_decay=1.5)
        pi = start_distribution(spec)
        assert pi[0] > pi[1] > pi[2]
        assert pi.sum() == pytest.approx(1.0)

    def test_restart_matrix_rows_stochastic_no_self(self):
        spec = SynthSpec(domains=4, start_decay=0.7)
        q = restart_matrix(spec)
        assert np.allclose(q.sum(axis=1), 1.0)
        assert np.allclose(np.diag(q), 0.0)

    def test_expected_curve_monotone_and_crossover(self):
        spec = SynthSpec(domains=3, start_decay=1.2, in_kind=0.7)
        curve = expected_step_distribution(spec, 12)
        d0 = curve[:, 0]
        assert np.all(np.diff(d0) < 0)
        cross = planted_crossover(spec)
        assert cross is not None
        assert d0[cross - 1] < curve[cross - 1, 1:].max()
        if cross > 1:
            assert d0[cross - 2] >= curve[cross - 2, 1:].max()

    def test_measured_step_marginals_track_planted(self):
        spec = SynthSpec(domains=3, start_decay=1.2, in_kind=0.7, seed=23,
                         users=3000, dyad_count=6000, vocab_per_domain=10,
                         msg_len_mean=1.0, conv_len_mean=4.0)
        res = generate(spec)
        dyads = build_dyads(res.messages)
        planted = expected_step_distribution(spec, 4)
        counts = [collections.Counter() for _ in range(4)]
        for ids in dyads.pairs.values():
            for step, mid in enumerate(ids[:4]):
                counts[step][res.labels[mid]] += 1
        for step in range(4):
            total = sum(counts[step].values())
            got = counts[step]["d0"] / total
            assert got == pytest.approx(planted[step, 0], abs=0.03)

    def test_no_crossover_without_decay(self):
        # uniform start never drops strictly below the other curves
        assert planted_crossover(SynthSpec(domains=3, start_decay=0.0)) is None


class TestStatusStar:
    def test_hub_indegree_dominates_status_domain(self):
        spec = SynthSpec(topology="status_star", seed=29, users=300, dyad_count=400,
                         vocab_per_domain=20, hub_count=4, conv_len_mean=3.0)
        res = generate(spec)
        status_arcs = [m for m in res.messages if res.labels[m.id] == "d0"]
        indeg = collections.Counter(m.recipient for m in status_arcs)
        hubs = {f"u{i:06d}" for i in range(4)}
        hub_mass = sum(indeg[h] for h in hubs)
        assert hub_mass / sum(indeg.values()) > 0.7

    def test_star_dyads_single_domain(self):
        spec = SynthSpec(topology="status_star", seed=31, users=200, dyad_count=150,
                         vocab_per_domain=20)
        res = generate(spec)
        dyads = build_dyads(res.messages)
        for ids in dyads.pairs.values():
            assert len({res.labels[mid] for mid in ids}) == 1


class TestSurvivalBias:
    def test_balanced_dyads_live_longer(self):
        spec = SynthSpec(survival_bias=True, seed=37, users=2000, dyad_count=3000,
                         vocab_per_domain=10, msg_len_mean=1.0, conv_len_mean=3.0)
        res = generate(spec)
        dyads = build_dyads(res.messages)
        from doimine.netanalysis import reciprocity_vs_length

        _, slope, _ = reciprocity_vs_length(dyads)
        assert slope > 0


class TestEmit:
    def test_files_roundtrip(self, tmp_path):
        res = generate(SynthSpec(seed=41, **SMALL))
        paths = emit(res, tmp_path)
        loaded = load_messages(paths["corpus"], "jsonl")
        assert loaded.messages == res.messages
        assert loaded.report.total() == 0
        truth = load_ground_truth(paths["labels"])
        assert truth.labels == {mid: frozenset({lab}) for mid, lab in res.labels.items()}
        import json

        manifest = json.loads(open(paths["manifest"]).read())
        assert manifest["spec"]["seed"] == 41
        assert manifest["stats"]["message_count"] == len(res.messages)
