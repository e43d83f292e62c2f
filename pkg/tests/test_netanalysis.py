import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doimine.corpus import Message, build_dyads
from doimine.doi import MessageDoIAssignment
from doimine.errors import ConfigError, DataError, NumericalError
from doimine.netanalysis import (
    CommGraph,
    assortativity,
    build_comm_graph,
    coverage,
    dyad_reciprocity,
    evolution_curves,
    in_degrees,
    induce_subgraph,
    jaccard,
    lexicon_ratio,
    load_kinship,
    load_lexicon,
    load_user_sets,
    lorenz_gini,
    reciprocity,
    reciprocity_vs_length,
    rewire_edges,
    strength_report,
    tie_share,
)


def msg(mid, sender, recipient, ts=0, text=""):
    return Message(id=mid, sender=sender, recipient=recipient, timestamp=ts, text=text)


def assignment_of(mapping):
    """mapping: mid -> list of (doi, p) or a single doi int."""
    entries = {}
    for mid, val in mapping.items():
        entries[mid] = [(val, 1.0)] if isinstance(val, int) else val
    return MessageDoIAssignment(entries=entries)


class TestSubgraphs:
    def test_full_coverage_when_single_doi(self):
        msgs = [msg("1", "u", "v"), msg("2", "v", "u")]
        assignment = assignment_of({"1": 0, "2": 0})
        comm = build_comm_graph(msgs, assignment)
        sub = induce_subgraph(comm, assignment, 0)
        assert coverage(sub, comm) == (1.0, 1.0, 1.0)

    def test_multi_doi_message_in_both_subgraphs(self):
        msgs = [msg("1", "u", "v")]
        assignment = assignment_of({"1": [(0, 0.6), (1, 0.4)]})
        comm = build_comm_graph(msgs, assignment)
        assert induce_subgraph(comm, assignment, 0).arcs == msgs
        assert induce_subgraph(comm, assignment, 1).arcs == msgs

    def test_unknown_doi_rejected(self):
        msgs = [msg("1", "u", "v")]
        assignment = assignment_of({"1": 0})
        comm = build_comm_graph(msgs, assignment)
        with pytest.raises(DataError):
            induce_subgraph(comm, assignment, 9)

    def test_unassigned_messages_not_arcs(self):
        msgs = [msg("1", "u", "v"), msg("2", "v", "u")]
        comm = build_comm_graph(msgs, assignment_of({"1": 0}))
        assert [m.id for m in comm.arcs] == ["1"]


class TestReciprocity:
    def test_one_each_way(self):
        assert dyad_reciprocity([msg("1", "u", "v"), msg("2", "v", "u")]) == 1.0

    def test_three_to_one(self):
        msgs = [msg(str(i), "u", "v") for i in range(3)] + [msg("r", "v", "u")]
        assert dyad_reciprocity(msgs) == pytest.approx(1 / 3)

    def test_one_way_is_zero(self):
        assert dyad_reciprocity([msg("1", "u", "v")]) == 0.0

    def test_aggregate_unweighted_mean(self):
        msgs = [
            msg("1", "u", "v"), msg("2", "v", "u"),        # r = 1
            msg("3", "a", "b"), msg("4", "a", "b"),        # r = 0
        ]
        assert reciprocity(msgs) == pytest.approx(0.5)

    def test_equal_counts_iff_one(self):
        msgs = [msg("1", "u", "v"), msg("2", "v", "u"), msg("3", "u", "v")]
        assert dyad_reciprocity(msgs) < 1.0


class TestTieShare:
    def test_single_domain_dyad(self):
        msgs = [msg("1", "u", "v", 0), msg("2", "v", "u", 1)]
        shares = tie_share(assignment_of({"1": 0, "2": 0}), build_dyads(msgs))
        assert shares[0] == 1.0

    def test_even_split(self):
        msgs = [msg(str(i), "u", "v", i) for i in range(4)]
        shares = tie_share(assignment_of({"0": 0, "1": 0, "2": 1, "3": 1}), build_dyads(msgs))
        assert shares == {0: 0.5, 1: 0.5}

    def test_hard_shares_sum_to_one(self):
        msgs = [msg(f"{d}-{i}", f"u{d}", f"v{d}", i) for d in range(5) for i in range(3)]
        mapping = {m.id: hash(m.id) % 3 for m in msgs}
        shares = tie_share(assignment_of(mapping), build_dyads(msgs))
        assert sum(shares.values()) == pytest.approx(1.0)

    def test_soft_mode_fractional_credit(self):
        msgs = [msg("1", "u", "v", 0)]
        assignment = assignment_of({"1": [(0, 0.6), (1, 0.2)]})
        shares = tie_share(assignment, build_dyads(msgs), mode="soft")
        assert shares[0] == pytest.approx(0.75)
        assert shares[1] == pytest.approx(0.25)

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            tie_share(assignment_of({"1": 0}), build_dyads([msg("1", "u", "v")]), mode="x")


class TestJaccard:
    def test_identical(self):
        assert jaccard({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint(self):
        assert jaccard({"a"}, {"b"}) == 0.0

    def test_half_overlap(self):
        assert jaccard({"a", "b", "c"}, {"b", "c", "d"}) == 0.5

    def test_both_empty_defined_zero(self):
        assert jaccard(set(), set()) == 0.0


LEXICON_TEXT = """
[intimacy]
dear
hug*

[emotion]
happy
sad
"""


class TestLexicon:
    def test_parse_and_ratio(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text(LEXICON_TEXT)
        lex = load_lexicon(path)
        msgs = [msg("1", "u", "v", text="happy sad table")]
        ratios = lexicon_ratio(msgs, lex, ["emotion"])
        assert ratios["emotion"] == pytest.approx(2 / 3)

    def test_all_and_none(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text(LEXICON_TEXT)
        lex = load_lexicon(path)
        all_match = lexicon_ratio([msg("1", "u", "v", text="happy sad")], lex, ["emotion"])
        none_match = lexicon_ratio([msg("1", "u", "v", text="table chair")], lex, ["emotion"])
        assert all_match["emotion"] == 1.0
        assert none_match["emotion"] == 0.0

    def test_prefix_wildcard(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text(LEXICON_TEXT)
        lex = load_lexicon(path)
        ratios = lexicon_ratio([msg("1", "u", "v", text="hugs hugging dear")], lex, ["intimacy"])
        assert ratios["intimacy"] == 1.0

    def test_raw_tokens_not_stems(self, tmp_path):
        # 'hugged' matches prefix 'hug'; stemming never runs here
        path = tmp_path / "lex.txt"
        path.write_text("[intimacy]\nhug*\n")
        lex = load_lexicon(path)
        ratios = lexicon_ratio([msg("1", "u", "v", text="Hugged!")], lex, ["intimacy"])
        assert ratios["intimacy"] == 1.0

    def test_unknown_category(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text(LEXICON_TEXT)
        lex = load_lexicon(path)
        with pytest.raises(ConfigError):
            lexicon_ratio([], lex, ["nope"])

    def test_entry_before_header_rejected(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("word\n[cat]\n")
        with pytest.raises(DataError):
            load_lexicon(path)


class TestEvolutionCurves:
    def test_step_one_always_status(self):
        msgs, mapping = [], {}
        for d in range(10):
            u, v = f"u{d}", f"v{d}"
            for i in range(3):
                mid = f"{d}-{i}"
                msgs.append(msg(mid, u if i % 2 == 0 else v, v if i % 2 == 0 else u, i))
                mapping[mid] = 0 if i == 0 else 1
        curves = evolution_curves(assignment_of(mapping), build_dyads(msgs))
        assert curves.family_step[1][0] == 1.0
        assert curves.family_step[2][0] == 0.0

    def test_step_proportions_sum_to_one(self):
        rng = np.random.default_rng(0)
        msgs, mapping = [], {}
        for d in range(30):
            u, v = f"u{d}", f"v{d}"
            for i in range(int(rng.integers(1, 6))):
                mid = f"{d}-{i}"
                msgs.append(msg(mid, u, v, i))
                mapping[mid] = int(rng.integers(0, 3))
        curves = evolution_curves(assignment_of(mapping), build_dyads(msgs))
        for by_doi in curves.family_step.values():
            assert sum(by_doi.values()) == pytest.approx(1.0)
        for by_doi in curves.family_length.values():
            assert sum(by_doi.values()) == pytest.approx(1.0)

    def test_family_length_groups_by_dyad_length(self):
        msgs = [
            msg("a", "u", "v", 0),
            msg("b", "x", "y", 0), msg("c", "y", "x", 1),
        ]
        curves = evolution_curves(assignment_of({"a": 0, "b": 0, "c": 1}), build_dyads(msgs))
        assert curves.family_length[1][0] == 1.0
        assert curves.family_length[2][0] == 0.5


class TestReciprocityVsLength:
    def test_constant_reciprocity_flat_fit(self):
        msgs = []
        for d, length in enumerate((2, 4)):
            u, v = f"u{d}", f"v{d}"
            for i in range(length):
                msgs.append(msg(f"{d}-{i}", u if i % 2 == 0 else v, v if i % 2 == 0 else u, i))
        points, slope, intercept = reciprocity_vs_length(build_dyads(msgs))
        assert points == [(2, 1.0), (4, 1.0)]
        assert slope == pytest.approx(0.0, abs=1e-12)
        assert intercept == pytest.approx(1.0)

    def test_two_point_fit(self):
        # length 1 -> r=0; length 2 -> r=1
        msgs = [
            msg("a", "u", "v", 0),
            msg("b", "x", "y", 0), msg("c", "y", "x", 1),
        ]
        points, slope, intercept = reciprocity_vs_length(build_dyads(msgs))
        assert points == [(1, 0.0), (2, 1.0)]
        assert slope == pytest.approx(1.0)
        assert intercept == pytest.approx(-1.0)

    def test_single_length_rejected(self):
        msgs = [msg("a", "u", "v", 0)]
        with pytest.raises(DataError):
            reciprocity_vs_length(build_dyads(msgs))


class TestLorenzGini:
    def test_uniform_vector_diagonal(self):
        lg = lorenz_gini([3.0, 3.0, 3.0])
        assert lg.gini == pytest.approx(0.0, abs=1e-12)
        for x, y in lg.points:
            assert y == pytest.approx(x)

    def test_spec_exact_value(self):
        assert lorenz_gini([0, 0, 0, 1]).gini == 0.75

    def test_endpoints_and_monotonicity(self):
        lg = lorenz_gini([5, 1, 4, 2, 8])
        assert lg.points[0] == (0.0, 0.0)
        assert lg.points[-1] == (1.0, 1.0)
        ys = [y for _, y in lg.points]
        assert all(b >= a for a, b in zip(ys, ys[1:]))

    def test_all_zero_rejected(self):
        with pytest.raises(DataError):
            lorenz_gini([0.0, 0.0])

    def test_negative_rejected(self):
        with pytest.raises(DataError):
            lorenz_gini([1.0, -2.0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(min_value=0, max_value=100), min_size=2, max_size=40).filter(lambda v: sum(v) > 0))
    def test_pairwise_equals_lorenz_area(self, wealth):
        lg = lorenz_gini(wealth)
        # independent oracle: G = 1 - 2 * trapezoid area under the Lorenz curve
        xs = np.array([p[0] for p in lg.points])
        ys = np.array([p[1] for p in lg.points])
        area = float(np.trapezoid(ys, xs))
        assert lg.gini == pytest.approx(1.0 - 2.0 * area, abs=1e-9)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(min_value=0.01, max_value=50), min_size=2, max_size=25))
    def test_brute_force_pairwise_oracle(self, wealth):
        lg = lorenz_gini(wealth)
        x = np.asarray(wealth)
        n, mu = len(x), x.mean()
        brute = float(np.abs(x[:, None] - x[None, :]).sum() / (2 * n * n * mu))
        assert lg.gini == pytest.approx(brute, abs=1e-9)


def star_arcs():
    """4-node fixture: spokes a,b,c send to hub h; h replies to a."""
    return [
        msg("1", "a", "h"), msg("2", "b", "h"), msg("3", "c", "h"),
        msg("4", "a", "h"), msg("5", "h", "a"),
    ]


class TestAssortativity:
    def test_zero_variance_errors(self):
        arcs = [msg("1", "a", "b"), msg("2", "c", "d")]
        sub = CommGraph(arcs=arcs)
        with pytest.raises(NumericalError):
            assortativity(sub, rewires=0)

    def test_matches_brute_force_pearson(self):
        arcs = star_arcs()
        report = assortativity(CommGraph(arcs=arcs), rewires=0)
        deg = {}
        for m in arcs:
            deg[m.recipient] = deg.get(m.recipient, 0) + 1
            deg.setdefault(m.sender, 0)
        xs = np.array([deg[m.sender] for m in arcs], dtype=float)
        ys = np.array([deg[m.recipient] for m in arcs], dtype=float)
        brute = float(np.corrcoef(xs, ys)[0, 1])
        assert report.r == pytest.approx(brute, abs=1e-12)

    def test_jackknife_nonnegative_and_shrinking(self):
        arcs = star_arcs()
        errs = []
        for mult in (1, 2, 4):
            dup = [
                msg(f"{m.id}-{j}", m.sender, m.recipient)
                for m in arcs
                for j in range(mult)
            ]
            errs.append(assortativity(CommGraph(arcs=dup), rewires=0).jackknife_stderr)
        assert all(e >= 0 for e in errs)
        assert errs[0] > errs[1] > errs[2]

    def test_rewiring_preserves_degree_sequences(self):
        rng = np.random.default_rng(0)
        edges = [(f"s{i % 5}", f"t{(i * 3) % 7}") for i in range(40) if f"s{i % 5}" != f"t{(i * 3) % 7}"]
        swapped = rewire_edges(edges, rng, swaps=400)
        def out_deg(es):
            d = {}
            for s, _ in es:
                d[s] = d.get(s, 0) + 1
            return d
        def in_deg(es):
            d = {}
            for _, t in es:
                d[t] = d.get(t, 0) + 1
            return d
        assert out_deg(edges) == out_deg(swapped)
        assert in_deg(edges) == in_deg(swapped)
        assert all(s != t for s, t in swapped)

    def test_rewired_baseline_runs(self):
        report = assortativity(CommGraph(arcs=star_arcs()), rewires=5, seed=1)
        assert math.isfinite(report.rewired_r)

    def test_collapse_mode(self):
        arcs = star_arcs()
        report = assortativity(CommGraph(arcs=arcs), collapse=True, rewires=0)
        assert report.edge_count == 4  # duplicate a->h arc collapsed


class TestInDegrees:
    def test_multigraph_counts_arcs(self):
        deg = in_degrees(star_arcs())
        assert deg["h"] == 4 and deg["a"] == 1
        assert deg["b"] == 0

    def test_collapse_counts_distinct_predecessors(self):
        deg = in_degrees(star_arcs(), collapse=True)
        assert deg["h"] == 3


class TestStrengthReport:
    def test_basic_indicators(self):
        msgs = [
            msg("1", "u", "v", 0, "dear happy"), msg("2", "v", "u", 1, "sad table"),
            msg("3", "a", "b", 0, "table chair"),
        ]
        assignment = assignment_of({"1": 0, "2": 0, "3": 1})
        comm = build_comm_graph(
            msgs,
            assignment,
            neighbors={"u": frozenset({"x", "y"}), "v": frozenset({"y", "z"})},
            kinship={("u", "v")},
        )
        dyads = build_dyads(msgs)
        report = strength_report(comm, assignment, dyads, 0)
        assert report.conv_len_mean == 2.0
        assert report.msg_len_mean == 2.0
        assert report.sigma_neighbors == pytest.approx(1 / 3)
        assert report.kinship_ratio == 1.0
        assert report.tie_share == pytest.approx(0.5)

    def test_lexicon_ratios_on_doi_messages(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text(LEXICON_TEXT)
        lex = load_lexicon(path)
        msgs = [msg("1", "u", "v", 0, "dear happy"), msg("2", "v", "u", 1, "sad table")]
        assignment = assignment_of({"1": 0, "2": 0})
        comm = build_comm_graph(msgs, assignment)
        report = strength_report(
            comm, assignment, build_dyads(msgs), 0, lexicon=lex, lexicon_categories=["intimacy", "emotion"]
        )
        assert report.lexicon_ratios["intimacy"] == pytest.approx(1 / 4)
        assert report.lexicon_ratios["emotion"] == pytest.approx(2 / 4)


class TestMetadataLoaders:
    def test_user_sets(self, tmp_path):
        path = tmp_path / "n.csv"
        path.write_text("user,values\nu,a;b\nv,\n")
        sets = load_user_sets(path)
        assert sets["u"] == frozenset({"a", "b"})
        assert sets["v"] == frozenset()

    def test_kinship(self, tmp_path):
        path = tmp_path / "k.csv"
        path.write_text("user_a,user_b,relation\nv,u,family\n")
        assert load_kinship(path) == {("u", "v")}
