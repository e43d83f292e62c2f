"""Pipeline front-end: stage subcommands plus an end-to-end `run`.

Every stage reads declared artifacts from the run directory and writes its
own, so stages can be re-run in isolation.  All randomness flows from one
global seed through named substreams; rerunning with the same config and
seed reproduces every artifact byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import toml

from doimine import community as community_mod
from doimine import convgraph as convgraph_mod
from doimine import corpus as corpus_mod
from doimine import doi as doi_mod
from doimine import evaluation as eval_mod
from doimine import netanalysis as net_mod
from doimine import nmf as nmf_mod
from doimine import synth as synth_mod
from doimine import textprep as textprep_mod
from doimine.errors import ConfigError, DataError, NumericalError
from doimine.seeds import substream_seed
from doimine.sparseio import read_triplets, write_triplets

STAGES = ("ingest", "prep", "factorize", "graph", "detect", "assign", "evaluate", "analyze")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    corpus: str = ""
    corpus_format: str = "jsonl"
    output_dir: str = "run"
    stopwords: str | None = None
    truth: str | None = None
    lexicon: str | None = None
    seed: int = 0

    language: str = "english"
    high_df_cut: float = 0.60
    low_df_cut: float = 0.01
    vocab_cap: int = 10_000
    ngram_max: int = 3

    k_grid: list[int] = field(default_factory=lambda: [8])
    holdout_fraction: float = 0.1
    max_iter: int = 500
    rel_tol: float = 1e-4
    init: str = "random_uniform"
    mask_replicates: int = 3
    tie_rel: float = 0.10

    gamma: float = 1.0
    spins_max: int = 25
    start_temp: float = 1.0
    stop_temp: float = 0.01
    cooling: float = 0.99
    sweeps_per_temp: int = 50
    restarts: int = 1

    mode: str = "soft"
    theta: float = 0.5
    n_terms: int = 10

    baseline_trials: int = 200
    label_map: str = "auto"

    analyze: bool = True
    evaluate: bool = True
    lexicon_categories: list[str] = field(default_factory=list)
    neighbors: str | None = None
    groups: str | None = None
    items: str | None = None
    kinship: str | None = None
    wealth: str = "indegree"
    collapse_arcs: bool = False
    rewires: int = 20

    def prep_config(self) -> textprep_mod.PrepConfig:
        return textprep_mod.PrepConfig(
            stopword_path=self.stopwords,
            language=self.language,
            high_df_cut=self.high_df_cut,
            low_df_cut=self.low_df_cut,
            vocab_cap=self.vocab_cap,
            ngram_max=self.ngram_max,
        )

    def nmf_config(self) -> nmf_mod.NmfConfig:
        return nmf_mod.NmfConfig(
            seed=substream_seed(self.seed, "nmf"),
            max_iter=self.max_iter,
            rel_tol=self.rel_tol,
            init=self.init,
        )

    def spinglass_config(self) -> community_mod.SpinglassConfig:
        return community_mod.SpinglassConfig(
            gamma=self.gamma,
            spins_max=self.spins_max,
            start_temp=self.start_temp,
            stop_temp=self.stop_temp,
            cooling=self.cooling,
            sweeps_per_temp=self.sweeps_per_temp,
            seed=substream_seed(self.seed, "spinglass"),
        )

    def effective_theta(self) -> float:
        return 1.0 if self.mode == "hard" else self.theta


_FLAG_FIELDS = {
    "corpus": str, "corpus_format": str, "output_dir": str, "stopwords": str,
    "truth": str, "lexicon": str, "seed": int, "language": str,
    "high_df_cut": float, "low_df_cut": float, "vocab_cap": int, "ngram_max": int,
    "holdout_fraction": float, "max_iter": int, "rel_tol": float, "init": str,
    "mask_replicates": int, "tie_rel": float, "gamma": float, "spins_max": int,
    "start_temp": float, "stop_temp": float, "cooling": float,
    "sweeps_per_temp": int, "restarts": int, "mode": str, "theta": float,
    "n_terms": int, "baseline_trials": int, "label_map": str,
    "neighbors": str, "groups": str, "items": str, "kinship": str,
    "wealth": str, "rewires": int,
}


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, then flag overrides; flags win."""
    cfg = RunConfig()
    path = getattr(args, "config", None)
    if path:
        try:
            raw = toml.load(path)
        except (OSError, toml.TomlDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        flat: dict = {}
        for key, value in raw.items():
            if isinstance(value, dict):
                flat.update(value)
            else:
                flat[key] = value
        for key, value in flat.items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for key in list(_FLAG_FIELDS) + ["k_grid", "lexicon_categories", "analyze", "evaluate", "collapse_arcs"]:
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if cfg.mode not in ("soft", "hard"):
        raise ConfigError(f"assignment mode must be soft or hard, got {cfg.mode!r}")
    return cfg


# ---------------------------------------------------------------------------
# artifact helpers
# ---------------------------------------------------------------------------

def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def _read_json(path: Path):
    if not path.exists():
        raise DataError(f"missing artifact {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        raise DataError(f"missing artifact {path}")
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_messages_artifact(outdir: Path) -> list[corpus_mod.Message]:
    return corpus_mod.load_messages(outdir / "messages.jsonl", "jsonl").messages


def _load_bucket_assignments(outdir: Path, k: int) -> nmf_mod.BucketAssignment:
    entries: dict[str, list[tuple[int, float]]] = {}
    theta = 1.0
    for line in _read_lines(outdir / "bucket_assignments.jsonl"):
        rec = json.loads(line)
        entries[rec["message_id"]] = [(int(b), float(p)) for b, p in rec["buckets"]]
        theta = rec.get("theta", theta)
    return nmf_mod.BucketAssignment(entries=entries, theta=theta, k=k)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def stage_ingest(cfg: RunConfig, outdir: Path) -> dict:
    if not cfg.corpus:
        raise ConfigError("no corpus path configured")
    result = corpus_mod.load_messages(cfg.corpus, cfg.corpus_format, strict=False)
    dyads = corpus_mod.build_dyads(result.messages)
    stats = corpus_mod.corpus_stats(result.messages, dyads, textprep_mod.split_tokens)
    corpus_mod.write_messages_jsonl(outdir / "messages.jsonl", result.messages)
    _write_json(outdir / "corpus_stats.json", {
        "stats": stats.to_dict(),
        "skipped": {
            "self_messages": result.report.self_messages,
            "malformed": result.report.malformed,
            "duplicate_ids": result.report.duplicate_ids,
        },
    })
    return {"messages": len(result.messages), "dyads": len(dyads)}


def stage_prep(cfg: RunConfig, outdir: Path) -> dict:
    messages = _load_messages_artifact(outdir)
    tdm = textprep_mod.prepare(messages, cfg.prep_config())
    tdm.vocabulary.write_tsv(outdir / "vocabulary.tsv")
    write_triplets(outdir / "gamma.txt", tdm.matrix)
    with open(outdir / "matrix_columns.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(tdm.message_ids) + "\n")
    _write_json(outdir / "prep_summary.json", {
        "terms": len(tdm.vocabulary),
        "messages_kept": len(tdm.message_ids),
        "dropped_fraction": tdm.dropped_fraction,
        "idf_n": tdm.idf_n,
    })
    return {"terms": len(tdm.vocabulary), "messages_kept": len(tdm.message_ids)}


def stage_factorize(cfg: RunConfig, outdir: Path) -> dict:
    gamma = read_triplets(outdir / "gamma.txt")
    nmf_cfg = cfg.nmf_config()
    if len(set(cfg.k_grid)) > 1:
        errors = nmf_mod.holdout_errors(
            gamma, cfg.k_grid, cfg.holdout_fraction, nmf_cfg, cfg.mask_replicates
        )
        floor = min(errors.values())
        k = next(kk for kk in sorted(errors) if errors[kk] <= floor * (1.0 + cfg.tie_rel))
        per_k = {str(kk): errors[kk] for kk in sorted(errors)}
    else:
        k = cfg.k_grid[0]
        per_k = {}
    pair = nmf_mod.factorize(gamma, k, nmf_cfg)
    write_triplets(outdir / "W.txt", pair.W, value_floor=1e-9)
    write_triplets(outdir / "H.txt", pair.H, value_floor=1e-9)
    _write_json(outdir / "k_selected.json", {"k": k, "holdout_errors": per_k})
    _write_json(outdir / "nmf_summary.json", {
        "k": k,
        "final_error": pair.final_error,
        "iterations": len(pair.trace) - 1,
    })
    return {"k": k, "final_error": pair.final_error}


def stage_graph(cfg: RunConfig, outdir: Path) -> dict:
    messages = _load_messages_artifact(outdir)
    H = np.asarray(read_triplets(outdir / "H.txt").todense())
    W = np.asarray(read_triplets(outdir / "W.txt").todense())
    vocab = textprep_mod.Vocabulary.read_tsv(outdir / "vocabulary.tsv")
    message_ids = _read_lines(outdir / "matrix_columns.txt")
    message_ids = [mid for mid in message_ids if mid]
    theta = cfg.effective_theta()
    assignments = nmf_mod.assign_buckets(H, message_ids, theta)
    with open(outdir / "bucket_assignments.jsonl", "w", encoding="utf-8") as fh:
        for mid in sorted(assignments.entries):
            rec = {
                "message_id": mid,
                "theta": theta,
                "buckets": [[b, p] for b, p in assignments.entries[mid]],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    dyads = corpus_mod.build_dyads(messages)
    transitions = convgraph_mod.extract_transitions(dyads)
    graph = convgraph_mod.build_graph(transitions, assignments, k=H.shape[0])
    graph.write_tsv(outdir / "conversation_graph.tsv")
    with open(outdir / "graph_nodes.tsv", "w", encoding="utf-8") as fh:
        fh.write("bucket\tmessage_mass\ttop_terms\n")
        for b in range(H.shape[0]):
            terms = nmf_mod.top_terms(W, vocab.terms, b, min(5, len(vocab.terms)))
            fh.write(f"{b}\t{graph.message_mass[b]!r}\t{' '.join(terms)}\n")
    return {
        "transitions": len(transitions),
        "edges": len(graph.edges),
        "skipped_transitions": graph.skipped_transitions,
    }


def stage_detect(cfg: RunConfig, outdir: Path) -> dict:
    graph = convgraph_mod.ConversationGraph.read_tsv(outdir / "conversation_graph.tsv")
    und = community_mod.symmetrize(graph)
    sg_cfg = cfg.spinglass_config()
    if cfg.restarts > 1:
        part = community_mod.spinglass_restarts(und, sg_cfg, cfg.restarts)
    else:
        part = community_mod.spinglass(und, sg_cfg)
    part.write_tsv(outdir / "partition.tsv")
    _write_json(outdir / "detect_summary.json", {
        "communities": part.c,
        "hamiltonian": part.hamiltonian,
        "modularity": community_mod.modularity(und, part),
    })
    return {"communities": part.c}


def stage_assign(cfg: RunConfig, outdir: Path) -> dict:
    part = community_mod.Partition.read_tsv(outdir / "partition.tsv")
    W = np.asarray(read_triplets(outdir / "W.txt").todense())
    vocab = textprep_mod.Vocabulary.read_tsv(outdir / "vocabulary.tsv")
    bucket_assignments = _load_bucket_assignments(outdir, k=len(part.labels))
    model = doi_mod.form_dois(part, W, vocab.terms, cfg.n_terms)
    if cfg.label_map not in ("auto", "") and cfg.label_map is not None:
        raw = _read_json(Path(cfg.label_map))
        model.set_labels({int(k): v for k, v in raw.items()})
    assignment = doi_mod.assign_messages(bucket_assignments, model)
    model.write_json(outdir / "dois.json")
    assignment.write_jsonl(outdir / "assignments.jsonl", model)
    return {"dois": len(model.dois), "assigned_messages": len(assignment.entries)}


def stage_evaluate(cfg: RunConfig, outdir: Path) -> dict:
    if not cfg.truth:
        raise ConfigError("evaluate stage needs a ground-truth path")
    assignment = doi_mod.MessageDoIAssignment.read_jsonl(outdir / "assignments.jsonl")
    model = doi_mod.DoIModel.read_json(outdir / "dois.json")
    truth = eval_mod.load_ground_truth(cfg.truth)
    if cfg.label_map == "auto":
        mapping = eval_mod.infer_label_mapping(assignment, truth)
        model.set_labels(mapping)
    algo_labels = eval_mod.apply_labels(assignment, model)
    report = eval_mod.match_assignments(algo_labels, truth, mode=cfg.mode)
    sizes = [len(v) for v in algo_labels.values()]
    baseline = eval_mod.random_baseline(
        truth, truth.alphabet, sizes, cfg.baseline_trials,
        substream_seed(cfg.seed, "baseline"),
    )
    payload = {
        "mode": cfg.mode,
        "label_map": {d.id: d.label for d in model.dois},
        "match": report.to_dict(),
        "random_baseline": baseline.to_dict(),
    }
    if truth.per_annotator and len(truth.per_annotator) >= 2:
        payload["fleiss_kappa"] = eval_mod.kappa_from_truth(truth)
    _write_json(outdir / "match_report.json", payload)
    return {"perfect": report.perfect, "precision": report.precision}


def stage_analyze(cfg: RunConfig, outdir: Path) -> dict:
    messages = _load_messages_artifact(outdir)
    assignment = doi_mod.MessageDoIAssignment.read_jsonl(outdir / "assignments.jsonl")
    model = doi_mod.DoIModel.read_json(outdir / "dois.json")
    dyads = corpus_mod.build_dyads(messages)

    metadata = {}
    if cfg.neighbors:
        metadata["neighbors"] = net_mod.load_user_sets(cfg.neighbors)
    if cfg.groups:
        metadata["groups"] = net_mod.load_user_sets(cfg.groups)
    if cfg.items:
        metadata["items"] = net_mod.load_user_sets(cfg.items)
    if cfg.kinship:
        metadata["kinship"] = net_mod.load_kinship(cfg.kinship)
    comm = net_mod.build_comm_graph(messages, assignment, **metadata)

    lexicon = net_mod.load_lexicon(cfg.lexicon) if cfg.lexicon else None
    categories = cfg.lexicon_categories or (lexicon.categories() if lexicon else [])

    doi_ids = [d.id for d in model.dois]
    shares = net_mod.tie_share(assignment, dyads, mode="hard")
    analysis: dict = {"dois": {}, "full": {}}
    fig_rows: dict[str, list[str]] = {
        "fig3": ["kind\tdoi\tx\tcum_prob"],
        "fig4": ["family\tdoi\tx\tvalue"],
        "fig5": ["length\tmean_reciprocity"],
        "fig6": ["doi\tpopulation_share\twealth_share"],
        "fig7": ["doi\tr\tjackknife_stderr\trewired_r"],
    }

    full_recip = net_mod.reciprocity(comm.arcs)
    analysis["full"]["reciprocity"] = full_recip
    try:
        full_assort = net_mod.assortativity(
            comm, collapse=cfg.collapse_arcs, rewires=cfg.rewires,
            seed=substream_seed(cfg.seed, "rewire-full"),
        )
        analysis["full"]["assortativity"] = full_assort.to_dict()
        fig_rows["fig7"].append(
            f"full\t{full_assort.r!r}\t{full_assort.jackknife_stderr!r}\t{full_assort.rewired_r!r}"
        )
    except (DataError, NumericalError) as exc:
        analysis["full"]["assortativity"] = {"error": str(exc)}

    for doi_id in doi_ids:
        label = model.label_of(doi_id)
        sub = net_mod.induce_subgraph(comm, assignment, doi_id)
        entry: dict = {"label": label, "tie_share": shares.get(doi_id, 0.0)}
        if sub.arcs:
            node_f, dyad_f, msg_f = net_mod.coverage(sub, comm)
            entry["coverage"] = {"nodes": node_f, "dyads": dyad_f, "messages": msg_f}
            entry["reciprocity"] = net_mod.reciprocity(sub.arcs)
            strength = net_mod.strength_report(
                comm, assignment, dyads, doi_id,
                lexicon=lexicon, lexicon_categories=categories,
            )
            entry["strength"] = strength.to_dict()
            wealth_map = (
                net_mod.in_degrees(sub.arcs)
                if cfg.wealth == "indegree"
                else net_mod.in_strengths(sub.arcs)
            )
            wealth = [wealth_map[u] for u in sorted(wealth_map)]
            try:
                lg = net_mod.lorenz_gini(wealth)
                entry["gini"] = lg.gini
                for x, y in lg.points:
                    fig_rows["fig6"].append(f"{label}\t{x!r}\t{y!r}")
            except DataError as exc:
                entry["gini"] = None

            try:
                assort = net_mod.assortativity(
                    sub, collapse=cfg.collapse_arcs, rewires=cfg.rewires,
                    seed=substream_seed(cfg.seed, f"rewire-{doi_id}"),
                )
                entry["assortativity"] = assort.to_dict()
                fig_rows["fig7"].append(
                    f"{label}\t{assort.r!r}\t{assort.jackknife_stderr!r}\t{assort.rewired_r!r}"
                )
            except (DataError, NumericalError) as exc:
                entry["assortativity"] = {"error": str(exc)}

            conv_lens = sorted(len(dyads.pairs[p]) for p in sub.dyads() if p in dyads.pairs)
            msg_lens = sorted(len(textprep_mod.split_tokens(m.text)) for m in sub.arcs)
            for kind, values in (("conv_len", conv_lens), ("msg_len", msg_lens)):
                n = len(values)
                seen = 0
                for x in sorted(set(values)):
                    seen += sum(1 for v in values if v == x)
                    fig_rows["fig3"].append(f"{kind}\t{label}\t{x}\t{seen / n!r}")
        analysis["dois"][str(doi_id)] = entry

    curves = net_mod.evolution_curves(assignment, dyads)
    for length, by_doi in curves.family_length.items():
        for doi_id, val in by_doi.items():
            fig_rows["fig4"].append(f"length\t{model.label_of(doi_id)}\t{length}\t{val!r}")
    for step, by_doi in curves.family_step.items():
        for doi_id, val in by_doi.items():
            fig_rows["fig4"].append(f"step\t{model.label_of(doi_id)}\t{step}\t{val!r}")

    try:
        points, slope, intercept = net_mod.reciprocity_vs_length(dyads)
        analysis["full"]["reciprocity_fit"] = {"slope": slope, "intercept": intercept}
        for length, val in points:
            fig_rows["fig5"].append(f"{length}\t{val!r}")
    except DataError as exc:
        analysis["full"]["reciprocity_fit"] = {"error": str(exc)}

    _write_json(outdir / "analysis.json", analysis)
    for name, filename in (
        ("fig3", "fig3_distributions.tsv"),
        ("fig4", "fig4_evolution.tsv"),
        ("fig5", "fig5_reciprocity.tsv"),
        ("fig6", "fig6_lorenz.tsv"),
        ("fig7", "fig7_assortativity.tsv"),
    ):
        with open(outdir / filename, "w", encoding="utf-8") as fh:
            fh.write("\n".join(fig_rows[name]) + "\n")
    return {"dois_analyzed": len(doi_ids)}


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "prep": stage_prep,
    "factorize": stage_factorize,
    "graph": stage_graph,
    "detect": stage_detect,
    "assign": stage_assign,
    "evaluate": stage_evaluate,
    "analyze": stage_analyze,
}

STAGE_ARTIFACTS = {
    "ingest": ["messages.jsonl", "corpus_stats.json"],
    "prep": ["vocabulary.tsv", "gamma.txt", "matrix_columns.txt", "prep_summary.json"],
    "factorize": ["k_selected.json", "W.txt", "H.txt", "nmf_summary.json"],
    "graph": ["bucket_assignments.jsonl", "conversation_graph.tsv", "graph_nodes.tsv"],
    "detect": ["partition.tsv", "detect_summary.json"],
    "assign": ["dois.json", "assignments.jsonl"],
    "evaluate": ["match_report.json"],
    "analyze": [
        "analysis.json", "fig3_distributions.tsv", "fig4_evolution.tsv",
        "fig5_reciprocity.tsv", "fig6_lorenz.tsv", "fig7_assortativity.tsv",
    ],
}


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every enabled stage and write a manifest with artifact digests."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "seed": cfg.seed,
        "config": {k: v for k, v in vars(cfg).items()},
        "stages": [],
        "artifacts": {},
    }
    for stage in STAGES:
        if stage == "evaluate" and (not cfg.evaluate or not cfg.truth):
            continue
        if stage == "analyze" and not cfg.analyze:
            continue
        started = time.time()
        try:
            summary = STAGE_FUNCS[stage](cfg, outdir)
        except Exception:
            _write_json(outdir / "manifest.json", manifest)
            print(f"pipeline halted in stage: {stage}", file=sys.stderr)
            raise
        manifest["stages"].append({
            "name": stage,
            "summary": summary,
            "seconds": round(time.time() - started, 3),
        })
        for artifact in STAGE_ARTIFACTS[stage]:
            path = outdir / artifact
            if path.exists():
                manifest["artifacts"][artifact] = _sha256(path)
    _write_json(outdir / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def build_report(outdir: Path) -> dict:
    """One-page summary assembled from run artifacts; missing ones are named."""
    if not (outdir / "manifest.json").exists() and not (outdir / "dois.json").exists():
        raise DataError(f"no run artifacts found in {outdir} (missing manifest.json)")
    report: dict = {}
    k_path = outdir / "k_selected.json"
    if k_path.exists():
        report["k"] = _read_json(k_path)
    dois_path = outdir / "dois.json"
    if dois_path.exists():
        model = doi_mod.DoIModel.read_json(dois_path)
        report["dois"] = [
            {"id": d.id, "label": d.label, "buckets": len(d.buckets), "top_terms": d.top_terms[:10]}
            for d in model.dois
        ]
    match_path = outdir / "match_report.json"
    if match_path.exists():
        report["match"] = _read_json(match_path)
    analysis_path = outdir / "analysis.json"
    if analysis_path.exists():
        report["analysis"] = _read_json(analysis_path)
    stats_path = outdir / "corpus_stats.json"
    if stats_path.exists():
        report["corpus"] = _read_json(stats_path)
    return report


def render_report_text(report: dict) -> str:
    lines = ["domain-of-interaction run summary", "=" * 34]
    if "corpus" in report:
        st = report["corpus"]["stats"]
        lines.append(
            f"corpus: {st['message_count']} messages, {st['dyad_count']} dyads, "
            f"{st['user_count']} users; conv_len {st['conv_len_mean']:.2f} "
            f"({st['conv_len_median']:g}), msg_len {st['msg_len_mean']:.2f} "
            f"({st['msg_len_median']:g})"
        )
    if "k" in report:
        lines.append(f"buckets: k = {report['k']['k']}")
    inferred = report.get("match", {}).get("label_map", {})
    for d in report.get("dois", []):
        label = d["label"] or inferred.get(str(d["id"])) or f"doi{d['id']}"
        lines.append(f"  DoI {d['id']} [{label}] ({d['buckets']} buckets): {', '.join(d['top_terms'][:8])}")
    if "match" in report:
        m = report["match"]["match"]
        b = report["match"]["random_baseline"]
        lines.append(
            f"match: perfect {m['perfect']:.3f}, first {m['first']:.3f}, "
            f"partial {m['partial']:.3f}, none {m['none']:.3f}, precision {m['precision']:.3f}"
        )
        lines.append(
            f"random baseline: perfect {b['perfect']:.3f}, none {b['none']:.3f}, "
            f"precision {b['precision']:.3f}"
        )
        if "fleiss_kappa" in report["match"]:
            lines.append(f"fleiss kappa: {report['match']['fleiss_kappa']:.3f}")
    if "analysis" in report:
        lines.append("per-DoI analysis:")
        for doi_id, entry in sorted(report["analysis"]["dois"].items()):
            cov = entry.get("coverage", {})
            lines.append(
                f"  [{entry['label']}] share {entry['tie_share']:.3f}"
                + (
                    f", coverage n/d/m {cov['nodes']:.2f}/{cov['dyads']:.2f}/{cov['messages']:.2f}"
                    if cov
                    else ""
                )
                + (f", reciprocity {entry['reciprocity']:.3f}" if "reciprocity" in entry else "")
                + (f", gini {entry['gini']:.3f}" if entry.get("gini") is not None else "")
                + (
                    f", assortativity {entry['assortativity']['r']:.3f}"
                    if isinstance(entry.get("assortativity"), dict) and "r" in entry["assortativity"]
                    else ""
                )
            )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file")
    for key, typ in _FLAG_FIELDS.items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ, default=None)
    p.add_argument("--k-grid", dest="k_grid", type=_parse_int_list, default=None)
    p.add_argument("--lexicon-categories", dest="lexicon_categories", type=_parse_str_list, default=None)
    p.add_argument("--no-analyze", dest="analyze", action="store_const", const=False, default=None)
    p.add_argument("--no-evaluate", dest="evaluate", action="store_const", const=False, default=None)
    p.add_argument("--collapse-arcs", dest="collapse_arcs", action="store_const", const=True, default=None)


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _parse_str_list(text: str) -> list[str]:
    return [x for x in text.replace(",", " ").split() if x]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doimine",
        description="Discover domains of interaction in dyadic conversation corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGES + ("run",):
        p = sub.add_parser(name)
        _add_common_flags(p)
    p = sub.add_parser("report")
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = sub.add_parser("synth")
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--domains", type=int, default=3)
    p.add_argument("--vocab-per-domain", type=int, default=120)
    p.add_argument("--overlap", type=float, default=0.05)
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--dyads", type=int, default=2000)
    p.add_argument("--conv-len-mean", type=float, default=4.0)
    p.add_argument("--msg-len-mean", type=float, default=8.0)
    p.add_argument("--in-kind", type=float, default=0.95)
    p.add_argument("--start-decay", type=float, default=0.0)
    p.add_argument("--topology", choices=("random", "status_star"), default="random")
    p.add_argument("--survival-bias", action="store_true")
    p.add_argument("--stopword-rate", type=float, default=0.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            spec = synth_mod.SynthSpec(
                domains=args.domains,
                vocab_per_domain=args.vocab_per_domain,
                overlap=args.overlap,
                users=args.users,
                dyad_count=args.dyads,
                conv_len_mean=args.conv_len_mean,
                msg_len_mean=args.msg_len_mean,
                in_kind=args.in_kind,
                start_decay=args.start_decay,
                topology=args.topology,
                survival_bias=args.survival_bias,
                stopword_rate=args.stopword_rate,
                seed=args.seed,
            )
            paths = synth_mod.emit(synth_mod.generate(spec), args.output_dir)
            print(json.dumps(paths, sort_keys=True))
            return 0
        if args.command == "report":
            report = build_report(Path(args.output_dir))
            outdir = Path(args.output_dir)
            _write_json(outdir / "report.json", report)
            text = render_report_text(report)
            with open(outdir / "report.txt", "w", encoding="utf-8") as fh:
                fh.write(text)
            print(json.dumps(report, sort_keys=True, indent=2) if args.json else text)
            return 0
        cfg = load_config(args)
        if args.command == "run":
            manifest = run_pipeline(cfg)
            print(json.dumps({"stages": [s["name"] for s in manifest["stages"]]}, sort_keys=True))
            return 0
        outdir = Path(cfg.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        summary = STAGE_FUNCS[args.command](cfg, outdir)
        print(json.dumps(summary, sort_keys=True))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
