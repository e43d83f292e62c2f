"""Synthetic conversation corpora with planted resource domains.

Each dyad's messages follow a Markov chain over domains: a reply stays in
the previous message's domain with probability rho (reciprocation in kind)
and otherwise restarts from a drift distribution.  A single decay parameter
shapes both the start distribution (low-index domains open conversations)
and the restart drift (restarts move away from low-index domains), which
plants the early-dominance-then-fade pattern used as the evolution oracle.

Message text is drawn from per-domain token pools with a configurable
cross-pool leakage fraction, so the planted labels double as clustering
ground truth.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from doimine.corpus import Message, write_messages_jsonl
from doimine.errors import ConfigError
from doimine.evaluation import write_ground_truth

# built-in filler vocabulary for the quasi-natural mode
STOPWORDS = ("the", "a", "an", "of", "and", "to", "in", "is", "it", "you", "for", "on")


@dataclass
class SynthSpec:
    domains: int = 3
    vocab_per_domain: int = 120
    overlap: float = 0.05
    users: int = 1000
    dyad_count: int = 2000
    conv_len_mean: float = 4.0
    msg_len_mean: float = 8.0
    in_kind: float = 0.95
    start_decay: float = 0.0
    topology: str = "random"
    hub_count: int = 5
    hub_bias: float = 0.8
    survival_bias: bool = False
    survival_strength: float = 2.0
    stopword_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.domains < 2:
            raise ConfigError(f"need at least 2 domains, got {self.domains}")
        if not 0.0 <= self.overlap < 0.5:
            raise ConfigError(f"overlap must be in [0, 0.5), got {self.overlap}")
        if self.vocab_per_domain < 1:
            raise ConfigError("vocabulary smaller than the message length floor")
        if not 0.0 < self.in_kind <= 1.0:
            raise ConfigError(f"in_kind must be in (0, 1], got {self.in_kind}")
        if self.start_decay < 0:
            raise ConfigError(f"start_decay must be >= 0, got {self.start_decay}")
        if self.conv_len_mean < 1 or self.msg_len_mean < 1:
            raise ConfigError("conversation and message length means must be >= 1")
        if self.users < 2 or self.dyad_count < 1:
            raise ConfigError("need at least 2 users and 1 dyad")
        if self.dyad_count > self.users * (self.users - 1) // 2:
            raise ConfigError("more dyads requested than distinct user pairs exist")
        if self.topology not in ("random", "status_star"):
            raise ConfigError(f"unknown topology {self.topology!r}")
        if not 0.0 <= self.stopword_rate < 1.0:
            raise ConfigError(f"stopword_rate must be in [0, 1), got {self.stopword_rate}")

    def labels(self) -> list[str]:
        return [f"d{d}" for d in range(self.domains)]


@dataclass
class SynthResult:
    spec: SynthSpec
    messages: list[Message]
    labels: dict[str, str]
    dyad_shares: dict[tuple[str, str], dict[str, float]]
    stats: dict = field(default_factory=dict)


def start_distribution(spec: SynthSpec) -> np.ndarray:
    w = np.exp(-spec.start_decay * np.arange(spec.domains, dtype=np.float64))
    return w / w.sum()


def restart_matrix(spec: SynthSpec) -> np.ndarray:
    """Row p: restart distribution over domains other than p, drifting
    toward high-index domains when start_decay > 0."""
    d = spec.domains
    w = np.exp(spec.start_decay * np.arange(d, dtype=np.float64))
    q = np.tile(w, (d, 1))
    np.fill_diagonal(q, 0.0)
    return q / q.sum(axis=1, keepdims=True)


def transition_matrix(spec: SynthSpec) -> np.ndarray:
    return spec.in_kind * np.eye(spec.domains) + (1.0 - spec.in_kind) * restart_matrix(spec)


def expected_step_distribution(spec: SynthSpec, n_steps: int) -> np.ndarray:
    """Planted domain distribution of the n-th message, rows n=1..n_steps."""
    M = transition_matrix(spec)
    pi = start_distribution(spec)
    out = np.empty((n_steps, spec.domains))
    for i in range(n_steps):
        out[i] = pi
        pi = pi @ M
    return out


def planted_crossover(spec: SynthSpec, n_max: int = 100) -> int | None:
    """First step where domain 0 stops being the most likely domain."""
    curve = expected_step_distribution(spec, n_max)
    for i in range(n_max):
        if curve[i, 0] < curve[i, 1:].max():
            return i + 1
    return None


def _draw_pairs(spec: SynthSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    pairs: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    while len(out) < spec.dyad_count:
        a, b = rng.integers(0, spec.users, size=2)
        if a == b:
            continue
        key = (int(min(a, b)), int(max(a, b)))
        if key in pairs:
            continue
        pairs.add(key)
        out.append(key)
    return out


def _draw_star_pairs(spec: SynthSpec, rng: np.random.Generator) -> tuple[list[tuple[int, int]], list[int], set[int]]:
    """Pairs plus a per-dyad fixed domain; domain-0 dyads link spokes to hubs."""
    hubs = set(range(min(spec.hub_count, spec.users - 1)))
    pairs: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    domains: list[int] = []
    dyad_domains = rng.integers(0, spec.domains, size=spec.dyad_count)
    for dom in dyad_domains:
        for _ in range(10_000):
            if dom == 0:
                hub = int(rng.choice(sorted(hubs)))
                spoke = int(rng.integers(len(hubs), spec.users))
                a, b = spoke, hub
            else:
                a, b = (int(v) for v in rng.integers(0, spec.users, size=2))
                if a == b:
                    continue
            key = (min(a, b), max(a, b))
            if key in pairs:
                continue
            pairs.add(key)
            out.append((a, b))
            domains.append(int(dom))
            break
        else:
            raise ConfigError("could not place the requested dyads; too few users")
    return out, domains, hubs


def _message_tokens(spec: SynthSpec, rng: np.random.Generator, domain: int) -> list[str]:
    length = 1 + rng.poisson(spec.msg_len_mean - 1.0)
    own = rng.random(length) >= spec.overlap
    tokens = []
    for keep in own:
        if keep or spec.domains == 1:
            d = domain
        else:
            d = int(rng.integers(0, spec.domains - 1))
            if d >= domain:
                d += 1
        tokens.append(f"d{d}t{int(rng.integers(0, spec.vocab_per_domain)):04d}")
    if spec.stopword_rate > 0.0:
        noisy = []
        for tok in tokens:
            if rng.random() < spec.stopword_rate:
                noisy.append(STOPWORDS[int(rng.integers(0, len(STOPWORDS)))])
            noisy.append(tok)
        tokens = noisy
    return tokens


def generate(spec: SynthSpec) -> SynthResult:
    """Deterministic corpus generation; all draws flow from spec.seed."""
    rng = np.random.default_rng(spec.seed)
    start = start_distribution(spec)
    restarts = restart_matrix(spec)

    per_dyad_domain: list[int] | None = None
    if spec.topology == "status_star":
        raw_pairs, per_dyad_domain, _ = _draw_star_pairs(spec, rng)
    else:
        raw_pairs = _draw_pairs(spec, rng)

    messages: list[Message] = []
    labels: dict[str, str] = {}
    dyad_shares: dict[tuple[str, str], dict[str, float]] = {}
    domain_counts = np.zeros(spec.domains, dtype=np.int64)
    counter = 0

    for dyad_idx, (a, b) in enumerate(raw_pairs):
        user_a, user_b = f"u{a:06d}", f"u{b:06d}"
        balance = 0.5
        length_mean = spec.conv_len_mean
        if spec.survival_bias:
            balance = float(rng.uniform(0.05, 0.95))
            evenness = 1.0 - abs(2.0 * balance - 1.0)
            length_mean = spec.conv_len_mean * (1.0 + spec.survival_strength * evenness)
        length = int(rng.geometric(1.0 / length_mean))

        counts = np.zeros(spec.domains, dtype=np.int64)
        domain = (
            per_dyad_domain[dyad_idx]
            if per_dyad_domain is not None
            else int(rng.choice(spec.domains, p=start))
        )
        for step in range(length):
            if step > 0 and per_dyad_domain is None:
                if rng.random() >= spec.in_kind:
                    domain = int(rng.choice(spec.domains, p=restarts[domain]))
            if spec.survival_bias:
                direction_forward = rng.random() < balance
            elif spec.topology == "status_star" and domain == 0:
                direction_forward = rng.random() < spec.hub_bias
            else:
                direction_forward = step % 2 == 0
            sender, recipient = (user_a, user_b) if direction_forward else (user_b, user_a)
            mid = f"m{counter:08d}"
            counter += 1
            text = " ".join(_message_tokens(spec, rng, domain))
            messages.append(
                Message(id=mid, sender=sender, recipient=recipient, timestamp=step, text=text)
            )
            labels[mid] = f"d{domain}"
            counts[domain] += 1
            domain_counts[domain] += 1
        if length > 0:
            pair_key = (user_a, user_b) if user_a <= user_b else (user_b, user_a)
            dyad_shares[pair_key] = {
                f"d{d}": float(counts[d] / length) for d in range(spec.domains)
            }

    total = int(domain_counts.sum())
    stats = {
        "message_count": total,
        "dyad_count": len(dyad_shares),
        "user_count": len({m.sender for m in messages} | {m.recipient for m in messages}),
        "domain_message_counts": {f"d{d}": int(domain_counts[d]) for d in range(spec.domains)},
        "domain_marginals": {
            f"d{d}": (float(domain_counts[d] / total) if total else 0.0)
            for d in range(spec.domains)
        },
        "planted_crossover": planted_crossover(spec) if spec.start_decay > 0 else None,
    }
    return SynthResult(spec=spec, messages=messages, labels=labels, dyad_shares=dyad_shares, stats=stats)


def emit(result: SynthResult, outdir: str | Path) -> dict[str, str]:
    """Write corpus.jsonl, labels.csv, and synth_manifest.json; returns paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    corpus_path = outdir / "corpus.jsonl"
    labels_path = outdir / "labels.csv"
    manifest_path = outdir / "synth_manifest.json"
    write_messages_jsonl(corpus_path, result.messages)
    write_ground_truth(labels_path, {mid: [lab] for mid, lab in result.labels.items()})
    manifest = {
        "spec": asdict(result.spec),
        "stats": result.stats,
        "mean_planted_shares": _mean_shares(result),
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return {
        "corpus": str(corpus_path),
        "labels": str(labels_path),
        "manifest": str(manifest_path),
    }


def _mean_shares(result: SynthResult) -> dict[str, float]:
    if not result.dyad_shares:
        return {}
    acc: dict[str, float] = {lab: 0.0 for lab in result.spec.labels()}
    for shares in result.dyad_shares.values():
        for lab, v in shares.items():
            acc[lab] += v
    return {lab: acc[lab] / len(result.dyad_shares) for lab in acc}
