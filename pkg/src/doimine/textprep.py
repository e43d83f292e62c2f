"""Raw text to sparse sublinear TF-IDF term-document matrix.

The preprocessing chain: lowercase, split into alphanumeric runs, drop
stopwords, stem, expand with adjacent bi-/tri-grams, filter n-grams by
document-frequency bounds, cap the vocabulary by corpus frequency, and
weight entries with (1 + ln tf) * ln(n / df).  Messages left with no
in-vocabulary terms are dropped from the matrix and the drop fraction
reported.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from doimine.corpus import Message
from doimine.errors import ConfigError, DataError
from doimine.stemming import get_stemmer

# alphanumeric runs; underscore is punctuation, not a word character
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass
class PrepConfig:
    """Preprocessing knobs. Document-frequency cuts are ratios of the corpus."""

    stopword_path: str | Path | None = None
    language: str = "english"
    high_df_cut: float = 0.60
    low_df_cut: float = 0.01
    vocab_cap: int = 10_000
    ngram_max: int = 3
    stopwords: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not (0.0 <= self.low_df_cut < self.high_df_cut <= 1.0):
            raise ConfigError(
                f"require 0 <= low_df_cut < high_df_cut <= 1, got {self.low_df_cut}, {self.high_df_cut}"
            )
        if self.vocab_cap < 1:
            raise ConfigError(f"vocab_cap must be >= 1, got {self.vocab_cap}")
        if self.ngram_max < 1:
            raise ConfigError(f"ngram_max must be >= 1, got {self.ngram_max}")
        if self.stopword_path is not None and not self.stopwords:
            self.stopwords = load_stopwords(self.stopword_path)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Stopword file: one token per line, UTF-8; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def split_tokens(text: str) -> list[str]:
    """Raw tokenization: lowercase alphanumeric runs, no filtering.

    This is the token count used for message-length statistics.
    """
    return _TOKEN_RE.findall(text.lower())


def tokenize(text: str, config: PrepConfig) -> list[str]:
    """Lowercase, strip non-alphanumerics, drop stopwords, stem."""
    stem = get_stemmer(config.language)
    return [stem(tok) for tok in split_tokens(text) if tok not in config.stopwords]


def expand_ngrams(tokens: Sequence[str], ngram_max: int = 3) -> list[str]:
    """Unigrams plus adjacent n-grams up to ngram_max, space-joined, in order."""
    out = list(tokens)
    for n in range(2, ngram_max + 1):
        out.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return out


@dataclass
class Vocabulary:
    """Retained n-grams with dense indices and per-term document frequency."""

    terms: list[str]
    doc_freq: list[int]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def write_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("index\tterm\tdoc_freq\n")
            for i, (t, df) in enumerate(zip(self.terms, self.doc_freq)):
                fh.write(f"{i}\t{t}\t{df}\n")

    @classmethod
    def read_tsv(cls, path: str | Path) -> "Vocabulary":
        terms, dfs = [], []
        with open(path, encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                _, term, df = line.rstrip("\n").split("\t")
                terms.append(term)
                dfs.append(int(df))
        return cls(terms=terms, doc_freq=dfs)


@dataclass
class TermDocumentMatrix:
    """Sparse terms-by-messages TF-IDF matrix over the retained messages."""

    matrix: sp.csr_matrix
    message_ids: list[str]
    vocabulary: Vocabulary
    dropped_fraction: float
    idf_n: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


def message_ngrams(messages: Sequence[Message], config: PrepConfig) -> list[list[str]]:
    """Per-message expanded n-gram lists (the bag each message contributes)."""
    return [expand_ngrams(tokenize(m.text, config), config.ngram_max) for m in messages]


def build_vocabulary(ngrams_per_message: Sequence[Sequence[str]], config: PrepConfig) -> Vocabulary:
    """Filter n-grams by document-frequency ratio, then cap by corpus frequency."""
    if not ngrams_per_message:
        raise DataError("cannot build a vocabulary from an empty corpus")
    n_docs = len(ngrams_per_message)
    doc_freq: Counter[str] = Counter()
    corpus_freq: Counter[str] = Counter()
    for grams in ngrams_per_message:
        corpus_freq.update(grams)
        doc_freq.update(set(grams))

    survivors = [
        term
        for term, df in doc_freq.items()
        if config.low_df_cut <= df / n_docs <= config.high_df_cut
    ]
    if not survivors:
        raise DataError("vocabulary is empty after document-frequency filtering")
    survivors.sort(key=lambda t: (-corpus_freq[t], t))
    kept = survivors[: config.vocab_cap]
    return Vocabulary(terms=kept, doc_freq=[doc_freq[t] for t in kept])


def vectorize(
    ngrams_per_message: Sequence[Sequence[str]],
    message_ids: Sequence[str],
    vocab: Vocabulary,
) -> TermDocumentMatrix:
    """Sublinear TF-IDF weights: (1 + ln tf) * ln(n / df) for tf > 0.

    n is the corpus size the vocabulary was built on (including messages
    later dropped for having no in-vocabulary terms).
    """
    if len(ngrams_per_message) != len(message_ids):
        raise DataError("ngram lists and message ids differ in length")
    n = len(ngrams_per_message)
    idf = np.log(n / np.asarray(vocab.doc_freq, dtype=np.float64))

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    kept_ids: list[str] = []
    col = 0
    for grams, mid in zip(ngrams_per_message, message_ids):
        counts = Counter(g for g in grams if g in vocab.index)
        entries = []
        for term, tf in counts.items():
            r = vocab.index[term]
            w = (1.0 + np.log(tf)) * idf[r]
            if w > 0.0:
                entries.append((r, w))
        if not entries:
            continue
        for r, w in sorted(entries):
            rows.append(r)
            cols.append(col)
            vals.append(w)
        kept_ids.append(mid)
        col += 1

    if col == 0:
        raise DataError("no message survived vectorization")
    matrix = sp.csr_matrix(
        (np.asarray(vals), (np.asarray(rows), np.asarray(cols))),
        shape=(len(vocab), col),
    )
    return TermDocumentMatrix(
        matrix=matrix,
        message_ids=kept_ids,
        vocabulary=vocab,
        dropped_fraction=(n - col) / n,
        idf_n=n,
    )


def prepare(messages: Sequence[Message], config: PrepConfig) -> TermDocumentMatrix:
    """Full chain: tokenize, expand, build vocabulary, vectorize."""
    grams = message_ngrams(messages, config)
    vocab = build_vocabulary(grams, config)
    return vectorize(grams, [m.id for m in messages], vocab)
