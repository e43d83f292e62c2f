"""Unsupervised discovery of domains of interaction in dyadic conversation corpora.

The pipeline ingests directed, timestamped messages, builds a sublinear TF-IDF
term-document matrix, factorizes it into message buckets with NMF, links the
buckets through reply transitions into a weighted conversation graph, and
partitions that graph into domains of interaction (DoIs).  Companion modules
score the resulting fuzzy message assignments against labeled ground truth and
compute social-network statistics (coverage, reciprocity, tie share, Lorenz/
Gini inequality, assortativity) over the per-domain communication subgraphs.
"""

from doimine.errors import ConfigError, DataError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DataError", "NumericalError", "__version__"]
