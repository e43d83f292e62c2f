"""Non-negative factorization of the term-document matrix into message buckets.

Multiplicative updates for the Frobenius objective, with an optional
observation mask so that the bucket count k can be selected by held-out
reconstruction error.  Also hosts the two bucket-mapping functions: the
per-message representative-bucket rule and the per-bucket top-terms rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from doimine.errors import ConfigError, DataError, NumericalError

_EPS = 1e-12


@dataclass
class NmfConfig:
    seed: int = 0
    max_iter: int = 500
    rel_tol: float = 1e-4
    init: str = "random_uniform"

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.rel_tol <= 0:
            raise ConfigError(f"rel_tol must be > 0, got {self.rel_tol}")
        if self.init not in ("random_uniform", "nndsvd"):
            raise ConfigError(f"unknown init {self.init!r}")


@dataclass
class FactorPair:
    """Non-negative factors and the objective trace of the fit.

    trace[i] is the Frobenius norm of the residual after i update sweeps
    (trace[0] is the initial residual); final_error == trace[-1].
    """

    W: np.ndarray
    H: np.ndarray
    k: int
    final_error: float
    trace: np.ndarray


@dataclass
class BucketAssignment:
    """Per-message representative buckets with probabilities, sorted descending."""

    entries: dict[str, list[tuple[int, float]]]
    theta: float
    k: int

    def top_bucket(self, message_id: str) -> int:
        return self.entries[message_id][0][0]


def _as_csr(gamma) -> sp.csr_matrix:
    if sp.issparse(gamma):
        mat = gamma.tocsr().astype(np.float64)
    else:
        mat = sp.csr_matrix(np.asarray(gamma, dtype=np.float64))
    if mat.nnz and mat.data.min() < 0:
        raise DataError("matrix has negative entries")
    return mat


def _init_factors(gamma: sp.csr_matrix, k: int, config: NmfConfig) -> tuple[np.ndarray, np.ndarray]:
    m, n = gamma.shape
    if config.init == "random_uniform":
        rng = np.random.default_rng(config.seed)
        mean = gamma.sum() / (m * n)
        scale = max(mean / k, _EPS)
        W = (1.0 - rng.random((m, k))) * scale
        H = (1.0 - rng.random((k, n))) * scale
        return W, H
    # nndsvd with average fill so multiplicative updates cannot lock zeros
    u, s, vt = spla.svds(gamma, k=k)
    order = np.argsort(s)[::-1]
    u, s, vt = u[:, order], s[order], vt[order]
    W = np.zeros((m, k))
    H = np.zeros((k, n))
    W[:, 0] = np.sqrt(s[0]) * np.abs(u[:, 0])
    H[0, :] = np.sqrt(s[0]) * np.abs(vt[0, :])
    for j in range(1, len(s)):
        x, y = u[:, j], vt[j, :]
        xp, xn = np.maximum(x, 0), np.maximum(-x, 0)
        yp, yn = np.maximum(y, 0), np.maximum(-y, 0)
        mp, mn = np.linalg.norm(xp) * np.linalg.norm(yp), np.linalg.norm(xn) * np.linalg.norm(yn)
        if mp >= mn:
            w_col = xp / max(np.linalg.norm(xp), _EPS)
            h_row = yp / max(np.linalg.norm(yp), _EPS)
            sigma = mp
        else:
            w_col = xn / max(np.linalg.norm(xn), _EPS)
            h_row = yn / max(np.linalg.norm(yn), _EPS)
            sigma = mn
        W[:, j] = np.sqrt(s[j] * sigma) * w_col
        H[j, :] = np.sqrt(s[j] * sigma) * h_row
    fill = gamma.sum() / (gamma.shape[0] * gamma.shape[1])
    W[W <= 0] = fill
    H[H <= 0] = fill
    return W, H


def _values_at(W: np.ndarray, H: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ji->i", W[rows, :], H[:, cols])


def _residual_norm(
    obs_sq: float,
    coo_rows: np.ndarray,
    coo_cols: np.ndarray,
    coo_data: np.ndarray,
    W: np.ndarray,
    H: np.ndarray,
    held_coords: tuple[np.ndarray, np.ndarray] | None,
) -> float:
    """Frobenius norm of the residual over observed entries.

    Expands ||G - WH||^2 = ||G||^2 - 2<G, WH> + ||WH||^2 over the observed
    matrix; for masked fits the WH mass at held-out coordinates (where the
    observed matrix is zero) is subtracted out.
    """
    wh_at_nnz = _values_at(W, H, coo_rows, coo_cols)
    cross = float(np.dot(coo_data, wh_at_nnz))
    wh_sq = float(np.sum((W.T @ W) * (H @ H.T)))
    total = obs_sq - 2.0 * cross + wh_sq
    if held_coords is not None:
        wh_h = _values_at(W, H, held_coords[0], held_coords[1])
        total -= float(np.dot(wh_h, wh_h))
    return float(np.sqrt(max(total, 0.0)))


# below this many cells the dense update path is cheaper than sparse ops
_DENSE_CELL_LIMIT = 500_000


def _fit_dense(
    gamma: sp.csr_matrix,
    k: int,
    config: NmfConfig,
    held: tuple[np.ndarray, np.ndarray, np.ndarray] | None,
) -> FactorPair:
    G = np.asarray(gamma.todense())
    mask = None
    if held is not None:
        mask = np.ones(G.shape)
        mask[held[0], held[1]] = 0.0
        G = G * mask

    W, H = _init_factors(gamma, k, config)

    def residual() -> float:
        R = G - W @ H
        if mask is not None:
            R = R * mask
        return float(np.linalg.norm(R))

    trace = [residual()]
    for _ in range(config.max_iter):
        WH = W @ H
        if mask is not None:
            WH *= mask
        H *= (W.T @ G) / np.maximum(W.T @ WH, _EPS)
        WH = W @ H
        if mask is not None:
            WH *= mask
        W *= (G @ H.T) / np.maximum(WH @ H.T, _EPS)
        err = residual()
        if not np.isfinite(err):
            raise NumericalError("non-finite objective during factorization")
        prev = trace[-1]
        trace.append(err)
        if prev > 0 and abs(prev - err) / prev < config.rel_tol:
            break
    if not (np.isfinite(W).all() and np.isfinite(H).all()):
        raise NumericalError("non-finite factor entries after factorization")
    return FactorPair(W=W, H=H, k=k, final_error=trace[-1], trace=np.asarray(trace))


def _fit(
    gamma: sp.csr_matrix,
    k: int,
    config: NmfConfig,
    held: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> FactorPair:
    m, n = gamma.shape
    if not 1 <= k < min(m, n):
        raise ConfigError(f"k must satisfy 1 <= k < min(m, n) = {min(m, n)}, got {k}")
    if m * n <= _DENSE_CELL_LIMIT:
        return _fit_dense(gamma, k, config, held)

    if held is not None:
        hr, hc, hv = held
        observed = gamma.copy().tolil()
        observed[hr, hc] = 0.0
        observed = observed.tocsr()
        observed.eliminate_zeros()
    else:
        observed = gamma

    coo = observed.tocoo()
    coo_rows, coo_cols, coo_data = coo.row, coo.col, coo.data
    obs_sq = float(np.dot(coo_data, coo_data))
    held_coords = (held[0], held[1]) if held is not None else None

    W, H = _init_factors(gamma, k, config)
    observed_t = observed.T.tocsr()

    trace = [_residual_norm(obs_sq, coo_rows, coo_cols, coo_data, W, H, held_coords)]
    # held entries are excluded by fitting on the zeroed matrix while
    # subtracting their WH mass from the update denominators
    for _ in range(config.max_iter):
        if held is not None:
            s_vals = _values_at(W, H, hr, hc)
            S = sp.csr_matrix((s_vals, (hr, hc)), shape=gamma.shape)
            numer_h = (observed_t @ W).T
            denom_h = (W.T @ W) @ H - (S.T @ W).T
        else:
            numer_h = (observed_t @ W).T
            denom_h = (W.T @ W) @ H
        H *= numer_h / np.maximum(denom_h, _EPS)

        if held is not None:
            s_vals = _values_at(W, H, hr, hc)
            S = sp.csr_matrix((s_vals, (hr, hc)), shape=gamma.shape)
            numer_w = observed @ H.T
            denom_w = W @ (H @ H.T) - S @ H.T
        else:
            numer_w = observed @ H.T
            denom_w = W @ (H @ H.T)
        W *= numer_w / np.maximum(denom_w, _EPS)

        err = _residual_norm(obs_sq, coo_rows, coo_cols, coo_data, W, H, held_coords)
        if not np.isfinite(err):
            raise NumericalError("non-finite objective during factorization")
        prev = trace[-1]
        trace.append(err)
        if prev > 0 and abs(prev - err) / prev < config.rel_tol:
            break

    if not (np.isfinite(W).all() and np.isfinite(H).all()):
        raise NumericalError("non-finite factor entries after factorization")
    return FactorPair(W=W, H=H, k=k, final_error=trace[-1], trace=np.asarray(trace))


def factorize(gamma, k: int, config: NmfConfig) -> FactorPair:
    """Minimize ||gamma - WH||_F with Lee-Seung multiplicative updates.

    Deterministic given config.seed; the objective trace is non-increasing.
    """
    return _fit(_as_csr(gamma), k, config)


def holdout_errors(
    gamma,
    k_grid: Sequence[int],
    holdout_fraction: float,
    config: NmfConfig,
    mask_replicates: int = 1,
) -> dict[int, float]:
    """Held-out Frobenius error per candidate k.

    Every k is scored against the same mask(s); with mask_replicates > 1 the
    errors are averaged over independent masks, which stabilizes the ranking
    near the error floor.
    """
    mat = _as_csr(gamma)
    m, n = mat.shape
    if not k_grid:
        raise ConfigError("k_grid is empty")
    if not 0.0 < holdout_fraction < 0.5:
        raise ConfigError(f"holdout_fraction must be in (0, 0.5), got {holdout_fraction}")
    if mask_replicates < 1:
        raise ConfigError(f"mask_replicates must be >= 1, got {mask_replicates}")
    for k in k_grid:
        if not 1 <= k < min(m, n):
            raise ConfigError(f"grid value k={k} outside [1, {min(m, n) - 1}]")

    coo = mat.tocoo()
    nnz = coo.nnz
    n_held = max(1, int(round(holdout_fraction * nnz)))
    ks = sorted(set(k_grid))
    errors = {k: 0.0 for k in ks}
    for rep in range(mask_replicates):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(rep,)))
        picks = rng.choice(nnz, size=n_held, replace=False)
        held = (coo.row[picks], coo.col[picks], coo.data[picks])
        for k in ks:
            pair = _fit(mat, k, config, held=held)
            wh_h = _values_at(pair.W, pair.H, held[0], held[1])
            errors[k] += float(np.sqrt(np.sum((held[2] - wh_h) ** 2))) / mask_replicates
    return errors


def select_k(
    gamma,
    k_grid: Sequence[int],
    holdout_fraction: float,
    config: NmfConfig,
    tie_rel: float = 0.10,
    mask_replicates: int = 1,
) -> int:
    """The k with minimal held-out error; ties go to the smaller k.

    Errors within tie_rel (relative) of the minimum count as tied, so the
    smallest statistically indistinguishable k wins.
    """
    if tie_rel < 0:
        raise ConfigError(f"tie_rel must be >= 0, got {tie_rel}")
    uniq = sorted(set(k_grid))
    if not uniq:
        raise ConfigError("k_grid is empty")
    if len(uniq) == 1:
        return uniq[0]
    errors = holdout_errors(gamma, uniq, holdout_fraction, config, mask_replicates)
    floor = min(errors.values())
    for k in uniq:
        if errors[k] <= floor * (1.0 + tie_rel):
            return k
    return uniq[0]


def representative_buckets(H: np.ndarray, message_index: int, theta: float) -> list[tuple[int, float]]:
    """Buckets whose normalized probability reaches theta times the column max.

    theta == 1 is hard mode: exactly the argmax, ties to the lowest index.
    """
    if not 0.0 < theta <= 1.0:
        raise ConfigError(f"theta must be in (0, 1], got {theta}")
    col = np.asarray(H[:, message_index], dtype=np.float64)
    total = col.sum()
    if total <= 0:
        raise DataError(f"message column {message_index} has zero bucket mass")
    probs = col / total
    if theta == 1.0:
        b = int(np.argmax(probs))
        return [(b, float(probs[b]))]
    cutoff = theta * probs.max()
    picked = [(int(b), float(probs[b])) for b in np.nonzero(probs >= cutoff)[0]]
    picked.sort(key=lambda bp: (-bp[1], bp[0]))
    return picked


def assign_buckets(H: np.ndarray, message_ids: Sequence[str], theta: float) -> BucketAssignment:
    """Representative buckets for every retained message."""
    entries = {
        mid: representative_buckets(H, i, theta) for i, mid in enumerate(message_ids)
    }
    return BucketAssignment(entries=entries, theta=theta, k=H.shape[0])


def top_terms(W: np.ndarray, terms: Sequence[str], bucket: int, n_terms: int) -> list[str]:
    """The n_terms vocabulary entries with the largest weight in a bucket column."""
    m = W.shape[0]
    if not 0 <= bucket < W.shape[1]:
        raise ConfigError(f"bucket {bucket} out of range for {W.shape[1]} buckets")
    if not 1 <= n_terms <= m:
        raise ConfigError(f"n_terms must be in [1, {m}], got {n_terms}")
    order = sorted(range(m), key=lambda i: (-W[i, bucket], terms[i]))
    return [terms[i] for i in order[:n_terms]]
