"""Soft ranks, exhaustive pair scans, and the analytic shift-system oracle.

The soft rank of a nonzero matrix is its squared Frobenius norm over its
squared spectral norm: the effective number of significant singular values,
between 1 and the rank. The scan over sample pairs minimizes the soft rank
of the trajectory-matrix differences G_x - G_y; its minimum over a finite
sample only upper-bounds the minimum over the whole attractor, so results
carry the pair count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delay_map import DelayParams, row_squared_norms, trajectory_matrices, trajectory_matrix
from .dynamics import FlowSpec
from .errors import DegeneratePairError, InvalidArgumentError, UndefinedSoftRankError

# Matrices per batched-SVD chunk in pair scans; bounds peak memory.
_SCAN_CHUNK = 512

# Relative distance below which two states are treated as coincident.
COINCIDENCE_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SoftRankResult:
    """Soft rank with the norms and singular values behind it."""

    value: float
    frobenius_sq: float
    spectral_sq: float
    singular_values: np.ndarray  # descending


@dataclass(frozen=True)
class PairDiagnostics:
    """Per-pair record from a scan: indices, soft rank, chord norms.

    ``ratio`` is the squared-distance ratio of the measured delay vectors to
    the trajectory vectors; it is None in scans that do not involve a
    coefficient vector. ``chord_norms[m]`` is the distance between the m-th
    backward iterates of the two states.
    """

    pair: tuple[int, int]
    soft_rank: float
    chord_norms: np.ndarray
    ratio: float | None = None


@dataclass(frozen=True)
class PairScanResult:
    """Minimum soft rank over all sample pairs (an upper bound estimate).

    ``argmin_pair`` is lexicographically smallest among ties. ``per_pair``
    is populated only when the scan is asked to keep per-pair records.
    """

    infimum: float
    argmin_pair: tuple[int, int]
    num_pairs: int
    per_pair: list[PairDiagnostics] | None = None


def soft_rank(g: np.ndarray) -> SoftRankResult:
    """Squared Frobenius norm over squared spectral norm of a nonzero matrix."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2:
        raise InvalidArgumentError(f"expected a 2-D matrix, got shape {g.shape}")
    if not np.any(g):
        raise UndefinedSoftRankError("soft rank of the zero matrix is undefined (0/0)")
    s = np.linalg.svd(g, compute_uv=False)
    frobenius_sq = float(np.sum(s * s))
    spectral_sq = float(s[0] * s[0])
    return SoftRankResult(
        value=frobenius_sq / spectral_sq,
        frobenius_sq=frobenius_sq,
        spectral_sq=spectral_sq,
        singular_values=s,
    )


def matrix_rank_of(result: SoftRankResult) -> int:
    """Number of singular values above 1e-10 times the largest."""
    s = result.singular_values
    return int(np.sum(s > 1e-10 * s[0]))


def check_distinct(x: np.ndarray, y: np.ndarray) -> None:
    """Raise when two states coincide to within 1e-12 relative distance."""
    scale = max(float(np.linalg.norm(x)), float(np.linalg.norm(y)))
    if float(np.linalg.norm(x - y)) <= COINCIDENCE_THRESHOLD * scale:
        raise DegeneratePairError("states coincide; pair diagnostics are undefined")


def pair_soft_rank(
    flow: FlowSpec, x: np.ndarray, y: np.ndarray, params: DelayParams
) -> SoftRankResult:
    """Soft rank of the trajectory-matrix difference G_x - G_y."""
    check_distinct(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    gx = trajectory_matrix(flow, x, params)
    gy = trajectory_matrix(flow, y, params)
    return soft_rank(gx.g - gy.g)


def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column indices of all i < j pairs in lexicographic order."""
    i_idx, j_idx = np.triu_indices(n, k=1)
    return i_idx, j_idx


def _check_samples_distinct(samples: np.ndarray) -> None:
    norms = np.linalg.norm(samples, axis=1)
    i_idx, j_idx = pair_indices(samples.shape[0])
    dists = np.linalg.norm(samples[i_idx] - samples[j_idx], axis=1)
    scales = np.maximum(norms[i_idx], norms[j_idx])
    bad = np.flatnonzero(dists <= COINCIDENCE_THRESHOLD * scales)
    if bad.size:
        k = int(bad[0])
        raise DegeneratePairError(
            f"samples {int(i_idx[k])} and {int(j_idx[k])} coincide; "
            "the scan minimum would be biased by skipping them"
        )


def infimum_soft_rank(
    flow: FlowSpec,
    samples: np.ndarray,
    params: DelayParams,
    keep_per_pair: bool = False,
) -> PairScanResult:
    """Exact minimum of the pair soft rank over all C(n, 2) sample pairs.

    Coincident samples are a hard error, never skipped. The per-pair SVDs
    are batched in chunks; the result is identical to a sequential scan.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] < 2:
        raise InvalidArgumentError(
            f"need at least 2 samples to form a pair, got {samples.shape[0]}"
        )
    _check_samples_distinct(samples)

    stack = trajectory_matrices(flow, samples, params)
    i_idx, j_idx = pair_indices(samples.shape[0])
    num_pairs = i_idx.size

    values = np.empty(num_pairs)
    per_pair: list[PairDiagnostics] | None = [] if keep_per_pair else None
    for start in range(0, num_pairs, _SCAN_CHUNK):
        stop = min(start + _SCAN_CHUNK, num_pairs)
        diffs = stack[i_idx[start:stop]] - stack[j_idx[start:stop]]
        svals = np.linalg.svd(diffs, compute_uv=False)
        fro = np.sum(svals * svals, axis=1)
        spec_sq = svals[:, 0] * svals[:, 0]
        values[start:stop] = fro / spec_sq
        if per_pair is not None:
            for k in range(start, stop):
                row_sqs, _ = row_squared_norms(diffs[k - start])
                per_pair.append(
                    PairDiagnostics(
                        pair=(int(i_idx[k]), int(j_idx[k])),
                        soft_rank=float(values[k]),
                        chord_norms=np.sqrt(row_sqs),
                    )
                )

    argmin = int(np.argmin(values))  # first occurrence = lexicographic tie-break
    return PairScanResult(
        infimum=float(values[argmin]),
        argmin_pair=(int(i_idx[argmin]), int(j_idx[argmin])),
        num_pairs=int(num_pairs),
        per_pair=per_pair,
    )


def shift_system_oracle(n: int, m: int, d: int) -> SoftRankResult:
    """Analytic soft rank of G_x - G_y for shift-flow basis states d apart.

    The rows of G_x - G_y are e_{a+k} - e_{a+d+k} (indices mod n), so the
    Gram matrix is 2 I_M minus ones at index offsets congruent to +/-d mod n.
    For m = n the Gram is circulant with eigenvalues 4 sin^2(pi j d / n);
    for m < n it is built explicitly and solved densely. The squared
    Frobenius norm is the trace, exactly 2m.

    The result always satisfies value >= m/2: the Gram's largest eigenvalue
    is at most 4 because each backward iterate appears in at most two rows.
    """
    if n < 2:
        raise InvalidArgumentError(f"ambient dimension must be >= 2, got {n}")
    if not 1 <= d <= n - 1:
        raise InvalidArgumentError(f"separation d={d} out of range [1, {n - 1}]")
    if not 1 <= m <= n:
        raise InvalidArgumentError(f"num_delays m={m} out of range [1, {n}]")

    if m == n:
        j = np.arange(n)
        eigs = 4.0 * np.sin(np.pi * j * d / n) ** 2
    else:
        rows = np.arange(m)[:, None]
        cols = np.arange(m)[None, :]
        gram = 2.0 * np.eye(m)
        gram -= ((rows - cols) % n == d).astype(float)
        gram -= ((cols - rows) % n == d).astype(float)
        eigs = np.linalg.eigvalsh(gram)

    eigs = np.sort(np.clip(eigs, 0.0, None))[::-1]
    frobenius_sq = 2.0 * m  # exact trace of the Gram
    spectral_sq = float(eigs[0])
    value = frobenius_sq / spectral_sq
    if not value >= m / 2 - 1e-9:
        raise AssertionError(
            f"shift oracle produced value {value} below the m/2 bound for "
            f"(n={n}, m={m}, d={d})"
        )
    return SoftRankResult(
        value=value,
        frobenius_sq=frobenius_sq,
        spectral_sq=spectral_sq,
        singular_values=np.sqrt(eigs),
    )
