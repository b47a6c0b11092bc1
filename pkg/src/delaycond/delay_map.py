"""Measurement coefficients, time series, and backward-iterate trajectory objects.

The scalar time series is s_n = <alpha, x_n>. Stacking M consecutive past
samples gives the delay vector; stacking the M backward iterates of a state
gives the M x N trajectory matrix G (row m is Phi^{-m}(x)) and, flattened
row by row, the trajectory vector in R^{MN}. The three are tied together by
the identity delay_vector(x) = G_x @ alpha.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import FlowSpec, Orbit, _check_state
from .errors import DimensionMismatchError, InvalidArgumentError

ENSEMBLES = ("rademacher", "gaussian")


@dataclass(frozen=True)
class MeasurementCoeffs:
    """Coefficient vector selecting the linear measurement functional <alpha, .>.

    ``seed`` is the integer that reproduces a drawn vector; it is None for
    user-supplied coefficients.
    """

    alpha: np.ndarray
    ensemble: str  # "rademacher" | "gaussian" | "user"
    seed: int | None = None


@dataclass(frozen=True)
class DelayParams:
    """Number of delays M stacked into each delay vector."""

    num_delays: int

    def __post_init__(self):
        if self.num_delays < 1:
            raise InvalidArgumentError(
                f"num_delays must be >= 1, got {self.num_delays}"
            )


@dataclass(frozen=True)
class TrajectoryMatrix:
    """M x N matrix whose row m is the m-th backward iterate of ``base_point``."""

    g: np.ndarray
    base_point: np.ndarray


@dataclass(frozen=True)
class TrajectoryVector:
    """Row-wise flattening of the trajectory matrix, a point in R^{MN}."""

    entries: np.ndarray
    base_point: np.ndarray


def derive_seed(base_seed: int, index: int) -> int:
    """Child seed for draw ``index`` of a stream rooted at ``base_seed``.

    Keying on (base_seed, index) makes every draw reproducible independently
    of evaluation order.
    """
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1, np.uint64)[0])


def draw_coeffs(ensemble: str, n: int, seed: int) -> MeasurementCoeffs:
    """Draw a reproducible coefficient vector from the named ensemble.

    "rademacher" draws i.i.d. +/-1 entries, "gaussian" i.i.d. standard
    normals. The same (ensemble, n, seed) always yields the same vector.
    """
    if ensemble not in ENSEMBLES:
        raise InvalidArgumentError(
            f"unknown ensemble {ensemble!r}, expected one of {ENSEMBLES}"
        )
    if n < 1:
        raise InvalidArgumentError(f"coefficient dimension must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if ensemble == "rademacher":
        alpha = rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0
    else:
        alpha = rng.standard_normal(n)
    alpha.setflags(write=False)
    return MeasurementCoeffs(alpha=alpha, ensemble=ensemble, seed=int(seed))


def user_coeffs(alpha: np.ndarray) -> MeasurementCoeffs:
    """Wrap an explicit coefficient vector."""
    alpha = np.ascontiguousarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1:
        raise InvalidArgumentError("coefficients must be a non-empty 1-D vector")
    alpha.setflags(write=False)
    return MeasurementCoeffs(alpha=alpha, ensemble="user", seed=None)


def _check_coeffs(flow: FlowSpec, alpha: MeasurementCoeffs) -> np.ndarray:
    if alpha.alpha.shape != (flow.ambient_dim,):
        raise DimensionMismatchError(
            f"coefficient vector has length {alpha.alpha.shape[0]}, "
            f"flow ambient dimension is {flow.ambient_dim}"
        )
    return alpha.alpha


def time_series(orbit: Orbit, alpha: MeasurementCoeffs) -> np.ndarray:
    """Scalar observations s_n = <alpha, x_n> along an orbit."""
    if orbit.states.shape[1] != alpha.alpha.shape[0]:
        raise DimensionMismatchError(
            f"coefficient vector has length {alpha.alpha.shape[0]}, "
            f"orbit states have dimension {orbit.states.shape[1]}"
        )
    return orbit.states @ alpha.alpha


def _warn_excess_delays(flow: FlowSpec, params: DelayParams) -> None:
    if params.num_delays > flow.ambient_dim:
        warnings.warn(
            f"num_delays={params.num_delays} exceeds the ambient dimension "
            f"{flow.ambient_dim}; the soft rank plateaus at the ambient dimension",
            RuntimeWarning,
            stacklevel=3,
        )


def _backward_rows(flow: FlowSpec, x: np.ndarray, m: int) -> np.ndarray:
    """Rows x, Phi^{-1}(x), ..., Phi^{-m+1}(x) as an (m, N) array."""
    rows = np.empty((m, flow.ambient_dim))
    cur = x
    for k in range(m):
        rows[k] = cur
        if k + 1 < m:
            cur = flow.inverse @ cur
    return rows


def trajectory_matrix(flow: FlowSpec, x: np.ndarray, params: DelayParams) -> TrajectoryMatrix:
    """M x N matrix of backward iterates; row 0 is x itself."""
    x = _check_state(flow, x)
    _warn_excess_delays(flow, params)
    g = _backward_rows(flow, x, params.num_delays)
    g.setflags(write=False)
    return TrajectoryMatrix(g=g, base_point=x)


def trajectory_matrices(
    flow: FlowSpec, samples: np.ndarray, params: DelayParams
) -> np.ndarray:
    """Stack of trajectory matrices, shape (len(samples), M, N).

    Each sample is iterated independently, so entry i equals
    ``trajectory_matrix(flow, samples[i], params).g`` bit for bit regardless
    of which other samples are in the stack.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != flow.ambient_dim:
        raise DimensionMismatchError(
            f"samples have dimension {samples.shape[1]}, "
            f"flow ambient dimension is {flow.ambient_dim}"
        )
    _warn_excess_delays(flow, params)
    stack = np.empty((samples.shape[0], params.num_delays, flow.ambient_dim))
    for i in range(samples.shape[0]):
        stack[i] = _backward_rows(flow, samples[i], params.num_delays)
    return stack


def trajectory_vector(flow: FlowSpec, x: np.ndarray, params: DelayParams) -> TrajectoryVector:
    """Concatenation [x, Phi^{-1}(x), ..., Phi^{-M+1}(x)] in R^{MN}.

    Built as the row-wise flattening of the trajectory matrix, so reshaping
    back to (M, N) reproduces the matrix exactly.
    """
    tm = trajectory_matrix(flow, x, params)
    entries = tm.g.reshape(-1)
    return TrajectoryVector(entries=entries, base_point=tm.base_point)


def delay_vector(
    flow: FlowSpec, x: np.ndarray, alpha: MeasurementCoeffs, params: DelayParams
) -> np.ndarray:
    """Length-M vector of past measurements: entry m is <alpha, Phi^{-m}(x)>.

    Computed by iterating the inverse flow directly; agrees with
    ``trajectory_matrix(flow, x, params).g @ alpha`` to floating-point
    reassociation (1e-12 relative).
    """
    x = _check_state(flow, x)
    a = _check_coeffs(flow, alpha)
    _warn_excess_delays(flow, params)
    out = np.empty(params.num_delays)
    cur = x
    for m in range(params.num_delays):
        out[m] = np.dot(a, cur)
        if m + 1 < params.num_delays:
            cur = flow.inverse @ cur
    return out


def basis_delay_vector(
    flow: FlowSpec, x: np.ndarray, p: int, params: DelayParams
) -> np.ndarray:
    """Delay vector of the p-th canonical coordinate functional (0-based).

    Equals column p of the trajectory matrix: entry m is coordinate p of
    Phi^{-m}(x).
    """
    x = _check_state(flow, x)
    if not 0 <= p < flow.ambient_dim:
        raise InvalidArgumentError(
            f"basis index p={p} out of range [0, {flow.ambient_dim})"
        )
    _warn_excess_delays(flow, params)
    out = np.empty(params.num_delays)
    cur = x
    for m in range(params.num_delays):
        out[m] = cur[p]
        if m + 1 < params.num_delays:
            cur = flow.inverse @ cur
    return out


def row_squared_norms(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-row squared norms and their sum.

    This is the canonical squared Frobenius norm used for pair denominators:
    summing per-row dot products keeps the trajectory-vector norm and the
    matrix Frobenius norm bitwise identical (the vector is the row-wise
    flattening of the matrix).
    """
    row_sqs = np.einsum("mn,mn->m", mat, mat)
    return row_sqs, float(np.sum(row_sqs))
