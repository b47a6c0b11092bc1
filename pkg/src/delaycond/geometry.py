"""Geometric estimators: attractor sampling, curve volume, reach, delay baselines.

Estimator bias directions, reported alongside every value:

* Chordal curve volume underestimates the true arc length (chords are
  shorter than arcs) and converges from below under refinement.
* The point-cloud reach quotient converges to the true reach from above as
  sampling densifies; on a finite sample it can sit on either side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delay_map import DelayParams, TrajectoryVector, trajectory_vector
from .dynamics import FlowSpec, generate_orbit
from .errors import (
    InvalidArgumentError,
    NoEstimateError,
    ZeroVarianceError,
)

VOLUME_BIAS_NOTE = "chordal sum; underestimates arc length, converges from below"
REACH_BIAS_NOTE = (
    "point-cloud quotient; converges to the reach from above in the dense limit"
)

# Relative tolerance for recognizing a return to the orbit's starting state.
_PERIOD_TOLERANCE = 1e-9

# Normal components below this fraction of the chord length count as zero.
_NORMAL_EXCLUSION = 1e-12


@dataclass(frozen=True)
class AttractorSample:
    """Orbit states with periodic wrap removed.

    ``period`` is the detected orbit period when the orbit returned to its
    starting state within the requested length, else None.
    """

    states: np.ndarray  # (num_unique, N), orbit order
    period: int | None
    requested: int


@dataclass(frozen=True)
class ManifoldGeometry:
    """Volume and reach of a manifold sampled as a point cloud."""

    volume: float
    reach: float
    dim: float  # user-declared manifold dimension
    num_points: int
    volume_bias: str = VOLUME_BIAS_NOTE
    reach_bias: str = REACH_BIAS_NOTE


@dataclass(frozen=True)
class ReachEstimate:
    """Minimum of the pairwise reach quotient, with exclusion bookkeeping."""

    value: float
    num_excluded: int
    num_pairs: int


@dataclass(frozen=True)
class DelaySelection:
    """Classical delay-selection baselines for a scalar series."""

    autocorr_first_zero: int | None
    mi_first_min: int | None
    num_bins: int


def sample_attractor(flow: FlowSpec, x0: np.ndarray, n: int) -> AttractorSample:
    """First n orbit states with the periodic wrap deduplicated.

    The period is detected as the first return to x0 within relative
    tolerance 1e-9; only the first full period of states is kept. Fewer
    than 2 unique states (a fixed point) is an error since no pair scan can
    be formed.
    """
    if n < 2:
        raise InvalidArgumentError(f"need at least 2 samples, got n={n}")
    # one lookahead state so a period of exactly n is still detected
    states = generate_orbit(flow, x0, n + 1).states
    scale = max(float(np.linalg.norm(states[0])), np.finfo(float).tiny)
    period = None
    for k in range(1, n + 1):
        if float(np.linalg.norm(states[k] - states[0])) <= _PERIOD_TOLERANCE * scale:
            period = k
            break
    unique = states[:n] if period is None else states[:period]
    if unique.shape[0] < 2:
        raise InvalidArgumentError(
            "orbit has a single unique state (fixed point); cannot form pairs"
        )
    return AttractorSample(states=unique, period=period, requested=n)


def trajectory_manifold_points(
    flow: FlowSpec, samples: np.ndarray, params: DelayParams
) -> list[TrajectoryVector]:
    """Map each sample to its trajectory vector in R^{MN}."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    return [trajectory_vector(flow, x, params) for x in samples]


def curve_volume(points: np.ndarray, closed: bool = False) -> float:
    """Arc length of an ordered point sequence as the sum of chord lengths."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 2:
        raise InvalidArgumentError(
            f"need at least 2 points for a curve, got {points.shape[0]}"
        )
    chords = np.linalg.norm(np.diff(points, axis=0), axis=1)
    total = float(np.sum(chords))
    if closed:
        total += float(np.linalg.norm(points[-1] - points[0]))
    return total


def reach_estimate(points: np.ndarray, tangents: np.ndarray) -> ReachEstimate:
    """Minimum over ordered pairs of ||b-a||^2 / (2 ||normal part of b-a||).

    The normal part is taken against the 1-D tangent line at a, so this is
    the curve specialization of the pointwise reach quotient. Pairs whose
    normal component vanishes (below 1e-12 of the chord length) are excluded
    and counted; if every pair is excluded the points are collinear with
    their tangents and no finite estimate exists.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tangents = np.atleast_2d(np.asarray(tangents, dtype=float))
    n = points.shape[0]
    if n < 3:
        raise InvalidArgumentError(f"need at least 3 points, got {n}")
    if tangents.shape != points.shape:
        raise InvalidArgumentError(
            f"tangent array shape {tangents.shape} does not match points {points.shape}"
        )
    tangent_norms = np.linalg.norm(tangents, axis=1)
    if not np.allclose(tangent_norms, 1.0, atol=1e-8):
        raise InvalidArgumentError("tangents must be unit vectors")

    best = math.inf
    num_excluded = 0
    for a in range(n):
        diffs = np.delete(points, a, axis=0) - points[a]
        chord_sq = np.einsum("ij,ij->i", diffs, diffs)
        along = diffs @ tangents[a]
        normal = diffs - np.outer(along, tangents[a])
        normal_norm = np.linalg.norm(normal, axis=1)
        keep = normal_norm > _NORMAL_EXCLUSION * np.sqrt(chord_sq)
        num_excluded += int(np.sum(~keep))
        if np.any(keep):
            quotients = chord_sq[keep] / (2.0 * normal_norm[keep])
            best = min(best, float(np.min(quotients)))

    num_pairs = n * (n - 1)
    if not math.isfinite(best):
        raise NoEstimateError(
            "every pair had a vanishing normal component; "
            "the sampled curve is a line (infinite reach)"
        )
    return ReachEstimate(value=best, num_excluded=num_excluded, num_pairs=num_pairs)


def finite_difference_tangents(points: np.ndarray) -> np.ndarray:
    """Unit tangents from central differences; one-sided at the endpoints."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if n < 3:
        raise InvalidArgumentError(f"need at least 3 points, got {n}")
    if np.any(np.all(np.diff(points, axis=0) == 0.0, axis=1)):
        raise InvalidArgumentError("repeated consecutive points have no tangent")
    diffs = np.empty_like(points)
    diffs[0] = points[1] - points[0]
    diffs[1:-1] = (points[2:] - points[:-2]) / 2.0
    diffs[-1] = points[-1] - points[-2]
    norms = np.linalg.norm(diffs, axis=1)
    if np.any(norms == 0.0):
        raise InvalidArgumentError(
            "a central difference vanished (curve folds back on itself)"
        )
    return diffs / norms[:, None]


def _demeaned(series: np.ndarray) -> np.ndarray:
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise InvalidArgumentError(f"expected a 1-D series, got shape {series.shape}")
    centered = series - np.mean(series)
    if not np.any(centered):
        raise ZeroVarianceError("series is constant; lag structure is undefined")
    return centered


def autocorr_first_zero(series: np.ndarray, max_lag: int | None = None) -> int | None:
    """First lag at which the biased autocorrelation crosses zero.

    Scans lags 1 .. max_lag (default: a quarter of the series length) and
    returns the first lag with non-positive autocorrelation, or None.
    """
    centered = _demeaned(series)
    length = centered.size
    if max_lag is None:
        max_lag = length // 4
    if max_lag < 1 or length < 4 * max_lag:
        raise InvalidArgumentError(
            f"series of length {length} supports lags up to {length // 4}, "
            f"requested {max_lag}"
        )
    denom = float(np.dot(centered, centered))
    for lag in range(1, max_lag + 1):
        r = float(np.dot(centered[:-lag], centered[lag:])) / denom
        if r <= 0.0:
            return lag
    return None


def _histogram_mi(x: np.ndarray, y: np.ndarray, num_bins: int) -> float:
    """Mutual information (nats) of an equal-width joint histogram."""
    joint, _, _ = np.histogram2d(x, y, bins=num_bins)
    p = joint / joint.sum()
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / (px @ py)[mask])))


def mutual_information_first_min(
    series: np.ndarray, num_bins: int = 16, max_lag: int | None = None
) -> int | None:
    """First strict local minimum of the lagged mutual information.

    The mutual information I(s_t; s_{t+lag}) is estimated from an
    equal-width histogram with ``num_bins`` bins per axis. Lag 0 (the
    self-information) serves as the left neighbor of lag 1. Returns None
    when no strict local minimum occurs within max_lag (default: a quarter
    of the series length).
    """
    if num_bins < 2:
        raise InvalidArgumentError(f"num_bins must be >= 2, got {num_bins}")
    centered = _demeaned(series)
    length = centered.size
    if max_lag is None:
        max_lag = length // 4
    if max_lag < 1 or length < 4 * max_lag:
        raise InvalidArgumentError(
            f"series of length {length} supports lags up to {length // 4}, "
            f"requested {max_lag}"
        )
    mi = np.empty(max_lag + 1)
    mi[0] = _histogram_mi(centered, centered, num_bins)
    for lag in range(1, max_lag + 1):
        mi[lag] = _histogram_mi(centered[:-lag], centered[lag:], num_bins)
    for lag in range(1, max_lag):
        if mi[lag] < mi[lag - 1] and mi[lag] < mi[lag + 1]:
            return lag
    return None


def delay_selection(series: np.ndarray, num_bins: int = 16) -> DelaySelection:
    """Both classical delay baselines for one series."""
    return DelaySelection(
        autocorr_first_zero=autocorr_first_zero(series),
        mi_first_min=mutual_information_first_min(series, num_bins=num_bins),
        num_bins=num_bins,
    )
