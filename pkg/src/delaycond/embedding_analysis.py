"""Empirical stable-embedding conditioning of delay-coordinate maps.

For a coefficient vector alpha, the per-pair isometry ratio is

    ||F_alpha(x) - F_alpha(y)||^2 / ||x~ - y~||^2,

the squared distance of the measured delay vectors over the squared
distance of the trajectory vectors. A perfectly conditioned measurement has
every ratio equal to 1; the achieved conditioning eps is the largest
deviation |ratio - 1| over the scanned pairs, i.e. the tightest band
(1 - eps, 1 + eps) containing all ratios. Monte Carlo over coefficient
draws yields eps distributions, failure-rate curves, and scaling fits
against the number of delays M.

The denominators live in trajectory space. Ratios against state-space
distances ||x - y||^2 are a separate, clearly labeled diagnostic (see the
report writer); they are not the conditioning measured here.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .delay_map import (
    DelayParams,
    MeasurementCoeffs,
    derive_seed,
    draw_coeffs,
    row_squared_norms,
    trajectory_matrices,
    trajectory_matrix,
)
from .dynamics import FlowSpec
from .errors import InvalidArgumentError
from .spectral import (
    PairDiagnostics,
    check_distinct,
    infimum_soft_rank,
    pair_indices,
    soft_rank,
    _check_samples_distinct,
)

QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class ConditioningResult:
    """Tightest eps for one coefficient draw over one sample set.

    ``epsilon`` is max |ratio - 1| over all pairs; ``worst_pair`` attains it
    (lexicographically smallest among ties). ``alpha_seed`` is None for
    user-supplied coefficients.
    """

    epsilon: float
    worst_pair: tuple[int, int]
    alpha_seed: int | None


@dataclass(frozen=True)
class EmbeddingReport:
    """Monte Carlo conditioning summary over coefficient draws."""

    per_draw: list[ConditioningResult]
    num_draws: int
    ensemble: str
    base_seed: int
    quantiles: dict[float, float]
    infimum_soft_rank: float
    params: dict
    ratios: np.ndarray | None = field(default=None, repr=False)  # (draws, pairs)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.per_draw])

    def failure_rate(self, target_eps: float) -> float:
        """Fraction of draws whose achieved eps exceeds the target."""
        return float(np.mean(self.epsilons > target_eps))


@dataclass(frozen=True)
class ScalingRow:
    """One delay count's conditioning summary within a scaling study."""

    num_delays: int
    infimum_soft_rank: float
    eps_median: float
    eps_q05: float
    eps_q95: float
    eps_max: float
    eps_mean: float


@dataclass(frozen=True)
class ScalingStudyResult:
    """Medians per M and the log-log slope of median eps against M."""

    rows: list[ScalingRow]
    slope: float
    slope_stderr: float
    reports: list[EmbeddingReport]


@dataclass(frozen=True)
class TheoremCheck:
    """Evaluation of the sufficient soft-rank condition under a user constant.

    satisfied means: infimum_soft_rank >= c_user * eps^-2 * manifold_dim *
    log(sqrt(infimum_soft_rank) * volume^(1/manifold_dim) / reach) AND
    volume >= c_user * reach^manifold_dim. The constant is never defaulted;
    the check reports whether the condition holds under the caller's
    constant, nothing more. ``degenerate`` flags a log argument <= 1, where
    the condition is vacuous and satisfied is reported as False.
    """

    infimum_soft_rank: float
    epsilon: float
    manifold_dim: float
    volume: float
    reach: float
    c_user: float
    satisfied: bool
    degenerate: bool
    required_soft_rank: float


def isometry_ratio(
    flow: FlowSpec,
    x: np.ndarray,
    y: np.ndarray,
    alpha: MeasurementCoeffs,
    params: DelayParams,
) -> PairDiagnostics:
    """Per-pair diagnostics: ratio ||D alpha||^2 / ||D||_F^2 with D = G_x - G_y.

    The denominator equals the squared trajectory-vector distance
    ||x~ - y~||^2 because the trajectory vector is the row-wise flattening
    of the trajectory matrix; it is accumulated row by row so the two read
    identically.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    check_distinct(x, y)
    diff = trajectory_matrix(flow, x, params).g - trajectory_matrix(flow, y, params).g
    row_sqs, denom = row_squared_norms(diff)
    measured = diff @ alpha.alpha
    numer = float(np.dot(measured, measured))
    return PairDiagnostics(
        pair=(0, 1),
        soft_rank=soft_rank(diff).value,
        chord_norms=np.sqrt(row_sqs),
        ratio=numer / denom,
    )


class _PairScanContext:
    """Trajectory stacks and pair denominators shared across coefficient draws."""

    def __init__(self, flow: FlowSpec, samples: np.ndarray, params: DelayParams):
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        if samples.shape[0] < 2:
            raise InvalidArgumentError(
                f"need at least 2 samples, got {samples.shape[0]}"
            )
        _check_samples_distinct(samples)
        self.samples = samples
        self.params = params
        self.stack = trajectory_matrices(flow, samples, params)
        n = samples.shape[0]
        self.i_idx, self.j_idx = pair_indices(n)
        flat = self.stack.reshape(n, -1)
        self.traj_dist_sq = pdist(flat, "sqeuclidean")
        self.state_dist_sq = pdist(samples, "sqeuclidean")

    def ratios(self, alpha: np.ndarray) -> np.ndarray:
        measured = self.stack @ alpha  # (n, M) delay vectors
        return pdist(measured, "sqeuclidean") / self.traj_dist_sq

    def conditioning(self, coeffs: MeasurementCoeffs) -> ConditioningResult:
        deviations = np.abs(self.ratios(coeffs.alpha) - 1.0)
        k = int(np.argmax(deviations))  # first occurrence = lexicographic pair
        return ConditioningResult(
            epsilon=float(deviations[k]),
            worst_pair=(int(self.i_idx[k]), int(self.j_idx[k])),
            alpha_seed=coeffs.seed,
        )


def conditioning(
    flow: FlowSpec,
    samples: np.ndarray,
    alpha: MeasurementCoeffs,
    params: DelayParams,
) -> ConditioningResult:
    """Tightest eps such that every pair ratio lies in (1 - eps, 1 + eps)."""
    return _PairScanContext(flow, samples, params).conditioning(alpha)


def monte_carlo(
    flow: FlowSpec,
    samples: np.ndarray,
    params: DelayParams,
    ensemble: str,
    num_draws: int,
    base_seed: int,
    threads: int = 1,
    keep_ratios: bool = False,
) -> EmbeddingReport:
    """Conditioning distribution over seeded coefficient draws.

    Draw k uses the child seed derived from (base_seed, k), so every number
    in the report is determined by the configuration alone, regardless of
    how many worker threads evaluate the draws. ``keep_ratios`` retains the
    full (draws, pairs) ratio matrix for per-pair reporting.
    """
    if num_draws < 1:
        raise InvalidArgumentError(f"num_draws must be >= 1, got {num_draws}")
    ctx = _PairScanContext(flow, samples, params)
    scan = infimum_soft_rank(flow, samples, params)
    n_amb = flow.ambient_dim

    per_draw: list[ConditioningResult | None] = [None] * num_draws
    ratio_rows: list[np.ndarray | None] | None = (
        [None] * num_draws if keep_ratios else None
    )

    def run_draw(k: int) -> None:
        try:
            coeffs = draw_coeffs(ensemble, n_amb, derive_seed(base_seed, k))
            if ratio_rows is not None:
                ratio_rows[k] = ctx.ratios(coeffs.alpha)
                deviations = np.abs(ratio_rows[k] - 1.0)
                j = int(np.argmax(deviations))
                per_draw[k] = ConditioningResult(
                    epsilon=float(deviations[j]),
                    worst_pair=(int(ctx.i_idx[j]), int(ctx.j_idx[j])),
                    alpha_seed=coeffs.seed,
                )
            else:
                per_draw[k] = ctx.conditioning(coeffs)
        except Exception as exc:
            raise RuntimeError(f"draw {k} failed: {exc}") from exc

    if threads == 0:
        threads = os.cpu_count() or 1
    if threads > 1 and num_draws > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_draw, range(num_draws)))
    else:
        for k in range(num_draws):
            run_draw(k)

    eps = np.array([r.epsilon for r in per_draw])
    quantiles = {
        q: float(np.quantile(eps, q)) for q in QUANTILE_LEVELS
    }
    return EmbeddingReport(
        per_draw=list(per_draw),
        num_draws=num_draws,
        ensemble=ensemble,
        base_seed=int(base_seed),
        quantiles=quantiles,
        infimum_soft_rank=scan.infimum,
        params={
            "ambient_dim": n_amb,
            "num_delays": params.num_delays,
            "num_samples": int(ctx.samples.shape[0]),
            "sampling_interval": flow.sampling_interval,
        },
        ratios=np.vstack(ratio_rows) if keep_ratios else None,
    )


def scaling_study(
    flow: FlowSpec,
    samples: np.ndarray,
    m_list: list[int],
    ensemble: str,
    num_draws: int,
    base_seed: int,
    threads: int = 1,
) -> ScalingStudyResult:
    """Median-eps-vs-M table with a least-squares log-log slope.

    The same coefficient draws (keyed by base_seed and draw index, which do
    not involve M) are reused across delay counts, pairing the per-M
    comparisons. Median eps, not the max, enters the fit; the max is
    reported per row.
    """
    m_list = list(m_list)
    if len(m_list) < 2:
        raise InvalidArgumentError(
            f"need at least 2 delay counts to fit a slope, got {len(m_list)}"
        )
    if any(m_list[i] >= m_list[i + 1] for i in range(len(m_list) - 1)):
        raise InvalidArgumentError(f"delay counts must be ascending, got {m_list}")

    rows = []
    reports = []
    for m in m_list:
        report = monte_carlo(
            flow, samples, DelayParams(m), ensemble, num_draws, base_seed,
            threads=threads,
        )
        eps = report.epsilons
        rows.append(
            ScalingRow(
                num_delays=m,
                infimum_soft_rank=report.infimum_soft_rank,
                eps_median=report.quantiles[0.5],
                eps_q05=report.quantiles[0.05],
                eps_q95=report.quantiles[0.95],
                eps_max=float(np.max(eps)),
                eps_mean=float(np.mean(eps)),
            )
        )
        reports.append(report)

    log_m = np.log([row.num_delays for row in rows])
    log_eps = np.log([row.eps_median for row in rows])
    design = np.column_stack([log_m, np.ones_like(log_m)])
    coef, _, _, _ = np.linalg.lstsq(design, log_eps, rcond=None)
    slope = float(coef[0])
    dof = len(rows) - 2
    if dof > 0:
        residuals = log_eps - design @ coef
        sigma_sq = float(residuals @ residuals) / dof
        xtx_inv = np.linalg.inv(design.T @ design)
        stderr = math.sqrt(sigma_sq * xtx_inv[0, 0])
    else:
        stderr = math.nan
    return ScalingStudyResult(rows=rows, slope=slope, slope_stderr=stderr, reports=reports)


def theorem_condition_check(
    infimum_soft_rank: float,
    epsilon: float,
    manifold_dim: float,
    volume: float,
    reach: float,
    c_user: float,
) -> TheoremCheck:
    """Evaluate the sufficient condition with an explicitly supplied constant.

    All inputs must be positive; the constant hidden in the asymptotic
    statement is supplied by the caller and never invented here.
    """
    values = {
        "infimum_soft_rank": infimum_soft_rank,
        "epsilon": epsilon,
        "manifold_dim": manifold_dim,
        "volume": volume,
        "reach": reach,
        "c_user": c_user,
    }
    for name, value in values.items():
        if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
            raise InvalidArgumentError(f"{name} must be a positive finite number")

    log_arg = math.sqrt(infimum_soft_rank) * volume ** (1.0 / manifold_dim) / reach
    degenerate = log_arg <= 1.0
    if degenerate:
        required = 0.0
        satisfied = False
    else:
        required = c_user * epsilon**-2 * manifold_dim * math.log(log_arg)
        volume_ok = volume >= c_user * reach**manifold_dim
        satisfied = bool(infimum_soft_rank >= required and volume_ok)
    return TheoremCheck(
        infimum_soft_rank=infimum_soft_rank,
        epsilon=epsilon,
        manifold_dim=manifold_dim,
        volume=volume,
        reach=reach,
        c_user=c_user,
        satisfied=satisfied,
        degenerate=degenerate,
        required_soft_rank=required,
    )
