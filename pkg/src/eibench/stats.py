"""Correlation and robust-fit machinery for the invariance/accuracy studies.

Pearson and Spearman coefficients, logit axis scaling, a Huber IRLS line
fit (tuning constant 1.345, MAD residual scale) and percentile bootstrap
confidence bands from case resampling. Randomness flows through numpy's
seedable PCG64 generator with per-resample substreams, so bands are
reproducible across platforms and across thread counts.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateInputError

log = logging.getLogger(__name__)

LOGIT_EPS = 1e-6
HUBER_TUNING = 1.345
HUBER_TOL = 1e-8
HUBER_MAX_ITER = 100


@dataclass
class SampleXY:
    """Paired vectors entering correlation and fits (x invariance, y accuracy)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.float64)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise DegenerateInputError(
                f"x and y must be equal-length vectors, got {self.x.shape} and {self.y.shape}"
            )
        if self.x.size < 3:
            raise DegenerateInputError(f"need at least 3 points, got {self.x.size}")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise DegenerateInputError("NaN or Inf in sample")

    @property
    def n(self):
        return self.x.size


@dataclass
class LinearFit:
    slope: float
    intercept: float
    iterations: int
    converged: bool

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=np.float64)

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass
class BootstrapBand:
    level: float
    resamples: int
    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    seed: int

    def at(self, x):
        """Band endpoints interpolated at x (clamped to the grid ends)."""
        return (
            float(np.interp(x, self.grid, self.lower)),
            float(np.interp(x, self.grid, self.upper)),
        )

    def to_dict(self):
        return {
            "level": self.level,
            "resamples": self.resamples,
            "grid": self.grid.tolist(),
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "seed": self.seed,
        }


@dataclass
class CorrelationStats:
    pearson_r: float
    spearman_rho: float
    n: int

    def to_dict(self):
        return {"pearson_r": self.pearson_r, "spearman_rho": self.spearman_rho, "n": self.n}


def pearson(s: SampleXY) -> float:
    """Product-moment correlation coefficient."""
    dx = s.x - s.x.mean()
    dy = s.y - s.y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise DegenerateInputError("zero variance in x or y")
    return float(dx @ dy) / np.sqrt(sxx * syy)


def average_ranks(values) -> np.ndarray:
    """1-based ranks, ties assigned the average of their positions."""
    values = np.asarray(values)
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    starts = np.cumsum(counts) - counts
    return (starts + (counts + 1) / 2.0)[inverse]


def spearman(s: SampleXY) -> float:
    """Pearson coefficient of the rank vectors."""
    return pearson(SampleXY(average_ranks(s.x), average_ranks(s.y)))


def logit_scale(acc):
    """log(a / (1-a)) with a clamped to [eps, 1-eps]; accepts scalars or arrays."""
    a = np.clip(np.asarray(acc, dtype=np.float64), LOGIT_EPS, 1.0 - LOGIT_EPS)
    out = np.log(a / (1.0 - a))
    return float(out) if np.isscalar(acc) or out.ndim == 0 else out


def inverse_logit(z):
    """Logistic function, the inverse of logit_scale away from the clamp."""
    z = np.asarray(z, dtype=np.float64)
    out = 1.0 / (1.0 + np.exp(-z))
    return float(out) if out.ndim == 0 else out


def huber_fit(s: SampleXY, tuning=HUBER_TUNING, tol=HUBER_TOL,
              max_iter=HUBER_MAX_ITER) -> LinearFit:
    """Huber-loss line fit via iteratively reweighted least squares."""
    if np.ptp(s.x) == 0.0:
        raise DegenerateInputError("x has zero variance, line fit is singular")
    slope, intercept, iterations, converged = _kernels.huber_line_fit(
        s.x, s.y, tuning, tol, max_iter
    )
    if not np.isfinite(slope) or not np.isfinite(intercept):
        raise DegenerateInputError("normal equations became singular")
    return LinearFit(float(slope), float(intercept), int(iterations), bool(converged))


def bootstrap_band(s: SampleXY, resamples=1000, level=0.95, seed=0,
                   grid_size=25, tuning=HUBER_TUNING, retry_cap=100) -> BootstrapBand:
    """Pointwise percentile band of Huber fits over case-resampled data.

    Each resample draw comes from its own substream of (seed, index), so
    the band is deterministic given the seed and independent of any
    execution order. Resamples whose x values collapse to a single point
    are redrawn up to retry_cap times, then skipped and counted.
    """
    if resamples < 100:
        raise ValueError(f"need at least 100 resamples, got {resamples}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if np.ptp(s.x) == 0.0:
        raise DegenerateInputError("x has zero variance, band is undefined")

    n = s.n
    children = np.random.SeedSequence(seed).spawn(resamples)
    idx = np.empty((resamples, n), dtype=np.int64)
    keep = np.ones(resamples, dtype=bool)
    for b in range(resamples):
        rng = np.random.default_rng(children[b])
        draw = rng.integers(0, n, size=n)
        tries = 0
        while np.ptp(s.x[draw]) == 0.0 and tries < retry_cap:
            draw = rng.integers(0, n, size=n)
            tries += 1
        if np.ptp(s.x[draw]) == 0.0:
            keep[b] = False
        idx[b] = draw
    skipped = int((~keep).sum())
    if skipped:
        log.warning("bootstrap_band: skipped %d degenerate resamples", skipped)

    slopes, intercepts = _kernels.bootstrap_lines(
        s.x, s.y, idx[keep], tuning, HUBER_TOL, HUBER_MAX_ITER
    )
    finite = np.isfinite(slopes) & np.isfinite(intercepts)
    slopes, intercepts = slopes[finite], intercepts[finite]
    if slopes.size == 0:
        raise DegenerateInputError("every bootstrap resample was degenerate")

    grid = np.linspace(s.x.min(), s.x.max(), grid_size)
    values = intercepts[:, None] + slopes[:, None] * grid[None, :]
    alpha = (1.0 - level) / 2.0
    lower = np.quantile(values, alpha, axis=0)
    upper = np.quantile(values, 1.0 - alpha, axis=0)
    return BootstrapBand(
        level=level, resamples=resamples, grid=grid, lower=lower, upper=upper, seed=seed
    )


def correlate(s: SampleXY) -> CorrelationStats:
    """Pearson and Spearman coefficients of one sample."""
    return CorrelationStats(pearson_r=pearson(s), spearman_rho=spearman(s), n=s.n)
