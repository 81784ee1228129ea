"""Windowed two-sample change detection over a stream of SA estimates.

In steady state between regime changes, constant-gain estimates hover around
the current minimizer, approximately normal with an unknown dispersion that
generally differs across regimes. Detecting a change in the minimizer is then
a multivariate Behrens-Fisher problem: test equality of means of two batches
with unequal, unknown covariances.

The test statistic is T^2 = d' W^{-1} d, where d is the difference of the
half-window means and W pools the two scaled scatter matrices. Its null
distribution is approximated by a scaled F with estimated degrees of freedom,
either Yao's data-dependent ratio form or the Krishnamoorthy-Yu form (default
here, nonnegative by construction and the better-calibrated of the two).

The streaming detector slides a window of the last 2w estimates, splits it at
the midpoint, and announces a change at step k-1 when the P-value sequence
dips below the threshold at a strict local minimum: h_{k-1} < min(alpha,
h_{k-2}, h_k). Memory and per-step cost are constant in the stream length.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.stats import f as f_dist

__all__ = [
    "SingularPooledCovariance",
    "DofTooSmall",
    "PooledStats",
    "TestResult",
    "ChangeEvent",
    "WindowBuffer",
    "ChangeDetector",
    "window_size",
    "pooled_stats",
    "t2_statistic",
    "dof_estimate",
    "p_value",
    "single_change_estimate",
]

# A Cholesky pivot below this fraction of the mean diagonal mass marks the
# pooled covariance as numerically singular.
_PIVOT_RTOL = 1e-12


class SingularPooledCovariance(RuntimeError):
    """Pooled covariance is singular; no test decision at this step."""


class DofTooSmall(ValueError):
    """Estimated degrees of freedom too small for the F approximation."""


def window_size(dim: int, jump_rate: float) -> int:
    """Half-window rule of thumb: max(p+1, one tenth of the mean regime length).

    Large enough for the scatter matrices to be invertible (p+1 points per
    half) and small enough that a window rarely straddles two changes.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if not 0.0 < jump_rate < 1.0:
        raise ValueError(f"jump rate must lie in (0, 1), got {jump_rate}")
    return max(dim + 1, math.ceil(1.0 / (10.0 * jump_rate)))


@dataclass(frozen=True)
class PooledStats:
    """Half-window means and scaled scatter matrices with their pooled sum."""

    mean_pre: np.ndarray
    mean_post: np.ndarray
    W_pre: np.ndarray
    W_post: np.ndarray
    W: np.ndarray

    def __post_init__(self) -> None:
        if not np.allclose(self.W, self.W_pre + self.W_post):
            raise ValueError("pooled matrix must equal W_pre + W_post")
        if not np.allclose(self.W, self.W.T):
            raise ValueError("pooled matrix must be symmetric")


@dataclass(frozen=True)
class TestResult:
    """Midpoint-split test outcome: statistic, dof, P-value, split index."""

    t2: float
    nu: float
    p_value: float
    split: int

    def __post_init__(self) -> None:
        if self.t2 < 0 or not 0.0 <= self.p_value <= 1.0 or self.nu <= 0:
            raise ValueError("invalid test result fields")


@dataclass(frozen=True)
class ChangeEvent:
    """Announced change point and the dipping test behind it."""

    step: int
    t2: float
    nu: float
    p_value: float
    split: int


def _chol(W: np.ndarray) -> np.ndarray:
    p = W.shape[0]
    try:
        L = np.linalg.cholesky(W)
    except np.linalg.LinAlgError as exc:
        raise SingularPooledCovariance("pooled covariance is not positive definite") from exc
    floor = _PIVOT_RTOL * float(np.trace(W)) / p
    if float(np.min(np.diagonal(L)) ** 2) < floor:
        raise SingularPooledCovariance("pooled covariance pivot below tolerance")
    return L


def _scaled_scatter(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    centered = samples - mean
    return mean, centered.T @ centered / (n * (n - 1.0))


def pooled_stats(samples_pre, samples_post) -> PooledStats:
    """Means and scaled scatter matrices of the two halves, pooled.

    Each half scales its scatter by 1/(n*(n-1)), so the pool estimates the
    covariance of the difference of the two half means. Raises
    :class:`SingularPooledCovariance` when the pool is not invertible, for
    instance when both halves are constant.
    """
    pre = np.atleast_2d(np.asarray(samples_pre, dtype=float))
    post = np.atleast_2d(np.asarray(samples_post, dtype=float))
    if pre.ndim != 2 or post.ndim != 2 or pre.shape[1] != post.shape[1]:
        raise ValueError("sample halves must be 2-D with matching dimension")
    if pre.shape[0] < 2 or post.shape[0] < 2:
        raise ValueError("each half needs at least 2 samples")
    mean_pre, w_pre = _scaled_scatter(pre)
    mean_post, w_post = _scaled_scatter(post)
    w = w_pre + w_post
    _chol(w)
    return PooledStats(mean_pre=mean_pre, mean_post=mean_post, W_pre=w_pre, W_post=w_post, W=w)


def t2_statistic(stats: PooledStats) -> float:
    """Squared Mahalanobis distance of the mean difference under the pool."""
    d = stats.mean_pre - stats.mean_post
    L = _chol(stats.W)
    return float(d @ cho_solve((L, True), d))


def dof_estimate(stats: PooledStats, n_pre: int, n_post: int, method: str = "kn") -> float:
    """Degrees of freedom for the F approximation of the T^2 statistic.

    ``kn`` (default) uses trace functionals of the two scatter shares and is
    nonnegative by construction; ``yao`` uses squared quadratic-form ratios
    along the mean difference, weighted by the reciprocal half sizes.
    """
    if n_pre < 2 or n_post < 2:
        raise ValueError("each half needs at least 2 samples")
    L = _chol(stats.W)
    if method == "yao":
        d = stats.mean_pre - stats.mean_post
        wi_d = cho_solve((L, True), d)
        denom = float(d @ wi_d)
        if denom <= 0.0:
            raise ValueError("zero mean difference; ratio degrees of freedom undefined")
        r_pre = float(wi_d @ stats.W_pre @ wi_d) / denom
        r_post = float(wi_d @ stats.W_post @ wi_d) / denom
        return 1.0 / (r_pre**2 / n_pre + r_post**2 / n_post)
    if method == "kn":
        x_pre = cho_solve((L, True), stats.W_pre)
        x_post = cho_solve((L, True), stats.W_post)
        share = (float(np.trace(x_pre @ x_pre)) + float(np.trace(x_pre)) ** 2) / (n_pre - 1.0)
        share += (float(np.trace(x_post @ x_post)) + float(np.trace(x_post)) ** 2) / (n_post - 1.0)
        p = stats.W.shape[0]
        return (p + p * p) / share
    raise ValueError(f"unknown dof method {method!r}, expected 'kn' or 'yao'")


def p_value(t2: float, nu: float, p: int) -> float:
    """Survival probability of the scaled-F approximation at the statistic.

    T^2 is referred to nu*p/(nu-p+1) times an F(p, nu-p+1) distribution, so
    the P-value is the F survival function at (nu-p+1)*T^2/(nu*p).
    """
    if t2 < 0:
        raise ValueError(f"statistic must be >= 0, got {t2}")
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    if nu <= p - 1:
        raise DofTooSmall(f"need dof > p - 1 = {p - 1}, got {nu}")
    fstat = (nu - p + 1.0) * t2 / (nu * p)
    return float(f_dist.sf(fstat, p, nu - p + 1.0))


def _split_test(pre: np.ndarray, post: np.ndarray, split: int, method: str) -> TestResult:
    stats = pooled_stats(pre, post)
    t2 = t2_statistic(stats)
    nu = dof_estimate(stats, pre.shape[0], post.shape[0], method=method)
    return TestResult(t2=t2, nu=nu, p_value=p_value(t2, nu, pre.shape[1]), split=split)


class WindowBuffer:
    """Fixed-memory ring of the most recent 2w estimates.

    The half-window must satisfy w >= p+1 so each half can produce an
    invertible scatter matrix; :func:`window_size` adds the regime-length
    consideration when the change rate is known.
    """

    def __init__(self, window: int, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        if window < dim + 1:
            raise ValueError(f"window must be >= dim + 1 = {dim + 1}, got {window}")
        self.window = window
        self.dim = dim
        self._ring: deque[np.ndarray] = deque(maxlen=2 * window)

    def push(self, theta) -> None:
        arr = np.asarray(theta, dtype=float)
        if arr.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {arr.shape}")
        self._ring.append(arr.copy())

    def __len__(self) -> int:
        return len(self._ring)

    @property
    def full(self) -> bool:
        return len(self._ring) == 2 * self.window

    def halves(self) -> tuple[np.ndarray, np.ndarray]:
        """(older half, newer half), each w-by-p; requires a full buffer."""
        if not self.full:
            raise ValueError("buffer not yet full")
        stacked = np.stack(tuple(self._ring))
        return stacked[: self.window], stacked[self.window :]


class ChangeDetector:
    """Streaming midpoint-split detector with the local-minimum dip rule.

    Feed estimates one at a time through :meth:`step`; once three consecutive
    full-window tests are available, step k-1 is announced as a change point
    when its P-value is below alpha and strictly below both neighbors.
    Singular windows yield no decision at that step and are skipped. One
    detector owns one stream; memory and per-step work stay constant.
    """

    def __init__(self, window: int, dim: int, alpha: float = 0.01, method: str = "kn"):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        if method not in ("kn", "yao"):
            raise ValueError(f"unknown dof method {method!r}, expected 'kn' or 'yao'")
        self.alpha = alpha
        self.method = method
        self.buffer = WindowBuffer(window, dim)
        self._k = -1
        # (step, TestResult or None) for the last three full-window steps
        self._recent: deque[tuple[int, TestResult | None]] = deque(maxlen=3)

    @property
    def step_index(self) -> int:
        """Index of the most recently consumed estimate (-1 before any)."""
        return self._k

    def step(self, theta) -> ChangeEvent | None:
        """Consume one estimate; return an announcement or None."""
        self.buffer.push(theta)
        self._k += 1
        if not self.buffer.full:
            return None
        pre, post = self.buffer.halves()
        try:
            result = _split_test(pre, post, self._k - self.buffer.window, self.method)
        except SingularPooledCovariance:
            result = None
        self._recent.append((self._k, result))
        if len(self._recent) < 3:
            return None
        (_, older), (mid_step, mid), (_, newer) = self._recent
        if older is None or mid is None or newer is None:
            return None
        if mid.p_value < min(self.alpha, older.p_value, newer.p_value):
            return ChangeEvent(
                step=mid_step,
                t2=mid.t2,
                nu=mid.nu,
                p_value=mid.p_value,
                split=mid.split,
            )
        return None


def single_change_estimate(samples, method: str = "kn") -> int:
    """Most likely single change point of a fixed batch: the T^2-maximizing split.

    Returns the count of pre-change samples, i.e. the index of the first
    post-change sample, scanning splits with at least two samples on each
    side. Ties break toward the smaller index. Splits with a singular pool
    are skipped; if every split is singular the batch carries no usable
    signal and :class:`SingularPooledCovariance` is raised.
    """
    batch = np.atleast_2d(np.asarray(samples, dtype=float))
    total = batch.shape[0]
    if total < 4:
        raise ValueError(f"need at least 4 samples, got {total}")
    best_split = None
    best_t2 = -math.inf
    for k in range(2, total - 1):
        try:
            t2 = t2_statistic(pooled_stats(batch[:k], batch[k:]))
        except SingularPooledCovariance:
            continue
        if t2 > best_t2:
            best_t2, best_split = t2, k
    if best_split is None:
        raise SingularPooledCovariance("every split has a singular pooled covariance")
    return best_split
