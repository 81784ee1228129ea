"""Computable tracking-error bounds for constant-gain stochastic approximation.

Three families of bounds on the distance between the iterate and a drifting
minimizer, all evaluable from observable quantities:

* propagated bounds: one-step recursions on the mean absolute deviation and
  the root-mean-square error, driven by the per-step coefficients (u, v) of
  the gain design plus the noise level M and drift level B, together with
  their common fixed point (M*sqrt(v) + B) / (1 - sqrt(u));
* conditional bounds: interval estimates of the current distance, of the
  drift of the minimizer between consecutive steps (from gradient estimates
  taken at the same point), and of the instantaneous loss gap;
* deviation tails: an exponential bound on the probability that the running
  maximum error over a finite horizon ever exceeds a threshold.

Tail probabilities are kept in log form: the bounds of interest routinely
live at magnitudes like exp(-1200) where a direct float evaluation underflows
to zero, and they can also exceed one (vacuous regime), so the raw value is
preserved and clipping happens only when a probability is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseDriftParams",
    "DeviationBoundParams",
    "TailBound",
    "BoundTrace",
    "mad_bound_step",
    "rms_bound_step",
    "asymptotic_bound",
    "propagate_bounds",
    "conditional_mad_bounds",
    "drift_bound_two_meas",
    "cond_loss_gap_bounds",
    "noise_sum_tail",
    "deviation_probability",
    "loose_per_path_bound",
]


@dataclass(frozen=True)
class NoiseDriftParams:
    """Noise and drift levels entering the propagated bounds.

    noise_rms bounds the root-mean-square of the gradient-estimate error,
    drift_rms the root-mean-square of the minimizer's per-step displacement.
    """

    noise_rms: float
    drift_rms: float

    def __post_init__(self) -> None:
        for name in ("noise_rms", "drift_rms"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class DeviationBoundParams:
    """Inputs of the finite-horizon deviation probability.

    p is the dimension, M an almost-sure bound on the noise magnitude, C the
    strong-convexity modulus, a the constant gain, T the horizon in time
    units, and epsilon the deviation threshold. All must be positive.
    """

    p: int
    M: float
    C: float
    a: float
    T: float
    epsilon: float

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError(f"dimension p must be a positive integer, got {self.p}")
        for name in ("M", "C", "a", "T", "epsilon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value}")


@dataclass(frozen=True)
class TailBound:
    """Probability bound kept in log form to survive extreme magnitudes.

    ``raw`` may underflow to 0.0 or exceed 1.0 (the bound is then vacuous);
    ``clipped`` is the reportable probability min(raw, 1).
    """

    log_raw: float

    @property
    def raw(self) -> float:
        return math.exp(self.log_raw)

    @property
    def clipped(self) -> float:
        return min(self.raw, 1.0)

    @property
    def vacuous(self) -> bool:
        return self.log_raw >= 0.0


def _check_step_coeffs(u: float, v: float) -> None:
    if not (0.0 <= u < 1.0):
        raise ValueError(f"contraction coefficient u must lie in [0, 1), got {u}")
    if not v >= 0.0:
        raise ValueError(f"noise coefficient v must be >= 0, got {v}")


def _check_levels(m: float, b: float) -> None:
    if not m >= 0.0:
        raise ValueError(f"noise level must be >= 0, got {m}")
    if not b >= 0.0:
        raise ValueError(f"drift level must be >= 0, got {b}")


def mad_bound_step(prev: float, u: float, v: float, m: float, b: float) -> float:
    """Advance the mean-absolute-deviation bound by one iteration.

    Returns sqrt(u)*prev + m*sqrt(v) + b, the recursion satisfied by the
    expected tracking error under contraction coefficient u in [0, 1), noise
    coefficient v >= 0, noise level m, and per-step drift level b.
    """
    _check_step_coeffs(u, v)
    _check_levels(m, b)
    if not prev >= 0.0:
        raise ValueError(f"previous bound must be >= 0, got {prev}")
    return math.sqrt(u) * prev + m * math.sqrt(v) + b


def rms_bound_step(prev: float, u: float, v: float, m: float, b: float) -> float:
    """Advance the root-mean-square error bound by one iteration.

    Returns sqrt(u*prev**2) + m*sqrt(v) + b. The contraction enters under the
    square root of the second moment, so for nonnegative bounds the arithmetic
    coincides with the mean-absolute-deviation recursion.
    """
    _check_step_coeffs(u, v)
    _check_levels(m, b)
    if not prev >= 0.0:
        raise ValueError(f"previous bound must be >= 0, got {prev}")
    return math.sqrt(u * prev * prev) + m * math.sqrt(v) + b


def asymptotic_bound(u: float, v: float, m: float, b: float) -> float:
    """Fixed point (m*sqrt(v) + b) / (1 - sqrt(u)) of both bound recursions."""
    _check_step_coeffs(u, v)
    _check_levels(m, b)
    return (m * math.sqrt(v) + b) / (1.0 - math.sqrt(u))


def loose_per_path_bound(prev_err: float, u: float, v: float, m: float, b: float) -> float:
    """Single-run proxy bound: the mean-deviation kernel applied pathwise.

    The averaged recursion says nothing about one realization, but applying
    the same arithmetic to the realized error with online estimates of the
    noise level (filter covariance trace) and drift level gives a useful
    real-time proxy. Shares the kernel of :func:`mad_bound_step`.
    """
    return mad_bound_step(prev_err, u, v, m, b)


@dataclass(frozen=True)
class BoundTrace:
    """Iteration-indexed record of propagated bounds along one horizon.

    Entry k of ``mad_bound`` / ``rms_bound`` is the bound after k steps, so
    entry 0 is the initial error. ``u[k]`` and ``v[k]`` are the coefficients
    consumed by the step from iterate k to k+1; no step leaves the final
    iterate, so the last entry of each is NaN padding. ``realized_error``,
    when present, is aligned with the bound arrays.
    """

    mad_bound: np.ndarray
    rms_bound: np.ndarray
    u: np.ndarray
    v: np.ndarray
    realized_error: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = self.mad_bound.shape[0]
        arrays = [self.mad_bound, self.rms_bound, self.u, self.v]
        if self.realized_error is not None:
            arrays.append(self.realized_error)
        if any(arr.ndim != 1 or arr.shape[0] != n for arr in arrays):
            raise ValueError("all trace arrays must be one-dimensional and equal length")
        if np.any(self.mad_bound < 0) or np.any(self.rms_bound < 0):
            raise ValueError("bound arrays must be nonnegative")

    def __len__(self) -> int:
        return self.mad_bound.shape[0]


def _per_step(name: str, value, steps: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(steps, float(arr))
    if arr.shape != (steps,):
        raise ValueError(f"{name} must be scalar or length {steps}, got shape {arr.shape}")
    return arr


def propagate_bounds(
    initial_error: float,
    u,
    v,
    noise_rms=0.0,
    drift_rms=0.0,
    *,
    steps: int | None = None,
    realized_error=None,
) -> BoundTrace:
    """Run both bound recursions from a known initial error.

    ``u``, ``v``, ``noise_rms``, and ``drift_rms`` may each be a scalar
    (constant-parameter convenience) or a length-``steps`` array for
    time-varying curvature or noise. ``steps`` is required only when every
    coefficient is scalar; otherwise it is inferred and cross-checked.
    The initial error is ``norm(theta_hat_0 - theta_star_0)`` when the
    starting minimizer is known, else any prior bound.
    """
    if not (math.isfinite(initial_error) and initial_error >= 0):
        raise ValueError(f"initial_error must be finite and >= 0, got {initial_error}")
    inferred = {
        np.asarray(value).shape[0]
        for value in (u, v, noise_rms, drift_rms)
        if np.asarray(value).ndim == 1
    }
    if len(inferred) > 1:
        raise ValueError(f"coefficient arrays disagree on length: {sorted(inferred)}")
    if steps is None:
        if not inferred:
            raise ValueError("steps is required when all coefficients are scalar")
        steps = inferred.pop()
    elif inferred and inferred.pop() != steps:
        raise ValueError("coefficient array length does not match steps")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")

    u_arr = _per_step("u", u, steps)
    v_arr = _per_step("v", v, steps)
    m_arr = _per_step("noise_rms", noise_rms, steps)
    b_arr = _per_step("drift_rms", drift_rms, steps)

    mad = np.empty(steps + 1)
    rms = np.empty(steps + 1)
    mad[0] = rms[0] = initial_error
    for k in range(steps):
        mad[k + 1] = mad_bound_step(mad[k], u_arr[k], v_arr[k], m_arr[k], b_arr[k])
        rms[k + 1] = rms_bound_step(rms[k], u_arr[k], v_arr[k], m_arr[k], b_arr[k])

    realized = None
    if realized_error is not None:
        realized = np.asarray(realized_error, dtype=float)
        if realized.shape != (steps + 1,):
            raise ValueError(
                f"realized_error must have length steps+1 = {steps + 1}, got shape {realized.shape}"
            )
    pad = np.full(1, np.nan)
    return BoundTrace(
        mad_bound=mad,
        rms_bound=rms,
        u=np.concatenate([u_arr, pad]),
        v=np.concatenate([v_arr, pad]),
        realized_error=realized,
    )


def conditional_mad_bounds(grad_norm: float, C: float, L: float, m: float) -> tuple[float, float]:
    """Two-sided bound on the current distance to the minimizer.

    From one gradient-estimate magnitude ``grad_norm`` at the current iterate,
    strong convexity pins the distance below (grad_norm + m)/C and smoothness
    pins it above |grad_norm - m|/L, where m bounds the estimate's error.
    """
    if not (C > 0 and L >= C):
        raise ValueError(f"need 0 < C <= L, got C={C}, L={L}")
    if not grad_norm >= 0:
        raise ValueError(f"gradient norm must be >= 0, got {grad_norm}")
    if not m >= 0:
        raise ValueError(f"noise level must be >= 0, got {m}")
    return abs(grad_norm - m) / L, (grad_norm + m) / C


def drift_bound_two_meas(
    grad_next_norm: float,
    grad_curr_norm: float,
    C_curr: float,
    C_next: float,
    L_curr: float,
    L_next: float,
    m_curr: float,
    m_next: float,
) -> tuple[float, float]:
    """Two-sided bound on the minimizer's displacement across one step.

    Uses the magnitudes of two gradient estimates taken at the same iterate
    under the old and new objectives. The upper bound adds the two one-point
    distance bounds through the triangle inequality; the lower bound is the
    larger of the two reverse-triangle differences, floored at zero since a
    displacement norm is nonnegative.
    """
    for name, value in (("C_curr", C_curr), ("C_next", C_next)):
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value}")
    for name, value in (
        ("grad_next_norm", grad_next_norm),
        ("grad_curr_norm", grad_curr_norm),
        ("m_curr", m_curr),
        ("m_next", m_next),
    ):
        if not value >= 0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    if not (L_curr >= C_curr and L_next >= C_next):
        raise ValueError("smoothness moduli must dominate convexity moduli")

    upper = (grad_next_norm + m_next) / C_next + (grad_curr_norm + m_curr) / C_curr
    lower = max(
        abs(grad_next_norm - m_next) / L_next - (grad_curr_norm + m_curr) / C_curr,
        abs(grad_curr_norm - m_curr) / L_curr - (grad_next_norm + m_next) / C_next,
        0.0,
    )
    return lower, upper


def cond_loss_gap_bounds(
    grad_next,
    grad_curr,
    a: float,
    C_next: float,
    L_next: float,
    m_next: float,
) -> tuple[float, float]:
    """Two-sided bound on the expected loss gap at the pre-step iterate.

    ``grad_next`` and ``grad_curr`` are gradient-estimate vectors at the same
    iterate under the new and old objectives; ``a`` is the gain about to be
    applied. Bounds the conditional mean of the new loss at the current
    iterate minus its minimum:

        lower = |g+|^2/(2L) + a^2*C/2*|g|^2 - a*(g+.g)
        upper = (|g+|^2 + m^2)/(2C) + a^2*L/2*|g|^2 - a*(g+.g)

    with g+ = grad_next, g = grad_curr, and m bounding the noise in g+.
    """
    if not (C_next > 0 and L_next >= C_next):
        raise ValueError(f"need 0 < C <= L, got C={C_next}, L={L_next}")
    if not m_next >= 0:
        raise ValueError(f"noise level must be >= 0, got {m_next}")
    g_next = np.asarray(grad_next, dtype=float)
    g_curr = np.asarray(grad_curr, dtype=float)
    if g_next.shape != g_curr.shape:
        raise ValueError("gradient vectors must have matching shape")
    next_sq = float(g_next @ g_next)
    curr_sq = float(g_curr @ g_curr)
    cross = float(g_next @ g_curr)
    lower = next_sq / (2.0 * L_next) + 0.5 * a * a * C_next * curr_sq - a * cross
    upper = (next_sq + m_next * m_next) / (2.0 * C_next) + 0.5 * a * a * L_next * curr_sq - a * cross
    return lower, upper


def noise_sum_tail(p: int, M: float, a: float, T: float, delta: float) -> TailBound:
    """Bernstein-type tail for the running maximum of the weighted noise sum.

    Bounds the probability that the maximal accumulated noise over a horizon
    of T time units (constant gain a, dimension p, almost-sure noise magnitude
    at most M) exceeds delta:

        (p + 1) * exp(-delta^2 / (a*M*(T*M/2 + delta/3)))
    """
    if p < 1:
        raise ValueError(f"dimension p must be a positive integer, got {p}")
    for name, value in (("M", M), ("a", a), ("T", T), ("delta", delta)):
        if not value > 0:
            raise ValueError(f"{name} must be > 0, got {value}")
    exponent = -(delta * delta) / (a * M * (T * M / 2.0 + delta / 3.0))
    return TailBound(log_raw=math.log(p + 1.0) + exponent)


def deviation_probability(params: DeviationBoundParams) -> TailBound:
    """Tail bound on the maximal tracking deviation over a finite horizon.

    The comparison argument converts a deviation of size epsilon into a noise
    accumulation of size epsilon*exp(C)/2, so this is :func:`noise_sum_tail`
    at that threshold. The result can exceed one for permissive thresholds:
    the bound is not uniformly tight in epsilon, and the vacuous regime is
    reported as-is.
    """
    threshold = params.epsilon * math.exp(params.C) / 2.0
    return noise_sum_tail(params.p, params.M, params.a, params.T, threshold)
