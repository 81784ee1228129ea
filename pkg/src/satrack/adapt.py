"""Transient/steady-state phase detection and data-driven gain adaptation.

During the transient phase successive gradient estimates point in roughly the
same direction, while in steady state they tend to oppose each other. The
running mean of inner products of successive gradient estimates is therefore
a phase statistic: under a quadratic model with curvature H and noise
covariance V it concentrates near -a*tr(H V) in steady state, and stays at or
above x'H^2 x - a*(x'H^3 x + tr(H V)) during the transient (x the offset from
the optimum). Crossing the lower threshold triggers a gain decrease by
eta_minus, crossing the upper one a gain increase by eta_plus; every change
anchors a fresh running mean.

H and V are unknown, so both are estimated on the fly from the same pair of
gradient observations at theta +- c*Delta that drives the averaged-gradient
update: a simultaneous-perturbation difference quotient for H (symmetrized,
so the estimate stays exactly symmetric) and a running outer-product average
for V. The optimum is also unknown; the offset x is approximated by
re-centering the iterate on its running post-anchor mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "HessianEstimate",
    "NoiseCovEstimate",
    "PhaseStats",
    "AdaptConfig",
    "AdaptState",
    "GainChangeEvent",
    "hessian_update",
    "noisecov_update",
    "phase_thresholds",
    "probe_points",
    "adapt_step",
    "initial_adapt_state",
]


@dataclass(frozen=True)
class HessianEstimate:
    """Running curvature estimate; exactly symmetric by construction."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("curvature estimate must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("curvature estimate must be exactly symmetric")


@dataclass(frozen=True)
class NoiseCovEstimate:
    """Running noise-covariance estimate; PSD by construction."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("noise covariance estimate must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("noise covariance estimate must be exactly symmetric")


def _as_matrix(value) -> np.ndarray:
    if isinstance(value, (HessianEstimate, NoiseCovEstimate)):
        return value.matrix
    return np.asarray(value, dtype=float)


def hessian_update(prev, k: int, c: float, delta, g_plus, g_minus) -> HessianEstimate:
    """Fold one simultaneous-perturbation curvature observation into the average.

    The difference of the two gradient observations at theta +- c*delta,
    scaled by the reciprocal perturbation, is a rank-two curvature probe with
    expectation H; the update keeps the running average

        H_k = k/(k+1) * H_{k-1} + [dG (1/delta)' + (1/delta) dG'] / (4 c (k+1))

    symmetrizing so the output is symmetric to the last bit.
    """
    if k < 1:
        raise ValueError(f"update index must be >= 1, got {k}")
    if c == 0.0:
        raise ValueError("perturbation half-width c must be nonzero")
    prev_m = _as_matrix(prev)
    d_g = np.asarray(g_plus, dtype=float) - np.asarray(g_minus, dtype=float)
    inv_delta = 1.0 / np.asarray(delta, dtype=float)
    probe = np.outer(d_g, inv_delta)
    scale = 1.0 / (4.0 * c * (k + 1.0))
    updated = (k / (k + 1.0)) * prev_m + scale * (probe + probe.T)
    return HessianEstimate(matrix=updated)


def noisecov_update(prev, k: int, g_plus, g_minus) -> NoiseCovEstimate:
    """Fold one squared gradient difference into the noise-covariance average.

    V_k = k/(k+1) * V_{k-1} + dG dG' / (k+1). The rank-one term is PSD, so
    the running average stays PSD whenever the initial value is.
    """
    if k < 1:
        raise ValueError(f"update index must be >= 1, got {k}")
    prev_m = _as_matrix(prev)
    d_g = np.asarray(g_plus, dtype=float) - np.asarray(g_minus, dtype=float)
    updated = (k / (k + 1.0)) * prev_m + np.outer(d_g, d_g) / (k + 1.0)
    return NoiseCovEstimate(matrix=updated)


def phase_thresholds(a: float, hessian, noise_cov, theta) -> tuple[float, float]:
    """Steady-state and transient critical values for the inner-product mean.

    ``theta`` is the iterate relative to the current regime's optimum (or its
    best available proxy). Returns (-a*tr(H V), x'H^2 x - a*(x'H^3 x +
    tr(H V))); the two coincide at the optimum and the transient value
    dominates whenever a is below the reciprocal of the largest curvature.
    """
    if a <= 0:
        raise ValueError(f"gain must be > 0, got {a}")
    h = _as_matrix(hessian)
    v = _as_matrix(noise_cov)
    x = np.asarray(theta, dtype=float)
    # tr(H V) as an entrywise sum, no product matrix formed
    trace_hv = float(np.sum(h * v.T))
    steady = -a * trace_hv
    hx = h @ x
    transient = float(hx @ hx) - a * (float(hx @ h @ hx) + trace_hv)
    return steady, transient


@dataclass(frozen=True)
class PhaseStats:
    """Running post-anchor accumulators for the phase statistic.

    Tracks the mean of inner products of successive gradient estimates and
    the mean iterate since the anchor; both reset on every gain change.
    """

    anchor: int
    product_sum: float
    product_count: int
    theta_sum: np.ndarray
    theta_count: int

    @property
    def product_mean(self) -> float:
        if self.product_count == 0:
            raise ValueError("no inner products accumulated since the anchor")
        return self.product_sum / self.product_count

    @property
    def theta_mean(self) -> np.ndarray:
        if self.theta_count == 0:
            raise ValueError("no iterates accumulated since the anchor")
        return self.theta_sum / self.theta_count

    def accumulate(self, product: float | None, theta: np.ndarray) -> "PhaseStats":
        return PhaseStats(
            anchor=self.anchor,
            product_sum=self.product_sum + (product if product is not None else 0.0),
            product_count=self.product_count + (product is not None),
            theta_sum=self.theta_sum + theta,
            theta_count=self.theta_count + 1,
        )

    @staticmethod
    def fresh(anchor: int, dim: int) -> "PhaseStats":
        return PhaseStats(
            anchor=anchor,
            product_sum=0.0,
            product_count=0,
            theta_sum=np.zeros(dim),
            theta_count=0,
        )


@dataclass(frozen=True)
class AdaptConfig:
    """Adaptation hyperparameters.

    eta_plus > 1 multiplies the gain on a transient verdict, eta_minus in
    (0, 1) on a steady-state verdict. ``perturb_size`` is the measurement
    half-width c_k, either a constant or a callable of the step index.
    ``min_samples`` inner products must accumulate after an anchor before the
    next verdict, so a single noisy product cannot flip the gain.
    """

    eta_plus: float
    eta_minus: float
    initial_gain: float
    perturb_size: float | Callable[[int], float]
    hessian_scale: float = 1.0
    min_samples: int = 3

    def __post_init__(self) -> None:
        if not self.eta_plus >= 1.0:
            raise ValueError(f"eta_plus must be >= 1, got {self.eta_plus}")
        if not 0.0 < self.eta_minus <= 1.0:
            raise ValueError(f"eta_minus must lie in (0, 1], got {self.eta_minus}")
        if not self.initial_gain > 0:
            raise ValueError(f"initial gain must be > 0, got {self.initial_gain}")
        if not callable(self.perturb_size) and not self.perturb_size > 0:
            raise ValueError(f"perturbation size must be > 0, got {self.perturb_size}")
        if self.hessian_scale <= 0:
            raise ValueError(f"hessian scale must be > 0, got {self.hessian_scale}")
        if self.min_samples < 1:
            raise ValueError(f"min_samples must be >= 1, got {self.min_samples}")

    def perturb(self, k: int) -> float:
        if callable(self.perturb_size):
            value = float(self.perturb_size(k))
            if not value > 0:
                raise ValueError(f"perturbation schedule returned {value} at k={k}")
            return value
        return float(self.perturb_size)


@dataclass(frozen=True)
class AdaptState:
    """Full adaptation state before consuming step k's two measurements."""

    k: int
    theta: np.ndarray
    gain: float
    hessian: HessianEstimate
    noise_cov: NoiseCovEstimate
    phase: PhaseStats
    prev_grad: np.ndarray | None
    changes: int


@dataclass(frozen=True)
class GainChangeEvent:
    """One gain adjustment: when, from what to what, and the triggering mean."""

    step: int
    old_gain: float
    new_gain: float
    direction: str
    mean: float


def initial_adapt_state(theta0, config: AdaptConfig) -> AdaptState:
    theta = np.asarray(theta0, dtype=float)
    dim = theta.shape[0]
    return AdaptState(
        k=1,
        theta=theta,
        gain=config.initial_gain,
        hessian=HessianEstimate(matrix=config.hessian_scale * np.eye(dim)),
        noise_cov=NoiseCovEstimate(matrix=np.zeros((dim, dim))),
        phase=PhaseStats.fresh(anchor=0, dim=dim),
        prev_grad=None,
        changes=0,
    )


def probe_points(state: AdaptState, config: AdaptConfig, delta) -> tuple[np.ndarray, np.ndarray]:
    """Measurement points theta +- c_k * delta for the current step."""
    c = config.perturb(state.k)
    offset = c * np.asarray(delta, dtype=float)
    return state.theta + offset, state.theta - offset


def adapt_step(
    state: AdaptState,
    config: AdaptConfig,
    delta,
    g_plus,
    g_minus,
) -> tuple[AdaptState, GainChangeEvent | None]:
    """Consume the two gradient observations of step k.

    Updates the curvature and noise-covariance estimates, accumulates the
    phase statistic, adjusts the gain when the running mean crosses a
    critical value (re-anchoring the statistic), and finally moves the
    iterate with the averaged gradient under the possibly-updated gain.
    """
    g_p = np.asarray(g_plus, dtype=float)
    g_m = np.asarray(g_minus, dtype=float)
    c = config.perturb(state.k)
    hessian = hessian_update(state.hessian, state.k, c, delta, g_p, g_m)
    noise_cov = noisecov_update(state.noise_cov, state.k, g_p, g_m)
    g_avg = 0.5 * (g_p + g_m)

    product = float(g_avg @ state.prev_grad) if state.prev_grad is not None else None
    phase = state.phase.accumulate(product, state.theta)

    gain = state.gain
    changes = state.changes
    event = None
    if phase.product_count >= config.min_samples:
        centered = state.theta - phase.theta_mean
        steady, transient = phase_thresholds(gain, hessian, noise_cov, centered)
        mean = phase.product_mean
        if mean < steady:
            gain = config.eta_minus * state.gain
            event = GainChangeEvent(state.k, state.gain, gain, "decrease", mean)
        elif mean >= transient:
            gain = config.eta_plus * state.gain
            event = GainChangeEvent(state.k, state.gain, gain, "increase", mean)
        if event is not None:
            changes += 1
            phase = PhaseStats.fresh(anchor=state.k, dim=state.theta.shape[0])

    new_state = AdaptState(
        k=state.k + 1,
        theta=state.theta - gain * g_avg,
        gain=gain,
        hessian=hessian,
        noise_cov=noise_cov,
        phase=phase,
        prev_grad=g_avg,
        changes=changes,
    )
    return new_state, event
