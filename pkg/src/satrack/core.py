"""Gradient estimators and the basic / projected stochastic-approximation step.

The recursion is root-finding with a possibly time-varying target:

    theta_{k+1} = P( theta_k - a_k * ghat_k(theta_k) )

where ``ghat`` comes from a direct noisy gradient oracle or from one- or
two-measurement simultaneous-perturbation estimates of a loss oracle, and
``P`` projects onto an optional constraint region. Gains here do not decay;
tracking a moving optimum forbids a_k -> 0, so differencing magnitudes are
likewise exposed as user schedules with a constant default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MeasurementFailure",
    "PerturbationSpec",
    "GradientSample",
    "ConstraintRegion",
    "SAState",
    "rademacher_perturbation",
    "spsa2_estimate",
    "spsa1_estimate",
    "sg_estimate",
    "sa_step",
    "projected_sa_step",
]


class MeasurementFailure(RuntimeError):
    """An oracle returned a non-finite value.

    Raised immediately rather than skipping the step: a NaN measurement in
    a tracking experiment is an instrument fault, not a statistical event.
    """


@dataclass(frozen=True)
class PerturbationSpec:
    """Simultaneous-perturbation directions and differencing magnitude.

    Components of the direction vector are symmetric Bernoulli (+/-1): zero
    mean, unit magnitude, finite inverse moments. ``c`` must stay bounded
    away from zero in time-varying problems, hence a constant default.
    """

    p: int
    c: float = 0.1
    distribution: str = "rademacher"

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError(f"dimension must be >= 1, got {self.p}")
        if not self.c > 0:
            raise ValueError(f"differencing magnitude must be > 0, got {self.c}")
        if self.distribution != "rademacher":
            raise ValueError(f"unsupported perturbation distribution {self.distribution!r}")


@dataclass(frozen=True)
class GradientSample:
    """A gradient estimate plus the number of oracle measurements it cost."""

    estimate: np.ndarray
    measurements: int


def _check_finite(value: float | np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(value)):
        raise MeasurementFailure(f"{what} returned a non-finite value: {value!r}")


@dataclass(frozen=True)
class ConstraintRegion:
    """Feasible set for the projected recursion: unbounded, box, or ball."""

    kind: str
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None

    @staticmethod
    def unbounded() -> "ConstraintRegion":
        return ConstraintRegion(kind="unbounded")

    @staticmethod
    def box(lower, upper) -> "ConstraintRegion":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape:
            raise ValueError("box bounds must have matching shapes")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper componentwise")
        return ConstraintRegion(kind="box", lower=lower, upper=upper)

    @staticmethod
    def ball(center, radius: float) -> "ConstraintRegion":
        center = np.asarray(center, dtype=float)
        if not radius > 0:
            raise ValueError(f"ball radius must be > 0, got {radius}")
        return ConstraintRegion(kind="ball", center=center, radius=float(radius))

    def contains(self, x: np.ndarray) -> bool:
        if self.kind == "unbounded":
            return True
        if self.kind == "box":
            return bool(np.all(x >= self.lower) and np.all(x <= self.upper))
        return bool(np.linalg.norm(x - self.center) <= self.radius)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the region."""
        if self.kind == "unbounded":
            return x
        if self.kind == "box":
            return np.clip(x, self.lower, self.upper)
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x
        return self.center + d * (self.radius / r)


@dataclass(frozen=True)
class SAState:
    """Iteration counter, current estimate, and last projection correction."""

    k: int
    theta: np.ndarray
    correction: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.correction is None:
            object.__setattr__(self, "correction", np.zeros_like(self.theta))


def rademacher_perturbation(spec: PerturbationSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw a +/-1 direction vector, one uniform bit per component."""
    bits = rng.integers(0, 2, size=spec.p)
    return 2.0 * bits - 1.0


def spsa2_estimate(loss_oracle, theta: np.ndarray, spec: PerturbationSpec,
                   rng: np.random.Generator) -> GradientSample:
    """Two-measurement simultaneous-perturbation gradient estimate.

    ghat = [y(theta + c*delta) - y(theta - c*delta)] / (2c) * delta^{-1}
    componentwise; for +/-1 components delta^{-1} = delta.
    """
    delta = rademacher_perturbation(spec, rng)
    y_plus = loss_oracle(theta + spec.c * delta)
    _check_finite(y_plus, "loss oracle at theta + c*delta")
    y_minus = loss_oracle(theta - spec.c * delta)
    _check_finite(y_minus, "loss oracle at theta - c*delta")
    ghat = (y_plus - y_minus) / (2.0 * spec.c) / delta
    return GradientSample(estimate=ghat, measurements=2)


def spsa1_estimate(loss_oracle, theta: np.ndarray, spec: PerturbationSpec,
                   rng: np.random.Generator) -> GradientSample:
    """One-measurement variant: ghat = y(theta + c*delta) / c * delta^{-1}."""
    delta = rademacher_perturbation(spec, rng)
    y_plus = loss_oracle(theta + spec.c * delta)
    _check_finite(y_plus, "loss oracle at theta + c*delta")
    ghat = y_plus / spec.c / delta
    return GradientSample(estimate=ghat, measurements=1)


def sg_estimate(gradient_oracle, theta: np.ndarray) -> GradientSample:
    """Direct noisy gradient measurement, passed through unchanged."""
    ghat = np.asarray(gradient_oracle(theta), dtype=float)
    _check_finite(ghat, "gradient oracle")
    return GradientSample(estimate=ghat, measurements=1)


def sa_step(state: SAState, gain: float, sample: GradientSample) -> SAState:
    """Unconstrained update theta_{k+1} = theta_k - a_k * ghat_k."""
    if not gain >= 0:
        raise ValueError(f"gain must be >= 0, got {gain}")
    theta_next = state.theta - gain * sample.estimate
    return SAState(k=state.k + 1, theta=theta_next,
                   correction=np.zeros_like(theta_next))


def projected_sa_step(state: SAState, gain: float, sample: GradientSample,
                      region: ConstraintRegion) -> SAState:
    """Projected update; records the minimum-norm correction back into the region.

    The correction a_k*eta_k = P(x) - x is the force needed to stay feasible;
    it is exactly zero when the unconstrained point already lies in the region.
    """
    if not gain >= 0:
        raise ValueError(f"gain must be >= 0, got {gain}")
    raw = state.theta - gain * sample.estimate
    projected = region.project(raw)
    return SAState(k=state.k + 1, theta=projected, correction=projected - raw)
