"""Slack-variable domains, admissible gain regions, and step coefficients.

For strongly convex problems with curvature moduli 0 < C <= L and ratio
R = L/C, a non-decaying gain ``a`` contracts the tracking error whenever the
pair (slack q, product a*L) lies in a closed-form admissible set. The per-step
error recursion is driven by two coefficients

    u = L/C + a*C*[(q+1)*(a*L - 1) - 1]        (contraction factor, in [0,1))
    v = a*[a*L*(q+1) - 1] / (q*C)              (noise amplification, >= 0)

and the admissible set is exactly the region where those ranges hold:

* the slack upper endpoint ``q_upper`` is the largest q for which u >= 0
  everywhere (discriminant root of the u >= 0 quadratic in a*L);
* for R above the golden ratio, the lower endpoint ``q_lower`` is the q at
  which u < 1 stops being solvable (discriminant root of the u < 1 quadratic),
  so the gain interval (m_minus, m_plus) collapses as q falls to it.

Unit ratio (R = 1) degenerates: any q > 0 works and the gain interval becomes
[1, 1 + 1/(q+1)), on which u sweeps [0, 1) exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "GOLDEN_RATIO",
    "InvalidCurvature",
    "SlackDomainError",
    "GainRegionError",
    "CurvatureParams",
    "SlackDomain",
    "GainRegion",
    "StepCoefficients",
    "q_upper",
    "q_lower",
    "slack_domain",
    "multiplier_bounds",
    "gain_region",
    "step_coefficients",
    "select_gain",
]

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0

# L and C within relative 1e-9 are treated as the exact unit-ratio branch.
_UNIT_RATIO_RTOL = 1e-9


class InvalidCurvature(ValueError):
    """Curvature moduli violating 0 < C <= L (equivalently R < 1)."""


class SlackDomainError(ValueError):
    """Slack variable q outside the admissible interval for this R."""


class GainRegionError(ValueError):
    """Gain product a*L outside the admissible region; carries the region."""

    def __init__(self, message: str, region: "GainRegion"):
        super().__init__(message)
        self.region = region


@dataclass(frozen=True)
class CurvatureParams:
    """Validated strong-convexity / Lipschitz moduli with their ratio."""

    C: float
    L: float

    def __post_init__(self) -> None:
        if not (self.C > 0 and self.L >= self.C):
            raise InvalidCurvature(f"need 0 < C <= L, got C={self.C}, L={self.L}")

    @property
    def R(self) -> float:
        return self.L / self.C

    @property
    def unit_ratio(self) -> bool:
        return (self.L - self.C) <= _UNIT_RATIO_RTOL * self.L


def _is_unit_ratio(R: float) -> bool:
    return (R - 1.0) <= _UNIT_RATIO_RTOL * R


@dataclass(frozen=True)
class SlackDomain:
    """Admissible slack interval: lower exclusive, upper inclusive when finite."""

    lower: float
    upper: float

    def __contains__(self, q: float) -> bool:
        return self.lower < q <= self.upper

    def __str__(self) -> str:
        hi = "inf)" if math.isinf(self.upper) else f"{self.upper}]"
        return f"({self.lower}, {hi}"


@dataclass(frozen=True)
class GainRegion:
    """Admissible interval for the product a*L with endpoint inclusivity flags."""

    lo: float
    hi: float
    lo_inclusive: bool
    hi_inclusive: bool

    def __contains__(self, aL: float) -> bool:
        # Exact comparisons on purpose: endpoints are closed-form and the
        # half-open semantics are part of the contract.
        above = aL >= self.lo if self.lo_inclusive else aL > self.lo
        below = aL <= self.hi if self.hi_inclusive else aL < self.hi
        return above and below

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __str__(self) -> str:
        lb = "[" if self.lo_inclusive else "("
        rb = "]" if self.hi_inclusive else ")"
        return f"{lb}{self.lo:.6g}, {self.hi:.6g}{rb}"


@dataclass(frozen=True)
class StepCoefficients:
    """Error-recursion coefficients: contraction u in [0,1), noise weight v >= 0."""

    u: float
    v: float


def _check_ratio(R: float) -> None:
    if not R >= 1.0:
        raise InvalidCurvature(f"curvature ratio must be >= 1, got {R}")


def q_upper(R: float) -> float:
    """Largest admissible slack: 2(R^2-1) + 2R*sqrt(R^2-1).

    Returns 0 at R=1 by continuity; callers treat the unit-ratio domain as
    the whole positive axis instead.
    """
    _check_ratio(R)
    if _is_unit_ratio(R):
        return 0.0
    s = R * R - 1.0
    return 2.0 * s + 2.0 * R * math.sqrt(s)


def q_lower(R: float) -> float:
    """Smallest admissible slack above the golden ratio, else 0.

    For R > (1+sqrt(5))/2: 2(R^2-R-1) + 2*sqrt(R(R-1)(R^2-R-1)). Below that
    threshold the whole interval (0, q_upper] is admissible and 0 is returned.
    """
    _check_ratio(R)
    w = R * R - R - 1.0
    if w <= 0.0:
        return 0.0
    return 2.0 * w + 2.0 * math.sqrt(R * (R - 1.0) * w)


def slack_domain(R: float) -> SlackDomain:
    """Admissible slack interval for curvature ratio R."""
    _check_ratio(R)
    if _is_unit_ratio(R):
        return SlackDomain(lower=0.0, upper=math.inf)
    return SlackDomain(lower=q_lower(R), upper=q_upper(R))


def multiplier_bounds(R: float, q: float) -> tuple[float, float]:
    """Roots (m_minus, m_plus) of the contraction condition u(a*L) = 1.

    m_pm = [q + 2 -/+ sqrt(q^2 + 4(1+R-R^2)q + 4(1+R-R^2))] / (2(q+1)),
    with 0 <= m_minus < (q/2+1)/(q+1) < m_plus <= (q+2)/(q+1) inside the
    slack domain, the outer equalities holding exactly at R = 1.
    """
    _check_ratio(R)
    dom = slack_domain(R)
    if q not in dom:
        raise SlackDomainError(f"slack {q} outside admissible {dom} for R={R}")
    t = 1.0 + R - R * R
    disc = q * q + 4.0 * t * q + 4.0 * t
    if disc < 0.0:
        # Unreachable inside the domain (the domain's lower endpoint is the
        # discriminant root); guards floating-point edge calls at the boundary.
        raise SlackDomainError(f"empty gain interval at R={R}, q={q}")
    root = math.sqrt(disc)
    denom = 2.0 * (q + 1.0)
    m_minus = (q + 2.0 - root) / denom
    m_plus = (q + 2.0 + root) / denom
    if _is_unit_ratio(R):
        m_minus = 0.0  # disc = (q+2)^2 exactly on this branch
    return m_minus, m_plus


def gain_region(R: float, q: float) -> GainRegion:
    """Admissible interval for a*L given curvature ratio and slack."""
    _check_ratio(R)
    dom = slack_domain(R)
    if q not in dom:
        raise SlackDomainError(f"slack {q} outside admissible {dom} for R={R}")
    if _is_unit_ratio(R):
        return GainRegion(lo=1.0, hi=1.0 + 1.0 / (q + 1.0),
                          lo_inclusive=True, hi_inclusive=False)
    m_minus, m_plus = multiplier_bounds(R, q)
    if R <= GOLDEN_RATIO:
        return GainRegion(lo=1.0 / (q + 1.0), hi=m_plus,
                          lo_inclusive=True, hi_inclusive=False)
    return GainRegion(lo=m_minus, hi=m_plus,
                      lo_inclusive=False, hi_inclusive=False)


def step_coefficients(C: float, L: float, q: float, a: float) -> StepCoefficients:
    """Error-recursion coefficients for an admissible (q, a) pair.

    Raises :class:`GainRegionError` (carrying the admissible interval) when
    a*L falls outside the region, and :class:`SlackDomainError` when q does.
    """
    params = CurvatureParams(C=C, L=L)
    R = 1.0 if params.unit_ratio else params.R
    region = gain_region(R, q)
    aL = a * L
    if aL not in region:
        raise GainRegionError(
            f"gain product a*L = {aL:.6g} outside admissible region {region} "
            f"for R={R:.6g}, q={q:.6g}", region)
    u = R + a * C * ((q + 1.0) * (aL - 1.0) - 1.0)
    v = a * (aL * (q + 1.0) - 1.0) / (q * C)
    if -1e-12 < u < 0.0:
        u = 0.0  # analytic guarantee is u >= 0; absorb rounding
    return StepCoefficients(u=u, v=v)


def select_gain(C: float, L: float, policy: str = "default",
                q: float | None = None, a: float | None = None) -> tuple[float, float]:
    """Pick an admissible (q, a) pair.

    Policies:

    * ``default``: above the golden ratio, q blends the domain endpoints as
      0.4*q_upper + 0.6*q_lower with a half-step gain a = 0.5/L; at unit
      ratio, q = 2.5 with a = 1.15/L; between, q = q_upper with the region
      midpoint gain.
    * ``midpoint``: q = q_upper (2.5 at unit ratio), a*L = region midpoint.
    * ``explicit``: caller supplies q and a; both are validated.
    """
    params = CurvatureParams(C=C, L=L)
    R = 1.0 if params.unit_ratio else params.R
    if policy == "explicit":
        if q is None or a is None:
            raise ValueError("explicit policy requires both q and a")
    elif policy == "default":
        if params.unit_ratio:
            q, a = 2.5, 1.15 / L
        elif R > GOLDEN_RATIO:
            q = 0.4 * q_upper(R) + 0.6 * q_lower(R)
            a = 0.5 / L
        else:
            q = q_upper(R)
            a = gain_region(R, q).midpoint / L
    elif policy == "midpoint":
        q = 2.5 if params.unit_ratio else q_upper(R)
        a = gain_region(R, q).midpoint / L
    else:
        raise ValueError(f"unknown gain policy {policy!r}")
    region = gain_region(R, q)
    if a * L not in region:
        raise GainRegionError(
            f"gain product a*L = {a * L:.6g} outside admissible region {region} "
            f"for R={R:.6g}, q={q:.6g}", region)
    return q, a
