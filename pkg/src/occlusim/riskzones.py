"""Stopping distances under ramped braking and the danger/discomfort/safety partition.

Braking is modeled as a constant-jerk ramp followed by constant deceleration:
the deceleration magnitude rises linearly from 0 to ``a_level`` over ``t_ramp``
seconds (jerk j = a_level / t_ramp) and then stays at ``a_level`` until the
vehicle stops.  Closed forms:

    ramp phase:      v(t) = v0 - j t^2 / 2,        x(t) = v0 t - j t^3 / 6
    after the ramp:  v1 = v0 - a_level t_ramp / 2, x1 = v0 t_ramp - a_level t_ramp^2 / 6
                     total = x1 + v1^2 / (2 a_level)

If the vehicle reaches v = 0 mid-ramp the short-stop root t* = sqrt(2 v0 / j)
is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class BrakingProfile:
    """Ramped braking profile: steady deceleration magnitude plus ramp duration."""

    a_level: float  # m/s^2, > 0
    t_ramp: float  # s, >= 0

    def __post_init__(self):
        if not (self.a_level > 0.0) or not math.isfinite(self.a_level):
            raise ConfigError(f"a_level must be positive and finite, got {self.a_level}")
        if self.t_ramp < 0.0 or not math.isfinite(self.t_ramp):
            raise ConfigError(f"t_ramp must be >= 0 and finite, got {self.t_ramp}")


@dataclass(frozen=True)
class RiskZones:
    """Look-ahead partition: danger [0, d_stop_min], discomfort up to d_stop_comfort,
    safety up to r_visible (empty and flagged when d_stop_comfort > r_visible)."""

    d_stop_min: float
    d_stop_comfort: float
    r_visible: float
    safety_clamped: bool = False

    @property
    def danger_span(self) -> tuple[float, float]:
        return (0.0, self.d_stop_min)

    @property
    def discomfort_span(self) -> tuple[float, float]:
        return (self.d_stop_min, self.d_stop_comfort)

    @property
    def safety_span(self) -> tuple[float, float]:
        if self.safety_clamped:
            return (self.r_visible, self.r_visible)
        return (self.d_stop_comfort, self.r_visible)

    def zone_at(self, d: float) -> str:
        """Zone name for a look-ahead distance d >= 0."""
        if d <= self.d_stop_min:
            return "danger"
        if d <= self.d_stop_comfort:
            return "discomfort"
        return "safety"


def stopping_distance(v0: float, profile: BrakingProfile) -> float:
    """Distance traveled before stopping from speed v0 under the ramped profile."""
    if v0 < 0.0 or not math.isfinite(v0):
        raise ConfigError(f"v0 must be >= 0 and finite, got {v0}")
    if v0 == 0.0:
        return 0.0
    a, tr = profile.a_level, profile.t_ramp
    if tr == 0.0:
        return v0 * v0 / (2.0 * a)
    j = a / tr
    v_ramp_end = v0 - a * tr / 2.0
    if v_ramp_end <= 0.0:
        # stops mid-ramp
        t_star = math.sqrt(2.0 * v0 / j)
        return v0 * t_star - j * t_star**3 / 6.0
    x_ramp = v0 * tr - a * tr * tr / 6.0
    return x_ramp + v_ramp_end * v_ramp_end / (2.0 * a)


def comfort_stop_at_limit(comfort: BrakingProfile, speed_limit: float) -> float:
    """Comfortable stopping distance from the speed limit (read-only quantity;
    the policy always uses the current-speed zones)."""
    return stopping_distance(speed_limit, comfort)


def compute_risk_zones(
    v0: float,
    comfort: BrakingProfile,
    physical: BrakingProfile,
    r_visible: float,
) -> RiskZones:
    """Risk zones at current speed: d_stop_min from the physical (mu*g) profile,
    d_stop_comfort from the comfort profile."""
    if r_visible <= 0.0:
        raise ConfigError(f"r_visible must be positive, got {r_visible}")
    d_min = stopping_distance(v0, physical)
    d_comfort = stopping_distance(v0, comfort)
    if d_min > d_comfort + 1e-12:
        raise ConfigError(
            f"physical stop {d_min:.3f} m exceeds comfort stop {d_comfort:.3f} m; "
            "braking profiles are inconsistent"
        )
    d_min = min(d_min, d_comfort)
    return RiskZones(
        d_stop_min=d_min,
        d_stop_comfort=d_comfort,
        r_visible=r_visible,
        safety_clamped=d_comfort > r_visible,
    )
