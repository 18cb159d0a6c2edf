"""Power take-off control laws: passive, reactive, and discrete.

All three laws produce a force on the translator and are saturated to
the machine ratings: |F| <= f_max and |F*v| <= p_max. The discrete law
is a bang-bang controller that is OFF (zero force) until either the
mass approaches an end of the tube faster than it could be stopped, or
the tube tilt reverses under it; while ON it extracts the maximum
instantaneous power the ratings allow and drops back OFF once the mass
is essentially stopped.

Sign convention: generated power is P = -F*v, positive when the force
opposes motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from srwec.errors import ValidationError

GRAVITY = 9.80665


@dataclass(frozen=True)
class Limits:
    """Machine ratings: peak force (N) and peak instantaneous power (W)."""

    f_max: float
    p_max: float

    def __post_init__(self) -> None:
        if not self.f_max > 0:
            raise ValidationError(f"f_max must be > 0, got {self.f_max}")
        if not self.p_max > 0:
            raise ValidationError(f"p_max must be > 0, got {self.p_max}")


@dataclass(frozen=True)
class PtoMode:
    """A control law plus ratings; ``on`` is the discrete controller state.

    Use the ``passive``, ``reactive``, and ``discrete`` constructors
    rather than filling fields by hand.
    """

    kind: str
    limits: Limits
    c_pto: float = 0.0
    k_pto: float = 0.0
    v_stop: float = 0.02
    safety: float = 1.5
    on: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("passive", "reactive", "discrete"):
            raise ValidationError(f"unknown PTO kind {self.kind!r}")
        if self.c_pto < 0 or self.k_pto < 0:
            raise ValidationError("c_pto and k_pto must be >= 0")
        if self.kind == "discrete":
            if not self.v_stop > 0:
                raise ValidationError(f"v_stop must be > 0, got {self.v_stop}")
            if not self.safety >= 1:
                raise ValidationError(f"safety must be >= 1, got {self.safety}")

    @classmethod
    def passive(cls, c_pto: float, limits: Limits) -> "PtoMode":
        return cls(kind="passive", limits=limits, c_pto=c_pto)

    @classmethod
    def reactive(cls, k_pto: float, c_pto: float, limits: Limits) -> "PtoMode":
        return cls(kind="reactive", limits=limits, c_pto=c_pto, k_pto=k_pto)

    @classmethod
    def discrete(
        cls, limits: Limits, v_stop: float = 0.02, safety: float = 1.5
    ) -> "PtoMode":
        return cls(kind="discrete", limits=limits, v_stop=v_stop, safety=safety)


def saturate(force: float, v: float, limits: Limits) -> float:
    """Clamp a commanded force to the force and power ratings."""
    f = max(-limits.f_max, min(limits.f_max, force))
    if v != 0.0 and abs(f * v) > limits.p_max:
        f = math.copysign(limits.p_max / abs(v), f)
    return f


def braking_trigger(x, v, theta, mass, stroke, limits, safety):
    """True when the worst-case stopping distance reaches the end stop.

    Stopping distance is safety * m v^2 / (2 F_avail) with gravity
    assumed to assist motion; the available force is floored at 10% of
    f_max so a steep tilt cannot zero the denominator.
    """
    if v == 0.0:
        return False
    # distance from x to the stop the mass is moving toward
    remaining = 0.5 * stroke - (x if v > 0 else -x)
    if remaining <= 0:
        return True
    avail = max(limits.f_max - mass * GRAVITY * abs(math.sin(theta)), 0.1 * limits.f_max)
    return safety * mass * v * v / (2.0 * avail) >= remaining


def pto_force(
    mode: PtoMode, x: float, v: float, theta: float, mass: float, stroke: float
) -> tuple[float, PtoMode]:
    """Evaluate the active law at one state; returns (force, next mode).

    The returned mode differs from the input only for the discrete
    law's ON/OFF state. Transitions: ON -> OFF when |v| < v_stop;
    OFF -> ON (only at |v| >= v_stop) when the braking trigger fires or
    the mass is moving uphill against the current tilt.
    """
    if mode.kind == "passive":
        return saturate(-mode.c_pto * v, v, mode.limits), mode
    if mode.kind == "reactive":
        return saturate(-mode.k_pto * x - mode.c_pto * v, v, mode.limits), mode

    on = mode.on
    if on and abs(v) < mode.v_stop:
        on = False
    elif not on and abs(v) >= mode.v_stop:
        uphill = v * math.sin(theta) < 0
        if uphill or braking_trigger(x, v, theta, mass, stroke, mode.limits, mode.safety):
            on = True
    if on:
        force = -math.copysign(
            min(mode.limits.f_max, mode.limits.p_max / abs(v)), v
        )
    else:
        force = 0.0
    if on != mode.on:
        mode = replace(mode, on=on)
    return force, mode


def pto_power(force: float, v: float) -> float:
    """Instantaneous generated power, positive when F opposes motion."""
    return -force * v
