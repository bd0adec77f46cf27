#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple
import math

from ..model import LEGS

TRIPOD_A = (LEGS.index("LR"), LEGS.index("RR"), LEGS.index("MF"))
TRIPOD_B = (LEGS.index("MR"), LEGS.index("LF"), LEGS.index("RF"))
# drive wheels that carry the ground-moving origin while the other tripod swings
DRIVE_WHEELS = {"A": (LEGS.index("LF"), LEGS.index("RF")), "B": (LEGS.index("LR"), LEGS.index("RR"))}


class LegPhase(str, Enum):
    STANCE = "stance"
    SWING_UP = "swing_up"
    SWING_FORWARD = "swing_forward"
    FOOT_LOWERING = "foot_lowering"


@dataclass(frozen=True)
class GaitParams:
    r"""Tripod gait and swing-shape settings.

    Args:
        cycle_time: Full gait cycle; each tripod swings for half of it.
        swing_height: Apex clearance above the higher of the start and
            landing planes.
        lift_end, lower_start: Half-cycle fractions where the foot stops
            rising and starts lowering.
        forward_start, forward_end: Half-cycle fractions bounding the
            horizontal swing motion.
        lead: Footstep advance as a multiple of `cycle_time`.
        capture_distance: Largest horizontal distance from a plane at which
            a target is still snapped onto it.
        max_step_height: Largest height change a single step may climb.
        region_inset: Inset of foothold regions from their edges.
        body_raise: Extra body height added whenever the feet stand on
            different planes.
        step_on_flat: Swing the feet even when the landing plane is the
            current one.
    """
    cycle_time: float = 2.0
    swing_height: float = 0.08
    lift_end: float = 0.4
    lower_start: float = 0.6
    forward_start: float = 0.2
    forward_end: float = 0.8
    lead: float = 1.0
    capture_distance: float = 0.3
    max_step_height: float = 0.25
    region_inset: float = 0.02
    body_raise: float = 0.0
    step_on_flat: bool = False

    def __post_init__(self):
        if not self.cycle_time > 0:
            raise ValueError(f"'cycle_time' must be positive, got {self.cycle_time}")
        if self.swing_height < 0:
            raise ValueError(f"'swing_height' must be non-negative, got {self.swing_height}")
        if not 0.0 < self.lift_end <= self.lower_start < 1.0:
            raise ValueError("need 0 < lift_end <= lower_start < 1")
        if not 0.0 <= self.forward_start < self.forward_end <= 1.0:
            raise ValueError("need 0 <= forward_start < forward_end <= 1")
        for name in ("lead", "capture_distance", "max_step_height", "region_inset", "body_raise"):
            if getattr(self, name) < 0:
                raise ValueError(f"'{name}' must be non-negative, got {getattr(self, name)}")

    @property
    def half_cycle(self) -> float:
        return 0.5 * self.cycle_time


@dataclass(frozen=True)
class GaitPhase:
    t: float
    half_cycle: int
    tau: float
    swing_tripod: str
    phases: Tuple[LegPhase, ...]

    @property
    def swing_legs(self) -> Tuple[int, ...]:
        return TRIPOD_A if self.swing_tripod == "A" else TRIPOD_B

    @property
    def stance_legs(self) -> Tuple[int, ...]:
        return TRIPOD_B if self.swing_tripod == "A" else TRIPOD_A

    @property
    def drive_wheels(self) -> Tuple[int, int]:
        return DRIVE_WHEELS[self.swing_tripod]


def swing_phase(tau: float, params: GaitParams) -> LegPhase:
    if tau < params.lift_end:
        return LegPhase.SWING_UP
    if tau < params.lower_start:
        return LegPhase.SWING_FORWARD
    return LegPhase.FOOT_LOWERING


def gait_schedule(t: float, params: GaitParams) -> GaitPhase:
    r"""Alternating tripod schedule: tripod A (LR, RR, MF) swings during even
    half-cycles, tripod B (MR, LF, RF) during odd ones.

    Example:
        >>> gait_schedule(0.0, GaitParams()).swing_tripod
        'A'
        >>> gait_schedule(1.0, GaitParams()).swing_tripod
        'B'
    """
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"'t' must be finite and non-negative, got {t}")
    scaled = t / params.half_cycle
    k = int(math.floor(scaled + 1e-12))
    tau = min(max(scaled - k, 0.0), 1.0)
    tripod = "A" if k % 2 == 0 else "B"
    swinging = TRIPOD_A if tripod == "A" else TRIPOD_B
    leg_phase = swing_phase(tau, params)
    phases = tuple(leg_phase if i in swinging else LegPhase.STANCE for i in range(len(LEGS)))
    return GaitPhase(t, k, tau, tripod, phases)


def support_switches(t0: float, t1: float, params: GaitParams) -> List[float]:
    """Support-switch (origin-exchange) times in `[t0, t1)`."""
    h = params.half_cycle
    first = math.ceil(t0 / h - 1e-12)
    times = []
    k = first
    while k * h < t1 - 1e-12:
        times.append(k * h)
        k += 1
    return times
