#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from typing import NamedTuple, Union
import math
import os
import numpy as np
import pandas as pd


class VelocityCommand(NamedTuple):
    v: float
    omega: float


class CommandScript:
    r"""Timestamped `(t, v, omega)` commands, each held until the next stamp.

    Args:
        times: Increasing stamps in seconds; the first must be 0.
        v: Forward speed commands (m/s).
        omega: Yaw rate commands (rad/s).
        v_max, omega_max: Magnitude limits every command must respect.

    Example:
        >>> script = CommandScript([0.0, 1.0], [0.2, 0.0], [0.0, 0.5])
        >>> script.at(0.5)
        VelocityCommand(v=0.2, omega=0.0)
        >>> script.integrated_yaw(3.0)
        1.0
    """

    def __init__(self, times, v, omega, v_max: float = 0.5, omega_max: float = 1.0):
        self.times = np.asarray(times, dtype=float).ravel()
        self.v = np.asarray(v, dtype=float).ravel()
        self.omega = np.asarray(omega, dtype=float).ravel()
        if not (self.times.size == self.v.size == self.omega.size) or self.times.size == 0:
            raise ValueError("'times', 'v' and 'omega' must be non-empty and of equal length")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.omega))):
            raise ValueError("command script contains non-finite values")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("'times' must start at 0 and be strictly increasing")
        if np.any(np.abs(self.v) > v_max):
            raise ValueError(f"'v' exceeds v_max={v_max}")
        if np.any(np.abs(self.omega) > omega_max):
            raise ValueError(f"'omega' exceeds omega_max={omega_max}")
        self.v_max = v_max
        self.omega_max = omega_max

    @classmethod
    def constant(cls, v: float = 0.0, omega: float = 0.0, **limits) -> "CommandScript":
        return cls([0.0], [v], [omega], **limits)

    @classmethod
    def from_csv(cls, path: Union[str, os.PathLike], **limits) -> "CommandScript":
        """Read a CSV with columns `t`, `v`, `omega`."""
        frame = pd.read_csv(path)
        missing = {"t", "v", "omega"} - set(frame.columns)
        if missing:
            raise ValueError(f"command script {path} is missing columns {sorted(missing)}")
        frame = frame.sort_values("t")
        return cls(frame["t"].to_numpy(), frame["v"].to_numpy(), frame["omega"].to_numpy(), **limits)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "v": self.v, "omega": self.omega})

    def _segment(self, t: float) -> int:
        return max(int(np.searchsorted(self.times, t, side="right")) - 1, 0)

    def at(self, t: float) -> VelocityCommand:
        k = self._segment(t)
        return VelocityCommand(float(self.v[k]), float(self.omega[k]))

    def integrated_yaw(self, t: float, yaw0: float = 0.0) -> float:
        """Heading reached at `t` by integrating the held yaw-rate commands from `yaw0`."""
        if t <= 0.0:
            return yaw0
        k = self._segment(t)
        spans = np.diff(np.append(self.times[:k + 1], t))
        return yaw0 + float(np.sum(self.omega[:k + 1] * spans))

    def __len__(self) -> int:
        return self.times.size

    def __repr__(self) -> str:
        return f"CommandScript(n={len(self)}, v_max={self.v_max}, omega_max={self.omega_max})"


def unicycle_rollout(position, yaw: float, cmd: VelocityCommand, horizon: float):
    r"""Closed-form pose after driving `cmd` for `horizon` seconds.

    Returns `(xy, yaw)`; straight-line motion is used when `omega` is
    numerically zero.
    """
    position = np.asarray(position, dtype=float)[:2]
    v, omega = cmd
    if abs(omega) < 1e-9:
        step = v * horizon * np.array([math.cos(yaw), math.sin(yaw)])
    else:
        end = yaw + omega * horizon
        step = (v / omega) * np.array([math.sin(end) - math.sin(yaw), math.cos(yaw) - math.cos(end)])
    return position + step, yaw + omega * horizon
