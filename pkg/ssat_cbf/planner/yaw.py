#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from typing import Sequence
import numpy as np
from scipy.interpolate import CubicSpline

from .commands import CommandScript


class YawSpline:
    r"""C² cubic yaw reference that passes through the commanded heading at
    every drive-wheel landing time with zero yaw rate there.

    A free knot sits halfway between consecutive landings. Its value is the
    smallest correction to the linear midpoint for which the clamped cubic
    spline has zero rate at every interior landing; the clamped end
    conditions give zero rate at the first and last landing.

    Outside the knot range the value is held at the end knots.
    """

    def __init__(self, knots, values):
        self.knots = np.asarray(knots, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.knots.size < 2 or np.any(np.diff(self.knots) <= 0):
            raise ValueError("yaw spline needs at least two strictly increasing knots")
        if self.values.shape != self.knots.shape:
            raise ValueError("yaw spline needs one value per knot")
        grid = np.empty(2 * self.knots.size - 1)
        grid[0::2] = self.knots
        grid[1::2] = 0.5 * (self.knots[:-1] + self.knots[1:])
        samples = np.empty_like(grid)
        samples[0::2] = self.values
        samples[1::2] = 0.5 * (self.values[:-1] + self.values[1:])

        inner = self.knots[1:-1]
        if inner.size:
            residual = CubicSpline(grid, samples, bc_type="clamped")(inner, 1)
            # the spline is linear in its samples; one column per free knot
            columns = []
            for j in range(1, grid.size, 2):
                unit = np.zeros_like(grid)
                unit[j] = 1.0
                columns.append(CubicSpline(grid, unit, bc_type="clamped")(inner, 1))
            correction = np.linalg.lstsq(np.stack(columns, axis=1), -residual, rcond=None)[0]
            samples[1::2] += correction
        self._spline = CubicSpline(grid, samples, bc_type="clamped")

    def __call__(self, t, nu: int = 0):
        t = np.clip(t, self.knots[0], self.knots[-1])
        value = self._spline(t, nu)
        return float(value) if np.ndim(value) == 0 else value

    def rate(self, t):
        return self(t, 1)

    def acceleration(self, t):
        return self(t, 2)


def yaw_trajectory(script: CommandScript, landing_times: Sequence[float], yaw0: float = 0.0) -> YawSpline:
    r"""Yaw reference through the script's integrated heading at `landing_times`.

    Example:
        >>> spline = yaw_trajectory(CommandScript.constant(0.1, 0.5), [0.0, 1.0, 2.0])
        >>> round(spline(1.0), 12), abs(spline.rate(1.0)) < 1e-10
        (0.5, True)
    """
    knots = np.unique(np.asarray(landing_times, dtype=float))
    values = [script.integrated_yaw(t, yaw0) for t in knots]
    return YawSpline(knots, values)
