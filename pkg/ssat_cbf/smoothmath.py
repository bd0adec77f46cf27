#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, replace
from enum import Enum
from typing import Tuple, Union
import math
import numpy as np

# number of candidate axes between two cuboids
NUM_AXES = 15


class SmoothMax(str, Enum):
    LSE = "lse"
    BOLTZMANN = "boltzmann"


class SmoothAbs(str, Enum):
    XTANH = "xtanh"
    SQRT = "sqrt"


@dataclass(frozen=True)
class SmoothingParams:
    r"""Sharpness and switching parameters of the smooth separation margin.

    Args:
        alpha_max: Sharpness of the smooth maximum (unitless per metre of margin).
        alpha_abs: Sharpness of `x tanh(alpha x)`, in 1/m.
        eps_sqrt: Regulariser of `sqrt(x^2 + eps^2)`, in m.
        switch_threshold: Exact SAT value above which the exact (non-smooth)
            margin is returned instead of the smooth one, in m.
        max_variant: `SmoothMax.LSE` or `SmoothMax.BOLTZMANN`.
        abs_variant: `SmoothAbs.XTANH` or `SmoothAbs.SQRT`.

    Example:
        >>> params = SmoothingParams(alpha_max=100.0, alpha_abs=100.0)
        >>> lower, upper = params.error_band()
    """
    alpha_max: float = 100.0
    alpha_abs: float = 100.0
    eps_sqrt: float = 0.01
    switch_threshold: float = 0.5
    max_variant: SmoothMax = SmoothMax.LSE
    abs_variant: SmoothAbs = SmoothAbs.XTANH

    def __post_init__(self):
        for name in ("alpha_max", "alpha_abs", "eps_sqrt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"'{name}' must be a positive finite number, got {value}")
        object.__setattr__(self, "max_variant", SmoothMax(self.max_variant))
        object.__setattr__(self, "abs_variant", SmoothAbs(self.abs_variant))
        floor = (6.0 + math.log(NUM_AXES)) / self.alpha_max
        if not self.switch_threshold > floor:
            raise ValueError(
                f"'switch_threshold' must exceed (6 + ln 15)/alpha_max = {floor:.4f}, "
                f"got {self.switch_threshold}"
            )

    def without_switching(self) -> "SmoothingParams":
        return replace(self, switch_threshold=math.inf)

    def error_band(self) -> Tuple[float, float]:
        """Certified `(lower, upper)` with `-lower <= h_smooth - h_exact <= upper`.

        The Boltzmann operator only bounds the smooth margin from above, so its
        lower band is infinite.
        """
        if self.abs_variant == SmoothAbs.XTANH:
            axis_low, axis_up = 1.0 / self.alpha_abs, 6.0 / self.alpha_abs
        else:
            axis_low, axis_up = 6.0 * self.eps_sqrt, self.eps_sqrt
        if self.max_variant == SmoothMax.LSE:
            return axis_low, axis_up + math.log(NUM_AXES) / self.alpha_max
        return math.inf, axis_up

    @property
    def abs_param(self) -> float:
        return self.alpha_abs if self.abs_variant == SmoothAbs.XTANH else self.eps_sqrt


def _validate_values(values) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("smooth_max needs at least one value")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"smooth_max inputs must be finite, got {values!r}")
    return x


def _lse(x: np.ndarray, alpha: float):
    m = x.max()
    w = np.exp(alpha * (x - m))
    s = w.sum()
    # s >= 1 because the maximum contributes exp(0)
    value = m + math.log(s) / alpha
    p = w / s
    hess = alpha * (np.diag(p) - np.outer(p, p))
    return value, p, hess


def _boltzmann(x: np.ndarray, alpha: float):
    m = x.max()
    w = np.exp(alpha * (x - m))
    p = w / w.sum()
    value = float(p @ x)
    value = min(max(value, x.min()), m)
    c = 1.0 + alpha * (x - value)
    grad = p * c
    pc = p * c
    hess = alpha * (np.diag(p * (1.0 + c)) - np.outer(pc, p) - np.outer(p, pc))
    return value, grad, hess


def smooth_max(
        values,
        variant: Union[SmoothMax, str] = SmoothMax.LSE,
        alpha: float = 100.0,
    ) -> Tuple[float, np.ndarray, np.ndarray]:
    r"""Smooth maximum with its gradient and Hessian.

    LSE: `(1/alpha) log sum exp(alpha x_i)`, evaluated shifted by `max(x)`, so
    `0 <= value - max(x) <= ln(n)/alpha` holds exactly.

    Boltzmann: `sum x_i exp(alpha x_i) / sum exp(alpha x_i)`, which always lies in
    `[min(x), max(x)]`.

    Example:
        >>> value, grad, hess = smooth_max([1.0, 2.0, 3.0], SmoothMax.LSE, alpha=10.0)
    """
    x = _validate_values(values)
    if not (math.isfinite(alpha) and alpha > 0):
        raise ValueError(f"'alpha' must be positive and finite, got {alpha}")
    if SmoothMax(variant) == SmoothMax.LSE:
        return _lse(x, alpha)
    return _boltzmann(x, alpha)


def smooth_max_value(values, variant: Union[SmoothMax, str] = SmoothMax.LSE, alpha: float = 100.0) -> float:
    x = np.asarray(values, dtype=float)
    m = x.max()
    w = np.exp(alpha * (x - m))
    if SmoothMax(variant) == SmoothMax.LSE:
        return float(m + math.log(w.sum()) / alpha)
    return float(min(max((w @ x) / w.sum(), x.min()), m))


def smooth_abs(x, variant: Union[SmoothAbs, str] = SmoothAbs.XTANH, param: float = 100.0):
    r"""Smooth absolute value and its first two derivatives.

    `xtanh`: `x tanh(param x)` with `0 <= |x| - value < 1/param`.
    `sqrt`: `sqrt(x^2 + param^2)`, which never underestimates `|x|`.

    Works elementwise on arrays.
    """
    if not (math.isfinite(param) and param > 0):
        raise ValueError(f"'param' must be positive and finite, got {param}")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"smooth_abs input must be finite, got {x!r}")
    return smooth_abs_terms(arr, SmoothAbs(variant), param)


def smooth_abs_terms(x: np.ndarray, variant: SmoothAbs, param: float):
    # unchecked path for callers that already validated their inputs
    if variant == SmoothAbs.XTANH:
        t = np.tanh(param * x)
        sech2 = 1.0 - t * t
        value = x * t
        d1 = t + param * x * sech2
        d2 = 2.0 * param * sech2 * (1.0 - param * x * t)
        return value, d1, d2
    v = np.sqrt(x * x + param * param)
    return v, x / v, (param * param) / (v * v * v)


def smooth_abs_value(x: np.ndarray, variant: SmoothAbs, param: float) -> np.ndarray:
    if variant == SmoothAbs.XTANH:
        return x * np.tanh(param * x)
    return np.sqrt(x * x + param * param)


def smooth_max_terms(x: np.ndarray, variant: SmoothMax, alpha: float):
    # unchecked path for callers that already validated their inputs
    if variant == SmoothMax.LSE:
        return _lse(x, alpha)
    return _boltzmann(x, alpha)
