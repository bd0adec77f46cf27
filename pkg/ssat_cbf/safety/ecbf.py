#!/usr/bin/env python3

# Copyright (c) 2024 The ssat_cbf developers

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Sequence
import logging
import math
import numpy as np

from .. import model

logger = logging.getLogger(__name__)

_VACUOUS_TOL = 1e-14


class ConstraintKind(str, Enum):
    JOINT_LIMIT = "joint_limit"
    BODY_COLLISION = "body_collision"
    TOE_COLLISION = "toe_collision"
    FOOTHOLD = "foothold"
    FOOT_HEIGHT = "foot_height"
    STABILITY = "stability"


def pole_placement_gains(lam: float) -> np.ndarray:
    r"""ECBF gains `K = [lam^2, 2 lam]`, i.e. both poles of the `[h, hdot]`
    dynamics at `-lam`.

    Example:
        >>> pole_placement_gains(5.0)
        array([25., 10.])
    """
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError(f"'lambda' must be positive and finite, got {lam}")
    return np.array([lam * lam, 2.0 * lam])


@dataclass(frozen=True)
class ConstraintSpec:
    r"""Configuration of one constraint family.

    Args:
        kind: Which family the rows belong to.
        gains: `K` of `hddot >= -K [h, hdot]`; `s^2 + K[1] s + K[0]` must be Hurwitz.
        slack_weight: Quadratic penalty `w_delta` on the row relaxation.
        active: Whether rows of this family are assembled at all.
        params: Family-specific settings (e.g. superellipsoid exponent).
    """
    kind: ConstraintKind
    gains: Sequence[float] = (16.0, 8.0)
    slack_weight: float = 1e6
    active: bool = True
    relative_degree: int = 2
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        gains = np.asarray(self.gains, dtype=float).reshape(2)
        if self.relative_degree != 2:
            raise ValueError(f"only relative degree 2 is supported, got {self.relative_degree}")
        # s^2 + K2 s + K1 is Hurwitz iff both coefficients are positive
        if not (gains[0] > 0 and gains[1] > 0):
            raise ValueError(f"{self.kind.value}: gains {gains.tolist()} are not Hurwitz")
        if not self.slack_weight > 0:
            raise ValueError(f"{self.kind.value}: slack_weight must be positive, got {self.slack_weight}")
        object.__setattr__(self, "gains", gains)


@dataclass
class EcbfRow:
    r"""Linear QP row `a.u - delta >= lb` encoding
    `L_f^2 h + L_g L_f h u >= -K [h, L_f h] + delta`."""
    a: np.ndarray
    lb: float
    h: float
    hdot: float
    kind: ConstraintKind = ConstraintKind.JOINT_LIMIT
    label: str = ""
    slack: Optional[int] = None
    slack_weight: float = 1e6
    vacuous: bool = False

    def residual(self, u: np.ndarray, delta: float = 0.0) -> float:
        return float(self.a @ u - delta - self.lb)


@dataclass
class DriftTerms:
    """`f`, `g`, `(df/dx) f` and `(df/dx) g` at one state, shared by all rows of a tick."""
    f: np.ndarray
    g: np.ndarray
    jf_f: np.ndarray
    jf_g: np.ndarray

    @classmethod
    def at(cls, x) -> "DriftTerms":
        f = model.drift(x)
        g = model.input_matrix(x)
        jac = model.drift_jacobian(x)
        return cls(f, g, jac @ f, jac @ g)

    @classmethod
    def from_dynamics(cls, f: np.ndarray, g: np.ndarray, jac_f: np.ndarray) -> "DriftTerms":
        return cls(f, g, jac_f @ f, jac_f @ g)


def ecbf_row(
        h: float,
        grad_x: np.ndarray,
        hess_x: np.ndarray,
        x,
        K: np.ndarray,
        index: Optional[Sequence[int]] = None,
        terms: Optional[DriftTerms] = None,
        kind: ConstraintKind = ConstraintKind.JOINT_LIMIT,
        label: str = "",
    ) -> Optional[EcbfRow]:
    r"""Linearize a relative-degree-two barrier into a QP row.

    `grad_x`/`hess_x` are derivatives of `h` over the full state, or over the
    state entries listed in `index` when given. With
    `L_f h = grad.f`, `L_f^2 h = f^T H f + grad.(J_f f)` and
    `L_g L_f h = f^T H g + grad.(J_f g)` the row is
    `a = L_g L_f h`, `lb = -L_f^2 h - K[0] h - K[1] L_f h`.

    Returns `None` (and logs a warning) when any derivative is non-finite.
    """
    terms = terms or DriftTerms.at(x)
    grad = np.asarray(grad_x, dtype=float)
    hess = np.asarray(hess_x, dtype=float)
    if not (math.isfinite(h) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        logger.warning("dropping %s row %s: non-finite barrier derivatives", kind.value, label)
        return None
    if index is None:
        f, g, jf_f, jf_g = terms.f, terms.g, terms.jf_f, terms.jf_g
    else:
        index = np.asarray(index)
        f, g, jf_f, jf_g = terms.f[index], terms.g[index], terms.jf_f[index], terms.jf_g[index]
    hf = hess @ f
    lf_h = float(grad @ f)
    lf2_h = float(f @ hf + grad @ jf_f)
    a = hf @ g + grad @ jf_g
    K = np.asarray(K, dtype=float)
    lb = -lf2_h - K[0] * h - K[1] * lf_h
    if not (np.all(np.isfinite(a)) and math.isfinite(lb)):
        logger.warning("dropping %s row %s: non-finite row", kind.value, label)
        return None
    vacuous = bool(np.max(np.abs(a), initial=0.0) <= _VACUOUS_TOL)
    return EcbfRow(a, float(lb), float(h), lf_h, kind, label, vacuous=vacuous)
