#!/usr/bin/env python3

from typing import Any, Dict, Optional, Union
import os
import math
import numpy as np
import yaml


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def skew(w: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def check_finite(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"'{name}' must be finite, got {value!r}")
    return arr


def chain_rule(
        outer_grad: np.ndarray,
        outer_hess: np.ndarray,
        inner_jac: np.ndarray,
        inner_hess: np.ndarray,
    ):
    r"""Gradient and Hessian of `y(q(s))` from the derivatives of both maps.

    Args:
        outer_grad: `m` vector, dy/dq.
        outer_hess: `m x m` matrix, d2y/dq2.
        inner_jac: `m x k` matrix, dq/ds.
        inner_hess: `m x k x k` array, d2q_i/ds2 for every output `i`.

    Returns:
        `(grad, hess)` of `y` with respect to `s`, shapes `k` and `k x k`.
    """
    grad = inner_jac.T @ outer_grad
    hess = inner_jac.T @ outer_hess @ inner_jac + np.einsum("i,ijk->jk", outer_grad, inner_hess)
    return grad, 0.5 * (hess + hess.T)


def _flatten_sweep(parameters: Dict[str, Any]) -> Dict[str, Any]:
    # sweep files list candidates under `values`; a run takes the first one
    flat = {}
    for key, entry in parameters.items():
        if isinstance(entry, dict) and "value" in entry:
            flat[key] = entry["value"]
        elif isinstance(entry, dict) and "values" in entry:
            values = entry["values"]
            if not values:
                raise ValueError(f"parameters.{key}.values is empty")
            flat[key] = values[0]
        else:
            flat[key] = entry
    return flat


def load_config(path: Optional[Union[str, os.PathLike]]) -> Dict[str, Any]:
    """Read a YAML run configuration.

    Accepts either a plain mapping or a sweep definition
    (`name`/`program`/`method`/`parameters`), in which case the first value
    of every parameter is used.
    """
    if path is None:
        return {}
    with open(path, "r") as stream:
        data = yaml.safe_load(stream)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a mapping, got {type(data).__name__}")
    if "parameters" in data and "program" in data:
        return _flatten_sweep(data["parameters"])
    return data
