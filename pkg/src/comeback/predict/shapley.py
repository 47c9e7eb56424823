"""Exact interventional Shapley values by coalition enumeration.

The value of a coalition S is the model output averaged over a background
sample after overwriting the features in S with the explained instance.
All 2^d coalitions are evaluated, so d is capped.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import ParameterError

MAX_FEATURES = 10


def _masks(d: int) -> np.ndarray:
    return ((np.arange(2 ** d)[:, None] >> np.arange(d)) & 1).astype(bool)


def coalition_values(model: Callable, instances: np.ndarray, background: np.ndarray) -> np.ndarray:
    """v(S) for every coalition (rows) and instance (columns)."""
    inst = np.atleast_2d(np.asarray(instances, dtype=float))
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    n_i, d = inst.shape
    if d > MAX_FEATURES:
        raise ParameterError(f"exact Shapley limited to {MAX_FEATURES} features; sampling mode is not provided")
    if bg.shape[0] == 0:
        raise ParameterError("background sample is empty")
    if bg.shape[1] != d:
        raise ParameterError("background and instance widths differ")
    masks = _masks(d)
    n_b = bg.shape[0]
    values = np.empty((masks.shape[0], n_i))
    for k, mask in enumerate(masks):
        block = np.broadcast_to(bg, (n_i, n_b, d)).copy()
        block[:, :, mask] = inst[:, None, mask]
        out = np.asarray(model(block.reshape(n_i * n_b, d)), dtype=float)
        values[k] = out.reshape(n_i, n_b).mean(axis=1)
    return values


def shapley_attributions(model: Callable, instance, background) -> np.ndarray:
    """Per-feature Shapley values; rows follow ``instance`` rows if 2-D."""
    inst = np.asarray(instance, dtype=float)
    single = inst.ndim == 1
    inst = np.atleast_2d(inst)
    d = inst.shape[1]
    v = coalition_values(model, inst, background)
    masks = _masks(d)
    sizes = masks.sum(axis=1)
    weight = np.array([math.factorial(s) * math.factorial(d - s - 1) / math.factorial(d) if s < d else 0.0
                       for s in sizes])
    phi = np.zeros((inst.shape[0], d))
    index = {tuple(m): k for k, m in enumerate(masks)}
    for k, mask in enumerate(masks):
        for i in np.flatnonzero(~mask):
            with_i = mask.copy()
            with_i[i] = True
            phi[:, i] += weight[k] * (v[index[tuple(with_i)]] - v[k])
    return phi[0] if single else phi


def expected_value(model: Callable, background) -> float:
    return float(np.mean(model(np.atleast_2d(np.asarray(background, dtype=float)))))
