"""Platt scaling: a sigmoid fitted to held-out classifier scores.

Follows the Lin, Lin & Weng (2007) formulation of Platt's method: smoothed
targets ``(N+ + 1)/(N+ + 2)`` and ``1/(N- + 2)``, Newton iterations with
backtracking on the cross-entropy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import DataError


@dataclass(frozen=True)
class PlattScaler:
    A: float
    B: float

    def __call__(self, scores) -> np.ndarray:
        # P(y=1 | s) = 1 / (1 + exp(A s + B))
        return expit(-(self.A * np.asarray(scores, dtype=float) + self.B))


def _objective(A, B, s, t):
    f = A * s + B
    return float(np.sum(np.logaddexp(0.0, f) - (1.0 - t) * f))


def platt_calibrate(scores, labels, max_iter: int = 100, min_step: float = 1e-10, sigma: float = 1e-12) -> PlattScaler:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("Platt scaling needs both classes in the calibration set")
    hi = (n_pos + 1.0) / (n_pos + 2.0)
    lo = 1.0 / (n_neg + 2.0)
    t = np.where(y == 1, hi, lo)
    A, B = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = _objective(A, B, s, t)
    for _ in range(max_iter):
        p = expit(-(A * s + B))
        d1 = t - p
        d2 = p * (1.0 - p)
        g1, g2 = float(s @ d1), float(d1.sum())
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        h11 = float(s * s @ d2) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float(s @ d2)
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            nA, nB = A + step * dA, B + step * dB
            nf = _objective(nA, nB, s, t)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2.0
        else:
            break
    return PlattScaler(float(A), float(B))
