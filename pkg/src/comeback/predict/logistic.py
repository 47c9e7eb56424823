"""L2-regularized, class-weighted logistic regression fitted by damped Newton."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

log = logging.getLogger(__name__)


@dataclass
class LogisticModel:
    w: np.ndarray
    b: float
    converged: bool
    n_iter: int
    loss_history: list[float] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w + self.b

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(X))


def _loss(w, b, X, y, s, l2):
    z = X @ w + b
    # log(1 + exp(-|z|)) + max(z, 0) - y z, the stable form of the NLL
    nll = np.logaddexp(0.0, z) - y * z
    return float(s @ nll + 0.5 * l2 * (w @ w))


def logistic_loss(w, b, X, y, sample_weight=None, l2_strength=1.0) -> float:
    """Weighted negative log-likelihood plus ``l2/2 * |w|^2`` (intercept unpenalized)."""
    X = np.asarray(X, dtype=float)
    s = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    return _loss(np.asarray(w, dtype=float), float(b), X, np.asarray(y, dtype=float), s, l2_strength)


def logistic_gradient(w, b, X, y, sample_weight=None, l2_strength=1.0) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    r = s * (expit(X @ w + b) - y)
    return np.concatenate([X.T @ r + l2_strength * np.asarray(w), [r.sum()]])


def train_logistic(
    X,
    y,
    sample_weight=None,
    l2_strength: float = 1.0,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> LogisticModel:
    """Minimize the weighted penalized NLL to gradient norm <= ``tol``.

    Also stops, as converged, once the Newton decrement falls to rounding
    level relative to the loss, where ``tol`` may be out of reach.

    Newton steps are halved until the loss does not increase, so the loss
    history is monotone.  On hitting ``max_iter`` the last iterate is
    returned with ``converged=False``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    s = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    theta = np.zeros(d + 1)
    Xa = np.hstack([X, np.ones((n, 1))])
    reg = np.full(d + 1, l2_strength)
    reg[-1] = 0.0
    loss = _loss(theta[:d], theta[d], X, y, s, l2_strength)
    history = [loss]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(Xa @ theta)
        grad = Xa.T @ (s * (p - y)) + reg * theta
        if np.linalg.norm(grad) <= tol:
            converged = True
            it -= 1
            break
        h = Xa.T @ (Xa * (s * p * (1 - p))[:, None]) + np.diag(reg)
        # tiny ridge keeps the system solvable on separable or constant data
        h += 1e-10 * np.eye(d + 1)
        step = np.linalg.solve(h, grad)
        # Newton decrement at rounding level: the loss cannot improve further
        if 0.5 * float(grad @ step) <= 1e-14 * max(1.0, abs(loss)):
            converged = True
            break
        t = 1.0
        while True:
            cand = theta - t * step
            new_loss = _loss(cand[:d], cand[d], X, y, s, l2_strength)
            if new_loss <= loss or t < 1e-10:
                break
            t *= 0.5
        if new_loss > loss:
            break
        theta, loss = cand, new_loss
        history.append(loss)
    else:
        p = expit(Xa @ theta)
        grad = Xa.T @ (s * (p - y)) + reg * theta
        converged = bool(np.linalg.norm(grad) <= tol)
    if not converged:
        log.warning("logistic regression stopped after %d iterations without reaching tol", it)
    return LogisticModel(theta[:d].copy(), float(theta[d]), converged, it, history)
