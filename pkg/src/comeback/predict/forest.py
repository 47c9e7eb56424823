"""Bagged CART random forest with weighted Gini splits."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .features import class_weights as balanced_weights

DEFAULTS = {"n_trees": 200, "max_depth": 12, "min_leaf": 2}


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # weighted share of class 1 at each node

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            idx = np.flatnonzero(f >= 0)
            if idx.size == 0:
                return node
            cur = node[idx]
            go_left = X[idx, f[idx]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def _best_split(X, y, w, idx, features, mtry, min_leaf):
    """Lowest weighted-Gini split among the first ``mtry`` usable features."""
    best = None
    tried = 0
    wi, yi = w[idx], y[idx]
    total_w = wi.sum()
    total_w1 = wi[yi == 1].sum()
    p = total_w1 / total_w
    parent = total_w * 2 * p * (1 - p)
    n = idx.size
    for f in features:
        if tried >= mtry and best is not None:
            break
        xs = X[idx, f]
        order = np.argsort(xs, kind="mergesort")
        xs = xs[order]
        if xs[0] == xs[-1]:
            continue
        tried += 1
        ws = wi[order]
        cw = np.cumsum(ws)
        cw1 = np.cumsum(ws * yi[order])
        # candidate split after position i: left = [0..i]
        pos = np.arange(min_leaf - 1, n - min_leaf)
        if pos.size == 0:
            continue
        pos = pos[xs[pos] < xs[pos + 1]]
        if pos.size == 0:
            continue
        wl = cw[pos]
        wr = total_w - wl
        pl = cw1[pos] / wl
        pr = (total_w1 - cw1[pos]) / wr
        imp = wl * 2 * pl * (1 - pl) + wr * 2 * pr * (1 - pr)
        k = int(np.argmin(imp))
        if imp[k] < parent - 1e-12 and (best is None or imp[k] < best[0]):
            i = pos[k]
            thr = 0.5 * (xs[i] + xs[i + 1])
            # neighbours one ulp apart: the midpoint can round up onto xs[i+1]
            if thr >= xs[i + 1]:
                thr = xs[i]
            best = (imp[k], f, thr)
    return best


def build_tree(X, y, w, max_depth=12, min_leaf=2, mtry=None, rng=None) -> Tree:
    rng = rng if rng is not None else np.random.default_rng(0)
    n, d = X.shape
    mtry = mtry or max(1, math.ceil(math.sqrt(d)))
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        wi = w[idx]
        value.append(float(wi[y[idx] == 1].sum() / wi.sum()))
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        return len(value) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        v = value[node]
        if depth >= max_depth or idx.size < 2 * min_leaf or v in (0.0, 1.0):
            continue
        features = rng.permutation(d)
        split = _best_split(X, y, w, idx, features, mtry, min_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = int(f), float(thr)
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
    )


@dataclass
class RandomForest:
    trees: list[Tree]

    def predict_proba(self, X) -> np.ndarray:
        """Share of trees voting Comeback; a tree whose leaf is split 50/50 gives half a vote."""
        X = np.asarray(X, dtype=float)
        votes = np.zeros(X.shape[0])
        for t in self.trees:
            v = t.predict_value(X)
            votes += (v > 0.5) + 0.5 * (v == 0.5)
        return votes / len(self.trees)

    def decision_function(self, X) -> np.ndarray:
        return self.predict_proba(X)


def train_random_forest(
    X,
    y,
    n_trees: int = DEFAULTS["n_trees"],
    max_depth: int = DEFAULTS["max_depth"],
    min_leaf: int = DEFAULTS["min_leaf"],
    mtry: int | None = None,
    class_weights: dict[int, float] | str | None = "balanced",
    seed: int = 0,
    threads: int = 1,
) -> RandomForest:
    """Fit ``n_trees`` CART trees on bootstrap resamples.

    Each tree draws from its own child of ``SeedSequence(seed)``, so the
    ensemble does not depend on the thread count.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n, d = X.shape
    if class_weights == "balanced":
        class_weights = balanced_weights(y)
    cw = class_weights or {0: 1.0, 1: 1.0}
    w_all = np.array([cw.get(int(v), 1.0) for v in y])
    mtry = mtry or max(1, math.ceil(math.sqrt(d)))
    children = np.random.SeedSequence(seed).spawn(n_trees)

    def fit_one(ss):
        rng = np.random.default_rng(ss)
        boot = rng.integers(0, n, size=n)
        return build_tree(X[boot], y[boot], w_all[boot], max_depth, min_leaf, mtry, rng)

    if threads <= 1:
        trees = [fit_one(ss) for ss in children]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(fit_one, children))
    return RandomForest(trees)
