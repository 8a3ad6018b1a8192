"""CART decision tree with Gini impurity and axis-aligned splits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True, eq=False)
class TreeParams:
    # flat node arrays; feature == LEAF marks a leaf holding ``value``
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.int64),
        )

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_parameters(self) -> int:
        return 2 * self.n_nodes

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] == LEAF:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)


def _gini_sum(c1: np.ndarray, n: np.ndarray) -> np.ndarray:
    # n * gini for a node with c1 positives out of n
    return 2.0 * c1 * (n - c1) / n


def best_split(Z: np.ndarray, y: np.ndarray, min_leaf: int):
    """Lowest weighted Gini; ties go to the lowest feature index, then lowest threshold."""
    n = y.size
    best = None
    best_score = _gini_sum(np.array(float(y.sum())), np.array(float(n)))
    for f in range(Z.shape[1]):
        order = np.argsort(Z[:, f], kind="stable")
        xs, ys = Z[order, f], y[order]
        left_n = np.arange(1, n, dtype=float)
        left_pos = np.cumsum(ys)[:-1].astype(float)
        right_n = n - left_n
        right_pos = ys.sum() - left_pos
        ok = (xs[:-1] < xs[1:]) & (left_n >= min_leaf) & (right_n >= min_leaf)
        if not ok.any():
            continue
        score = _gini_sum(left_pos, left_n) + _gini_sum(right_pos, right_n)
        score = np.where(ok, score, np.inf)
        i = int(np.argmin(score))
        if score[i] < best_score:
            best_score = score[i]
            best = (f, 0.5 * (xs[i] + xs[i + 1]))
    return best


def fit(Z: np.ndarray, y: np.ndarray, max_depth: int = 8, min_leaf: int = 5) -> TreeParams:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for arr, v in ((feature, LEAF), (threshold, 0.0), (left, LEAF), (right, LEAF), (value, 0)):
            arr.append(v)
        return len(feature) - 1

    def grow(idx: np.ndarray, depth: int) -> int:
        node = new_node()
        ys = y[idx]
        pos = int(ys.sum())
        value[node] = 1 if pos * 2 > ys.size else 0
        if depth >= max_depth or pos in (0, ys.size) or ys.size < 2 * min_leaf:
            return node
        split = best_split(Z[idx], ys, min_leaf)
        if split is None:
            return node
        f, thr = split
        go_left = Z[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(y.size), 0)
    return TreeParams(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.int64),
    )


def predict(params: TreeParams, Z: np.ndarray) -> np.ndarray:
    out = np.empty(Z.shape[0], dtype=np.int64)
    for i, z in enumerate(Z):
        node = 0
        while params.feature[node] != LEAF:
            node = params.left[node] if z[params.feature[node]] <= params.threshold[node] else params.right[node]
        out[i] = params.value[node]
    return out
