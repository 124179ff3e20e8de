"""Flat-array decision trees: the shared substrate of both surrogate ensembles.

Trees are stored as parallel node arrays (feature, threshold, left, right,
payload) so they serialize to JSON directly and batch prediction can walk
many trees for many rows at once with vectorized index chasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LEAF = -1
_MIN_GAIN = 1e-12


@dataclass
class FlatTree:
    """One decision tree in flattened form.

    ``feature[i] == -1`` marks node i as a leaf. ``value`` holds the leaf
    payload used for prediction (mean target for regression, majority class
    for classification); classification trees additionally carry the full
    per-leaf class histogram in ``counts``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    counts: np.ndarray | None = None

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cur = np.zeros(X.shape[0], dtype=np.int64)
        todo = np.flatnonzero(self.feature[cur] >= 0)
        while todo.size:
            c = cur[todo]
            go_left = X[todo, self.feature[c]] <= self.threshold[c]
            cur[todo] = np.where(go_left, self.left[c], self.right[c])
            todo = todo[self.feature[cur[todo]] >= 0]
        return self.value[cur]

    def to_dict(self) -> dict:
        payload = {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }
        if self.counts is not None:
            payload["counts"] = self.counts.tolist()
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "FlatTree":
        counts = payload.get("counts")
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int64),
            threshold=np.asarray(payload["threshold"], dtype=float),
            left=np.asarray(payload["left"], dtype=np.int64),
            right=np.asarray(payload["right"], dtype=np.int64),
            value=np.asarray(payload["value"], dtype=float),
            counts=None if counts is None else np.asarray(counts, dtype=np.int64),
        )


@dataclass
class TreeEnsemble:
    """All trees of an ensemble stacked into one node table for fast eval."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    roots: np.ndarray

    @classmethod
    def stack(cls, trees: list[FlatTree]) -> "TreeEnsemble":
        roots = []
        offset = 0
        feats, thrs, lefts, rights, values = [], [], [], [], []
        for t in trees:
            roots.append(offset)
            feats.append(t.feature)
            thrs.append(t.threshold)
            # child pointers of leaves are -1; keep them out of the offset shift
            internal = t.feature >= 0
            lefts.append(np.where(internal, t.left + offset, 0))
            rights.append(np.where(internal, t.right + offset, 0))
            values.append(t.value)
            offset += t.n_nodes
        return cls(
            feature=np.concatenate(feats),
            threshold=np.concatenate(thrs),
            left=np.concatenate(lefts),
            right=np.concatenate(rights),
            value=np.concatenate(values),
            roots=np.asarray(roots, dtype=np.int64),
        )

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """Leaf payloads per (row, tree): shape (n_rows, n_trees)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        t = self.roots.size
        cur = np.tile(self.roots, n)
        rows = np.repeat(np.arange(n), t)
        todo = np.flatnonzero(self.feature[cur] >= 0)
        while todo.size:
            c = cur[todo]
            go_left = X[rows[todo], self.feature[c]] <= self.threshold[c]
            cur[todo] = np.where(go_left, self.left[c], self.right[c])
            todo = todo[self.feature[cur[todo]] >= 0]
        return self.value[cur].reshape(n, t)


@dataclass
class _Builder:
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    counts: list = field(default_factory=list)

    def add(self, value: float, counts=None) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        if counts is not None:
            self.counts.append(counts)
        return len(self.feature) - 1

    def finish(self, with_counts: bool) -> FlatTree:
        return FlatTree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=float),
            counts=np.asarray(self.counts, dtype=np.int64) if with_counts else None,
        )


def _regression_split(v, y, min_leaf):
    """Best threshold for one feature by exact SSE scan; None if no valid cut."""
    order = np.argsort(v, kind="stable")
    sv = v[order]
    sy = y[order]
    n = v.size
    csum = np.cumsum(sy)
    csq = np.cumsum(sy * sy)
    p = np.arange(min_leaf - 1, n - min_leaf)
    if p.size == 0:
        return None
    distinct = sv[p] < sv[p + 1]
    p = p[distinct]
    if p.size == 0:
        return None
    nl = p + 1.0
    nr = n - nl
    sl = csum[p]
    sr = csum[-1] - sl
    sse_children = (csq[p] - sl * sl / nl) + (csq[-1] - csq[p] - sr * sr / nr)
    best = int(np.argmin(sse_children))
    parent_sse = csq[-1] - csum[-1] ** 2 / n
    gain = parent_sse - sse_children[best]
    threshold = 0.5 * (sv[p[best]] + sv[p[best] + 1])
    return gain, threshold


def _gini_split(v, onehot, min_leaf):
    """Best threshold for one feature by weighted Gini decrease."""
    order = np.argsort(v, kind="stable")
    sv = v[order]
    so = onehot[order]
    n = v.size
    cum = np.cumsum(so, axis=0).astype(float)
    p = np.arange(min_leaf - 1, n - min_leaf)
    if p.size == 0:
        return None
    distinct = sv[p] < sv[p + 1]
    p = p[distinct]
    if p.size == 0:
        return None
    total = cum[-1]
    cl = cum[p]
    cr = total - cl
    nl = (p + 1.0)[:, None]
    nr = n - nl
    children = (nl[:, 0] - (cl * cl / nl).sum(axis=1)) + (
        nr[:, 0] - (cr * cr / nr).sum(axis=1)
    )
    best = int(np.argmin(children))
    parent = n - float((total * total).sum()) / n
    gain = parent - children[best]
    threshold = 0.5 * (sv[p[best]] + sv[p[best] + 1])
    return gain, threshold


def grow_regression_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    max_depth: int,
    gamma: float,
    min_samples_leaf: int = 1,
) -> FlatTree:
    """Least-squares tree; a split is kept only if its SSE reduction clears gamma."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    builder = _Builder()
    root = builder.add(float(y.mean()))
    stack = [(root, np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        if depth >= max_depth or idx.size < 2 * min_samples_leaf or idx.size < 2:
            continue
        best = None
        for f in range(X.shape[1]):
            cand = _regression_split(X[idx, f], yn, min_samples_leaf)
            if cand is not None and (best is None or cand[0] > best[0]):
                best = (cand[0], f, cand[1])
        if best is None or best[0] < gamma or best[0] <= _MIN_GAIN:
            continue
        _, f, thr = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        builder.feature[node] = f
        builder.threshold[node] = float(thr)
        builder.left[node] = builder.add(float(y[li].mean()))
        builder.right[node] = builder.add(float(y[ri].mean()))
        stack.append((builder.right[node], ri, depth + 1))
        stack.append((builder.left[node], li, depth + 1))
    return builder.finish(with_counts=False)


def grow_classification_tree(
    X: np.ndarray,
    y_idx: np.ndarray,
    n_classes: int,
    rng: np.random.Generator,
    *,
    min_samples_leaf: int,
    min_samples_split: int,
    max_features: int,
) -> FlatTree:
    """Gini tree with a fresh random feature subset drawn at every split.

    ``y_idx`` holds class indices in [0, n_classes). Leaf prediction is the
    histogram argmax with ties broken toward the higher class index.
    """
    X = np.asarray(X, dtype=float)
    y_idx = np.asarray(y_idx, dtype=np.int64)
    onehot = np.eye(n_classes, dtype=np.int64)[y_idx]
    builder = _Builder()

    def leaf_payload(idx):
        counts = onehot[idx].sum(axis=0)
        # tie toward the higher (worse) class
        best = n_classes - 1 - int(np.argmax(counts[::-1]))
        return float(best), counts

    root = builder.add(*leaf_payload(np.arange(y_idx.size)))
    stack = [(root, np.arange(y_idx.size))]
    d = X.shape[1]
    while stack:
        node, idx = stack.pop()
        if idx.size < min_samples_split or idx.size < 2 * min_samples_leaf:
            continue
        if np.unique(y_idx[idx]).size == 1:
            continue
        feats = rng.choice(d, size=min(max_features, d), replace=False)
        sub = onehot[idx]
        best = None
        for f in feats:
            cand = _gini_split(X[idx, f], sub, min_samples_leaf)
            if cand is not None and (best is None or cand[0] > best[0]):
                best = (cand[0], int(f), cand[1])
        if best is None or best[0] <= _MIN_GAIN:
            continue
        _, f, thr = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        builder.feature[node] = f
        builder.threshold[node] = float(thr)
        lv, lc = leaf_payload(li)
        rv, rc = leaf_payload(ri)
        builder.left[node] = builder.add(lv, lc)
        builder.right[node] = builder.add(rv, rc)
        stack.append((builder.right[node], ri))
        stack.append((builder.left[node], li))
    return builder.finish(with_counts=True)
