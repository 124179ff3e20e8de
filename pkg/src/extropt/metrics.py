"""Validation metrics and cross-validation splits for the surrogate models."""

from __future__ import annotations

import math

import numpy as np

from .errors import InsufficientDataError, UndefinedCorrelationError


def confusion_matrix(truth, pred, classes) -> np.ndarray:
    """Count matrix with truth on rows and predictions on columns."""
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    if truth.shape != pred.shape:
        raise ValueError("truth and pred must have the same length")
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(truth, pred):
        out[index[t], index[p]] += 1
    return out


def f1_score(pred, truth) -> float:
    """Macro-averaged F1 over the classes present in either vector.

    A class absent from both pred and truth is excluded from the average;
    a class with zero precision+recall contributes an F1 of 0.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have the same length")
    if pred.size == 0:
        raise InsufficientDataError("f1_score needs at least one label")
    classes = np.union1d(pred, truth)
    scores = []
    for c in classes:
        tp = int(np.sum((pred == c) & (truth == c)))
        fp = int(np.sum((pred == c) & (truth != c)))
        fn = int(np.sum((pred != c) & (truth == c)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if precision + recall == 0.0:
            scores.append(0.0)
        else:
            scores.append(2.0 * precision * recall / (precision + recall))
    return float(np.mean(scores))


class _Fenwick:
    """Binary indexed tree over rank positions, used for pair counting."""

    def __init__(self, size: int):
        self.tree = [0] * (size + 1)

    def add(self, i: int) -> None:
        i += 1
        while i < len(self.tree):
            self.tree[i] += 1
            i += i & (-i)

    def count_leq(self, i: int) -> int:
        i += 1
        total = 0
        while i > 0:
            total += self.tree[i]
            i -= i & (-i)
        return total


def _tie_pairs(values: np.ndarray) -> int:
    _, counts = np.unique(values, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def kendall_tau(a, b) -> float:
    """Tie-adjusted (tau-b) Kendall rank correlation.

    Concordant/discordant pairs are counted with a Fenwick tree over the
    ranks of ``b`` while scanning in ``a`` order, so the cost is O(n log n)
    rather than the O(n^2) of direct pair enumeration.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be equal-length 1-D sequences")
    n = a.size
    if n < 2:
        raise InsufficientDataError("kendall_tau needs at least two values")

    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(a)
    n2 = _tie_pairs(b)
    d1 = n0 - n1
    d2 = n0 - n2
    if d1 == 0 or d2 == 0:
        raise UndefinedCorrelationError("correlation undefined for constant input")

    order = np.lexsort((b, a))
    b_rank = {v: r for r, v in enumerate(np.unique(b))}
    tree = _Fenwick(len(b_rank))
    concordant = 0
    discordant = 0
    inserted = 0
    i = 0
    while i < n:
        j = i
        while j < n and a[order[j]] == a[order[i]]:
            j += 1
        # pairs inside [i, j) are ties in a: neither concordant nor discordant
        for k in range(i, j):
            r = b_rank[b[order[k]]]
            leq = tree.count_leq(r)
            less = tree.count_leq(r - 1) if r > 0 else 0
            concordant += less
            discordant += inserted - leq
        for k in range(i, j):
            tree.add(b_rank[b[order[k]]])
            inserted += 1
        i = j

    return (concordant - discordant) / math.sqrt(d1 * d2)


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint (train, validation) index splits preserving class proportions.

    Indices of each class are shuffled once and dealt round-robin, so every
    fold's class counts are within one row of the global proportions.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=np.int64)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < k:
            raise InsufficientDataError(
                f"class {c!r} has {idx.size} rows, fewer than k={k}"
            )
        rng.shuffle(idx)
        fold_of[idx] = np.arange(idx.size) % k
    splits = []
    everything = np.arange(labels.size)
    for f in range(k):
        val = everything[fold_of == f]
        train = everything[fold_of != f]
        splits.append((train, val))
    return splits
