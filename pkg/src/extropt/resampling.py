"""Class rebalancing: SMOTE oversampling followed by Tomek-link cleaning."""

from __future__ import annotations

import numpy as np

from .errors import InsufficientDataError


def _pairwise_sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    aa = (A * A).sum(axis=1)[:, None]
    bb = (B * B).sum(axis=1)[None, :]
    d = aa + bb - 2.0 * (A @ B.T)
    np.maximum(d, 0.0, out=d)
    return d


def smote_oversample(
    X: np.ndarray,
    y: np.ndarray,
    target_classes=None,
    k: int = 5,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Equalize minority class counts to the majority count.

    Each synthetic row is a convex combination x + u * (x_nn - x) between a
    random minority row and one of its k nearest same-class neighbours,
    with u drawn uniformly from [0, 1).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    majority_count = int(counts.max())
    if target_classes is None:
        target_classes = {c for c, n in zip(classes, counts) if n < majority_count}
    rng = np.random.default_rng(seed)

    new_X = [X]
    new_y = [y]
    for c in sorted(target_classes):
        idx = np.flatnonzero(y == c)
        need = majority_count - idx.size
        if need <= 0:
            continue
        if idx.size < k + 1:
            raise InsufficientDataError(
                f"class {c!r} has {idx.size} rows; SMOTE with k={k} needs at least {k + 1}"
            )
        Xc = X[idx]
        d = _pairwise_sq_dists(Xc, Xc)
        np.fill_diagonal(d, np.inf)
        neighbours = np.argsort(d, axis=1, kind="stable")[:, :k]
        base = rng.integers(0, idx.size, size=need)
        pick = rng.integers(0, k, size=need)
        u = rng.uniform(0.0, 1.0, size=need)
        anchors = Xc[base]
        partners = Xc[neighbours[base, pick]]
        synthetic = anchors + u[:, None] * (partners - anchors)
        new_X.append(synthetic)
        new_y.append(np.full(need, c, dtype=y.dtype))

    return np.vstack(new_X), np.concatenate(new_y)


def tomek_undersample(
    X: np.ndarray,
    y: np.ndarray,
    majority_class=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Drop majority-class members of Tomek links.

    A Tomek link is a pair of mutual nearest neighbours with different
    labels. Only rows of the majority class are ever removed; when not
    given, the majority class is the most frequent label with ties broken
    toward the higher label (the worse feasibility class).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise InsufficientDataError("Tomek cleaning needs at least two classes")
    if majority_class is None:
        top = counts.max()
        majority_class = classes[counts == top].max()

    d = _pairwise_sq_dists(X, X)
    np.fill_diagonal(d, np.inf)
    nn = np.argmin(d, axis=1)
    i = np.arange(y.size)
    mutual = nn[nn] == i
    link = mutual & (y != y[nn])
    drop = link & (y == majority_class) & (y[nn] != majority_class)
    keep = ~drop
    return X[keep], y[keep]


def smote_tomek(
    X: np.ndarray,
    y: np.ndarray,
    k: int = 5,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Rebalancing pipeline in the order oversample-then-clean.

    The majority class handed to the Tomek step is fixed before SMOTE runs,
    so cleaning never touches original or synthetic minority rows.
    """
    y_arr = np.asarray(y)
    classes, counts = np.unique(y_arr, return_counts=True)
    majority = classes[counts == counts.max()].max()
    X2, y2 = smote_oversample(X, y_arr, k=k, seed=seed)
    return tomek_undersample(X2, y2, majority_class=majority)
