"""Test data: seeded random instances and surrogates of small LIBSVM sets.

Real files are used instead when ``$SACD_DATA_DIR`` holds them (``leu``,
``duke``, ``w1a`` in LIBSVM format, optionally compressed).
"""

import os
from pathlib import Path

import numpy as np

from sacd import LabeledDataset, load_libsvm
from sacd.datasets import DATA_DIR_ENV

# (rows, cols, density, binary features)
SHAPES = {
    "leu": (38, 7129, 1.0, False),
    "duke": (44, 7129, 1.0, False),
    "w1a": (300, 2477, 0.04, True),
}
SEEDS = {"leu": 11, "duke": 12, "w1a": 13}
FEATURES = {"leu": 7129, "duke": 7129, "w1a": 2477}


def random_dense(rng, m, n, density=0.5, zero_cols=0):
    A = rng.standard_normal((m, n))
    A[rng.random((m, n)) >= density] = 0.0
    if zero_cols:
        A[:, rng.choice(n, zero_cols, replace=False)] = 0.0
    return A


def random_lasso(seed, m, n, density=0.6, zero_cols=0):
    rng = np.random.default_rng(seed)
    A = random_dense(rng, m, n, density, zero_cols)
    b = rng.standard_normal(m)
    return LabeledDataset.from_dense(A, b, name=f"rand{seed}")


def random_svm(seed, m, n, density=0.6, separable=False, margin=1.0):
    rng = np.random.default_rng(seed)
    A = random_dense(rng, m, n, density)
    if separable:
        w = rng.standard_normal(n)
        w /= np.linalg.norm(w)
        labels = np.where(A @ w >= 0.0, 1.0, -1.0)
        A = A + margin * labels[:, None] * w  # every point clears the margin
    else:
        labels = rng.choice([-1.0, 1.0], size=m)
    return LabeledDataset.from_dense(A, labels, name=f"svm{seed}")


def lasso_lambda(dataset, frac=0.1):
    """A fraction of the smallest lambda that zeroes the solution."""
    return frac * float(np.abs(dataset.A.to_dense().T @ dataset.labels).max())


def surrogate(name):
    """Dataset shaped like the named LIBSVM set (or the real file if present)."""
    real = _real_file(name)
    if real is not None:
        return load_libsvm(real, FEATURES[name])
    m, n, density, binary = SHAPES[name]
    rng = np.random.default_rng(SEEDS[name])
    if binary:
        A = (rng.random((m, n)) < density).astype(float)
    else:
        A = rng.standard_normal((m, n)) * rng.uniform(0.1, 3.0, size=n)
    w = rng.standard_normal(n) * (rng.random(n) < 0.02)
    score = A @ w
    score[score == 0.0] = 1.0
    labels = np.sign(score)
    return LabeledDataset.from_dense(A, labels, name=f"{name}-like")


def _real_file(name):
    root = os.environ.get(DATA_DIR_ENV)
    if not root:
        return None
    for suffix in ("", ".bz2", ".gz", ".txt"):
        p = Path(root) / f"{name}{suffix}"
        if p.exists():
            return p
    return None
