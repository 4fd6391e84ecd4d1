"""SMOTE oversampling of the minority class."""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .._rng import derive_rng
from ..errors import ResamplingError


@dataclass
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must lie in (0, 1]")


@dataclass
class SmoteResult:
    synthetic: np.ndarray
    parents: np.ndarray  # (n_synthetic, 2) minority row indices: base row, neighbour
    gaps: np.ndarray  # interpolation factors u


def nearest_neighbors(x, k):
    """Indices of the ``k`` nearest other rows (Euclidean), ties broken by index."""
    if sp.issparse(x):
        x = sp.csr_matrix(x)
        sq = np.asarray(x.multiply(x).sum(axis=1)).ravel()
        gram = (x @ x.T).toarray()
    else:
        sq = np.einsum("ij,ij->i", x, x)
        gram = x @ x.T
    d2 = sq[:, None] + sq[None, :] - 2 * gram
    np.fill_diagonal(d2, np.inf)
    d2 = np.maximum(d2, 0)
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k]


def smote(x_minority, cfg, n_synthetic, rng=None, gap_hook=None):
    """Interpolate ``n_synthetic`` rows between minority rows and their neighbours.

    ``gap_hook`` fixes every interpolation factor (0 reproduces the base row,
    1 the neighbour); it exists for tests.
    """
    n = x_minority.shape[0]
    if n <= cfg.k_neighbors:
        raise ResamplingError(f"SMOTE needs more than {cfg.k_neighbors} minority rows, got {n}")
    if n_synthetic < 0:
        raise ValueError("n_synthetic must be >= 0")
    rng = rng if rng is not None else derive_rng(cfg.seed, "smote")
    # neighbour search stays sparse; TF-IDF rows are far too wide to multiply densely
    nn = nearest_neighbors(x_minority if sp.issparse(x_minority) else np.asarray(x_minority, dtype=float), cfg.k_neighbors)
    x = x_minority.toarray() if sp.issparse(x_minority) else np.asarray(x_minority, dtype=float)
    base = rng.integers(0, n, size=n_synthetic)
    pick = rng.integers(0, cfg.k_neighbors, size=n_synthetic)
    gaps = rng.random(n_synthetic) if gap_hook is None else np.full(n_synthetic, float(gap_hook))
    neigh = nn[base, pick]
    synth = x[base] + gaps[:, None] * (x[neigh] - x[base])
    return SmoteResult(synth, np.stack([base, neigh], axis=1), gaps)


def balance(x, y, cfg, rng=None):
    """Oversample the minority class of binary ``y`` up to ``target_ratio`` of the majority.

    Returns ``(x_out, y_out, result)``; synthetic rows are appended after the
    originals, and ``result`` is None when nothing was added.
    """
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        return x, y, None
    minority = classes[np.argmin(counts)] if counts[0] != counts[1] else None
    if minority is None:
        return x, y, None
    n_min, n_maj = counts.min(), counts.max()
    n_new = int(round(cfg.target_ratio * n_maj)) - int(n_min)
    if n_new <= 0:
        return x, y, None
    idx = np.flatnonzero(y == minority)
    res = smote(x[idx], cfg, n_new, rng=rng)
    if sp.issparse(x):
        x_out = sp.vstack([x, sp.csr_matrix(res.synthetic)], format="csr")
    else:
        x_out = np.vstack([x, res.synthetic])
    y_out = np.concatenate([y, np.full(n_new, minority, dtype=y.dtype)])
    return x_out, y_out, res
