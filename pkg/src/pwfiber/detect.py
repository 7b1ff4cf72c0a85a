"""Symbol detection: minimum-distance baseline and the Parzen-window classifier.

Both detectors follow the scikit-learn estimator protocol (``fit`` /
``predict`` / ``get_params``) so they compose with the wider ecosystem;
inputs are complex symbol arrays (or real (n, 2) I/Q arrays).

The Parzen-window decision sums inverse-distance weights of the labeled
received training symbols that fall inside a radius-R window around each
test symbol and picks the cluster with the largest sum. Because it is
trained on *received* symbols, it needs no phase alignment: a common
rotation of training and test sets leaves all pairwise distances unchanged.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .constellation import Constellation, labels_to_bits
from .validation import as_complex_symbols, as_labels

ZERO_DISTANCE_WEIGHT = 1e12


def window_weight(distance, radius: float,
                  zero_distance_weight: float = ZERO_DISTANCE_WEIGHT):
    """Inverse-distance window: 1/d inside (0, R], capped at d = 0, else 0."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    d = np.asarray(distance, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    with np.errstate(divide="ignore"):
        w = np.where(d > 0, 1.0 / np.maximum(d, np.finfo(np.float64).tiny),
                     zero_distance_weight)
    w = np.minimum(w, zero_distance_weight)
    return np.where(d <= radius, w, 0.0)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Labeled received training symbols for one polarization."""

    symbols: np.ndarray = field(repr=False)   # (T,) complex128
    labels: np.ndarray = field(repr=False)    # (T,) int, 1..M

    def __post_init__(self):
        object.__setattr__(self, "symbols", as_complex_symbols(self.symbols, "symbols"))
        object.__setattr__(self, "labels",
                           as_labels(self.labels, n=self.symbols.size, name="labels"))
        m = int(self.labels.max())
        if self.symbols.size < m:
            warnings.warn(f"only {self.symbols.size} training symbols for "
                          f"{m} clusters; expect degenerate windows", stacklevel=3)

    @property
    def size(self) -> int:
        return self.symbols.size

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max())


@dataclass(frozen=True, eq=False)
class DetectionResult:
    """Estimated labels plus per-symbol diagnostics."""

    labels: np.ndarray                 # (n,) int, 1..M
    metric: np.ndarray = field(repr=False)    # winning cluster metric per symbol
    fallback: np.ndarray = field(repr=False)  # True where the window was empty

    @property
    def fallback_count(self) -> int:
        return int(np.count_nonzero(self.fallback))


class MinimumDistanceDetector(BaseEstimator, ClassifierMixin):
    """Nearest-constellation-point decision; ties go to the lowest label.

    Expects unit-mean-power, phase-aligned symbols. ``fit`` is stateless and
    exists for pipeline compatibility.
    """

    def __init__(self, constellation: Constellation = None):
        self.constellation = constellation

    def fit(self, X=None, y=None):
        if self.constellation is None:
            raise ValueError("MinimumDistanceDetector requires a constellation")
        return self

    def detect(self, X) -> DetectionResult:
        self.fit()
        y = as_complex_symbols(X)
        d = np.abs(y[:, None] - self.constellation.points[None, :])
        idx = np.argmin(d, axis=1)           # first minimum = lowest label
        return DetectionResult(labels=idx + 1,
                               metric=d[np.arange(y.size), idx],
                               fallback=np.zeros(y.size, dtype=bool))

    def predict(self, X) -> np.ndarray:
        return self.detect(X).labels


class ParzenWindowDetector(BaseEstimator, ClassifierMixin):
    """Parzen-window classifier over labeled received training symbols.

    Parameters
    ----------
    radius : float
        Window radius R in the normalized symbol plane.
    zero_distance_weight : float
        Finite stand-in for the singular 1/d weight at d = 0.
    fallback : str
        Policy when no training symbol falls inside the window. Only
        "nearest" (label of the globally closest training symbol) is
        implemented; occurrences are flagged in the result.
    chunk_size : int
        Test symbols processed per block, bounding the distance-matrix
        memory.
    """

    def __init__(self, radius: float = 0.3,
                 zero_distance_weight: float = ZERO_DISTANCE_WEIGHT,
                 fallback: str = "nearest", chunk_size: int = 4096):
        self.radius = radius
        self.zero_distance_weight = zero_distance_weight
        self.fallback = fallback
        self.chunk_size = chunk_size

    def fit(self, X, y):
        """Store the labeled training symbols (no optimization happens)."""
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.fallback != "nearest":
            raise ValueError(f"unknown fallback policy {self.fallback!r}")
        self.training_ = X if isinstance(X, TrainingSet) else TrainingSet(
            symbols=as_complex_symbols(X), labels=np.asarray(y))
        self.classes_ = np.arange(1, self.training_.n_clusters + 1)
        return self

    def _check_fitted(self):
        if not hasattr(self, "training_"):
            raise NotFittedError("ParzenWindowDetector must be fitted before use")

    def detect(self, X) -> DetectionResult:
        self._check_fitted()
        labels, metric, fallback = _pw_classify(
            as_complex_symbols(X), self.training_, [self.radius],
            self.zero_distance_weight, self.chunk_size)
        return DetectionResult(labels=labels[0], metric=metric[0], fallback=fallback[0])

    def predict(self, X) -> np.ndarray:
        return self.detect(X).labels

    def decision_function(self, X) -> np.ndarray:
        """Cluster metric matrix L of shape (n_symbols, n_clusters)."""
        self._check_fitted()
        y = as_complex_symbols(X)
        train = self.training_
        full = np.zeros((y.size, train.n_clusters))
        onehot = _onehot(train)
        for lo in range(0, y.size, self.chunk_size):
            chunk = y[lo:lo + self.chunk_size]
            d = np.abs(chunk[:, None] - train.symbols[None, :])
            w = window_weight(d, self.radius, self.zero_distance_weight)
            full[lo:lo + self.chunk_size] = w @ onehot
        return full


def _onehot(train: TrainingSet) -> np.ndarray:
    onehot = np.zeros((train.size, train.n_clusters))
    onehot[np.arange(train.size), train.labels - 1] = 1.0
    return onehot


def _pw_classify(test: np.ndarray, train: TrainingSet, radii,
                 zero_distance_weight: float, chunk_size: int):
    """Classify against several radii while computing distances only once."""
    n, n_r = test.size, len(radii)
    labels = np.empty((n_r, n), dtype=np.int64)
    metric = np.empty((n_r, n))
    fallback = np.empty((n_r, n), dtype=bool)
    onehot = _onehot(train)
    for lo in range(0, n, chunk_size):
        chunk = test[lo:lo + chunk_size]
        sl = slice(lo, lo + chunk.size)
        d = np.abs(chunk[:, None] - train.symbols[None, :])
        nearest = train.labels[np.argmin(d, axis=1)]
        for i, r in enumerate(radii):
            w = window_weight(d, r, zero_distance_weight)
            scores = w @ onehot
            best = np.argmax(scores, axis=1)  # first maximum = lowest label
            top = scores[np.arange(chunk.size), best]
            empty = top == 0.0
            labels[i, sl] = np.where(empty, nearest, best + 1)
            metric[i, sl] = top
            fallback[i, sl] = empty
    return labels, metric, fallback


def optimize_window(holdout_symbols, holdout_labels, train: TrainingSet,
                    r_grid, constellation: Constellation) -> float:
    """Pick the grid radius with the lowest holdout BER (ties: smallest R).

    The holdout must be disjoint from the training symbols; minimizing BER
    is equivalent to maximizing the Q factor.
    """
    r_grid = [float(r) for r in r_grid]
    if not r_grid:
        raise ValueError("r_grid is empty")
    if any(r <= 0 for r in r_grid):
        raise ValueError("all radii must be positive")
    symbols = as_complex_symbols(holdout_symbols, "holdout_symbols")
    truth = as_labels(holdout_labels, n=symbols.size, n_clusters=constellation.order,
                      name="holdout_labels")
    order = np.argsort(r_grid)  # evaluate ascending so ties keep the smallest R
    labels, _, _ = _pw_classify(symbols, train, [r_grid[i] for i in order],
                                ZERO_DISTANCE_WEIGHT, 4096)
    truth_bits = labels_to_bits(constellation, truth)
    errors = [int(np.count_nonzero(labels_to_bits(constellation, est) != truth_bits))
              for est in labels]
    return r_grid[order[int(np.argmin(errors))]]


def decision_regions(detector, extent: float = 1.6, resolution: int = 201) -> np.ndarray:
    """Rasterize detector decisions over [-extent, extent]^2.

    Returns an (resolution^2, 3) float array of (re, im, label) rows,
    suitable for CSV dumping and region plots.
    """
    axis = np.linspace(-extent, extent, resolution)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    grid = (re + 1j * im).ravel()
    labels = detector.predict(grid)
    return np.column_stack([re.ravel(), im.ravel(), labels.astype(float)])
