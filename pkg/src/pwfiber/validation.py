"""Input validation helpers shared by the estimator-style detectors."""

import numpy as np


def as_complex_symbols(X, name="X"):
    """Coerce input to a 1-D complex symbol array.

    Accepts a complex (or real) 1-D array-like, or a real (n, 2) array whose
    columns are taken as in-phase / quadrature.
    """
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D complex symbols or a real (n, 2) array, "
                         f"got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    if not np.all(np.isfinite(arr.real) & np.isfinite(arr.imag)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_labels(y, n=None, n_clusters=None, name="y"):
    """Coerce cluster labels to a 1-D int array with values in {1, ..., M}."""
    labels = np.asarray(y)
    if labels.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        cast = labels.astype(np.int64)
        if not np.array_equal(cast, labels):
            raise ValueError(f"{name} must contain integer labels")
        labels = cast
    labels = labels.astype(np.int64, copy=False)
    if n is not None and labels.size != n:
        raise ValueError(f"{name} has {labels.size} entries, expected {n}")
    if labels.size and labels.min() < 1:
        raise ValueError(f"{name} labels must be >= 1 (1-based cluster indices)")
    if n_clusters is not None and labels.size and labels.max() > n_clusters:
        raise ValueError(f"{name} contains label {labels.max()} > n_clusters={n_clusters}")
    return labels


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value
