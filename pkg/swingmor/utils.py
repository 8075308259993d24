"""Utility functions for swingmor."""

from collections.abc import Iterable, Iterator, Sequence
from typing import TypeVar

import numpy as np
from scipy.linalg import subspace_angles
from scipy.spatial.distance import directed_hausdorff

T = TypeVar("T")


def distinct(iterable: Iterable[T]) -> Iterator[T]:
    """Yield unique elements, preserving order."""
    seen: set = set()
    for item in iterable:
        if item not in seen:
            seen.add(item)
            yield item


def as_float_vector(x: Sequence[float] | np.ndarray, name: str = "vector") -> np.ndarray:
    """Convert x to a 1-d float64 array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def relative_error(value: np.ndarray, reference: np.ndarray) -> float:
    """||value - reference|| / ||reference||, with 0/0 taken as 0."""
    diff = np.linalg.norm(np.asarray(value) - np.asarray(reference))
    ref = np.linalg.norm(reference)
    if ref == 0:
        return 0.0 if diff == 0 else float("inf")
    return float(diff / ref)


def principal_angle(basis: np.ndarray, x: np.ndarray) -> float:
    """Largest principal angle between span(x) and span(basis)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if basis.shape[1] == 0:
        return float(np.pi / 2)
    return float(np.max(subspace_angles(basis, x)))


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite sets of complex numbers."""
    pa = np.column_stack([np.real(a), np.imag(a)])
    pb = np.column_stack([np.real(b), np.imag(b)])
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return the symmetric part (a + a^T) / 2."""
    return 0.5 * (a + a.T)


def unit_selector(indices: Sequence[int], n: int) -> np.ndarray:
    """n x len(indices) matrix whose k-th column is the unit vector e_{indices[k]}."""
    sel = np.zeros((n, len(indices)))
    for k, i in enumerate(indices):
        if not 0 <= i < n:
            raise IndexError(f"selector index {i} out of range for n={n}")
        sel[i, k] = 1.0
    return sel


def selector_indices(matrix: np.ndarray) -> list[int] | None:
    """Inverse of unit_selector for n x k matrices; None if matrix is not a selection."""
    if matrix.ndim != 2:
        return None
    indices = []
    for col in matrix.T:
        nonzero = np.flatnonzero(col)
        if len(nonzero) != 1 or col[nonzero[0]] != 1.0:
            return None
        indices.append(int(nonzero[0]))
    return indices
