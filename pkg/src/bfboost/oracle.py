"""Entry oracle for expensive right-hand sides.

Models the situation where each component of b costs a real computation
(a high-fidelity solver run, say) and we want to pay for as few distinct
components as possible.  Values are memoized, and the query counter advances
only on first access to an index.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class EntryOracle:
    """Counted, memoized access to entries of a length-n vector."""

    def __init__(self, fn: Callable[[int], float], n: int, full: np.ndarray | None = None):
        if n < 1:
            raise ValueError("oracle length must be positive")
        self._fn = fn
        self.n = int(n)
        self.full = None if full is None else np.asarray(full, dtype=np.float64)
        if self.full is not None and self.full.shape != (self.n,):
            raise ValueError(f"full vector has shape {self.full.shape}, expected ({n},)")
        self._cache: dict[int, float] = {}
        self._queries = 0

    @classmethod
    def from_vector(cls, b: np.ndarray) -> "EntryOracle":
        b = np.asarray(b, dtype=np.float64)
        if b.ndim != 1:
            raise ValueError("expected a 1-d vector")
        return cls(lambda i: float(b[i]), b.shape[0], full=b)

    @property
    def queries(self) -> int:
        """Number of distinct entries evaluated so far."""
        return self._queries

    def gather(self, indices: np.ndarray) -> np.ndarray:
        """Values at the given indices; repeated indices cost one query total."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be 1-d")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError(f"index out of range for oracle of length {self.n}")
        out = np.empty(idx.size, dtype=np.float64)
        for k, i in enumerate(idx):
            i = int(i)
            if i not in self._cache:
                v = float(self._fn(i))
                if self.full is not None and v != self.full[i]:
                    raise ValueError(f"oracle value at {i} disagrees with attached full vector")
                self._cache[i] = v
                self._queries += 1
            out[k] = self._cache[i]
        return out
