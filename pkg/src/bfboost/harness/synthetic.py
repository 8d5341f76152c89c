"""Synthetic problem families with dialable alignment.

A Gaussian design is drawn once per seed; the right-hand side b is composed
to put exactly kappa of its mass inside range(A), and the surrogate b_low is
composed to have cosine exactly phi with b.  The random directions behind
both are also drawn once per seed, so sweeping (kappa, phi) moves only the
two dials and nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateDataError
from ..linalg import OrthoBasis, orthonormal_basis
from ..rng import derive_seed, make_rng

# substream tags for the per-seed draws
_TAG_MATRIX, _TAG_RANGE, _TAG_PERP, _TAG_SURROGATE = 1, 2, 3, 4


def _unit_gaussian(seed: int, length: int) -> np.ndarray:
    v = make_rng(seed).standard_normal(length)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class SyntheticSpec:
    """Dimensions plus the two alignment dials."""

    n: int
    d: int
    kappa: float
    phi: float
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.d < self.n - 1):
            raise ValueError("need 1 <= d < n - 1 for the residual-space directions")
        if not (0.0 <= self.kappa <= 1.0 and 0.0 <= self.phi <= 1.0):
            raise ValueError("kappa and phi must lie in [0, 1]")


class SyntheticFamily:
    """All (kappa, phi) pairs over one fixed design and direction draw.

    The unit directions are length d - 1, n - d - 1, and n - 2, zero-padded
    by one coordinate before use (they are points on the corresponding unit
    spheres).  The surrogate's off-b component is realized by projecting a
    fixed direction off b and renormalizing, which is one concrete choice of
    orthonormal complement basis for span{b}.
    """

    def __init__(self, n: int, d: int, seed: int = 0):
        if not (1 <= d < n - 1):
            raise ValueError("need 1 <= d < n - 1")
        self.n, self.d, self.seed = n, d, seed
        rng = make_rng(derive_seed(seed, _TAG_MATRIX))
        self.a = rng.standard_normal((n, d))
        self.basis: OrthoBasis = orthonormal_basis(self.a)
        if self.basis.rank != d:
            raise DegenerateDataError("drawn design lost rank, pick another seed")
        # complement basis via the full QR of A
        qfull = np.linalg.qr(self.a, mode="complete")[0]
        self.q_perp = qfull[:, d:]
        self._z_range = np.append(_unit_gaussian(derive_seed(seed, _TAG_RANGE), d - 1), 0.0) \
            if d > 1 else np.ones(1)
        self._z_perp = np.append(_unit_gaussian(derive_seed(seed, _TAG_PERP), n - d - 1), 0.0)
        self._z_surr = np.append(_unit_gaussian(derive_seed(seed, _TAG_SURROGATE), n - 2), [0.0, 0.0])

    def pair(self, kappa: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
        """Unit b with ||P_range b|| = kappa and unit b_low with |<b, b_low>| = phi."""
        if not (0.0 <= kappa <= 1.0 and 0.0 <= phi <= 1.0):
            raise ValueError("kappa and phi must lie in [0, 1]")
        q = self.basis.q
        b = kappa * (q @ self._z_range) + np.sqrt(1.0 - kappa ** 2) * (self.q_perp @ self._z_perp)
        if phi == 1.0:
            return b, b.copy()
        g = self._z_surr
        off = g - (g @ b) * b
        off_norm = np.linalg.norm(off)
        if off_norm < 1e-8:
            raise DegenerateDataError("surrogate direction is parallel to b")
        b_low = phi * b + np.sqrt(1.0 - phi ** 2) * (off / off_norm)
        return b, b_low


def synthetic_pair(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, b_low) for one spec; see SyntheticFamily for the sharing rules."""
    fam = SyntheticFamily(spec.n, spec.d, spec.seed)
    b, b_low = fam.pair(spec.kappa, spec.phi)
    return fam.a, b, b_low
