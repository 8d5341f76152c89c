"""Exception types shared across the package.

Everything numerical-failure-shaped derives from BfbError so the CLI can map
it to a single exit code, distinct from usage errors.
"""


class BfbError(Exception):
    """Base class for numerical and degenerate-data failures."""


class DegenerateDataError(BfbError):
    """Input violates a non-degeneracy assumption (zero matrix, b in range(A), ...)."""


class RankDeficiencyError(BfbError):
    """A sketched matrix lost rank relative to the original."""

    def __init__(self, sketched_rank: int, original_rank: int, message: str | None = None):
        self.sketched_rank = int(sketched_rank)
        self.original_rank = int(original_rank)
        if message is None:
            message = (
                f"sketched matrix has rank {sketched_rank}, "
                f"original has rank {original_rank}"
            )
        super().__init__(message)


class FullVectorRequiredError(BfbError):
    """A dense sketch needs the whole right-hand side, not an entry oracle."""


class MemoryCapError(BfbError):
    """Assembling this matrix would exceed the configured entry budget."""


class SamplingFailureError(BfbError):
    """A randomized sampler exhausted its retry budget."""
