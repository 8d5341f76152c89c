import numpy as np
import pytest

from bfboost.rng import derive_seed, make_rng


def well_conditioned(n, d, seed, *, resid_scale=1.0):
    """A full-rank tall instance: orthogonal-ish A, b with a residual part.

    Built so b has a known component outside range(A); tests that need the
    exact split recompute it from an SVD basis rather than trusting this."""
    rng = make_rng(derive_seed(seed, 0xC0DE))
    a = rng.standard_normal((n, d)) / np.sqrt(n)
    x = rng.standard_normal(d)
    noise = rng.standard_normal(n)
    b = a @ x + resid_scale * noise / np.linalg.norm(noise)
    return a, b


@pytest.fixture
def rng():
    return make_rng(20260816)


# Acceptance verdicts collected here surface as one line each after the
# pytest summary, so a full run reads as a checklist.
_criteria: list[tuple[str, bool, str]] = []


def _record(name: str, passed: bool, detail: str = "") -> None:
    _criteria.append((name, bool(passed), detail))


@pytest.fixture
def record_criterion():
    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _criteria:
        verdict = "PASS" if passed else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        terminalreporter.write_line(f"{verdict}  {name}{suffix}")
