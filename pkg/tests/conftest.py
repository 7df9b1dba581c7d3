import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pimfft import CrossbarDims, new_crossbar
from pimfft.arith import bits_to_codes, codes_to_bits

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")

# acceptance criterion -> list of (passed, detail), one per checked case
ACCEPTANCE: dict = {}


def record(key: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(key, []).append((bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        cases = ACCEPTANCE[key]
        bad = [d for ok, d in cases if not ok]
        shown = bad[0] if bad else cases[-1][1]
        status = "PASS" if not bad else "FAIL"
        terminalreporter.write_line(f"criterion {key:>2}: {status}  ({len(cases) - len(bad)}/{len(cases)} cases) {shown}")


def put_codes(xb, slot, codes, rows=None):
    """Untimed host load of one code per row into a real or complex slot."""
    rows = np.arange(xb.rows) if rows is None else np.asarray(rows)
    xb.load_region(rows, list(slot.cols), codes_to_bits(codes, len(slot.cols)))


def get_codes(xb, slot, rows=None):
    rows = np.arange(xb.rows) if rows is None else np.asarray(rows)
    return bits_to_codes(xb.read_region(rows, list(slot.cols)))


def join(re, im, n_bits):
    return np.asarray(re, dtype=np.uint64) | (np.asarray(im, dtype=np.uint64) << np.uint64(n_bits))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_xbar():
    return new_crossbar(CrossbarDims(16, 16))
