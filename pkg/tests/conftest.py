import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pqvrf import ring, ringsig, rlwe, vrf  # noqa: E402


@pytest.fixture(scope="session")
def small_pp():
    """Signature parameters at n = 64 (security preset 16)."""
    return ringsig.setup(16, 8, ring.make_rng(1001))


@pytest.fixture(scope="session")
def small_keys(small_pp):
    pp, msk = small_pp
    rng = ring.make_rng(1002)
    dids = [ringsig.make_did(bytes([i]) * 4) for i in range(8)]
    return [ringsig.keygen(pp, msk, d, rng) for d in dids]


@pytest.fixture(scope="session")
def rlwe_kp():
    return rlwe.rlwe_keygen(ring.RLWE_DEFAULT, ring.make_rng(1003))


@pytest.fixture(scope="session")
def small_km():
    return vrf.gen(16, 4, ring.make_rng(1004))


@pytest.fixture
def rng():
    return ring.make_rng(42)


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line, then assert the outcome."""

    def report(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
