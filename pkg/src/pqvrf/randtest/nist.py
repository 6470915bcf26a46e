"""Eleven tests from the NIST SP800-22 statistical suite.

Each test function takes a 0/1 array and returns a TestResult. The functions
only refuse inputs they cannot compute on; the recommended minimum lengths
are enforced by ``run_test``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .. import kernels
from ..errors import InvalidInputError, PreconditionError
from .special import igamc, normal_cdf

ALPHA = 0.01


@dataclass
class TestResult:
    test_name: str
    p_value: float
    sub_p_values: list = field(default_factory=list)
    stream: int | None = None

    __test__ = False  # not a pytest class

    @property
    def passed(self) -> bool:
        return self.p_value >= ALPHA

    def to_json(self):
        d = {"test": self.test_name, "p_value": self.p_value, "pass": self.passed}
        if self.sub_p_values:
            d["sub_p_values"] = list(self.sub_p_values)
        if self.stream is not None:
            d["stream"] = self.stream
        return d

    @classmethod
    def from_json(cls, d):
        return cls(d["test"], d["p_value"], list(d.get("sub_p_values", [])), d.get("stream"))


def as_bits(seq) -> np.ndarray:
    """0/1 uint8 array from a string of '0'/'1', bytes (MSB first) or a sequence."""
    if isinstance(seq, str):
        s = "".join(seq.split())
        if set(s) - {"0", "1"}:
            raise InvalidInputError("bit string may contain only 0 and 1")
        return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
    if isinstance(seq, (bytes, bytearray, memoryview)):
        return np.unpackbits(np.frombuffer(bytes(seq), dtype=np.uint8))
    bits = np.asarray(seq)
    if bits.ndim != 1:
        raise InvalidInputError("bit sequence must be one-dimensional")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise InvalidInputError("bits must be 0 or 1")
    return bits.astype(np.uint8)


def _need(bits, n_min, what):
    if len(bits) < n_min:
        raise PreconditionError(f"{what} needs at least {n_min} bits, got {len(bits)}")


# ---------------------------------------------------------------------------


def monobit(seq) -> TestResult:
    bits = as_bits(seq)
    _need(bits, 1, "monobit")
    n = len(bits)
    s = abs(2 * int(bits.sum()) - n)
    return TestResult("monobit", math.erfc(s / math.sqrt(n) / math.sqrt(2.0)))


def block_frequency(seq, M: int = 128) -> TestResult:
    bits = as_bits(seq)
    N = len(bits) // M
    if M < 1 or N < 1:
        raise PreconditionError(f"block frequency needs at least one block of {M} bits")
    pi = bits[: N * M].reshape(N, M).mean(axis=1)
    chi2 = 4.0 * M * float(np.sum((pi - 0.5) ** 2))
    return TestResult("block_frequency", igamc(N / 2.0, chi2 / 2.0))


def cumulative_sums(seq) -> TestResult:
    """Forward mode is the headline p-value; reverse mode is the second sub-value."""
    bits = as_bits(seq)
    _need(bits, 1, "cumulative sums")
    n = len(bits)
    x = 2 * bits.astype(np.int64) - 1
    ps = []
    for walk in (np.cumsum(x), np.cumsum(x[::-1])):
        z = int(np.max(np.abs(walk)))
        ps.append(_cusum_p(n, z))
    return TestResult("cumulative_sums", ps[0], ps)


def _cusum_p(n: int, z: int) -> float:
    sq = math.sqrt(n)
    s1 = 0.0
    for k in range(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1):
        s1 += normal_cdf((4 * k + 1) * z / sq) - normal_cdf((4 * k - 1) * z / sq)
    s2 = 0.0
    for k in range(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1):
        s2 += normal_cdf((4 * k + 3) * z / sq) - normal_cdf((4 * k + 1) * z / sq)
    return min(1.0, max(0.0, 1.0 - s1 + s2))


def runs(seq) -> TestResult:
    bits = as_bits(seq)
    _need(bits, 2, "runs")
    n = len(bits)
    pi = float(bits.mean())
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # frequency prerequisite failed; the test is not run
        return TestResult("runs", 0.0)
    v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    num = abs(v - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return TestResult("runs", math.erfc(num / den))


_LONGEST = [
    # (min n, M, bins low..high, class probabilities)
    (750000, 10000, 10, 16, [0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727]),
    (6272, 128, 4, 9, [0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847]),
    (128, 8, 1, 4, [0.21484375, 0.3671875, 0.23046875, 0.1875]),
]


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    N, M = blocks.shape
    run = np.zeros(N, dtype=np.int64)
    best = np.zeros(N, dtype=np.int64)
    for j in range(M):
        run = (run + 1) * blocks[:, j]
        np.maximum(best, run, out=best)
    return best


def longest_run(seq) -> TestResult:
    bits = as_bits(seq)
    _need(bits, 128, "longest run of ones")
    n = len(bits)
    for n_min, M, lo, hi, pi in _LONGEST:
        if n >= n_min:
            break
    N = n // M
    best = _longest_runs(bits[: N * M].reshape(N, M).astype(np.int64))
    v = np.bincount(np.clip(best, lo, hi) - lo, minlength=hi - lo + 1)
    pi = np.asarray(pi)
    chi2 = float(np.sum((v - N * pi) ** 2 / (N * pi)))
    return TestResult("longest_run", igamc((len(pi) - 1) / 2.0, chi2 / 2.0))


def dft(seq) -> TestResult:
    bits = as_bits(seq)
    _need(bits, 2, "DFT")
    n = len(bits)
    x = 2.0 * bits - 1.0
    mod = np.abs(np.fft.fft(x))[: n // 2]
    t = math.sqrt(math.log(1.0 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(mod < t))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return TestResult("dft", math.erfc(abs(d) / math.sqrt(2.0)))


@lru_cache(maxsize=None)
def aperiodic_templates(m: int):
    """All m-bit templates with no self-overlap, in increasing order."""
    out = []
    for v in range(1 << m):
        t = tuple((v >> (m - 1 - i)) & 1 for i in range(m))
        if all(t[k:] != t[: m - k] for k in range(1, m)):
            out.append(t)
    return tuple(out)


def _window_codes(bits: np.ndarray, m: int) -> np.ndarray:
    """Integer value of every m-bit window, MSB first."""
    n = len(bits) - m + 1
    codes = np.zeros(n, dtype=np.int64)
    for j in range(m):
        codes = (codes << 1) | bits[j:j + n]
    return codes


def _count_nonoverlapping(codes: np.ndarray, value: int, m: int) -> int:
    count, nxt = 0, 0
    for h in np.flatnonzero(codes == value):
        if h >= nxt:
            count += 1
            nxt = h + m
    return count


def non_overlapping_template(seq, m: int = 9, N: int = 8, templates=None) -> TestResult:
    """Headline p-value: the first template (0...01 for aperiodic sets)."""
    bits = as_bits(seq)
    n = len(bits)
    M = n // N
    if M < m:
        raise PreconditionError(f"non-overlapping template needs blocks of at least {m} bits")
    if templates is None:
        templates = aperiodic_templates(m)
    else:
        templates = [tuple(int(b) for b in as_bits(t)) for t in templates]
        if any(len(t) != m for t in templates):
            raise InvalidInputError(f"templates must have length {m}")
    mu = (M - m + 1) / 2.0**m
    var = M * (1.0 / 2.0**m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    blocks = bits[: N * M].reshape(N, M).astype(np.int64)
    codes = [_window_codes(b, m) for b in blocks]
    ps = []
    for t in templates:
        value = int("".join(map(str, t)), 2)
        w = np.array([_count_nonoverlapping(c, value, m) for c in codes], dtype=float)
        chi2 = float(np.sum((w - mu) ** 2) / var)
        ps.append(igamc(N / 2.0, chi2 / 2.0))
    return TestResult("non_overlapping_template", ps[0], ps)


OVERLAPPING_TABLE = (0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865)


@lru_cache(maxsize=None)
def overlapping_probabilities(m: int, M: int, K: int = 5):
    """Exact class probabilities for overlapping hits of 1^m in M uniform bits.

    Dynamic programme over (trailing ones, hits so far); the last class is
    the tail P(hits >= K).
    """
    state = np.zeros((m, K + 1))
    state[0, 0] = 1.0
    for _ in range(M):
        nxt = np.zeros_like(state)
        # a zero resets the run
        nxt[0, :] += 0.5 * state.sum(axis=0)
        # a one extends it; reaching m scores a hit and keeps length m-1 of run
        nxt[1:, :] += 0.5 * state[:-1, :]
        full = 0.5 * state[m - 1, :]
        nxt[m - 1, 1:] += full[:-1]
        nxt[m - 1, K] += full[K]
        state = nxt
    return tuple(float(x) for x in state.sum(axis=0))


def poisson_overlapping_probabilities(m: int, M: int, K: int = 5):
    """Compound-Poisson approximation for the class probabilities."""
    lam = (M - m + 1) / 2.0**m
    eta = lam / 2.0
    out = [math.exp(-eta)]
    for u in range(1, K):
        s = sum(math.comb(u - 1, l - 1) * eta**l / math.factorial(l) for l in range(1, u + 1))
        out.append(math.exp(-eta) / 2.0**u * s)
    out.append(1.0 - sum(out))
    return tuple(out)


def overlapping_template(seq, m: int = 9, M: int = 1032, K: int = 5, probabilities="exact") -> TestResult:
    """``probabilities``: 'exact', 'poisson', 'table' or an explicit sequence."""
    bits = as_bits(seq)
    N = len(bits) // M
    if N < 1:
        raise PreconditionError(f"overlapping template needs at least one block of {M} bits")
    if isinstance(probabilities, str):
        if probabilities == "exact":
            pi = overlapping_probabilities(m, M, K)
        elif probabilities == "poisson":
            pi = poisson_overlapping_probabilities(m, M, K)
        elif probabilities == "table":
            pi = OVERLAPPING_TABLE
        else:
            raise InvalidInputError(f"unknown probability source {probabilities!r}")
    else:
        pi = tuple(probabilities)
    pi = np.asarray(pi, dtype=float)
    if len(pi) != K + 1:
        raise InvalidInputError(f"need {K + 1} class probabilities")
    blocks = bits[: N * M].reshape(N, M)
    windows = np.lib.stride_tricks.sliding_window_view(blocks, m, axis=1)
    hits = np.all(windows == 1, axis=2).sum(axis=1)
    v = np.bincount(np.minimum(hits, K), minlength=K + 1)
    chi2 = float(np.sum((v - N * pi) ** 2 / (N * pi)))
    return TestResult("overlapping_template", igamc(K / 2.0, chi2 / 2.0))


LINEAR_PI = np.array([0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833])


def linear_complexity(seq, M: int = 500, probabilities=None) -> TestResult:
    bits = as_bits(seq)
    pi = LINEAR_PI if probabilities is None else np.asarray(probabilities, dtype=float)
    if pi.shape != (7,):
        raise InvalidInputError("need 7 class probabilities")
    N = len(bits) // M
    if N < 1:
        raise PreconditionError(f"linear complexity needs at least one block of {M} bits")
    blocks = bits[: N * M].reshape(N, M)
    mu = M / 2.0 + (9.0 + (-1) ** (M + 1)) / 36.0 - (M / 3.0 + 2.0 / 9.0) / 2.0**M
    sign = -1.0 if M % 2 else 1.0
    v = np.zeros(7, dtype=np.int64)
    edges = [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]
    for b in blocks:
        L = kernels.berlekamp_massey(np.ascontiguousarray(b, dtype=np.uint8))
        t = sign * (L - mu) + 2.0 / 9.0
        v[sum(t > e for e in edges)] += 1
    chi2 = float(np.sum((v - N * pi) ** 2 / (N * pi)))
    return TestResult("linear_complexity", igamc(3.0, chi2 / 2.0))


def _psi2(bits: np.ndarray, m: int) -> float:
    if m <= 0:
        return 0.0
    n = len(bits)
    ext = np.concatenate([bits, bits[: m - 1]]).astype(np.int64)
    idx = np.zeros(n, dtype=np.int64)
    for j in range(m):
        idx = (idx << 1) | ext[j:j + n]
    counts = np.bincount(idx, minlength=1 << m).astype(float)
    return float((2.0**m / n) * np.sum(counts**2) - n)


def serial(seq, m: int = 16) -> TestResult:
    """Headline p-value is the first difference statistic."""
    bits = as_bits(seq)
    if m < 2:
        raise InvalidInputError("serial test needs m >= 2")
    _need(bits, m, "serial")
    p0, p1, p2 = _psi2(bits, m), _psi2(bits, m - 1), _psi2(bits, m - 2)
    d1 = p0 - p1
    d2 = p0 - 2.0 * p1 + p2
    pv1 = igamc(2.0 ** (m - 2), d1 / 2.0)
    pv2 = igamc(2.0 ** (m - 3), d2 / 2.0) if m >= 3 else igamc(0.5, d2 / 2.0)
    return TestResult("serial", pv1, [pv1, pv2])


def _phi(bits: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    n = len(bits)
    ext = np.concatenate([bits, bits[: m - 1]]).astype(np.int64)
    idx = np.zeros(n, dtype=np.int64)
    for j in range(m):
        idx = (idx << 1) | ext[j:j + n]
    c = np.bincount(idx, minlength=1 << m).astype(float) / n
    c = c[c > 0]
    return float(np.sum(c * np.log(c)))


def approximate_entropy(seq, m: int = 10) -> TestResult:
    bits = as_bits(seq)
    if m < 1:
        raise InvalidInputError("approximate entropy needs m >= 1")
    _need(bits, m + 1, "approximate entropy")
    n = len(bits)
    apen = _phi(bits, m) - _phi(bits, m + 1)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    return TestResult("approximate_entropy", igamc(2.0 ** (m - 1), chi2 / 2.0))


# ---------------------------------------------------------------------------
# registry

TESTS = {
    "monobit": monobit,
    "block_frequency": block_frequency,
    "cumulative_sums": cumulative_sums,
    "runs": runs,
    "longest_run": longest_run,
    "dft": dft,
    "non_overlapping_template": non_overlapping_template,
    "overlapping_template": overlapping_template,
    "linear_complexity": linear_complexity,
    "serial": serial,
    "approximate_entropy": approximate_entropy,
}

TITLES = {
    "monobit": "Frequency (Monobit) Test",
    "block_frequency": "Frequency Test within a Block",
    "cumulative_sums": "Cumulative Sums Test",
    "runs": "Runs Test",
    "longest_run": "Longest Run of Ones in a Block",
    "dft": "Discrete Fourier Transform (Spectral) Test",
    "non_overlapping_template": "Non-overlapping Template Matching Test",
    "overlapping_template": "Overlapping Template Matching Test",
    "linear_complexity": "Linear Complexity Test",
    "serial": "Serial Test",
    "approximate_entropy": "Approximate Entropy Test",
}


def minimum_length(name: str, params: dict | None = None) -> int:
    """Recommended minimum sequence length for each test."""
    p = params or {}
    if name in ("monobit", "cumulative_sums", "runs"):
        return 100
    if name == "block_frequency":
        return max(100, p.get("M", 128))
    if name == "longest_run":
        return 128
    if name == "dft":
        return 1000
    if name == "non_overlapping_template":
        return p.get("N", 8) * 2 ** p.get("m", 9)
    if name == "overlapping_template":
        M = p.get("M", 1032)
        pi = overlapping_probabilities(p.get("m", 9), M, p.get("K", 5))
        # every expected class count at least 5
        return M * math.ceil(5.0 / min(pi))
    if name == "linear_complexity":
        return 200 * p.get("M", 500)
    if name == "serial":
        return 2 ** (p.get("m", 16) + 3)
    if name == "approximate_entropy":
        return 2 ** (p.get("m", 10) + 6)
    raise InvalidInputError(f"unknown test {name!r}")


def default_params(name: str, n: int) -> dict:
    """Suite defaults; serial and ApEn block lengths shrink to fit short streams."""
    lg = int(math.floor(math.log2(max(n, 2))))
    if name == "serial":
        return {"m": max(2, min(16, lg - 3))}
    if name == "approximate_entropy":
        return {"m": max(1, min(10, lg - 6))}
    return {}


def run_test(name: str, seq, params: dict | None = None, enforce_minimum: bool = True) -> TestResult:
    if name not in TESTS:
        raise InvalidInputError(f"unknown test {name!r}; choose from {sorted(TESTS)}")
    bits = as_bits(seq)
    params = dict(params or {})
    if enforce_minimum:
        need = minimum_length(name, params)
        if len(bits) < need:
            raise PreconditionError(f"{name} needs at least {need} bits, got {len(bits)}")
    return TESTS[name](bits, **params)
