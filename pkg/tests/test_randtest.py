import json
import math

import numpy as np
import pytest
from scipy import special as sps

import oracles
from pqvrf.errors import InvalidInputError, PreconditionError
from pqvrf.randtest import nist, report, special, stats


@pytest.fixture(scope="module")
def bits():
    return np.random.default_rng(2024).integers(0, 2, 20_000).astype(np.uint8)


@pytest.mark.parametrize("a,x", [(0.5, 0.1), (1.5, 3.0), (4, 2), (64, 70.5), (2048, 2000.0), (3, 40), (0.5, 1e-8)])
def test_igamc_matches_scipy(a, x):
    assert special.igamc(a, x) == pytest.approx(sps.gammaincc(a, x), rel=1e-9, abs=1e-300)
    assert special.igam(a, x) == pytest.approx(sps.gammainc(a, x), rel=1e-9, abs=1e-15)


def test_igamc_edges():
    assert special.igamc(2.0, 0.0) == 1.0
    assert special.normal_cdf(0.0) == 0.5
    assert special.normal_cdf(1.96) == pytest.approx(sps.ndtr(1.96), rel=1e-14)


def test_as_bits():
    assert list(nist.as_bits("1 0\n1")) == [1, 0, 1]
    assert list(nist.as_bits(b"\x80")) == [1, 0, 0, 0, 0, 0, 0, 0]
    for bad in ("102", [0, 2], np.zeros((2, 2))):
        with pytest.raises(InvalidInputError):
            nist.as_bits(bad)


# each statistic against the independent definition on the same random data

def test_monobit_oracle(bits):
    assert nist.monobit(bits).p_value == pytest.approx(oracles.nist_monobit(bits), rel=1e-9)


def test_block_frequency_oracle(bits):
    assert nist.block_frequency(bits, 128).p_value == pytest.approx(oracles.nist_block_frequency(bits, 128), rel=1e-8)


def test_cusum_oracle(bits):
    r = nist.cumulative_sums(bits)
    assert r.sub_p_values[0] == pytest.approx(oracles.nist_cusum(bits), rel=1e-8)
    assert r.sub_p_values[1] == pytest.approx(oracles.nist_cusum(bits, reverse=True), rel=1e-8)
    assert r.p_value == r.sub_p_values[0]


def test_runs_oracle(bits):
    assert nist.runs(bits).p_value == pytest.approx(oracles.nist_runs(bits), rel=1e-9)


def test_longest_run_oracle():
    b = np.random.default_rng(1).integers(0, 2, 6272).astype(np.uint8)
    # the m=8 category layout only applies below 6272 bits
    assert nist.longest_run(b[:6000]).p_value == pytest.approx(oracles.nist_longest_run_m8(b[:6000]), rel=1e-8)


def test_dft_oracle():
    b = np.random.default_rng(3).integers(0, 2, 1200).astype(np.uint8)
    p, _ = oracles.nist_dft(b)
    assert nist.dft(b).p_value == pytest.approx(p, rel=1e-9)


def test_non_overlapping_oracle(bits):
    tpl = (0, 0, 0, 0, 0, 0, 0, 0, 1)
    r = nist.non_overlapping_template(bits, m=9, N=8, templates=[tpl])
    assert r.p_value == pytest.approx(oracles.nist_non_overlapping(bits, tpl, 8), rel=1e-8)


def test_aperiodic_template_count():
    assert len(nist.aperiodic_templates(9)) == 148
    assert len(nist.aperiodic_templates(2)) == 2


def test_overlapping_probabilities():
    exact = nist.overlapping_probabilities(9, 1032, 5)
    assert np.allclose(exact, oracles.overlapping_exact_probs(9, 1032, 5), atol=1e-12)
    assert np.allclose(exact, nist.OVERLAPPING_TABLE, atol=5e-7)
    assert sum(nist.poisson_overlapping_probabilities(9, 1032)) == pytest.approx(1.0)


def test_overlapping_oracle():
    b = np.random.default_rng(4).integers(0, 2, 1032 * 60).astype(np.uint8)
    pis = nist.overlapping_probabilities(9, 1032, 5)
    r = nist.overlapping_template(b, probabilities="exact")
    assert r.p_value == pytest.approx(oracles.nist_overlapping(b, 9, 1032, pis), rel=1e-8)


def test_linear_complexity_oracle():
    b = np.random.default_rng(5).integers(0, 2, 500 * 40).astype(np.uint8)
    want = oracles.nist_linear_complexity(b, 500, list(nist.LINEAR_PI))
    assert nist.linear_complexity(b, 500).p_value == pytest.approx(want, rel=1e-8)


def test_serial_oracle():
    b = np.random.default_rng(6).integers(0, 2, 4096).astype(np.uint8)
    r = nist.serial(b, 5)
    assert r.sub_p_values == pytest.approx(list(oracles.nist_serial(b, 5)), rel=1e-8)


def test_apen_oracle():
    b = np.random.default_rng(7).integers(0, 2, 4096).astype(np.uint8)
    assert nist.approximate_entropy(b, 4).p_value == pytest.approx(oracles.nist_apen(b, 4), rel=1e-8)


def test_runs_on_alternating_bits():
    alt = np.tile(np.array([0, 1], dtype=np.uint8), 50)
    # 100 runs (99 transitions plus one); expected 2 n pi (1 - pi) = 50
    want = math.erfc(abs(100 - 50) / (2 * math.sqrt(2 * 100) * 0.25))
    assert nist.runs(alt).p_value == pytest.approx(want, rel=1e-9)
    assert nist.runs(alt).p_value == pytest.approx(oracles.nist_runs(alt), rel=1e-9)


def test_biased_stream_fails():
    b = (np.random.default_rng(8).random(20_000) < 0.47).astype(np.uint8)
    assert not nist.monobit(b).passed
    assert not nist.run_test("cumulative_sums", b).passed


def test_periodic_stream_fails_dft():
    b = np.tile(np.array([1, 1, 0, 1, 0, 0, 0, 1], dtype=np.uint8), 500)
    assert not nist.dft(b).passed
    assert nist.linear_complexity(np.tile(b, 10), 500).p_value < 0.01


def test_minimum_length_enforced():
    with pytest.raises(PreconditionError):
        nist.run_test("linear_complexity", np.zeros(10_000, dtype=np.uint8))
    # the raw function still runs
    nist.linear_complexity(np.random.default_rng(0).integers(0, 2, 10_000).astype(np.uint8))
    with pytest.raises(InvalidInputError):
        nist.run_test("nope", "0101")


def test_default_params_shrink():
    assert nist.default_params("serial", 1 << 20) == {"m": 16}
    assert nist.default_params("serial", 1 << 10) == {"m": 7}
    assert nist.default_params("approximate_entropy", 100_000) == {"m": 10}


def test_result_json_round_trip():
    r = nist.TestResult("serial", 0.3, [0.3, 0.4], stream=2)
    assert nist.TestResult.from_json(json.loads(json.dumps(r.to_json()))) == r


def test_suite_and_report(bits):
    streams = [bits, np.random.default_rng(9).integers(0, 2, 20_000).astype(np.uint8)]
    rep = report.run_suite(streams)
    assert rep.total + len(rep.skipped) == 2 * len(nist.TESTS)
    assert {s[1] for s in rep.skipped} == {"linear_complexity", "overlapping_template"}
    rows = rep.rows()
    assert all(r["total"] == 2 for r in rows)
    assert sum(r["pass"] for r in rows) == rep.passed
    back = report.RandReport.from_json(rep.to_json())
    assert back.pass_rate == rep.pass_rate and back.skipped == rep.skipped
    csv = rep.to_csv().splitlines()
    assert csv[0] == "name,total,average_p,pass,fail,pass_pct" and csv[-1].startswith("Total,")
    with pytest.raises(PreconditionError):
        report.run_suite([])


def test_ones_ratio():
    assert stats.ones_ratio(b"\xff" * 16)[0] == 1.0
    assert stats.ones_ratio(b"\x55" * 16)[0] == 0.5
    overall, per = stats.ones_ratio(b"\xff\x00" * 32, block_bits=16)
    assert overall == 0.5 and per == [0.5] * 32
    with pytest.raises(PreconditionError):
        stats.ones_ratio(b"\x00", 128)


def test_empirical_entropy():
    uniform = bytes(range(256)) * 64
    assert stats.empirical_entropy(uniform) == pytest.approx(8.0)
    assert stats.empirical_entropy(bytes(8192)) == 0.0
    rnd = np.random.default_rng(1).integers(0, 256, 1 << 16, dtype=np.uint8).tobytes()
    assert stats.miller_madow_bias(256, 1 << 20) < 0.05
    bias = stats.miller_madow_bias(256, 1 << 16)
    assert stats.empirical_entropy(rnd) == pytest.approx(8.0 - bias, abs=4 * bias)
    with pytest.raises(PreconditionError):
        stats.empirical_entropy(b"abc")


def test_theoretical_entropy_values():
    assert stats.theoretical_entropy(1, 1.0) == 256.0
    # larger rings make each per-output probability tinier and the scaled term vanish
    assert stats.theoretical_entropy(2, 1.0) == pytest.approx(512 * 2.0 ** -256)
    sign, lg = stats.log2_theoretical_entropy(3, 4.0)
    assert sign == 1
    assert lg == pytest.approx(256 - 2 - 768 + math.log2(770))
    assert stats.theoretical_entropy(3, 4.0) == pytest.approx(2.0 ** lg)
    with pytest.raises(InvalidInputError):
        stats.theoretical_entropy(0, 1.0)
