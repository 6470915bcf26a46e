import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from pqvrf import _fallback, kernels, ring

try:
    from pqvrf import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS = [_fallback] + ([_kernels] if _kernels is not None else [])
needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_keccak_vectors(impl):
    assert impl.keccak256(b"").hex() == "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
    assert impl.keccak256(b"abc").hex() == "4e03657aea45a94fc7d47ba826c8d667c0d1e6e33a64a036ec44f58fa12d6c45"


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("length", [0, 1, 135, 136, 137, 272, 1000])
def test_sponge_matches_hashlib_sha3(impl, length):
    data = bytes(range(256)) * 4
    data = data[:length]
    import hashlib
    assert impl.keccak_sponge(data, 136, 0x06, 32) == hashlib.sha3_256(data).digest()
    assert impl.keccak_sponge(data, 136, 0x1F, 64) == hashlib.shake_256(data).digest(64)
    assert impl.keccak256(data) == oracles.sponge256(data, 0x01)


def test_oracle_sponge_is_sha3_at_fips_padding():
    for msg in (b"", b"abc", b"z" * 500):
        assert oracles.sponge256(msg, 0x06) == oracles.sha3_256(msg)


@needs_ext
@settings(max_examples=50, deadline=None)
@given(st.binary(max_size=600))
def test_backends_agree_on_keccak(data):
    assert _kernels.keccak256(data) == _fallback.keccak256(data)


@needs_ext
@pytest.mark.parametrize("n,q", [(8, 17), (256, 7681), (512, ring.SIG_MODULUS)])
def test_backends_agree_on_ntt(n, q):
    zetas, n_inv = ring._ntt_tables(n, q)
    rng = np.random.default_rng(n)
    for _ in range(10):
        a = rng.integers(0, q, n, dtype=np.int64)
        fa = _fallback.ntt_forward(a, zetas, q)
        assert np.array_equal(fa, _kernels.ntt_forward(a, zetas, q))
        assert np.array_equal(_fallback.ntt_inverse(fa, zetas, q, n_inv), _kernels.ntt_inverse(fa, zetas, q, n_inv))


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_berlekamp_massey_against_textbook(impl):
    rng = np.random.default_rng(5)
    for size in (1, 2, 13, 64, 500):
        for _ in range(5):
            bits = rng.integers(0, 2, size).astype(np.uint8)
            assert impl.berlekamp_massey(bits) == oracles.berlekamp_massey_gf2(list(bits))
    # worked example: 1101011110001 has linear complexity 4
    ex = np.array([int(c) for c in "1101011110001"], dtype=np.uint8)
    assert impl.berlekamp_massey(ex) == 4


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_keccak_f1600_zero_state(impl):
    # first lane of Keccak-f[1600] applied to the all-zero state
    out = impl.keccak_f1600(np.zeros(25, dtype=np.uint64))
    assert int(out[0]) == 0xF1258F7940E1DDE7


def test_env_var_forces_fallback():
    code = "from pqvrf import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, PQVRF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
def test_compiled_backend_selected_by_default():
    assert kernels.BACKEND == "cython"


def test_pure_python_protocol_round_matches(tmp_path):
    """A short VRF evaluation gives the same bytes under both backends."""
    code = (
        "from pqvrf import ring, rlwe, vrf;"
        "kp = rlwe.rlwe_keygen(ring.RLWE_DEFAULT, ring.make_rng(9));"
        "print(vrf.output_stream(kp, 3).hex())"
    )
    outs = []
    for flag in ("", "1"):
        env = dict(os.environ)
        env.pop("PQVRF_PURE_PYTHON", None)
        if flag:
            env["PQVRF_PURE_PYTHON"] = flag
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                   check=True).stdout)
    assert outs[0] == outs[1]
