"""Arithmetic in Z_q[x]/(x^n + 1) and the primitives built on it.

Ring elements are plain ``numpy.int64`` arrays of length ``n`` holding the
canonical representatives in ``[0, q)``. Every randomized routine takes an
explicit ``numpy.random.Generator`` so that whole protocol runs replay from a
32-byte seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import numpy as np

from . import kernels
from .errors import DegenerateBasisError, InvalidInputError, ParameterError

TAIL_CUT = 12
GSO_TOLERANCE = 1e-6
# above this many support points the CDT gives way to rejection sampling
_CDT_MAX_SUPPORT = 1 << 16


@dataclass(frozen=True)
class RingParams:
    n: int
    q: int
    sigma: float
    s: float

    def __post_init__(self):
        n, q = self.n, self.q
        if n < 2 or n & (n - 1):
            raise ParameterError(f"ring degree must be a power of two > 1, got {n}")
        if not gmpy2.is_prime(q):
            raise ParameterError(f"modulus {q} is not prime")
        if q % (2 * n) != 1:
            raise ParameterError(f"q = {q} is not 1 mod 2n = {2 * n}")
        if q >= 1 << 31:
            raise ParameterError("q must stay below 2^31 so products fit in int64")
        if not (self.sigma > 0 and self.s > 0):
            raise ParameterError("sigma and s must be positive")

    @property
    def coeff_bytes(self) -> int:
        """Bytes per canonical coefficient on the wire."""
        return 2 if self.q < 1 << 16 else 4


def make_rng(seed) -> np.random.Generator:
    """Deterministic random stream from bytes or an int."""
    if isinstance(seed, (bytes, bytearray)):
        seed = int.from_bytes(bytes(seed), "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def child_rng(rng: np.random.Generator) -> np.random.Generator:
    return make_rng(rng.bytes(32))


def keccak256(data: bytes) -> bytes:
    """Keccak-256 with the original (pad byte 0x01) padding, as on Ethereum."""
    return kernels.keccak256(bytes(data))


# ---------------------------------------------------------------------------
# polynomials


def as_poly(p, params: RingParams) -> np.ndarray:
    a = np.asarray(p, dtype=np.int64)
    if a.ndim != 1 or a.shape[0] != params.n:
        raise InvalidInputError(f"expected {params.n} coefficients, got shape {a.shape}")
    return a % params.q


def zero(params: RingParams) -> np.ndarray:
    return np.zeros(params.n, dtype=np.int64)


def one(params: RingParams) -> np.ndarray:
    p = zero(params)
    p[0] = 1
    return p


def monomial(k: int, params: RingParams) -> np.ndarray:
    """x^k reduced modulo x^n + 1."""
    p = zero(params)
    k %= 2 * params.n
    if k < params.n:
        p[k] = 1
    else:
        p[k - params.n] = params.q - 1
    return p


def ring_add(a, b, params):
    return (as_poly(a, params) + as_poly(b, params)) % params.q


def ring_sub(a, b, params):
    return (as_poly(a, params) - as_poly(b, params)) % params.q


def centered(p, q: int) -> np.ndarray:
    """Lift to representatives in (-q/2, q/2]."""
    a = np.asarray(p, dtype=np.int64) % q
    return np.where(a > q // 2, a - q, a)


def euclidean_norm_centered(p, params: RingParams) -> float:
    c = centered(as_poly(p, params), params.q).astype(np.float64)
    return float(math.sqrt(float(np.dot(c, c))))


@lru_cache(maxsize=None)
def _ntt_tables(n: int, q: int):
    # smallest generator of Z_q^* gives a primitive root; psi has order 2n
    logn = n.bit_length() - 1
    fac = _prime_factors(q - 1)
    g = 2
    while any(pow(g, (q - 1) // f, q) == 1 for f in fac):
        g += 1
    psi = pow(g, (q - 1) // (2 * n), q)
    brv = [int(format(k, f"0{logn}b")[::-1], 2) for k in range(n)]
    zetas = np.array([pow(psi, b, q) for b in brv], dtype=np.int64)
    return zetas, pow(n, q - 2, q)


def _prime_factors(m: int):
    out, d = [], 2
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        out.append(m)
    return out


def ntt_forward(p, params: RingParams) -> np.ndarray:
    """Negacyclic NTT; the image is in bit-reversed evaluation order."""
    zetas, _ = _ntt_tables(params.n, params.q)
    return kernels.ntt_forward(as_poly(p, params), zetas, params.q)


def ntt_inverse(p, params: RingParams) -> np.ndarray:
    zetas, n_inv = _ntt_tables(params.n, params.q)
    return kernels.ntt_inverse(as_poly(p, params), zetas, params.q, n_inv)


def ntt_pointwise(a_hat, b_hat, params: RingParams) -> np.ndarray:
    return (np.asarray(a_hat, dtype=np.int64) * np.asarray(b_hat, dtype=np.int64)) % params.q


def ring_mul(a, b, params: RingParams) -> np.ndarray:
    return ntt_inverse(ntt_pointwise(ntt_forward(a, params), ntt_forward(b, params), params), params)


def ring_inverse(a, params: RingParams) -> np.ndarray:
    """Multiplicative inverse in R_q; raises if some NTT slot vanishes."""
    a_hat = ntt_forward(a, params)
    if np.any(a_hat == 0):
        raise InvalidInputError("element is not invertible in R_q")
    inv = np.array([pow(int(v), params.q - 2, params.q) for v in a_hat], dtype=np.int64)
    return ntt_inverse(inv, params)


# ---------------------------------------------------------------------------
# Gram-Schmidt


@dataclass(frozen=True)
class GsoBasis:
    rows: np.ndarray
    norms: np.ndarray  # squared norms

    @property
    def max_norm(self) -> float:
        return float(np.sqrt(self.norms.max()))


def gram_schmidt(basis, tol: float = GSO_TOLERANCE) -> GsoBasis:
    """Orthogonalize the rows of ``basis`` in order.

    Each row is projected against the earlier orthogonal rows using the
    original row, then the same projection is repeated once on the residual
    to remove the rounding drift of the first pass.
    """
    b = np.array(basis, dtype=np.float64)
    if b.ndim != 2:
        raise InvalidInputError("basis must be a 2-D matrix")
    d = b.shape[0]
    rows = np.empty_like(b)
    norms = np.empty(d)
    for i in range(d):
        v = b[i].copy()
        if i:
            prev = rows[:i]
            for _ in range(2):
                v -= ((prev @ v) / norms[:i]) @ prev
        nv = float(v @ v)
        scale = float(b[i] @ b[i])
        if scale == 0.0 or nv <= tol * tol * scale:
            raise DegenerateBasisError(f"row {i} is linearly dependent on earlier rows")
        rows[i] = v
        norms[i] = nv
    return GsoBasis(rows, norms)


# ---------------------------------------------------------------------------
# discrete Gaussians


@lru_cache(maxsize=256)
def _centered_cdt(sigma: float):
    bound = int(math.ceil(TAIL_CUT * sigma))
    support = np.arange(-bound, bound + 1, dtype=np.int64)
    w = np.exp(-(support.astype(np.float64) ** 2) / (2.0 * sigma * sigma))
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    return support, cdf


def _rejection(center: float, sigma: float, size: int, rng) -> np.ndarray:
    lo = int(math.ceil(center - TAIL_CUT * sigma))
    hi = int(math.floor(center + TAIL_CUT * sigma))
    out = np.empty(size, dtype=np.int64)
    filled = 0
    while filled < size:
        want = max(64, int((size - filled) * 10.5))
        x = rng.integers(lo, hi + 1, size=want, dtype=np.int64)
        u = rng.random(want)
        keep = x[u < np.exp(-((x - center) ** 2) / (2.0 * sigma * sigma))]
        take = min(size - filled, keep.shape[0])
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sample_gaussian_vector(size: int, sigma: float, rng, center: float = 0.0) -> np.ndarray:
    """``size`` independent draws from the discrete Gaussian of std ``sigma``.

    Uses inversion of the cumulative table when the support is small and
    uniform-proposal rejection otherwise; both cut the tail at TAIL_CUT*sigma.
    """
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    if 2 * TAIL_CUT * sigma + 1 > _CDT_MAX_SUPPORT:
        return _rejection(center, sigma, size, rng)
    base = math.floor(center)
    frac = center - base
    if frac == 0.0:
        support, cdf = _centered_cdt(float(sigma))
    else:
        support, cdf = _shifted_cdt(frac, sigma)
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    np.minimum(idx, support.shape[0] - 1, out=idx)
    return support[idx] + base


def _shifted_cdt(frac: float, sigma: float):
    bound = int(math.ceil(TAIL_CUT * sigma)) + 1
    support = np.arange(-bound, bound + 1, dtype=np.int64)
    dist = support - frac
    support = support[np.abs(dist) <= TAIL_CUT * sigma]
    dist = support - frac
    w = np.exp(-(dist * dist) / (2.0 * sigma * sigma))
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    return support, cdf


def sample_discrete_gaussian(center: float, sigma: float, rng) -> int:
    return int(sample_gaussian_vector(1, sigma, rng, center=center)[0])


def gaussian_pmf(sigma: float, center: float = 0.0):
    """Normalized target pmf over the tail-cut support, for checking samplers."""
    lo = int(math.ceil(center - TAIL_CUT * sigma))
    hi = int(math.floor(center + TAIL_CUT * sigma))
    xs = np.arange(lo, hi + 1)
    w = np.exp(-((xs - center) ** 2) / (2.0 * sigma * sigma))
    return xs, w / w.sum()


def sample_gaussian_poly(params: RingParams, sigma: float, rng) -> np.ndarray:
    """Short polynomial with centered Gaussian coefficients (signed, not reduced)."""
    return sample_gaussian_vector(params.n, sigma, rng)


def sample_uniform_poly(params: RingParams, rng) -> np.ndarray:
    return rng.integers(0, params.q, size=params.n, dtype=np.int64)


# ---------------------------------------------------------------------------
# hashing into the ring


def keccak_stream(data: bytes, nbytes: int) -> bytes:
    """Counter-mode expansion: keccak256(data || ctr) for ctr = 0, 1, ..."""
    data = bytes(data)
    out = bytearray()
    ctr = 0
    while len(out) < nbytes:
        out += kernels.keccak256(data + ctr.to_bytes(4, "big"))
        ctr += 1
    return bytes(out[:nbytes])


def hash_to_ring(data: bytes, params: RingParams) -> np.ndarray:
    q = params.q
    width = 2 if q < 1 << 16 else 4
    limit = ((1 << (8 * width)) // q) * q
    data = bytes(data)
    out = np.empty(params.n, dtype=np.int64)
    filled, ctr = 0, 0
    dt = np.dtype(">u2") if width == 2 else np.dtype(">u4")
    while filled < params.n:
        block = kernels.keccak256(data + ctr.to_bytes(4, "big"))
        ctr += 1
        vals = np.frombuffer(block, dtype=dt).astype(np.int64)
        vals = vals[vals < limit] % q
        take = min(params.n - filled, vals.shape[0])
        out[filled:filled + take] = vals[:take]
        filled += take
    return out


def hash_to_bits(data: bytes, n: int) -> np.ndarray:
    raw = keccak_stream(data, (n + 7) // 8)
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:n]
    return bits.astype(np.int64)


# ---------------------------------------------------------------------------
# byte encodings


def poly_to_bytes(p, params: RingParams) -> bytes:
    """Canonical coefficients, little-endian, ``params.coeff_bytes`` each."""
    a = as_poly(p, params)
    dt = "<u2" if params.coeff_bytes == 2 else "<u4"
    return a.astype(dt).tobytes()


def poly_from_bytes(buf: bytes, params: RingParams) -> np.ndarray:
    dt = "<u2" if params.coeff_bytes == 2 else "<u4"
    if len(buf) != params.n * params.coeff_bytes:
        raise InvalidInputError("wrong encoded polynomial length")
    a = np.frombuffer(bytes(buf), dtype=dt).astype(np.int64)
    if np.any(a >= params.q):
        raise InvalidInputError("coefficient out of range")
    return a


def signed_to_bytes(p) -> bytes:
    """Signed integer coefficients as 4-byte little-endian two's complement."""
    a = np.asarray(p, dtype=np.int64)
    if np.any(np.abs(a) >= 1 << 31):
        raise InvalidInputError("coefficient does not fit in 4 bytes")
    return a.astype("<i4").tobytes()


def signed_from_bytes(buf: bytes, n: int) -> np.ndarray:
    if len(buf) != 4 * n:
        raise InvalidInputError("wrong encoded polynomial length")
    return np.frombuffer(bytes(buf), dtype="<i4").astype(np.int64)


# ---------------------------------------------------------------------------
# presets

RLWE_DEFAULT = RingParams(n=256, q=7681, sigma=2.5, s=2.5)

# prime, 1 mod 2048, just under 2^30: room for the wide masking Gaussian
SIG_MODULUS = 1073707009


def ntru_width(n: int, q: int) -> float:
    """Width of f, g: 1.17 * sqrt(q / 2n)."""
    return 1.17 * math.sqrt(q / (2 * n))


def signature_params(n: int, q: int = SIG_MODULUS, sigma: float | None = None) -> RingParams:
    s = ntru_width(n, q)
    # sigma is fixed only after trapgen (1.5 x max GSO norm); seed with the estimate
    return RingParams(n=n, q=q, sigma=sigma if sigma else 1.5 * 1.17 * math.sqrt(q), s=s)


SECURITY_PRESETS = {128: 512, 64: 256, 32: 128, 16: 64}


def preset_for_security(security: int) -> RingParams:
    try:
        return signature_params(SECURITY_PRESETS[security])
    except KeyError:
        raise ParameterError(
            f"no parameter preset for security {security}; choose from {sorted(SECURITY_PRESETS)}"
        ) from None
