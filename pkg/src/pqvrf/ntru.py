"""NTRU trapdoor: (f, g, F, G, h) with fG - gF = q and h = g/f mod q.

The NTRU equation is solved with resultants: for r_f = Res(f, x^n + 1) we
build rho_f with rho_f * f = r_f in Z[x]/(x^n + 1), take Bezout coefficients of
(r_f, r_g), scale by q and Babai-reduce (F, G) against (f, g). Resultants and
rho are obtained through repeated field norms f(x) f(-x), and big-integer
polynomial products are done by Kronecker substitution on gmpy2 integers.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import gmpy2
import numpy as np
from gmpy2 import mpz

from . import ring
from .errors import GenerationError, InvalidInputError, ParameterError, UnsolvableError
from .ring import GsoBasis, RingParams

SIGNING_SIGMA_FACTOR = 1.5
SMOOTHING_SLACK = 1.25
TRAPGEN_ATTEMPTS = 200
PREIMAGE_ATTEMPTS = 200

# ---------------------------------------------------------------------------
# exact integer polynomials modulo x^n + 1 (lists of mpz)


def _pack(a, bits):
    if len(a) == 1:
        return mpz(a[0])
    h = len(a) // 2
    return _pack(a[:h], bits) + (_pack(a[h:], bits) << (h * bits))


def _unpack(v, count, bits):
    if count == 1:
        return [v]
    h = count // 2
    k = h * bits
    low = gmpy2.f_mod_2exp(v, k)
    if low >> (k - 1):
        low -= mpz(1) << k
    return _unpack(low, h, bits) + _unpack((v - low) >> k, count - h, bits)


def _bitlen(a):
    return max(int(gmpy2.bit_length(mpz(x))) for x in a)


def zmul(a, b):
    """Exact product of integer polynomials modulo x^n + 1."""
    n = len(a)
    if len(b) != n:
        raise InvalidInputError("operand lengths differ")
    bits = _bitlen(a) + _bitlen(b) + n.bit_length() + 2
    prod = _pack(list(a), bits) * _pack(list(b), bits)
    c = _unpack(prod, 2 * n, bits)
    return [c[i] - c[i + n] for i in range(n)]


def zadj(a):
    """Adjoint a(1/x) modulo x^n + 1."""
    return [a[0]] + [-x for x in reversed(a[1:])]


def _galois_conj(a):
    return [x if i % 2 == 0 else -x for i, x in enumerate(a)]


def _field_norm(a):
    """N(a)(y) with a(x) a(-x) = N(a)(x^2), computed in the half-size ring."""
    even, odd = a[0::2], a[1::2]
    e2 = zmul(even, even)
    o2 = zmul(odd, odd)
    # multiply o2 by y modulo y^(n/2) + 1
    yo2 = [-o2[-1]] + o2[:-1]
    return [x - y for x, y in zip(e2, yo2)]


def _lift(a):
    """a(x^2) as a polynomial of twice the length."""
    out = [mpz(0)] * (2 * len(a))
    out[0::2] = a
    return out


def resultant_bezout(a):
    """Return (r, rho) with rho * a = r (a constant) modulo x^n + 1.

    r is Res(a, x^n + 1) up to sign; rho is a's adjugate under the norm tower.
    """
    a = [mpz(int(x)) for x in a]
    if len(a) == 1:
        return a[0], [mpz(1)]
    r, rho_half = resultant_bezout(_field_norm(a))
    return r, zmul(_galois_conj(a), _lift(rho_half))


def babai_reduce(f, g, F, G):
    """Reduce (F, G) by the rounded exact quotient (F f* + G g*) / (f f* + g g*)."""
    f = [mpz(int(x)) for x in f]
    g = [mpz(int(x)) for x in g]
    F = [mpz(int(x)) for x in F]
    G = [mpz(int(x)) for x in G]
    fa, ga = zadj(f), zadj(g)
    den = [x + y for x, y in zip(zmul(f, fa), zmul(g, ga))]
    r, rho = resultant_bezout(den)
    if r < 0:
        r, rho = -r, [-x for x in rho]
    for _ in range(8):
        num = [x + y for x, y in zip(zmul(F, fa), zmul(G, ga))]
        scaled = zmul(num, rho)
        k = [gmpy2.f_div(2 * x + r, 2 * r) for x in scaled]  # round half up
        if not any(k):
            break
        kf, kg = zmul(k, f), zmul(k, g)
        F = [x - y for x, y in zip(F, kf)]
        G = [x - y for x, y in zip(G, kg)]
    return F, G


def ntru_solve(f, g, params: RingParams):
    """Integer (F, G) with f G - g F = q modulo x^n + 1, Babai-reduced."""
    q = params.q
    if len(f) != params.n or len(g) != params.n:
        raise InvalidInputError("f and g must have n coefficients")
    rf, rho_f = resultant_bezout(f)
    rg, rho_g = resultant_bezout(g)
    d, u, v = gmpy2.gcdext(rf, rg)
    if d == 0 or q % int(d):
        raise UnsolvableError(f"gcd of resultants ({int(d)}) does not divide q")
    scale = mpz(q) // d
    F = [-scale * v * x for x in rho_g]
    G = [scale * u * x for x in rho_f]
    F, G = babai_reduce(f, g, F, G)
    return np.array([int(x) for x in F], dtype=object), np.array([int(x) for x in G], dtype=object)


def ntru_identity_holds(f, g, F, G, q: int) -> bool:
    lhs = [a - b for a, b in zip(zmul(list(map(int, f)), list(map(int, G))),
                                 zmul(list(map(int, g)), list(map(int, F))))]
    return lhs[0] == q and not any(lhs[1:])


# ---------------------------------------------------------------------------
# trapdoor


def anticirculant(p) -> np.ndarray:
    """Rows are the coefficient vectors of x^i * p modulo x^n + 1."""
    p = np.asarray(p, dtype=np.int64)
    n = p.shape[0]
    m = np.empty((n, n), dtype=np.int64)
    row = p.copy()
    for i in range(n):
        m[i] = row
        row = np.concatenate(([-row[-1]], row[:-1]))
    return m


def ntru_basis(f, g, F, G) -> np.ndarray:
    top = np.hstack([anticirculant(g), -anticirculant(f)])
    bottom = np.hstack([anticirculant(G), -anticirculant(F)])
    return np.vstack([top, bottom])


@dataclass(frozen=True)
class NtruTrapdoor:
    params: RingParams
    f: np.ndarray
    g: np.ndarray
    F: np.ndarray
    G: np.ndarray
    h: np.ndarray
    basis: np.ndarray
    gso: GsoBasis

    @property
    def signing_sigma(self) -> float:
        return SIGNING_SIGMA_FACTOR * self.gso.max_norm

    def row_norms(self):
        fg = math.sqrt(float(np.dot(self.f, self.f) + np.dot(self.g, self.g)))
        FG = math.sqrt(float(np.dot(self.F, self.F) + np.dot(self.G, self.G)))
        return fg, FG


def _fft_slots(p):
    n = len(p)
    zeta = np.exp(1j * np.pi * np.arange(n) / n)
    return np.fft.fft(np.asarray(p, dtype=np.float64) * zeta)


def _gs_quality(f, g, q):
    """Falcon-style quality: ||(g,-f)|| and ||q (f*, g*) / (ff* + gg*)||."""
    n = len(f)
    fh, gh = _fft_slots(f), _fft_slots(g)
    den = np.abs(fh) ** 2 + np.abs(gh) ** 2
    first = math.sqrt(float(np.dot(f, f) + np.dot(g, g)))
    # Parseval in the twisted basis: ||p||^2 = sum |p_hat|^2 / n
    second = q * math.sqrt(float(np.sum(1.0 / den)) / n)
    return first, second


def trapgen(params: RingParams, rng, attempts: int = TRAPGEN_ATTEMPTS) -> NtruTrapdoor:
    n, q = params.n, params.q
    bound = params.s * math.sqrt(2 * n)
    for _ in range(attempts):
        f = ring.sample_gaussian_vector(n, params.s, rng)
        g = ring.sample_gaussian_vector(n, params.s, rng)
        first, second = _gs_quality(f, g, q)
        if first > bound or second > bound:
            continue
        f_hat = ring.ntt_forward(f, params)
        if np.any(f_hat == 0):
            continue
        try:
            F, G = ntru_solve(f, g, params)
        except UnsolvableError:
            continue
        F = np.array([int(x) for x in F], dtype=np.int64)
        G = np.array([int(x) for x in G], dtype=np.int64)
        h = ring.ring_mul(g, ring.ring_inverse(f, params), params)
        basis = ntru_basis(f, g, F, G)
        gso = ring.gram_schmidt(basis)
        if gso.max_norm > bound:
            continue
        # the signature ring's sigma is the signing width derived from this basis
        signed = replace(params, sigma=SIGNING_SIGMA_FACTOR * gso.max_norm)
        return NtruTrapdoor(signed, f, g, F, G, h, basis, gso)
    raise GenerationError(f"no acceptable trapdoor after {attempts} attempts")


def klein_sample(basis: np.ndarray, gso: GsoBasis, target: np.ndarray, sigma: float, rng):
    """Randomized nearest plane: lattice vector v near ``target``; returns target - v."""
    c = np.array(target, dtype=np.float64)
    b = basis.astype(np.float64)
    rows, norms = gso.rows, gso.norms
    widths = sigma / np.sqrt(norms)
    for i in range(b.shape[0] - 1, -1, -1):
        centre = float(rows[i] @ c) / norms[i]
        z = ring.sample_discrete_gaussian(centre, float(widths[i]), rng)
        if z:
            c -= z * b[i]
    return np.rint(c).astype(np.int64)


def gpv_sample_preimage(trapdoor: NtruTrapdoor, target, sigma: float, rng):
    """Short (s1, s2) with s1 + s2 h = target mod q."""
    params = trapdoor.params
    n, q = params.n, params.q
    if sigma < SMOOTHING_SLACK * trapdoor.gso.max_norm:
        raise ParameterError(
            f"sigma {sigma:.1f} below the smoothing floor {SMOOTHING_SLACK * trapdoor.gso.max_norm:.1f}"
        )
    t = ring.as_poly(target, params)
    centre = np.concatenate([t, np.zeros(n, dtype=np.int64)])
    bound = sigma * math.sqrt(2 * n)
    for _ in range(PREIMAGE_ATTEMPTS):
        s = klein_sample(trapdoor.basis, trapdoor.gso, centre, sigma, rng)
        if math.sqrt(float(np.dot(s.astype(np.float64), s))) <= bound:
            s1, s2 = s[:n], s[n:]
            assert np.array_equal((s1 + ring.ring_mul(s2 % q, trapdoor.h, params)) % q, t)
            return s1, s2
    raise GenerationError("preimage norm bound not met")


# ---------------------------------------------------------------------------
# files

_MAGIC_MASTER = b"NTRU"
_MAGIC_PUBLIC = b"NTRH"
_VERSION = 1


def _header(magic, params):
    return magic + struct.pack("<HHII", _VERSION, 0, params.n, params.q)


def _read_header(buf, magic):
    if len(buf) < 16 or buf[:4] != magic:
        raise InvalidInputError("bad magic")
    version, reserved, n, q = struct.unpack("<HHII", buf[4:16])
    if version != _VERSION or reserved:
        raise InvalidInputError(f"unsupported version {version}")
    return n, q


def trapdoor_to_bytes(td: NtruTrapdoor) -> bytes:
    p = td.params
    body = b"".join(ring.signed_to_bytes(x) for x in (td.f, td.g, td.F, td.G))
    return _header(_MAGIC_MASTER, p) + struct.pack("<dd", p.sigma, p.s) + body + ring.poly_to_bytes(td.h, p)


def trapdoor_from_bytes(buf: bytes) -> NtruTrapdoor:
    n, q = _read_header(buf, _MAGIC_MASTER)
    sigma, s = struct.unpack("<dd", buf[16:32])
    params = RingParams(n=n, q=q, sigma=sigma, s=s)
    off = 32
    polys = []
    for _ in range(4):
        polys.append(ring.signed_from_bytes(buf[off:off + 4 * n], n))
        off += 4 * n
    h = ring.poly_from_bytes(buf[off:], params)
    f, g, F, G = polys
    if not ntru_identity_holds(f, g, F, G, q):
        raise InvalidInputError("stored trapdoor violates fG - gF = q")
    basis = ntru_basis(f, g, F, G)
    return NtruTrapdoor(params, f, g, F, G, h, basis, ring.gram_schmidt(basis))


def public_to_bytes(td: NtruTrapdoor) -> bytes:
    return _header(_MAGIC_PUBLIC, td.params) + ring.poly_to_bytes(td.h, td.params)


def public_from_bytes(buf: bytes, params: RingParams) -> np.ndarray:
    n, q = _read_header(buf, _MAGIC_PUBLIC)
    if (n, q) != (params.n, params.q):
        raise InvalidInputError("public key parameters mismatch")
    return ring.poly_from_bytes(buf[16:], params)
