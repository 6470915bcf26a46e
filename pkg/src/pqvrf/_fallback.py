"""Pure-Python/numpy versions of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature and
bit-identical results; ``pqvrf.kernels`` picks one at import time.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

_RC = [
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
]

# rotation offsets indexed by lane x + 5*y
_ROT = [
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
]


def _rol(v, r):
    return ((v << r) | (v >> (64 - r))) & _MASK64 if r else v


def keccak_f1600(lanes):
    """Apply the 24-round permutation in place to a list of 25 lane ints."""
    a = lanes
    for rc in _RC:
        c = [a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20] for x in range(5)]
        d = [c[(x - 1) % 5] ^ _rol(c[(x + 1) % 5], 1) for x in range(5)]
        for i in range(25):
            a[i] ^= d[i % 5]
        b = [0] * 25
        for x in range(5):
            for y in range(5):
                b[y + 5 * ((2 * x + 3 * y) % 5)] = _rol(a[x + 5 * y], _ROT[x + 5 * y])
        for y in range(0, 25, 5):
            row = b[y:y + 5]
            for x in range(5):
                a[y + x] = row[x] ^ ((~row[(x + 1) % 5]) & row[(x + 2) % 5])
        a[0] ^= rc
    return a


def keccak_sponge(data, rate, pad, outlen):
    """Keccak sponge over ``data`` with the given domain padding byte."""
    data = bytes(data)
    padded = bytearray(data)
    padded.append(pad)
    while len(padded) % rate:
        padded.append(0)
    padded[-1] |= 0x80
    lanes = [0] * 25
    nl = rate // 8
    for off in range(0, len(padded), rate):
        block = padded[off:off + rate]
        for i in range(nl):
            lanes[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
        keccak_f1600(lanes)
    out = bytearray()
    while True:
        for i in range(nl):
            out += lanes[i].to_bytes(8, "little")
        if len(out) >= outlen:
            return bytes(out[:outlen])
        keccak_f1600(lanes)


def keccak256(data):
    return keccak_sponge(data, 136, 0x01, 32)


def ntt_forward(a, zetas, q):
    """Negacyclic NTT (Cooley-Tukey, output in bit-reversed order)."""
    a = np.array(a, dtype=np.int64)
    n = a.shape[0]
    k = 1
    length = n // 2
    while length >= 1:
        m = n // (2 * length)
        blk = a.reshape(m, 2, length)
        z = zetas[k:k + m].reshape(m, 1)
        k += m
        t = (z * blk[:, 1, :]) % q
        hi = (blk[:, 0, :] - t) % q
        blk[:, 0, :] = (blk[:, 0, :] + t) % q
        blk[:, 1, :] = hi
        length //= 2
    return a


def ntt_inverse(a, zetas, q, n_inv):
    """Inverse of :func:`ntt_forward` (Gentleman-Sande), natural order output."""
    a = np.array(a, dtype=np.int64)
    n = a.shape[0]
    k = n
    length = 1
    while length < n:
        m = n // (2 * length)
        z = (q - zetas[k - m:k][::-1]).reshape(m, 1)
        k -= m
        blk = a.reshape(m, 2, length)
        lo = blk[:, 0, :].copy()
        hi = blk[:, 1, :]
        blk[:, 0, :] = (lo + hi) % q
        blk[:, 1, :] = (z * ((lo - hi) % q)) % q
        length *= 2
    return (a * n_inv) % q


def berlekamp_massey(bits):
    """Linear complexity of a 0/1 sequence over GF(2)."""
    s = np.asarray(bits, dtype=np.uint8)
    n = s.shape[0]
    c = np.zeros(n + 1, dtype=np.uint8)
    b = np.zeros(n + 1, dtype=np.uint8)
    c[0] = b[0] = 1
    L, m = 0, -1
    for i in range(n):
        # discrepancy d = s[i] + sum_{j=1..L} c[j] s[i-j]
        d = int(s[i]) ^ (int(np.dot(c[1:L + 1], s[i - L:i][::-1])) & 1) if L else int(s[i])
        if d:
            t = c.copy()
            shift = i - m
            c[shift:] ^= b[:n + 1 - shift]
            if 2 * L <= i:
                L = i + 1 - L
                m = i
                b = t
    return L
