# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Keccak-f[1600], negacyclic NTT, Berlekamp-Massey.

Mirrors ``pqvrf._fallback`` exactly; see that module for the reference code.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.string cimport memset

cnp.import_array()

cdef uint64_t[24] RC = [
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808AULL, 0x8000000080008000ULL,
    0x000000000000808BULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
    0x000000000000008AULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000AULL,
    0x000000008000808BULL, 0x800000000000008BULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
    0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800AULL, 0x800000008000000AULL,
    0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
]

cdef int[25] ROT = [
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
]

cdef int[25] PI_DST


cdef inline uint64_t rol(uint64_t v, int r) nogil:
    if r == 0:
        return v
    return (v << r) | (v >> (64 - r))


cdef void _init_pi():
    cdef int x, y
    for x in range(5):
        for y in range(5):
            PI_DST[x + 5 * y] = y + 5 * ((2 * x + 3 * y) % 5)


_init_pi()


cdef void _permute(uint64_t* a) nogil:
    cdef uint64_t c[5]
    cdef uint64_t d[5]
    cdef uint64_t b[25]
    cdef int rnd, x, y, i
    for rnd in range(24):
        for x in range(5):
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20]
        for x in range(5):
            d[x] = c[(x + 4) % 5] ^ rol(c[(x + 1) % 5], 1)
        for i in range(25):
            a[i] ^= d[i % 5]
        for i in range(25):
            b[PI_DST[i]] = rol(a[i], ROT[i])
        for y in range(0, 25, 5):
            for x in range(5):
                a[y + x] = b[y + x] ^ ((~b[y + (x + 1) % 5]) & b[y + (x + 2) % 5])
        a[0] ^= RC[rnd]


def keccak_f1600(lanes):
    cdef uint64_t a[25]
    cdef int i
    for i in range(25):
        a[i] = lanes[i]
    _permute(a)
    for i in range(25):
        lanes[i] = a[i]
    return lanes


def keccak_sponge(data, int rate, int pad, Py_ssize_t outlen):
    cdef const uint8_t[:] buf = memoryview(bytes(data)).cast("B")
    cdef Py_ssize_t n = buf.shape[0]
    cdef uint64_t a[25]
    cdef uint8_t block[200]
    cdef Py_ssize_t off = 0, i, take
    cdef int nl = rate // 8, j, k
    cdef uint64_t lane
    memset(a, 0, sizeof(a))
    with nogil:
        while True:
            take = n - off
            if take >= rate:
                for j in range(nl):
                    lane = 0
                    for k in range(8):
                        lane |= (<uint64_t>buf[off + 8 * j + k]) << (8 * k)
                    a[j] ^= lane
                _permute(a)
                off += rate
                continue
            memset(block, 0, rate)
            for i in range(take):
                block[i] = buf[off + i]
            block[take] ^= <uint8_t>pad
            block[rate - 1] ^= 0x80
            for j in range(nl):
                lane = 0
                for k in range(8):
                    lane |= (<uint64_t>block[8 * j + k]) << (8 * k)
                a[j] ^= lane
            _permute(a)
            break
    out = bytearray(outlen)
    cdef uint8_t[:] o = out
    cdef Py_ssize_t pos = 0
    while True:
        j = 0
        while j < nl and pos < outlen:
            for k in range(8):
                if pos < outlen:
                    o[pos] = <uint8_t>((a[j] >> (8 * k)) & 0xFF)
                    pos += 1
            j += 1
        if pos >= outlen:
            return bytes(out)
        _permute(a)


def keccak256(data):
    return keccak_sponge(data, 136, 0x01, 32)


def ntt_forward(a, zetas, int64_t q):
    cdef cnp.ndarray[int64_t, ndim=1] r = np.array(a, dtype=np.int64)
    cdef const int64_t[:] z = np.ascontiguousarray(zetas, dtype=np.int64)
    cdef int64_t[:] v = r
    cdef Py_ssize_t n = v.shape[0], k = 1, length = n // 2, start, j
    cdef int64_t zeta, t, lo
    with nogil:
        while length >= 1:
            start = 0
            while start < n:
                zeta = z[k]
                k += 1
                for j in range(start, start + length):
                    t = (zeta * v[j + length]) % q
                    lo = v[j]
                    v[j + length] = (lo - t + q) % q
                    v[j] = (lo + t) % q
                start += 2 * length
            length //= 2
    return r


def ntt_inverse(a, zetas, int64_t q, int64_t n_inv):
    cdef cnp.ndarray[int64_t, ndim=1] r = np.array(a, dtype=np.int64)
    cdef const int64_t[:] z = np.ascontiguousarray(zetas, dtype=np.int64)
    cdef int64_t[:] v = r
    cdef Py_ssize_t n = v.shape[0], k = n, length = 1, start, j
    cdef int64_t zeta, lo, hi
    with nogil:
        while length < n:
            start = 0
            while start < n:
                k -= 1
                zeta = q - z[k]
                for j in range(start, start + length):
                    lo = v[j]
                    hi = v[j + length]
                    v[j] = (lo + hi) % q
                    v[j + length] = (zeta * ((lo - hi + q) % q)) % q
                start += 2 * length
            length *= 2
        for j in range(n):
            v[j] = (v[j] * n_inv) % q
    return r


def berlekamp_massey(bits):
    cdef const uint8_t[:] s = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef Py_ssize_t n = s.shape[0], i, j, shift
    cdef cnp.ndarray[uint8_t, ndim=1] c_arr = np.zeros(n + 1, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] b_arr = np.zeros(n + 1, dtype=np.uint8)
    cdef cnp.ndarray[uint8_t, ndim=1] t_arr = np.zeros(n + 1, dtype=np.uint8)
    cdef uint8_t[:] c = c_arr
    cdef uint8_t[:] b = b_arr
    cdef uint8_t[:] t = t_arr
    cdef Py_ssize_t L = 0, m = -1
    cdef uint8_t d
    c[0] = 1
    b[0] = 1
    with nogil:
        for i in range(n):
            d = s[i]
            for j in range(1, L + 1):
                d ^= c[j] & s[i - j]
            if d:
                for j in range(n + 1):
                    t[j] = c[j]
                shift = i - m
                for j in range(shift, n + 1):
                    c[j] ^= b[j - shift]
                if 2 * L <= i:
                    L = i + 1 - L
                    m = i
                    for j in range(n + 1):
                        b[j] = t[j]
    return L
