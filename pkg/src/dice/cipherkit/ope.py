"""Order-preserving encryption by lazy sampling of a random order-preserving function.

The cipher walks a binary search over the ciphertext range.  At each node the
number of domain points falling in the left half of the range is drawn from a
hypergeometric distribution with coins from a keyed PRF over the node state,
so encryption and decryption reconstruct the same tree.

Hypergeometric draws are exact (inverse CDF over big integers) whenever the
reduced instance has at most ``EXACT_MAX_DRAWS`` draws, or a population below
2**20 with n * bit_length(N) <= ``EXACT_MAX_BITS`` (so any tree with r <= 16
is sampled exactly throughout); larger instances use
Stadlober's ratio-of-uniforms sampler (HRUA) with log-factorial differences
evaluated in a cancellation-free form so it stays accurate up to 2**62.
"""
from __future__ import annotations

import math
import struct
from math import comb

from dice.errors import DecryptFailure, NotInImage, OutOfDomain

from .base import Cipher
from .prf import CoinStream

EXACT_MAX_DRAWS = 64
EXACT_MAX_BITS = 8192
EXACT_MAX_POPULATION = 1 << 20
_MEMO_LIMIT = 1 << 16
_NODE_MEMO_LIMIT = 1 << 18

_D1 = 1.7155277699214135
_D2 = 0.8989161620588988


def hgd_inverse_cdf(population: int, successes: int, draws: int, u: int) -> int:
    """Smallest k with sum_{j<=k} C(K,j)C(N-K,n-j) > u, for u in [0, C(N,n))."""
    N, K, n = population, successes, draws
    lo = max(0, n - (N - K))
    hi = min(n, K)
    term = comb(K, lo) * comb(N - K, n - lo)
    acc = term
    k = lo
    while u >= acc:
        if k >= hi:
            raise ValueError(f"u={u} outside [0, C({N},{n}))")
        term = term * (K - k) * (n - k) // ((k + 1) * (N - K - n + k + 1))
        k += 1
        acc += term
    return k


def _exact(N, K, n, coins) -> int:
    return hgd_inverse_cdf(N, K, n, coins.below(comb(N, n)))


def _stirling_corr(z: float) -> float:
    z2 = z * z
    return 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)


def logfact_diff(x: int, y: int) -> float:
    """log(x!) - log(y!) without catastrophic cancellation for huge x, y."""
    if x == y:
        return 0.0
    a, b = x + 1, y + 1
    if max(a, b) < (1 << 24) or min(a, b) < 16:
        return math.lgamma(a) - math.lgamma(b)
    # lgamma(b + d) - lgamma(b) via Stirling, with the large terms differenced analytically.
    d = a - b
    xb = float(b)
    return ((xb - 0.5) * math.log1p(d / xb) + d * math.log(float(a)) - d
            + _stirling_corr(float(a)) - _stirling_corr(xb))


def _hrua(good: int, bad: int, sample: int, coins) -> int:
    popsize = good + bad
    computed = min(sample, popsize - sample)
    mingb, maxgb = min(good, bad), max(good, bad)
    p = mingb / popsize
    q = maxgb / popsize
    a = computed * p + 0.5
    var = (popsize - computed) * computed * p * q / (popsize - 1)
    c = math.sqrt(var + 0.5)
    h = _D1 * c + _D2
    m = (computed + 1) * (mingb + 1) // (popsize + 2)
    upper = min(computed, mingb)
    b = min(upper + 1, math.floor(a + 16.0 * c))
    while True:
        u = coins.uniform()
        v = coins.uniform()
        if u == 0.0:
            continue
        x = a + h * (v - 0.5) / u
        if x < 0.0 or x >= b:
            continue
        k = min(int(math.floor(x)), upper)
        t = (logfact_diff(m, k) + logfact_diff(mingb - m, mingb - k)
             + logfact_diff(computed - m, computed - k)
             + logfact_diff(maxgb - computed + m, maxgb - computed + k))
        if u * (4.0 - u) - 3.0 <= t:
            break
        if u * (u - t) >= 1.0:
            continue
        if 2.0 * math.log(u) <= t:
            break
    if good > bad:
        k = computed - k
    if computed < sample:
        k = good - k
    return k


def hgd_sample(population: int, successes: int, draws: int, coins) -> int:
    """Number of successes among ``draws`` draws without replacement.

    ``coins`` must provide ``below(bound)`` and ``uniform()`` (see CoinStream).
    """
    N, K, n = population, successes, draws
    if not (0 <= K <= N and 0 <= n <= N):
        raise ValueError(f"invalid hypergeometric parameters N={N} K={K} n={n}")
    if n == 0 or K == 0:
        return 0
    if K == N:
        return n
    if n == N:
        return K
    # Reduce by symmetry so that n <= K <= N/2; each map preserves the exact law.
    if 2 * K > N:
        return n - hgd_sample(N, N - K, n, coins)
    if 2 * n > N:
        return K - hgd_sample(N, K, N - n, coins)
    if n > K:
        return hgd_sample(N, n, K, coins)
    if n <= EXACT_MAX_DRAWS or (N < EXACT_MAX_POPULATION
                                and n * N.bit_length() <= EXACT_MAX_BITS):
        return _exact(N, K, n, coins)
    k = _hrua(K, N - K, n, coins)
    return max(0, min(k, n))


class OpeCipher(Cipher):
    kind = "ope"

    def __init__(self, spec):
        super().__init__(spec)
        self._d = spec.domain_bits
        self._r = spec.range_bits
        self._enc_memo: dict = {}
        self._dec_memo: dict = {}
        self._node_memo: dict = {}

    def _coins(self, tag: bytes, ctx, d_lo, d_hi, r_lo, r_hi, v) -> CoinStream:
        seed = (b"dice-ope-v1" + tag + ctx.to_bytes()
                + struct.pack(">QQQQQ", d_lo, d_hi, r_lo, r_hi, v))
        return CoinStream(self.spec.key, seed)

    def _split(self, ctx, d_lo, d_hi, r_lo, r_hi):
        # upper tree levels are shared by every value of a column
        key = (ctx, d_lo, d_hi, r_lo, r_hi)
        hit = self._node_memo.get(key)
        if hit is not None:
            return hit
        hit = self._split_uncached(ctx, d_lo, d_hi, r_lo, r_hi)
        if len(self._node_memo) >= _NODE_MEMO_LIMIT:
            self._node_memo.clear()
        self._node_memo[key] = hit
        return hit

    def _split_uncached(self, ctx, d_lo, d_hi, r_lo, r_hi):
        big_m = d_hi - d_lo + 1
        big_n = r_hi - r_lo + 1
        y = r_lo + (big_n + 1) // 2 - 1
        coins = self._coins(b"\x00", ctx, d_lo, d_hi, r_lo, r_hi, y)
        x = d_lo - 1 + hgd_sample(big_n, big_m, y - r_lo + 1, coins)
        return x, y

    def _leaf(self, ctx, d_lo, r_lo, r_hi) -> int:
        coins = self._coins(b"\x01", ctx, d_lo, d_lo, r_lo, r_hi, d_lo)
        return r_lo + coins.below(r_hi - r_lo + 1)

    def _encrypt(self, m, ctx):
        if not 0 <= m < (1 << self._d):
            raise OutOfDomain(f"{m} outside [0, 2^{self._d})")
        key = (ctx, m)
        hit = self._enc_memo.get(key)
        if hit is not None:
            return hit
        d_lo, d_hi = 0, (1 << self._d) - 1
        r_lo, r_hi = 0, (1 << self._r) - 1
        while d_lo != d_hi:
            x, y = self._split(ctx, d_lo, d_hi, r_lo, r_hi)
            if m <= x:
                d_hi, r_hi = x, y
            else:
                d_lo, r_lo = x + 1, y + 1
        c = self._leaf(ctx, d_lo, r_lo, r_hi)
        if len(self._enc_memo) >= _MEMO_LIMIT:
            self._enc_memo.clear()
        self._enc_memo[key] = c
        return c

    def _decrypt(self, c, ctx):
        if isinstance(c, bool) or not isinstance(c, int):
            raise DecryptFailure(f"ope ciphertext must be an integer, got {c!r}")
        if not 0 <= c < (1 << self._r):
            raise NotInImage(f"{c} outside [0, 2^{self._r})")
        key = (ctx, c)
        hit = self._dec_memo.get(key)
        if hit is not None:
            return hit
        d_lo, d_hi = 0, (1 << self._d) - 1
        r_lo, r_hi = 0, (1 << self._r) - 1
        while d_lo != d_hi:
            x, y = self._split(ctx, d_lo, d_hi, r_lo, r_hi)
            if c <= y:
                if x < d_lo:
                    raise NotInImage(f"{c} is not an ope ciphertext")
                d_hi, r_hi = x, y
            else:
                if x >= d_hi:
                    raise NotInImage(f"{c} is not an ope ciphertext")
                d_lo, r_lo = x + 1, y + 1
        if self._leaf(ctx, d_lo, r_lo, r_hi) != c:
            raise NotInImage(f"{c} is not an ope ciphertext")
        if len(self._dec_memo) >= _MEMO_LIMIT:
            self._dec_memo.clear()
        self._dec_memo[key] = d_lo
        return d_lo


def ope_encrypt(cipher: OpeCipher, m: int, ctx=None) -> int:
    return cipher.encrypt(m) if ctx is None else cipher.encrypt(m, ctx)


def ope_decrypt(cipher: OpeCipher, c: int, ctx=None) -> int:
    return cipher.decrypt(c) if ctx is None else cipher.decrypt(c, ctx)
