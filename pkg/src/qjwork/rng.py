"""Counter-based random streams (Philox4x64-10).

Every uniform draw is a pure function of ``(master_seed, stream_index, draw)``,
so a trajectory's random numbers never depend on scheduling or on how many
trajectories run next to it.  Block ``n`` of stream ``s`` is the Philox
output for counter ``(n, s, 0, 0)`` under key ``(master_seed, 0)``; draw ``d``
is lane ``d % 4`` of block ``d // 4``.
"""
import numpy as np
from numba import njit

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _MASK32) + lo_hi
    hi = hi_hi + (hi_lo >> _S32) + (cross >> _S32)
    return hi, a * b


@njit(cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1, out):
    """Ten-round Philox4x64 block; writes four uint64 words into ``out``."""
    for i in range(10):
        if i > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


@njit(cache=True)
def draw_uniform(seed, stream, counter, buf, buf_block):
    """Uniform in [0, 1) for draw ``counter`` of ``stream``.

    ``buf``/``buf_block`` cache the current Philox block; returns the value and
    the (possibly refreshed) block index.
    """
    block = counter >> np.uint64(2)
    if buf_block != block:
        philox4x64(block, stream, np.uint64(0), np.uint64(0),
                   seed, np.uint64(0), buf)
        buf_block = block
    x = buf[counter & np.uint64(3)]
    return (x >> _S11) * _TO_UNIT, buf_block


def _u64(x):
    return np.uint64(int(x) & 0xFFFFFFFFFFFFFFFF)


class RngStream:
    """Sequential uniform draws from one ``(master_seed, stream_index)`` stream."""

    def __init__(self, master_seed, stream_index, counter=0):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_index = int(stream_index) & 0xFFFFFFFFFFFFFFFF
        self.counter = int(counter)
        self._buf = np.zeros(4, dtype=np.uint64)
        self._block = _u64(-1)

    def uniform(self):
        u, self._block = draw_uniform(_u64(self.master_seed), _u64(self.stream_index),
                                      _u64(self.counter), self._buf, self._block)
        self.counter += 1
        return float(u)

    def uniforms(self, n):
        return np.array([self.uniform() for _ in range(n)])

    def __repr__(self):
        return (f"RngStream(master_seed={self.master_seed}, "
                f"stream_index={self.stream_index}, counter={self.counter})")
