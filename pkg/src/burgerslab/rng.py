"""Counter-based Gaussian streams.

Every draw is a pure function of ``(key, counter)``: the key identifies a
stream (one per Monte-Carlo path) and the counter is the draw's position.
Paths therefore see the same noise however they are batched, scheduled or
split across calls, which is what the common-random-number comparisons rely
on.

The hash is the SplitMix64 finalizer applied to ``key ^ mix(counter)``;
normals come from Box-Muller on pairs of 53-bit uniforms. Step ``s`` of a
stream with ``N`` modes uses pair counters ``s * ceil(N/2) + k // 2``.
"""

import hashlib

import numpy as np

from ._accel import USE_NUMBA, njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SALT = np.uint64(0x5851F42D4C957F2D)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_INV53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * np.pi


@njit
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def uniform53(key, counter):
    """Uniform on (0, 1) from the hashed counter; never returns 0 or 1 (arrays)."""
    bits = mix64.py_func(key ^ mix64.py_func(counter * GOLDEN))
    return ((bits >> _S11).astype(np.float64) + 0.5) * _INV53


@njit
def _uniform53_scalar(key, counter):
    bits = mix64(key ^ mix64(counter * GOLDEN))
    return (np.float64(bits >> _S11) + 0.5) * _INV53


@njit
def fill_normals(key, step, out):
    """Write the ``len(out)`` standard normals of ``step`` into ``out``."""
    n = out.shape[0]
    npairs = np.uint64((n + 1) // 2)
    base = np.uint64(step) * npairs
    for p in range(npairs):
        c = _TWO * (base + np.uint64(p))
        u1 = _uniform53_scalar(key, c)
        u2 = _uniform53_scalar(key, c + _ONE)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = TWO_PI * u2
        out[2 * p] = r * np.cos(theta)
        if 2 * p + 1 < n:
            out[2 * p + 1] = r * np.sin(theta)


def normals_batch(keys, step, n):
    """Vectorized twin of :func:`fill_normals` for an array of stream keys."""
    keys = np.asarray(keys, dtype=np.uint64)
    npairs = (n + 1) // 2
    base = np.uint64(step) * np.uint64(npairs)
    with np.errstate(over="ignore"):
        c = _TWO * (base + np.arange(npairs, dtype=np.uint64))
        u1 = uniform53(keys[:, None], c[None, :])
        u2 = uniform53(keys[:, None], (c + _ONE)[None, :])
    r = np.sqrt(-2.0 * np.log(u1))
    theta = TWO_PI * u2
    out = np.empty((keys.shape[0], 2 * npairs))
    out[:, 0::2] = r * np.cos(theta)
    out[:, 1::2] = r * np.sin(theta)
    return out[:, :n]


def stream_keys(seed, count, offset=0):
    """Keys of the streams ``offset .. offset+count-1`` under master ``seed``."""
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    idx = np.arange(offset, offset + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        root = mix64.py_func(seed ^ _SALT)
        return mix64.py_func(root + (idx + _ONE) * GOLDEN)


def derive_seed(seed, *tags):
    """Child seed for a named sub-experiment, e.g. ``derive_seed(s, "node", 3)``."""
    with np.errstate(over="ignore"):
        z = mix64.py_func(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF) ^ _SALT)
        for tag in tags:
            if isinstance(tag, str):
                # full-length digest so long tags with a common prefix stay distinct
                digest = hashlib.blake2b(tag.encode(), digest_size=8).digest()
                value = np.uint64(int.from_bytes(digest, "little")) ^ _SALT
            else:
                value = np.uint64(int(tag) & 0xFFFFFFFFFFFFFFFF)
            z = mix64.py_func(z + mix64.py_func(value ^ GOLDEN))
    return int(z)


class NoiseStream:
    """One path's Gaussian stream; ``normals(n)`` consumes one time step."""

    def __init__(self, seed, index=0, step=0):
        self.key = stream_keys(seed, 1, offset=index)[0]
        self.step = step

    def normals(self, n):
        out = np.empty(n)
        if USE_NUMBA:
            fill_normals(self.key, self.step, out)
        else:
            out[:] = normals_batch(np.array([self.key]), self.step, n)[0]
        self.step += 1
        return out
