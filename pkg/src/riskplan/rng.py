"""Counter-based random numbers keyed by (seed, stream, coordinates).

Every draw is a pure function of its key and integer coordinates, so a batch
of rollouts can be generated in any order or in chunks and still reproduce
the same values bit for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


def stream_key(seed: int, label: str, *indices: int) -> int:
    """Derive a 64-bit key for a labeled stream of a master seed."""
    text = "|".join([str(int(seed)), label, *(str(int(i)) for i in indices)])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def random_bits(key: int, shape: tuple[int, ...], offsets: tuple[int, ...] | None = None) -> np.ndarray:
    """64-bit words for every coordinate of an array of ``shape``.

    ``offsets`` shifts the coordinates, so a chunk ``[k:k+n]`` of a larger
    array can be drawn on its own.
    """
    offsets = offsets or (0,) * len(shape)
    z = np.full(shape, np.uint64(key), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for axis, (size, off) in enumerate(zip(shape, offsets)):
            view = [1] * len(shape)
            view[axis] = size
            coord = np.arange(off + 1, off + size + 1, dtype=np.uint64).reshape(view)
            z = _mix(z + coord * _GOLDEN)
        z = _mix(z)
    return z


def uniform(key: int, shape: tuple[int, ...], offsets: tuple[int, ...] | None = None) -> np.ndarray:
    """Uniform draws on the open interval (0, 1)."""
    bits = random_bits(key, shape, offsets) >> _S11
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def standard_normal(key: int, shape: tuple[int, ...], offsets: tuple[int, ...] | None = None) -> np.ndarray:
    return ndtri(uniform(key, shape, offsets))


def exponential(key: int, shape: tuple[int, ...], rate: float, offsets: tuple[int, ...] | None = None) -> np.ndarray:
    return -np.log(uniform(key, shape, offsets)) / rate
