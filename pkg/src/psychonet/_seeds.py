"""Deterministic seed derivation.

Every stochastic step in the package (per-trial training noise, exploration
coins, candidate scrambling, observer draws, per-run seeds in a batch) pulls
its seed from `derive_seed`, so whole experiments are pure functions of one
base seed.
"""

import zlib

_MASK = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # One step of the splitmix64 mixer (Steele et al.).
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(base: int, *parts) -> int:
    """Derive a 64-bit child seed from a base seed and a tag path.

    Parts may be ints or short strings (strings are folded in via crc32).
    The same (base, parts) always yields the same seed.
    """
    z = base & _MASK
    for part in parts:
        if isinstance(part, str):
            part = zlib.crc32(part.encode("utf-8"))
        z = _splitmix64((z ^ (int(part) & _MASK)) & _MASK)
    return _splitmix64(z)
