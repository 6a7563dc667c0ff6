"""Per-trial seed derivation.

trial seed = master XOR splitmix64((cell << 32) | trial), all mod 2**64.
"""
MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, cell: int, trial: int) -> int:
    if master < 0 or cell < 0 or trial < 0:
        raise ValueError("seeds, cell and trial indices must be nonnegative")
    return (master & MASK64) ^ splitmix64(((cell & 0xFFFFFFFF) << 32) | (trial & 0xFFFFFFFF))
