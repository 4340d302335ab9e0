"""Counter-based random numbers.

Every random quantity in rflab is a pure function of ``(seed, stream, row,
column)``: the value at a given position does not depend on how many other
values were drawn before it, or in which order.  This is what makes ensembles
reproducible under any row-parallel evaluation order.

The mixer is SplitMix64's finalizer applied to a combined counter.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_ROW = np.uint64(0xD1B54A32D192ED03)
_COL = np.uint64(0x8CB92BA72F3D8DD7)

# stream tags keep independent uses of one seed from colliding
SIGNS = 1
UNIFORM = 2
PHASE = 3
GAUSS_A = 4
GAUSS_B = 5
AUX = 6


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(x):
    return np.asarray(x, dtype=np.int64).astype(np.uint64)


def hash_counter(seed, stream, rows, cols):
    """64-bit hash of ``(seed, stream, row, col)``, broadcast over rows/cols."""
    r = _as_u64(rows)
    c = _as_u64(cols)
    with np.errstate(over="ignore"):
        base = _mix(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
                    + _GOLDEN * np.array([stream], dtype=np.uint64))
        z = _mix(base[0] ^ (r * _ROW + _GOLDEN))
        z = _mix(z ^ (c * _COL))
    return z


def signs(seed, stream, rows, cols):
    """Rademacher values (+1/-1, int8) from the top bit of the hash."""
    h = hash_counter(seed, stream, rows, cols)
    return (1 - 2 * (h >> np.uint64(63)).astype(np.int8)).astype(np.int8)


def uniform(seed, stream, rows, cols):
    """Uniform doubles in [0, 1) with 53 random bits."""
    h = hash_counter(seed, stream, rows, cols)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def normal(seed, stream, rows, cols):
    """Standard normal values via Box-Muller on two hashed uniform streams."""
    u1 = uniform(seed, stream * 7919 + GAUSS_A, rows, cols)
    u2 = uniform(seed, stream * 7919 + GAUSS_B, rows, cols)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def grid(rows, cols):
    """Index grids of shape (len(rows), len(cols)) for the functions above."""
    r = np.asarray(rows, dtype=np.int64)[:, None]
    c = np.asarray(cols, dtype=np.int64)[None, :]
    return r, c


def generator(seed, stream=AUX):
    """A numpy Generator for auxiliary, non-ensemble sampling (test instances, surveys).

    Seeded from the same counter hash so the whole run still derives from
    a single seed.
    """
    h = int(np.ravel(hash_counter(seed, stream, 0, 0))[0])
    return np.random.Generator(np.random.Philox(key=h))
