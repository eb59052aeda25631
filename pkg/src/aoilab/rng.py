"""Counter-based random streams for reproducible episodes.

All per-slot randomness is drawn from Philox4x32-10 (Salmon et al., the
Random123 generator family), keyed per episode and partitioned into streams:
stream 0 drives policy randomness, stream 1+i drives the channel of source i.
Draw k of a stream is a pure function of (episode key, stream, k), so the
k-th transmission attempt of a source sees the same channel outcome no matter
which policy is running -- policies can be compared on paired channel
realizations.

Episode keys are derived from ``numpy.random.SeedSequence((seed, replication))``
so replications are independent and bit-reproducible.
"""

from __future__ import annotations

import numpy as np

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
MASK32 = 0xFFFFFFFF

POLICY_STREAM = 0


def channel_stream(source: int) -> int:
    return 1 + source


def philox4x32(c0: int, c1: int, c2: int, c3: int, k0: int, k1: int):
    """One Philox4x32-10 block: four 32-bit outputs from counter + key."""
    for _ in range(10):
        prod0 = PHILOX_M0 * c0
        prod1 = PHILOX_M1 * c2
        hi0 = (prod0 >> 32) & MASK32
        lo0 = prod0 & MASK32
        hi1 = (prod1 >> 32) & MASK32
        lo1 = prod1 & MASK32
        c0 = (hi1 ^ c1 ^ k0) & MASK32
        c1 = lo1
        c2 = (hi0 ^ c3 ^ k1) & MASK32
        c3 = lo0
        k0 = (k0 + PHILOX_W0) & MASK32
        k1 = (k1 + PHILOX_W1) & MASK32
    return c0, c1, c2, c3


def episode_key(seed: int, replication: int = 0):
    """Four 32-bit key words for one episode, from SeedSequence((seed, r))."""
    ss = np.random.SeedSequence((int(seed), int(replication)))
    s = ss.generate_state(4, np.uint32)
    return int(s[0]), int(s[1]), int(s[2]), int(s[3])


def uniform(key, stream: int, index: int) -> float:
    """Uniform double in [0, 1) with 53 random bits, draw ``index`` of ``stream``."""
    k0, k1, k2, _ = key
    c0 = index & MASK32
    c1 = (index >> 32) & MASK32
    o0, o1, _, _ = philox4x32(c0, c1, stream & MASK32, k2, k0, k1)
    return ((o0 >> 5) * 67108864.0 + (o1 >> 6)) / 9007199254740992.0
