"""Named, seeded random streams.

Every consumer of randomness asks for a stream by ``(seed, purpose, index)``.
Streams never share state, so changing how work is scheduled (serial,
process pool, different order) cannot change any drawn value.
"""

from __future__ import annotations

import hashlib
import random

MASK64 = (1 << 64) - 1


def derive_seed(*parts: int | str) -> int:
    """Hash an arbitrary tuple of ints/strings to a 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bool) or not isinstance(part, (int, str)):
            raise TypeError(f"seed parts must be int or str, got {part!r}")
        tag = b"i" if isinstance(part, int) else b"s"
        data = str(part).encode()
        h.update(tag + len(data).to_bytes(4, "little") + data)
    return int.from_bytes(h.digest(), "little") & MASK64


def stream(seed: int, purpose: str, index: int = 0) -> random.Random:
    """Independent generator for one (purpose, index) slot under ``seed``."""
    return random.Random(derive_seed(seed, purpose, index))
