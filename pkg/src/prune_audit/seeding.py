"""Stable seed derivation.

Run seeds are derived by hashing, not by arithmetic on a base seed, so the
seed of one job never depends on how many jobs ran before it.  blake2b is
used because it is deterministic across processes and platforms
(``hash()`` is salted per interpreter).
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts) -> int:
    """Collapse ``parts`` (ints/strings) into a 63-bit seed."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & (2**63 - 1)
