"""Named seed derivation.

All randomness in the toolkit flows from one master seed through
``derive(master, *names)`` so that independent components (split, model
init, dropout, shuffling, search trials) get decoupled, reproducible
streams regardless of execution order or parallelism.
"""

from __future__ import annotations

import hashlib


def derive(master: int, *names: object) -> int:
    """Derive a 32-bit seed from a master seed and a name path."""
    key = ":".join([str(int(master))] + [str(n) for n in names])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")
