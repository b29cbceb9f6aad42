"""Counter-based random streams addressed by (seed, stream, user index).

Every user owns a fixed block of uniforms in a Philox stream keyed by the run
seed and a stream tag, so a user's draws never depend on which other users are
processed or in what order.
"""
from __future__ import annotations

import numpy as np

# stream tags keep unrelated consumers of one seed apart
STREAM_FIXED = 1
STREAM_ADAPTIVE = 2
STREAM_POPULATION = 3
STREAM_USERS = 4

_BLOCK = 4  # Philox emits 4 words per counter step


def _key(seed: int, stream: int) -> int:
    return (int(seed) & (2**64 - 1)) | (int(stream) << 64)


def generator(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=_key(seed, stream)))


def user_uniforms(seed: int, stream: int, n_users: int, per_user: int,
                  start: int = 0) -> np.ndarray:
    """Uniforms in ``[0, 1)`` with shape ``(n_users, per_user)``.

    Row ``i`` belongs to user ``start + i`` and is identical whether the
    users are drawn in one call or in several chunks.
    """
    width = -(-per_user // _BLOCK) * _BLOCK
    bitgen = np.random.Philox(key=_key(seed, stream))
    if start:
        bitgen.advance(start * width // _BLOCK)
    out = np.random.Generator(bitgen).random((n_users, width))
    return out[:, :per_user]
