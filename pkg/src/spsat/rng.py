"""Named, reproducible random substreams.

All randomness in the package flows from a single top-level seed through
named substreams (``instance``, ``init``, ``schedule``, ``boundary``,
``tape``, ``redraw``).  Substream identity depends only on the seed and the
label path, never on call order, so independent stages can be re-run or
re-ordered without perturbing each other.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_words(label) -> list[int]:
    """Stable 32-bit words derived from one label (str or int)."""
    if isinstance(label, (int, np.integer)):
        return [int(label) & 0xFFFFFFFF, (int(label) >> 32) & 0xFFFFFFFF]
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for lab in labels:
        words.extend(_label_words(lab))
    return np.random.SeedSequence(words)


def substream(seed: int, *labels) -> np.random.Generator:
    """Generator for the substream identified by ``(seed, *labels)``."""
    return np.random.default_rng(seed_sequence(seed, *labels))
