"""Reproducible random-number streams.

Every stochastic routine in the package draws from a stream derived from a
user-supplied master seed plus a tuple of labels (strings or integers).  The
derivation is counter-based: labels are hashed into 64-bit words and fed to
``numpy.random.SeedSequence`` as the spawn key, so

* the same ``(seed, labels...)`` always yields the same stream, on any
  platform and under any scheduling of parallel work;
* distinct label tuples yield statistically independent streams.

Labels follow a fixed convention documented at each call site, e.g.
``substream(seed, "bootstrap", b, "resample")`` for the resampling stream of
bootstrap replicate ``b``.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream", "subseed"]


def _label_word(label: int | str) -> int:
    """Map a label to a stable non-negative 64-bit word."""
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("integer stream labels must be non-negative")
        return int(label)
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, *labels: int | str) -> np.random.Generator:
    """Return an independent generator for ``(seed, labels...)``."""
    key = tuple(_label_word(lab) for lab in labels)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def subseed(seed: int, *labels: int | str) -> int:
    """Derive an integer child seed, for APIs that take seeds, not streams."""
    key = tuple(_label_word(lab) for lab in labels)
    words = np.random.SeedSequence(entropy=int(seed), spawn_key=key).generate_state(2)
    return (int(words[0]) << 32) | int(words[1])
