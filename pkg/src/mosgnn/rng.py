"""Deterministic random-stream derivation.

One 64-bit root seed drives every stochastic choice in the package. Streams
are derived through ``numpy``'s splittable ``SeedSequence`` feeding a Philox
counter-based generator, keyed by a small integer path, so any stream can be
reconstructed independently of execution order: dropout masks depend only on
(seed, epoch, step, layer), shuffles only on (seed, epoch), and so on.
"""

from __future__ import annotations

import numpy as np

# Path tags keeping unrelated streams apart under the same root seed.
TAG_INIT = 1
TAG_SHUFFLE = 2
TAG_DROPOUT = 3
TAG_EXPERIMENT = 4


def generator(seed: int, *path: int) -> np.random.Generator:
    """Return the Philox generator for ``seed`` at the given integer path."""
    ss = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse (seed, path) into a fresh 63-bit seed for a sub-run."""
    ss = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0] >> 1)


class DropoutStreams:
    """Per-layer dropout generators for one optimization step.

    Masks are reproducible functions of (seed, epoch, step, layer index);
    two streams with the same key always emit identical masks.
    """

    def __init__(self, seed: int, epoch: int = 0, step: int = 0):
        self.seed = int(seed)
        self.epoch = int(epoch)
        self.step = int(step)

    def layer(self, index: int) -> np.random.Generator:
        return generator(self.seed, TAG_DROPOUT, self.epoch, self.step, index)
