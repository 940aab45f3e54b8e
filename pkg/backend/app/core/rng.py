import numpy as np

# Stream ids keep independent consumers apart under one run seed.
STREAM_SPLIT = 0
STREAM_INIT = 1
STREAM_SAMPLER = 2
STREAM_SYNTH = 3
STREAM_AUDIT = 4


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based (Philox) generator for ``(seed, stream)``.

    Two calls with the same pair return generators producing identical
    sequences; different streams never overlap.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))
