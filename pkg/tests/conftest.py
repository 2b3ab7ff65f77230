import random

import pytest

from chainsim import ChainConfig, LayerParams, SampleTensor


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def rand_tensor(rng, dims, bound=500):
    size = 1
    for d in dims:
        size *= d
    return SampleTensor(dims, [rng.randint(-bound, bound) for _ in range(size)])


def small_chain(p: LayerParams, primitives=2, kmem=256) -> ChainConfig:
    return ChainConfig(num_pes=primitives * p.k * p.k, kmem_capacity=kmem)


def random_layer(rng, k_choices=(1, 2, 3, 5), h_max=16):
    """One layer from the randomized correctness grid."""
    while True:
        k = rng.choice(k_choices)
        stride = rng.choice([1, 2])
        pad = rng.choice([0, 1])
        groups = rng.choice([1, 2])
        c = rng.choice([v for v in range(1, 5) if v % groups == 0])
        m = rng.choice([v for v in range(1, 9) if v % groups == 0])
        h_min = max(3, k - 2 * pad, stride * (k - 1) + k - 2 * pad)
        if h_min > h_max:
            continue
        h = rng.randint(h_min, h_max)
        try:
            return LayerParams.from_shape(n=1, c=c, m=m, h=h, k=k,
                                          stride=stride, pad=pad, groups=groups)
        except ValueError:
            continue
