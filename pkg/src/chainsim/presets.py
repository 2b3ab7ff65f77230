"""Embedded network presets and deterministic synthetic tensors.

Synthetic data comes from a 64-bit linear congruential generator with the
MMIX constants (state' = 6364136223846793005 * state + 1442695040888963407
mod 2**64; each draw takes the top 31 bits).  The same seed produces the
same bytes on every platform.  Sample magnitudes are bounded per layer
shape so that a full window accumulation over k*k * (c/groups) products
plus the bias can never overflow the accumulator.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fixedpoint import DEFAULT_FORMAT, FixedFormat
from .layers import LayerParams
from .tensors import SampleTensor

_LCG_MUL = 6364136223846793005
_LCG_ADD = 1442695040888963407
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NetworkPreset:
    name: str
    layers: tuple  # tuple[LayerParams], batch 1


ALEXNET = NetworkPreset("alexnet", (
    LayerParams.from_shape(n=1, c=3, m=96, h=227, k=11, stride=4, pad=0, groups=1),
    LayerParams.from_shape(n=1, c=96, m=256, h=27, k=5, stride=1, pad=2, groups=2),
    LayerParams.from_shape(n=1, c=256, m=384, h=13, k=3, stride=1, pad=1, groups=1),
    LayerParams.from_shape(n=1, c=384, m=384, h=13, k=3, stride=1, pad=1, groups=2),
    LayerParams.from_shape(n=1, c=384, m=256, h=13, k=3, stride=1, pad=1, groups=2),
))

_VGG_PLAN = [
    (3, 64, 224), (64, 64, 224),
    (64, 128, 112), (128, 128, 112),
    (128, 256, 56), (256, 256, 56), (256, 256, 56),
    (256, 512, 28), (512, 512, 28), (512, 512, 28),
    (512, 512, 14), (512, 512, 14), (512, 512, 14),
]

VGG16 = NetworkPreset("vgg16", tuple(
    LayerParams.from_shape(n=1, c=c, m=m, h=h, k=3, stride=1, pad=1, groups=1)
    for c, m, h in _VGG_PLAN
))

PRESETS = {p.name: p for p in (ALEXNET, VGG16)}


class _Lcg:
    def __init__(self, seed: int):
        self.state = (seed ^ 0x9E3779B97F4A7C15) & _MASK64
        for _ in range(4):
            self.next_raw()

    def next_raw(self) -> int:
        self.state = (_LCG_MUL * self.state + _LCG_ADD) & _MASK64
        return self.state >> 33

    def next_in(self, lo: int, hi: int) -> int:
        return lo + self.next_raw() % (hi - lo + 1)


def safe_sample_bound(p: LayerParams, fmt: FixedFormat = DEFAULT_FORMAT) -> int:
    """Largest magnitude R so that |bias<<f| + k*k*(c/groups)*R^2 stays in
    the accumulator for any window of this layer."""
    terms = p.k * p.k * p.c_per_group
    budget = fmt.acc_max
    lo, hi = 1, fmt.sample_max
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if terms * mid * mid + (mid << fmt.frac_bits) <= budget:
            lo = mid
        else:
            hi = mid - 1
    return lo


def synth_tensors(p: LayerParams, seed: int, fmt: FixedFormat = DEFAULT_FORMAT):
    """Deterministic (ifmaps, kernels, bias) for a layer."""
    rng = _Lcg(seed)
    bound = min(safe_sample_bound(p, fmt), 4 << fmt.frac_bits)

    def tensor(dims):
        size = 1
        for d in dims:
            size *= d
        return SampleTensor(dims, [rng.next_in(-bound, bound) for _ in range(size)], fmt)

    ifmaps = tensor(p.ifmap_dims())
    kernels = tensor(p.kernel_dims())
    bias = tensor(p.bias_dims())
    return ifmaps, kernels, bias
