"""Convolutional layer shapes and arithmetic-intensity bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

from .tensors import ShapeError


@dataclass(frozen=True)
class LayerParams:
    """One square convolutional layer.

    n: batch, c: input channels, m: output channels, h: input map size,
    e: output map size, k: kernel size, plus stride / zero padding /
    channel groups.  e is redundant and checked against the others.
    """

    n: int
    c: int
    m: int
    h: int
    e: int
    k: int
    stride: int = 1
    pad: int = 0
    groups: int = 1

    def __post_init__(self):
        for name in ("n", "c", "m", "h", "e", "k", "stride", "groups"):
            if getattr(self, name) < 1:
                raise ShapeError("%s must be positive" % name)
        if self.pad < 0:
            raise ShapeError("pad must be non-negative")
        if self.k > self.h + 2 * self.pad:
            raise ShapeError("k exceeds padded input size on axis h")
        expect = (self.h + 2 * self.pad - self.k) // self.stride + 1
        if self.e != expect:
            raise ShapeError("e must be %d for this h/k/stride/pad, got %d" % (expect, self.e))
        if self.c % self.groups:
            raise ShapeError("c not divisible by groups")
        if self.m % self.groups:
            raise ShapeError("m not divisible by groups")

    @classmethod
    def from_shape(cls, n, c, m, h, k, stride=1, pad=0, groups=1) -> "LayerParams":
        e = (h + 2 * pad - k) // stride + 1
        return cls(n=n, c=c, m=m, h=h, e=e, k=k, stride=stride, pad=pad, groups=groups)

    @property
    def c_per_group(self) -> int:
        return self.c // self.groups

    @property
    def m_per_group(self) -> int:
        return self.m // self.groups

    def filter_group_of(self, m: int) -> int:
        return m // self.m_per_group

    def input_channels_of_group(self, g: int) -> range:
        return range(g * self.c_per_group, (g + 1) * self.c_per_group)

    def ifmap_dims(self):
        return (self.n, self.c, self.h, self.h)

    def kernel_dims(self):
        return (self.m, self.c_per_group, self.k, self.k)

    def bias_dims(self):
        return (self.m,)

    def ofmap_dims(self):
        return (self.n, self.m, self.e, self.e)


def mac_count(p: LayerParams) -> int:
    """Multiply-accumulate operations for the full layer."""
    return p.n * p.m * p.e * p.e * p.c_per_group * p.k * p.k
