"""Signed fixed-point sample arithmetic with explicit, deterministic overflow.

All arithmetic is done on plain Python ints holding the *raw* (scaled)
representation, so results are bit-reproducible on every platform.
A sample with raw value r in format Qm.f represents the real number
r / 2**f.
"""

from __future__ import annotations

from dataclasses import dataclass

ROUND_NEAREST_EVEN = "nearest-even"
OVERFLOW_SATURATE = "saturate"
OVERFLOW_WRAP = "wrap"


@dataclass(frozen=True)
class FixedFormat:
    """Shape of the sample and accumulator number system."""

    total_bits: int = 16
    frac_bits: int = 8
    accumulator_bits: int = 32
    rounding: str = ROUND_NEAREST_EVEN
    overflow: str = OVERFLOW_SATURATE

    def __post_init__(self):
        if self.total_bits < 2:
            raise ValueError("total_bits must be >= 2")
        if not 0 <= self.frac_bits < self.total_bits:
            raise ValueError("frac_bits must satisfy 0 <= frac_bits < total_bits")
        if self.accumulator_bits < self.total_bits:
            raise ValueError("accumulator_bits must be >= total_bits")
        if self.rounding != ROUND_NEAREST_EVEN:
            raise ValueError("unsupported rounding mode: %r" % (self.rounding,))
        if self.overflow not in (OVERFLOW_SATURATE, OVERFLOW_WRAP):
            raise ValueError("unsupported overflow mode: %r" % (self.overflow,))

    @property
    def sample_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def sample_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def acc_min(self) -> int:
        return -(1 << (self.accumulator_bits - 1))

    @property
    def acc_max(self) -> int:
        return (1 << (self.accumulator_bits - 1)) - 1

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits


DEFAULT_FORMAT = FixedFormat()


def clamp_sample(raw: int, fmt: FixedFormat) -> tuple[int, bool]:
    """Bring a raw value into sample range.  Returns (value, clamped?)."""
    lo, hi = fmt.sample_min, fmt.sample_max
    if lo <= raw <= hi:
        return raw, False
    if fmt.overflow == OVERFLOW_SATURATE:
        return (lo if raw < lo else hi), True
    span = 1 << fmt.total_bits
    wrapped = (raw - lo) % span + lo
    return wrapped, True


def clamp_acc(raw: int, fmt: FixedFormat) -> tuple[int, bool]:
    lo, hi = fmt.acc_min, fmt.acc_max
    if lo <= raw <= hi:
        return raw, False
    if fmt.overflow == OVERFLOW_SATURATE:
        return (lo if raw < lo else hi), True
    span = 1 << fmt.accumulator_bits
    wrapped = (raw - lo) % span + lo
    return wrapped, True


def round_half_even_rshift(value: int, shift: int) -> int:
    """Arithmetic right shift with round-half-to-even on the dropped bits."""
    if shift <= 0:
        return value << -shift if shift else value
    whole = value >> shift
    rem = value - (whole << shift)
    half = 1 << (shift - 1)
    if rem > half or (rem == half and (whole & 1)):
        whole += 1
    return whole


def quantize_value(real: float, fmt: FixedFormat) -> tuple[int, bool]:
    """One real value -> raw sample.  Python's round() is half-to-even."""
    raw = round(real * fmt.scale)
    return clamp_sample(raw, fmt)


def quantize(values, fmt: FixedFormat = DEFAULT_FORMAT) -> tuple[list[int], int]:
    """Quantize a sequence of reals.  Returns (payload, number clamped)."""
    out = []
    clamped = 0
    for v in values:
        raw, c = quantize_value(v, fmt)
        out.append(raw)
        clamped += c
    return out, clamped


def dequantize(raw, fmt: FixedFormat = DEFAULT_FORMAT):
    if isinstance(raw, int):
        return raw / fmt.scale
    return [r / fmt.scale for r in raw]


def fixed_mac(a: int, b: int, acc: int, fmt: FixedFormat = DEFAULT_FORMAT) -> tuple[int, bool]:
    """acc + a*b in accumulator precision.  Returns (acc', overflowed?).

    The product carries 2*frac_bits scaling; callers rescale once at the
    end of an accumulation chain (see acc_to_sample).
    """
    return clamp_acc(acc + a * b, fmt)


def acc_to_sample(acc: int, fmt: FixedFormat = DEFAULT_FORMAT) -> tuple[int, bool]:
    """Rescale a 2*frac-scaled accumulator back to a sample."""
    return clamp_sample(round_half_even_rshift(acc, fmt.frac_bits), fmt)
