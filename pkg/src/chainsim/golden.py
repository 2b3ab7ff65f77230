"""Direct triple-loop convolution oracle, in real or fixed arithmetic.

Every simulated output in the project is checked against this function.
The fixed path uses one mandated summation order (input channel outer,
kernel row middle, kernel column inner) so results are bit-reproducible.
"""

from __future__ import annotations

from .fixedpoint import acc_to_sample, clamp_acc, quantize
from .layers import LayerParams
from .tensors import SampleTensor, ShapeError


def _check_dims(ifmaps, kernels, bias, p: LayerParams):
    if ifmaps.dims != p.ifmap_dims():
        raise ShapeError("ifmaps dims %r do not match layer %r" % (ifmaps.dims, p.ifmap_dims()))
    if kernels.dims != p.kernel_dims():
        raise ShapeError("kernel dims %r do not match layer %r" % (kernels.dims, p.kernel_dims()))
    if bias.dims != p.bias_dims():
        raise ShapeError("bias dims %r do not match layer %r" % (bias.dims, p.bias_dims()))


def golden_convolution(ifmaps: SampleTensor, kernels: SampleTensor, bias: SampleTensor,
                       p: LayerParams, arithmetic: str = "fixed"):
    """Compute the layer's output maps.  Returns (ofmaps, overflow_events).

    arithmetic == "fixed": exact integer MACs in the accumulator format.
    arithmetic == "real":  float arithmetic on dequantized values, then
    quantized once at the end (overflow_events counts clamped samples).
    """
    if arithmetic not in ("fixed", "real"):
        raise ValueError("arithmetic must be 'fixed' or 'real'")
    _check_dims(ifmaps, kernels, bias, p)
    fmt = ifmaps.fmt
    h, e, k, s, pad = p.h, p.e, p.k, p.stride, p.pad

    out = []
    overflow = 0
    for n in range(p.n):
        for m in range(p.m):
            g = p.filter_group_of(m)
            c_range = p.input_channels_of_group(g)
            for x in range(e):
                for y in range(e):
                    if arithmetic == "fixed":
                        acc = bias.at(m) << fmt.frac_bits
                        acc, ovf = clamp_acc(acc, fmt)
                        overflow += ovf
                        for c in c_range:
                            cg = c - c_range.start
                            for i in range(k):
                                row = x * s + i - pad
                                if row < 0 or row >= h:
                                    continue
                                for j in range(k):
                                    col = y * s + j - pad
                                    if col < 0 or col >= h:
                                        continue
                                    acc, ovf = clamp_acc(
                                        acc + ifmaps.at(n, c, row, col) * kernels.at(m, cg, i, j),
                                        fmt)
                                    overflow += ovf
                        sample, _ = acc_to_sample(acc, fmt)
                        out.append(sample)
                    else:
                        total = bias.at(m) / fmt.scale
                        for c in c_range:
                            cg = c - c_range.start
                            for i in range(k):
                                row = x * s + i - pad
                                if row < 0 or row >= h:
                                    continue
                                for j in range(k):
                                    col = y * s + j - pad
                                    if col < 0 or col >= h:
                                        continue
                                    total += (ifmaps.at(n, c, row, col) / fmt.scale) * \
                                             (kernels.at(m, cg, i, j) / fmt.scale)
                        out.append(total)

    if arithmetic == "fixed":
        return SampleTensor(p.ofmap_dims(), out, fmt), overflow
    payload, clamped = quantize(out, fmt)
    return SampleTensor(p.ofmap_dims(), payload, fmt), clamped


def conv_real_values(ifmaps: SampleTensor, kernels: SampleTensor, bias: SampleTensor,
                     p: LayerParams) -> list[float]:
    """Real-arithmetic output values without the final quantization step."""
    _check_dims(ifmaps, kernels, bias, p)
    fmt = ifmaps.fmt
    vals = []
    for n in range(p.n):
        for m in range(p.m):
            g = p.filter_group_of(m)
            c_range = p.input_channels_of_group(g)
            for x in range(p.e):
                for y in range(p.e):
                    total = bias.at(m) / fmt.scale
                    for c in c_range:
                        cg = c - c_range.start
                        for i in range(p.k):
                            row = x * p.stride + i - p.pad
                            if row < 0 or row >= p.h:
                                continue
                            for j in range(p.k):
                                col = y * p.stride + j - p.pad
                                if col < 0 or col >= p.h:
                                    continue
                                total += (ifmaps.at(n, c, row, col) / fmt.scale) * \
                                         (kernels.at(m, cg, i, j) / fmt.scale)
                    vals.append(total)
    return vals
