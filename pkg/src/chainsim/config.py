"""Flat `key: value` run configuration with strict parsing.

Unknown keys are errors, every field has a documented default, and
parse -> serialize -> parse is the identity.  The grammar is one
`key: value` pair per line; blank lines and `#` comments are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .fixedpoint import FixedFormat
from .layers import LayerParams
from .mapping import ChainConfig
from .memmodel import EnergyCostTable


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    num_pes: int = 576
    pipeline_stages: int = 3
    clock_hz: float = 700e6
    kmem_capacity: int = 256
    imem_bytes: int = 32768
    omem_bytes: int = 25600
    total_bits: int = 16
    frac_bits: int = 8
    accumulator_bits: int = 32
    overflow: str = "saturate"
    mode: str = "dual"
    seed: int = 0
    batch: int = 1
    preset: str = ""
    layer: int = 0            # 1-based index into the preset; 0 = whole network
    kernel: int = 3
    ifmap: int = 7
    in_channels: int = 1
    out_channels: int = 1
    stride: int = 1
    pad: int = 0
    groups: int = 1
    overhead_cycles: int = 0
    energy_mac: float = 1.0
    energy_kmem: float = 1.0
    energy_imem: float = 6.0
    energy_omem: float = 6.0
    energy_dram: float = 200.0

    def chain(self) -> ChainConfig:
        return ChainConfig(num_pes=self.num_pes, pipeline_stages=self.pipeline_stages,
                           clock_hz=self.clock_hz, kmem_capacity=self.kmem_capacity,
                           imem_bytes=self.imem_bytes, omem_bytes=self.omem_bytes)

    def fixed_format(self) -> FixedFormat:
        return FixedFormat(total_bits=self.total_bits, frac_bits=self.frac_bits,
                           accumulator_bits=self.accumulator_bits, overflow=self.overflow)

    def custom_layer(self, batch: int | None = None) -> LayerParams:
        return LayerParams.from_shape(
            n=batch if batch is not None else self.batch,
            c=self.in_channels, m=self.out_channels, h=self.ifmap,
            k=self.kernel, stride=self.stride, pad=self.pad, groups=self.groups)

    def energy_table(self) -> EnergyCostTable:
        return EnergyCostTable(mac=self.energy_mac, kmem=self.energy_kmem,
                               imem=self.energy_imem, omem=self.energy_omem,
                               dram=self.energy_dram)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key: str, raw: str, lineno: int):
    kind = _FIELDS[key].type
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError("line %d: key %r needs a %s, got %r" % (lineno, key, kind, raw))


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if ":" not in body:
            raise ConfigError("line %d: expected 'key: value', got %r" % (lineno, line))
        key, raw = body.split(":", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError("line %d: unknown key %r" % (lineno, key))
        setattr(cfg, key, _convert(key, raw, lineno))
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.mode not in ("dual", "single"):
        raise ConfigError("mode must be 'dual' or 'single', got %r" % cfg.mode)
    if cfg.overflow not in ("saturate", "wrap"):
        raise ConfigError("overflow must be 'saturate' or 'wrap', got %r" % cfg.overflow)
    if cfg.preset and cfg.preset not in ("alexnet", "vgg16"):
        raise ConfigError("unknown preset %r" % cfg.preset)
    for name in ("num_pes", "pipeline_stages", "kmem_capacity", "imem_bytes",
                 "omem_bytes", "batch", "kernel", "ifmap", "in_channels",
                 "out_channels", "stride", "groups"):
        if getattr(cfg, name) < 1:
            raise ConfigError("%s must be >= 1" % name)
    if cfg.pad < 0 or cfg.seed < 0 or cfg.layer < 0 or cfg.overhead_cycles < 0:
        raise ConfigError("pad, seed, layer and overhead_cycles must be >= 0")


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, float) and v == int(v):
            v = int(v)
        lines.append("%s: %s" % (f.name, v))
    return "\n".join(lines) + "\n"
