"""Closed-form memory-traffic model and reconciliation against counters.

Traffic is counted in *events* (one sample access each).  The hierarchy:
DRAM feeds iMemory (input strips, per m-tile residency) and the per-PE
weight stores (once per batch, phase by phase); oMemory holds partial
window sums across the input-channel loop.  iMemory reads follow the
(2k-1)/k-per-interior-pixel law of the column-wise scan; the per-PE
weight store is read once per (row group x input channel) pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .layers import LayerParams
from .mapping import ChainConfig
from .scheduler import DUAL, build_schedule, row_groups
from .simulator import EventCounters
from .tiling import TilingPlan

SAMPLE_BYTES = 2
ACC_BYTES = 4


@dataclass(frozen=True)
class LevelTraffic:
    reads: int = 0
    writes: int = 0
    bytes_per_event: int = SAMPLE_BYTES

    @property
    def events(self) -> int:
        return self.reads + self.writes

    @property
    def bytes(self) -> int:
        return self.events * self.bytes_per_event


@dataclass(frozen=True)
class TrafficCounters:
    dram: LevelTraffic
    imem: LevelTraffic
    kmem: LevelTraffic
    omem: LevelTraffic
    activity: dict = field(default_factory=dict)

    def level(self, name: str) -> LevelTraffic:
        return getattr(self, name)

    def to_csv(self) -> str:
        lines = ["level,reads,writes,bytes,activity"]
        for name in ("dram", "imem", "kmem", "omem"):
            lvl = self.level(name)
            act = self.activity.get(name, "")
            if isinstance(act, Fraction):
                act = "%.6f" % float(act)
            lines.append("%s,%d,%d,%d,%s" % (name, lvl.reads, lvl.writes, lvl.bytes, act))
        return "\n".join(lines) + "\n"


def real_rows_in_strip(p: LayerParams, group_index: int) -> int:
    base = group_index * p.k * p.stride - p.pad
    rows = p.stride * (p.k - 1) + p.k
    return max(0, min(p.h, base + rows) - max(0, base))


def strip_feed_counts(p: LayerParams, mode: str = DUAL) -> tuple[int, int]:
    """(real feeds, total feed slots) for one full sweep of all row groups,
    one input channel.  Closed form for stride 1; strides above 1 replay
    the deterministic schedule builder, whose re-feeds have no closed form."""
    if p.stride == 1:
        real = 0
        slots = 0
        strip_cols = p.e + p.k - 1
        for g in range(-(-p.e // p.k)):
            if mode == DUAL:
                rr = real_rows_in_strip(p, g)
                real += rr * p.h
                slots += (2 * p.k - 1) * strip_cols
            else:
                base = g * p.k - p.pad
                for r in range(p.k):
                    lo, hi = base + r, base + r + p.k
                    real += max(0, min(p.h, hi) - max(0, lo)) * p.h
                slots += p.k * p.k * strip_cols
        return real, slots
    real = 0
    slots = 0
    for g in row_groups(p):
        s = build_schedule(g, p, mode)
        real += s.real_feed_count
        slots += s.feed_count
    return real, slots


def imem_reads_per_row(p: LayerParams) -> list[int]:
    """Dual-mode stride-1 reads of each ifmap row per full group sweep:
    interior rows land in two overlapping strips except every k-th row."""
    counts = []
    num_groups = -(-p.e // p.k)
    for row in range(p.h):
        n = 0
        for g in range(num_groups):
            base = g * p.k - p.pad
            if base <= row < base + 2 * p.k - 1:
                n += 1
        counts.append(n)
    return counts


def analytic_traffic(p: LayerParams, plan: TilingPlan, cfg: ChainConfig,
                     mode: str = DUAL) -> TrafficCounters:
    """Predict the event counters run_layer will report, field by field."""
    n, cg, e, k = p.n, p.c_per_group, p.e, p.k
    kk = k * k
    num_groups = plan.num_row_groups
    pairs = plan.tile_channel_pairs

    real_feeds, _slots = strip_feed_counts(p, mode)
    imem_reads = n * pairs * real_feeds
    imem_writes = n * pairs * p.h * p.h  # filled from DRAM per residency

    kmem_reads = n * num_groups * cg * kk * p.m  # one weight fetch per PE per pass
    kmem_writes = p.m * cg * kk                  # every weight loaded once per batch

    omem_writes = n * cg * e * e * p.m
    omem_reads = n * (cg - 1) * e * e * p.m

    dram_reads = imem_writes + kmem_writes      # ifmap residencies + kernels
    dram_writes = n * p.m * e * e

    activity = {"kmem": kmem_activity(k, e)}
    return TrafficCounters(
        dram=LevelTraffic(dram_reads, dram_writes),
        imem=LevelTraffic(imem_reads, imem_writes),
        kmem=LevelTraffic(kmem_reads, kmem_writes),
        omem=LevelTraffic(omem_reads, omem_writes, bytes_per_event=ACC_BYTES),
        activity=activity,
    )


def traffic_from_counters(c: EventCounters) -> TrafficCounters:
    return TrafficCounters(
        dram=LevelTraffic(c.dram_ifmap_reads + c.dram_kernel_reads, c.dram_ofmap_writes),
        imem=LevelTraffic(c.imem_reads, c.dram_ifmap_reads),
        kmem=LevelTraffic(c.kmem_reads, c.kmem_writes),
        omem=LevelTraffic(c.omem_reads, c.omem_writes, bytes_per_event=ACC_BYTES),
    )


def kmem_activity(k: int, e: int) -> Fraction:
    """Weight-store read duty during compute: one fetch per k*e output cycles."""
    if k < 1 or e < 1:
        raise ValueError("k and e must be positive")
    return Fraction(1, k * e)


def ifmap_reuse_factor(k: int) -> tuple[Fraction, int]:
    """(MAC events per SRAM feed on interior strips, MACs per distinct pixel)."""
    if k < 1:
        raise ValueError("k must be positive")
    return Fraction(k ** 3, 2 * k - 1), k * k


@dataclass(frozen=True)
class EnergyCostTable:
    """Relative energy units per access event; no process-node fidelity."""

    mac: float = 1.0
    kmem: float = 1.0
    imem: float = 6.0
    omem: float = 6.0
    dram: float = 200.0

    @classmethod
    def from_mapping(cls, values: dict) -> "EnergyCostTable":
        allowed = {"mac", "kmem", "imem", "omem", "dram"}
        bad = set(values) - allowed
        if bad:
            raise ValueError("unknown energy cost keys: %s" % ", ".join(sorted(bad)))
        for key, v in values.items():
            if v < 0:
                raise ValueError("energy cost %s must be non-negative" % key)
        return cls(**values)


def energy_proxy(traffic: TrafficCounters, mac_events: int,
                 table: EnergyCostTable) -> tuple[float, dict]:
    """Weighted event sum.  Returns (total, per-component share dict)."""
    parts = {
        "mac": mac_events * table.mac,
        "kmem": traffic.kmem.events * table.kmem,
        "imem": traffic.imem.events * table.imem,
        "omem": traffic.omem.events * table.omem,
        "dram": traffic.dram.events * table.dram,
    }
    total = sum(parts.values())
    if total > 0:
        shares = {k: v / total for k, v in parts.items()}
    else:
        shares = {k: 0.0 for k in parts}
    return total, shares


@dataclass(frozen=True)
class ReconcileReport:
    passed: bool
    diffs: tuple  # (field, analytic, simulated, abs diff, rel diff)

    def __str__(self):
        lines = ["reconcile: %s" % ("PASS" if self.passed else "FAIL")]
        for f, a, s, d, r in self.diffs:
            mark = "" if d == 0 else "  <-- mismatch"
            lines.append("  %-12s analytic=%-12d simulated=%-12d diff=%d (%.4f)%s"
                         % (f, a, s, d, r, mark))
        return "\n".join(lines)


def reconcile(analytic: TrafficCounters, simulated: TrafficCounters) -> ReconcileReport:
    """Exact-equality check of analytic predictions against counted events."""
    diffs = []
    ok = True
    for level in ("imem", "kmem", "omem", "dram"):
        for kind in ("reads", "writes"):
            a = getattr(analytic.level(level), kind)
            s = getattr(simulated.level(level), kind)
            d = abs(a - s)
            rel = d / a if a else (0.0 if d == 0 else float("inf"))
            if d:
                ok = False
            diffs.append(("%s.%s" % (level, kind), a, s, d, rel))
    return ReconcileReport(passed=ok, diffs=tuple(diffs))
