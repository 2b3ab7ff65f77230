"""Dataflow planning: output-channel tiling, kernel-store phases, weight layout.

A layer executes as a sequence of *phases*.  Within one phase every PE's
weight store holds all the (output channel, input channel) contexts the
phase needs, so kernels stream in exactly once per phase per batch.  A
phase covers as many output-channel tiles as the context budget allows,
times one resident input-channel chunk (the chunk is the whole per-group
range unless that alone overflows the store).  Each tile maps one output
channel per primitive, round-robin, with trailing primitives idle on a
short tail tile.
"""

from __future__ import annotations

from dataclasses import dataclass

from .layers import LayerParams
from .mapping import CapacityError, ChainConfig, ChainMap, partition_chain
from .tensors import SampleTensor


@dataclass(frozen=True)
class PhasePlan:
    """One kernel-residency period: output-channel tiles times an
    input-channel chunk.  Layers whose per-group channel count exceeds the
    weight store split the channel range too; partial sums accumulate in
    the output buffer across chunks exactly as they do across channels."""

    filter_group: int
    tiles: tuple      # tuple of tuples of output-channel indices, one per primitive
    c_range: tuple    # input channels resident during this phase
    contexts_per_pe: int  # (m, c) pairs each busy PE holds in this phase

    @property
    def m_channels(self) -> tuple:
        return tuple(m for tile in self.tiles for m in tile)


@dataclass(frozen=True)
class LoopLevel:
    name: str
    trips: int


@dataclass(frozen=True)
class TilingPlan:
    layer: LayerParams
    chain: ChainMap
    para_tile: int
    phases: tuple  # tuple[PhasePlan]
    num_row_groups: int
    strip_rows: int
    strip_cols: int
    kernel_context_demand: int  # contexts/PE if the whole layer stayed resident
    loop_nest: tuple  # tuple[LoopLevel]

    @property
    def num_m_tiles(self) -> int:
        return sum(len(ph.tiles) for ph in self.phases)

    @property
    def num_phases(self) -> int:
        return len(self.phases)

    @property
    def needs_kernel_reload(self) -> bool:
        return self.num_phases > 1

    @property
    def tile_channel_pairs(self) -> int:
        """(output-channel tile, input channel) pass pairs per image."""
        return sum(len(ph.tiles) * len(ph.c_range) for ph in self.phases)

    @property
    def passes_per_image(self) -> int:
        return self.tile_channel_pairs * self.num_row_groups


def plan_tiling(p: LayerParams, cfg: ChainConfig) -> TilingPlan:
    chain = partition_chain(cfg, p.k)

    strip_rows = p.stride * (p.k - 1) + p.k
    strip_cols = p.e + p.k - 1 if p.stride == 1 else p.stride * (p.e - 1) + p.k
    strip_bytes = strip_rows * strip_cols * 2
    if strip_bytes > cfg.imem_bytes:
        raise CapacityError(
            "iMemory (%d B) cannot hold one %dx%d input strip of one channel (%d B); "
            "column splitting is not supported" % (cfg.imem_bytes, strip_rows, strip_cols, strip_bytes)
        )

    cg = p.c_per_group
    para_tile = min(chain.active_primitives, p.m_per_group)
    c_chunk = min(cg, cfg.kmem_capacity)
    tiles_per_phase_cap = cfg.kmem_capacity // c_chunk  # tiles one PE keeps resident

    phases = []
    demand = 0
    for g in range(p.groups):
        ms = list(range(g * p.m_per_group, (g + 1) * p.m_per_group))
        tiles = [tuple(ms[i:i + para_tile]) for i in range(0, len(ms), para_tile)]
        demand = max(demand, len(tiles) * cg)
        c_all = list(p.input_channels_of_group(g))
        for start in range(0, len(tiles), tiles_per_phase_cap):
            chunk = tuple(tiles[start:start + tiles_per_phase_cap])
            for c_lo in range(0, cg, c_chunk):
                c_range = tuple(c_all[c_lo:c_lo + c_chunk])
                phases.append(PhasePlan(filter_group=g, tiles=chunk,
                                        c_range=c_range,
                                        contexts_per_pe=len(chunk) * len(c_range)))

    num_groups = -(-p.e // p.k)  # ceil
    plan = TilingPlan(
        layer=p,
        chain=chain,
        para_tile=para_tile,
        phases=tuple(phases),
        num_row_groups=num_groups,
        strip_rows=strip_rows,
        strip_cols=strip_cols,
        kernel_context_demand=demand,
        loop_nest=(
            LoopLevel("phase", len(phases)),
            LoopLevel("m_tile", sum(len(ph.tiles) for ph in phases)),
            LoopLevel("batch", p.n),
            LoopLevel("row_group", num_groups),
            LoopLevel("in_channel", cg),
            LoopLevel("scan", p.k * p.e),
        ),
    )
    return plan


def iter_space(plan: TilingPlan):
    """Flattened iteration space: yields every (n, m, c, x, y) visited.

    Dummy rows of the last row group are skipped, so the walk enumerates
    exactly the layer's real output coordinates.
    """
    p = plan.layer
    for ph in plan.phases:
        for tile in ph.tiles:
            for n in range(p.n):
                for g in range(plan.num_row_groups):
                    for c in ph.c_range:
                        for m in tile:
                            for r in range(p.k):
                                x = g * p.k + r
                                if x >= p.e:
                                    continue
                                for y in range(p.e):
                                    yield (n, m, c, x, y)


@dataclass(frozen=True)
class PhaseLayout:
    """Weight tables for one phase: [primitive][pe] -> ((m, c, raw), ...)."""

    filter_group: int
    tables: tuple
    total_weights: int


@dataclass(frozen=True)
class KernelLayout:
    k: int
    num_primitives: int
    phases: tuple  # tuple[PhaseLayout]

    @property
    def total_weights(self) -> int:
        return sum(ph.total_weights for ph in self.phases)

    def load_order(self):
        """Serial stream order: phase by phase, primitive by primitive, PE by PE."""
        for ph in self.phases:
            for prim_table in ph.tables:
                for pe_entries in prim_table:
                    for entry in pe_entries:
                        yield entry


def layout_kernels(p: LayerParams, plan: TilingPlan, kernels: SampleTensor) -> KernelLayout:
    """Assign stationary weights: PE p of a primitive owns kernel window
    position p in column-major order (row offset i = p % k, column offset
    j = p // k)."""
    if kernels.dims != p.kernel_dims():
        raise CapacityError("kernel tensor dims %r do not match layer" % (kernels.dims,))
    k = p.k
    kk = k * k
    phases = []
    for ph in plan.phases:
        tables = []
        for q in range(plan.chain.active_primitives):
            pes = []
            for pe in range(kk):
                i, j = pe % k, pe // k
                entries = []
                for tile in ph.tiles:
                    if q >= len(tile):
                        continue  # primitive idles for this tile
                    m = tile[q]
                    base = ph.filter_group * p.c_per_group
                    for c in ph.c_range:
                        entries.append((m, c, kernels.at(m, c - base, i, j)))
                if len(entries) > ph.contexts_per_pe:
                    raise CapacityError(
                        "primitive %d PE %d needs %d contexts, budget %d"
                        % (q, pe, len(entries), ph.contexts_per_pe)
                    )
                pes.append(tuple(entries))
            tables.append(tuple(pes))
        total = sum(len(pe) for prim in tables for pe in prim)
        phases.append(PhaseLayout(filter_group=ph.filter_group, tables=tuple(tables),
                                  total_weights=total))
    return KernelLayout(k=k, num_primitives=plan.chain.active_primitives, phases=tuple(phases))
