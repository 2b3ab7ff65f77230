"""Cycle-level simulation of the PE chain.

One pass replays a validated group schedule for one input channel while
every active primitive computes a different output channel from the same
broadcast feed stream.  Channel registers shift one PE per cycle; the mux
table decides which register each PE multiplies against its stationary
weight.  Partial window sums accumulate along the chain (one PE every two
cycles, see scheduler module); extra MAC pipeline stages only delay the
emission cycle, never values or rates, and every mux selection is
re-checked against the pixel actually resident in the register.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fixedpoint import acc_to_sample, clamp_acc
from .layers import LayerParams
from .mapping import ChainConfig, ChainMap
from .scheduler import DUAL, EVEN, ODD, build_schedule, row_groups, validate_schedule
from .tensors import SampleTensor, ShapeError
from .tiling import TilingPlan, layout_kernels, plan_tiling


class SimulationFault(RuntimeError):
    """A mux selection did not hit the pixel the schedule promised."""


@dataclass
class EventCounters:
    """Raw memory and arithmetic event counts."""

    macs: int = 0
    dummy_macs: int = 0
    feed_slots: int = 0
    imem_reads: int = 0
    kmem_reads: int = 0
    kmem_writes: int = 0
    omem_reads: int = 0
    omem_writes: int = 0
    dram_ifmap_reads: int = 0
    dram_kernel_reads: int = 0
    dram_ofmap_writes: int = 0
    overflow_events: int = 0
    imem_reads_by_col: dict = field(default_factory=dict)
    macs_by_col: dict = field(default_factory=dict)

    def merge(self, other: "EventCounters") -> None:
        self.macs += other.macs
        self.dummy_macs += other.dummy_macs
        self.feed_slots += other.feed_slots
        self.imem_reads += other.imem_reads
        self.kmem_reads += other.kmem_reads
        self.kmem_writes += other.kmem_writes
        self.omem_reads += other.omem_reads
        self.omem_writes += other.omem_writes
        self.dram_ifmap_reads += other.dram_ifmap_reads
        self.dram_kernel_reads += other.dram_kernel_reads
        self.dram_ofmap_writes += other.dram_ofmap_writes
        self.overflow_events += other.overflow_events
        for k, v in other.imem_reads_by_col.items():
            self.imem_reads_by_col[k] = self.imem_reads_by_col.get(k, 0) + v
        for k, v in other.macs_by_col.items():
            self.macs_by_col[k] = self.macs_by_col.get(k, 0) + v


@dataclass
class CycleCounts:
    kernel_load: int = 0
    compute: int = 0
    drain: int = 0

    @property
    def total(self) -> int:
        return self.kernel_load + self.compute + self.drain


class PEState:
    """Per-PE architectural state that differs between PEs: the active
    stationary weight and the local weight store.

    The two channel shift registers are identical in every primitive (the
    feed stream is broadcast), so the pass engine simulates one shared
    register pipeline per chain; the two-cycle partial-sum hop between
    neighbouring PEs is carried by the per-window wave accumulators."""

    __slots__ = ("weight", "kmemory")

    def __init__(self):
        self.weight = 0
        self.kmemory = {}       # (m, c) -> raw weight


class PrimitiveState:
    def __init__(self, k: int):
        self.pes = [PEState() for _ in range(k * k)]


class ChainState:
    def __init__(self, cfg: ChainConfig, chain_map: ChainMap):
        self.cfg = cfg
        self.map = chain_map
        self.primitives = [PrimitiveState(chain_map.k)
                           for _ in range(chain_map.active_primitives)]
        self.idle_pes = chain_map.idle_pes
        self.cycle = 0
        self.phase = "idle"
        self.counters = EventCounters()

    @property
    def total_pes(self) -> int:
        return sum(len(pr.pes) for pr in self.primitives) + self.idle_pes


@dataclass
class LayerRun:
    ofmaps: SampleTensor
    cycles: CycleCounts
    counters: EventCounters
    utilization: float
    first_output_cycle: int
    dummy_outputs: int
    refeed_count: int
    compute_spans: int  # emission-span cycles, the utilization denominator


def load_kernels(chain: ChainState, layout_phase) -> int:
    """Stream one phase's weights down the chain, one weight per cycle."""
    chain.phase = "kernel_load"
    total = 0
    for q, prim_table in enumerate(layout_phase.tables):
        prim = chain.primitives[q]
        for pe_idx, entries in enumerate(prim_table):
            store = {}
            for m, c, w in entries:
                store[(m, c)] = w
            prim.pes[pe_idx].kmemory = store
            total += len(entries)
    if total != layout_phase.total_weights:
        raise SimulationFault("kernel layout size mismatch")
    chain.counters.kmem_writes += total
    chain.counters.dram_kernel_reads += total
    chain.cycle += total
    return total


def _run_pass(chain, schedule, p, n, c_abs, tile, ifmaps, fmt,
              omem, bias_acc, first_c, counters, column_stats,
              trace=None, trace_base=0):
    """Replay one validated group schedule for one input channel."""
    k = schedule.k
    kk = schedule.kk
    h = p.h
    acc_min, acc_max = fmt.acc_min, fmt.acc_max
    n_prims = len(tile)

    # Stationary weights for this (tile, c) pass come out of each PE's store.
    weights = []
    for q in range(n_prims):
        pes = chain.primitives[q].pes
        row = []
        for pe_idx in range(kk):
            w = pes[pe_idx].kmemory[(tile[q], c_abs)]
            pes[pe_idx].weight = w
            row.append(w)
        weights.append(row)
    counters.kmem_reads += n_prims * kk

    feeds_at = {}
    for f in schedule.feeds:
        feeds_at.setdefault(f.cycle, []).append(f)
    mux_at = {}
    out_index = {}
    dummy_flags = []
    for idx, out in enumerate(schedule.outputs):
        out_index[schedule.wave_start(out)] = idx
        dummy_flags.append(out.is_dummy)
    for (pe, t), ch in schedule.mux.items():
        sigma = t - 2 * pe
        if sigma not in out_index:
            raise SimulationFault(
                "cycle %d PE %d: mux entry belongs to no scheduled window" % (t, pe))
        mux_at.setdefault(t, []).append((pe, ch, out_index[sigma]))

    ifpay = ifmaps.payload
    if_base = (n * p.c + c_abs) * h * h

    regs = {ODD: [None] * kk, EVEN: [None] * kk}
    entry_buf = {ODD: None, EVEN: None}
    skew = schedule.skew
    accs = [[0] * schedule.num_outputs for _ in range(n_prims)]
    overflow = 0
    macs = 0
    dummy_macs = 0

    for t in range(schedule.span_cycles):
        # feed + shift: the leading channel owns one extra entry register
        incoming = {ODD: None, EVEN: None}
        for f in feeds_at.get(t, ()):
            counters.feed_slots += 1
            if f.is_pad:
                value = 0
            else:
                value = ifpay[if_base + f.row * h + f.col]
                counters.imem_reads += 1
                if column_stats:
                    col = counters.imem_reads_by_col
                    col[f.col] = col.get(f.col, 0) + 1
            incoming[f.channel] = (f.row, f.col, value)
        for ch in (ODD, EVEN):
            pipe = regs[ch]
            if skew.get(ch, 0):
                head = entry_buf[ch]
                entry_buf[ch] = incoming[ch]
            else:
                head = incoming[ch]
            pipe.insert(0, head)
            pipe.pop()

        for pe, ch, oidx in mux_at.get(t, ()):
            px = regs[ch][pe]
            if px is None:
                raise SimulationFault(
                    "cycle %d PE %d: mux selects %s channel but no pixel resides"
                    % (t, pe, ch))
            row, col, value = px
            macs += n_prims
            if dummy_flags[oidx]:
                dummy_macs += n_prims
            if column_stats and 0 <= col < h and 0 <= row < h:
                mc = counters.macs_by_col
                mc[col] = mc.get(col, 0) + n_prims
            if value:
                for q in range(n_prims):
                    acc_row = accs[q]
                    s = acc_row[oidx] + value * weights[q][pe]
                    if s > acc_max or s < acc_min:
                        s, _ = clamp_acc(s, fmt)  # saturate or wrap per format
                        overflow += 1
                    acc_row[oidx] = s

        if trace is not None:
            fed = " ".join("%s:(%d,%d)%s" % (f.channel, f.row, f.col,
                                             "z" if f.is_pad else "")
                           for f in feeds_at.get(t, ())) or "-"
            done = [out for out in schedule.outputs if out.cycle == t]
            for q in range(n_prims):
                tags = ",".join("(m%d,%d,%d)%s"
                                % (tile[q], schedule.group.out_rows[o.row], o.col,
                                   "d" if o.is_dummy else "")
                                for o in done) or "-"
                trace.append("%d compute prim=%d feeds=%s out=%s"
                             % (trace_base + t, q, fed, tags))
    chain.cycle += schedule.span_cycles
    counters.macs += macs
    counters.dummy_macs += dummy_macs
    counters.overflow_events += overflow

    # oMemory accumulation across input channels, bias folded in at the
    # group's first channel; entries persist across kernel-residency phases
    for idx, out in enumerate(schedule.outputs):
        if out.is_dummy:
            continue
        x_abs = schedule.group.out_rows[out.row]
        for q in range(n_prims):
            key = (n, tile[q], x_abs, out.col)
            partial = accs[q][idx]
            if first_c:
                total, ovf = clamp_acc(bias_acc[tile[q]] + partial, fmt)
            else:
                counters.omem_reads += 1
                total, ovf = clamp_acc(omem[key] + partial, fmt)
            counters.overflow_events += ovf
            omem[key] = total
            counters.omem_writes += 1
    return schedule.span_cycles


def run_layer(p: LayerParams, ifmaps: SampleTensor, kernels: SampleTensor,
              bias: SampleTensor, cfg: ChainConfig, mode: str = DUAL,
              column_stats: bool = False, cycle_trace: list | None = None,
              plan: TilingPlan | None = None) -> LayerRun:
    """Execute one layer on the chain and return its bit-exact output maps
    together with cycle and memory-event counts.

    cycle_trace, when given a list, receives one line per compute cycle per
    active primitive (cycle, phase, feeds, output tag); intended for tiny
    layers only."""
    if ifmaps.dims != p.ifmap_dims():
        raise ShapeError("ifmaps dims %r do not match layer" % (ifmaps.dims,))
    if kernels.dims != p.kernel_dims():
        raise ShapeError("kernel dims %r do not match layer" % (kernels.dims,))
    if bias.dims != p.bias_dims():
        raise ShapeError("bias dims %r do not match layer" % (bias.dims,))
    fmt = ifmaps.fmt
    if plan is None:
        plan = plan_tiling(p, cfg)
    layout = layout_kernels(p, plan, kernels)
    chain = ChainState(cfg, plan.chain)
    groups = row_groups(p)
    schedules = {}
    for g in groups:
        s = build_schedule(g, p, mode)
        rep = validate_schedule(s, p)
        if not rep.ok:
            raise SimulationFault(
                "schedule for group %d failed validation: %s"
                % (g.index, rep.violations[0]))
        schedules[g.index] = s

    bias_acc = [bias.at(m) << fmt.frac_bits for m in range(p.m)]
    out_payload = [0] * (p.n * p.m * p.e * p.e)
    cycles = CycleCounts()
    counters = chain.counters
    first_output_cycle = None
    refeeds = 0
    compute_spans = 0
    kk = p.k * p.k

    omem = {}  # (n, m, x, y) -> partial accumulator, layer scope
    for phase_plan, phase_layout in zip(plan.phases, layout.phases):
        cycles.kernel_load += load_kernels(chain, phase_layout)
        chain.phase = "compute"
        first_channel = p.input_channels_of_group(phase_plan.filter_group).start
        for tile in phase_plan.tiles:
            for n in range(p.n):
                # one DRAM streaming of the phase's resident channels per
                # (m-tile, image); iMemory provides reuse within the sweep
                counters.dram_ifmap_reads += len(phase_plan.c_range) * p.h * p.h
                for g in groups:
                    s = schedules[g.index]
                    for c_abs in phase_plan.c_range:
                        refeeds += s.refeed_count
                        span = _run_pass(chain, s, p, n, c_abs, tile, ifmaps, fmt,
                                         omem, bias_acc, c_abs == first_channel,
                                         counters, column_stats, trace=cycle_trace,
                                         trace_base=cycles.total)
                        cycles.compute += s.emission_span
                        cycles.drain += span - s.emission_span
                        compute_spans += s.emission_span
                        if first_output_cycle is None and s.outputs:
                            real = [o for o in s.outputs if not o.is_dummy]
                            if real:
                                first_output_cycle = (
                                    cycles.total - span + real[0].cycle
                                    + (kk - 1) + (cfg.pipeline_stages - 1))

    # drain every accumulated window once per layer
    for (n, m, x, y), acc in omem.items():
        sample, _ = acc_to_sample(acc, fmt)
        out_payload[((n * p.m + m) * p.e + x) * p.e + y] = sample
        counters.dram_ofmap_writes += 1

    cycles.drain += cfg.pipeline_stages - 1
    chain.phase = "drain"

    used_pe_cycles = compute_spans * plan.chain.active_pes
    util = (counters.macs - counters.dummy_macs) / used_pe_cycles if used_pe_cycles else 0.0
    ofmaps = SampleTensor(p.ofmap_dims(), out_payload, fmt)
    return LayerRun(
        ofmaps=ofmaps, cycles=cycles, counters=counters, utilization=util,
        first_output_cycle=first_output_cycle or 0,
        dummy_outputs=sum(1 for g in groups for o in schedules[g.index].outputs
                          if o.is_dummy) * plan.tile_channel_pairs * p.n,
        refeed_count=refeeds,
        compute_spans=compute_spans,
    )


@dataclass
class NetworkTotals:
    cycles: CycleCounts
    counters: EventCounters
    kernel_load_cycles: int
    compute_cycles_per_image: int


def run_network(layers, cfg: ChainConfig, batch: int = 1, mode: str = DUAL):
    """Run a list of (LayerParams, ifmaps, kernels, bias) with a shared batch.

    Kernels for each layer load once per batch (phase by phase); each layer
    receives its own externally supplied input tensor.
    """
    runs = []
    totals = NetworkTotals(CycleCounts(), EventCounters(), 0, 0)
    for li, (p, ifmaps, kernels, bias) in enumerate(layers):
        if p.n != batch:
            p = LayerParams(n=batch, c=p.c, m=p.m, h=p.h, e=p.e, k=p.k,
                            stride=p.stride, pad=p.pad, groups=p.groups)
        try:
            run = run_layer(p, ifmaps, kernels, bias, cfg, mode=mode)
        except Exception as exc:
            raise type(exc)("layer %d: %s" % (li, exc)) from exc
        runs.append(run)
        totals.cycles.kernel_load += run.cycles.kernel_load
        totals.cycles.compute += run.cycles.compute
        totals.cycles.drain += run.cycles.drain
        totals.counters.merge(run.counters)
    totals.kernel_load_cycles = totals.cycles.kernel_load
    if batch:
        totals.compute_cycles_per_image = (totals.cycles.compute + totals.cycles.drain) // batch
    return runs, totals
