"""Command-line entry point.

Commands: map, schedule, simulate, verify, report, sweep.  Exit codes:
0 success, 1 verification mismatch, 2 configuration error, 3 capacity or
planning error, 4 internal invariant violation.  All machine-readable
outputs (JSON, CSV, traces, tensor dumps) are byte-deterministic for a
fixed configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, RunConfig, parse_config
from .golden import golden_convolution
from .layers import LayerParams, mac_count
from .mapping import CapacityError, partition_chain, utilization_table
from .memmodel import analytic_traffic, energy_proxy, reconcile, traffic_from_counters
from .perf import (PUBLISHED, analytic_layer_cycles, network_report,
                   peak_throughput, utilization_report)
from .presets import PRESETS, synth_tensors
from .scheduler import build_schedule, mac_stream, row_groups, schedule_trace, validate_schedule
from .simulator import SimulationFault, run_layer
from .tensors import ShapeError
from .tiling import plan_tiling

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_INTERNAL = 4


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = RunConfig()
    for key in ("pes", "stages", "mode", "seed", "batch", "preset", "layer",
                "k", "h", "in_channels", "out_channels", "stride", "pad", "groups"):
        val = getattr(args, key, None)
        if val is not None:
            attr = {"pes": "num_pes", "stages": "pipeline_stages",
                    "k": "kernel", "h": "ifmap"}.get(key, key)
            setattr(cfg, attr, val)
    return cfg


def _select_layers(cfg: RunConfig, small: bool) -> list[tuple[str, LayerParams]]:
    """Layers to operate on: a preset (whole or one 1-based index) or the
    custom layer from the configuration."""
    if cfg.preset:
        preset = PRESETS[cfg.preset]
        chosen = list(enumerate(preset.layers, start=1))
        if cfg.layer:
            if not 1 <= cfg.layer <= len(preset.layers):
                raise ConfigError("preset %s has layers 1..%d, got %d"
                                  % (cfg.preset, len(preset.layers), cfg.layer))
            chosen = [chosen[cfg.layer - 1]]
        out = []
        for idx, p in chosen:
            if small:
                scale = 32

                def shrink(v):
                    return max(p.groups, v // scale // p.groups * p.groups)

                p = LayerParams.from_shape(
                    n=1, c=shrink(p.c), m=shrink(p.m),
                    h=min(p.h, 19 if p.stride > 1 else 15 + p.k), k=p.k,
                    stride=p.stride, pad=p.pad, groups=p.groups)
            out.append(("conv%d" % idx, p))
        return out
    return [("layer", cfg.custom_layer(batch=1))]


def cmd_map(args) -> int:
    cfg = _load_config(args)
    chain = cfg.chain()
    ks = args.k_list or [3, 5, 7, 9, 11]
    rows = utilization_table(chain, ks)
    print("%6s %16s %12s %12s %12s" % ("kernel", "pes/primitive", "primitives",
                                       "active PEs", "efficiency"))
    for cm in rows:
        note = ""
        pub = PUBLISHED["active_pe_table"].get(cm.k)
        if chain.num_pes == 576 and pub and abs(pub[2] - cm.efficiency) > 0.001:
            note = "  # published table prints %.1f%%" % (100 * pub[2])
        print("%6d %16d %12d %12d %11.1f%%%s"
              % (cm.k, cm.pes_per_primitive, cm.active_primitives,
                 cm.active_pes, 100 * cm.efficiency, note))
    print("peak: %.1f GOPS" % (peak_throughput(chain) / 1e9))
    return EXIT_OK


def cmd_schedule(args) -> int:
    cfg = _load_config(args)
    name, p = _select_layers(cfg, small=False)[0]
    groups = row_groups(p)
    gi = args.group if args.group is not None else 0
    if not 0 <= gi < len(groups):
        raise ConfigError("layer has row groups 0..%d" % (len(groups) - 1))
    sched = build_schedule(groups[gi], p, cfg.mode)
    rep = validate_schedule(sched, p)
    print("%s group %d (%s, stride %d): outputs=%d feeds=%d refeeds=%d" %
          (name, gi, cfg.mode, p.stride, sched.num_outputs, sched.feed_count,
           sched.refeed_count))
    print("first valid window: cycle %d (budget k*k = %d)" %
          (rep.first_valid_cycle, p.k * p.k))
    print("steady throughput: %s outputs/cycle over %d cycles" %
          (rep.measured_throughput, rep.steady_cycles_observed))
    print("validation: %s" % ("PASS" if rep.ok else "FAIL"))
    for v in rep.violations:
        print("  violation: %s" % v)
    if args.trace_out:
        with open(args.trace_out, "w") as fh:
            fh.write(schedule_trace(sched))
        print("trace written to %s" % args.trace_out)
    if not rep.ok:
        return EXIT_INTERNAL
    print("mac events: %d" % len(mac_stream(sched)))
    return EXIT_OK


def _simulate_one(cfg: RunConfig, name: str, p: LayerParams, cycle_trace=None):
    fmt = cfg.fixed_format()
    ifm, ker, bias = synth_tensors(p, cfg.seed, fmt)
    chain = cfg.chain()
    run = run_layer(p, ifm, ker, bias, chain, mode=cfg.mode, cycle_trace=cycle_trace)
    cm = partition_chain(chain, p.k)
    mapping, temporal = utilization_report(run, cm)
    plan = plan_tiling(p, chain)
    sim_traffic = traffic_from_counters(run.counters)
    ana_traffic = analytic_traffic(p, plan, chain, cfg.mode)
    rec = reconcile(ana_traffic, sim_traffic)
    energy, shares = energy_proxy(sim_traffic, run.counters.macs, cfg.energy_table())
    summary = {
        "layer": name,
        "params": {"n": p.n, "c": p.c, "m": p.m, "h": p.h, "e": p.e, "k": p.k,
                   "stride": p.stride, "pad": p.pad, "groups": p.groups},
        "cycles": {"load": run.cycles.kernel_load, "compute": run.cycles.compute,
                   "drain": run.cycles.drain, "total": run.cycles.total},
        "counters": {
            "macs": run.counters.macs, "dummy_macs": run.counters.dummy_macs,
            "imem_reads": run.counters.imem_reads,
            "kmem_reads": run.counters.kmem_reads,
            "kmem_writes": run.counters.kmem_writes,
            "omem_reads": run.counters.omem_reads,
            "omem_writes": run.counters.omem_writes,
            "dram_reads": sim_traffic.dram.reads,
            "dram_writes": sim_traffic.dram.writes,
            "overflow_events": run.counters.overflow_events,
        },
        "utilization": {"mapping": mapping, "temporal": temporal},
        "first_output_cycle": run.first_output_cycle,
        "mac_count": mac_count(p),
        "reconcile_pass": rec.passed,
        "energy_proxy": {"total": energy, "shares": shares},
        "plan": {
            "primitives": plan.chain.active_primitives,
            "para_tile": plan.para_tile,
            "m_tiles": plan.num_m_tiles,
            "phases": plan.num_phases,
            "kernel_context_demand": plan.kernel_context_demand,
            "needs_kernel_reload": plan.needs_kernel_reload,
            "row_groups": plan.num_row_groups,
            "loop_nest": [{"name": l.name, "trips": l.trips} for l in plan.loop_nest],
        },
    }
    return run, summary, sim_traffic


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    results = []
    trace = [] if args.cycle_trace else None
    for name, p in _select_layers(cfg, small=args.small):
        p = LayerParams(n=cfg.batch, c=p.c, m=p.m, h=p.h, e=p.e, k=p.k,
                        stride=p.stride, pad=p.pad, groups=p.groups)
        run, summary, traffic = _simulate_one(cfg, name, p, cycle_trace=trace)
        results.append(summary)
        print("%s: %d cycles, temporal utilization %.3f, reconcile %s"
              % (name, run.cycles.total, summary["utilization"]["temporal"],
                 "PASS" if summary["reconcile_pass"] else "FAIL"))
        if args.traffic_csv:
            with open(args.traffic_csv, "w") as fh:
                fh.write(traffic.to_csv())
    if args.cycle_trace:
        with open(args.cycle_trace, "w") as fh:
            fh.write("\n".join(trace) + "\n")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    fmt = cfg.fixed_format()
    status = EXIT_OK
    for name, p in _select_layers(cfg, small=args.small):
        ifm, ker, bias = synth_tensors(p, cfg.seed, fmt)
        run = run_layer(p, ifm, ker, bias, cfg.chain(), mode=cfg.mode)
        want, _ = golden_convolution(ifm, ker, bias, p, "fixed")
        if run.ofmaps == want:
            print("%s: OK (%d samples bit-exact)" % (name, len(want.payload)))
        else:
            bad = sum(1 for a, b in zip(run.ofmaps.payload, want.payload) if a != b)
            print("%s: MISMATCH (%d of %d samples differ)" % (name, bad, len(want.payload)))
            status = EXIT_MISMATCH
        if args.dump_tensors:
            run.ofmaps.dump("%s_simulated.cnnt" % name)
            want.dump("%s_golden.cnnt" % name)
    return status


def cmd_report(args) -> int:
    cfg = _load_config(args)
    chain = cfg.chain()
    if cfg.preset:
        preset = PRESETS[cfg.preset]
        layers = [analytic_layer_cycles(p, chain, model=args.model, name="conv%d" % i)
                  for i, p in enumerate(preset.layers, start=1)]
    else:
        p = cfg.custom_layer(batch=1)
        layers = [analytic_layer_cycles(p, chain, model=args.model, name="layer")]
    rep = network_report(layers, chain, cfg.batch, overhead_cycles=cfg.overhead_cycles)
    print(rep.to_text(), end="")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(rep.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    ks = args.k_list or [3, 5, 7, 9, 11]
    pes_list = args.pes_list or [cfg.num_pes]
    batches = args.batch_list or [cfg.batch]
    rows = ["num_pes,kernel,batch,primitives,active_pes,efficiency,peak_gops,"
            "effective_gops,ideal_fps_alexnet"]
    for pes in pes_list:
        for k in ks:
            base = cfg.chain()
            chain = type(base)(num_pes=pes, pipeline_stages=base.pipeline_stages,
                               clock_hz=base.clock_hz, kmem_capacity=base.kmem_capacity,
                               imem_bytes=base.imem_bytes, omem_bytes=base.omem_bytes)
            try:
                cm = partition_chain(chain, k)
            except CapacityError:
                continue
            for batch in batches:
                fps = ""
                if cfg.preset:
                    preset = PRESETS[cfg.preset]
                    try:
                        layers = [analytic_layer_cycles(p, chain, model="ideal",
                                                        name="conv%d" % i)
                                  for i, p in enumerate(preset.layers, start=1)]
                        fps = "%.2f" % network_report(layers, chain, batch,
                                                      include_reference=False).fps
                    except CapacityError:
                        fps = ""
                rows.append("%d,%d,%d,%d,%d,%.4f,%.2f,%.2f,%s" % (
                    pes, k, batch, cm.active_primitives, cm.active_pes, cm.efficiency,
                    peak_throughput(chain) / 1e9,
                    peak_throughput(chain, cm) / 1e9, fps))
    text = "\n".join(rows) + "\n"
    if args.csv_out:
        with open(args.csv_out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return EXIT_OK


def _add_common(sub):
    sub.add_argument("--config", help="flat key: value configuration file")
    sub.add_argument("--pes", type=int, dest="pes")
    sub.add_argument("--stages", type=int, dest="stages")
    sub.add_argument("--mode", choices=["dual", "single"])
    sub.add_argument("--single-channel", action="store_const", const="single", dest="mode")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--batch", type=int)
    sub.add_argument("--preset", choices=sorted(PRESETS))
    sub.add_argument("--layer", type=int, help="1-based preset layer index; 0 = all")
    sub.add_argument("--k", type=int, dest="k")
    sub.add_argument("--h", type=int, dest="h", help="input map size")
    sub.add_argument("--in-channels", type=int, dest="in_channels")
    sub.add_argument("--out-channels", type=int, dest="out_channels")
    sub.add_argument("--stride", type=int)
    sub.add_argument("--pad", type=int)
    sub.add_argument("--groups", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chainsim",
                                 description="1D-chain CNN accelerator model")
    subs = ap.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("map", help="chain partitioning table")
    _add_common(sub)
    sub.add_argument("--k-list", type=int, nargs="*", dest="k_list")
    sub.set_defaults(func=cmd_map)

    sub = subs.add_parser("schedule", help="build and validate a group schedule")
    _add_common(sub)
    sub.add_argument("--group", type=int)
    sub.add_argument("--trace-out")
    sub.set_defaults(func=cmd_schedule)

    sub = subs.add_parser("simulate", help="cycle-level layer simulation")
    _add_common(sub)
    sub.add_argument("--small", action="store_true", help="scale preset channel counts down")
    sub.add_argument("--json-out")
    sub.add_argument("--traffic-csv")
    sub.add_argument("--cycle-trace", help="per-cycle per-primitive trace file (tiny layers)")
    sub.set_defaults(func=cmd_simulate)

    sub = subs.add_parser("verify", help="simulate and diff against the direct convolution")
    _add_common(sub)
    sub.add_argument("--small", action="store_true")
    sub.add_argument("--dump-tensors", action="store_true")
    sub.set_defaults(func=cmd_verify)

    sub = subs.add_parser("report", help="performance report against published figures")
    _add_common(sub)
    sub.add_argument("--model", choices=["ideal", "scheduled"], default="ideal")
    sub.add_argument("--json-out")
    sub.set_defaults(func=cmd_report)

    sub = subs.add_parser("sweep", help="grid sweep to CSV")
    _add_common(sub)
    sub.add_argument("--k-list", type=int, nargs="*", dest="k_list")
    sub.add_argument("--pes-list", type=int, nargs="*", dest="pes_list")
    sub.add_argument("--batch-list", type=int, nargs="*", dest="batch_list")
    sub.add_argument("--csv-out")
    sub.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print("capacity error: %s" % exc, file=sys.stderr)
        return EXIT_CAPACITY
    except (ShapeError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except SimulationFault as exc:
        print("internal fault: %s" % exc, file=sys.stderr)
        return EXIT_INTERNAL


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
