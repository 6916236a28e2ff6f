"""Command-line front end: simulate, process, listen, replay, bench.

Every failure exits nonzero with a single-line JSON error object on stderr,
e.g. {"error": "FormatError", "message": "bad magic ..."}.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import time
from pathlib import Path

import numpy as np

from .capture import listen, read_capture_file, write_capture_file
from .core import ConfigError, RadarError
from .detect import cfar_2d, group_peaks
from .pipeline import (
    PipelineConfig,
    load_pipeline_config,
    run_pipeline,
    write_drop_reports,
    write_frame_outputs,
    write_run_manifest,
)
from .rangedoppler import accumulate_power, doppler_processing, range_processing
from .simulate import NoiseSpec, PointTarget, packetize, synthesize_capture


def _load_scene(path) -> tuple[list[tuple[int, list[PointTarget]]], NoiseSpec, int]:
    with open(path, "r", encoding="utf-8") as f:
        d = json.load(f)
    allowed = {"noise_power", "seed", "frames", "n_frames"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"scene: unknown keys {sorted(unknown)}")
    noise = NoiseSpec(noise_power=d.get("noise_power", 0.0), seed=d.get("seed", 0))
    scene = []
    for entry in d.get("frames", []):
        unknown = set(entry) - {"frame", "targets"}
        if unknown:
            raise ConfigError(f"scene frame entry: unknown keys {sorted(unknown)}")
        targets = []
        for t in entry.get("targets", []):
            unknown = set(t) - {"range_m", "velocity_m_s", "azimuth_deg", "amplitude"}
            if unknown:
                raise ConfigError(f"scene target: unknown keys {sorted(unknown)}")
            targets.append(
                PointTarget(
                    range_m=t["range_m"],
                    radial_velocity_m_s=t.get("velocity_m_s", 0.0),
                    azimuth_deg=t.get("azimuth_deg", 0.0),
                    amplitude=t.get("amplitude", 1.0),
                )
            )
        scene.append((entry["frame"], targets))
    n_frames = d.get("n_frames", max((f for f, _ in scene), default=0) + 1)
    return scene, noise, n_frames


def _cmd_simulate(args) -> int:
    cfg = load_pipeline_config(args.config)
    scene, noise, n_frames = _load_scene(args.scene)
    cubes = synthesize_capture(cfg.radar, scene, noise, n_frames)
    write_capture_file(args.out, cfg.radar, cubes)
    print(f"wrote {len(cubes)} frames to {args.out}")
    return 0


def _resolve_out(cfg: PipelineConfig, out_flag) -> Path:
    out = out_flag if out_flag is not None else cfg.output_dir
    if out is None:
        raise ConfigError("no output directory: pass --out or set output_dir")
    return Path(out)


def _cmd_process(args) -> int:
    cfg = load_pipeline_config(args.config)
    file_cfg, cubes = read_capture_file(args.infile)
    if file_cfg != cfg.radar:
        raise ConfigError(
            "capture file radar config does not match the pipeline config"
        )
    out = _resolve_out(cfg, args.out)
    results = run_pipeline(cfg, cubes, workers=args.workers)
    for result in results:
        write_frame_outputs(out, result)
    write_run_manifest(out, cfg)
    n_points = sum(len(r.point_cloud) for r in results)
    print(f"processed {len(results)} frames, {n_points} points -> {out}")
    return 0


def _cmd_listen(args) -> int:
    cfg = load_pipeline_config(args.config)
    out = _resolve_out(cfg, args.out)
    results = []
    stream = listen(
        args.port,
        cfg.radar,
        window=args.window,
        max_frames=args.frames,
        idle_timeout_s=args.idle_timeout_s,
    )
    for cube, report in stream:
        result = run_pipeline(cfg, [cube], drop_reports=[report])[0]
        write_frame_outputs(out, result)
        results.append(result)
        print(
            f"frame {result.frame_index}: {len(result.point_cloud)} points, "
            f"{report.packets_dropped} packets dropped"
        )
    write_drop_reports(out, results)
    write_run_manifest(out, cfg)
    print(f"captured {len(results)} frames -> {out}")
    return 0


def _cmd_replay(args) -> int:
    _, cubes = read_capture_file(args.infile)
    packets = packetize(cubes)
    rng = np.random.default_rng(args.seed)
    if args.reorder > 0:
        keys = np.arange(len(packets)) + rng.uniform(0.0, args.reorder, len(packets))
        packets = [packets[i] for i in np.argsort(keys, kind="stable")]
    host, _, port = args.dest.rpartition(":")
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_SNDBUF, 1 << 23)
    sent = dropped = 0
    try:
        for i, pkt in enumerate(packets):
            if args.loss > 0 and rng.random() < args.loss:
                dropped += 1
                continue
            sock.sendto(pkt.encode(), (host or "127.0.0.1", int(port)))
            sent += 1
            if i % 64 == 63:
                time.sleep(0.0005)  # keep loopback receive buffers ahead
    finally:
        sock.close()
    print(f"replayed {sent} packets ({dropped} dropped) to {args.dest}")
    return 0


def _cmd_bench(args) -> int:
    from .aoa import doppler_compensate

    cfg = load_pipeline_config(args.config)
    dp_target = PointTarget(range_m=10.0, radial_velocity_m_s=0.0, amplitude=1000.0)
    noise = NoiseSpec(noise_power=100.0, seed=cfg.seed)
    cubes = synthesize_capture(
        cfg.radar, [(i, [dp_target]) for i in range(args.frames)], noise, args.frames
    )
    timings: dict[str, float] = {}

    def timed(name, fn, items):
        start = time.perf_counter()
        out = [fn(x) for x in items]
        timings[name] = (time.perf_counter() - start) / len(items) * 1e3
        return out

    range_cubes = timed("range_fft", lambda c: range_processing(c, cfg.range_window), cubes)
    rd_cubes = timed(
        "doppler_fft",
        lambda rc: doppler_processing(rc, cfg.radar, cfg.doppler_window),
        range_cubes,
    )
    maps = timed("power_map", lambda rd: accumulate_power(rd, cfg.accumulation), rd_cubes)
    det_lists = timed(
        "cfar_2d", lambda m: cfar_2d(m, cfg.range_cfar, cfg.doppler_cfar), maps
    )
    timed("group_peaks", lambda d: group_peaks(d, cfg.connectivity), det_lists)
    timed("doppler_compensate", doppler_compensate, rd_cubes)

    start = time.perf_counter()
    run_pipeline(cfg, cubes, workers=args.workers)
    total_ms = (time.perf_counter() - start) / len(cubes) * 1e3
    timings["end_to_end"] = total_ms

    lines = [f"{'stage':<20} {'mean ms/frame':>14}"]
    for name, ms in timings.items():
        lines.append(f"{name:<20} {ms:>14.3f}")
    lines.append(f"throughput: {1e3 / total_ms:.1f} frames/s over {len(cubes)} frames")
    table = "\n".join(lines)
    print(table)
    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.txt").write_text(table + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarkit", description="FMCW MIMO radar processing toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scene file into a capture file")
    p.add_argument("--config", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("process", help="process a capture file into point clouds")
    p.add_argument("--config", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=_cmd_process)

    p = sub.add_parser("listen", help="process live UDP capture traffic")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--frames", type=int, default=None,
                   help="stop after this many frames (default: run until idle)")
    p.add_argument("--idle-timeout-s", type=float, default=None)
    p.set_defaults(fn=_cmd_listen)

    p = sub.add_parser("replay", help="transmit a capture file as UDP packets")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dest", required=True, help="addr:port")
    p.add_argument("--loss", type=float, default=0.0)
    p.add_argument("--reorder", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("bench", help="per-stage timing on synthetic frames")
    p.add_argument("--config", required=True)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (RadarError, OSError, json.JSONDecodeError) as e:
        print(
            json.dumps({"error": type(e).__name__, "message": str(e)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
