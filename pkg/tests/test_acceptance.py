"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run pytest with -s to see them all).
Peak counting for the super-resolution criterion uses a fixed qualification:
a local maximum counts as a peak when it lies within 10 dB of the spectrum
maximum and has at least 3 dB of prominence, so a merged main lobe with a
shallow dip is one peak while genuinely resolved sources are two.
"""

import dataclasses
import filecmp
import json
import math
import time

import numpy as np
import pytest

from radarkit import (
    CfarParams,
    DataCube,
    NoiseSpec,
    PipelineConfig,
    PointTarget,
    RadarConfig,
    VirtualArray,
    WindowKind,
    aoa_fft,
    ca_cfar_1d,
    capon,
    covariance,
    default_angle_grid,
    deinterleave,
    derived_params,
    doppler_processing,
    music,
    packetize,
    power_map,
    range_processing,
    reassemble,
    run_pipeline,
    serialize_cube,
    steering_vector,
    synthesize_frame,
    validate_config,
)
from radarkit.capture import CaptureListener
from radarkit.cli import main
from radarkit.rangedoppler import Accumulation, RangeDopplerCube

from conftest import C0, brute_force_dft, random_int_cube_data

AMPLITUDE = 1024.0
NOISE_30DB = AMPLITUDE**2 / 10**3.0  # per-sample SNR 30 dB


def _report(criterion: str, ok: bool, detail: str):
    print(f"acceptance {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_criterion_1_round_trip_recovery():
    """Single target (10 m, 2.5367 m/s, 20 deg) recovered over 20 seeds."""
    cfg = PipelineConfig(radar=C0)
    dp = derived_params(C0)
    target = PointTarget(10.0, 2.5367, 20.0, AMPLITUDE)
    start = time.perf_counter()
    failures = []
    for seed in range(20):
        cube = synthesize_frame(C0, [target], NoiseSpec(NOISE_30DB, seed))
        cube = deinterleave(serialize_cube(cube), C0)  # capture-path quantization
        cloud = run_pipeline(cfg, [cube])[0].point_cloud
        if len(cloud) != 1:
            failures.append((seed, f"{len(cloud)} detections"))
            continue
        p = cloud.points[0]
        if abs(p.range_m - 10.0) > dp.range_resolution_m / 2:
            failures.append((seed, f"range {p.range_m}"))
        elif abs(p.radial_velocity_m_s - 2.5367) > dp.velocity_resolution_m_s / 2:
            failures.append((seed, f"velocity {p.radial_velocity_m_s}"))
        elif abs(p.azimuth_deg - 20.0) > 2.0:
            failures.append((seed, f"azimuth {p.azimuth_deg}"))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 10.0
    _report(
        "1 round-trip recovery",
        ok,
        f"20 seeds, tolerances r<={dp.range_resolution_m / 2:.4f} m, "
        f"v<={dp.velocity_resolution_m_s / 2:.4f} m/s, az<=2 deg, {elapsed:.1f} s",
    )
    assert not failures, failures
    assert elapsed < 10.0


def test_criterion_2_dft_oracle():
    """FFT matches the brute-force O(N^2) DFT to 1e-9 for all lengths <= 64."""
    rng = np.random.default_rng(0)
    worst = 0.0
    inputs = 0
    for n in range(2, 65):
        for _ in range(2):
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            ref = brute_force_dft(x)
            err = np.linalg.norm(np.fft.fft(x) - ref) / np.linalg.norm(ref)
            worst = max(worst, err)
            inputs += 1
    # Same check through the actual range/doppler stages on a small cube.
    cfg = RadarConfig(2, 2, 16, 32, 10e6, 3.0e13, 77e9, 60e-6)
    data = rng.standard_normal((32, 2, 32)) + 1j * rng.standard_normal((32, 2, 32))
    cube = DataCube(data, 0, cfg)
    rc = range_processing(cube, WindowKind.RECTANGULAR)
    for chirp in range(32):
        for rx in range(2):
            ref = brute_force_dft(data[chirp, rx])
            err = np.linalg.norm(rc[chirp, rx] - ref) / np.linalg.norm(ref)
            worst = max(worst, err)
            inputs += 1
    rd = doppler_processing(rc, cfg, WindowKind.RECTANGULAR)
    for tx in range(2):
        for rx in range(2):
            for rbin in range(0, 32, 7):
                ref = np.fft.fftshift(brute_force_dft(rc[tx::2, rx, rbin]))
                got = rd.data[:, tx * 2 + rx, rbin]
                err = np.linalg.norm(got - ref) / np.linalg.norm(ref)
                worst = max(worst, err)
                inputs += 1
    ok = worst < 1e-9 and inputs >= 100
    _report("2 DFT oracle", ok, f"{inputs} inputs, worst rel err {worst:.2e}")
    assert ok


def test_criterion_3_cfar_calibration():
    """Empirical false-alarm rate within [0.5, 2] x pfa on >= 1e6 cells."""
    rng = np.random.default_rng(1)
    results = []
    for pfa in (1e-2, 1e-3):
        params = CfarParams(guard_cells=2, train_cells=12, pfa=pfa)
        alarms = cells = 0
        for _ in range(1000):
            profile = rng.exponential(1.0, 1024)
            mask, _ = ca_cfar_1d(profile, params)
            alarms += int(mask.sum())
            cells += mask.size
        rate = alarms / cells
        results.append((pfa, rate, cells))
    rates_ok = all(0.5 * pfa <= rate <= 2.0 * pfa for pfa, rate, _ in results)
    cells_ok = all(cells >= 1_000_000 for _, _, cells in results)
    profile = rng.exponential(1.0, 4096)
    params = CfarParams(guard_cells=2, train_cells=12, pfa=1e-3)
    mask, _ = ca_cfar_1d(profile, params)
    mask_scaled, _ = ca_cfar_1d(profile * 1e3, params)
    scale_ok = np.array_equal(mask, mask_scaled)
    ok = rates_ok and cells_ok and scale_ok
    detail = ", ".join(f"pfa {pfa:g}: rate {rate:.2e}" for pfa, rate, _ in results)
    _report("3 CFAR calibration", ok, detail + f", scale-invariant={scale_ok}")
    assert ok


def _qualified_peaks(angles, power, rel_db=10.0, prom_db=3.0):
    """Local maxima within rel_db of the max with >= prom_db prominence."""
    db = 10.0 * np.log10(np.maximum(power, 1e-300))
    maxima = [
        i for i in range(1, len(db) - 1) if db[i] > db[i - 1] and db[i] > db[i + 1]
    ]
    if not maxima:
        return []
    top = max(db[i] for i in maxima)
    peaks = []
    for i in maxima:
        if db[i] < top - rel_db:
            continue
        prominence = None
        for step in (-1, 1):
            j = i
            valley = db[i]
            while 0 <= j < len(db):
                valley = min(valley, db[j])
                if db[j] > db[i]:
                    prominence = (
                        db[i] - valley
                        if prominence is None
                        else min(prominence, db[i] - valley)
                    )
                    break
                j += step
        if prominence is None:
            prominence = db[i] - db.min()
        if prominence >= prom_db:
            peaks.append((float(angles[i]), float(db[i])))
    return peaks


def test_criterion_4_super_resolution():
    """MUSIC/Capon split two sources the naive FFT merges, 45 of 50 seeds."""
    array = VirtualArray(0.5 * np.arange(8))
    grid = default_angle_grid(0.1)
    amp = 10.0  # element SNR 20 dB against unit noise
    n_snapshots = 256
    music_ok = capon_ok = fft_ok = 0
    for seed in range(50):
        rng = np.random.default_rng(4000 + seed)
        snaps = (
            rng.standard_normal((n_snapshots, 8))
            + 1j * rng.standard_normal((n_snapshots, 8))
        ) / np.sqrt(2)
        for theta in (7.0, -7.0):
            s = amp / np.sqrt(2) * (
                rng.standard_normal(n_snapshots) + 1j * rng.standard_normal(n_snapshots)
            )
            snaps += s[:, np.newaxis] * steering_vector(theta, array)[np.newaxis, :]
        r = covariance(snaps)
        r_loaded = covariance(snaps, loading=1e-3)

        def two_separated(spectrum):
            peaks = sorted(
                _qualified_peaks(spectrum.angles_deg, spectrum.power),
                key=lambda p: -p[1],
            )
            return len(peaks) >= 2 and abs(peaks[0][0] - peaks[1][0]) >= 10.0

        music_ok += two_separated(music(r, array, 2, grid))
        capon_ok += two_separated(capon(r_loaded, array, grid))
        fft_power = np.mean(
            [aoa_fft(snaps[i], array, 256).power for i in range(n_snapshots)], axis=0
        )
        fft_angles = aoa_fft(snaps[0], array, 256).angles_deg
        fft_ok += len(_qualified_peaks(fft_angles, fft_power)) == 1
    ok = music_ok >= 45 and capon_ok >= 45 and fft_ok >= 45
    _report(
        "4 super-resolution",
        ok,
        f"music {music_ok}/50, capon {capon_ok}/50, fft-single {fft_ok}/50",
    )
    assert ok


def test_criterion_5_mimo_virtual_count():
    """num_virtual_rx = M * N exactly for 20 random antenna counts."""
    rng = np.random.default_rng(5)
    checked = []
    for _ in range(20):
        m, n = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        cfg = RadarConfig(m, n, 16, 64, 10e6, 3.0e13, 77e9, 60e-6)
        dp = derived_params(validate_config(cfg))
        checked.append(dp.num_virtual_rx == m * n)
    ok = all(checked)
    _report("5 MIMO virtual count", ok, f"20 random (M, N) pairs, exact product")
    assert ok


def test_criterion_6_transport():
    """Loopback exact at 0 loss; window reorder bit-exact; 1% loss accounted."""
    rng = np.random.default_rng(6)
    cubes = [DataCube(random_int_cube_data(rng, C0), i, C0) for i in range(2)]
    packets = packetize(cubes, payload_bytes=1456)
    reference = b"".join(serialize_cube(c) for c in cubes)

    # (a) Zero-loss UDP loopback reproduces the capture bytes exactly.
    listener = CaptureListener(0, C0, window=8, host="127.0.0.1")
    try:
        import socket
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_SNDBUF, 1 << 23)
        for i, pkt in enumerate(packets):
            sock.sendto(pkt.encode(), ("127.0.0.1", listener.port))
            if i % 64 == 63:
                time.sleep(0.0005)
        sock.close()
        received = list(listener.frames(max_frames=2, idle_timeout_s=10.0))
    finally:
        listener.stop()
    loopback_ok = len(received) == 2 and all(
        np.array_equal(got.data, sent.data) for (got, _), sent in zip(received, cubes)
    )

    # (b) Random displacement <= window reassembles bit-exactly.
    reorder_ok = True
    for seed in range(5):
        r = np.random.default_rng(600 + seed)
        w = int(r.integers(1, 17))
        keys = np.arange(len(packets)) + r.uniform(0.0, w, len(packets))
        order = np.argsort(keys, kind="stable")
        stream, report = reassemble([packets[i] for i in order], window=w)
        reorder_ok &= stream == reference and report.packets_dropped == 0

    # (c) 1% mid-stream loss: frame count preserved, zero-fill = 1456/packet.
    r = np.random.default_rng(66)
    droppable = len(packets) - 40  # keep the tail so gap deadlines pass
    lost = set(np.flatnonzero(r.random(droppable) < 0.01).tolist())
    kept = [p for p in packets if p.seq not in lost]
    stream, report = reassemble(kept, window=16)
    frames_ok = len(stream) == len(reference)
    frame_count = len(stream) // (len(reference) // 2)
    loss_ok = (
        report.packets_dropped == len(lost)
        and report.bytes_zero_filled == 1456 * len(lost)
        and frames_ok
        and frame_count == 2
    )
    ok = loopback_ok and reorder_ok and loss_ok
    _report(
        "6 transport",
        ok,
        f"loopback exact={loopback_ok}, reorder exact={reorder_ok}, "
        f"{len(lost)} lost -> {report.bytes_zero_filled} zero bytes",
    )
    assert ok


def test_criterion_7_windows_and_energy():
    """Parseval to 1e-9 per axis; +9.03 +- 0.1 dB noncoherent gain over 8 rx."""
    cube = synthesize_frame(
        C0, [PointTarget(10.0, 2.0, 10.0)], NoiseSpec(0.25, 7)
    )
    rc = range_processing(cube, WindowKind.RECTANGULAR)
    time_energy = np.sum(np.abs(cube.data) ** 2, axis=-1)
    freq_energy = np.sum(np.abs(rc) ** 2, axis=-1) / C0.samples_per_chirp
    parseval_range = np.max(np.abs(freq_energy - time_energy) / time_energy)
    rd = doppler_processing(rc, C0, WindowKind.RECTANGULAR)
    slow = rc.reshape(128, 2, 4, 256).reshape(128, 8, 256)
    doppler_energy = np.sum(np.abs(rd.data) ** 2, axis=0) / 128
    slow_energy = np.sum(np.abs(slow) ** 2, axis=0)
    parseval_doppler = np.max(np.abs(doppler_energy - slow_energy) / slow_energy)

    static = synthesize_frame(C0, [PointTarget(10.0)], NoiseSpec(0.0, 0))
    rd_static = doppler_processing(range_processing(static, WindowKind.RECTANGULAR), C0)
    full = power_map(rd_static, Accumulation.NONCOHERENT_SUM).max()
    single = power_map(
        RangeDopplerCube(rd_static.data[:, :1, :], C0), Accumulation.NONCOHERENT_SUM
    ).max()
    gain_db = full - single
    ok = (
        parseval_range < 1e-9
        and parseval_doppler < 1e-9
        and abs(gain_db - 10 * math.log10(8)) <= 0.1
    )
    _report(
        "7 windows/energy",
        ok,
        f"parseval {max(parseval_range, parseval_doppler):.2e}, "
        f"noncoherent gain {gain_db:.3f} dB",
    )
    assert ok


def test_criterion_8_determinism(tmp_path):
    """Identical config+seed gives byte-identical outputs at any worker count."""
    cfg_path = tmp_path / "pipeline.json"
    scene_path = tmp_path / "scene.json"
    capture_path = tmp_path / "capture.orad"
    cfg_path.write_text(json.dumps({
        "radar": dataclasses.asdict(C0), "seed": 99,
    }))
    scene_path.write_text(json.dumps({
        "noise_power": NOISE_30DB,
        "seed": 99,
        "n_frames": 3,
        "frames": [
            {"frame": i, "targets": [
                {"range_m": 10.0, "velocity_m_s": 2.5367,
                 "azimuth_deg": 20.0, "amplitude": AMPLITUDE},
            ]}
            for i in range(3)
        ],
    }))
    assert main(["simulate", "--config", str(cfg_path), "--scene", str(scene_path),
                 "--out", str(capture_path)]) == 0
    dirs = []
    for name, workers in (("a", 1), ("b", 4), ("c", 1)):
        out = tmp_path / name
        assert main(["process", "--config", str(cfg_path), "--in", str(capture_path),
                     "--out", str(out), "--workers", str(workers)]) == 0
        dirs.append(out)
    identical = True
    names = sorted(p.name for p in dirs[0].iterdir())
    for other in dirs[1:]:
        if sorted(p.name for p in other.iterdir()) != names:
            identical = False
            continue
        match, mismatch, errors = filecmp.cmpfiles(dirs[0], other, names, shallow=False)
        identical &= not mismatch and not errors
    _report("8 determinism", identical, f"{len(names)} files x 3 runs (workers 1/4/1)")
    assert identical


def test_criterion_9_throughput(tmp_path, capsys):
    """`bench` end-to-end rate on the reference config is >= 10 frames/s."""
    cfg_path = tmp_path / "pipeline.json"
    cfg_path.write_text(json.dumps({
        "radar": dataclasses.asdict(C0), "seed": 0,
        "output_dir": str(tmp_path / "bench"),
    }))
    assert main(["bench", "--config", str(cfg_path), "--frames", "12"]) == 0
    capsys.readouterr()  # swallow the bench table; the rate comes from bench.txt
    table = (tmp_path / "bench" / "bench.txt").read_text()
    rate = float(table.rsplit("throughput:", 1)[1].split("frames/s")[0])
    ok = rate >= 10.0
    _report("9 throughput", ok, f"{rate:.1f} frames/s end-to-end")
    assert ok
