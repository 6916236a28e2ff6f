import math

import numpy as np
import pytest

from radarkit import (
    CfarParams,
    Detection,
    NoiseSpec,
    ParamError,
    PointTarget,
    WindowError,
    WindowKind,
    accumulate_power,
    bin_to_range,
    bin_to_velocity,
    ca_cfar_1d,
    cfar_2d,
    cfar_alpha,
    doppler_processing,
    group_peaks,
    log_gabor_filter,
    range_processing,
    synthesize_frame,
    to_point_cloud,
    write_point_cloud_csv,
)



def test_cfar_params_validation():
    with pytest.raises(ValueError):
        CfarParams(guard_cells=-1)
    with pytest.raises(ValueError):
        CfarParams(train_cells=0)
    with pytest.raises(ValueError):
        CfarParams(pfa=0.0)
    with pytest.raises(ValueError):
        CfarParams(pfa=1.0)


def test_alpha_closed_form():
    # 24 * (10^(3/24) - 1) for pfa 1e-3 with 12 training cells per side.
    assert cfar_alpha(1e-3, 24) == pytest.approx(8.004514371919775, rel=1e-12)


def test_flat_profile_yields_no_detections():
    params = CfarParams(guard_cells=2, train_cells=8, pfa=1e-3)
    mask, thresholds = ca_cfar_1d(np.full(128, 3.0), params)
    assert not mask.any()
    assert (thresholds > 3.0).all()  # alpha > 1 for small pfa


def test_single_spike_flagged_exactly():
    profile = np.ones(200)
    profile[77] = 100.0
    mask, _ = ca_cfar_1d(profile, CfarParams(guard_cells=2, train_cells=12, pfa=1e-3))
    assert list(np.flatnonzero(mask)) == [77]


def test_edge_cells_use_one_sided_training_with_recomputed_alpha():
    rng = np.random.default_rng(0)
    profile = rng.exponential(1.0, 64)
    params = CfarParams(guard_cells=1, train_cells=2, pfa=1e-2)
    _, thresholds = ca_cfar_1d(profile, params)
    # Cell 0 has no left side: training = cells [2, 3], alpha for N_t = 2.
    expected0 = cfar_alpha(1e-2, 2) * profile[2:4].mean()
    assert thresholds[0] == pytest.approx(expected0, rel=1e-12)
    # An interior cell sees both sides: N_t = 4.
    i = 30
    train = np.concatenate([profile[i - 3:i - 1], profile[i + 2:i + 4]])
    assert thresholds[i] == pytest.approx(cfar_alpha(1e-2, 4) * train.mean(), rel=1e-12)


def test_circular_mode_wraps_training_cells():
    profile = np.ones(32)
    profile[-1] = 50.0  # sits in cell 1's wrapped left training window
    params = CfarParams(guard_cells=0, train_cells=2, pfa=1e-2, circular=True)
    _, thresholds = ca_cfar_1d(profile, params)
    expected = cfar_alpha(1e-2, 4) * np.array([50.0, 1.0, 1.0, 1.0]).mean()
    assert thresholds[1] == pytest.approx(expected, rel=1e-12)


def test_cfar_scale_invariance():
    rng = np.random.default_rng(1)
    profile = rng.exponential(1.0, 512)
    params = CfarParams(guard_cells=2, train_cells=8, pfa=1e-2)
    mask, _ = ca_cfar_1d(profile, params)
    mask_scaled, _ = ca_cfar_1d(profile * 1e3, params)
    assert np.array_equal(mask, mask_scaled)


def test_cfar_window_must_fit():
    with pytest.raises(WindowError):
        ca_cfar_1d(np.ones(16), CfarParams(guard_cells=2, train_cells=6))
    with pytest.raises(WindowError):
        ca_cfar_1d(np.ones((4, 4)), CfarParams())  # not 1-d


def test_cfar_empirical_false_alarm_rate_quick():
    rng = np.random.default_rng(2)
    params = CfarParams(guard_cells=2, train_cells=12, pfa=1e-2)
    cells = 0
    alarms = 0
    for _ in range(200):
        profile = rng.exponential(1.0, 1024)
        mask, _ = ca_cfar_1d(profile, params)
        alarms += mask.sum()
        cells += mask.size
    rate = alarms / cells
    assert 0.5e-2 <= rate <= 2e-2


def test_cfar_2d_zero_map_no_detections():
    params = CfarParams(guard_cells=1, train_cells=4, pfa=1e-3)
    assert cfar_2d(np.zeros((64, 64)), params, params) == []


def test_cfar_2d_finds_simulated_target(c0):
    params = CfarParams(guard_cells=2, train_cells=8, pfa=1e-4)
    hits = 0
    for seed in range(5):
        cube = synthesize_frame(
            c0,
            [PointTarget(10.0, 2.5367, 20.0, amplitude=1000.0)],
            NoiseSpec(1000.0, seed),  # 30 dB per-sample SNR
        )
        rd = doppler_processing(range_processing(cube, WindowKind.HANN), c0, WindowKind.HANN)
        detections = cfar_2d(accumulate_power(rd), params, params)
        grouped = group_peaks(detections)
        hits += (
            len(grouped) == 1
            and grouped[0].range_bin == 51
            and grouped[0].doppler_bin == 20
        )
    assert hits == 5


def test_cfar_2d_and_composition_is_conservative():
    # Per-cell false alarm rate of the range-AND-doppler composition stays
    # at or below the per-axis pfa on >= 1e6 homogeneous noise cells.
    rng = np.random.default_rng(3)
    params = CfarParams(guard_cells=2, train_cells=8, pfa=1e-3)
    cells = alarms = 0
    for _ in range(8):
        noise_map = rng.exponential(1.0, (128, 1024))
        alarms += len(cfar_2d(noise_map, params, params))
        cells += noise_map.size
    assert cells >= 1_000_000
    assert alarms / cells <= 1e-3


def test_detection_fields_consistent(c0):
    params = CfarParams(guard_cells=2, train_cells=8, pfa=1e-4)
    cube = synthesize_frame(
        c0, [PointTarget(10.0, 0.0, 0.0, 1000.0)], NoiseSpec(1000.0, 0)
    )
    rd = doppler_processing(range_processing(cube, WindowKind.HANN), c0, WindowKind.HANN)
    detections = cfar_2d(accumulate_power(rd), params, params)
    assert detections
    for det in detections:
        assert det.power > det.threshold
        assert det.snr_db > 0


def test_log_gabor_zero_map():
    assert not log_gabor_filter(np.zeros((16, 16)), 0.2, 0.5).any()


def test_log_gabor_kills_dc():
    out = log_gabor_filter(np.full((32, 48), 5.0), 0.1, 0.5)
    assert np.abs(out).max() < 1e-9


def test_log_gabor_passes_tone_at_center_frequency():
    y, x = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
    tone = np.cos(2 * np.pi * 8 * x / 64)  # radial frequency 8/64 cycles
    out = log_gabor_filter(tone, f0_cycles=8 / 64, sigma_ratio=0.5)
    assert np.abs(out - tone).max() < 1e-6


def test_log_gabor_linearity():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((32, 32))
    b = rng.standard_normal((32, 32))
    lhs = log_gabor_filter(2.0 * a + 3.0 * b, 0.15, 0.6)
    rhs = 2.0 * log_gabor_filter(a, 0.15, 0.6) + 3.0 * log_gabor_filter(b, 0.15, 0.6)
    assert np.allclose(lhs, rhs, atol=1e-9)


@pytest.mark.parametrize("f0,sigma", [(0.0, 0.5), (0.5, 0.5), (0.1, 0.0), (0.1, 1.0)])
def test_log_gabor_param_errors(f0, sigma):
    with pytest.raises(ParamError):
        log_gabor_filter(np.zeros((8, 8)), f0, sigma)


def _det(range_bin, doppler_bin, power):
    return Detection(range_bin, doppler_bin, power, power / 2, 10.0)


def test_group_peaks_empty():
    assert group_peaks([]) == []


def test_group_peaks_adjacent_cells_reduce_to_strongest():
    dets = [_det(10, 0, 5.0), _det(11, 0, 9.0), _det(12, 0, 4.0)]
    grouped = group_peaks(dets, connectivity=8)
    assert len(grouped) == 1
    assert grouped[0].range_bin == 11


def test_group_peaks_gap_keeps_two_groups():
    dets = [_det(10, 0, 5.0), _det(12, 0, 4.0)]
    for connectivity in (4, 8):
        assert len(group_peaks(dets, connectivity)) == 2


def test_group_peaks_diagonal_connectivity():
    dets = [_det(10, 0, 5.0), _det(11, 1, 4.0)]
    assert len(group_peaks(dets, connectivity=8)) == 1
    assert len(group_peaks(dets, connectivity=4)) == 2
    with pytest.raises(ValueError):
        group_peaks(dets, connectivity=6)


def test_group_peaks_output_subset_of_input():
    rng = np.random.default_rng(5)
    dets = [
        _det(int(rng.integers(0, 30)), int(rng.integers(-8, 8)), float(rng.uniform(1, 9)))
        for _ in range(40)
    ]
    grouped = group_peaks(dets)
    assert len(grouped) <= len(dets)
    pool = {(d.range_bin, d.doppler_bin, d.power) for d in dets}
    assert all((d.range_bin, d.doppler_bin, d.power) in pool for d in grouped)


def test_to_point_cloud_geometry(c0):
    det = Detection(51, 20, 100.0, 10.0, 20.0)
    cloud = to_point_cloud([det], [[(20.0, 1.0)]], c0, frame_index=2)
    assert len(cloud) == 1
    p = cloud.points[0]
    expected_range = bin_to_range(51, c0)
    expected_v = bin_to_velocity(20, c0)
    assert p.range_m == pytest.approx(expected_range, rel=1e-12)
    assert p.radial_velocity_m_s == pytest.approx(expected_v, rel=1e-12)
    assert p.x_m == pytest.approx(expected_range * math.sin(math.radians(20)), rel=1e-12)
    assert p.y_m == pytest.approx(expected_range * math.cos(math.radians(20)), rel=1e-12)
    assert cloud.frame_index == 2


def test_to_point_cloud_broadside_and_empty(c0):
    det = Detection(51, 0, 100.0, 10.0, 20.0)
    cloud = to_point_cloud([det], [[(0.0, 1.0)]], c0)
    assert cloud.points[0].x_m == pytest.approx(0.0, abs=1e-12)
    assert cloud.points[0].y_m == pytest.approx(cloud.points[0].range_m)
    assert len(to_point_cloud([], [], c0)) == 0
    assert len(to_point_cloud([det], [[]], c0)) == 0  # no angle -> dropped


def test_to_point_cloud_length_mismatch(c0):
    with pytest.raises(ValueError):
        to_point_cloud([Detection(1, 0, 2.0, 1.0, 3.0)], [], c0)


def test_point_cloud_csv_format(tmp_path, c0):
    det = Detection(51, 20, 100.0, 10.0, 12.345678)
    cloud = to_point_cloud([det], [[(20.0, 1.0)]], c0, frame_index=7)
    path = tmp_path / "points.csv"
    write_point_cloud_csv(cloud, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "frame,range_m,azimuth_deg,velocity_m_s,snr_db,x_m,y_m"
    fields = lines[1].split(",")
    assert fields[0] == "7"
    assert float(fields[1]) == pytest.approx(bin_to_range(51, c0), rel=1e-5)
    assert fields[4] == "12.3457"  # six significant digits
