import numpy as np
import pytest

from radarkit import RadarConfig

# Reference configuration used throughout the suite: 2 TX, 4 RX, 128 chirps
# per TX, 256 samples, 10 MHz sampling, 30 MHz/us slope, 77 GHz carrier,
# 60 us chirp period, half-wavelength RX spacing, filled virtual line.
C0 = RadarConfig(
    num_tx=2,
    num_rx=4,
    chirps_per_frame_per_tx=128,
    samples_per_chirp=256,
    sample_rate_hz=10e6,
    chirp_slope_hz_per_s=3.0e13,
    start_freq_hz=77e9,
    chirp_period_s=60e-6,
    rx_spacing_wavelengths=0.5,
    tx_spacing_wavelengths=2.0,
)


@pytest.fixture
def c0() -> RadarConfig:
    return C0


def small_config(
    num_tx=2, num_rx=2, chirps=8, samples=16, rx_spacing=0.5
) -> RadarConfig:
    """Tiny valid config for fast structural tests."""
    return RadarConfig(
        num_tx=num_tx,
        num_rx=num_rx,
        chirps_per_frame_per_tx=chirps,
        samples_per_chirp=samples,
        sample_rate_hz=10e6,
        chirp_slope_hz_per_s=3.0e13,
        start_freq_hz=77e9,
        chirp_period_s=60e-6,
        rx_spacing_wavelengths=rx_spacing,
    )


def brute_force_dft(x: np.ndarray) -> np.ndarray:
    """O(N^2) DFT oracle: X[n] = sum_k x[k] exp(-2j pi k n / N)."""
    x = np.asarray(x, dtype=np.complex128)
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def random_int_cube_data(rng: np.random.Generator, cfg: RadarConfig) -> np.ndarray:
    """Integer-valued complex samples: exactly representable on the int16 wire."""
    shape = (cfg.chirps_per_frame, cfg.num_rx, cfg.samples_per_chirp)
    return (
        rng.integers(-3000, 3000, size=shape) + 1j * rng.integers(-3000, 3000, size=shape)
    ).astype(np.complex128)
