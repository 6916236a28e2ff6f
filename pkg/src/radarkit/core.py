"""Radar session configuration, derived parameters, and the per-frame data cube.

Everything downstream (simulator, capture ingest, range-Doppler processing,
angle estimation, detection) shares the types defined here. All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact


class RadarError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RadarError):
    """A radar configuration constraint is violated; message names the field."""


@dataclass(frozen=True)
class RadarConfig:
    """Full chirp/frame/antenna parameterization of one capture session.

    Attributes:
        num_tx: physical transmit antennas (M).
        num_rx: physical receive antennas (N).
        chirps_per_frame_per_tx: chirps each TX fires per frame (N_c).
        samples_per_chirp: complex baseband samples per chirp (N_s).
        sample_rate_hz: ADC complex sample rate (f_s).
        chirp_slope_hz_per_s: chirp frequency slope (S).
        start_freq_hz: carrier frequency at chirp start (f_c).
        chirp_period_s: one TX firing, ramp plus idle (T_c).
        rx_spacing_wavelengths: physical RX line-array spacing, in wavelengths.
        tx_spacing_wavelengths: TX spacing in wavelengths. Defaults to
            num_rx * rx_spacing so TDM yields a filled M*N virtual line.
    """

    num_tx: int
    num_rx: int
    chirps_per_frame_per_tx: int
    samples_per_chirp: int
    sample_rate_hz: float
    chirp_slope_hz_per_s: float
    start_freq_hz: float
    chirp_period_s: float
    rx_spacing_wavelengths: float = 0.5
    tx_spacing_wavelengths: float | None = None

    def __post_init__(self):
        if self.tx_spacing_wavelengths is None:
            object.__setattr__(
                self, "tx_spacing_wavelengths",
                self.num_rx * self.rx_spacing_wavelengths,
            )

    @property
    def chirps_per_frame(self) -> int:
        """Total chirps per frame across all transmitters (N_c * M)."""
        return self.chirps_per_frame_per_tx * self.num_tx


def validate_config(cfg: RadarConfig) -> RadarConfig:
    """Check every configuration invariant; return the config unchanged.

    Raises:
        ConfigError: naming the first violated constraint.
    """
    counts = [
        ("num_tx", cfg.num_tx, 1),
        ("num_rx", cfg.num_rx, 1),
        ("chirps_per_frame_per_tx", cfg.chirps_per_frame_per_tx, 1),
        ("samples_per_chirp", cfg.samples_per_chirp, 2),
    ]
    for name, value, minimum in counts:
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        if value < minimum:
            raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    positives = [
        ("sample_rate_hz", cfg.sample_rate_hz),
        ("chirp_slope_hz_per_s", cfg.chirp_slope_hz_per_s),
        ("start_freq_hz", cfg.start_freq_hz),
        ("chirp_period_s", cfg.chirp_period_s),
        ("rx_spacing_wavelengths", cfg.rx_spacing_wavelengths),
        ("tx_spacing_wavelengths", cfg.tx_spacing_wavelengths),
    ]
    for name, value in positives:
        if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value)):
            raise ConfigError(f"{name} must be a finite number, got {value!r}")
        if value <= 0:
            raise ConfigError(f"{name} must be > 0, got {value}")
    # Sampling must not outrun the ramp: the swept bandwidth covered while
    # sampling (S * N_s / f_s) cannot exceed what the chirp period allows.
    sampled_bw = cfg.chirp_slope_hz_per_s * cfg.samples_per_chirp / cfg.sample_rate_hz
    ramp_bw = cfg.chirp_slope_hz_per_s * cfg.chirp_period_s
    if sampled_bw > ramp_bw:
        raise ConfigError(
            "samples_per_chirp / sample_rate_hz exceeds chirp_period_s: "
            f"sampling window {cfg.samples_per_chirp / cfg.sample_rate_hz:.3e} s "
            f"does not fit the {cfg.chirp_period_s:.3e} s chirp"
        )
    return cfg


@dataclass(frozen=True)
class DerivedParams:
    """Resolutions and ambiguity limits implied by a RadarConfig."""

    wavelength_m: float
    range_resolution_m: float
    max_range_m: float
    velocity_resolution_m_s: float
    max_unambiguous_velocity_m_s: float
    angle_resolution_deg_broadside: float
    num_virtual_rx: int


def derived_params(cfg: RadarConfig) -> DerivedParams:
    """Compute the standard complex-baseband FMCW relations for ``cfg``.

    With c the exact speed of light, M transmitters, N receivers, N_c chirps
    per TX, N_s samples, sample rate f_s, slope S, carrier f_c and chirp
    period T_c:

        wavelength            = c / f_c
        range resolution      = c * f_s / (2 * S * N_s)
        max range             = c * f_s / (2 * S)
        velocity resolution   = wavelength / (2 * N_c * M * T_c)
        max unambig. velocity = wavelength / (4 * M * T_c)

    TDM-MIMO divides the unambiguous velocity by M because each TX repeats
    only every M * T_c. Broadside angle resolution is the beamwidth of the
    M*N-element virtual aperture, 1 / (M * N * rx_spacing) radians.
    """
    validate_config(cfg)
    lam = SPEED_OF_LIGHT / cfg.start_freq_hz
    n_virtual = cfg.num_tx * cfg.num_rx
    tx_repeat_s = cfg.num_tx * cfg.chirp_period_s
    return DerivedParams(
        wavelength_m=lam,
        range_resolution_m=SPEED_OF_LIGHT * cfg.sample_rate_hz
        / (2.0 * cfg.chirp_slope_hz_per_s * cfg.samples_per_chirp),
        max_range_m=SPEED_OF_LIGHT * cfg.sample_rate_hz
        / (2.0 * cfg.chirp_slope_hz_per_s),
        velocity_resolution_m_s=lam / (2.0 * cfg.chirps_per_frame_per_tx * tx_repeat_s),
        max_unambiguous_velocity_m_s=lam / (4.0 * cfg.num_tx * cfg.chirp_period_s),
        angle_resolution_deg_broadside=math.degrees(
            1.0 / (n_virtual * cfg.rx_spacing_wavelengths)
        ),
        num_virtual_rx=n_virtual,
    )


def bin_to_range(bin_index: int, cfg: RadarConfig) -> float:
    """Convert a range-FFT bin index to meters (bin * range resolution)."""
    if not 0 <= bin_index < cfg.samples_per_chirp:
        raise IndexError(
            f"range bin {bin_index} outside [0, {cfg.samples_per_chirp})"
        )
    return bin_index * derived_params(cfg).range_resolution_m


def bin_to_velocity(centered_bin: int, cfg: RadarConfig) -> float:
    """Convert a centered Doppler bin to m/s (centered_bin * velocity resolution).

    Centered bin 0 is zero velocity; valid bins are -N_c/2 .. N_c/2 - 1.
    """
    half = cfg.chirps_per_frame_per_tx // 2
    if not -half <= centered_bin < cfg.chirps_per_frame_per_tx - half:
        raise IndexError(
            f"doppler bin {centered_bin} outside [{-half}, "
            f"{cfg.chirps_per_frame_per_tx - half})"
        )
    return centered_bin * derived_params(cfg).velocity_resolution_m_s


@dataclass(frozen=True, eq=False)
class DataCube:
    """One frame of complex baseband samples, shape (chirp, rx, sample).

    The chirp axis is in transmission order (TX0 chirp0, TX1 chirp0, ...,
    TX0 chirp1, ...): global chirp q was fired by TX q mod M. The sample
    array is validated against the config and frozen read-only.
    """

    data: np.ndarray
    frame_index: int
    config: RadarConfig = field(repr=False)

    def __post_init__(self):
        validate_config(self.config)
        if self.frame_index < 0:
            raise ConfigError(f"frame_index must be >= 0, got {self.frame_index}")
        expected = (
            self.config.chirps_per_frame,
            self.config.num_rx,
            self.config.samples_per_chirp,
        )
        arr = np.asarray(self.data)
        if arr.shape != expected:
            raise ConfigError(
                f"data shape {arr.shape} does not match config shape {expected}"
            )
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
        if not np.isfinite(arr.view(np.float64)).all():
            raise ConfigError("data contains NaN or Inf samples")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape
