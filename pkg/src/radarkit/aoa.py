"""Azimuth estimation on the MIMO virtual array: FFT, Bartlett, Capon, MUSIC.

The virtual array is the set of effective receiver positions created by TDM
MIMO operation: element v = t * num_rx + r sits at t * tx_spacing +
r * rx_spacing wavelengths. A plane wave from azimuth theta (positive toward
increasing element position) puts phase exp(j 2 pi position sin(theta)) on
each element, which is the steering vector all spectra scan against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RadarConfig, RadarError, validate_config
from .rangedoppler import RangeDopplerCube

DEFAULT_GRID_STEP_DEG = 0.1
_CAPON_MAX_CONDITION = 1e12


class DomainError(RadarError):
    """Angle argument outside the open (-90, 90) degree domain."""


class GeometryError(RadarError):
    """Array geometry does not support the requested operation."""


class SingularError(RadarError):
    """Covariance matrix is too ill-conditioned to invert."""


class RankError(RadarError):
    """Source count is incompatible with the array size."""


@dataclass(frozen=True)
class VirtualArray:
    """Virtual element positions in wavelengths, in virtual-index order."""

    positions_wavelengths: np.ndarray

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions_wavelengths, dtype=np.float64)
        pos.setflags(write=False)
        object.__setattr__(self, "positions_wavelengths", pos)

    def __len__(self) -> int:
        return len(self.positions_wavelengths)

    def uniform_spacing(self, tol: float = 1e-9) -> float | None:
        """Common element spacing in wavelengths, or None if non-uniform."""
        diffs = np.diff(self.positions_wavelengths)
        if len(diffs) == 0:
            return None
        d = float(diffs[0])
        if d <= 0 or not np.allclose(diffs, d, rtol=0, atol=tol):
            return None
        return d


def virtual_array(cfg: RadarConfig) -> VirtualArray:
    """Virtual array implied by the config's TX/RX line geometry."""
    validate_config(cfg)
    t = np.arange(cfg.num_tx)
    r = np.arange(cfg.num_rx)
    pos = (
        t[:, np.newaxis] * cfg.tx_spacing_wavelengths
        + r[np.newaxis, :] * cfg.rx_spacing_wavelengths
    )
    return VirtualArray(positions_wavelengths=pos.reshape(-1))


def steering_vector(theta_deg: float, array: VirtualArray) -> np.ndarray:
    """Unit-magnitude per-element response to a plane wave from ``theta_deg``."""
    if not -90.0 < theta_deg < 90.0:
        raise DomainError(f"theta must be in (-90, 90) degrees, got {theta_deg}")
    sin_theta = np.sin(np.radians(theta_deg))
    return np.exp(2j * np.pi * array.positions_wavelengths * sin_theta)


def _steering_matrix(grid_deg: np.ndarray, array: VirtualArray) -> np.ndarray:
    """(n_elements, n_angles) steering vectors for a whole grid."""
    sin_theta = np.sin(np.radians(grid_deg))
    return np.exp(
        2j * np.pi * array.positions_wavelengths[:, np.newaxis] * sin_theta[np.newaxis, :]
    )


def default_angle_grid(step_deg: float = DEFAULT_GRID_STEP_DEG) -> np.ndarray:
    """Azimuth scan grid: -90 to 90 in ``step_deg`` steps, endpoints excluded."""
    n = int(round(180.0 / step_deg))
    return -90.0 + step_deg * np.arange(1, n)


def doppler_compensate(rd_cube: RangeDopplerCube) -> RangeDopplerCube:
    """Remove the TDM firing-delay phase from each virtual element.

    Each TX fires T_c apart, so a target at centered Doppler bin b carries an
    extra phase of 2 pi b t / (N_c M) on elements fired by TX t. The rotation
    exp(-j 2 pi b t / (N_c M)) undoes it; per-cell magnitudes are untouched.
    Identity for single-TX configs.
    """
    cfg = rd_cube.config
    if cfg.num_tx == 1:
        return rd_cube
    b = rd_cube.centered_bins()
    t = np.arange(rd_cube.num_virtual_rx) // cfg.num_rx
    phase = np.exp(
        -2j * np.pi * b[:, np.newaxis] * t[np.newaxis, :]
        / (cfg.chirps_per_frame_per_tx * cfg.num_tx)
    )
    return RangeDopplerCube(
        data=rd_cube.data * phase[:, :, np.newaxis], config=cfg
    )


@dataclass(frozen=True)
class CovarianceMatrix:
    """Hermitian spatial covariance estimate plus its snapshot count."""

    matrix: np.ndarray
    n_snapshots: int

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def covariance(snapshots: np.ndarray, loading: float = 0.0) -> CovarianceMatrix:
    """Sample covariance of row-vector snapshots with optional diagonal loading.

    R = (1/n) sum_i x_i x_i^H + loading * (trace(R)/size) * I. Loading is
    relative to the mean eigenvalue, so 1e-3 guarantees invertibility without
    noticeably biasing the spectrum.
    """
    x = np.atleast_2d(np.asarray(snapshots, dtype=np.complex128))
    n = x.shape[0]
    r = x.T @ x.conj() / n
    r = 0.5 * (r + r.conj().T)
    if loading < 0:
        raise ValueError(f"loading must be >= 0, got {loading}")
    if loading > 0:
        r = r + loading * (np.trace(r).real / r.shape[0]) * np.eye(r.shape[0])
    return CovarianceMatrix(matrix=r, n_snapshots=n)


def sorted_eig(R: CovarianceMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with eigenvalues descending and deterministic signs.

    Each eigenvector is rotated so its first nonzero component is real
    positive, which makes eigenvector-based spectra reproducible across runs.
    """
    vals, vecs = np.linalg.eigh(R.matrix)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())
        if len(nz):
            col *= np.abs(col[nz[0]]) / col[nz[0]]
    return vals, vecs


def estimate_source_count(R: CovarianceMatrix) -> int:
    """Count eigenvalues above 10x the median eigenvalue (noise floor estimate)."""
    vals, _ = sorted_eig(R)
    return int(np.sum(vals > 10.0 * np.median(vals)))


@dataclass(frozen=True)
class AngleSpectrum:
    """Azimuth power spectrum on a strictly increasing grid in (-90, 90)."""

    angles_deg: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        ang = np.ascontiguousarray(self.angles_deg, dtype=np.float64)
        pwr = np.ascontiguousarray(self.power, dtype=np.float64)
        if ang.shape != pwr.shape:
            raise ValueError("angles and power must have the same length")
        ang.setflags(write=False)
        pwr.setflags(write=False)
        object.__setattr__(self, "angles_deg", ang)
        object.__setattr__(self, "power", pwr)

    def argmax_deg(self) -> float:
        return float(self.angles_deg[int(np.argmax(self.power))])


def write_angle_spectrum_csv(spectrum: AngleSpectrum, path) -> None:
    """Two-column CSV: angle_deg, power."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("angle_deg,power\n")
        for a, p in zip(spectrum.angles_deg, spectrum.power):
            f.write(f"{a:.6g},{p:.6g}\n")


def aoa_fft(snapshot: np.ndarray, array: VirtualArray, n_bins: int = 64) -> AngleSpectrum:
    """Angle spectrum by zero-padded FFT across a uniform array's elements.

    Bin k (center-shifted) maps to sin(theta) = k / (n_bins * d) for element
    spacing d in wavelengths; bins landing outside |sin| < 1 are discarded.
    """
    x = np.asarray(snapshot, dtype=np.complex128).reshape(-1)
    d = array.uniform_spacing()
    if d is None:
        raise GeometryError("aoa_fft requires a uniformly spaced array")
    if len(x) != len(array):
        raise GeometryError(
            f"snapshot has {len(x)} elements, array has {len(array)}"
        )
    if n_bins < len(x):
        raise ValueError(f"n_bins {n_bins} < array length {len(x)}")
    spectrum = np.fft.fftshift(np.fft.fft(x, n=n_bins))
    centered = np.arange(n_bins) - n_bins // 2
    sin_theta = centered / (n_bins * d)
    visible = np.abs(sin_theta) < 1.0
    angles = np.degrees(np.arcsin(sin_theta[visible]))
    return AngleSpectrum(angles_deg=angles, power=np.abs(spectrum[visible]) ** 2)


def bartlett(
    R: CovarianceMatrix, array: VirtualArray, grid_deg: np.ndarray | None = None
) -> AngleSpectrum:
    """Conventional beamformer spectrum P = a^H R a / (a^H a)."""
    grid = default_angle_grid() if grid_deg is None else np.asarray(grid_deg)
    a = _steering_matrix(grid, array)
    p = np.einsum("ig,ij,jg->g", a.conj(), R.matrix, a, optimize=True).real
    return AngleSpectrum(angles_deg=grid, power=np.maximum(p / len(array), 0.0))


def capon(
    R: CovarianceMatrix, array: VirtualArray, grid_deg: np.ndarray | None = None
) -> AngleSpectrum:
    """Adaptive (minimum-variance) spectrum P = 1 / (a^H R^-1 a).

    R must be invertible; load the covariance estimate first when snapshots
    are scarce (see ``covariance``).
    """
    if np.linalg.cond(R.matrix) > _CAPON_MAX_CONDITION:
        raise SingularError(
            f"covariance condition number exceeds {_CAPON_MAX_CONDITION:.0e}; "
            "increase diagonal loading"
        )
    grid = default_angle_grid() if grid_deg is None else np.asarray(grid_deg)
    a = _steering_matrix(grid, array)
    denom = np.einsum("ig,ig->g", a.conj(), np.linalg.solve(R.matrix, a)).real
    return AngleSpectrum(
        angles_deg=grid, power=1.0 / np.maximum(denom, np.finfo(np.float64).tiny)
    )


def music(
    R: CovarianceMatrix,
    array: VirtualArray,
    n_sources: int,
    grid_deg: np.ndarray | None = None,
) -> AngleSpectrum:
    """Noise-subspace pseudo-spectrum P = 1 / ||E_n^H a||^2.

    E_n spans the eigenvectors of the size - n_sources smallest eigenvalues.
    """
    if not 1 <= n_sources < R.size:
        raise RankError(
            f"n_sources must be in [1, {R.size - 1}], got {n_sources}"
        )
    grid = default_angle_grid() if grid_deg is None else np.asarray(grid_deg)
    _, vecs = sorted_eig(R)
    noise_basis = vecs[:, n_sources:]
    a = _steering_matrix(grid, array)
    proj = noise_basis.conj().T @ a
    denom = np.sum(np.abs(proj) ** 2, axis=0)
    return AngleSpectrum(
        angles_deg=grid, power=1.0 / np.maximum(denom, np.finfo(np.float64).tiny)
    )


def peak_angles(
    spectrum: AngleSpectrum, max_peaks: int = 1
) -> list[tuple[float, float]]:
    """Strict interior local maxima as (angle_deg, power), strongest first."""
    if max_peaks < 1:
        raise ValueError(f"max_peaks must be >= 1, got {max_peaks}")
    p = spectrum.power
    if len(p) < 3:
        return []
    interior = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])) + 1
    order = interior[np.argsort(p[interior])[::-1]]
    return [
        (float(spectrum.angles_deg[i]), float(p[i])) for i in order[:max_peaks]
    ]
