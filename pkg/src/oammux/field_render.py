"""Transverse-field synthesis and inspection on a square grid.

Modes carry the spiral phase exp(i ell phi) with the single-ring radial
envelope (r sqrt(2)/w0)^|ell| exp(-r^2/w0^2); all indices share one waist.
Intensities rendered from density matrices preserve the distinction
between coherent superpositions (azimuthal petals) and incoherent
mixtures (uniform rings), which :func:`angular_lobe_count` quantifies.

Array conventions: row-major, row 0 is the top of the image (+y), and the
grid origin sits between the four central pixels.  Azimuth is measured
counterclockwise from +x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .oam_state import DensityMatrix

AZIMUTHAL_BINS = 360
SMOOTHING_BINS = 5
LOBE_PROMINENCE_FRACTION = 0.05


class EmptyBandError(ValueError):
    """The requested radius band contains no grid pixels."""


@dataclass(frozen=True)
class GridSpec:
    """Square sampling grid: n pixels per side over a half-width of
    ``extent`` beam waists."""

    n: int = 512
    extent: float = 8.0
    waist: float = 1.0

    def __post_init__(self) -> None:
        if self.n % 2 != 0 or self.n < 64:
            raise ValueError(f"grid side must be an even integer >= 64, got {self.n}")
        if not (math.isfinite(self.extent) and self.extent > 0.0):
            raise ValueError(f"extent must be positive, got {self.extent}")
        if not (math.isfinite(self.waist) and self.waist > 0.0):
            raise ValueError(f"waist must be positive, got {self.waist}")

    @property
    def pixel_size(self) -> float:
        return 2.0 * self.extent * self.waist / self.n

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) pixel-center coordinates; y runs top to bottom like rows."""
        pix = self.pixel_size
        j = np.arange(self.n)
        x = (j - self.n / 2 + 0.5) * pix
        y = (self.n / 2 - j - 0.5) * pix
        return x, y

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.axes()
        return np.meshgrid(x, y)

    def radius_mesh(self) -> np.ndarray:
        xx, yy = self.meshes()
        return np.hypot(xx, yy)


@dataclass(frozen=True, eq=False)
class GridField:
    """Complex field sampled on a grid (read-only values)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"field shape {v.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(v.view(float))):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.pixel_size**2)


def lg_mode(ell: int, grid: GridSpec) -> GridField:
    """Single-ring mode of index ``ell``, unit-normalized on the grid.

    ell = 0 is a plain Gaussian; |ell| > 0 peaks on a ring of radius
    w0 sqrt(|ell|/2).
    """
    xx, yy = grid.meshes()
    r = np.hypot(xx, yy)
    phi = np.arctan2(yy, xx)
    w0 = grid.waist
    amp = (r * math.sqrt(2.0) / w0) ** abs(ell) * np.exp(-(r**2) / w0**2)
    field = amp * np.exp(1j * ell * phi)
    norm = math.sqrt(float(np.sum(np.abs(field) ** 2)) * grid.pixel_size**2)
    return GridField(grid, field / norm)


def render_state(rho: DensityMatrix, grid: GridSpec) -> np.ndarray:
    """Intensity image sum_ij rho_ij u_i(r) conj(u_j(r)), clipped at 0.

    The integrated (pixel-area-weighted) intensity equals Tr(rho) up to
    the residual overlap between grid modes.
    """
    modes = np.stack([lg_mode(ell, grid).values for ell in rho.basis])
    intensity = np.einsum("ij,iyx,jyx->yx", rho.matrix, modes, modes.conj()).real
    return np.maximum(intensity, 0.0)


def port_power(intensity: np.ndarray, grid: GridSpec) -> float:
    """Pixel-area-weighted sum of an intensity image."""
    intensity = np.asarray(intensity, dtype=float)
    return float(np.sum(intensity) * grid.pixel_size**2)


def azimuthal_profile(
    intensity: np.ndarray, grid: GridSpec, radius_band: tuple[float, float]
) -> np.ndarray:
    """Intensity integrated over a radius band into 360 angular bins.

    Raises:
        EmptyBandError: the band selects no pixels on the grid.
    """
    intensity = np.asarray(intensity, dtype=float)
    if intensity.shape != (grid.n, grid.n):
        raise ValueError(f"intensity shape {intensity.shape} does not match grid n={grid.n}")
    if np.min(intensity) < 0.0:
        raise ValueError("intensity must be nonnegative")
    r_lo, r_hi = (float(r) for r in radius_band)
    if not (0.0 <= r_lo < r_hi):
        raise EmptyBandError(f"radius band must satisfy 0 <= r_lo < r_hi, got {radius_band}")
    xx, yy = grid.meshes()
    rr = np.hypot(xx, yy)
    mask = (rr >= r_lo) & (rr <= r_hi)
    if not np.any(mask):
        raise EmptyBandError(f"radius band {radius_band} selects no pixels")
    phi = np.arctan2(yy, xx)[mask] % (2.0 * math.pi)
    bins = np.minimum(
        (phi / (2.0 * math.pi) * AZIMUTHAL_BINS).astype(int), AZIMUTHAL_BINS - 1
    )
    weights = intensity[mask] * grid.pixel_size**2
    return np.bincount(bins, weights=weights, minlength=AZIMUTHAL_BINS)


def angular_lobe_count(
    intensity: np.ndarray, grid: GridSpec, radius_band: tuple[float, float]
) -> int:
    """Number of azimuthal lobes of an intensity image within a radius band.

    The band is integrated into 360 angular bins, smoothed with a 5-bin
    circular moving average, and strict local maxima are counted; maxima
    rising less than 5% of the profile peak above their surroundings are
    ignored, so a structureless ring counts as 0.
    """
    profile = azimuthal_profile(intensity, grid, radius_band)
    smoothed = uniform_filter1d(profile, size=SMOOTHING_BINS, mode="wrap")
    peak = float(np.max(smoothed))
    if peak <= 0.0:
        return 0
    tripled = np.concatenate([smoothed, smoothed, smoothed])
    maxima, _ = find_peaks(tripled, prominence=LOBE_PROMINENCE_FRACTION * peak)
    in_middle = (maxima >= AZIMUTHAL_BINS) & (maxima < 2 * AZIMUTHAL_BINS)
    return int(np.count_nonzero(in_middle))


def pgm_bytes(intensity: np.ndarray) -> bytes:
    """Binary PGM encoding: header ``P5\\n{n} {n}\\n255\\n`` then one byte per
    pixel, row-major from the top row, scaled so the image maximum maps to
    255.  An all-zero image yields all-zero bytes."""
    intensity = np.asarray(intensity, dtype=float)
    if intensity.ndim != 2 or intensity.shape[0] != intensity.shape[1]:
        raise ValueError(f"intensity must be a square 2D array, got shape {intensity.shape}")
    n = intensity.shape[0]
    peak = float(np.max(intensity))
    if peak <= 0.0:
        data = np.zeros((n, n), dtype=np.uint8)
    else:
        data = np.clip(np.rint(255.0 * intensity / peak), 0, 255).astype(np.uint8)
    header = f"P5\n{n} {n}\n255\n".encode("ascii")
    return header + data.tobytes()


def write_pgm(intensity: np.ndarray, path) -> None:
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(intensity))


def read_pgm(data: bytes) -> np.ndarray:
    """Parse bytes produced by :func:`pgm_bytes` back into a float array."""
    if not data.startswith(b"P5\n"):
        raise ValueError("not a binary PGM produced by this module")
    rest = data[3:]
    dims, _, rest = rest.partition(b"\n")
    maxval, _, pixels = rest.partition(b"\n")
    width, height = (int(tok) for tok in dims.split())
    if maxval != b"255":
        raise ValueError(f"unsupported max value {maxval!r}")
    if len(pixels) != width * height:
        raise ValueError("pixel payload size does not match header")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width).astype(float)
