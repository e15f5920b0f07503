"""Surface profiles: random rough surfaces, test profiles, spline models.

Two kinds of profile feed the forward solver. :class:`SurfaceModel` is the
spline expansion the inversion updates; :class:`GriddedSurface` holds a
densely sampled reference surface and interpolates it with a clamped cubic.
Both are turned into a midpoint mesh by :func:`sample_surface`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .numerics import SeededRng


@dataclass(frozen=True)
class RandomSurfaceParams:
    """Parameters of a tapered Gaussian random surface (SI units)."""

    corr_length: float
    height_std: float
    domain_length: float = 16.0
    grid_count: int = 4096
    taper_width: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if not self.corr_length > 0:
            raise ValueError("corr_length must be positive")
        if not self.height_std >= 0:
            raise ValueError("height_std must be non-negative")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")
        if not 0 <= self.taper_width < self.domain_length / 2:
            raise ValueError("taper_width must lie in [0, L/2)")
        n = self.grid_count
        if n < 256 or n & (n - 1):
            raise ValueError("grid_count must be a power of two >= 256")


@dataclass(frozen=True)
class GriddedSurface:
    """Height samples on a uniform grid spanning [-L/2, L/2] (endpoints included)."""

    x: np.ndarray
    heights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        h = np.asarray(self.heights, dtype=float)
        if x.ndim != 1 or x.shape != h.shape or x.size < 4:
            raise ValueError("x and heights must be 1-D arrays of equal length >= 4")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "heights", h)
        # clamped ends: tapered surfaces are flat at the domain edges
        object.__setattr__(self, "_interp", CubicSpline(x, h, bc_type="clamped"))

    @property
    def domain_length(self) -> float:
        return float(self.x[-1] - self.x[0])

    def __call__(self, x):
        return self._interp(x)

    def slope(self, x):
        return self._interp(x, 1)

    def to_csv(self, path):
        write_profile_csv(path, self.x, self.heights)

    @classmethod
    def from_csv(cls, path) -> "GriddedSurface":
        x, h = read_profile_csv(path)
        return cls(x, h)


def tukey_taper(x, domain_length, taper_width):
    """Cosine ramp of physical width ``taper_width`` at both ends of the domain."""
    x = np.asarray(x, dtype=float)
    if taper_width <= 0:
        return np.ones_like(x)
    d = np.clip(np.minimum(x + domain_length / 2, domain_length / 2 - x), 0.0, None)
    return np.where(d < taper_width, 0.5 * (1 - np.cos(np.pi * d / taper_width)), 1.0)


def gaussian_spectrum(kx, corr_length, height_std):
    """Gaussian roughness spectrum W(k) whose autocorrelation is h^2 exp(-x^2/l^2)."""
    return (height_std**2 * corr_length / (2 * math.sqrt(math.pi))) * np.exp(
        -(kx**2) * corr_length**2 / 4
    )


def generate_gaussian_surface(params: RandomSurfaceParams) -> GriddedSurface:
    """Spectral synthesis of a tapered, zero-mean Gaussian random surface.

    White complex Gaussian amplitudes are shaped by the Gaussian spectrum,
    made Hermitian and inverse transformed. The periodic sample at ``+L/2``
    is appended so the grid covers the closed interval.
    """
    n = params.grid_count
    L = params.domain_length
    dx = L / n
    x = -L / 2 + dx * np.arange(n + 1)
    if params.height_std == 0:
        return GriddedSurface(x, np.zeros(n + 1))

    rng = SeededRng(params.seed)
    kx = 2 * np.pi * np.fft.rfftfreq(n, d=dx)
    amp = np.sqrt(2 * np.pi * L * gaussian_spectrum(kx, params.corr_length, params.height_std))
    re = rng.gaussian(kx.size)
    im = rng.gaussian(kx.size)
    spec = amp * (re + 1j * im) / np.sqrt(2)
    spec[0] = amp[0] * re[0]
    spec[-1] = amp[-1] * re[-1]
    # irfft applies 1/n; the synthesis sum is (1/L) sum F(k) exp(ikx)
    heights = np.fft.irfft(spec, n) * n / L
    heights = np.append(heights, heights[0])
    heights = heights - heights.mean()
    heights *= tukey_taper(x, L, params.taper_width)
    return GriddedSurface(x, heights)


def triangular_profile(x):
    """Piecewise-linear test profile with two triangular bumps (metres)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out = np.where((x >= -6) & (x <= -3), x + 4, out)
    out = np.where((x >= 0) & (x <= 2), x, out)
    out = np.where((x > 2) & (x < 4), 4 - x, out)
    return out[()] if out.ndim == 0 else out


def triangular_slope(x):
    """Piecewise derivative of :func:`triangular_profile` (jumps ignored)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out = np.where((x >= -6) & (x <= -3), 1.0, out)
    out = np.where((x >= 0) & (x <= 2), 1.0, out)
    out = np.where((x > 2) & (x < 4), -1.0, out)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class AnalyticSurface:
    """Profile given by closed-form height and slope functions."""

    height_fn: object
    slope_fn: object
    domain_length: float = 16.0

    def __call__(self, x):
        return self.height_fn(x)

    def slope(self, x):
        return self.slope_fn(x)

    def to_gridded(self, grid_count=4096) -> "GriddedSurface":
        x = np.linspace(-self.domain_length / 2, self.domain_length / 2, grid_count + 1)
        return GriddedSurface(x, self.height_fn(x))


def triangular_surface(domain_length=16.0) -> AnalyticSurface:
    return AnalyticSurface(triangular_profile, triangular_slope, domain_length)


def bspline_kernel(t, order):
    """Centered cardinal B-spline of the given order, as a truncated-power sum."""
    t = np.asarray(t, dtype=float)
    half = (order + 1) / 2
    out = np.zeros_like(t)
    inside = np.abs(t) < half
    # even kernel: sum from the left edge to avoid cancellation near the right one
    ti = half - np.abs(t[inside])
    acc = np.zeros_like(ti)
    for q in range(order + 2):
        acc += (-1) ** q * math.comb(order + 1, q) * np.clip(ti - q, 0.0, None) ** order
    out[inside] = acc / math.factorial(order)
    return out


def bspline_kernel_derivative(t, order):
    """d/dt of :func:`bspline_kernel` (a spline of degree ``order - 1``)."""
    t = np.asarray(t, dtype=float)
    half = (order + 1) / 2
    out = np.zeros_like(t)
    inside = np.abs(t) < half
    ti = half - np.abs(t[inside])
    acc = np.zeros_like(ti)
    for q in range(order + 2):
        d = ti - q
        if order == 1:
            term = (d >= 0).astype(float)
        else:
            term = np.clip(d, 0.0, None) ** (order - 1)
        acc += (-1) ** q * math.comb(order + 1, q) * term
    out[inside] = -np.sign(t[inside]) * acc / math.factorial(order - 1)
    return out


@dataclass(frozen=True)
class SplineBasis:
    """``count`` shifted B-splines of a given order laid out inside [-L/2, L/2].

    The scale is ``L / (count + 5)`` and the i-th centre (1-based) sits at
    ``(i + 2) * scale - L/2``, so every support lies inside the domain.
    """

    count: int
    order: int = 3
    domain_length: float = 16.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("spline count must be >= 1")
        if self.order < 1:
            raise ValueError("spline order must be >= 1")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")

    @property
    def scale(self) -> float:
        return self.domain_length / (self.count + 5)

    @property
    def centers(self) -> np.ndarray:
        i = np.arange(1, self.count + 1)
        return (i + 2) * self.scale - self.domain_length / 2

    @property
    def half_support(self) -> float:
        return self.scale * (self.order + 1) / 2

    def eval(self, i, x):
        """phi_i(x) for a 1-based basis index ``i``."""
        if not 1 <= i <= self.count:
            raise IndexError(f"basis index {i} out of range 1..{self.count}")
        t = (np.asarray(x, dtype=float) - self.centers[i - 1]) / self.scale
        return bspline_kernel(t, self.order)

    def design_matrix(self, x) -> np.ndarray:
        """Matrix ``Phi[k, i] = phi_i(x_k)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = (x[:, None] - self.centers[None, :]) / self.scale
        return bspline_kernel(t, self.order)

    def derivative_matrix(self, x) -> np.ndarray:
        """Matrix of basis derivatives ``d phi_i / dx`` at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = (x[:, None] - self.centers[None, :]) / self.scale
        return bspline_kernel_derivative(t, self.order) / self.scale

    def to_dict(self):
        return {"count": self.count, "order": self.order, "domain_length": self.domain_length}


def spline_eval(basis: SplineBasis, i: int, x):
    return basis.eval(i, x)


@dataclass(frozen=True)
class SurfaceModel:
    """Surface height as a linear combination of spline basis functions."""

    basis: SplineBasis
    coeffs: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.zeros(self.basis.count) if self.coeffs is None else np.asarray(self.coeffs, float)
        if c.shape != (self.basis.count,):
            raise ValueError(f"expected {self.basis.count} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def domain_length(self) -> float:
        return self.basis.domain_length

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.basis.design_matrix(x.ravel()) @ self.coeffs
        return out.reshape(x.shape)[()] if x.ndim == 0 else out.reshape(x.shape)

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        out = self.basis.derivative_matrix(x.ravel()) @ self.coeffs
        return out.reshape(x.shape)[()] if x.ndim == 0 else out.reshape(x.shape)


def surface_eval(model: SurfaceModel, x):
    return model(x)


def surface_slope(model: SurfaceModel, x):
    return model.slope(x)


@dataclass(frozen=True)
class SampledSurface:
    """Midpoint discretization of a profile into equal-width segments."""

    x: np.ndarray
    heights: np.ndarray
    slopes: np.ndarray
    width: float

    @property
    def count(self) -> int:
        return self.x.size

    @property
    def arc_lengths(self) -> np.ndarray:
        return self.width * np.sqrt(1 + self.slopes**2)

    @property
    def domain_length(self) -> float:
        return self.width * self.count


def sample_surface(profile, width: float, domain_length: float | None = None) -> SampledSurface:
    """Discretize ``profile`` into ``round(L / width)`` equal segments.

    ``profile`` is any object with ``__call__(x)`` and ``slope(x)`` (a
    :class:`SurfaceModel` or :class:`GriddedSurface`). The width is
    recomputed as ``L / N`` so the segments tile the domain exactly.
    """
    L = profile.domain_length if domain_length is None else domain_length
    if not width > 0:
        raise ValueError("segment width must be positive")
    if width >= L:
        raise ValueError(f"segment width {width} must be smaller than the domain length {L}")
    n = max(int(round(L / width)), 1)
    w = L / n
    x = -L / 2 + (np.arange(n) + 0.5) * w
    return SampledSurface(
        x=x,
        heights=np.asarray(profile(x), dtype=float),
        slopes=np.asarray(profile.slope(x), dtype=float),
        width=w,
    )


def fit_spline(x, samples, basis: SplineBasis) -> SurfaceModel:
    """Least-squares spline coefficients for gridded samples."""
    x = np.asarray(x, dtype=float)
    samples = np.asarray(samples, dtype=float)
    if x.size < basis.count:
        raise ValueError("need at least as many samples as basis functions")
    A = basis.design_matrix(x)
    coeffs, _, rank, _ = np.linalg.lstsq(A, samples, rcond=None)
    if rank < basis.count:
        raise np.linalg.LinAlgError(f"rank-deficient spline design (rank {rank} < {basis.count})")
    return SurfaceModel(basis, coeffs)


def write_profile_csv(path, x, heights):
    """Write a two-column ``x,s`` CSV with round-trip precision."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "s"])
        for xi, si in zip(np.asarray(x, float), np.asarray(heights, float)):
            writer.writerow([repr(float(xi)), repr(float(si))])


def read_profile_csv(path):
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
