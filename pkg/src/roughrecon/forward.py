"""Method-of-moments forward solver for a penetrable rough interface.

Time convention ``exp(-i omega t)``. The unit normal points from the lower
medium into the upper one, ``n = (-s', 1) / sqrt(1 + s'^2)``. Unknowns are
pulse-basis samples of the total field ``u`` and its normal derivative
``v`` at segment midpoints; the impedance matrix couples them through the
Green function ``G = (i/4) H0(kR)`` and its normal derivative ``K``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import EULER_GAMMA, LUFactorization, hankel1, hankel1_pair
from .surface import SampledSurface

logger = logging.getLogger(__name__)

C0 = 299_792_458.0
EPS0 = 8.8541878128e-12
MU0 = 1.25663706212e-6

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Medium:
    eps_r: float = 1.0
    mu_r: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.eps_r < 1:
            raise ValueError("eps_r must be >= 1")
        if not self.mu_r > 0:
            raise ValueError("mu_r must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def to_dict(self):
        return {"eps_r": self.eps_r, "mu_r": self.mu_r, "sigma": self.sigma}


@dataclass(frozen=True)
class IncidentWave:
    """Tapered plane wave: incidence angle (rad) and taper width ``g`` (m)."""

    theta: float = 0.0
    taper: float = 8.0

    def __post_init__(self):
        if not abs(self.theta) < math.pi / 2:
            raise ValueError("|theta| must be below pi/2")
        if not self.taper > 0:
            raise ValueError("taper width must be positive")

    def to_dict(self):
        return {"theta": self.theta, "taper": self.taper}


@dataclass(frozen=True)
class ReceiverArray:
    """Receivers at ``(x_j, height)``."""

    x: np.ndarray
    height: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1 or x.size == 0:
            raise ValueError("receiver abscissas must be a non-empty 1-D array")
        if np.any(np.diff(x) <= 0):
            raise ValueError("receiver abscissas must be strictly increasing")
        object.__setattr__(self, "x", x)

    @property
    def count(self) -> int:
        return self.x.size

    @classmethod
    def from_grid(cls, start, stop, step, height, include_endpoint=True) -> "ReceiverArray":
        """Uniform array ``start, start + step, ...`` up to ``stop``."""
        if not step > 0:
            raise ValueError("receiver spacing must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        x = start + step * np.arange(count)
        if not include_endpoint and count > 1 and math.isclose(x[-1], stop, abs_tol=1e-9 * step):
            x = x[:-1]
        return cls(x, height)


@dataclass
class ForwardSolution:
    """Surface field ``u`` and normal derivative ``v`` at the segment midpoints.

    ``system`` optionally keeps the factored impedance matrix and kernel
    tables, which the linearized (sensitivity) solve reuses.
    """

    u: np.ndarray
    v: np.ndarray
    frequency: float
    surface: SampledSurface
    k1: complex
    k2: complex
    residual: float = 0.0
    system: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.u.shape != (self.surface.count,) or self.v.shape != (self.surface.count,):
            raise ValueError("field vectors must match the surface segment count")


@dataclass
class ImpedanceSystem:
    """Assembled impedance matrix plus the tables it was built from."""

    Z: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    R: np.ndarray
    hankels: dict
    factorization: LUFactorization | None = None


def wavenumber(medium: Medium, frequency: float) -> complex:
    """Complex wavenumber with ``Re k > 0`` and ``Im k >= 0``."""
    if not frequency > 0:
        raise ValueError("frequency must be positive")
    omega = 2 * math.pi * frequency
    eps_c = EPS0 * medium.eps_r + 1j * medium.sigma / omega
    k = omega * np.sqrt(MU0 * medium.mu_r * eps_c + 0j)
    return complex(k)


def incident_field(x, y, wave: IncidentWave, k1) -> np.ndarray:
    """Thorsos-tapered plane wave evaluated at points ``(x, y)``."""
    k1 = complex(k1)
    if k1.imag != 0:
        raise ValueError("incident medium must be lossless (real k1)")
    k1 = k1.real
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    st, ct = math.sin(wave.theta), math.cos(wave.theta)
    kr = x * st - y * ct
    t = (x + y * math.tan(wave.theta)) / wave.taper
    xi = (2 * t**2 - 1) / (k1 * wave.taper * ct) ** 2
    return np.exp(1j * k1 * kr * (1 + xi) - t**2)


def incident_field_dy(x, y, wave: IncidentWave, k1) -> np.ndarray:
    """Partial derivative of :func:`incident_field` with respect to ``y``."""
    k1 = complex(k1).real
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    st, ct, tt = math.sin(wave.theta), math.cos(wave.theta), math.tan(wave.theta)
    kr = x * st - y * ct
    t = (x + y * tt) / wave.taper
    c = 1 / (k1 * wave.taper * ct) ** 2
    xi = (2 * t**2 - 1) * c
    dxi = 4 * t * (tt / wave.taper) * c
    dexp = 1j * k1 * (-ct * (1 + xi) + kr * dxi) - 2 * t * tt / wave.taper
    return dexp * incident_field(x, y, wave, k1)


def green_G(r, rp, k):
    """Free-space Green function ``(i/4) H0(k |r - r'|)``."""
    R = np.hypot(np.asarray(r[0]) - rp[0], np.asarray(r[1]) - rp[1])
    if np.any(R == 0):
        raise ValueError("green_G is singular at r = r'")
    return 0.25j * hankel1(0, k * R)


def green_K(r, rp, slope, k):
    """Normal derivative of ``G`` at the source point ``r'`` on a surface of given slope."""
    dx = np.asarray(r[0]) - rp[0]
    dy = np.asarray(r[1]) - rp[1]
    R = np.hypot(dx, dy)
    if np.any(R == 0):
        raise ValueError("green_K is singular at r = r'")
    norm = np.sqrt(1 + np.asarray(slope) ** 2)
    return 0.25j * k * hankel1(1, k * R) * (dy - slope * dx) / (R * norm)


def _pair_geometry(surf: SampledSurface):
    # dx[j, i] = x_j - x_i, field point j, source point i
    dx = surf.x[:, None] - surf.x[None, :]
    dy = surf.heights[:, None] - surf.heights[None, :]
    return dx, dy


def _symmetric_hankels(R, k):
    """H0(kR), H1(kR) on the off-diagonal of a symmetric distance matrix."""
    n = R.shape[0]
    iu = np.triu_indices(n, 1)
    h0u, h1u = hankel1_pair(k * R[iu])
    H0 = np.zeros((n, n), dtype=complex)
    H1 = np.zeros((n, n), dtype=complex)
    H0[iu] = h0u
    H1[iu] = h1u
    H0 += H0.T
    H1 += H1.T
    return H0, H1


def self_term_G(k, arc):
    """Segment integral of G over its own arc, small-argument Hankel form."""
    return arc * (0.25j - (1 / (2 * math.pi)) * ((EULER_GAMMA - 1) + np.log(k * arc / 4)))


def assemble_impedance(surf: SampledSurface, k1, k2) -> np.ndarray:
    """Dense ``2N x 2N`` impedance matrix with blocks [[Z11, Z12], [Z21, Z22]]."""
    return _assemble(surf, k1, k2).Z


def _assemble(surf: SampledSurface, k1, k2) -> ImpedanceSystem:
    n = surf.count
    if n < 2:
        raise ValueError("need at least two segments")
    dx, dy = _pair_geometry(surf)
    R = np.hypot(dx, dy)
    np.fill_diagonal(R, 1.0)  # placeholder, diagonals are overwritten
    arc = surf.arc_lengths
    norm = np.sqrt(1 + surf.slopes**2)
    # geometric factor of K: n(r_i) . (r_j - r_i) / R
    geom = (dy - surf.slopes[None, :] * dx) / (R * norm[None, :])

    Z = np.empty((2 * n, 2 * n), dtype=complex)
    diag = np.arange(n)
    hankels = {}
    for m, k in ((1, k1), (2, k2)):
        H0, H1 = _symmetric_hankels(R, k)
        hankels[m] = (H0, H1)
        G = 0.25j * H0 * arc[None, :]
        K = 0.25j * k * H1 * geom * arc[None, :]
        if m == 1:
            Z[:n, :n] = -K
            Z[:n, n:] = G
            Z[diag, diag] = 0.5
            Z[diag, n + diag] = self_term_G(k1, arc)
        else:
            Z[n:, :n] = K
            Z[n:, n:] = -G
            Z[n + diag, diag] = 0.5
            Z[n + diag, n + diag] = -self_term_G(k2, arc)
    return ImpedanceSystem(Z, dx, dy, R, hankels)


def solve_forward(surf: SampledSurface, k1, k2, wave: IncidentWave, frequency=float("nan"), keep_system=False) -> ForwardSolution:
    """Solve the coupled surface integral equations for ``(u, v)``.

    With ``keep_system`` the factorization and kernel tables are attached
    to the solution for later sensitivity solves.
    """
    n = surf.count
    system = _assemble(surf, k1, k2)
    rhs = np.zeros(2 * n, dtype=complex)
    rhs[:n] = incident_field(surf.x, surf.heights, wave, k1)
    system.factorization = LUFactorization(system.Z)
    sol = system.factorization.solve(rhs)
    residual = float(np.linalg.norm(system.Z @ sol - rhs) / np.linalg.norm(rhs))
    if residual > RESIDUAL_TOL:
        logger.warning("forward solve relative residual %.3e exceeds %.0e", residual, RESIDUAL_TOL)
    return ForwardSolution(
        sol[:n], sol[n:], frequency, surf, complex(k1), complex(k2), residual,
        system=system if keep_system else None,
    )


def _receiver_kernels(receivers: ReceiverArray, surf: SampledSurface, k1):
    dx = receivers.x[:, None] - surf.x[None, :]
    dy = receivers.height - surf.heights[None, :]
    R = np.hypot(dx, dy)
    H0, H1 = hankel1_pair(k1 * R)
    return dx, dy, R, H0, H1


def check_receivers_above(receivers: ReceiverArray, surf: SampledSurface):
    if receivers.height <= surf.heights.max():
        raise ValueError(
            f"receivers at y={receivers.height} are not above the surface (max height {surf.heights.max():.4g})"
        )


def scattered_field(receivers: ReceiverArray, sol: ForwardSolution, k1=None) -> np.ndarray:
    """Midpoint-rule scattered field at the receivers."""
    surf = sol.surface
    k1 = sol.k1 if k1 is None else k1
    check_receivers_above(receivers, surf)
    dx, dy, R, H0, H1 = _receiver_kernels(receivers, surf, k1)
    norm = np.sqrt(1 + surf.slopes**2)
    K = 0.25j * k1 * H1 * (dy - surf.slopes[None, :] * dx) / (R * norm[None, :])
    G = 0.25j * H0
    arc = surf.arc_lengths
    return K @ (sol.u * arc) - G @ (sol.v * arc)


def fresnel_reflection(k1, k2, theta):
    """Flat-interface reflection coefficient for continuous ``u`` and ``du/dn``."""
    kx = k1 * math.sin(theta)
    kz1 = k1 * math.cos(theta)
    kz2 = np.sqrt(k2**2 - kx**2 + 0j)
    return (kz1 - kz2) / (kz1 + kz2)
