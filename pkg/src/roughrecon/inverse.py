"""Tikhonov-regularized Newton inversion with frequency marching.

At each frequency the current spline surface is meshed, the forward problem
is solved, and the linearized data misfit is inverted for a coefficient
update. By default the Jacobian is the exact derivative of the discrete
scattered field; the frozen-field variant differentiates only the receiver
kernels with respect to surface height. The converged coefficients at one
frequency seed the next.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .forward import (
    ForwardSolution,
    incident_field_dy,
    IncidentWave,
    Medium,
    ReceiverArray,
    _receiver_kernels,
    check_receivers_above,
    scattered_field,
    solve_forward,
    wavenumber,
)
from .numerics import EULER_GAMMA, regularized_normal_solve
from .surface import SampledSurface, SplineBasis, SurfaceModel, sample_surface

logger = logging.getLogger(__name__)


class ReconstructionError(RuntimeError):
    """A forward solve failed inside the Newton loop."""

    def __init__(self, message, frequency_index, iteration):
        super().__init__(f"{message} (frequency index {frequency_index}, iteration {iteration})")
        self.frequency_index = frequency_index
        self.iteration = iteration


@dataclass(frozen=True)
class InverseConfig:
    tau: float = 0.75e-5
    threshold: float = 5e-3
    max_iterations: int = 30
    n_splines: int = 25
    spline_order: int = 3
    points_per_wavelength: float = 10.0
    jacobian: str = "exact"

    def __post_init__(self):
        if self.jacobian not in ("exact", "frozen"):
            raise ValueError("jacobian must be 'exact' or 'frozen'")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.n_splines < 1 or self.spline_order < 1:
            raise ValueError("spline count and order must be >= 1")
        if not self.points_per_wavelength > 0:
            raise ValueError("points_per_wavelength must be positive")


@dataclass(frozen=True)
class FrequencySchedule:
    start: float
    step: float
    stop: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("frequency step must be positive")
        if self.stop < self.start:
            raise ValueError("empty frequency schedule: stop < start")

    @property
    def frequencies(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)

    def __len__(self):
        return self.frequencies.size


@dataclass
class IterationRecord:
    frequency_index: int
    frequency: float
    iteration: int
    step_norm: float
    residual_norm: float
    n_segments: int
    imag_ratio: float
    err: float | None = None


@dataclass
class FrequencyResult:
    frequency: float
    iterations: int
    step_norm: float
    converged: bool
    coeffs: np.ndarray
    n_segments: int
    err: float | None = None


@dataclass
class ReconstructionState:
    """Mutable state of the frequency march."""

    basis: SplineBasis
    coeffs: np.ndarray
    frequency_index: int = 0
    iteration: int = 0
    history: list = field(default_factory=list)
    results: list = field(default_factory=list)
    failed: str | None = None

    @property
    def model(self) -> SurfaceModel:
        return SurfaceModel(self.basis, self.coeffs)


def segment_width(k2, points_per_wavelength=10.0) -> float:
    """Mesh width ``2 pi / (ppw |k2|)``."""
    return 2 * math.pi / (points_per_wavelength * abs(k2))


def dG_dy(dx, dy, R, H1, k):
    """d/dy' of G at the source; ``dx, dy`` are field minus source coordinates."""
    return 0.25j * k * H1 * dy / R


def dK_dy(dx, dy, R, H0, H1, k, slope):
    """d/dy' of K at the source with the source slope held fixed."""
    norm = np.sqrt(1 + slope**2)
    b = dy - slope * dx
    kR = k * R
    dR = -dy / R
    dH1 = k * (H0 - H1 / kR) * dR
    dbR = -1 / R - b * dR / R**2
    return 0.25j * k / norm * (dH1 * b / R + H1 * dbR)


def trapezoid_weights(surf: SampledSurface) -> np.ndarray:
    wts = surf.arc_lengths.copy()
    wts[0] *= 0.5
    wts[-1] *= 0.5
    return wts


def frechet_matrix(surf: SampledSurface, sol: ForwardSolution, receivers: ReceiverArray, basis: SplineBasis, k1=None):
    """Discretized shape derivative ``C`` (receivers x basis functions)."""
    k1 = sol.k1 if k1 is None else k1
    check_receivers_above(receivers, surf)
    dx, dy, R, H0, H1 = _receiver_kernels(receivers, surf, k1)
    slope = surf.slopes[None, :]
    integrand = -dG_dy(dx, dy, R, H1, k1) * sol.v[None, :] + dK_dy(dx, dy, R, H0, H1, k1, slope) * sol.u[None, :]
    phi = basis.design_matrix(surf.x)
    return (integrand * trapezoid_weights(surf)[None, :]) @ phi


def _block_derivatives(system, k, m, surf):
    """Derivatives of the G- and K-type blocks for medium ``m``.

    Returns ``(dG_ddy, dG_dslope, dK_ddy, dK_dslope)`` where ``ddy`` is the
    derivative with respect to ``y_j - y_l`` and ``dslope`` with respect to
    the source slope ``s'_l``. Entries are the arc-weighted matrix entries.
    """
    H0, H1 = system.hankels[m]
    dx, dy, R = system.dx, system.dy, system.R
    w = surf.width
    slope = surf.slopes
    norm = np.sqrt(1 + slope**2)
    arc = w * norm
    b = dy - slope[None, :] * dx
    kR = k * R
    dG_ddy = -0.25j * k * H1 * (dy / R) * arc[None, :]
    dG_dslope = 0.25j * H0 * (w * slope / norm)[None, :]
    dH1 = np.where(kR != 0, H0 - H1 / kR, 0.0)
    dK_ddy = 0.25j * k * w * (k * dH1 * (dy / R) * (b / R) + H1 * (1 / R - b * dy / R**3))
    dK_dslope = 0.25j * k * w * H1 * (-dx / R)
    diag = np.arange(surf.count)
    for mat in (dG_ddy, dK_ddy, dK_dslope):
        mat[diag, diag] = 0.0
    dself = 0.25j - (1 / (2 * math.pi)) * ((EULER_GAMMA - 1) + np.log(k * arc / 4)) - 1 / (2 * math.pi)
    dG_dslope[diag, diag] = dself * w * slope / norm
    return dG_ddy, dG_dslope, dK_ddy, dK_dslope


def _apply_derivative(Dy, Ds, x, Y, S):
    # perturbation of sum_l B_jl(y_j - y_l, s'_l) x_l along columns of (Y, S)
    return Y * (Dy @ x)[:, None] - Dy @ (Y * x[:, None]) + Ds @ (S * x[:, None])


def sensitivity_matrix(sol: ForwardSolution, receivers: ReceiverArray, basis: SplineBasis, wave: IncidentWave):
    """Exact derivative of the discrete scattered field with respect to the coefficients.

    Unlike :func:`frechet_matrix` the surface fields are not frozen: their
    first-order change is obtained from the linearized impedance system,
    reusing the LU factors kept on ``sol``. Height, slope and arc-length
    variations of every matrix entry are included.
    """
    system = sol.system
    if system is None or system.factorization is None:
        raise ValueError("forward solution was computed without keep_system=True")
    surf = sol.surface
    k1, k2 = sol.k1, sol.k2
    Y = basis.design_matrix(surf.x)
    S = basis.derivative_matrix(surf.x)
    u, v = sol.u, sol.v

    g1y, g1s, k1y, k1s = _block_derivatives(system, k1, 1, surf)
    top = -_apply_derivative(k1y, k1s, u, Y, S) + _apply_derivative(g1y, g1s, v, Y, S)
    del g1y, g1s, k1y, k1s
    g2y, g2s, k2y, k2s = _block_derivatives(system, k2, 2, surf)
    bottom = _apply_derivative(k2y, k2s, u, Y, S) - _apply_derivative(g2y, g2s, v, Y, S)
    del g2y, g2s, k2y, k2s

    drhs = np.concatenate([incident_field_dy(surf.x, surf.heights, wave, k1)[:, None] * Y - top, -bottom])
    dfield = system.factorization.solve(drhs)
    n = surf.count
    dU, dV = dfield[:n], dfield[n:]

    check_receivers_above(receivers, surf)
    dx, dy, R, H0, H1 = _receiver_kernels(receivers, surf, k1)
    w = surf.width
    slope = surf.slopes[None, :]
    norm = np.sqrt(1 + slope**2)
    b = dy - slope * dx
    Kr = 0.25j * k1 * w * H1 * b / R
    Gr = 0.25j * H0 * w * norm
    dKr_ddy = 0.25j * k1 * w * (k1 * (H0 - H1 / (k1 * R)) * (dy / R) * (b / R) + H1 * (1 / R - b * dy / R**3))
    dGr_ddy = -0.25j * k1 * H1 * (dy / R) * w * norm
    dKr_ds = 0.25j * k1 * w * H1 * (-dx / R)
    dGr_ds = 0.25j * H0 * w * slope / norm
    J = (-dKr_ddy * u[None, :] + dGr_ddy * v[None, :]) @ Y
    J += (dKr_ds * u[None, :] - dGr_ds * v[None, :]) @ S
    J += Kr @ dU - Gr @ dV
    return J


def newton_step(C, u_mea, u_sca, tau, return_complex=False):
    """Real coefficient update from the regularized normal equations."""
    d = regularized_normal_solve(C, np.asarray(u_mea) - np.asarray(u_sca), tau)
    if return_complex:
        return d
    return d.real.copy()


class _Problem:
    """Fixed physical setup shared by all Newton iterations."""

    def __init__(self, upper: Medium, lower: Medium, wave: IncidentWave, receivers: ReceiverArray, config: InverseConfig, domain_length: float):
        self.upper = upper
        self.lower = lower
        self.wave = wave
        self.receivers = receivers
        self.config = config
        self.basis = SplineBasis(config.n_splines, config.spline_order, domain_length)


def newton_at_frequency(state: ReconstructionState, frequency, u_mea, problem: _Problem, reference=None):
    """Newton iterations at one frequency, updating ``state`` in place."""
    cfg = problem.config
    k1 = wavenumber(problem.upper, frequency)
    k2 = wavenumber(problem.lower, frequency)
    w = segment_width(k2, cfg.points_per_wavelength)
    m = state.frequency_index
    step_norm = math.inf
    n_seg = 0
    converged = False
    n = 0
    for n in range(1, cfg.max_iterations + 1):
        state.iteration = n
        surf = sample_surface(state.model, w)
        n_seg = surf.count
        try:
            sol = solve_forward(surf, k1, k2, problem.wave, frequency, keep_system=cfg.jacobian == "exact")
            u_sca = scattered_field(problem.receivers, sol, k1)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise ReconstructionError(f"forward solve failed: {exc}", m, n) from exc
        if cfg.jacobian == "exact":
            C = sensitivity_matrix(sol, problem.receivers, state.basis, problem.wave)
        else:
            C = frechet_matrix(surf, sol, problem.receivers, state.basis, k1)
        d_c = newton_step(C, u_mea, u_sca, cfg.tau, return_complex=True)
        d = d_c.real.copy()
        step_norm = float(np.linalg.norm(d))
        imag_ratio = float(np.linalg.norm(d_c.imag) / max(np.linalg.norm(d_c.real), 1e-300))
        if imag_ratio > 1e-6:
            logger.debug("f=%.4g Hz n=%d discarded imaginary step part: ratio %.2e", frequency, n, imag_ratio)
        state.coeffs = state.coeffs + d
        rec = IterationRecord(
            frequency_index=m,
            frequency=float(frequency),
            iteration=n,
            step_norm=step_norm,
            residual_norm=float(np.linalg.norm(u_mea - u_sca)),
            n_segments=n_seg,
            imag_ratio=imag_ratio,
        )
        if reference is not None:
            rec.err = profile_error(state.model, reference, w)
        state.history.append(rec)
        logger.debug("f=%.4g Hz n=%d |d|=%.3e |r|=%.3e", frequency, n, step_norm, rec.residual_norm)
        if step_norm <= cfg.threshold:
            converged = True
            break
    if not converged:
        logger.info("no convergence at f=%.4g Hz after %d iterations (|d|=%.3e)", frequency, n, step_norm)
    result = FrequencyResult(
        frequency=float(frequency),
        iterations=n,
        step_norm=step_norm,
        converged=converged,
        coeffs=state.coeffs.copy(),
        n_segments=n_seg,
        err=None if reference is None else profile_error(state.model, reference, w),
    )
    state.results.append(result)
    return state


def profile_error(recon, reference, width) -> float:
    """Relative L2 height error on the midpoint grid of the given width."""
    from .experiments import reconstruction_error

    L = recon.domain_length
    n = int(round(L / width))
    x = -L / 2 + (np.arange(n) + 0.5) * (L / n)
    return reconstruction_error(recon(x), reference(x))


def multi_frequency_reconstruct(frequencies, measurements, problem: _Problem, reference=None, initial=None):
    """March through ``frequencies`` warm-starting each Newton loop.

    ``measurements`` is a sequence of complex receiver vectors aligned with
    ``frequencies``. A failure at one frequency stops the march; the state
    returned keeps all completed frequencies and records the failure.
    """
    frequencies = np.asarray(frequencies, dtype=float)
    if frequencies.size == 0:
        raise ValueError("empty frequency list")
    if len(measurements) != frequencies.size:
        raise ValueError("one measurement vector is required per frequency")
    coeffs = np.zeros(problem.basis.count) if initial is None else np.asarray(initial, float).copy()
    state = ReconstructionState(basis=problem.basis, coeffs=coeffs)
    for m, (f, u_mea) in enumerate(zip(frequencies, measurements)):
        state.frequency_index = m
        try:
            newton_at_frequency(state, f, np.asarray(u_mea), problem, reference)
        except ReconstructionError as exc:
            logger.error("%s", exc)
            state.failed = str(exc)
            break
    return state
