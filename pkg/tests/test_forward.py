import cmath
import math

import mpmath
import numpy as np
import pytest
from scipy import special

from roughrecon.forward import (
    C0,
    IncidentWave,
    Medium,
    ReceiverArray,
    ForwardSolution,
    assemble_impedance,
    fresnel_reflection,
    green_G,
    green_K,
    incident_field,
    incident_field_dy,
    scattered_field,
    solve_forward,
    wavenumber,
)
from roughrecon.surface import AnalyticSurface, SampledSurface, SplineBasis, SurfaceModel, sample_surface

GAMMA = 0.5772156649


def flat(L=16.0):
    zero = lambda x: np.zeros_like(np.asarray(x, float))
    return AnalyticSurface(zero, zero, L)


def smooth_surface():
    rng = np.random.default_rng(7)
    return SurfaceModel(SplineBasis(20, 3, 16.0), rng.normal(0, 0.08, 20))


def test_wavenumber_free_space():
    k = wavenumber(Medium(), C0)
    assert k == pytest.approx(2 * math.pi, rel=1e-12)
    assert k.imag == 0


def test_wavenumber_scales_with_sqrt_eps():
    f = 4.1e8
    assert wavenumber(Medium(4.0), f) == pytest.approx(2 * wavenumber(Medium(1.0), f), rel=1e-14)


def test_wavenumber_lossy():
    f = 600e6
    k = wavenumber(Medium(4.0, 1.0, 1e-5), f)
    # closed form with mpmath as an independent evaluation
    omega = 2 * mpmath.pi * f
    eps = mpmath.mpf("8.8541878128e-12") * 4 + 1j * mpmath.mpf("1e-5") / omega
    ref = complex(omega * mpmath.sqrt(mpmath.mpf("1.25663706212e-6") * eps))
    assert k == pytest.approx(ref, rel=1e-13)
    # 25.1327 (= 8 pi) would correspond to c = 3e8; the exact c0 gives 25.1501
    assert k.real == pytest.approx(2 * 2 * math.pi * f / C0, rel=1e-9)
    assert k.real == pytest.approx(25.1327, rel=1e-3)
    assert 0 < k.imag < 1e-3


def test_wavenumber_rejects_bad_frequency():
    with pytest.raises(ValueError):
        wavenumber(Medium(), 0.0)


@pytest.mark.parametrize("kwargs", [dict(eps_r=0.5), dict(mu_r=0.0), dict(sigma=-1.0)])
def test_medium_validation(kwargs):
    with pytest.raises(ValueError):
        Medium(**kwargs)


def test_wave_validation():
    with pytest.raises(ValueError):
        IncidentWave(math.pi / 2, 8.0)
    with pytest.raises(ValueError):
        IncidentWave(0.0, 0.0)


@pytest.mark.parametrize("theta", [0.0, 0.3, -0.5])
def test_incident_field_origin(theta):
    assert incident_field(0.0, 0.0, IncidentWave(theta, 8.0), 2 * math.pi) == pytest.approx(1.0, abs=1e-15)


def test_incident_field_taper_decay():
    val = incident_field(8.0, 0.0, IncidentWave(0.0, 8.0), 2 * math.pi)
    assert abs(val) == pytest.approx(math.exp(-1), rel=1e-14)


def test_incident_field_below_origin():
    k1, g = 2 * math.pi, 8.0
    val = incident_field(0.0, -2.0, IncidentWave(0.0, g), k1)
    xi = mpmath.mpf(-1) / (mpmath.mpf(k1) * g) ** 2
    ref = complex(mpmath.exp(1j * mpmath.mpf(k1) * 2 * (1 + xi)))
    assert val == pytest.approx(ref, abs=1e-13)


def test_incident_field_requires_real_k():
    with pytest.raises(ValueError):
        incident_field(0.0, 0.0, IncidentWave(), 2 * math.pi + 0.1j)


def test_incident_field_dy_finite_difference():
    wave = IncidentWave(0.35, 6.0)
    k1 = 9.0
    x = np.linspace(-5, 5, 21)
    y = np.linspace(-1, 2, 21)
    h = 1e-6
    fd = (incident_field(x, y + h, wave, k1) - incident_field(x, y - h, wave, k1)) / (2 * h)
    np.testing.assert_allclose(incident_field_dy(x, y, wave, k1), fd, rtol=1e-7, atol=1e-8)


def test_incident_field_nearly_satisfies_helmholtz():
    # the taper correction keeps the residual small relative to k^2 u
    wave, k1 = IncidentWave(0.2, 8.0), 2 * math.pi
    x, y, h = 1.3, -0.4, 1e-3
    u = lambda a, b: incident_field(a, b, wave, k1)
    lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4 * u(x, y)) / h**2
    assert abs(lap + k1**2 * u(x, y)) < 1e-2 * k1**2


def test_green_values_and_symmetry():
    k = 3.0 + 0.1j
    r, rp = (0.4, 1.2), (-0.3, 0.1)
    R = math.hypot(0.7, 1.1)
    assert green_G(r, rp, k) == pytest.approx(0.25j * complex(mpmath.hankel1(0, k * R)), rel=1e-12)
    assert green_G(r, rp, k) == green_G(rp, r, k)
    with pytest.raises(ValueError):
        green_G(r, r, k)
    with pytest.raises(ValueError):
        green_K(r, r, 0.0, k)


def test_green_K_flat_directly_above():
    k, R = 5.0, 0.8
    assert green_K((1.0, R), (1.0, 0.0), 0.0, k) == pytest.approx(0.25j * k * special.hankel1(1, k * R), rel=1e-13)


def test_green_K_normal_finite_difference():
    rng = np.random.default_rng(3)
    k = 6.0 + 0.05j
    eps = 1e-6
    for _ in range(20):
        r = rng.uniform(-2, 2, 2)
        rp = rng.uniform(-2, 2, 2)
        s = rng.uniform(-1, 1)
        n = np.array([-s, 1.0]) / math.hypot(1, s)
        fd = (green_G(r, rp + eps * n, k) - green_G(r, rp - eps * n, k)) / (2 * eps)
        assert green_K(r, rp, s, k) == pytest.approx(fd, rel=1e-6)


def hand_assembled(x, y, s, w, k1, k2):
    """Loop-by-loop impedance matrix straight from the midpoint-rule formulas."""
    n = len(x)
    Z = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(n):
        for i in range(n):
            wi = w * math.sqrt(1 + s[i] ** 2)
            if i == j:
                Z[j, i] = 0.5
                Z[n + j, i] = 0.5
                Z[j, n + i] = wi * (0.25j - (GAMMA - 1 + cmath.log(k1 * wi / 4)) / (2 * math.pi))
                Z[n + j, n + i] = -wi * (0.25j - (GAMMA - 1 + cmath.log(k2 * wi / 4)) / (2 * math.pi))
                continue
            dx, dy = x[j] - x[i], y[j] - y[i]
            R = math.hypot(dx, dy)
            geom = (dy - s[i] * dx) / (R * math.sqrt(1 + s[i] ** 2))
            for k, row, sign in ((k1, 0, -1), (k2, n, 1)):
                K = 0.25j * k * special.hankel1(1, k * R) * geom
                G = 0.25j * special.hankel1(0, k * R)
                Z[row + j, i] = sign * wi * K
                Z[row + j, n + i] = -sign * wi * G
    return Z


def test_impedance_flat_hand_assembled():
    surf = sample_surface(flat(4.0), 0.5)
    assert surf.count == 8
    k1, k2 = 2 * math.pi, 4 * math.pi + 0.01j
    Z = assemble_impedance(surf, k1, k2)
    ref = hand_assembled(surf.x, surf.heights, surf.slopes, surf.width, k1, k2)
    np.testing.assert_allclose(Z, ref, rtol=1e-12, atol=1e-12)


def test_impedance_rough_hand_assembled():
    model = smooth_surface()
    surf = sample_surface(model, 0.5)
    k1, k2 = 2 * math.pi, 4 * math.pi + 0.3j
    Z = assemble_impedance(surf, k1, k2)
    ref = hand_assembled(surf.x, surf.heights, surf.slopes, surf.width, k1, k2)
    np.testing.assert_allclose(Z, ref, rtol=1e-12, atol=1e-12)


def test_impedance_block_structure():
    surf = sample_surface(smooth_surface(), 0.4)
    n = surf.count
    k1, k2 = 2 * math.pi, 4 * math.pi
    Z = assemble_impedance(surf, k1, k2)
    np.testing.assert_array_equal(np.diag(Z[:n, :n]), 0.5)
    np.testing.assert_array_equal(np.diag(Z[n:, :n]), 0.5)
    # Z12 and -Z22 coincide when k1 == k2
    Z_same = assemble_impedance(surf, k1, k1)
    np.testing.assert_allclose(Z_same[:n, n:], -Z_same[n:, n:], rtol=1e-14)
    j, i = 3, 11
    r_j, r_i = (surf.x[j], surf.heights[j]), (surf.x[i], surf.heights[i])
    assert Z[j, n + i] == pytest.approx(surf.arc_lengths[i] * green_G(r_j, r_i, k1), rel=1e-13)


def test_impedance_needs_two_segments():
    surf = SampledSurface(np.array([0.0]), np.array([0.0]), np.array([0.0]), 1.0)
    with pytest.raises(ValueError):
        assemble_impedance(surf, 1.0, 2.0)


def test_solve_residual_and_wave_independence():
    surf = sample_surface(smooth_surface(), 0.1)
    k1, k2 = wavenumber(Medium(), 3e8), wavenumber(Medium(4.0, 1.0, 1e-3), 3e8)
    sol = solve_forward(surf, k1, k2, IncidentWave(0.2, 6.0), 3e8)
    assert sol.residual <= 1e-10
    assert sol.u.shape == (surf.count,)
    assert sol.frequency == 3e8


def test_mesh_refinement_self_convergence():
    f = 400e6
    k1, k2 = wavenumber(Medium(), f), wavenumber(Medium(4.0, 1.0, 1e-3), f)
    model = smooth_surface()
    assert np.max(np.abs(model.slope(np.linspace(-8, 8, 4001)))) <= 1
    w = 2 * math.pi / (10 * abs(k2))
    wave = IncidentWave(0.0, 8.0)
    coarse = solve_forward(sample_surface(model, w), k1, k2, wave)
    fine = solve_forward(sample_surface(model, w / 2), k1, k2, wave)
    assert fine.surface.count == 2 * coarse.surface.count
    # coarse midpoints sit halfway between two fine midpoints
    shared = 0.5 * (fine.u[0::2] + fine.u[1::2])
    change = np.linalg.norm(coarse.u - shared) / np.linalg.norm(shared)
    assert change < 0.02


@pytest.mark.parametrize("theta_deg", [0.0, 20.0])
def test_fresnel_flat_interface(theta_deg):
    f = C0
    k1, k2 = wavenumber(Medium(), f), wavenumber(Medium(4.0), f)
    theta = math.radians(theta_deg)
    wave = IncidentWave(theta, 8.0)
    surf = sample_surface(flat(16.0), 2 * math.pi / (10 * abs(k2)))
    sol = solve_forward(surf, k1, k2, wave, f)
    alpha = 4.25
    xr = alpha * math.tan(theta)  # specular point
    us = scattered_field(ReceiverArray(np.array([xr]), alpha), sol)
    ratio = abs(us[0]) / abs(incident_field(xr, -alpha, wave, k1))
    expected = abs(fresnel_reflection(k1, k2, theta))
    if theta_deg == 0:
        assert expected == pytest.approx(1 / 3, rel=1e-12)
    assert ratio == pytest.approx(expected, rel=0.05)


def test_scattered_field_linearity():
    surf = sample_surface(smooth_surface(), 0.2)
    k1, k2 = 2 * math.pi, 4 * math.pi
    rec = ReceiverArray(np.linspace(-5, 5, 11), 3.0)
    zero = ForwardSolution(np.zeros(surf.count, complex), np.zeros(surf.count, complex), 1.0, surf, k1, k2)
    np.testing.assert_array_equal(scattered_field(rec, zero), 0.0)

    i = 17
    u = np.zeros(surf.count, complex)
    u[i] = 0.3 - 0.2j
    one = ForwardSolution(u, np.zeros(surf.count, complex), 1.0, surf, k1, k2)
    expected = [u[i] * surf.arc_lengths[i] * green_K((xr, 3.0), (surf.x[i], surf.heights[i]), surf.slopes[i], k1) for xr in rec.x]
    np.testing.assert_allclose(scattered_field(rec, one), expected, rtol=1e-12)

    rng = np.random.default_rng(0)
    a = ForwardSolution(rng.normal(size=surf.count) + 0j, rng.normal(size=surf.count) + 1j, 1.0, surf, k1, k2)
    b = ForwardSolution(rng.normal(size=surf.count) + 0j, rng.normal(size=surf.count) - 1j, 1.0, surf, k1, k2)
    ab = ForwardSolution(2 * a.u - 3 * b.u, 2 * a.v - 3 * b.v, 1.0, surf, k1, k2)
    np.testing.assert_allclose(
        scattered_field(rec, ab), 2 * scattered_field(rec, a) - 3 * scattered_field(rec, b), rtol=1e-11, atol=1e-13
    )


def test_receivers_below_surface_rejected():
    surf = sample_surface(smooth_surface(), 0.2)
    sol = ForwardSolution(np.zeros(surf.count, complex), np.zeros(surf.count, complex), 1.0, surf, 1.0, 2.0)
    with pytest.raises(ValueError):
        scattered_field(ReceiverArray(np.array([0.0]), surf.heights.max() - 1e-3), sol)


def test_receiver_array_grid():
    rec = ReceiverArray.from_grid(-5, 5, 0.05, 4.25)
    assert rec.count == 201
    assert rec.x[-1] == pytest.approx(5.0)
    assert ReceiverArray.from_grid(-5, 5, 0.05, 4.25, include_endpoint=False).count == 200
    with pytest.raises(ValueError):
        ReceiverArray(np.array([0.0, 0.0]), 1.0)
