import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from lcklab.errors import DegenerateGradient, Inadmissible, NotOnShell
from lcklab.linalg_core import FlowGenerator, lyapunov_residual, principal_log, spectral_check
from lcklab.shell import (ShellSpec, admissibility_check, levi_check, lyapunov_shell,
                          orbit_time, orbit_time_gradient)

from conftest import DIAGONAL, JORDAN, RADIAL, STEEP_JORDAN, annulus_points

LN2 = math.log(2.0)


def flow_of(A):
    return principal_log(spectral_check(A))


def bisect_diagonal_time(alphas, z, lo=-60.0, hi=60.0):
    """Oracle: root of sum |alpha_i|^(-2t) |z_i|^2 = 1 by plain bisection."""
    a = np.abs(alphas)
    f = lambda t: np.sum(a ** (-2 * t) * np.abs(z) ** 2) - 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:  # increasing in t since |alpha| < 1
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class TestAdmissibility:
    def test_radial_margin(self):
        cert = admissibility_check(ShellSpec.sphere(2), flow_of(RADIAL))
        assert cert.mode == "hermitian_part" and cert.passed
        assert cert.margin == pytest.approx(-LN2, abs=1e-12)
        assert cert.decay_rate == pytest.approx(-2 * LN2, abs=1e-12)

    def test_jordan_margin(self):
        cert = admissibility_check(ShellSpec.sphere(2), flow_of(JORDAN))
        assert cert.margin == pytest.approx(-LN2 + 0.5, abs=1e-12)

    def test_steep_jordan_sphere_inadmissible(self):
        with pytest.raises(Inadmissible) as info:
            admissibility_check(ShellSpec.sphere(2), flow_of(STEEP_JORDAN))
        assert info.value.args[0].margin == pytest.approx(-LN2 + 2, abs=1e-12)

    def test_lyapunov_shell(self):
        flow = flow_of(STEEP_JORDAN)
        S = lyapunov_shell(flow)
        assert lyapunov_residual(flow.L, S.P) < 1e-10
        cert = admissibility_check(S, flow)
        assert cert.passed and cert.margin == pytest.approx(-0.5, abs=1e-12)
        lam_max = np.linalg.eigvalsh(S.P)[-1]
        assert cert.decay_rate <= -1 / lam_max + 1e-12

    def test_custom_shell_empirical(self):
        S = ShellSpec.custom(2, lambda z: float(np.sum(np.abs(z) ** 4)),
                             lambda z: 2 * np.abs(z) ** 2 * z)
        cert = admissibility_check(S, flow_of(DIAGONAL), samples=16)
        assert cert.mode == "empirical" and cert.passed


class TestOrbitTime:
    def test_closed_forms(self):
        assert orbit_time([2, 0], flow_of(RADIAL), ShellSpec.sphere(2)) == pytest.approx(-1, abs=1e-13)
        assert orbit_time([0, 2], flow_of(DIAGONAL), ShellSpec.sphere(2)) == pytest.approx(-0.5, abs=1e-13)

    def test_diagonal_against_bisection(self):
        flow, S = flow_of(DIAGONAL), ShellSpec.sphere(2)
        Z = annulus_points(DIAGONAL, 50, seed=1, t_range=(-2, 2))
        for z in Z:
            assert orbit_time(z, flow, S) == pytest.approx(
                bisect_diagonal_time(np.diag(DIAGONAL), z), abs=1e-10)

    def test_gradient_by_finite_differences(self):
        flow, S = flow_of(JORDAN), ShellSpec.sphere(2)
        z = np.array([0.3 + 0.4j, -0.7 + 0.1j])
        g = orbit_time_gradient(z, flow, S)
        h = 1e-6
        fd = []
        for k in range(4):
            e = np.zeros(2, dtype=complex)
            e[k // 2] = h if k % 2 == 0 else 1j * h
            fd.append((orbit_time(z + e, flow, S) - orbit_time(z - e, flow, S)) / (2 * h))
        assert np.allclose(g, fd, atol=1e-8)

    def test_shell_points_have_zero_time(self):
        flow, S = flow_of(JORDAN), ShellSpec.sphere(2)
        assert orbit_time(np.array([0.6, 0.8j]), flow, S) == pytest.approx(0, abs=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5), st.integers(0, 2 ** 32 - 1))
    def test_flow_equivariance(self, s, seed):
        """t(exp(sL) z) = t(z) + s."""
        flow, S = flow_of(JORDAN), ShellSpec.sphere(2)
        rng = np.random.default_rng(seed)
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        t0 = orbit_time(z, flow, S)
        t1 = orbit_time(sla.expm(s * flow.L) @ z, flow, S)
        assert t1 == pytest.approx(t0 + s, abs=1e-9 * max(1, abs(t0) + abs(s)))


class TestLevi:
    def test_sphere(self):
        cert = levi_check(ShellSpec.sphere(2), np.array([1, 0]))
        assert cert.passed and cert.min_eig == pytest.approx(1.0)

    def test_ellipsoid(self):
        S = ShellSpec.ellipsoid(np.diag([1.0, 4.0]))
        cert = levi_check(S, np.array([0, 0.5]))
        assert cert.min_eig == pytest.approx(1.0)

    def test_custom_indefinite(self):
        F = lambda z: abs(z[0]) ** 2 - abs(z[1]) ** 2 + 2
        dF = lambda z: np.array([z[0], -z[1]])
        S = ShellSpec.custom(2, F, dF, level=3.0)
        cert = levi_check(S, np.array([1, 0]))
        assert cert.min_eig == pytest.approx(-1.0, abs=1e-6)
        assert not cert.passed

    def test_not_on_shell(self):
        with pytest.raises(NotOnShell):
            levi_check(ShellSpec.sphere(2), np.array([2, 0]))

    def test_degenerate_gradient(self):
        S = ShellSpec.custom(2, lambda z: 1.0, lambda z: np.zeros(2))
        with pytest.raises(DegenerateGradient):
            levi_check(S, np.array([1, 0]))


def test_ellipsoid_requires_positive_definite():
    with pytest.raises(ValueError):
        ShellSpec.ellipsoid(np.diag([1.0, -1.0]))


def test_flow_generator_accepts_raw_matrix():
    L = -LN2 * np.eye(2, dtype=complex)
    assert isinstance(FlowGenerator(L, np.eye(2) * 0.5).flow(1.0), np.ndarray)
