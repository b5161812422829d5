import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoqc import lambda_system as L

SIGMA_Y = np.array([[0, -1j], [1j, 0]])


def angles(n):
    return st.tuples(
        st.lists(st.floats(0.05, math.pi / 2 - 0.05), min_size=n - 1, max_size=n - 1),
        st.lists(st.floats(-math.pi, math.pi), min_size=n - 1, max_size=n - 1),
    )


def test_couplings_by_substitution():
    p = L.SphericalParams.zeros(5).replace(theta4=math.pi / 4, phi5=math.pi / 3)
    om = L.couplings_from_spherical(p).omegas
    ref = np.zeros(5, complex)
    ref[3] = math.sin(math.pi / 4)
    ref[4] = np.exp(-1j * math.pi / 3) * math.cos(math.pi / 4)
    assert np.allclose(om, ref, atol=1e-15)


def test_zero_point_frame_n3():
    f = L.frame_at(L.SphericalParams.zeros(3))
    assert np.allclose(f.states[0], [1, 0, 0, 0])
    assert np.allclose(f.states[1], [0, -1, 0, 0])


def test_last_state_n5_at_right_angle():
    f = L.frame_at(L.SphericalParams.zeros(5).replace(theta4=math.pi / 2))
    assert abs(abs(f.states[3][4]) - 1) < 1e-15


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7])
def test_frames_are_dark_and_orthonormal(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        p = L.random_params(n, rng, magnitude=rng.uniform(0.1, 3))
        c = L.couplings_from_spherical(p)
        h = L.build_hamiltonian(c)
        for chart in L.CHARTS:
            m = L.frame_at(p, chart).matrix
            assert np.abs(h @ m).max() < 1e-13 * p.magnitude * n
            assert np.allclose(m.conj().T @ m, np.eye(n - 1), atol=1e-13)
            assert np.abs(L.bright_state(c).conj() @ m).max() < 1e-13 * n


@settings(max_examples=40, deadline=None)
@given(angles(4))
def test_norm_invariant(a):
    p = L.SphericalParams(4, *a, magnitude=2.5)
    assert L.couplings_from_spherical(p).norm_sq == pytest.approx(6.25, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(angles(3))
def test_connection_is_antihermitian(a):
    p = L.SphericalParams(3, *a)
    for comp in L.analytic_connection(p):
        assert np.allclose(comp, -comp.conj().T, atol=1e-13)


def test_curvature_closed_form_n3():
    rng = np.random.default_rng(3)
    names = L.coordinate_names(3)
    i, j = names.index("theta1"), names.index("theta2")
    for _ in range(5):
        p = L.random_params(3, rng)
        _, f = L.connection_and_curvature(p)
        ref = -1j * math.cos(p.thetas[0]) * SIGMA_Y
        assert np.abs(f[i, j] - ref).max() < 1e-8
        assert np.abs(f[i, j] + f[j, i]).max() < 1e-15


def test_numeric_chart_spans_same_space():
    rng = np.random.default_rng(9)
    p = L.random_params(4, rng)
    a = L.frame_at(p).matrix
    b = L.frame_at(p, L.NUMERIC).matrix
    assert np.allclose(a @ a.conj().T, b @ b.conj().T, atol=1e-12)


def test_numeric_connection_gauge_covariant():
    # numeric and analytic connections differ by the overlap W: A' = W^+ A W + W^+ dW
    # the curvature therefore transforms covariantly; compare spectra of one component
    rng = np.random.default_rng(5)
    p = L.random_params(3, rng)
    _, fa = L.connection_and_curvature(p, L.ANALYTIC)
    _, fn = L.connection_and_curvature(p, L.NUMERIC, step=1e-6)
    ea = np.sort(np.linalg.eigvalsh(1j * fa[0, 1]))
    en = np.sort(np.linalg.eigvalsh(1j * fn[0, 1]))
    assert np.allclose(ea, en, atol=1e-5)


def test_rank_small_samples():
    rng = np.random.default_rng(1)
    assert L.holonomy_rank_lower_bound([L.random_params(3, rng) for _ in range(5)]) == 4
    # a two-level ground manifold has a U(1) holonomy only
    assert L.holonomy_rank_lower_bound([L.random_params(2, rng) for _ in range(5)]) <= 1


def test_degenerate_couplings():
    c = L.CouplingVector(np.zeros(3, complex))
    with pytest.raises(L.DegenerateCouplingError):
        L.bright_state(c)
    with pytest.raises(L.DegenerateCouplingError):
        L.dark_basis(c)


def test_gauge_jump_detected():
    p = L.SphericalParams.zeros(3)
    ref = L.frame_at(p, L.NUMERIC)
    far = L.SphericalParams.zeros(3).replace(theta1=math.pi / 2 - 0.01, theta2=math.pi / 2 - 0.01)
    with pytest.raises(L.GaugeDiscontinuityError):
        L.frame_at(far, L.NUMERIC, reference=ref)


def test_bad_params():
    with pytest.raises(ValueError):
        L.SphericalParams(3, (0.1,), (0.1, 0.2))
    with pytest.raises(ValueError):
        L.SphericalParams(1, (), ())
    with pytest.raises(ValueError):
        L.numeric_connection(L.SphericalParams.zeros(3), step=0.0)
