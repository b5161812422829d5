import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoqc import holonomy as H
from holoqc import lambda_system as L
from holoqc.evolver import evolve


def unitary_from_seed(seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.mark.parametrize("kind", ["Ry", "Rz", "Phase4"])
@pytest.mark.parametrize("angle", [-2.0, 0.3, math.pi / 2, 3.0])
def test_synthesized_gate(kind, angle):
    u = H.path_ordered_holonomy(H.synthesize_loop(kind, angle, 4000)).unitary
    assert np.abs(u - H.gate_unitary(kind, angle)).max() < 1e-6


def test_stokes_rectangle_by_antiderivative():
    # Ry density cos(theta1): a [0, pi/6] x [0, 1] rectangle has weight sin(pi/6) = 1/2
    loop = H.rectangle("Ry", math.pi / 6, 1.0)
    assert H.surface_integral_angle(loop) == pytest.approx(0.5, abs=1e-12)
    # Phase4 density sin(2 theta4) over [0, pi/2] x [0, pi/2] gives pi/2
    loop = H.rectangle("Phase4", math.pi / 2, math.pi / 2)
    assert H.surface_integral_angle(loop) == pytest.approx(math.pi / 2, abs=1e-12)


def test_orientation_reverses_gate():
    loop = H.synthesize_loop("Ry", 0.7, 2000)
    u = H.path_ordered_holonomy(loop).unitary
    v = H.path_ordered_holonomy(loop.reversed()).unitary
    assert np.abs(u @ v - np.eye(2)).max() < 1e-10
    assert H.surface_integral_angle(loop.reversed()) == pytest.approx(-H.surface_integral_angle(loop))


def test_triangle_stokes_and_convergence():
    tri = [(0.0, 0.0), (1.0, 0.2), (0.3, 1.1), (0.0, 0.0)]
    errs = []
    for n in (100, 400, 1600):
        loop = H.loop_in_chart("Ry", tri, n)
        u = H.path_ordered_holonomy(loop).unitary
        errs.append(np.abs(u - H.stokes_unitary("Ry", H.surface_integral_angle(loop))).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(16, rel=0.2)  # second order


@pytest.mark.parametrize("kind,angle", [("Ry", math.pi / 2), ("Rz", math.pi / 4), ("Phase4", math.pi)])
def test_numeric_chart_matches_analytic(kind, angle):
    loop = H.synthesize_loop(kind, angle, 800)
    un = H.path_ordered_holonomy(loop, chart=L.NUMERIC).unitary
    base = loop.vertices[0]
    w = L.frame_at(base).states.conj() @ L.frame_at(base, L.NUMERIC).states.T
    assert np.abs(w @ un @ w.conj().T - H.gate_unitary(kind, angle)).max() < 1e-5


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_composed_loop_reaches_any_su2(seed):
    u = unitary_from_seed(seed)
    loop = H.compose_gate_loop(u, 4000)
    got = H.path_ordered_holonomy(loop).unitary
    assert H.phase_insensitive_distance(got, u) < 1e-5


def test_phase_insensitive_distance():
    u = unitary_from_seed(1)
    assert H.phase_insensitive_distance(u, np.exp(0.4j) * u) < 1e-14
    assert H.phase_insensitive_distance(u, H.ry(0.3) @ u) > 0.1


def test_loop_roundtrip(tmp_path):
    loop = H.synthesize_loop("Rz", 1.1, 500)
    f = tmp_path / "loop.json"
    f.write_text(json.dumps(loop.to_dict()))
    back = H.LoopPath.from_dict(json.loads(f.read_text()))
    assert back.n_steps == loop.n_steps
    assert H.identify_chart(back) == "Rz"
    assert np.array_equal(H.path_ordered_holonomy(back).unitary, H.path_ordered_holonomy(loop).unitary)


def test_bad_requests():
    with pytest.raises(ValueError):
        H.synthesize_loop("Rx", 0.1)
    with pytest.raises(ValueError):
        H.surface_integral_angle(H.synthesize_loop("Ry", 0.5, 10), "Rz")
    a, b = L.SphericalParams(3, (0.1, 0.2), (0.3, 0.0)), L.SphericalParams(3, (0.2, 0.2), (0.3, 0.0))
    with pytest.raises(ValueError, match="not closed"):
        H.LoopPath([a, b], 10)
    with pytest.raises(ValueError):
        H.identify_chart(H.LoopPath([a, b, a], 10))


def _smooth_path(vertices, T_edge, magnitude):
    """H(t) walking the loop edge by edge with zero speed at every corner."""
    coords = [v.coords for v in vertices]
    n_edges = len(coords) - 1

    def ham(t):
        k = min(int(t // T_edge), n_edges - 1)
        s = min(max((t - k * T_edge) / T_edge, 0.0), 1.0)
        s = math.sin(0.5 * math.pi * s) ** 2
        c = coords[k] + s * (coords[k + 1] - coords[k])
        p = L.SphericalParams.from_coords(vertices[0].n_ground, c, magnitude)
        return L.build_hamiltonian(L.couplings_from_spherical(p))

    return ham, n_edges * T_edge


def test_time_domain_holonomy_sign():
    # drive the N=3 system slowly around an Ry loop; the dark amplitudes must
    # pick up exp(+i beta sigma_y), not its inverse
    beta = math.pi / 4
    loop = H.synthesize_loop("Ry", beta, 10)
    ham, T = _smooth_path(loop.vertices, T_edge=400.0, magnitude=1.0)
    frame = L.frame_at(loop.vertices[0]).matrix
    u = np.empty((2, 2), complex)
    for b in range(2):
        r = evolve(ham, frame[:, b], T, tol=1e-10, n_out=3)
        u[:, b] = frame.conj().T @ r.final_state
    assert np.abs(u - H.ry(beta)).max() < 2e-2
    assert np.abs(u - H.ry(-beta)).max() > 1.0
