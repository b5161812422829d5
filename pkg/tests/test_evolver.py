import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoqc.evolver import (
    CompositeSystem,
    Factor,
    GaussianPulse,
    IntegrationError,
    PulseSchedule,
    TimeDependentOperator,
    evolve,
    fidelity_and_populations,
    fock,
)

METHODS = [("rk45", 1e-10), ("magnus4", 1e-9), ("magnus4_grid", 1e-8)]
SX = np.array([[0, 1], [1, 0]], complex)


@pytest.mark.parametrize("method,tol", METHODS)
def test_rabi_oscillation(method, tol):
    w = 0.3
    r = evolve(w * SX, np.array([1, 0], complex), 10.0, tol=tol, method=method, n_out=201)
    assert np.abs(np.abs(r.states[:, 1]) ** 2 - np.sin(w * r.times) ** 2).max() < 1e-7


@pytest.mark.parametrize("method,tol", METHODS)
def test_decay_is_not_renormalized(method, tol):
    gamma = 0.2
    h = np.diag([0.0, -0.5j * gamma]) + 0.0 * SX
    r = evolve(h, np.array([0, 1], complex), 5.0, tol=tol, method=method, n_out=51)
    assert np.allclose(r.norm_sq, np.exp(-gamma * r.times), atol=1e-8)


def test_time_dependent_phase_exact():
    # H(t) = f(t) sigma_z commutes with itself, so psi picks up exp(-i int f)
    f = GaussianPulse(1.0, 0.5, 0.2, 20.0)
    h = TimeDependentOperator(np.zeros((2, 2), complex)).add(f, np.diag([1.0, -1.0]))
    psi0 = np.array([1, 1], complex) / math.sqrt(2)
    area = 20.0 * 0.2 * math.sqrt(math.pi) / 2 * (math.erf(0.5 / 0.2) - math.erf(-0.5 / 0.2))
    for method, tol in METHODS:
        r = evolve(h, psi0, 20.0, tol=tol, method=method)
        rel = r.final_state[0] / r.final_state[1]
        assert np.angle(rel) == pytest.approx(np.angle(np.exp(-2j * area)), abs=1e-6)


def test_batch_matches_pointwise():
    f = GaussianPulse(0.7, 0.4, 0.1, 3.0)
    h = TimeDependentOperator(np.diag([0.1, 0.2]).astype(complex)).add(f, SX).add(lambda t: np.exp(1j * t), SX)
    ts = np.linspace(0, 3, 7)
    assert np.allclose(h.batch(ts), np.stack([h(t) for t in ts]))
    psi = np.array([0.6, 0.8j])
    assert np.allclose(h.matvec(1.3, psi), h(1.3) @ psi)


def test_grid_method_reports_exhaustion():
    with pytest.raises(IntegrationError):
        h = TimeDependentOperator(np.diag([5.0, -5.0]).astype(complex)).add(lambda t: np.cos(3 * t), SX)
        evolve(h, np.array([1, 0], complex), 100.0, tol=1e-12, method="magnus4_grid",
               n_out=11, max_steps=200)


def test_input_validation():
    with pytest.raises(ValueError):
        evolve(SX, np.array([1, 1], complex), 1.0)
    with pytest.raises(ValueError):
        evolve(SX, np.array([1, 0, 0], complex), 1.0)
    with pytest.raises(ValueError):
        evolve(SX, np.array([1, 0], complex), 1.0, method="euler")
    r = evolve(SX, np.array([0.6, 0], complex), 1.0, allow_subnormalized=True)
    assert r.final_norm_sq == pytest.approx(0.36, abs=1e-9)


def test_zero_duration():
    r = evolve(SX, np.array([1, 0], complex), 0.0, n_out=5)
    assert np.all(r.states == np.array([1, 0]))


def test_fidelity_report():
    r = evolve(0.25 * math.pi * SX, np.array([1, 0], complex), 2.0, projectors={"up": [0.0, 1.0]})
    rep = fidelity_and_populations(r, np.array([0, 1], complex))
    assert rep.fidelity == pytest.approx(1.0, abs=1e-8)
    assert rep.maxima["up"] == pytest.approx(1.0, abs=1e-8)
    # time average of sin^2 over a half period is 1/2
    assert rep.integrals["up"] == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(ValueError):
        fidelity_and_populations(r, np.array([1, 1], complex))


def test_composite_indexing():
    sys = CompositeSystem((Factor("atom", ("g", "e")), fock("cav", 3)))
    assert sys.dim == 6
    for i in range(sys.dim):
        assert sys.index(**sys.label(i)) == i
    a = sys.embed({"cav": sys.annihilation("cav")})
    v = a @ sys.basis(atom="e", cav=2)
    assert np.allclose(v, math.sqrt(2) * sys.basis(atom="e", cav=1))
    assert sys.mask(lambda lab: lab["cav"] > 0).sum() == 4
    with pytest.raises(ValueError):
        CompositeSystem((fock("a"), fock("a")))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.3), st.floats(0.05, 0.3), st.floats(1.0, 1e6))
def test_counterintuitive_order(a, tau, T):
    s = PulseSchedule.counterintuitive(1.0, T, a, tau)
    assert s["omega2"].center < s["omega1"].center
    back = s.swapped()
    assert back["omega2"].center > back["omega1"].center
    assert back["omega2"](0.3 * T) == pytest.approx(s["omega2"](0.7 * T))


def test_pulse_validation():
    with pytest.raises(ValueError):
        GaussianPulse(-1.0, 0.5, 0.1, 1.0)
    with pytest.raises(ValueError):
        GaussianPulse(1.0, 0.5, 0.0, 1.0)
