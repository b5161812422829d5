import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoqc import bounds as B
from holoqc.schemes import SchemeParams


def three_level(g1, g2, D):
    """Dark level 0 coupled to a bright level at energy D."""
    return np.array([[0, 0, g1], [0, 0, g2], [g1, g2, D]], float)


def test_kappa_condition_closed_form():
    # g/Omega = 20 and a = tau: kappa T / (1 + 800 e^2)
    val = B.kappa_condition_optical(1.0, 1.0, 20.0, 1.0, 0.15, 0.15)
    assert val == pytest.approx(1 / (1 + 800 * math.e**2), rel=1e-14)
    with pytest.raises(ValueError):
        B.kappa_condition_optical(1.0, 1.0, 1.0, 0.0, 0.1, 0.1)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.1, 2.0), st.floats(-3.0, 3.0))
def test_energies_match_diagonalization(s, G, D):
    sched = B.ThreeLevelSchedule(G, D=D)
    g1, g2, _, _ = sched.couplings(s)
    ev = np.linalg.eigvalsh(three_level(g1, g2, D))
    e_plus, e_minus = sched.energies(s)
    # the dark level sits at zero; the other two are E_+ and E_-
    assert np.allclose(sorted([0.0, e_plus, e_minus]), ev, atol=1e-12)


@pytest.mark.parametrize("D", [0.0, 0.7])
def test_nonadiabatic_couplings_by_finite_difference(D):
    sched = B.ThreeLevelSchedule(1.0, D=D)
    h = 1e-6
    for s in (0.3, 0.5, 0.62):
        def vecs(x):
            g1, g2, _, _ = sched.couplings(x)
            return np.linalg.eigh(three_level(g1, g2, D))[1]

        dark = lambda x: np.array([sched.couplings(x)[1], -sched.couplings(x)[0], 0.0])  # noqa: E731
        d0 = (dark(s + h) / np.linalg.norm(dark(s + h)) - dark(s - h) / np.linalg.norm(dark(s - h))) / (2 * h)
        v = vecs(s)
        # columns sorted by energy: E_- < 0 < E_+
        ref = (abs(v[:, 2] @ d0), abs(v[:, 0] @ d0))
        got = tuple(abs(c) for c in sched.nonadiabatic(s))
        assert np.allclose(got, ref, atol=1e-7)


def test_frozen_schedule_has_no_transitions():
    sched = B.ThreeLevelSchedule(0.5, frozen=True)
    assert B.transition_amplitude_numeric(sched, 100.0) == (0.0, 0.0)
    assert B.messiah_bound(sched, 100.0) == (0.0, 0.0)


@pytest.mark.parametrize("D", [0.0, 0.5])
def test_filon_matches_ode(D):
    sched = B.ThreeLevelSchedule(1.0, D=D)
    for T in (20.0, 60.0):
        f = B.transition_amplitude_numeric(sched, T, rtol=1e-8)
        o = B.transition_amplitude_numeric(sched, T, method="ode")
        assert np.allclose(f, o, rtol=1e-5, atol=1e-14)


def test_messiah_dominates_numeric():
    sched = B.ThreeLevelSchedule(0.05, D=0.1)
    for T in (2e3, 1e4, 5e4):
        num = B.transition_amplitude_numeric(sched, T)
        bound = B.messiah_bound(sched, T)
        assert all(n <= b for n, b in zip(num, bound))


def test_population_bound_conventions():
    b = B.adiabatic_population_bound(0.01, 1e4, 0.15, 0.15)
    assert b.appendix == pytest.approx(b.main_text / 2)
    b2 = B.adiabatic_population_bound(0.01, 2e4, 0.15, 0.15)
    assert b2.main_text == pytest.approx(b.main_text / 4)
    assert (b.d_prefactor_plus, b.d_prefactor_minus) == (1.0, 1.0)
    plus, minus = B.d_prefactor(0.5, 1.0)
    assert plus < 1.0 < minus
    with pytest.raises(ValueError):
        B.adiabatic_population_bound(0.0, 1.0, 0.1, 0.1)


def test_omega_tilde_regimes():
    w1, w2, g = 0.03, 0.04, 1.0
    res = B.omega_tilde(B.RESONANT, w1, w2, g)
    far = B.omega_tilde(B.FAR_DETUNED, w1, w2, g, Delta=10.0)
    assert far == pytest.approx(res**2 / 10.0)
    assert B.omega_tilde(B.RESONANT, 0.0, 0.0, g) == 0.0
    with pytest.raises(ValueError):
        B.omega_tilde(B.FAR_DETUNED, w1, w2, g)
    with pytest.raises(ValueError):
        B.omega_tilde("sideways", w1, w2, g)


def test_transfer_windows():
    p = SchemeParams(gamma=0.01, kappa=0.01)
    w = B.transfer_time_window("optical", p, alpha=1.0)
    assert not w.empty and w.contains(p.T)
    # tightening every inequality by alpha^2 eventually closes the window
    assert B.transfer_time_window("optical", p, alpha=1e3).empty
    lossless = B.transfer_time_window("modified_optical", SchemeParams(Delta=10.0))
    assert lossless.T_min == 0.0 and lossless.T_max == math.inf
    with pytest.raises(ValueError):
        B.transfer_time_window("optical_effective", p)


def test_report_rows():
    p = SchemeParams(Delta=10.0, T=2e5)
    rows = B.population_bound_reports("motional", p, 1e-3)
    assert [r.bound for r in rows] == ["p1ph_appendix", "p1ph_main_text"]
    assert rows[0].row()["satisfied"] == (1e-3 <= rows[0].analytic)
    mes = B.messiah_reports("motional", p)
    assert [r.tag for r in mes] == ["messiah", "messiah"]
    with pytest.raises(ValueError):
        B.scheme_coupling("optical", p)
