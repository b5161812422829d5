"""Quick invariant suite behind ``holoqc check``.

Each check returns ``(passed, detail)``; the whole suite runs in well under a
minute at reduced sizes.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import bounds as B
from . import holonomy as H
from . import lambda_system as L
from . import schemes as S
from .evolver import evolve


def check_dark_states():
    worst = 0.0
    for scheme, kw in [("optical", {}), ("optical_effective", {"Delta": 10.0}),
                       ("modified_optical", {"Delta": 10.0, "kappa": 0.1}), ("motional", {"Delta": 10.0, "kappa": 0.1})]:
        p = S.SchemeParams(**kw)
        _, h = S.build(scheme, p)
        for t in np.linspace(0.1, 0.9, 5) * p.T:
            w1, w2 = p.pulses["omega1"](t), p.pulses["omega2"](t)
            v = S.scheme_dark_state(scheme, w1, w2, params=p)
            ht = h(t)
            worst = max(worst, np.linalg.norm(ht @ v) / max(1.0, np.linalg.norm(ht, 2)))
    return worst < 1e-10, f"max |H psi_dark| / |H| = {worst:.3g}"


def check_excitation_conservation():
    p = S.SchemeParams(Delta=10.0, T=2e5)
    sys, h = S.build("motional", p)
    n = sum(sys.embed({lbl: np.diag(np.arange(sys.factor(lbl).dim)).astype(complex)}) for lbl in ("cm1", "cm2", "cav"))
    r = evolve(h, S.encode_word("motional", sys, (1, 0)), p.T, projectors={"n": np.real(np.diag(n))})
    var = float(np.var(r.populations["n"]))
    return var < 1e-9, f"variance of total excitation number = {var:.3g}"


def check_connection():
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in (3, 5):
        for _ in range(3):
            p = L.random_params(n, rng)
            a = L.analytic_connection(p)
            b = L.numeric_connection(p, chart=L.ANALYTIC)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-8, f"analytic vs finite-difference connection: {worst:.3g}"


def check_stokes():
    worst = 0.0
    for kind in ("Ry", "Rz"):
        u = H.path_ordered_holonomy(H.synthesize_loop(kind, math.pi / 2)).unitary
        worst = max(worst, float(np.max(np.abs(u - H.gate_unitary(kind, math.pi / 2)))))
    return worst < 1e-4, f"holonomy vs exp(angle K) at pi/2: {worst:.3g}"


def check_phase_gate():
    u = H.path_ordered_holonomy(H.synthesize_loop("Phase4", math.pi)).unitary
    off = float(np.max(np.abs(u - np.diag(np.diag(u)))))
    diag = float(np.max(np.abs(np.diag(u) - [1, 1, 1, -1])))
    return off < 1e-6 and diag < 1e-4, f"off-diagonal {off:.3g}, diagonal error {diag:.3g}"


def check_rank():
    rng = np.random.default_rng(11)
    r3 = L.holonomy_rank_lower_bound([L.random_params(3, rng) for _ in range(10)])
    return r3 >= 4, f"N=3 rank lower bound {r3}"


def check_ordering():
    p = S.SchemeParams(T=5000.0)
    f_ci = S.run_transfer("optical", p).fidelity
    f_i = S.run_transfer("optical", p.with_(order="intuitive")).fidelity
    return f_ci > f_i, f"optical counterintuitive {f_ci:.6f} vs intuitive {f_i:.6f}"


def check_norm_decay():
    r = S.run_transfer("optical", S.SchemeParams(T=3000.0, gamma=0.01, kappa=0.01), keep_evolution=True)
    d = np.diff(r.evolution.norm_sq)
    return bool(np.all(d <= 1e-12)), f"largest norm increase {float(d.max()):.3g}"


def check_encoding():
    ok = all(len(set(t.values())) == len(t) for t in (S.ATOM1_LOGICAL, S.ATOM2_LOGICAL, S.TWO_QUBIT_LOGICAL))
    return ok, "logical tables are bijections"


def check_kappa_condition():
    v = B.kappa_condition_optical(1.0, 1.0, 1.0, 0.05, 0.15, 0.15)
    ref = 1 / (1 + 800 * math.e**2)
    return abs(v - ref) < 1e-15, f"kappa T P_1ph = {v:.6g}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "dark_state_annihilation": check_dark_states,
    "excitation_conservation": check_excitation_conservation,
    "connection_exactness": check_connection,
    "stokes_agreement": check_stokes,
    "phase_gate_selectivity": check_phase_gate,
    "holonomy_rank": check_rank,
    "counterintuitive_ordering": check_ordering,
    "norm_non_increasing": check_norm_decay,
    "encoding_bijection": check_encoding,
    "kappa_condition": check_kappa_condition,
}


def run_checks() -> list[dict]:
    rows = []
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as e:  # a crash is a failed invariant, reported not raised
            ok, detail = False, f"{type(e).__name__}: {e}"
        rows.append({"invariant": name, "passed": bool(ok), "detail": detail})
    return rows
