"""Rotating-frame Hamiltonians for the two-atom state-transfer schemes.

Schemes
-------
optical            three-level atoms {g1, g3, e1} x2 plus the cavity mode
optical_effective  excited states eliminated, Stark shifts kept
modified_optical   excited states eliminated, Stark shift of g1 compensated
motional_full      two-level atoms {g3, e1} x2, motional modes and cavity
motional           internal states eliminated: motional modes and cavity only

Every builder returns ``(CompositeSystem, TimeDependentOperator)``.  Pulse
amplitudes are real.  Frequencies are in units of g.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .evolver import (
    CompositeSystem,
    Factor,
    PulseSchedule,
    TimeDependentOperator,
    evolve,
    fidelity_and_populations,
    fock,
)

SCHEMES = ("optical", "optical_effective", "modified_optical", "motional_full", "motional")
RWA_NU_THRESHOLD = 20.0
ORDERS = ("counterintuitive", "intuitive")
# forward moves the excitation from atom 1 to atom 2
DIRECTIONS = ("forward", "reverse")

# Fig. 3 logical tables
ATOM1_LOGICAL = {"g3": 0, "g1": 1}
ATOM2_LOGICAL = {"g3": 0, "g4": 1, "g1": 2, "g2": 3}
# single five-level atom encoding of two qubits
TWO_QUBIT_LOGICAL = {"g1": "00", "g2": "01", "g3": "10", "g4": "11"}


class EncodingError(ValueError):
    pass


class SchemeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SchemeParams:
    g: float = 1.0
    Delta: float = 0.0
    gamma: float = 0.0
    kappa: float = 0.0
    eta: float = 0.1
    nu: float = 50.0
    omega: float = 0.05
    T: float = 3000.0
    a: float = 0.15
    tau: float = 0.15
    cav_cutoff: int = 2
    cm_cutoff: int = 2
    counter_rotating: Optional[bool] = None
    order: str = "counterintuitive"
    direction: str = "forward"

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("g must be positive")
        if self.gamma < 0 or self.kappa < 0:
            raise ValueError("decay rates must be non-negative")
        if self.eta < 0:
            raise ValueError("Lamb-Dicke parameter must be non-negative")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")

    @property
    def pulses(self) -> PulseSchedule:
        """Counterintuitive order drives the receiving atom first."""
        receiver, sender = ("omega2", "omega1") if self.direction == "forward" else ("omega1", "omega2")
        s = PulseSchedule.counterintuitive(self.omega, self.T, self.a, self.tau, early=receiver, late=sender)
        return s.swapped() if self.order == "intuitive" else s

    @property
    def keep_counter_rotating(self) -> bool:
        if self.counter_rotating is None:
            return self.nu < RWA_NU_THRESHOLD
        return self.counter_rotating

    def effective_regime_ok(self, motional: bool) -> bool:
        scale = max(self.omega, self.eta * self.g) if motional else max(self.omega, self.g)
        return self.Delta >= 5 * scale

    def check(self, scheme: str) -> list[str]:
        """Regime warnings for ``scheme`` (also emitted as SchemeWarning)."""
        out = []
        if scheme.startswith("motional") and self.eta > 0.3:
            out.append(f"eta={self.eta} is outside the Lamb-Dicke regime")
        if scheme in ("motional", "motional_full") and not self.effective_regime_ok(True):
            out.append("Delta < 5 max(Omega, eta g): effective motional model unreliable")
        if scheme in ("optical_effective", "modified_optical") and not self.effective_regime_ok(False):
            out.append("Delta < 5 max(Omega, g): adiabatic elimination unreliable")
        for msg in out:
            warnings.warn(msg, SchemeWarning, stacklevel=2)
        return out

    def with_(self, **kw) -> "SchemeParams":
        return replace(self, **kw)


def _atom(label: str, levels=("g1", "g3", "e1")) -> Factor:
    return Factor(label, tuple(levels))


def _cdiv(num, Delta, gamma):
    return num / complex(Delta, gamma)


def build_optical(params: SchemeParams):
    """H = sum_i [-(Delta + i gamma)|e1><e1| + Omega_i(|e1><g1| + h.c.) + g(b|e1><g3| + h.c.)] - i kappa b^dag b."""
    p = params
    sys = CompositeSystem((_atom("atom1"), _atom("atom2"), fock("cav", p.cav_cutoff)))
    b = sys.annihilation("cav")
    static = -1j * p.kappa * sys.embed({"cav": b.conj().T @ b})
    h = TimeDependentOperator(static)
    for i, atom in ((1, "atom1"), (2, "atom2")):
        ee = sys.ket_bra(atom, "e1", "e1")
        static += -(p.Delta + 1j * p.gamma) * sys.embed({atom: ee})
        jc = sys.embed({atom: sys.ket_bra(atom, "e1", "g3"), "cav": b})
        static += p.g * (jc + jc.conj().T)
        laser = sys.embed({atom: sys.ket_bra(atom, "e1", "g1")})
        h.add(p.pulses[f"omega{i}"], laser + laser.conj().T)
    return sys, h


def _effective_optical(params: SchemeParams, compensated: bool):
    p = params
    sys = CompositeSystem((_atom("atom1", ("g1", "g3")), _atom("atom2", ("g1", "g3")), fock("cav", p.cav_cutoff)))
    b = sys.annihilation("cav")
    nb = b.conj().T @ b
    static = -1j * p.kappa * sys.embed({"cav": nb})
    h = TimeDependentOperator(static)
    den = complex(p.Delta, p.gamma)
    for i, atom in ((1, "atom1"), (2, "atom2")):
        pulse = p.pulses[f"omega{i}"]
        g1g1 = sys.embed({atom: sys.ket_bra(atom, "g1", "g1")})
        static += (p.g**2 / den) * sys.embed({atom: sys.ket_bra(atom, "g3", "g3"), "cav": nb})
        hop = sys.embed({atom: sys.ket_bra(atom, "g3", "g1"), "cav": b.conj().T})
        h.add(lambda t, f=pulse: p.g * f(t) / den, hop + hop.conj().T)
        if compensated:
            rate = -2j * p.gamma / (p.Delta**2 + p.gamma**2) if (p.Delta or p.gamma) else 0.0
            h.add(lambda t, f=pulse, r=rate: r * f(t) ** 2, g1g1)
        else:
            h.add(lambda t, f=pulse: f(t) ** 2 / den, g1g1)
    return sys, h


def build_optical_effective(params: SchemeParams):
    """Two-level atoms {g1, g3} after eliminating e1; Stark shift of g1 retained."""
    return _effective_optical(params, compensated=False)


def build_modified_optical(params: SchemeParams):
    """Two-level effective model with the real Stark shift of g1 cancelled and its decay doubled."""
    return _effective_optical(params, compensated=True)


def build_motional_full(params: SchemeParams):
    """Internal {g3, e1} x2, motional modes cm1, cm2 and cavity, before elimination.

    The counter-rotating sideband ``eta g a b e^{-2 i nu t}|e1><g3|`` is kept
    when ``params.keep_counter_rotating``.
    """
    p = params
    sys = CompositeSystem(
        (
            _atom("atom1", ("g3", "e1")),
            _atom("atom2", ("g3", "e1")),
            fock("cm1", p.cm_cutoff),
            fock("cm2", p.cm_cutoff),
            fock("cav", p.cav_cutoff),
        )
    )
    b = sys.annihilation("cav")
    static = -1j * p.kappa * sys.embed({"cav": b.conj().T @ b})
    h = TimeDependentOperator(static)
    for i, atom in ((1, "atom1"), (2, "atom2")):
        cm = f"cm{i}"
        a = sys.annihilation(cm)
        eg = sys.ket_bra(atom, "e1", "g3")
        static += -(p.Delta + 1j * p.gamma) * sys.embed({atom: sys.ket_bra(atom, "e1", "e1")})
        side = p.eta * p.g * sys.embed({atom: eg, cm: a.conj().T, "cav": b})
        static += side + side.conj().T
        laser = sys.embed({atom: eg})
        h.add(p.pulses[f"omega{i}"], laser + laser.conj().T)
        if p.keep_counter_rotating:
            cr = p.eta * p.g * sys.embed({atom: eg, cm: a, "cav": b})
            h.add(lambda t: np.exp(-2j * p.nu * t), cr)
            h.add(lambda t: np.exp(2j * p.nu * t), cr.conj().T)
    return sys, h


def build_motional_effective(params: SchemeParams, sideband_shift: bool = False):
    """Motional modes and cavity only: eta g Omega_i/(Delta + i gamma)(a_i b^dag + h.c.) - i kappa b^dag b
    - i gamma Omega_i^2/(Delta^2 + gamma^2).

    ``sideband_shift`` adds the second-order-in-eta light shift
    (eta g)^2/(Delta + i gamma) a_i a_i^dag b^dag b that the first-order
    elimination drops.  It is a diagnostic, off by default.
    """
    p = params
    sys = CompositeSystem((fock("cm1", p.cm_cutoff), fock("cm2", p.cm_cutoff), fock("cav", p.cav_cutoff)))
    b = sys.annihilation("cav")
    static = -1j * p.kappa * sys.embed({"cav": b.conj().T @ b})
    h = TimeDependentOperator(static)
    den = complex(p.Delta, p.gamma)
    ident = np.eye(sys.dim, dtype=complex)
    for i in (1, 2):
        pulse = p.pulses[f"omega{i}"]
        a = sys.annihilation(f"cm{i}")
        hop = sys.embed({f"cm{i}": a, "cav": b.conj().T})
        h.add(lambda t, f=pulse: p.eta * p.g * f(t) / den, hop + hop.conj().T)
        if p.gamma:
            h.add(lambda t, f=pulse: -1j * p.gamma * f(t) ** 2 / (p.Delta**2 + p.gamma**2), ident)
        if sideband_shift:
            static += (p.eta * p.g) ** 2 / den * sys.embed({f"cm{i}": a @ a.conj().T, "cav": b.conj().T @ b})
        if p.keep_counter_rotating:
            pair = sys.embed({f"cm{i}": a.conj().T, "cav": b.conj().T})
            h.add(lambda t, f=pulse: p.eta * p.g * f(t) / den * np.exp(2j * p.nu * t), pair)
            h.add(lambda t, f=pulse: p.eta * p.g * f(t) / den * np.exp(-2j * p.nu * t), pair.conj().T)
    return sys, h


BUILDERS = {
    "optical": build_optical,
    "optical_effective": build_optical_effective,
    "modified_optical": build_modified_optical,
    "motional_full": build_motional_full,
    "motional": build_motional_effective,
}


def build(scheme: str, params: SchemeParams):
    try:
        return BUILDERS[scheme](params)
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}") from None


# --- dark states and logical states ----------------------------------------------------

def _motional_basis(sys: CompositeSystem, n1: int, n2: int, m: int) -> np.ndarray:
    levels = {"cm1": n1, "cm2": n2, "cav": m}
    for f in sys.factors:
        if f.label.startswith("atom"):
            levels[f.label] = "g3"
    return sys.basis(**levels)


def scheme_dark_state(scheme: str, omega1: float, omega2: float, g: float = 1.0,
                      params: Optional[SchemeParams] = None) -> np.ndarray:
    """Normalized instantaneous dark state of ``scheme`` in its labelled basis."""
    if omega1 == 0 and omega2 == 0:
        raise ValueError("dark state undefined with both couplings off")
    p = params or SchemeParams(g=g)
    sys, _ = build(scheme, p)
    if scheme in ("optical", "optical_effective"):
        v = (
            g * omega2 * sys.basis(atom1="g1", atom2="g3", cav=0)
            + g * omega1 * sys.basis(atom1="g3", atom2="g1", cav=0)
            - omega1 * omega2 * sys.basis(atom1="g3", atom2="g3", cav=1)
        )
    elif scheme == "modified_optical":
        v = omega2 * sys.basis(atom1="g1", atom2="g3", cav=0) - omega1 * sys.basis(atom1="g3", atom2="g1", cav=0)
    elif scheme in ("motional", "motional_full"):
        v = omega2 * _motional_basis(sys, 1, 0, 0) - omega1 * _motional_basis(sys, 0, 1, 0)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return v / np.linalg.norm(v)


def _inverse(table: dict) -> dict:
    return {v: k for k, v in table.items()}


def encode_word(scheme: str, sys: CompositeSystem, word: tuple[int, int]) -> np.ndarray:
    """Basis state for logical (atom1, atom2) word in a scheme's state space.

    Optical schemes model only the {g1, g3} sub-system, so atom-2 words 1 and 3
    (levels g4, g2) are not representable.  Motional schemes represent the
    state after the internal-to-motional swap: a single phonon in the mode of
    the atom holding the excitation.
    """
    w1, w2 = word
    try:
        l1 = _inverse(ATOM1_LOGICAL)[w1]
        l2 = _inverse(ATOM2_LOGICAL)[w2]
    except KeyError:
        raise EncodingError(f"word {word} is not in the logical tables") from None
    if scheme in ("motional", "motional_full"):
        if (l1, l2) == ("g3", "g3"):
            return _motional_basis(sys, 0, 0, 0)
        if (l1, l2) == ("g1", "g3"):
            return _motional_basis(sys, 1, 0, 0)
        if (l1, l2) == ("g3", "g1"):
            return _motional_basis(sys, 0, 1, 0)
        raise EncodingError(f"word {word} has no motional representation")
    levels1 = sys.factor("atom1").levels
    levels2 = sys.factor("atom2").levels
    if l1 not in levels1 or l2 not in levels2:
        raise EncodingError(f"word {word} needs a level outside the modelled sub-system")
    return sys.basis(atom1=l1, atom2=l2, cav=0)


def transfer_target(word: tuple[int, int], direction: str = "forward") -> tuple[int, int]:
    """Forward: |a>_1 |b>_2 -> |0>_1 |2a + b>_2.  Reverse is its inverse."""
    w1, w2 = word
    if w1 not in (0, 1) or w2 not in (0, 1, 2, 3):
        raise EncodingError(f"word {word} is not in the logical tables")
    if direction == "reverse":
        if w1 == 1:
            raise EncodingError(f"atom 1 is occupied in {word}")
        return (1, w2 - 2) if w2 >= 2 else (0, w2)
    if w1 == 0:
        return (0, w2)
    if w2 > 1:
        raise EncodingError(f"atom 2 already holds a two-bit word in {word}")
    return (0, 2 + w2)


# --- projectors ----------------------------------------------------------------------

def scheme_projectors(scheme: str, sys: CompositeSystem) -> dict:
    names = [f.label for f in sys.factors]
    proj = {"p1ph": sys.mask(lambda l: l["cav"] >= 1)}
    if "atom1" in names and "e1" in sys.factor("atom1").levels:
        proj["pe"] = sys.mask(lambda l: l.get("atom1") == "e1" or l.get("atom2") == "e1")
    else:
        proj["pe"] = np.zeros(sys.dim)
    if "cm1" in names:
        proj["cm1"] = sys.mask(lambda l: l["cm1"] >= 1)
        proj["cm2"] = sys.mask(lambda l: l["cm2"] >= 1)
    return proj


# the full models oscillate at g or Delta while the pulses vary on T: exponential steps
# Optical models oscillate at g or 2g^2/Delta over runs of up to ~1e6 periods; the
# batched fixed-grid Magnus method handles them with a global error check.  The
# 32-dimensional full motional model is too large to batch and uses adaptive Magnus.
INTEGRATORS = {
    "optical": "magnus4_grid",
    "optical_effective": "magnus4_grid",
    "modified_optical": "magnus4_grid",
    "motional_full": "magnus4",
    "motional": "rk45",
}
STIFF_SCHEMES = tuple(s for s, m in INTEGRATORS.items() if m != "rk45")
DEFAULT_TOLS = {"rk45": 1e-9, "magnus4": 1e-7, "magnus4_grid": 1e-5}


def integrator_for(scheme: str) -> str:
    return INTEGRATORS.get(scheme, "rk45")


def default_tol(scheme: str) -> float:
    return DEFAULT_TOLS[integrator_for(scheme)]


@dataclass
class TransferResult:
    scheme: str
    fidelity: float
    max_p1ph: float
    int_p1ph: float
    int_pe: float
    max_pe: float
    norm_loss: float
    wallclock: float
    evolution: object = field(default=None, repr=False)

    def row(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "max_p1ph": self.max_p1ph,
            "int_p1ph": self.int_p1ph,
            "int_pe": self.int_pe,
            "norm_loss": self.norm_loss,
        }


def default_word(direction: str) -> tuple[int, int]:
    return (1, 0) if direction == "forward" else (0, 2)


def run_transfer(scheme: str, params: SchemeParams, word: Optional[tuple[int, int]] = None,
                 tol: Optional[float] = None, target_word: Optional[tuple[int, int]] = None,
                 keep_evolution: bool = False) -> TransferResult:
    """Encode ``word``, evolve under the pulse pair and score the target word."""
    tol = default_tol(scheme) if tol is None else tol
    word = tuple(word) if word is not None else default_word(params.direction)
    sys, h = build(scheme, params)
    psi0 = encode_word(scheme, sys, word)
    target = encode_word(scheme, sys, target_word or transfer_target(word, params.direction))
    proj = scheme_projectors(scheme, sys)
    t0 = time.perf_counter()
    r = evolve(h, psi0, params.T, tol=tol, projectors=proj, method=integrator_for(scheme))
    wall = time.perf_counter() - t0
    rep = fidelity_and_populations(r, target)
    return TransferResult(
        scheme,
        rep.fidelity,
        rep.maxima["p1ph"],
        rep.integrals["p1ph"],
        rep.integrals["pe"],
        rep.maxima["pe"],
        1.0 - r.final_norm_sq,
        wall,
        r if keep_evolution else None,
    )


# --- three-step swap -----------------------------------------------------------------

@dataclass
class SwapResult:
    fidelity: float
    step_fidelities: list
    max_p1ph: float
    max_pe: float
    norm_loss: float
    final_state: np.ndarray
    system: CompositeSystem
    wallclock: float


def swap_system(params: SchemeParams) -> CompositeSystem:
    return CompositeSystem(
        (
            _atom("atom1"),
            _atom("atom2"),
            fock("cm1", params.cm_cutoff),
            fock("cm2", params.cm_cutoff),
            fock("cav", params.cav_cutoff),
        )
    )


def sideband_stirap(sys: CompositeSystem, atom: str, mode: str, params: SchemeParams,
                    T: float, to_motion: bool) -> TimeDependentOperator:
    """Resonant Lambda passage |g1, n=0> <-> |e1, 0> <-> |g3, n=1> inside one atom.

    A carrier pulse drives g1-e1 and a red-sideband pulse eta Omega_s (a|e1><g3| + h.c.)
    drives e1-g3; the sideband peak is Omega/eta so both legs have peak Omega.
    The leg coupling to the empty target state is pulsed first.
    """
    p = params
    a = sys.annihilation(mode)
    early, late = ("side", "carrier") if to_motion else ("carrier", "side")
    sched = PulseSchedule.counterintuitive(p.omega, T, p.a, p.tau, early=early, late=late)
    static = -1j * p.gamma * sys.embed({atom: sys.ket_bra(atom, "e1", "e1")})
    h = TimeDependentOperator(static)
    carrier = sys.embed({atom: sys.ket_bra(atom, "e1", "g1")})
    side = sys.embed({atom: sys.ket_bra(atom, "e1", "g3"), mode: a})
    h.add(sched["carrier"], carrier + carrier.conj().T)
    h.add(sched["side"], side + side.conj().T)
    return h


def motional_step_operator(sys: CompositeSystem, params: SchemeParams) -> TimeDependentOperator:
    """Effective motional transfer (internal states spectators) embedded in the swap space."""
    p = params
    b = sys.annihilation("cav")
    static = -1j * p.kappa * sys.embed({"cav": b.conj().T @ b})
    h = TimeDependentOperator(static)
    den = complex(p.Delta, p.gamma)
    for i in (1, 2):
        pulse = p.pulses[f"omega{i}"]
        a = sys.annihilation(f"cm{i}")
        hop = sys.embed({f"cm{i}": a, "cav": b.conj().T})
        h.add(lambda t, f=pulse: p.eta * p.g * f(t) / den, hop + hop.conj().T)
        if p.gamma:
            h.add(lambda t, f=pulse: -1j * p.gamma * f(t) ** 2 / (p.Delta**2 + p.gamma**2),
                  np.eye(sys.dim, dtype=complex))
    return h


def three_step_swap(params: SchemeParams, word: tuple[int, int] = (1, 0), local_T: float = 5000.0,
                    tol: float = 1e-9) -> SwapResult:
    """Internal -> motion on atom 1, motional dark-state transfer, motion -> internal on atom 2."""
    sys = swap_system(params)
    w1, w2 = word
    l1 = _inverse(ATOM1_LOGICAL).get(w1)
    l2 = _inverse(ATOM2_LOGICAL).get(w2)
    if l1 is None or l2 not in ("g1", "g3"):
        raise EncodingError(f"word {word} not representable in the swap space")
    tw = transfer_target(word)
    t1 = _inverse(ATOM1_LOGICAL)[tw[0]]
    t2 = _inverse(ATOM2_LOGICAL)[tw[1]]
    psi = sys.basis(atom1=l1, atom2=l2, cm1=0, cm2=0, cav=0)
    target = sys.basis(atom1=t1, atom2=t2, cm1=0, cm2=0, cav=0)
    proj = {
        "p1ph": sys.mask(lambda l: l["cav"] >= 1),
        "pe": sys.mask(lambda l: l["atom1"] == "e1" or l["atom2"] == "e1"),
    }
    steps = [
        (sideband_stirap(sys, "atom1", "cm1", params, local_T, to_motion=True), local_T, "rk45",
         sys.basis(atom1="g3", atom2=l2, cm1=1 if l1 == "g1" else 0, cm2=0, cav=0)),
        (motional_step_operator(sys, params), params.T, "rk45",
         sys.basis(atom1="g3", atom2=l2, cm1=0, cm2=1 if l1 == "g1" else 0, cav=0)),
        (sideband_stirap(sys, "atom2", "cm2", params, local_T, to_motion=False), local_T, "rk45", target),
    ]
    t0 = time.perf_counter()
    step_fids, max1, maxe = [], 0.0, 0.0
    for h, T, method, step_target in steps:
        r = evolve(h, psi, T, tol=tol, projectors=proj, method=method, allow_subnormalized=True)
        psi = r.final_state
        step_fids.append(float(abs(np.vdot(step_target, psi)) ** 2))
        max1 = max(max1, float(r.populations["p1ph"].max()))
        maxe = max(maxe, float(r.populations["pe"].max()))
    return SwapResult(
        float(abs(np.vdot(target, psi)) ** 2),
        step_fids,
        max1,
        maxe,
        1.0 - float(np.vdot(psi, psi).real),
        psi,
        sys,
        time.perf_counter() - t0,
    )



# --- full vs effective -----------------------------------------------------------------

@dataclass
class EquivalenceReport:
    discrepancy: float
    per_projector: dict
    fidelity_full: float
    fidelity_effective: float


def effective_equivalence_report(full: str, effective: str, params: SchemeParams,
                                 T: Optional[float] = None, tol: Optional[float] = None,
                                 word: Optional[tuple[int, int]] = None) -> EquivalenceReport:
    """Sup over time and shared projectors of |P_full - P_eff| from matched initial words."""
    p = params if T is None else params.with_(T=T)
    rf = run_transfer(full, p, word=word, tol=tol, keep_evolution=True)
    re = run_transfer(effective, p, word=word, tol=tol, keep_evolution=True)
    pf, pe = rf.evolution.populations, re.evolution.populations
    shared = sorted(k for k in pf.keys() & pe.keys() if k != "pe")
    per = {k: float(np.max(np.abs(pf[k] - pe[k]))) for k in shared}
    return EquivalenceReport(max(per.values()), per, rf.fidelity, re.fidelity)
