"""Scenario files and the runners behind each CLI mode.

A scenario is one JSON object.  Keys by mode:

gate      gate_kind + angle, or target (2x2 as [[[re, im], ...], ...]), or loop (path to a loop file);
          n_steps, loop_out (optional path to save the loop)
transfer  scheme, params, word, target_word
sweep     schemes, params, gammas, kappas
bounds    schemes, params, Deltas, GT (multiples of 1/G) or Ts
check     (no keys)

``params`` holds SchemeParams fields and may be keyed by scheme name.
Relative paths resolve against the scenario file's directory.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import bounds as B
from . import holonomy as H
from . import schemes as S
from .report import content_hash

MODES = ("gate", "transfer", "sweep", "bounds", "check")

# Fixed process times for the (gamma, kappa) sweeps.  The optical value sits
# inside the unscaled window at gamma = kappa = 0.01; the motional window is
# empty there, and its value lies above the kappa-side lower limit.
SWEEP_DEFAULTS = {
    "optical": {"Delta": 0.0, "T": 5.0e4},
    "motional": {"Delta": 10.0, "eta": 0.1, "T": 1.0e7},
    "modified_optical": {"Delta": 10.0, "T": 4.0e6},
    "optical_effective": {"Delta": 10.0, "T": 4.0e6},
    "motional_full": {"Delta": 10.0, "eta": 0.1, "T": 1.0e6},
}

TRANSFER_COLUMNS = (
    "scheme", "gamma", "kappa", "Delta", "Omega", "eta", "T",
    "fidelity", "max_p1ph", "int_p1ph", "int_pe", "norm_loss",
)
GATE_COLUMNS = ("kind", "angle", "stokes_angle", "discrepancy", "discretization_error", "i", "j", "re", "im")
# Default G T multiples per scheme.  The effective optical gap is G_eff^2 / D
# rather than G, so those schemes need far longer runs to be adiabatic.
BOUND_GT = {
    "motional": (200.0, 400.0, 800.0),
    "modified_optical": (1.0e4, 2.0e4, 4.0e4),
    "optical_effective": (1.0e4, 2.0e4, 4.0e4),
}
BOUND_COLUMNS = ("scheme", "bound", "tag", "T", "Delta", "analytic", "observed", "satisfied")


class ScenarioError(ValueError):
    pass


_PARAM_FIELDS = {f.name for f in fields(S.SchemeParams)}


@dataclass
class Scenario:
    mode: str
    data: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    tol: Optional[float] = None

    @property
    def digest(self) -> str:
        return content_hash({"mode": self.mode, "data": self.data, "tol": self.tol})

    def path(self, key: str) -> Optional[Path]:
        v = self.data.get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p

    def params_for(self, scheme: str, **overrides) -> S.SchemeParams:
        raw = dict(SWEEP_DEFAULTS.get(scheme, {}))
        given = self.data.get("params", {})
        if not isinstance(given, dict):
            raise ScenarioError("params must be an object")
        shared = {k: v for k, v in given.items() if k in _PARAM_FIELDS}
        scoped = given.get(scheme, {})
        unknown = set(given) - _PARAM_FIELDS - set(S.SCHEMES)
        if unknown:
            raise ScenarioError(f"unknown params {sorted(unknown)}")
        raw.update(shared)
        raw.update(scoped)
        raw.update(overrides)
        try:
            return S.SchemeParams(**raw)
        except TypeError as e:
            raise ScenarioError(str(e)) from None


def parse_scenario(obj: dict, base_dir: Path = Path("."), mode: Optional[str] = None) -> Scenario:
    if not isinstance(obj, dict):
        raise ScenarioError("scenario must be a JSON object")
    m = obj.get("mode", mode)
    if m not in MODES:
        raise ScenarioError(f"mode must be one of {MODES}")
    if mode is not None and m != mode:
        raise ScenarioError(f"scenario is for mode {m!r}, not {mode!r}")
    data = {k: v for k, v in obj.items() if k not in ("mode", "tol")}
    sc = Scenario(m, data, base_dir, obj.get("tol"))
    validate(sc)
    return sc


def load_scenario(path, mode: Optional[str] = None) -> Scenario:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: {e}") from None
    return parse_scenario(obj, path.parent, mode)


def validate(sc: Scenario) -> None:
    d = sc.data
    for key in ("loop",):
        p = sc.path(key)
        if p is not None and not p.exists():
            raise ScenarioError(f"referenced file {p} does not exist")
    if sc.mode == "sweep":
        for axis in ("gammas", "kappas"):
            vals = d.get(axis, [0.0])
            if not vals or any(v < 0 for v in vals):
                raise ScenarioError(f"{axis} must be a nonempty list of non-negative rates")
    if sc.mode in ("transfer",):
        if d.get("scheme", "optical") not in S.SCHEMES + ("three_step_swap",):
            raise ScenarioError(f"unknown scheme {d.get('scheme')!r}")
    if sc.mode in ("sweep", "bounds"):
        for s in d.get("schemes", []):
            if s not in S.SCHEMES:
                raise ScenarioError(f"unknown scheme {s!r}")
    if sc.mode == "gate":
        given = [k for k in ("gate_kind", "target", "loop") if k in d]
        if len(given) > 1:
            raise ScenarioError("give exactly one of gate_kind, target, loop")
        if d.get("gate_kind", "Ry") not in H.GATE_CHARTS:
            raise ScenarioError(f"unknown gate kind {d.get('gate_kind')!r}")


# --- gate -------------------------------------------------------------------------------

def _matrix(raw) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in raw])
    except (TypeError, ValueError):
        raise ScenarioError("target must be [[[re, im], ...], ...]") from None


def run_gate(sc: Scenario) -> list[dict]:
    """Holonomy of the requested loop with its Stokes angle and distance to the target.

    For a named gate the distance is exact; for a target unitary it is taken
    up to a global phase; for a loop file it is measured against the Stokes
    prediction of the loop's gate chart.
    """
    d = sc.data
    n_steps = int(d.get("n_steps", 10_000))
    kind, angle, stokes = None, math.nan, math.nan
    if "loop" in d:
        loop = H.LoopPath.from_dict(json.loads(sc.path("loop").read_text(encoding="utf-8")))
        try:
            kind = H.identify_chart(loop)
        except ValueError:
            kind = None
    elif "target" in d:
        target = _matrix(d["target"])
        loop = H.compose_gate_loop(target, n_steps)
    else:
        kind = d.get("gate_kind", "Ry")
        angle = float(d.get("angle", math.pi / 2))
        loop = H.synthesize_loop(kind, angle, n_steps)
    res = H.path_ordered_holonomy(loop)
    u = res.unitary
    if kind is not None:
        stokes = H.surface_integral_angle(loop, kind)
    if "target" in d:
        disc = H.phase_insensitive_distance(u, target)
    elif "loop" in d:
        disc = math.nan if kind is None else float(np.max(np.abs(u - H.stokes_unitary(kind, stokes))))
    else:
        disc = float(np.max(np.abs(u - H.gate_unitary(kind, angle))))
    out = sc.path("loop_out")
    if out is not None:
        out.write_text(json.dumps(loop.to_dict(), indent=1) + "\n", encoding="utf-8")
    return [
        {
            "kind": kind or "composite",
            "angle": angle,
            "stokes_angle": stokes,
            "discrepancy": disc,
            "discretization_error": res.discretization_error_estimate,
            "i": i, "j": j, "re": float(z.real), "im": float(z.imag),
        }
        for (i, j), z in np.ndenumerate(u)
    ]


# --- transfer and sweep ------------------------------------------------------------------

def transfer_row(scheme: str, p: S.SchemeParams, r) -> dict:
    row = {"scheme": scheme, "gamma": p.gamma, "kappa": p.kappa, "Delta": p.Delta, "Omega": p.omega,
           "eta": p.eta, "T": p.T}
    row.update(r.row())
    return row


def _transfer_job(args):
    scheme, params, word, target_word, tol = args
    if scheme == "three_step_swap":
        r = S.three_step_swap(params, tuple(word or (1, 0)), tol=tol or 1e-9)
        return transfer_row(scheme, params, _SwapRow(r))
    r = S.run_transfer(scheme, params, word=word and tuple(word),
                       target_word=target_word and tuple(target_word), tol=tol)
    return transfer_row(scheme, params, r)


@dataclass
class _SwapRow:
    r: S.SwapResult

    def row(self) -> dict:
        return {"fidelity": self.r.fidelity, "max_p1ph": self.r.max_p1ph, "int_p1ph": math.nan,
                "int_pe": math.nan, "norm_loss": self.r.norm_loss}


def run_transfer_mode(sc: Scenario) -> list[dict]:
    d = sc.data
    scheme = d.get("scheme", "optical")
    params = sc.params_for("motional" if scheme == "three_step_swap" else scheme)
    return [_transfer_job((scheme, params, d.get("word"), d.get("target_word"), sc.tol))]


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def sweep(sc: Scenario, workers: int = 1) -> list[dict]:
    """One row per (scheme, gamma, kappa), sorted regardless of completion order."""
    d = sc.data
    schemes = d.get("schemes") or [d.get("scheme", "optical")]
    gammas = [float(g) for g in d.get("gammas", [0.0])]
    kappas = [float(k) for k in d.get("kappas", [0.0])]
    jobs = []
    for s in schemes:
        for g in gammas:
            for k in kappas:
                jobs.append((s, sc.params_for(s, gamma=g, kappa=k), None, None, sc.tol))
    rows = _map(_transfer_job, jobs, workers)
    order = {s: i for i, s in enumerate(schemes)}
    return sorted(rows, key=lambda r: (order[r["scheme"]], r["gamma"], r["kappa"]))


# --- bounds ------------------------------------------------------------------------------

def _bounds_job(args):
    scheme, p, tol = args
    r = S.run_transfer(scheme, p, tol=tol)
    reps = B.population_bound_reports(scheme, p, r.max_p1ph) + B.messiah_reports(scheme, p)
    return [dict(rep.row(), T=p.T, Delta=p.Delta) for rep in reps]


def bound_grid(sc: Scenario) -> list[tuple[str, S.SchemeParams]]:
    d = sc.data
    schemes = d.get("schemes", ["motional", "modified_optical"])
    deltas = [float(x) for x in d.get("Deltas", [10.0, 20.0, 40.0])]
    out = []
    for s in schemes:
        for D in deltas:
            base = sc.params_for(s, Delta=D, gamma=0.0, kappa=0.0)
            G, _ = B.scheme_coupling(s, base)
            Ts = d.get("Ts") or [k / G for k in d.get("GT", BOUND_GT.get(s, (200.0, 400.0, 800.0)))]
            out += [(s, base.with_(T=float(T))) for T in Ts]
    return out


def run_bounds(sc: Scenario, workers: int = 1) -> list[dict]:
    jobs = [(s, p, sc.tol) for s, p in bound_grid(sc)]
    rows = [row for chunk in _map(_bounds_job, jobs, workers) for row in chunk]
    for s in dict.fromkeys(s for s, _ in bound_grid(sc)):
        p = sc.params_for(s)
        w = B.transfer_time_window(s, p, float(sc.data.get("alpha", 10.0)))
        rows.append({"scheme": s, "bound": "window_T_min", "tag": "window", "T": p.T, "Delta": p.Delta,
                     "analytic": w.T_min, "observed": p.T, "satisfied": w.T_min <= p.T})
        rows.append({"scheme": s, "bound": "window_T_max", "tag": "window", "T": p.T, "Delta": p.Delta,
                     "analytic": w.T_max, "observed": p.T, "satisfied": p.T <= w.T_max})
    return rows
