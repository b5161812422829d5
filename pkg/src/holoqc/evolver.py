"""Time-dependent, generally non-Hermitian Schroedinger propagation.

States are never renormalized: under the no-jump evolution ``i dpsi/dt = H psi``
with dissipative ``-i gamma`` terms, the squared norm is the survival
probability and fidelities are taken on the unnormalized state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

DEFAULT_TOL = 1e-9
DEFAULT_GRID = 2001


class IntegrationError(RuntimeError):
    pass


# --- Hilbert space bookkeeping --------------------------------------------------

@dataclass(frozen=True)
class Factor:
    label: str
    levels: tuple

    @property
    def dim(self) -> int:
        return len(self.levels)


def fock(label: str, cutoff: int = 2) -> Factor:
    return Factor(label, tuple(range(cutoff)))


@dataclass(frozen=True)
class CompositeSystem:
    """Ordered tensor product of labelled factors; the first factor varies slowest."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        names = [f.label for f in self.factors]
        if len(set(names)) != len(names):
            raise ValueError("factor labels must be unique")

    @property
    def dim(self) -> int:
        return int(np.prod([f.dim for f in self.factors]))

    @property
    def labels(self) -> list[tuple]:
        return list(itertools.product(*(f.levels for f in self.factors)))

    def factor(self, label: str) -> Factor:
        for f in self.factors:
            if f.label == label:
                return f
        raise KeyError(label)

    def index(self, **levels) -> int:
        idx = 0
        for f in self.factors:
            idx = idx * f.dim + f.levels.index(levels[f.label])
        return idx

    def label(self, index: int) -> dict:
        out = {}
        for f in reversed(self.factors):
            index, r = divmod(index, f.dim)
            out[f.label] = f.levels[r]
        return dict(reversed(list(out.items())))

    def basis(self, **levels) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(**levels)] = 1.0
        return v

    def embed(self, ops: Mapping[str, np.ndarray]) -> np.ndarray:
        """Kronecker product with identities on factors not named in ``ops``."""
        out = np.ones((1, 1), dtype=complex)
        for f in self.factors:
            out = np.kron(out, ops.get(f.label, np.eye(f.dim)))
        return out

    def ket_bra(self, label: str, a, b) -> np.ndarray:
        f = self.factor(label)
        m = np.zeros((f.dim, f.dim), dtype=complex)
        m[f.levels.index(a), f.levels.index(b)] = 1.0
        return m

    def annihilation(self, label: str) -> np.ndarray:
        f = self.factor(label)
        return np.diag(np.sqrt(np.arange(1, f.dim)), 1).astype(complex)

    def mask(self, predicate: Callable[[dict], bool]) -> np.ndarray:
        """Diagonal projector (as 0/1 weights) onto basis states satisfying ``predicate``."""
        return np.array([1.0 if predicate(self.label(i)) else 0.0 for i in range(self.dim)])


# --- generators --------------------------------------------------------------------

@dataclass
class TimeDependentOperator:
    """H(t) = static + sum_k f_k(t) * M_k."""

    static: np.ndarray
    terms: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    def add(self, coeff: Callable[[float], complex], matrix: np.ndarray) -> "TimeDependentOperator":
        self.terms.append((coeff, np.asarray(matrix, dtype=complex)))
        return self

    def __call__(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for f, m in self.terms:
            h += f(t) * m
        return h

    def batch(self, ts: np.ndarray) -> np.ndarray:
        """H at every time in ``ts``, shape (len(ts), dim, dim)."""
        ts = np.asarray(ts, dtype=float)
        out = np.broadcast_to(self.static, (len(ts),) + self.static.shape).copy()
        for f, m in self.terms:
            out += np.asarray(f(ts), dtype=complex)[:, None, None] * m
        return out

    def matvec(self, t: float, psi: np.ndarray) -> np.ndarray:
        out = self.static @ psi
        for f, m in self.terms:
            c = f(t)
            if c != 0:
                out += c * (m @ psi)
        return out

    def __add__(self, other: "TimeDependentOperator") -> "TimeDependentOperator":
        return TimeDependentOperator(self.static + other.static, self.terms + other.terms)


class _CallableOperator(TimeDependentOperator):
    def __init__(self, fn: Callable[[float], np.ndarray]):
        super().__init__(np.asarray(fn(0.0), dtype=complex) * 0)
        self._fn = fn

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self._fn(t), dtype=complex)

    def batch(self, ts: np.ndarray) -> np.ndarray:
        return np.stack([self(t) for t in ts])

    def matvec(self, t: float, psi: np.ndarray) -> np.ndarray:
        return self(t) @ psi


def as_operator(h) -> TimeDependentOperator:
    """Accept a TimeDependentOperator, a callable t -> array, or a constant array."""
    if isinstance(h, TimeDependentOperator):
        return h
    if callable(h):
        return _CallableOperator(h)
    return TimeDependentOperator(np.asarray(h, dtype=complex))


# --- pulses ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPulse:
    """peak * exp(-((t/T - center)/width)^2) on [0, T]."""

    peak: float
    center: float
    width: float
    T: float

    def __post_init__(self):
        if self.peak < 0:
            raise ValueError("pulse peak must be non-negative")
        if self.width <= 0:
            raise ValueError("pulse width must be positive")
        if self.T <= 0:
            raise ValueError("duration must be positive")

    def __call__(self, t):
        return self.peak * np.exp(-(((np.asarray(t) / self.T) - self.center) / self.width) ** 2)


def gaussian_pulse(peak: float, center: float, width: float, T: float = 1.0) -> GaussianPulse:
    return GaussianPulse(peak, center, width, T)


@dataclass(frozen=True)
class PulseSchedule:
    """Named Gaussian pulses sharing a duration ``T``.

    ``counterintuitive`` puts the pulse named ``late`` at 0.5 + a and ``early``
    at 0.5 - a in scaled time.
    """

    pulses: tuple
    T: float

    @classmethod
    def counterintuitive(cls, peak: float, T: float, a: float = 0.15, tau: float = 0.15,
                         early: str = "omega2", late: str = "omega1", peak_late: float | None = None):
        p_late = peak if peak_late is None else peak_late
        return cls(
            ((early, GaussianPulse(peak, 0.5 - a, tau, T)), (late, GaussianPulse(p_late, 0.5 + a, tau, T))),
            T,
        )

    def __getitem__(self, name: str) -> GaussianPulse:
        for n, p in self.pulses:
            if n == name:
                return p
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.pulses]

    def swapped(self) -> "PulseSchedule":
        """Same pulses with the time order reversed (a -> -a)."""
        return PulseSchedule(
            tuple((n, GaussianPulse(p.peak, 1.0 - p.center, p.width, p.T)) for n, p in self.pulses), self.T
        )


# --- results ---------------------------------------------------------------------------

@dataclass
class EvolutionResult:
    times: np.ndarray
    states: np.ndarray
    populations: dict
    n_steps: int = 0

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def norm_sq(self) -> np.ndarray:
        return np.sum(np.abs(self.states) ** 2, axis=1)

    @property
    def final_norm_sq(self) -> float:
        return float(self.norm_sq[-1])


def _population(states: np.ndarray, proj: np.ndarray) -> np.ndarray:
    proj = np.asarray(proj)
    if proj.ndim == 1:
        return np.abs(states) ** 2 @ proj.real
    return np.real(np.einsum("ti,ij,tj->t", states.conj(), proj, states))


def _magnus4(h: TimeDependentOperator, psi0: np.ndarray, grid: np.ndarray, tol: float,
             h0: float, max_steps: int):
    """Adaptive fourth-order Magnus exponential integrator with step-doubling control."""
    c = np.sqrt(3) / 6

    def step(t, dt, psi):
        a1 = -1j * h(t + (0.5 - c) * dt)
        a2 = -1j * h(t + (0.5 + c) * dt)
        om = 0.5 * dt * (a1 + a2) + (np.sqrt(3) / 12) * dt**2 * (a2 @ a1 - a1 @ a2)
        return scipy.linalg.expm(om) @ psi

    states = np.empty((len(grid), len(psi0)), dtype=complex)
    states[0] = psi0
    psi, t, dt = psi0.copy(), grid[0], h0
    n = 0
    for k in range(1, len(grid)):
        t_next = grid[k]
        while t < t_next - 1e-12 * max(1.0, abs(t_next)):
            dt = min(dt, t_next - t)
            full = step(t, dt, psi)
            half = step(t + dt / 2, dt / 2, step(t, dt / 2, psi))
            err = np.linalg.norm(half - full) / 15.0
            n += 1
            if n > max_steps:
                raise IntegrationError("step budget exhausted")
            if err <= tol * dt or dt < 1e-12:
                if dt < 1e-12:
                    raise IntegrationError("step size underflow")
                psi = half + (half - full) / 15.0
                t += dt
                fac = 2.0 if err == 0 else min(2.0, 0.9 * (tol * dt / err) ** 0.2)
                dt *= max(fac, 0.3)
            else:
                dt *= max(0.2, 0.9 * (tol * dt / err) ** 0.2)
        states[k] = psi
    return states, n


def _interval_propagators(h: TimeDependentOperator, grid: np.ndarray, m: int, chunk: int) -> np.ndarray:
    """Fourth-order Magnus propagator over each grid interval from m equal substeps."""
    c = np.sqrt(3) / 6
    d = h.dim
    out = np.empty((len(grid) - 1, d, d), dtype=complex)
    per = max(1, chunk // m)
    for k0 in range(0, len(grid) - 1, per):
        b = grid[k0 + 1:k0 + 1 + per]
        a = grid[k0:k0 + len(b)]
        dt = ((b - a) / m)[:, None]
        t0 = a[:, None] + dt * np.arange(m)[None]
        dt, t0 = dt.repeat(m, axis=1).ravel(), t0.ravel()
        a1 = -1j * h.batch(t0 + (0.5 - c) * dt)
        a2 = -1j * h.batch(t0 + (0.5 + c) * dt)
        w = dt[:, None, None]
        om = 0.5 * w * (a1 + a2) + (np.sqrt(3) / 12) * w**2 * (a2 @ a1 - a1 @ a2)
        u = scipy.linalg.expm(om).reshape(len(a), m, d, d)
        while u.shape[1] > 1:  # ordered product, later steps on the left
            if u.shape[1] % 2:
                u = np.concatenate([u, np.broadcast_to(np.eye(d), (len(a), 1, d, d))], axis=1)
            u = u[:, 1::2] @ u[:, 0::2]
        out[k0:k0 + len(a)] = u[:, 0]
    return out


def _magnus4_grid(h: TimeDependentOperator, psi0: np.ndarray, grid: np.ndarray, tol: float,
                  max_steps: int, chunk: int = 50_000):
    """Fixed-step Magnus on every output interval, substeps doubled until two resolutions agree.

    The error control is global: the accepted trajectory differs from the one
    at half the resolution by at most ``tol`` at every output time.
    """

    def run(m):
        props = _interval_propagators(h, grid, m, chunk)
        states = np.empty((len(grid), len(psi0)), dtype=complex)
        states[0] = psi = psi0
        for k, u in enumerate(props, start=1):
            psi = u @ psi
            states[k] = psi
        return states

    m, prev = 1, run(1)
    while True:
        m *= 2
        if m * (len(grid) - 1) > max_steps:
            raise IntegrationError("step budget exhausted before the trajectory converged")
        cur = run(m)
        if np.max(np.abs(cur - prev)) <= tol:
            return cur, m * (len(grid) - 1)
        prev = cur


def evolve(
    hamiltonian,
    psi0: np.ndarray,
    T: float,
    tol: float = DEFAULT_TOL,
    projectors: Optional[Mapping[str, np.ndarray]] = None,
    n_out: int = DEFAULT_GRID,
    method: str = "rk45",
    max_steps: int = 5_000_000,
    first_step: float | None = None,
    allow_subnormalized: bool = False,
) -> EvolutionResult:
    """Solve ``i dpsi/dt = H(t) psi`` on [0, T].

    ``method="rk45"`` is the embedded Dormand-Prince 4(5) pair with relative
    and absolute tolerance ``tol``.  ``method="magnus4"`` is an exponential
    integrator for stiff, strongly detuned generators whose time dependence
    is slow; its local error is held below ``tol`` per unit time.
    ``allow_subnormalized`` admits an initial norm below one, as when a lossy
    trajectory is continued under a new generator.
    """
    h = as_operator(hamiltonian)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (h.dim,):
        raise ValueError(f"state has shape {psi0.shape}, generator is {h.dim}-dimensional")
    nrm = np.linalg.norm(psi0)
    if nrm > 1.0 + 1e-9 or (not allow_subnormalized and nrm < 1.0 - 1e-9):
        raise ValueError("initial state must be normalized")
    grid = np.linspace(0.0, T, n_out)
    if T == 0:
        states = np.repeat(psi0[None], n_out, axis=0)
        nsteps = 0
    elif method == "rk45":
        sol = solve_ivp(
            lambda t, y: -1j * h.matvec(t, y),
            (0.0, T),
            psi0,
            method="RK45",
            t_eval=grid,
            rtol=tol,
            atol=tol,
            first_step=first_step,
        )
        if sol.status != 0:
            raise IntegrationError(sol.message)
        states = sol.y.T
        nsteps = int(sol.nfev // 6)
    elif method == "magnus4_grid":
        states, nsteps = _magnus4_grid(h, psi0, grid, tol, max_steps)
    elif method == "magnus4":
        states, nsteps = _magnus4(h, psi0, grid, tol, first_step or T / (n_out - 1), max_steps)
    else:
        raise ValueError(f"unknown method {method!r}")
    pops = {name: _population(states, p) for name, p in (projectors or {}).items()}
    return EvolutionResult(grid, states, pops, nsteps)


@dataclass
class FidelityReport:
    fidelity: float
    maxima: dict
    integrals: dict


def fidelity_and_populations(
    r: EvolutionResult, target: np.ndarray, projectors: Optional[Mapping[str, np.ndarray]] = None
) -> FidelityReport:
    """|<target|psi(T)>|^2 on the unnormalized state plus max/integral of each population."""
    target = np.asarray(target, dtype=complex)
    if abs(np.linalg.norm(target) - 1.0) > 1e-9:
        raise ValueError("target must be normalized")
    fid = float(abs(np.vdot(target, r.final_state)) ** 2)
    pops = dict(r.populations)
    for name, p in (projectors or {}).items():
        pops[name] = _population(r.states, p)
    maxima = {k: float(np.max(v)) for k, v in pops.items()}
    integrals = {k: float(np.trapezoid(v, r.times)) for k, v in pops.items()}
    return FidelityReport(fid, maxima, integrals)
