"""Holonomies of closed loops on the control manifold.

Adiabatic transport inside the dark space obeys ``dc/dt = -A(lambda) . dlambda/dt c``
with ``A_mu^{ab} = <psi^a|d_mu psi^b>``, so the holonomy of a loop is
``P exp(-oint A)`` with later path segments multiplying on the left.  With this
orientation a counterclockwise rectangle in the (theta1, theta2) plane of the
N=3 system gives ``exp(+i beta sigma_y)`` and one in the (theta4, phi5) plane
of N=5 gives ``exp(+i alpha |g4><g4|)``.  Holonomy matrices are expressed in
the dark frame at the base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .lambda_system import (
    ANALYTIC,
    NUMERIC,
    SphericalParams,
    analytic_connection_batch,
    coordinate_names,
    frame_at,
)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class GateChart:
    """Two-coordinate sub-manifold supporting one family of closed-form holonomies."""

    kind: str
    n_ground: int
    x: str
    y: str
    # generator K such that a loop with CCW-signed weighted area w gives exp(w K)
    generator: np.ndarray
    # sign s with exp(w K) = exp(i s w P) for the gate projector/Pauli P
    gate_sign: int

    def density(self, x):
        if self.kind == "Ry":
            return np.cos(x)
        return np.sin(2 * x)

    def strip_weight(self, xmax: float) -> float:
        """Integral of the density over x in [0, xmax]."""
        if self.kind == "Ry":
            return float(np.sin(xmax))
        return float(np.sin(xmax) ** 2)


def _proj(n: int, k: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    m[k, k] = 1.0
    return m


GATE_CHARTS = {
    "Ry": GateChart("Ry", 3, "theta1", "theta2", 1j * SIGMA_Y, +1),
    "Rz": GateChart("Rz", 3, "theta2", "phi2", -1j * _proj(2, 1), -1),
    "Phase4": GateChart("Phase4", 5, "theta4", "phi5", 1j * _proj(4, 3), +1),
}

RECT_Y_SIDE = np.pi


@dataclass
class LoopPath:
    vertices: list
    n_steps: int = 10_000

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise ValueError("a loop needs at least two vertices")
        n = {v.n_ground for v in self.vertices}
        if len(n) != 1:
            raise ValueError("vertices live on different manifolds")
        first, last = self.vertices[0].coords, self.vertices[-1].coords
        if np.max(np.abs(first - last)) > 1e-14:
            raise ValueError("loop is not closed")
        if np.any(np.abs(self.vertices[0].thetas) > 1e-14):
            raise ValueError("base point must have all thetas zero")
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")

    @property
    def n_ground(self) -> int:
        return self.vertices[0].n_ground

    def reversed(self) -> "LoopPath":
        return LoopPath(list(reversed(self.vertices)), self.n_steps)

    def with_steps(self, n_steps: int) -> "LoopPath":
        return LoopPath(list(self.vertices), n_steps)

    def then(self, other: "LoopPath") -> "LoopPath":
        """Traverse ``self`` first, then ``other`` (same base point)."""
        if np.max(np.abs(self.vertices[-1].coords - other.vertices[0].coords)) > 1e-14:
            raise ValueError("loops do not share a base point")
        return LoopPath(list(self.vertices) + list(other.vertices[1:]), self.n_steps)

    def to_dict(self, chart: str = ANALYTIC) -> dict:
        return {
            "chart": chart,
            "n_ground": self.n_ground,
            "n_steps": self.n_steps,
            "vertices": [list(v.coords) for v in self.vertices],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoopPath":
        n = int(d["n_ground"])
        verts = [SphericalParams.from_coords(n, c) for c in d["vertices"]]
        return cls(verts, int(d.get("n_steps", 10_000)))


@dataclass
class HolonomyResult:
    unitary: np.ndarray
    discretization_error_estimate: float


def loop_in_chart(kind: str, points2d: Sequence[Sequence[float]], n_steps: int = 10_000) -> LoopPath:
    """Closed loop from (x, y) points of a gate chart; other coordinates are zero."""
    chart = GATE_CHARTS[kind]
    names = coordinate_names(chart.n_ground)
    ix, iy = names.index(chart.x), names.index(chart.y)
    verts = []
    for x, y in points2d:
        c = np.zeros(len(names))
        c[ix], c[iy] = x, y
        verts.append(SphericalParams.from_coords(chart.n_ground, c))
    return LoopPath(verts, n_steps)


def rectangle(kind: str, width: float, height: float, n_steps: int = 10_000, ccw: bool = True):
    pts = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height), (0.0, 0.0)]
    if not ccw:
        pts = pts[::-1]
    return loop_in_chart(kind, pts, n_steps)


def _expm_antihermitian(k: np.ndarray) -> np.ndarray:
    """Batched exp(K) for anti-Hermitian K via the Hermitian eigensystem of iK."""
    w, v = np.linalg.eigh(1j * k)
    return np.einsum("...ij,...j,...kj->...ik", v, np.exp(-1j * w), v.conj())


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """mats[-1] @ ... @ mats[0] by pairwise batched reduction."""
    n = mats.shape[-1]
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, np.eye(n, dtype=complex)[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def _polar(m: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def _numeric_transport(loop: LoopPath) -> np.ndarray:
    """Discrete parallel transport through numeric frames, in the base frame's gauge.

    Each step maps amplitudes by the unitary polar factor of the frame
    overlap <psi_{j+1}|psi_j>.  The loop closes on the very frame it started
    from, so the product is independent of how each intermediate frame was
    gauged and no smooth global gauge is needed.
    """
    n = loop.n_ground
    pts = []
    for a, b in zip(loop.vertices[:-1], loop.vertices[1:]):
        c0, c1 = a.coords, b.coords
        if not np.any(c1 - c0):
            continue
        for s in np.arange(loop.n_steps) / loop.n_steps:
            pts.append(c0 + s * (c1 - c0))
    if not pts:
        return np.eye(n - 1, dtype=complex)
    frames = [frame_at(SphericalParams.from_coords(n, c), NUMERIC).states for c in pts]
    frames.append(frames[0])
    u = np.eye(n - 1, dtype=complex)
    for f0, f1 in zip(frames[:-1], frames[1:]):
        u = _polar(f1.conj() @ f0.T) @ u
    return u


def _segment_generators(p0, p1, n_steps: int, chart: str) -> np.ndarray:
    n = p0.n_ground
    c0, c1 = p0.coords, p1.coords
    dl = (c1 - c0) / n_steps
    if not np.any(dl):
        return np.zeros((0, n - 1, n - 1), dtype=complex)
    s = (np.arange(n_steps) + 0.5) / n_steps
    mids = c0[None] + s[:, None] * (c1 - c0)[None]
    if chart == ANALYTIC:
        a = analytic_connection_batch(mids, n)
        return -np.einsum("smab,m->sab", a, dl)
    raise ValueError(f"unknown chart {chart!r}")


def _holonomy_once(loop: LoopPath, chart: str) -> np.ndarray:
    if chart == NUMERIC:
        return _numeric_transport(loop)
    n = loop.n_ground
    gens = [
        _segment_generators(a, b, loop.n_steps, chart)
        for a, b in zip(loop.vertices[:-1], loop.vertices[1:])
    ]
    gens = np.concatenate(gens) if gens else np.zeros((0, n - 1, n - 1), dtype=complex)
    if gens.shape[0] == 0:
        return np.eye(n - 1, dtype=complex)
    # generators are anti-Hermitian up to roundoff; symmetrize before exponentiating
    gens = 0.5 * (gens - np.conj(np.swapaxes(gens, -1, -2)))
    return _ordered_product(_expm_antihermitian(gens))


def path_ordered_holonomy(loop: LoopPath, chart: str = ANALYTIC) -> HolonomyResult:
    """Ordered product of midpoint exponentials, with a doubled-resolution error estimate."""
    u = _holonomy_once(loop, chart)
    u2 = _holonomy_once(loop.with_steps(2 * loop.n_steps), chart)
    return HolonomyResult(u, float(np.max(np.abs(u - u2))))


def identify_chart(loop: LoopPath) -> str:
    """Name of the gate chart the loop is confined to."""
    names = coordinate_names(loop.n_ground)
    coords = np.array([v.coords for v in loop.vertices])
    for kind, chart in GATE_CHARTS.items():
        if chart.n_ground != loop.n_ground:
            continue
        free = {names.index(chart.x), names.index(chart.y)}
        fixed = [i for i in range(len(names)) if i not in free]
        if np.all(np.abs(coords[:, fixed]) < 1e-14):
            return kind
    raise ValueError("loop is not confined to a supported two-coordinate chart")


def _triangle_integral(f, p0, p1, p2) -> float:
    """Signed integral of f(x) over the triangle (p0, p1, p2) by 2-D adaptive quadrature."""
    e1 = np.subtract(p1, p0)
    e2 = np.subtract(p2, p0)
    jac = e1[0] * e2[1] - e1[1] * e2[0]
    if abs(jac) < 1e-300:
        return 0.0

    def integrand(v, u):
        x = p0[0] + u * e1[0] + v * e2[0]
        return f(x)

    val, _ = integrate.dblquad(integrand, 0.0, 1.0, 0.0, lambda u: 1.0 - u, epsabs=1e-13, epsrel=1e-12)
    return val * jac


def surface_integral_angle(loop: LoopPath, kind: str | None = None) -> float:
    """Orientation-signed integral of the chart's curvature density over the enclosed area."""
    kind = kind or identify_chart(loop)
    if kind != identify_chart(loop):
        raise ValueError(f"loop is not confined to the {kind} chart")
    chart = GATE_CHARTS[kind]
    names = coordinate_names(loop.n_ground)
    ix, iy = names.index(chart.x), names.index(chart.y)
    pts = [(v.coords[ix], v.coords[iy]) for v in loop.vertices]
    total = 0.0
    for i in range(1, len(pts) - 1):
        total += _triangle_integral(chart.density, pts[0], pts[i], pts[i + 1])
    return total


def stokes_unitary(kind: str, weighted_area: float) -> np.ndarray:
    """exp(area * K) for a gate chart's generator K."""
    return _expm_antihermitian(weighted_area * GATE_CHARTS[kind].generator)


def reduce_angle(angle: float) -> float:
    """Map into (-pi, pi]."""
    r = float(np.mod(angle + np.pi, 2 * np.pi) - np.pi)
    return np.pi if r == -np.pi else r


def synthesize_loop(kind: str, angle: float, n_steps: int = 10_000) -> LoopPath:
    """Rectangle realizing the gate of ``kind`` with rotation/phase ``angle``.

    Ry gives exp(i angle sigma_y); Rz gives exp(i angle |1><1|) = e^{i angle/2} R_z(angle);
    Phase4 gives exp(i angle |g4><g4|).
    """
    if kind not in GATE_CHARTS:
        raise ValueError(f"unknown gate kind {kind!r}")
    chart = GATE_CHARTS[kind]
    a = reduce_angle(angle)
    area = chart.gate_sign * a
    if area == 0.0:
        base = loop_in_chart(kind, [(0.0, 0.0), (0.0, 0.0)], n_steps)
        return base
    need = abs(area) / RECT_Y_SIDE
    if need > chart.strip_weight(np.pi / 2) + 1e-15:
        raise ValueError("angle exceeds single-rectangle capacity; compose loops")
    if need >= chart.strip_weight(np.pi / 2):
        width = np.pi / 2
    else:
        width = optimize.brentq(
            lambda x: chart.strip_weight(x) - need, 0.0, np.pi / 2, xtol=1e-15, rtol=1e-15
        )
    return rectangle(kind, width, RECT_Y_SIDE, n_steps, ccw=area > 0)


def gate_unitary(kind: str, angle: float) -> np.ndarray:
    """Ideal dark-frame gate for ``kind``; see :func:`synthesize_loop`."""
    if kind == "Ry":
        return _expm_antihermitian(1j * angle * SIGMA_Y)
    if kind == "Rz":
        return np.diag([1.0, np.exp(1j * angle)])
    if kind == "Phase4":
        return np.diag([1.0, 1.0, 1.0, np.exp(1j * angle)])
    raise ValueError(f"unknown gate kind {kind!r}")


# --- single-qubit Euler angles --------------------------------------------------

def ry(beta: float) -> np.ndarray:
    """R_y(beta) = exp(i beta sigma_y)."""
    return np.array([[np.cos(beta), np.sin(beta)], [-np.sin(beta), np.cos(beta)]], dtype=complex)


def rz(alpha: float) -> np.ndarray:
    """R_z(alpha) = exp(-i alpha sigma_z / 2), so exp(i alpha |1><1|) = e^{i alpha/2} R_z(alpha)."""
    return np.diag([np.exp(-0.5j * alpha), np.exp(0.5j * alpha)])


def _equal_up_to_phase(a: np.ndarray, b: np.ndarray) -> float:
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def euler_decompose(u: np.ndarray, tol: float = 1e-10) -> tuple[float, float, float]:
    """(gamma, beta, alpha) with R_z(gamma) R_y(beta) R_z(alpha) = u up to global phase."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > tol:
        raise ValueError("input is not a 2x2 unitary")
    if abs(np.linalg.det(u) - 1.0) > tol:
        raise ValueError("input is not special unitary")
    a, b = u[0, 0], u[0, 1]
    b1 = float(np.arctan2(abs(b), abs(a)))
    best = None
    for beta in (b1, np.pi - b1):
        cb, sb = np.cos(beta), np.sin(beta)
        for lam in (1.0, -1.0):
            s_ = -2 * np.angle(lam * a / cb) if abs(cb) > 1e-12 else 0.0
            d_ = -2 * np.angle(lam * b / sb) if abs(sb) > 1e-12 else s_
            if abs(cb) <= 1e-12:
                s_ = d_
            gamma = reduce_angle(0.5 * (s_ + d_))
            alpha = reduce_angle(0.5 * (s_ - d_))
            err = _equal_up_to_phase(u, rz(gamma) @ ry(beta) @ rz(alpha))
            score = (err > 1e-9, abs(gamma) + abs(alpha), err)
            if best is None or score < best[0]:
                best = (score, (gamma, float(beta), alpha))
    return best[1]


def compose_gate_loop(u: np.ndarray, n_steps: int = 10_000) -> LoopPath:
    """Loop on the N=3 manifold whose holonomy equals ``u`` up to a global phase.

    ``u = R_z(gamma) R_y(beta) R_z(alpha)`` is realized by traversing the
    alpha, beta and gamma rectangles in that order.
    """
    u = np.asarray(u, dtype=complex)
    det = np.linalg.det(u)
    gamma, beta, alpha = euler_decompose(u / np.sqrt(det))
    loop = synthesize_loop("Rz", alpha, n_steps)
    loop = loop.then(synthesize_loop("Ry", beta, n_steps))
    return loop.then(synthesize_loop("Rz", gamma, n_steps))


def phase_insensitive_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - e^{i phi} b| with the phase fixed by the trace overlap."""
    ov = np.trace(b.conj().T @ a)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))
