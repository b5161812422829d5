"""(N+1)-level Lambda system: couplings, Hamiltonian, dark frames and geometry.

Basis ordering is always (|g_1>, ..., |g_N>, |e>).  Frequencies are in units
of the atom-cavity coupling g, hbar = 1.

Coordinates on the control manifold are ordered
``(theta_1, ..., theta_{N-1}, phi_2, ..., phi_N)``; :func:`coordinate_names`
returns matching labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

ANALYTIC = "analytic"
NUMERIC = "numeric"
CHARTS = (ANALYTIC, NUMERIC)

DEFAULT_STEP = 1e-5
RANK_RTOL = 1e-8
GAUGE_MIN_OVERLAP = 0.5


class DegenerateCouplingError(ValueError):
    """All couplings vanish, so the dark space is the whole ground manifold."""


class GaugeDiscontinuityError(RuntimeError):
    """A numeric frame could not be continued smoothly from its reference."""


@dataclass(frozen=True)
class SphericalParams:
    """A point on the control manifold (generalized spherical coordinates)."""

    n_ground: int
    thetas: tuple
    phis: tuple
    magnitude: float = 1.0

    def __post_init__(self):
        if self.n_ground < 2:
            raise ValueError("need at least two ground states")
        object.__setattr__(self, "thetas", tuple(float(x) for x in self.thetas))
        object.__setattr__(self, "phis", tuple(float(x) for x in self.phis))
        if len(self.thetas) != self.n_ground - 1 or len(self.phis) != self.n_ground - 1:
            raise ValueError(
                f"N={self.n_ground} needs {self.n_ground - 1} thetas and phis, "
                f"got {len(self.thetas)} and {len(self.phis)}"
            )
        if self.magnitude < 0:
            raise ValueError("magnitude must be non-negative")

    @classmethod
    def zeros(cls, n_ground: int, magnitude: float = 1.0) -> "SphericalParams":
        return cls(n_ground, (0.0,) * (n_ground - 1), (0.0,) * (n_ground - 1), magnitude)

    @classmethod
    def from_coords(cls, n_ground: int, coords: Sequence[float], magnitude: float = 1.0):
        coords = list(coords)
        k = n_ground - 1
        return cls(n_ground, coords[:k], coords[k:], magnitude)

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.thetas + self.phis)

    def replace(self, **named: float) -> "SphericalParams":
        """Copy with coordinates overridden by name, e.g. ``replace(theta1=0.3)``."""
        c = self.coords
        names = coordinate_names(self.n_ground)
        for key, value in named.items():
            c[names.index(key)] = value
        return SphericalParams.from_coords(self.n_ground, c, self.magnitude)


@dataclass(frozen=True)
class CouplingVector:
    omegas: np.ndarray

    @property
    def n_ground(self) -> int:
        return len(self.omegas)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.omegas) ** 2))


@dataclass(frozen=True)
class DarkFrame:
    """Orthonormal dark states, stored as the rows of ``states``."""

    states: np.ndarray
    chart_id: str = ANALYTIC

    @property
    def matrix(self) -> np.ndarray:
        """Dark states as columns, shape (N+1, N-1)."""
        return self.states.T


@dataclass(frozen=True)
class ConnectionSample:
    point: SphericalParams
    components: np.ndarray  # (n_coords, N-1, N-1), A_mu^{ab} = <psi^a|d_mu psi^b>
    names: tuple = field(default=())


def coordinate_names(n_ground: int) -> list[str]:
    return [f"theta{k}" for k in range(1, n_ground)] + [f"phi{k}" for k in range(2, n_ground + 1)]


def couplings_from_spherical(p: SphericalParams) -> CouplingVector:
    n = p.n_ground
    th = np.asarray(p.thetas)
    ph = np.concatenate([[0.0], p.phis])
    omegas = np.empty(n, dtype=complex)
    cprod = 1.0
    for k in range(n - 1):
        omegas[k] = p.magnitude * np.exp(-1j * ph[k]) * cprod * np.sin(th[k])
        cprod *= np.cos(th[k])
    omegas[n - 1] = p.magnitude * np.exp(-1j * ph[n - 1]) * cprod
    return CouplingVector(omegas)


def build_hamiltonian(c: CouplingVector) -> np.ndarray:
    """Hermitian (N+1)x(N+1) array; ``H[k, e] = Omega_k``.

    With this orientation the bright state is ``sum_k Omega_k |g_k>`` normalized
    and the closed-form dark frames are annihilated exactly.
    """
    n = c.n_ground
    h = np.zeros((n + 1, n + 1), dtype=complex)
    h[:n, n] = c.omegas
    h[n, :n] = np.conj(c.omegas)
    return h


def bright_state(c: CouplingVector) -> np.ndarray:
    nrm = np.sqrt(c.norm_sq)
    if nrm == 0:
        raise DegenerateCouplingError("all couplings are zero")
    v = np.zeros(c.n_ground + 1, dtype=complex)
    v[:-1] = c.omegas / nrm
    return v


# --- closed-form frame -------------------------------------------------------

def _frame_batch(thetas: np.ndarray, phis: np.ndarray, *, with_derivs: bool = True):
    """Closed-form dark frame and its coordinate derivatives for a batch.

    ``thetas`` is (S, N-1), ``phis`` is (S, N-1).  Returns ``psi`` with shape
    (S, N-1, N) over ground components and, if requested, ``dpsi`` with shape
    (S, 2N-2, N-1, N).

    The frame is built from the normalized tails of the bright vector,
    ``u_j = e^{-i phi_j} sin(theta_j) g_j + cos(theta_j) u_{j+1}``; dark state
    j is ``e^{-i phi_j} cos(theta_j) g_j - sin(theta_j) u_{j+1}`` with the last
    one negated, which reproduces the explicit N=3 and N=5 frames.
    """
    S, k = thetas.shape
    n = k + 1
    c, s = np.cos(thetas), np.sin(thetas)
    ph = np.ones((S, n), dtype=complex)
    ph[:, 1:] = np.exp(-1j * phis)

    u = np.zeros((n, S, n), dtype=complex)
    u[n - 1, :, n - 1] = ph[:, n - 1]
    for j in range(n - 2, -1, -1):
        u[j] = c[:, j, None] * u[j + 1]
        u[j][:, j] += ph[:, j] * s[:, j]

    gen = np.zeros((k, S, n), dtype=complex)
    for j in range(k):
        gen[j] = -s[:, j, None] * u[j + 1]
        gen[j][:, j] += ph[:, j] * c[:, j]
    sign = np.ones(k)
    sign[-1] = -1.0
    psi = np.transpose(gen * sign[:, None, None], (1, 0, 2))
    if not with_derivs:
        return psi, None

    # d u_j / d theta_m = (prod_{l=j}^{m-1} cos theta_l) gen_m  for m >= j
    def du_dtheta(j: int, m: int) -> np.ndarray:
        if m < j or j >= n - 1:
            return np.zeros((S, n), dtype=complex)
        pref = np.prod(c[:, j:m], axis=1) if m > j else np.ones(S)
        return pref[:, None] * gen[m]

    dpsi = np.zeros((S, 2 * k, k, n), dtype=complex)
    for j in range(k):
        for m in range(k):
            if m < j:
                continue
            if m == j:
                d = -c[:, j, None] * u[j + 1]
                d[:, j] -= ph[:, j] * s[:, j]
            else:
                d = -s[:, j, None] * du_dtheta(j + 1, m)
            dpsi[:, m, j] = sign[j] * d
    # phi_{m+2} sits only on ground component m+1: d/dphi v = -i v_m g_m
    for m in range(1, n):
        dpsi[:, k + m - 1, :, m] = -1j * psi[:, :, m]
    return psi, dpsi


def _pad_excited(vecs: np.ndarray) -> np.ndarray:
    out = np.zeros(vecs.shape[:-1] + (vecs.shape[-1] + 1,), dtype=complex)
    out[..., :-1] = vecs
    return out


def _lowdin_dark(c: CouplingVector) -> np.ndarray:
    """Dark frame closest to the logical basis g_1..g_{N-1} (rows)."""
    n = c.n_ground
    b = c.omegas / np.sqrt(c.norm_sq)
    proj = np.eye(n, dtype=complex) - np.outer(b, b.conj())
    cols = proj[:, : n - 1]
    # polar factor: closest orthonormal set to the projected logical vectors
    w, sv, vh = np.linalg.svd(cols, full_matrices=False)
    if sv[-1] < 1e-8:
        # logical vectors nearly span the bright direction; fall back to the null space
        _, _, vh_full = np.linalg.svd(b.conj()[None, :])
        return vh_full[1:].conj()
    return (w @ vh).T


def align_frame(states: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rotate ``states`` (rows) within their span to best match ``reference``."""
    overlap = reference.conj() @ states.T  # <ref_a|new_b>
    sv = np.linalg.svd(overlap, compute_uv=False)
    if sv.min() < GAUGE_MIN_OVERLAP:
        raise GaugeDiscontinuityError(
            f"frame overlap with reference dropped to {sv.min():.3g}"
        )
    w, _, vh = np.linalg.svd(overlap.conj().T)
    rot = w @ vh  # unitary maximizing Re tr(ref^dagger new rot)
    return rot.T @ states


def dark_basis(
    c: CouplingVector,
    reference: Optional[DarkFrame] = None,
    chart_id: str = NUMERIC,
    params: Optional[SphericalParams] = None,
) -> DarkFrame:
    """Orthonormal zero-energy frame orthogonal to |e> and the bright state.

    ``chart_id="analytic"`` needs ``params`` and returns the closed-form frame.
    Otherwise the frame is computed numerically and, if ``reference`` is given,
    gauge-aligned to it.
    """
    if c.norm_sq == 0.0:
        raise DegenerateCouplingError("all couplings are zero; no distinguished dark space")
    if chart_id == ANALYTIC:
        if params is None:
            raise ValueError("analytic chart needs the spherical parameters")
        psi, _ = _frame_batch(
            np.asarray(params.thetas)[None], np.asarray(params.phis)[None], with_derivs=False
        )
        return DarkFrame(_pad_excited(psi[0]), ANALYTIC)
    if chart_id != NUMERIC:
        raise ValueError(f"unknown chart {chart_id!r}")
    states = _pad_excited(_lowdin_dark(c))
    if reference is not None:
        states = align_frame(states, reference.states)
    return DarkFrame(states, NUMERIC)


def frame_at(p: SphericalParams, chart: str = ANALYTIC, reference: Optional[DarkFrame] = None):
    return dark_basis(couplings_from_spherical(p), reference=reference, chart_id=chart, params=p)


# --- connection and curvature ------------------------------------------------

def analytic_connection_batch(coords: np.ndarray, n_ground: int) -> np.ndarray:
    """Closed-form A_mu for a batch of coordinate vectors, shape (S, 2N-2, N-1, N-1)."""
    coords = np.atleast_2d(coords)
    k = n_ground - 1
    psi, dpsi = _frame_batch(coords[:, :k], coords[:, k:])
    # A[s, m] = conj(psi[s]) @ dpsi[s, m].T, as a batched matmul
    return np.matmul(psi.conj()[:, None], np.swapaxes(dpsi, -1, -2))


def analytic_connection(p: SphericalParams) -> np.ndarray:
    return analytic_connection_batch(p.coords[None], p.n_ground)[0]


def numeric_connection(p: SphericalParams, step: float = DEFAULT_STEP, chart: str = NUMERIC):
    """A_mu by central differences of a frame.

    The numeric chart is the Lowdin frame, a smooth single-valued gauge, so
    the two sides are used as computed.  Aligning them to the centre would
    impose parallel transport and zero the connection.
    """
    if step <= 0:
        raise ValueError("finite-difference step must be positive")
    centre = frame_at(p, chart)
    base = p.coords
    ncoord = len(base)
    comps = np.empty((ncoord, p.n_ground - 1, p.n_ground - 1), dtype=complex)
    for mu in range(ncoord):
        frames = []
        for sgn in (+1, -1):
            c = base.copy()
            c[mu] += sgn * step
            q = SphericalParams.from_coords(p.n_ground, c, p.magnitude)
            frames.append(frame_at(q, chart).states)
        deriv = (frames[0] - frames[1]) / (2 * step)
        comps[mu] = centre.states.conj() @ deriv.T
    return comps


def connection(p: SphericalParams, chart: str = ANALYTIC, step: float = DEFAULT_STEP) -> np.ndarray:
    if chart == ANALYTIC:
        return analytic_connection(p)
    return numeric_connection(p, step)


def curvature_from(p: SphericalParams, conn_fn, step: float) -> np.ndarray:
    """F_{mu nu} = d_mu A_nu - d_nu A_mu + [A_mu, A_nu] for A = <psi|d psi>.

    The commutator sign is the one that makes F gauge covariant for this
    orientation of A (the holonomy is P exp(-integral A)).
    """
    base = p.coords
    a0 = conn_fn(p)
    ncoord = len(base)
    dA = np.empty((ncoord,) + a0.shape, dtype=complex)  # dA[mu, nu] = d_mu A_nu
    for mu in range(ncoord):
        cp, cm = base.copy(), base.copy()
        cp[mu] += step
        cm[mu] -= step
        ap = conn_fn(SphericalParams.from_coords(p.n_ground, cp, p.magnitude))
        am = conn_fn(SphericalParams.from_coords(p.n_ground, cm, p.magnitude))
        dA[mu] = (ap - am) / (2 * step)
    comm = np.einsum("mab,nbc->mnac", a0, a0) - np.einsum("nab,mbc->mnac", a0, a0)
    return dA - np.transpose(dA, (1, 0, 2, 3)) + comm


def connection_and_curvature(
    p: SphericalParams, chart: str = ANALYTIC, step: float = DEFAULT_STEP
) -> tuple[ConnectionSample, np.ndarray]:
    """Connection components at ``p`` and the full curvature tensor F[mu, nu]."""
    if chart == ANALYTIC:
        conn_fn = analytic_connection
        fstep = 1e-5
    elif chart == NUMERIC:
        conn_fn = lambda q: numeric_connection(q, step)  # noqa: E731
        # outer difference of an inner difference: keep roundoff at bay
        fstep = max(1e-4, np.sqrt(step))
    else:
        raise ValueError(f"unknown chart {chart!r}")
    a = conn_fn(p)
    f = curvature_from(p, conn_fn, fstep)
    return ConnectionSample(p, a, tuple(coordinate_names(p.n_ground))), f


def holonomy_rank_lower_bound(
    samples: Sequence[SphericalParams], chart: str = ANALYTIC, rtol: float = RANK_RTOL
) -> int:
    """Dimension of the real span of all curvature components over ``samples``."""
    if not samples:
        raise ValueError("need at least one sample")
    rows = []
    for p in samples:
        _, f = connection_and_curvature(p, chart)
        iu = np.triu_indices(f.shape[0], 1)
        for comp in f[iu]:
            rows.append(np.concatenate([comp.real.ravel(), comp.imag.ravel()]))
    mat = np.array(rows)
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] < 1e-12:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def random_params(n_ground: int, rng: np.random.Generator, magnitude: float = 1.0):
    return SphericalParams(
        n_ground,
        rng.uniform(0.1, np.pi / 2 - 0.1, n_ground - 1),
        rng.uniform(-np.pi, np.pi, n_ground - 1),
        magnitude,
    )
