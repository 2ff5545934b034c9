"""Classical limit of the model: Hamiltonian flow, tangent-dynamics Lyapunov
exponents, Poincare sections, fraction of regularity, energy-averaged
Lyapunov exponent.

The phase space is (p1, p2, q1, q2) with the compactness bound
s^2 = p1^2 + p2^2 + q1^2 + q2^2 <= 2.  In the infinite-size limit the
quantum dipole operators map onto these coordinates, D_{x,y}/N ->
p_{2,1} sqrt(2 - s^2) and R_{x,y}/N -> q_{1,2} sqrt(2 - s^2); the flow
below works with the canonical coordinates directly.  Time integration
uses an adaptive Dormand-Prince 8(5,3) stepper compiled with numba (see
_flow.py); section crossings are located by root-finding inside accepted
steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.optimize

from . import _flow
from .algebra import InvalidParameterError

__all__ = [
    "DomainError",
    "ClassicalParams",
    "PhasePoint",
    "SectionSpec",
    "Trajectory",
    "LyapunovEstimate",
    "SectionGridConfig",
    "SectionGrid",
    "FregResult",
    "hamiltonian_value",
    "hamiltonian_gradient",
    "tangent_matrix",
    "equations_of_motion",
    "minimize_hamiltonian",
    "integrate",
    "tangent_lyapunov",
    "regular_envelope",
    "regular_threshold",
    "solve_section_momentum",
    "freg_at_energy",
]

ROOT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Point outside the admissible phase-space ball s^2 <= 2."""


@dataclass(frozen=True)
class ClassicalParams:
    xi: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise InvalidParameterError(f"xi must be in [0, 1], got {self.xi}")
        if self.epsilon < 0.0:
            raise InvalidParameterError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class PhasePoint:
    p1: float
    p2: float
    q1: float
    q2: float

    @property
    def s2(self) -> float:
        return self.p1 ** 2 + self.p2 ** 2 + self.q1 ** 2 + self.q2 ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.q1, self.q2])

    @staticmethod
    def from_array(x) -> "PhasePoint":
        p1, p2, q1, q2 = np.asarray(x, dtype=float)
        return PhasePoint(p1, p2, q1, q2)


def _as_state(x) -> np.ndarray:
    if isinstance(x, PhasePoint):
        return x.as_array()
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise InvalidParameterError(f"phase point must have 4 components, got {x.shape}")
    return x


def hamiltonian_value(x, params: ClassicalParams) -> float:
    """H = (1-xi) s^2/2 - xi [(p1^2+p2^2)(2-s^2) + (p1 q2 - q1 p2)^2]
    - eps p2 sqrt(2-s^2)."""
    y = _as_state(x)
    s2 = float(np.dot(y, y))
    if s2 > 2.0 + 1e-12:
        raise DomainError(f"s^2 = {s2} exceeds the phase-space bound 2")
    return float(_flow.hamiltonian_nb(y, params.xi, params.epsilon))


def hamiltonian_gradient(x, params: ClassicalParams) -> np.ndarray:
    """(dH/dp1, dH/dp2, dH/dq1, dH/dq2); singular on the s^2 = 2 boundary."""
    y = _as_state(x)
    s2 = float(np.dot(y, y))
    if s2 >= 2.0:
        raise DomainError("gradient is singular on the s^2 = 2 boundary")
    g = np.empty(4)
    _flow.gradient_nb(y, params.xi, params.epsilon, g)
    return g


def equations_of_motion(x, params: ClassicalParams) -> np.ndarray:
    """Canonical velocities (dp1, dp2, dq1, dq2)/dt = (-dH/dq, +dH/dp)."""
    g = hamiltonian_gradient(x, params)
    return np.array([-g[2], -g[3], g[0], g[1]])


def tangent_matrix(x, params: ClassicalParams) -> np.ndarray:
    """Jacobian A(x) of the flow field; the tangent dynamics is ddx/dt = A dx."""
    y = _as_state(x)
    if float(np.dot(y, y)) >= 2.0:
        raise DomainError("tangent matrix is singular on the s^2 = 2 boundary")
    h = np.empty((4, 4))
    _flow.hessian_nb(y, params.xi, params.epsilon, h)
    A = np.empty((4, 4))
    A[0] = -h[2]
    A[1] = -h[3]
    A[2] = h[0]
    A[3] = h[1]
    return A


def minimize_hamiltonian(params: ClassicalParams, n_starts: int = 64,
                         seed: int = 1234) -> tuple[np.ndarray, float]:
    """Global minimum of H over the ball s^2 <= 2 by multistart local search."""
    rng = np.random.default_rng(seed)
    cons = ({"type": "ineq",
             "fun": lambda z: 2.0 - 1e-9 - float(np.dot(z, z))},)
    best_x, best_f = np.zeros(4), hamiltonian_value(np.zeros(4), params)
    starts = rng.uniform(-0.7, 0.7, size=(n_starts, 4))
    for x0 in starts:
        res = scipy.optimize.minimize(
            lambda z: _flow.hamiltonian_nb(z, params.xi, params.epsilon),
            x0, method="SLSQP", constraints=cons,
            options={"maxiter": 200, "ftol": 1e-14},
        )
        if res.fun < best_f and np.dot(res.x, res.x) <= 2.0:
            best_x, best_f = res.x, float(res.fun)
    return best_x, best_f


@dataclass(frozen=True)
class SectionSpec:
    """Poincare section plane (a coordinate fixed to zero) and orientation.

    plane: 'q1' or 'q2'; orientation: +1 keeps crossings with positive
    coordinate velocity, -1 negative, 0 both.
    """

    plane: str = "q1"
    orientation: int = 1

    def pidx(self) -> int:
        if self.plane == "q1":
            return 2
        if self.plane == "q2":
            return 3
        raise InvalidParameterError(f"unknown section plane {self.plane!r}")

    def coords(self) -> tuple[str, str]:
        return ("q2", "p2") if self.plane == "q1" else ("q1", "p1")


@dataclass
class Trajectory:
    """Outcome of a single integration run."""

    x0: np.ndarray
    params: ClassicalParams
    t_final: float
    state_final: np.ndarray
    crossings: np.ndarray  # rows (t, c1, c2) on the section plane
    status: str  # 'ok' | 'truncated'
    energy_drift: float  # max |H(x(t)) - H(x0)| along the run


@dataclass
class LyapunovEstimate:
    lam: float
    tail_slope: float  # d lambda / d ln t over the last decade of t
    status: str  # 'ok' | 'truncated' | 'early-exit'
    t_final: float
    history: np.ndarray  # rows (t, lambda(t)) at renormalization times
    crossings: np.ndarray

    @property
    def truncated(self) -> bool:
        return self.status == "truncated"


_STATUS_NAMES = {0: "ok", 1: "truncated", 2: "early-exit"}


def _run_kernel(x0, params, T, rtol, atol, tangent, renorm, d0, section,
                early_threshold=0.0, early_min_time=0.0, max_cross=None):
    y0 = np.zeros(8 if tangent else 4)
    y0[:4] = _as_state(x0)
    if tangent:
        y0[4:] = 0.0  # kernel fills the default deviation direction
    pidx = section.pidx() if section is not None else -1
    orient = section.orientation if section is not None else 0
    if max_cross is None:
        max_cross = int(abs(T) * 1.5) + 64
    crossings = np.empty((max_cross if pidx >= 0 else 1, 3))
    nhist = int(abs(T) / renorm) + 8 if (tangent and renorm > 0) else 1
    lam_hist = np.empty((nhist, 2))
    status, t_fin, y_fin, log_sum, drift, n_cross, n_hist = _flow.evolve(
        y0, params.xi, params.epsilon, float(T), rtol, atol, tangent,
        float(renorm), float(d0), pidx, orient, crossings, lam_hist,
        float(early_threshold), float(early_min_time),
    )
    return (status, t_fin, y_fin, log_sum, drift,
            crossings[:n_cross].copy(), lam_hist[:n_hist].copy())


def integrate(x0, params: ClassicalParams, T: float, tol: float = 1e-12,
              section: SectionSpec | None = None) -> Trajectory:
    """Evolve a phase-space point for time T (T < 0 integrates backwards).

    Crossings of the section plane are located to |coordinate| <= 1e-10 and
    recorded with the requested orientation.
    """
    x0 = _as_state(x0)
    e0 = hamiltonian_value(x0, params)
    if not np.isfinite(e0):
        raise DomainError("initial energy is not finite")
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    status, t_fin, y_fin, _, drift, crossings, _ = _run_kernel(
        x0, params, T, tol, tol * 1e-2, False, 0.0, 0.0, section)
    return Trajectory(
        x0=x0, params=params, t_final=t_fin, state_final=y_fin[:4],
        crossings=crossings, status=_STATUS_NAMES[min(status, 1)],
        energy_drift=drift,
    )


def _tail_slope(history: np.ndarray) -> float:
    if len(history) < 4:
        return np.nan
    t_end = history[-1, 0]
    mask = history[:, 0] >= t_end / 10.0
    pts = history[mask]
    if len(pts) < 4:
        return np.nan
    return float(np.polyfit(np.log(pts[:, 0]), pts[:, 1], 1)[0])


def tangent_lyapunov(x0, params: ClassicalParams, T: float = 1e4,
                     renorm_interval: float = 1.0, tol: float = 1e-12,
                     d0: float = 1e-8, section: SectionSpec | None = None,
                     early_threshold: float = 0.0,
                     early_min_time: float = 200.0) -> LyapunovEstimate:
    """Benettin finite-time maximal Lyapunov exponent.

    The deviation vector is evolved by the analytic tangent dynamics and
    renormalized every renorm_interval; lambda = (1/T) sum ln(growth).
    early_threshold > 0 enables the confident-chaotic early exit (sustained
    lambda(t) > threshold over a full decade of t, not before
    early_min_time).
    """
    x0 = _as_state(x0)
    status, t_fin, y_fin, log_sum, drift, crossings, hist = _run_kernel(
        x0, params, T, tol, tol * 1e-2, True, renorm_interval, d0, section,
        early_threshold=early_threshold, early_min_time=early_min_time)
    lam = log_sum / abs(t_fin) if t_fin != 0 else np.nan
    return LyapunovEstimate(
        lam=float(lam), tail_slope=_tail_slope(hist),
        status=_STATUS_NAMES[status], t_final=t_fin, history=hist,
        crossings=crossings,
    )


@lru_cache(maxsize=16)
def regular_envelope(T: float, renorm_interval: float = 1.0) -> float:
    """Median finite-time Lyapunov estimate of 20 reference integrable runs.

    Reference dynamics is the harmonic case xi = 0, eps = 0 at a spread of
    energies; regular finite-time estimates decay like ln(T)/T, so this
    envelope anchors the regular/chaotic classification threshold.
    """
    params = ClassicalParams(xi=0.0, epsilon=0.0)
    rng = np.random.default_rng(987654321)
    lams = []
    while len(lams) < 20:
        x = rng.uniform(-0.8, 0.8, 4)
        if np.dot(x, x) > 1.9:
            continue
        est = tangent_lyapunov(x, params, T=T, renorm_interval=renorm_interval)
        if est.status == "ok":
            lams.append(max(est.lam, 0.0))
    return float(np.median(lams))


def regular_threshold(T: float, renorm_interval: float = 1.0) -> float:
    """Regular/chaotic split: max(10 ln(T)/T, 5 * harmonic envelope)."""
    return max(10.0 * math.log(T) / T, 5.0 * regular_envelope(T, renorm_interval))


def _smallest_root_sqrt(f, u_max: float) -> float | None:
    """Smallest root of the continuous f on [0, u_max], returned as sqrt(u).

    Scans 64 brackets and bisects the first sign change to |f| <= 1e-12.
    """
    ngrid = 64
    us = np.linspace(0.0, u_max, ngrid + 1)
    vals = np.array([f(u) for u in us])
    for k in range(ngrid):
        a, b = us[k], us[k + 1]
        fa, fb = vals[k], vals[k + 1]
        if fa == 0.0:
            return math.sqrt(a)
        if fa * fb < 0.0:
            for _ in range(80):
                m = 0.5 * (a + b)
                fm = f(m)
                if abs(fm) < 1e-12:
                    return math.sqrt(m)
                if fa * fm <= 0.0:
                    b, fb = m, fm
                else:
                    a, fa = m, fm
            return math.sqrt(0.5 * (a + b))
    if vals[-1] == 0.0:
        return math.sqrt(u_max)
    return None


def solve_section_momentum(q2: float, p2: float, E: float,
                           params: ClassicalParams) -> float | None:
    """Smallest p1 >= 0 with H(p1, p2, q1=0, q2) = E, or None.

    Solves for u = p1^2 on [0, 2 - p2^2 - q2^2] by bracketed bisection.
    """
    u_max = 2.0 - p2 * p2 - q2 * q2
    if u_max < 0.0:
        return None

    def f(u):
        y = np.array([math.sqrt(max(u, 0.0)), p2, 0.0, q2])
        return _flow.hamiltonian_nb(y, params.xi, params.epsilon) - E

    return _smallest_root_sqrt(f, u_max)


@dataclass(frozen=True)
class SectionGridConfig:
    """Coverage-run configuration for the fraction-of-regularity estimate.

    early_min_time is the shortest time at which a confidently chaotic
    trajectory may stop; larger values buy smoother Lyapunov estimates at
    the price of longer chaotic runs.
    """

    n_cells: int = 100
    budget: int = 500
    traj_time: float = 2e4
    renorm_interval: float = 1.0
    tol: float = 1e-12
    early_min_time: float = 200.0
    section: SectionSpec = field(default_factory=SectionSpec)


@dataclass
class SectionGrid:
    """Cell mesh over the section plane with per-cell Lyapunov values."""

    n_cells: int
    admissible: np.ndarray  # bool (n, n)
    visited: np.ndarray  # bool (n, n)
    lam: np.ndarray  # float (n, n), value of the first trajectory through
    regular: np.ndarray  # bool (n, n), classification of that trajectory

    def cell_of(self, c1: float, c2: float) -> tuple[int, int]:
        i = int((c1 + ROOT2) / (2.0 * ROOT2) * self.n_cells)
        j = int((c2 + ROOT2) / (2.0 * ROOT2) * self.n_cells)
        return min(max(i, 0), self.n_cells - 1), min(max(j, 0), self.n_cells - 1)

    def center_of(self, i: int, j: int) -> tuple[float, float]:
        w = 2.0 * ROOT2 / self.n_cells
        return (-ROOT2 + (i + 0.5) * w, -ROOT2 + (j + 0.5) * w)


@dataclass
class FregResult:
    energy: float
    f_reg: float
    lambda_bar: float
    coverage: float  # visited / admissible cells
    n_traj: int
    threshold: float
    grid: SectionGrid
    points: np.ndarray  # section hits (c1, c2, lambda) for scatter dumps


def freg_at_energy(E: float, params: ClassicalParams,
                   grid: SectionGridConfig | None = None) -> FregResult:
    """Fraction of regularity and mean Lyapunov exponent at energy E.

    Seeds trajectories in the lowest-index unvisited admissible cell of the
    section mesh, marks every cell crossed with the seeding trajectory's
    Lyapunov estimate, and classifies trajectories against
    regular_threshold.  Regular cells contribute zero to lambda_bar.
    Truncated (boundary-grazing) trajectories are never classified regular.
    """
    cfg = grid or SectionGridConfig()
    if cfg.n_cells < 2:
        raise InvalidParameterError("grid must have at least 2 cells per axis")
    n = cfg.n_cells
    sg = SectionGrid(
        n_cells=n,
        admissible=np.zeros((n, n), dtype=bool),
        visited=np.zeros((n, n), dtype=bool),
        lam=np.zeros((n, n)),
        regular=np.zeros((n, n), dtype=bool),
    )
    seeds = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            c1, c2 = sg.center_of(i, j)
            mom = _seed_momentum(c1, c2, E, params, cfg.section.plane)
            if mom is not None:
                sg.admissible[i, j] = True
                seeds[i, j] = mom
    if not sg.admissible.any():
        raise DomainError(f"no admissible section cell at energy {E}")

    threshold = regular_threshold(cfg.traj_time, cfg.renorm_interval)
    width = 2.0 * ROOT2 / n
    points = []
    n_traj = 0
    for flat in np.flatnonzero(sg.admissible.ravel()):
        if n_traj >= cfg.budget:
            break
        i, j = divmod(int(flat), n)
        if sg.visited[i, j]:
            continue
        c1, c2 = sg.center_of(i, j)
        x0 = _seed_state(c1, c2, seeds[i, j], cfg.section.plane)
        est = tangent_lyapunov(
            x0, params, T=cfg.traj_time, renorm_interval=cfg.renorm_interval,
            tol=cfg.tol, section=cfg.section, early_threshold=3.0 * threshold,
            early_min_time=cfg.early_min_time,
        )
        n_traj += 1
        # immediately truncated seeds carry no growth information; their
        # cells count as visited, non-regular, with zero lambda
        lam = max(est.lam, 0.0) if np.isfinite(est.lam) else 0.0
        is_regular = est.status == "ok" and est.lam < threshold
        ci = np.full(len(est.crossings) + 1, i)
        cj = np.full(len(est.crossings) + 1, j)
        if len(est.crossings):
            ci[1:] = np.clip(((est.crossings[:, 1] + ROOT2) / width).astype(int), 0, n - 1)
            cj[1:] = np.clip(((est.crossings[:, 2] + ROOT2) / width).astype(int), 0, n - 1)
            points.append(np.column_stack(
                [est.crossings[:, 1], est.crossings[:, 2],
                 np.full(len(est.crossings), lam)]))
        fresh = sg.admissible[ci, cj] & ~sg.visited[ci, cj]
        sg.visited[ci[fresh], cj[fresh]] = True
        sg.lam[ci[fresh], cj[fresh]] = lam
        sg.regular[ci[fresh], cj[fresh]] = is_regular
    visited = int(sg.visited.sum())
    adm = int(sg.admissible.sum())
    regular_cells = int((sg.visited & sg.regular).sum())
    lam_vals = np.where(sg.regular, 0.0, sg.lam)[sg.visited]
    return FregResult(
        energy=E,
        f_reg=regular_cells / visited if visited else np.nan,
        lambda_bar=float(lam_vals.mean()) if visited else np.nan,
        coverage=visited / adm,
        n_traj=n_traj,
        threshold=threshold,
        grid=sg,
        points=np.vstack(points) if points else np.empty((0, 3)),
    )


def _seed_momentum(c1, c2, E, params, plane):
    if plane == "q1":
        return solve_section_momentum(q2=c1, p2=c2, E=E, params=params)
    # q2 = 0 plane with in-plane (q1, p1): solve H(p1=c2, p2, q1=c1, 0) = E
    # for the out-of-plane momentum p2 >= 0, bisecting on u = p2^2
    u_max = 2.0 - c1 * c1 - c2 * c2
    if u_max < 0.0:
        return None

    def f(u):
        y = np.array([c2, math.sqrt(max(u, 0.0)), c1, 0.0])
        return _flow.hamiltonian_nb(y, params.xi, params.epsilon) - E

    return _smallest_root_sqrt(f, u_max)


def _seed_state(c1, c2, mom, plane):
    if plane == "q1":
        return np.array([mom, c2, 0.0, c1])
    return np.array([c2, mom, c1, 0.0])
