"""Microcanonical OTOCs in the eigenbasis: time series, long-time statistics
(mean, standard deviation, wiggliness), short-time exponential rates,
spectral smoothing, and the system-size scaling fit.

For eigenstate n and Hermitian operators V, W (matrices in the eigenbasis),

    C_n(t) = sum_m |B_nm(t)|^2,
    B_nm(t) = sum_k [e^{i(E_n-E_k)t} V_nk W_km - W_nk V_km e^{i(E_k-E_m)t}],

evaluated with two phase-weighted row products per (n, t); time units are
model units with hbar = 1.  Operators stored as i * (real antisymmetric)
enter through their real part directly: the imaginary unit contributes a
global phase to every B_nm and drops out of |B_nm|^2.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .algebra import BasisMismatchError, InvalidParameterError
from .spectra import EigenOperator

__all__ = [
    "TimeSampler",
    "ShortTimeConfig",
    "OtocSeries",
    "OtocRecord",
    "SmoothedCurve",
    "ScalingFit",
    "otoc_values",
    "otoc_at_time",
    "undefined_floor",
    "longtime_stats",
    "ehrenfest_estimate",
    "fit_short_time",
    "scan_records",
    "moving_average",
    "interpolate_at",
    "fit_scaling",
]


@dataclass(frozen=True)
class TimeSampler:
    """Random long-time sample: count times uniform on [t_min, t_max].

    Times are drawn as t_min + u * (t_max - t_min) with u from
    default_rng([seed, 0]); one draw is shared by all states of a scan.
    """

    t_min: float = 1e7
    t_max: float = 1e9
    count: int = 2500
    seed: int = 0

    def __post_init__(self):
        if not (self.t_min < self.t_max) or self.count < 2:
            raise InvalidParameterError("need t_min < t_max and count >= 2")

    def draw(self) -> np.ndarray:
        u = np.random.default_rng([self.seed, 0]).random(self.count)
        return self.t_min + u * (self.t_max - self.t_min)


@dataclass(frozen=True)
class ShortTimeConfig:
    """Growth-epoch scan: geometric grid t0 * factor^k up to the asymptotic
    window, bisection refinement of the saturation crossing, and the
    least-squares window [t_tilde/window_frac, t_tilde]."""

    t0: float = 1e-3
    factor: float = 2.0
    window_frac: float = 5.0
    fit_points: int = 24
    min_fit_points: int = 10
    rel_width: float = 1e-3


@dataclass
class OtocSeries:
    """C_n(t) on an explicit time grid."""

    n: int
    times: np.ndarray
    values: np.ndarray


@dataclass
class OtocRecord:
    """Per-eigenstate OTOC summary; None marks undefined quantities."""

    n: int
    energy: float
    mean: float
    sigma: float
    wiggliness: float | None
    lambda_q: float | None = None
    t_tilde: float | None = None
    fit_r2: float | None = None
    curvature: float | None = None

    @property
    def flags(self) -> str:
        parts = []
        if self.wiggliness is None:
            parts.append("nu_undefined")
        if self.t_tilde is None:
            parts.append("ttilde_undefined")
        if self.lambda_q is None:
            parts.append("lambda_undefined")
        return "|".join(parts) if parts else "-"


@dataclass
class SmoothedCurve:
    """Moving-average curve over defined per-state values."""

    energies: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    window: int


@dataclass
class ScalingFit:
    """Least-squares fit of ln nu = alpha ln N - beta."""

    alpha: float
    beta: float
    residual: float
    sizes: tuple[int, ...]


def _check_pair(V: EigenOperator, W: EigenOperator):
    if V.system is not W.system and V.system.basis_tag != W.system.basis_tag:
        raise BasisMismatchError("V and W must live in the same eigenbasis")
    if V.dim != W.dim:
        raise BasisMismatchError("operator dimensions differ")


def otoc_values(V: EigenOperator, W: EigenOperator, n: int,
                times: np.ndarray) -> np.ndarray:
    """C_n(t) for an array of times via phase-weighted row products."""
    _check_pair(V, W)
    dim = V.dim
    if not 0 <= n < dim:
        raise InvalidParameterError(f"state index {n} outside 0..{dim - 1}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    E = V.system.energies
    theta = np.outer(times, E)
    Fr = np.cos(theta)
    Fi = np.sin(theta)
    np.negative(Fi, out=Fi)  # phi_k = exp(-i E_k t)
    return _rows_from_phases(V.entries, W.entries, n, Fr, Fi,
                             same=V.entries is W.entries)


def _rows_from_phases(Vm, Wm, n, Fr, Fi, same=False):
    vr = Vm[n]
    G1r = (vr * Fr) @ Wm
    G1i = (vr * Fi) @ Wm
    if same:
        # W row coincides with V row: G2 = conj(G1)
        G2r, G2i = G1r, -G1i
    else:
        wr = Wm[n]
        G2r = (wr * Fr) @ Vm
        G2i = -((wr * Fi) @ Vm)
    ar = Fr[:, n][:, None]
    ai = -Fi[:, n][:, None]  # conj(phi_n)
    t1r = ar * G1r - ai * G1i
    t1i = ar * G1i + ai * G1r
    t2r = G2r * Fr - G2i * Fi
    t2i = G2r * Fi + G2i * Fr
    Br = t1r - t2r
    Bi = t1i - t2i
    return np.einsum("tm,tm->t", Br, Br) + np.einsum("tm,tm->t", Bi, Bi)


def otoc_at_time(V: EigenOperator, W: EigenOperator, n: int, t: float) -> float:
    """Single-time evaluation of C_n(t)."""
    return float(otoc_values(V, W, n, np.array([t]))[0])


def undefined_floor(V: EigenOperator, W: EigenOperator) -> float:
    """Magnitude below which a long-time mean counts as identically zero."""
    scale = float(np.max(np.abs(V.entries)) * np.max(np.abs(W.entries)))
    return 1e-12 * V.dim * scale * scale


def longtime_stats(V: EigenOperator, W: EigenOperator, n: int,
                   sampler: TimeSampler) -> OtocRecord:
    """Sample mean, sample standard deviation and wiggliness of C_n.

    Wiggliness sigma/mean is undefined (None) when the mean is below the
    conserved-pair floor of undefined_floor().
    """
    values = otoc_values(V, W, n, sampler.draw())
    return _record_from_sample(V, W, n, values)


def _record_from_sample(V, W, n, values):
    mean = float(values.mean())
    sigma = float(values.std(ddof=1))
    floor = undefined_floor(V, W)
    nu = sigma / mean if mean > floor else None
    return OtocRecord(n=n, energy=float(V.system.energies[n]), mean=mean,
                      sigma=sigma, wiggliness=nu)


def ehrenfest_estimate(series: OtocSeries, mean: float, sigma: float,
                       evaluator=None, rel_width: float = 1e-3) -> float | None:
    """Smallest grid time with C_n >= mean - sigma, bisection-refined.

    evaluator(t) -> C_n(t) drives the refinement between the bracketing
    grid points; without it the bracket midpoint is returned at grid
    resolution.  None when the scan grid never reaches the target.
    """
    target = mean - sigma
    reached = np.flatnonzero(series.values >= target)
    if reached.size == 0:
        return None
    k = int(reached[0])
    if k == 0:
        return float(series.times[0])
    a, b = float(series.times[k - 1]), float(series.times[k])
    if evaluator is None:
        return 0.5 * (a + b)
    while (b - a) > rel_width * b:
        m = 0.5 * (a + b)
        if evaluator(m) >= target:
            b = m
        else:
            a = m
    return 0.5 * (a + b)


def fit_short_time(times: np.ndarray, values: np.ndarray,
                   floor: float = 0.0,
                   min_points: int = 10) -> tuple[float, float, float] | None:
    """Exponential-rate fit C ~ e^{2 lambda t} on a window of samples.

    Returns (lambda, r2, curvature) from the least-squares line through
    (t, ln C); curvature is the magnitude of the quadratic correction at
    the window edges (in ln C units), near zero for a clean exponential
    and large for power-law growth.  None when fewer than min_points
    samples exceed the floor.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    good = values > max(floor, 0.0)
    if int(good.sum()) < min_points:
        return None
    x = times[good]
    y = np.log(values[good])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / total if total > 0 else 0.0
    c2 = np.polyfit(x, y, 2)[0]
    curvature = abs(float(c2)) * ((x[-1] - x[0]) / 2.0) ** 2
    return float(slope / 2.0), float(r2), curvature


def _scan_grid(cfg: ShortTimeConfig, t_cap: float) -> np.ndarray:
    ts = [cfg.t0]
    while ts[-1] < t_cap:
        ts.append(ts[-1] * cfg.factor)
    return np.array(ts)


def _short_time_record(V, W, n, rec: OtocRecord, grid, floor,
                       cfg: ShortTimeConfig) -> OtocRecord:
    values = otoc_values(V, W, n, grid)
    series = OtocSeries(n=n, times=grid, values=values)
    target_ok = rec.mean - rec.sigma > floor
    t_tilde = None
    if target_ok:
        t_tilde = ehrenfest_estimate(
            series, rec.mean, rec.sigma,
            evaluator=lambda t: otoc_at_time(V, W, n, t),
            rel_width=cfg.rel_width,
        )
    if t_tilde is None:
        return rec
    fit_times = np.linspace(t_tilde / cfg.window_frac, t_tilde, cfg.fit_points)
    fit = fit_short_time(fit_times, otoc_values(V, W, n, fit_times),
                         floor=floor, min_points=cfg.min_fit_points)
    if fit is None:
        return replace(rec, t_tilde=t_tilde)
    lam, r2, curv = fit
    return replace(rec, t_tilde=t_tilde, lambda_q=lam, fit_r2=r2,
                   curvature=curv)


def scan_records(V: EigenOperator, W: EigenOperator, sampler: TimeSampler,
                 short: ShortTimeConfig | None = None,
                 states: np.ndarray | None = None,
                 with_short_time: bool = True,
                 threads: int = 1) -> list[OtocRecord]:
    """Full per-state OTOC pipeline over many eigenstates.

    One shared long-time draw feeds every state's mean/sigma/wiggliness;
    the growth epoch is then scanned per state on a geometric grid capped
    at the asymptotic window.  Work is distributed over threads per state;
    results are collected in state order, so the output is independent of
    the thread count.
    """
    _check_pair(V, W)
    cfg = short or ShortTimeConfig()
    if states is None:
        states = np.arange(V.dim)
    states = np.asarray(states, dtype=int)
    floor = undefined_floor(V, W)
    times = sampler.draw()
    E = V.system.energies
    theta = np.outer(times, E)
    Fr = np.cos(theta)
    Fi = np.sin(theta)
    np.negative(Fi, out=Fi)
    grid = _scan_grid(cfg, sampler.t_min)
    same = V.entries is W.entries

    def work(n: int) -> OtocRecord:
        sample = _rows_from_phases(V.entries, W.entries, int(n), Fr, Fi, same)
        rec = _record_from_sample(V, W, int(n), sample)
        if with_short_time:
            rec = _short_time_record(V, W, int(n), rec, grid, floor, cfg)
        return rec

    if threads <= 1:
        return [work(int(n)) for n in states]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, [int(n) for n in states]))


def moving_average(energies: np.ndarray, values: np.ndarray,
                   window: int) -> SmoothedCurve:
    """Moving average over `window` consecutive defined values.

    Undefined entries (None or NaN) are skipped; every output point is the
    mean of one full window of defined values (the window shrinks only
    when fewer defined values exist than the window size).  Output points
    with identical center energies are merged.
    """
    if window < 1:
        raise InvalidParameterError("window must be >= 1")
    energies = np.asarray(energies, dtype=float)
    vals = np.array([np.nan if v is None else float(v) for v in values])
    if energies.size == 0:
        raise InvalidParameterError("empty input")
    defined = np.isfinite(vals)
    E = energies[defined]
    v = vals[defined]
    m = len(v)
    if m == 0:
        return SmoothedCurve(np.empty(0), np.empty(0), np.empty(0, dtype=int),
                             window)
    k = min(window, m)
    n_out = m - k + 1
    csum_v = np.concatenate([[0.0], np.cumsum(v)])
    csum_e = np.concatenate([[0.0], np.cumsum(E)])
    out_v = (csum_v[k:] - csum_v[:-k]) / k
    out_e = (csum_e[k:] - csum_e[:-k]) / k
    counts = np.full(n_out, k)
    # merge duplicate centers (possible with degenerate spectra)
    keep_e, keep_v, keep_c = [], [], []
    i = 0
    while i < n_out:
        j = i
        while j + 1 < n_out and out_e[j + 1] == out_e[i]:
            j += 1
        keep_e.append(out_e[i])
        keep_v.append(out_v[i:j + 1].mean())
        keep_c.append(counts[i])
        i = j + 1
    return SmoothedCurve(np.array(keep_e), np.array(keep_v),
                         np.array(keep_c, dtype=int), window)


def interpolate_at(curve: SmoothedCurve, E: float) -> float:
    """Linear interpolation of a smoothed curve at energy E."""
    if curve.energies.size == 0:
        raise InvalidParameterError("empty curve")
    if not curve.energies[0] <= E <= curve.energies[-1]:
        raise InvalidParameterError(
            f"E = {E} outside curve range "
            f"[{curve.energies[0]}, {curve.energies[-1]}]"
        )
    return float(np.interp(E, curve.energies, curve.values))


def fit_scaling(sizes, nu_values) -> ScalingFit:
    """Fit nu(N) = N^alpha e^{-beta} by least squares in log-log form."""
    sizes = np.asarray(sizes, dtype=float)
    nus = np.asarray(nu_values, dtype=float)
    if sizes.size < 3:
        raise InvalidParameterError("scaling fit needs at least 3 sizes")
    if np.any(nus <= 0) or not np.all(np.isfinite(nus)):
        raise InvalidParameterError("scaling fit needs positive finite nu values")
    x = np.log(sizes)
    y = np.log(nus)
    alpha, intercept = np.polyfit(x, y, 1)
    resid = y - (alpha * x + intercept)
    return ScalingFit(alpha=float(alpha), beta=float(-intercept),
                      residual=float(np.sqrt(np.mean(resid ** 2))),
                      sizes=tuple(int(s) for s in sizes))
