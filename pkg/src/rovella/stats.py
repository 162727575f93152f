"""Correlation and convergence-to-equilibrium estimation, exponential
rate fits, hitting and recurrence times for the map and the suspended
flow, local dimension of the invariant measure, and logarithm-law
exponents.

Estimators are ensemble averages over independent burnt-in starts with
jackknife standard errors; hitting experiments draw starts and targets
from a long-orbit point cloud. Every stochastic piece has its own
stream, so results are independent of the worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels as K
from .core import RovellaParams
from .measure import MapSpec, invariant_ensemble
from .parallel import run_chunked
from .rng import derive_seed

DEFAULT_CORR_ENSEMBLE = 100_000
DEFAULT_HIT_CAP = 10**8


class FitError(ValueError):
    """Not enough usable points for a scaling fit."""


@dataclass(frozen=True)
class ScalingFit:
    """Log-linear least-squares fit: slope, intercept, goodness, window."""

    slope: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise FitError("fit window collapsed")
        if not -1e-9 <= self.r_squared <= 1.0 + 1e-9:
            raise ValueError("r_squared out of [0, 1]")

    @property
    def rate(self) -> float:
        """exp(slope): the per-step factor for fits of log-series vs n."""
        return math.exp(self.slope)

    def to_json(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r_squared,
            "window": list(self.window),
            "points": self.n_points,
        }


def fit_loglinear(xs, ys) -> ScalingFit:
    """Least squares of ys on xs with r^2; xs already on the fitting scale."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise FitError("need at least two points")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return ScalingFit(float(slope), float(intercept), max(min(r2, 1.0), 0.0),
                      (float(xs[0]), float(xs[-1])), int(xs.size))


@dataclass(frozen=True)
class CorrelationSeries:
    """Estimated correlation (or convergence) values over a lag grid."""

    kind: str  # "correlation" | "convergence"
    lags: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    ensemble_size: int
    excluded: int = 0

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ValueError("ensemble size must be >= 1")
        if np.any(np.diff(self.lags) <= 0):
            raise ValueError("lags must be strictly increasing")


def _eval_obs(obs, xs, ys=None):
    return np.asarray(obs(xs) if ys is None else obs(xs, ys), dtype=float)


def _jackknife_cov(u, fv, gv):
    """Leave-one-out se of mean(u) - mean(fv) mean(gv)."""
    m = u.size
    if m < 2:
        return math.inf
    su, sf, sg = u.sum(), fv.sum(), gv.sum()
    loo = (su - u) / (m - 1) - (sf - fv) * (sg - gv) / (m - 1) ** 2
    return float(np.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2)))


def _advance(map_spec: MapSpec, xs, ys, steps: int, threads: int) -> None:
    par = map_spec.params_array()
    if map_spec.dim == 1:
        def worker(a, b):
            K.advance_ensemble_1d(map_spec.code, par, xs, a, b, steps)
    else:
        def worker(a, b):
            K.advance_ensemble_2d(par, xs, ys, a, b, steps)
    run_chunked(worker, xs.size, threads)


def corr_n(map_spec: MapSpec, f, g, lags, m: int = DEFAULT_CORR_ENSEMBLE,
           burn_in: int | None = None, seed: int = 0, threads: int = 1,
           states: np.ndarray | None = None) -> CorrelationSeries:
    """C(n) = mean[f(x) g(F^n x)] - mean[f] mean[g] over an ensemble of
    independent burnt-in starts, with jackknife standard errors.

    Truncated ensemble members are excluded and counted. A precomputed
    ensemble (from invariant_ensemble) can be passed to share the burn-in
    cost across several observable pairs.
    """
    lags = np.asarray(sorted(int(n) for n in lags), dtype=np.int64)
    if states is None:
        states = invariant_ensemble(map_spec, m, burn_in, seed, threads)
    else:
        m = states.shape[0]
    if map_spec.dim == 1:
        xs, ys = states, None
    else:
        xs, ys = states[:, 0].copy(), states[:, 1].copy()
    f0 = _eval_obs(f, xs, ys)
    cur_x = xs.copy()
    cur_y = None if ys is None else ys.copy()
    estimates, stderrs = [], []
    prev = 0
    excluded = 0
    for lag in lags:
        _advance(map_spec, cur_x, cur_y, int(lag - prev), threads)
        prev = lag
        valid = ~np.isnan(cur_x)
        excluded = int((~valid).sum())
        gv = _eval_obs(g, cur_x[valid], None if cur_y is None else cur_y[valid])
        fv = f0[valid]
        u = fv * gv
        estimates.append(float(u.mean() - fv.mean() * gv.mean()))
        stderrs.append(_jackknife_cov(u, fv, gv))
    return CorrelationSeries("correlation", lags, np.array(estimates),
                             np.array(stderrs), m, excluded)


def conv_n(map_spec: MapSpec, f, g, lags, m: int = DEFAULT_CORR_ENSEMBLE,
           m_invariant: int | None = None, seed: int = 0,
           threads: int = 1) -> CorrelationSeries:
    """Convergence to equilibrium: starts are Lebesgue-uniform (never
    burnt in; that is the defining difference from corr_n), the mean of g
    is taken over a separate burnt-in ensemble."""
    lags = np.asarray(sorted(int(n) for n in lags), dtype=np.int64)
    m_invariant = m if m_invariant is None else m_invariant
    uniform = invariant_ensemble(map_spec, m, burn_in=0,
                                 seed=derive_seed(seed, 1), threads=threads)
    inv = invariant_ensemble(map_spec, m_invariant, burn_in=None,
                             seed=derive_seed(seed, 2), threads=threads)
    if map_spec.dim == 1:
        xs, ys = uniform, None
        inv_ok = inv[~np.isnan(inv)]
        g_mu = float(np.mean(_eval_obs(g, inv_ok)))
    else:
        xs, ys = uniform[:, 0].copy(), uniform[:, 1].copy()
        ok = ~np.isnan(inv[:, 0])
        g_mu = float(np.mean(_eval_obs(g, inv[ok, 0], inv[ok, 1])))
    f0 = _eval_obs(f, xs, ys)
    cur_x, cur_y = xs.copy(), None if ys is None else ys.copy()
    estimates, stderrs = [], []
    prev = 0
    excluded = 0
    for lag in lags:
        _advance(map_spec, cur_x, cur_y, int(lag - prev), threads)
        prev = lag
        valid = ~np.isnan(cur_x)
        excluded = int((~valid).sum())
        gv = _eval_obs(g, cur_x[valid], None if cur_y is None else cur_y[valid])
        fv = f0[valid]
        u = fv * gv
        signed = float(u.mean() - g_mu * fv.mean())
        m_ok = fv.size
        loo = ((u.sum() - u) / (m_ok - 1)
               - g_mu * (fv.sum() - fv) / (m_ok - 1))
        se = float(np.sqrt((m_ok - 1) / m_ok * np.sum((loo - loo.mean()) ** 2)))
        estimates.append(abs(signed))
        stderrs.append(se)
    return CorrelationSeries("convergence", lags, np.array(estimates),
                             np.array(stderrs), m, excluded)


def fit_exponential(series: CorrelationSeries, floor_factor: float = 3.0,
                    min_points: int = 4) -> ScalingFit:
    """Least squares on (n, log|C(n)|) over lags above the noise floor
    |C(n)| > floor_factor * stderr. The slope estimates log Lambda."""
    mask = (np.abs(series.estimates) > floor_factor * series.stderrs) \
        & (series.estimates != 0.0) & np.isfinite(series.stderrs)
    if mask.sum() < min_points:
        raise FitError(
            f"only {int(mask.sum())} lags above the noise floor (need {min_points})"
        )
    xs = series.lags[mask].astype(float)
    ys = np.log(np.abs(series.estimates[mask]))
    fit = fit_loglinear(xs, ys)
    return ScalingFit(fit.slope, fit.intercept, fit.r_squared,
                      (int(xs[0]), int(xs[-1])), fit.n_points)


# ---------------------------------------------------------------------------
# hitting and recurrence


@dataclass(frozen=True)
class HittingRecord:
    """One hitting-time trial (map steps or accumulated flow time)."""

    start: tuple
    target: tuple
    r: float
    time: float
    censored: bool
    cap: float
    seed: int
    truncated: bool = False
    kind: str = "map"

    def __post_init__(self):
        if self.kind == "map" and not self.censored and self.time < 1:
            raise ValueError("map hitting times live in positive integers")
        if self.time < 0:
            raise ValueError("negative hitting time")
        if self.censored and self.time != self.cap:
            raise ValueError("censored records carry time = cap")


def hitting_time(map_spec: MapSpec, x, x0, r: float,
                 cap: int = DEFAULT_HIT_CAP, seed: int = 0) -> HittingRecord:
    """First n >= 1 with F^n(x) inside the open ball B_r(x0)."""
    if r <= 0 or cap < 1:
        raise ValueError("need r > 0 and cap >= 1")
    par = map_spec.params_array()
    if map_spec.dim == 1:
        n, cens, trunc = K.hitting_1d(map_spec.code, par, float(x), float(x0),
                                      r, cap)
        return HittingRecord((float(x),), (float(x0),), r, float(n), cens,
                             float(cap), seed, trunc)
    n, cens, trunc = K.hitting_2d(par, float(x[0]), float(x[1]),
                                  float(x0[0]), float(x0[1]), r, cap)
    return HittingRecord(tuple(map(float, x)), tuple(map(float, x0)), r,
                         float(n), cens, float(cap), seed, trunc)


def recurrence_time(map_spec: MapSpec, x0, r: float,
                    cap: int = DEFAULT_HIT_CAP, seed: int = 0) -> HittingRecord:
    """First return of x0 to its own ball: hitting_time with x = x0."""
    return hitting_time(map_spec, x0, x0, r, cap, seed)


@dataclass(frozen=True)
class Suspension:
    """Section map plus roof: local transit time -log|x|/lambda1 and a
    constant global-segment time. unit_roof swaps in roof = 1 (testing)."""

    params: RovellaParams
    t_glob: float = 1.0
    unit_roof: bool = False

    @property
    def lambda1(self) -> float:
        return self.params.eigen.lambda1

    def roof(self, x: float) -> float:
        if self.unit_roof:
            return 1.0
        return -math.log(abs(x)) / self.lambda1 + self.t_glob


def flow_hitting_time(susp: Suspension, x, x0, r: float,
                      cap_time: float = 1e8, seed: int = 0) -> HittingRecord:
    """Accumulated roof time until the section orbit enters B_r(x0).

    A start already inside the ball returns 0 (infimum over t >= 0); this
    is the section-level surrogate for the flow hitting time.
    """
    if r <= 0 or cap_time <= 0:
        raise ValueError("need r > 0 and cap_time > 0")
    spec = MapSpec("rovella2d", susp.params)
    t, _, cens, trunc = K.flow_hitting_2d(
        spec.params_array(), float(x[0]), float(x[1]), float(x0[0]),
        float(x0[1]), r, float(cap_time), 1.0 / susp.lambda1, susp.t_glob,
        susp.unit_roof,
    )
    return HittingRecord(tuple(map(float, x)), tuple(map(float, x0)), r,
                         float(t), cens, float(cap_time), seed, trunc, "flow")


def hitting_batch(map_spec: MapSpec, starts, targets, radii,
                  cap: int = DEFAULT_HIT_CAP, seed: int = 0,
                  threads: int = 1, suspension: Suspension | None = None):
    """Hitting records for aligned arrays of starts/targets/radii.

    With a suspension, times are accumulated roof times (flow records).
    """
    if map_spec.dim != 2:
        raise ValueError("hitting_batch runs on the 2-D map")
    starts = np.asarray(starts, dtype=float)
    targets = np.asarray(targets, dtype=float)
    radii = np.asarray(radii, dtype=float)
    count = radii.size
    out_time = np.empty(count)
    out_flags = np.empty(count, dtype=np.int64)
    par = map_spec.params_array()
    if suspension is None:
        def worker(a, b):
            K.hitting_batch_2d(par, starts[:, 0], starts[:, 1], targets[:, 0],
                               targets[:, 1], radii, cap, out_time, out_flags,
                               a, b)
    else:
        def worker(a, b):
            K.flow_hitting_batch_2d(par, starts[:, 0], starts[:, 1],
                                    targets[:, 0], targets[:, 1], radii,
                                    float(cap), 1.0 / suspension.lambda1,
                                    suspension.t_glob, suspension.unit_roof,
                                    out_time, out_flags, a, b)
    run_chunked(worker, count, threads)
    kind = "map" if suspension is None else "flow"
    return [
        HittingRecord(tuple(starts[i]), tuple(targets[i]), float(radii[i]),
                      float(out_time[i]), bool(out_flags[i] & 1), float(cap),
                      seed, bool(out_flags[i] & 2), kind)
        for i in range(count)
    ]


# ---------------------------------------------------------------------------
# local dimension and logarithm law


@dataclass(frozen=True)
class LocalDimension:
    """Ball-scaling estimate of the local dimension at one target."""

    d_lower: float
    d_upper: float
    fit: ScalingFit
    radii: np.ndarray
    counts: np.ndarray
    excluded_radii: np.ndarray


def local_dimension(cloud: np.ndarray, x0, radii,
                    min_cloud: int = 100_000,
                    min_largest_count: int = 50) -> LocalDimension:
    """Slope of log mu(B_r(x0)) vs log r over a geometric radius grid.

    The ball measure is the cloud fraction inside the (closed) ball;
    empty-ball radii are excluded and reported. Lower/upper values come
    from the extreme two-point slopes across the window.
    """
    cloud = np.asarray(cloud, dtype=float)
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    if cloud.shape[0] < min_cloud:
        raise ValueError(f"cloud must hold >= {min_cloud} points")
    if cloud.ndim == 1:
        pts = np.sort(cloud)
        x0v = float(x0)
        counts = np.array([
            np.searchsorted(pts, x0v + r, side="right")
            - np.searchsorted(pts, x0v - r, side="left")
            for r in radii
        ], dtype=float)
    else:
        tree = cKDTree(cloud)
        x0v = np.asarray(x0, dtype=float)
        counts = np.array([
            tree.query_ball_point(x0v, r, return_length=True) for r in radii
        ], dtype=float)
    if counts[0] < min_largest_count:
        raise ValueError(
            f"largest ball holds {int(counts[0])} points (need {min_largest_count})"
        )
    included = counts > 0
    r_in, c_in = radii[included], counts[included]
    mu = c_in / cloud.shape[0]
    fit = fit_loglinear(np.log(r_in), np.log(mu))
    two_point = np.diff(np.log(mu)) / np.diff(np.log(r_in))
    return LocalDimension(float(two_point.min()), float(two_point.max()), fit,
                          radii, counts, radii[~included])


@dataclass(frozen=True)
class LogLawFit:
    """Fit of median log hitting time against -log r."""

    fit: ScalingFit
    radii: np.ndarray
    median_log_times: np.ndarray
    excluded_radii: np.ndarray


def loglaw_exponent(records, min_radii: int = 5,
                    min_uncensored: int = 10) -> LogLawFit:
    """Slope of median log tau_r versus -log r.

    Radii without enough uncensored records are flagged and excluded;
    an all-censored grid raises FitError.
    """
    by_r: dict[float, list[float]] = {}
    for rec in records:
        if rec.censored or rec.truncated:
            by_r.setdefault(rec.r, [])
        else:
            by_r.setdefault(rec.r, []).append(math.log(rec.time) if rec.time > 0
                                              else -math.inf)
    radii, medians, excluded = [], [], []
    for r in sorted(by_r, reverse=True):
        times = [t for t in by_r[r] if math.isfinite(t)]
        if len(times) < min_uncensored:
            excluded.append(r)
        else:
            radii.append(r)
            medians.append(float(np.median(times)))
    if len(radii) < min_radii:
        raise FitError(
            f"only {len(radii)} radii usable (need {min_radii}); "
            f"{len(excluded)} censored out"
        )
    radii_arr = np.array(radii)
    med_arr = np.array(medians)
    fit = fit_loglinear(-np.log(radii_arr), med_arr)
    return LogLawFit(fit, radii_arr, med_arr, np.array(excluded))
