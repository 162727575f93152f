"""Invariant-measure machinery: orbits, Birkhoff averages, the Ulam
discretization of the transfer operator, expansion/recurrence time
functions with their tail fractions, the logarithmic integral, and
finite-depth reports on the Rovella conditions.

Orbits are deterministic given (map, start, seed); ensembles assign one
random stream per member, so results are identical for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from . import kernels as K
from .core import RovellaParams, default_params
from .parallel import run_chunked
from .rng import Stream

DEFAULT_BURN_IN = 10_000


@dataclass(frozen=True)
class MapSpec:
    """Named map for orbit/ensemble/Ulam machinery.

    kinds: rovella1d (base interval map on [-1/2,1/2]), rovella2d (the
    skew product on Q), doubling (2x mod 1 on [0,1), the conjugacy
    oracle), identity.
    """

    kind: str
    params: RovellaParams | None = None

    def __post_init__(self):
        if self.kind not in ("rovella1d", "rovella2d", "doubling", "identity"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind.startswith("rovella") and self.params is None:
            raise ValueError("rovella maps need params")

    @property
    def dim(self) -> int:
        return 2 if self.kind == "rovella2d" else 1

    @property
    def domain(self):
        if self.kind.startswith("rovella"):
            return (-0.5, 0.5)
        return (0.0, 1.0)

    @property
    def code(self) -> int:
        if self.kind.startswith("rovella"):
            return K.MAP_ROVELLA_1D
        if self.kind == "doubling":
            return K.MAP_DOUBLING
        return K.MAP_IDENTITY

    @property
    def default_burn_in(self) -> int:
        # uniform is already invariant for the doubling map, and float
        # doubling sheds one mantissa bit per step, so never burn it in
        if self.kind in ("doubling", "identity"):
            return 0
        return DEFAULT_BURN_IN

    def params_array(self) -> np.ndarray:
        if self.params is None:
            return np.zeros(5)
        p = self.params
        return np.array([p.rho, p.s, p.r, p.c0, p.c1])


def rovella_map(params: RovellaParams | None = None) -> MapSpec:
    return MapSpec("rovella1d", params or default_params())


def rovella_skew_map(params: RovellaParams | None = None) -> MapSpec:
    return MapSpec("rovella2d", params or default_params())


def doubling_map() -> MapSpec:
    return MapSpec("doubling")


def identity_map() -> MapSpec:
    return MapSpec("identity")


@dataclass(frozen=True)
class Orbit:
    """Deterministic orbit record; samples are the kept post-burn-in points.

    truncated_at is the sample index where the orbit fell onto the
    singular point (samples from there on are NaN), or None.
    """

    map: MapSpec
    x0: tuple
    burn_in: int
    n: int
    samples: np.ndarray
    seed: int
    truncated_at: int | None = None

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None

    def valid_samples(self) -> np.ndarray:
        if not self.truncated:
            return self.samples
        return self.samples[: self.truncated_at]


def iterate_orbit(map_spec: MapSpec, x0=None, n: int = 1000, burn_in: int = 0,
                  seed: int = 0) -> Orbit:
    """Iterate the map from x0 (drawn uniformly from stream (seed, 0) when
    omitted), recording n samples after burn_in steps."""
    st = Stream(seed, 0)
    lo, hi = map_spec.domain
    par = map_spec.params_array()
    if map_spec.dim == 1:
        if x0 is None:
            x0 = st.uniform_in(lo, hi)
        out = np.empty(n)
        trunc = K.orbit_1d(map_spec.code, par, float(x0), burn_in, n, out)
        return Orbit(map_spec, (float(x0),), burn_in, n, out, seed,
                     None if trunc < 0 else int(trunc))
    if x0 is None:
        x0 = (st.uniform_in(lo, hi), st.uniform_in(lo, hi))
    out = np.empty((n, 2))
    trunc = K.orbit_2d(par, float(x0[0]), float(x0[1]), burn_in, n, out)
    return Orbit(map_spec, (float(x0[0]), float(x0[1])), burn_in, n, out, seed,
                 None if trunc < 0 else int(trunc))


class TruncatedOrbitError(RuntimeError):
    """Orbit hit the singular point; averages would be partial."""


def birkhoff_average(orbit: Orbit, phi, allow_partial: bool = False) -> float:
    """(1/N) sum phi(x_i). phi takes an array (or two for 2-D orbits)."""
    if orbit.truncated and not allow_partial:
        raise TruncatedOrbitError(
            f"orbit truncated at sample {orbit.truncated_at}"
        )
    samples = orbit.valid_samples()
    if samples.size == 0:
        raise ValueError("empty orbit")
    if orbit.map.dim == 1:
        return float(np.mean(phi(samples)))
    return float(np.mean(phi(samples[:, 0], samples[:, 1])))


def log_abs_deriv(params: RovellaParams, x) -> np.ndarray:
    """log |T'(x)| = log(rho s) + (s-1) log|x|."""
    return math.log(params.rho * params.s) + (params.s - 1.0) * np.log(np.abs(x))


def lyapunov_exponent(map_spec: MapSpec, n: int = 10**6,
                      burn_in: int | None = None, seed: int = 0,
                      x0=None) -> float:
    """Birkhoff average of log|T'| along one long orbit."""
    if map_spec.kind == "doubling":
        return math.log(2.0)
    if map_spec.kind != "rovella1d":
        raise ValueError("lyapunov_exponent expects a 1-D map")
    burn_in = map_spec.default_burn_in if burn_in is None else burn_in
    st = Stream(seed, 0)
    lo, hi = map_spec.domain
    if x0 is None:
        x0 = st.uniform_in(lo, hi)
    p = map_spec.params
    # settle the start before the single-pass kernel
    warm = iterate_orbit(map_spec, x0, n=1, burn_in=burn_in, seed=seed)
    if warm.truncated:
        raise TruncatedOrbitError("burn-in fell onto the singular point")
    val = K.log_deriv_sum_orbit(
        map_spec.code, map_spec.params_array(),
        math.log(p.rho * p.s), p.s - 1.0, float(warm.samples[0]), n,
    )
    if math.isnan(val):
        raise TruncatedOrbitError("orbit fell onto the singular point")
    return float(val)


# ---------------------------------------------------------------------------
# expansion / recurrence times and the tail


@dataclass(frozen=True)
class CensoredTime:
    """Minimal time with a right-censoring marker at the orbit length."""

    value: int
    censored: bool


def _min_time_from_partial_sums(sums: np.ndarray, thresholds: np.ndarray,
                                bad_if_geq: bool) -> CensoredTime:
    length = sums.size
    if bad_if_geq:
        bad = np.nonzero(sums >= thresholds)[0]
    else:
        bad = np.nonzero(sums <= thresholds)[0]
    if bad.size == 0:
        return CensoredTime(1, False)
    last_bad = int(bad[-1]) + 1  # 1-based n
    if last_bad == length:
        return CensoredTime(length, True)
    return CensoredTime(last_bad + 1, False)


def expansion_time(orbit: Orbit, c: float) -> CensoredTime:
    """Minimal N so every later partial average of log|T'| exceeds c."""
    if orbit.map.kind != "rovella1d":
        raise ValueError("expansion_time expects a rovella1d orbit")
    if orbit.truncated:
        return CensoredTime(orbit.n, True)
    xs = orbit.samples
    sums = np.cumsum(log_abs_deriv(orbit.map.params, xs))
    n = np.arange(1, xs.size + 1, dtype=float)
    return _min_time_from_partial_sums(sums, c * n, bad_if_geq=False)


def recurrence_time(orbit: Orbit, delta: float = 0.005,
                    eps: float = 0.1) -> CensoredTime:
    """Minimal N so every later partial average of -log d_delta(x, 0)
    stays below eps (slow recurrence to the critical point)."""
    if orbit.map.dim != 1:
        raise ValueError("recurrence_time expects a 1-D orbit")
    if orbit.truncated:
        return CensoredTime(orbit.n, True)
    ax = np.abs(orbit.samples)
    terms = np.where(ax <= delta, -np.log(ax), 0.0)
    sums = np.cumsum(terms)
    n = np.arange(1, ax.size + 1, dtype=float)
    return _min_time_from_partial_sums(sums, eps * n, bad_if_geq=True)


@dataclass(frozen=True)
class ExpansionRecurrenceEnsemble:
    """Per-orbit (E, R) pairs over uniformly drawn starts."""

    e_values: np.ndarray
    r_values: np.ndarray
    e_censored: np.ndarray
    r_censored: np.ndarray
    truncated: np.ndarray
    length: int
    c: float
    delta: float
    eps: float
    seed: int

    @property
    def count(self) -> int:
        return self.e_values.size


def expansion_recurrence_ensemble(params: RovellaParams, count: int,
                                  length: int, c: float, delta: float = 0.005,
                                  eps: float = 0.1, seed: int = 0,
                                  threads: int = 1) -> ExpansionRecurrenceEnsemble:
    """E and R for `count` orbits with Lebesgue-uniform starts (the tail
    set is measured w.r.t. Lebesgue). Orbit i draws from stream (seed, i)."""
    spec = rovella_map(params)
    par = spec.params_array()
    log_rho_s = math.log(params.rho * params.s)
    out_e = np.empty(count, dtype=np.int64)
    out_r = np.empty(count, dtype=np.int64)
    out_flags = np.empty(count, dtype=np.int64)
    lo, hi = spec.domain

    def worker(start, stop):
        K.expansion_recurrence_batch(
            spec.code, par, log_rho_s, params.s - 1.0, np.uint64(seed),
            start, stop, length, c, delta, eps, lo, hi,
            out_e, out_r, out_flags,
        )

    run_chunked(worker, count, threads)
    return ExpansionRecurrenceEnsemble(
        out_e, out_r,
        (out_flags & 1).astype(bool), (out_flags & 2).astype(bool),
        (out_flags & 4).astype(bool), length, c, delta, eps, seed,
    )


def tail_fraction(ens: ExpansionRecurrenceEnsemble, n: int) -> float:
    """Fraction of starts with E > n or R > n; censored counts as exceeding."""
    exceed_e = ens.e_censored | (ens.e_values > n)
    exceed_r = ens.r_censored | (ens.r_values > n)
    return float(np.mean(exceed_e | exceed_r))


def tail_series(ens: ExpansionRecurrenceEnsemble, ns) -> np.ndarray:
    return np.array([tail_fraction(ens, int(n)) for n in ns])


# ---------------------------------------------------------------------------
# Ulam discretization


@dataclass(frozen=True)
class UlamOperator:
    """Row-stochastic sparse discretization of the transfer operator."""

    n_bins: int
    matrix: csr_matrix
    lo: float
    hi: float

    def __post_init__(self):
        sums = np.asarray(self.matrix.sum(axis=1)).ravel()
        if np.max(np.abs(sums - 1.0)) > 1e-12:
            raise ValueError("rows must sum to 1 within 1e-12")
        if self.matrix.nnz and self.matrix.data.min() < 0:
            raise ValueError("transition weights must be nonnegative")

    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_bins + 1)

    def centers(self) -> np.ndarray:
        e = self.edges()
        return 0.5 * (e[:-1] + e[1:])

    def row_sum_error(self) -> float:
        sums = np.asarray(self.matrix.sum(axis=1)).ravel()
        return float(np.max(np.abs(sums - 1.0)))


def build_ulam(map_spec: MapSpec, n_bins: int, samples_per_bin: int = 64,
               seed: int = 0) -> UlamOperator:
    """Ulam matrix P_ij ~ m(B_i and T^-1 B_j) / m(B_i) by stratified
    sampling, one stream per bin. Bins are half-open except the last; a
    bin straddling 0 is split there first so each branch is sampled."""
    if map_spec.dim != 1:
        raise ValueError("Ulam discretization is 1-D only")
    if n_bins < 2:
        raise ValueError("need at least 2 bins")
    lo, hi = map_spec.domain
    edges = np.linspace(lo, hi, n_bins + 1)
    cap = n_bins * samples_per_bin * 2
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    weights = np.empty(cap)
    k = K.ulam_targets(map_spec.code, map_spec.params_array(), edges,
                       samples_per_bin, np.uint64(seed), rows, cols, weights)
    m = csr_matrix((weights[:k], (rows[:k], cols[:k])),
                   shape=(n_bins, n_bins))
    m.sum_duplicates()
    row_sums = np.asarray(m.sum(axis=1)).ravel()
    if np.any(row_sums <= 0):
        raise RuntimeError("a bin produced no valid transition samples")
    scale = csr_matrix((1.0 / row_sums, (np.arange(n_bins), np.arange(n_bins))))
    return UlamOperator(n_bins, scale @ m, lo, hi)


@dataclass(frozen=True)
class DensityEstimate:
    """Left fixed vector of an Ulam matrix (piecewise-constant density)."""

    n_bins: int
    weights: np.ndarray
    residual: float
    iterations: int
    converged: bool

    def __post_init__(self):
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        if self.weights.min() < 0:
            raise ValueError("weights must be nonnegative")


def invariant_density(ulam: UlamOperator, tol: float = 1e-12,
                      max_iter: int = 50_000) -> DensityEstimate:
    """Power iteration from the uniform density; residual is the L1 norm
    of v P - v. Non-convergence is reported, not raised."""
    n = ulam.n_bins
    v = np.full(n, 1.0 / n)
    pt = ulam.matrix.T.tocsr()  # v @ P as P^T v
    residual = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = pt @ v
        w /= w.sum()
        residual = float(np.abs(w - v).sum())
        v = w
        if residual <= tol:
            break
    v = v / v.sum()
    return DensityEstimate(n, v, residual, iterations, residual <= tol)


# ---------------------------------------------------------------------------
# logarithmic integral


def log_integral_orbit(orbit: Orbit, allow_partial: bool = False) -> float:
    """Birkhoff estimate of the integral of -log|x|."""
    if orbit.map.dim != 1:
        raise ValueError("log integral runs over 1-D orbits")
    return birkhoff_average(orbit, lambda x: -np.log(np.abs(x)),
                            allow_partial=allow_partial)


def _neg_log_primitive(c: float) -> float:
    """integral of -log t over [0, c] = c (1 - log c)."""
    return 0.0 if c <= 0.0 else c * (1.0 - math.log(c))


def neg_log_bin_mean(a: float, b: float) -> float:
    """Exact mean of -log|x| over [a, b] (handles bins touching 0)."""
    if a >= 0.0:
        val = _neg_log_primitive(b) - _neg_log_primitive(a)
    elif b <= 0.0:
        val = _neg_log_primitive(-a) - _neg_log_primitive(-b)
    else:
        val = _neg_log_primitive(-a) + _neg_log_primitive(b)
    return val / (b - a)


def log_integral_density(density: DensityEstimate, lo: float = -0.5,
                         hi: float = 0.5) -> float:
    """sum_i w_i * (-log|center_i|) against a piecewise-constant density.

    Bins whose closure contains 0 use the exact partial integral of
    -log|x| (the singularity is integrable but the center value is not
    representative there).
    """
    edges = np.linspace(lo, hi, density.n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    vals = -np.log(np.abs(centers))
    touches = (edges[:-1] <= 0.0) & (edges[1:] >= 0.0)
    for i in np.nonzero(touches)[0]:
        vals[i] = neg_log_bin_mean(float(edges[i]), float(edges[i + 1]))
    return float(np.sum(density.weights * vals))


def uniform_density(n_bins: int) -> DensityEstimate:
    """Exact Lebesgue density in bin form (oracle input)."""
    return DensityEstimate(n_bins, np.full(n_bins, 1.0 / n_bins), 0.0, 0, True)


# ---------------------------------------------------------------------------
# finite-depth condition report


@dataclass(frozen=True)
class RovellaConditionReport:
    """Report-only finite-depth measurements of the map conditions.

    No pass/fail verdicts: the conditions quantify over all n, so finite
    depth can only fail to falsify them.
    """

    depth: int
    c1_exponent: float       # slope of log|T'| vs log|x| along x = 2^-k
    c1_max_dev: float        # worst deviation from s - 1 across the ladder
    c2_min_root: float       # min over n <= depth of |(T^n)'(+-1/2)|^(1/n)
    c3_alpha_hat: float      # max over n of -log|T^(n-1)(+-1/2)| / n
    c4_coverage: float       # fraction of 256 bins visited by critical orbits
    truncated: bool          # a critical orbit fell onto the singular point

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "c1_exponent": self.c1_exponent,
            "c1_max_dev": self.c1_max_dev,
            "c2_min_root": self.c2_min_root,
            "c3_alpha_hat": self.c3_alpha_hat,
            "c4_coverage": self.c4_coverage,
            "truncated": self.truncated,
        }


def check_rovella_conditions(params: RovellaParams, depth: int = 40,
                             coverage_bins: int = 256) -> RovellaConditionReport:
    """Measure (C1)-(C4) at finite depth for the critical orbits of +-1/2."""
    if depth > 60:
        raise ValueError("depth is capped at 60 (log-space products only)")
    spec = rovella_map(params)

    # (C1): successive slopes of log|T'(2^-k)| vs log 2^-k; the additive
    # constant log(rho s) cancels, leaving s - 1 exactly.
    ks = np.arange(4, 21)
    logs = log_abs_deriv(params, 2.0 ** -ks.astype(float))
    slopes = np.diff(logs) / (-math.log(2.0))
    c1 = float(np.mean(slopes))
    c1_dev = float(np.max(np.abs(slopes - (params.s - 1.0))))

    c2_roots = []
    c3_vals = []
    visited = np.zeros(coverage_bins, dtype=bool)
    truncated = False
    cover_len = depth * 100
    for x0 in (0.5, -0.5):
        orbit = iterate_orbit(spec, x0, n=max(depth, cover_len), burn_in=0)
        truncated = truncated or orbit.truncated
        xs = orbit.valid_samples()
        head = xs[:depth]
        if head.size:
            sums = np.cumsum(log_abs_deriv(params, head))
            n = np.arange(1, head.size + 1, dtype=float)
            c2_roots.append(np.exp(sums / n).min())
            c3_vals.append(np.max(-np.log(np.abs(head)) / n))
        cover = xs[:cover_len]
        idx = np.clip(((cover + 0.5) * coverage_bins).astype(int), 0,
                      coverage_bins - 1)
        visited[idx] = True
    return RovellaConditionReport(
        depth=depth,
        c1_exponent=c1,
        c1_max_dev=c1_dev,
        c2_min_root=float(min(c2_roots)) if c2_roots else math.nan,
        c3_alpha_hat=float(max(c3_vals)) if c3_vals else math.nan,
        c4_coverage=float(visited.mean()),
        truncated=truncated,
    )


# ---------------------------------------------------------------------------
# invariant ensembles (states for the statistics module)


def invariant_ensemble(map_spec: MapSpec, count: int,
                       burn_in: int | None = None, seed: int = 0,
                       threads: int = 1):
    """States distributed by the empirical invariant measure: uniform
    starts, one stream per member, each burnt in. Truncated members are
    NaN (callers filter and count them)."""
    burn_in = map_spec.default_burn_in if burn_in is None else burn_in
    par = map_spec.params_array()
    lo, hi = map_spec.domain
    if map_spec.dim == 1:
        xs = np.empty(count)

        def worker(start, stop):
            K.seed_ensemble_1d(map_spec.code, par, np.uint64(seed), start,
                               stop, burn_in, lo, hi, xs)

        run_chunked(worker, count, threads)
        return xs
    xs = np.empty(count)
    ys = np.empty(count)

    def worker(start, stop):
        K.seed_ensemble_2d(par, np.uint64(seed), start, stop, burn_in, xs, ys)

    run_chunked(worker, count, threads)
    return np.column_stack((xs, ys))
