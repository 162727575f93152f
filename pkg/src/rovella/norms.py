"""Observable norms: sup / Hoelder / vertical-Lipschitz norms, universal
p-variation, oscillation seminorms, BV_{p,r} norms, variation on the
square, box-kernel mollification and the fiber-averaging projection.

Two function carriers are used. StepFunction is an exact piecewise
constant function; every norm of it here is computed in closed form
(variation from the alternating-extrema reduction, oscillation from the
band decomposition, mollification through the exact antiderivative), so
inequality tests carry no discretization slack. GridObservable holds
uniform samples on the interval or the square and gets the grid versions
of the same quantities.

Conventions: the constant A in Var_{p,r} is fixed to 1 and the epsilon
supremum runs over the geometric net {2^-k}; L^p norms are taken with
respect to normalized Lebesgue measure on the domain; the essential
supremum of the oscillation is the plain maximum on grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .core import RovellaParams
from .rng import Stream

DEFAULT_GRID_N = 4096
DEFAULT_SQUARE_N = 512


class NormPropertyError(AssertionError):
    """A proved inequality failed numerically; message carries both sides."""


@dataclass(frozen=True)
class StepFunction:
    """Piecewise-constant function on [lo, hi], breakpoints strictly inside.

    Pieces are half-open [b_{j-1}, b_j); values has one entry more than
    breaks. Point values at breakpoints never matter for the (essential)
    quantities computed here.
    """

    breaks: np.ndarray
    values: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "breaks", np.asarray(self.breaks, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.size != self.breaks.size + 1:
            raise ValueError("need exactly one value per piece")
        bounds = self.boundaries()
        if not np.all(np.diff(bounds) > 0):
            raise ValueError("breakpoints must be strictly increasing inside (lo, hi)")

    def boundaries(self) -> np.ndarray:
        return np.concatenate(([self.lo], self.breaks, [self.hi]))

    def lengths(self) -> np.ndarray:
        return np.diff(self.boundaries())

    def __call__(self, x) -> np.ndarray:
        idx = np.searchsorted(self.breaks, np.asarray(x, dtype=float), side="right")
        return self.values[idx]


@dataclass(frozen=True)
class GridObservable:
    """Uniform samples on an interval or on the square (same axis twice).

    Interval samples have shape (n,) at linspace(lo, hi, n); square
    samples have shape (n, n) indexed [ix, iy].
    """

    domain: str  # "interval" | "square"
    samples: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.domain == "interval":
            if self.samples.ndim != 1 or self.samples.size < 2:
                raise ValueError("interval observable needs >= 2 samples")
        elif self.domain == "square":
            if self.samples.ndim != 2 or self.samples.shape[0] != self.samples.shape[1]:
                raise ValueError("square observable needs an (n, n) sample array")
            if self.samples.shape[0] < 2:
                raise ValueError("square observable needs n >= 2")
        else:
            raise ValueError("domain must be 'interval' or 'square'")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def xs(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


def grid_from_function(func, n: int = DEFAULT_GRID_N, lo: float = 0.0,
                       hi: float = 1.0) -> GridObservable:
    xs = np.linspace(lo, hi, n)
    return GridObservable("interval", np.asarray(func(xs), dtype=float), lo, hi)


def square_from_function(func, n: int = DEFAULT_SQUARE_N, lo: float = -0.5,
                         hi: float = 0.5) -> GridObservable:
    xs = np.linspace(lo, hi, n)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    return GridObservable("square", np.asarray(func(gx, gy), dtype=float), lo, hi)


def fiber_map_grid(p: RovellaParams, n: int = DEFAULT_SQUARE_N) -> GridObservable:
    """G sampled on an even n x n grid of Q (even n keeps x = 0 off the grid)."""
    if n % 2:
        raise ValueError("use an even grid so no column sits on x = 0")

    def g(x, y):
        return np.where(x > 0, y * np.abs(x) ** p.r + p.c0,
                        -y * np.abs(x) ** p.r + p.c1)

    return square_from_function(g, n)


# ---------------------------------------------------------------------------
# sup / Hoelder / vertical Lipschitz


def sup_norm(f) -> float:
    if isinstance(f, StepFunction):
        return float(np.max(np.abs(f.values)))
    return float(np.max(np.abs(f.samples)))


def holder_seminorm(f: GridObservable, alpha: float, _chunk: int = 512) -> float:
    """Grid supremum of |f(x)-f(y)| / |x-y|^alpha over all sample pairs."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if f.domain != "interval":
        raise ValueError("holder_seminorm expects an interval observable")
    xs, s = f.xs(), f.samples
    best = 0.0
    for start in range(0, f.n - 1, _chunk):
        stop = min(start + _chunk, f.n - 1)
        block = slice(start, stop)
        # pairs (i, j) with j > i, i in block
        dx = xs[None, stop:] - xs[block, None]  # strictly positive wedge
        dv = np.abs(s[None, stop:] - s[block, None])
        q = dv / dx**alpha
        if q.size:
            best = max(best, float(q.max()))
        # pairs inside the block
        dxb = xs[None, start + 1:stop] - xs[block, None]
        dvb = np.abs(s[None, start + 1:stop] - s[block, None])
        wedge = dxb > 0
        if wedge.any():
            best = max(best, float((dvb[wedge] / dxb[wedge] ** alpha).max()))
    return best


def y_lip_norm(g: GridObservable) -> float:
    """sup|g| plus the supremum over columns of the vertical Lipschitz quotient."""
    if g.domain != "square":
        raise ValueError("y_lip_norm expects a square observable")
    lip = float(np.max(np.abs(np.diff(g.samples, axis=1)))) / g.h
    return sup_norm(g) + lip


# ---------------------------------------------------------------------------
# universal p-variation


def _alternating_extrema(vals: np.ndarray) -> np.ndarray:
    """Subsequence of strict local extrema (endpoints kept)."""
    keep = [0]
    direction = 0
    for i in range(1, vals.size):
        d = vals[i] - vals[keep[-1]]
        if d == 0.0:
            continue
        nd = 1 if d > 0 else -1
        if nd == direction:
            keep[-1] = i  # extend the run to its extreme
        else:
            keep.append(i)
            direction = nd
    return vals[np.array(keep)]


def _var_p_of_sequence(vals: np.ndarray, p: float) -> float:
    """Exact sup over subsequences of sum |w_i - w_{i+1}|^p, to the 1/p.

    A subdivision of the interval picks an order-preserving subsequence
    of the value sequence, so the supremum is a longest-path problem.
    For p > 1 the optimum may skip local extrema (a single large jump
    beats a chain of small ones), so a greedy alternation is not enough;
    the quadratic program below is exact. Monotone runs never help, so
    the sequence is first reduced to its extrema.
    """
    w = _alternating_extrema(np.asarray(vals, dtype=float))
    if w.size < 2:
        return 0.0
    if p == 1.0:
        return float(np.sum(np.abs(np.diff(w))))
    best = np.zeros(w.size)
    for i in range(1, w.size):
        best[i] = np.max(best[:i] + np.abs(w[i] - w[:i]) ** p)
    return float(np.max(best) ** (1.0 / p))


def universal_var_p(f, p: float) -> float:
    """Universal p-variation: sup over finite subdivisions of
    (sum |f(x_i)-f(x_{i+1})|^p)^(1/p).

    Exact for step functions (the subdivision only sees the breakpoint
    structure); for grid observables it is the variation of the sample
    sequence.
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if isinstance(f, StepFunction):
        return _var_p_of_sequence(f.values, p)
    if f.domain != "interval":
        raise ValueError("universal_var_p expects an interval carrier")
    return _var_p_of_sequence(f.samples, p)


def var_p_bruteforce(f: StepFunction, grid: np.ndarray, p: float) -> float:
    """Oracle: exact sup over all subdivisions of a fixed point grid.

    Longest-path dynamic program over the DAG of grid points; used by
    tests on corpora with few breakpoints.
    """
    vals = f(grid)
    n = vals.size
    best = np.zeros(n)
    for i in range(1, n):
        best[i] = np.max(best[:i] + np.abs(vals[i] - vals[:i]) ** p)
    return float(np.max(best) ** (1.0 / p))


# ---------------------------------------------------------------------------
# oscillation and Var_{p,r}


def _step_osc_profile(f: StepFunction, eps: float):
    """Oscillation x -> ess sup range over B_eps(x), exact for steps.

    Returns (segment lengths, oscillation per segment): the profile is
    piecewise constant with change points at breakpoints +- eps.
    """
    bounds = f.boundaries()
    inner = f.breaks
    cuts = np.concatenate((inner - eps, inner + eps))
    cuts = cuts[(cuts > f.lo) & (cuts < f.hi)]
    knots = np.unique(np.concatenate(([f.lo], cuts, [f.hi])))
    mids = 0.5 * (knots[:-1] + knots[1:])
    osc = np.empty(mids.size)
    for k, mid in enumerate(mids):
        j_lo = max(np.searchsorted(bounds, mid - eps, side="right") - 1, 0)
        j_hi = min(np.searchsorted(bounds, mid + eps, side="left") - 1,
                   f.values.size - 1)
        window = f.values[j_lo:j_hi + 1]
        osc[k] = window.max() - window.min()
    return np.diff(knots), osc


def osc_p(f, eps: float, p: float) -> float:
    """L^p norm (normalized Lebesgue) of the local eps-oscillation.

    Exact for step functions; on grids the essential supremum over the
    open ball becomes the max over sample windows.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if not (p >= 1.0 or p == math.inf):
        raise ValueError("p must be >= 1 (or inf)")
    if isinstance(f, StepFunction):
        lengths, osc = _step_osc_profile(f, eps)
        if p == math.inf:
            return float(osc[lengths > 0].max(initial=0.0))
        total = f.hi - f.lo
        return float((np.sum(lengths * osc**p) / total) ** (1.0 / p))
    if f.domain != "interval":
        raise ValueError("osc_p expects an interval carrier")
    hw = _window_halfwidth(eps, f.h)
    if hw == 0:
        return 0.0
    size = 2 * hw + 1
    osc = (maximum_filter1d(f.samples, size, mode="nearest")
           - minimum_filter1d(f.samples, size, mode="nearest"))
    if p == math.inf:
        return float(osc.max())
    return float(np.mean(osc**p) ** (1.0 / p))


def _window_halfwidth(eps: float, h: float) -> int:
    """Largest k with k*h < eps: grid indices inside the open eps-ball."""
    return max(int(math.ceil(eps / h)) - 1, 0)


def lp_norm(f, p: float) -> float:
    """L^p norm w.r.t. normalized Lebesgue measure on the domain."""
    if isinstance(f, StepFunction):
        if p == math.inf:
            return sup_norm(f)
        total = f.hi - f.lo
        return float((np.sum(f.lengths() * np.abs(f.values) ** p) / total)
                     ** (1.0 / p))
    if p == math.inf:
        return sup_norm(f)
    return float(np.mean(np.abs(f.samples) ** p) ** (1.0 / p))


def eps_net(f) -> np.ndarray:
    """Geometric epsilon net {2^-k} from A = 1 down to the carrier's scale.

    Step functions saturate once 2 eps clears the smallest gap between
    boundaries, so the net stops one level past that; grids stop at 4/n.
    """
    if isinstance(f, StepFunction):
        min_gap = float(np.min(np.diff(f.boundaries())))
        floor = max(min_gap / 2.0, 2.0**-60)
    else:
        floor = 4.0 / f.n
    ks = [0]
    while 2.0 ** -(ks[-1]) > floor and ks[-1] < 60:
        ks.append(ks[-1] + 1)
    return 2.0 ** -np.array(ks, dtype=float)


def var_pr_norm(f, p: float, r: float, eps_values=None):
    """(Var_{p,r}, ||.||_{p,r}): seminorm sup_eps eps^-r osc_p and the
    full norm obtained by adding the L^p norm. A is fixed to 1."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    eps_values = eps_net(f) if eps_values is None else np.asarray(eps_values)
    semi = max((eps ** -r) * osc_p(f, eps, p) for eps in eps_values)
    return float(semi), float(semi + lp_norm(f, p))


# ---------------------------------------------------------------------------
# variation on the square


def var_square(g: GridObservable) -> float:
    """sup over x-subdivisions, with a free fiber coordinate per gap, of
    sum |g(x_i, y_i) - g(x_{i+1}, y_i)|.

    On a grid the full column sequence with the per-gap best y dominates
    every subdivision (triangle inequality in x, free choice in y), so
    the supremum is a single vectorized pass.
    """
    if g.domain != "square":
        raise ValueError("var_square expects a square observable")
    gaps = np.abs(np.diff(g.samples, axis=0)).max(axis=1)
    return float(gaps.sum())


# ---------------------------------------------------------------------------
# mollification (box kernel, even reflection at the boundary)


def _reflected_pieces(f: StepFunction):
    """Boundaries and values of the even-reflection extension, one domain
    length to each side."""
    b = f.boundaries()
    v = f.values
    left_b = 2 * f.lo - b[::-1]
    right_b = 2 * f.hi - b[::-1]
    bounds = np.concatenate((left_b[:-1], b, right_b[1:]))
    vals = np.concatenate((v[::-1], v, v[::-1]))
    return bounds, vals


def _antiderivative(bounds: np.ndarray, vals: np.ndarray):
    acc = np.concatenate(([0.0], np.cumsum(np.diff(bounds) * vals)))

    def F(t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(bounds, t, side="right") - 1, 0,
                      vals.size - 1)
        return acc[idx] + (t - bounds[idx]) * vals[idx]

    return F


def mollify(f, eps: float, n: int | None = None) -> GridObservable:
    """Convolution with the normalized box kernel of radius eps.

    The domain is extended by even reflection, which keeps constants
    exact and preserves the L^1 comparison with the oscillation. Step
    input: the exact convolution sampled on a uniform grid. Grid input:
    centered moving average over the same window the oscillation uses.
    """
    if not 0.0 < eps <= 0.25:
        raise ValueError("eps must lie in (0, 1/4]")
    if isinstance(f, StepFunction):
        n = DEFAULT_GRID_N if n is None else n
        xs = np.linspace(f.lo, f.hi, n)
        F = _antiderivative(*_reflected_pieces(f))
        samples = (F(xs + eps) - F(xs - eps)) / (2.0 * eps)
        return GridObservable("interval", samples, f.lo, f.hi)
    if f.domain != "interval":
        raise ValueError("mollify expects an interval carrier")
    hw = _window_halfwidth(eps, f.h)
    if hw == 0:
        return GridObservable("interval", f.samples.copy(), f.lo, f.hi)
    padded = np.pad(f.samples, hw, mode="reflect")
    kernel_size = 2 * hw + 1
    csum = np.concatenate(([0.0], np.cumsum(padded)))
    smoothed = (csum[kernel_size:] - csum[:-kernel_size]) / kernel_size
    return GridObservable("interval", smoothed, f.lo, f.hi)


def mollify_knots(f: StepFunction, eps: float):
    """Exact piecewise-linear representation (knots, values) of f * box_eps
    restricted to the domain."""
    bounds, vals = _reflected_pieces(f)
    F = _antiderivative(bounds, vals)
    cuts = np.concatenate((bounds - eps, bounds + eps))
    cuts = cuts[(cuts > f.lo) & (cuts < f.hi)]
    knots = np.unique(np.concatenate(([f.lo], cuts, [f.hi])))
    return knots, (F(knots + eps) - F(knots - eps)) / (2.0 * eps)


def mollify_l1_error(f: StepFunction, eps: float) -> float:
    """Exact ||f - f_eps||_1 (normalized Lebesgue)."""
    knots, mvals = mollify_knots(f, eps)
    pieces = np.unique(np.concatenate((knots, f.boundaries())))
    F = _antiderivative(*_reflected_pieces(f))
    lo_vals = (F(pieces + eps) - F(pieces - eps)) / (2.0 * eps)
    total = 0.0
    for a, b, fe_a, fe_b in zip(pieces[:-1], pieces[1:], lo_vals[:-1], lo_vals[1:]):
        fv = float(f(0.5 * (a + b)))
        ga, gb = fv - fe_a, fv - fe_b
        if ga * gb >= 0.0:
            total += 0.5 * (abs(ga) + abs(gb)) * (b - a)
        else:
            z = a + (b - a) * ga / (ga - gb)
            total += 0.5 * (abs(ga) * (z - a) + abs(gb) * (b - z))
    return float(total / (f.hi - f.lo))


def mollified_holder(f: StepFunction, eps: float, alpha: float) -> float:
    """Exact Hoelder seminorm of the mollified step function.

    f_eps is piecewise linear, and the quotient |df| / dx^alpha has no
    interior maximum along a linear segment, so the supremum is attained
    on pairs of knots.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    knots, vals = mollify_knots(f, eps)
    dx = knots[None, :] - knots[:, None]
    dv = np.abs(vals[None, :] - vals[:, None])
    mask = dx > 0
    if not mask.any():
        return 0.0
    return float((dv[mask] / dx[mask] ** alpha).max())


def holder_bound_of_mollified(f, eps: float, alpha: float) -> float:
    """Hoelder seminorm of the mollified function, checked against the
    kernel bound 2 eps^-alpha ||f||_sup. Returns the seminorm; raises
    NormPropertyError if the bound fails."""
    if isinstance(f, StepFunction):
        measured = mollified_holder(f, eps, alpha)
    else:
        measured = holder_seminorm(mollify(f, eps), alpha)
    bound = 2.0 * eps**-alpha * sup_norm(f)
    if measured > bound + 1e-12:
        raise NormPropertyError(
            f"mollified Hoelder seminorm {measured} exceeds 2 eps^-alpha sup = {bound}"
        )
    return measured


# ---------------------------------------------------------------------------
# fiber average and norm growth under iteration


def project_pi(g: GridObservable) -> GridObservable:
    """Fiber average x -> integral of g(x, .) over the fiber (trapezoid)."""
    if g.domain != "square":
        raise ValueError("project_pi expects a square observable")
    column_means = np.trapezoid(g.samples, dx=g.h, axis=1)
    return GridObservable("interval", column_means, g.lo, g.hi)


@dataclass(frozen=True)
class NormGrowthSeries:
    """Measured growth of ||pi(f o F^n)||_{1,alpha} + Var_square(f o F^n)."""

    lags: np.ndarray
    base_values: np.ndarray      # ||pi(.)||_{1,alpha} + Var_square(.)
    y_lip_values: np.ndarray     # ||f o F^n||_{y-Lip}, reported alongside
    growth_rate: float           # slope of log base_values vs n

    @property
    def growth_factor(self) -> float:
        return math.exp(self.growth_rate)


def norm_growth_series(func, p: RovellaParams, n_max: int, alpha: float = 0.5,
                       grid_n: int = 256) -> NormGrowthSeries:
    """Track the composite norm of f o F^n on a grid for n = 0..n_max.

    The growth rate is reported from a least-squares fit of the log
    series; no fixed constant is asserted.
    """
    if n_max > 30:
        raise ValueError("n_max is capped at 30")
    if grid_n % 2:
        raise ValueError("grid_n must be even (keeps x = 0 off the grid)")
    xs = np.linspace(-0.5, 0.5, grid_n)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    cx, cy = gx.copy(), gy.copy()
    base, ylip = [], []
    for n in range(n_max + 1):
        g = GridObservable("square", func(cx, cy), -0.5, 0.5)
        _, full = var_pr_norm(project_pi(g), 1.0, alpha)
        base.append(full + var_square(g))
        ylip.append(y_lip_norm(g))
        if n < n_max:
            cx, cy = _apply_F_arrays(p, cx, cy)
    lags = np.arange(n_max + 1)
    vals = np.array(base)
    pos = vals > 0
    if pos.sum() >= 2:
        slope = float(np.polyfit(lags[pos], np.log(vals[pos]), 1)[0])
    else:
        slope = 0.0
    return NormGrowthSeries(lags, vals, np.array(ylip), slope)


def _apply_F_arrays(p: RovellaParams, x: np.ndarray, y: np.ndarray):
    ax = np.abs(x)
    pos = x > 0
    tx = np.where(pos, -p.rho * ax**p.s + 0.5, p.rho * ax**p.s - 0.5)
    ty = np.where(pos, y * ax**p.r + p.c0, -y * ax**p.r + p.c1)
    return tx, ty


# ---------------------------------------------------------------------------
# report container and corpus generator


@dataclass(frozen=True)
class NormReport:
    """Flat bundle of the norms computed for one observable."""

    sup: float | None = None
    holder: float | None = None
    holder_alpha: float = 0.5
    lip_y: float | None = None
    var_p: float | None = None
    var_p_p: float = 2.0
    var_pr: float | None = None
    var_pr_p: float = 2.0
    var_pr_r: float = 0.5
    var_square: float | None = None

    def __post_init__(self):
        for name in ("sup", "holder", "lip_y", "var_p", "var_pr", "var_square"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")

    def to_json(self) -> dict:
        out = {}
        if self.sup is not None:
            out["sup"] = self.sup
        if self.holder is not None:
            out[f"holder_{self.holder_alpha:g}"] = self.holder
        if self.var_p is not None:
            out[f"var_p_{self.var_p_p:g}"] = self.var_p
        if self.var_pr is not None:
            out[f"var_pr_{self.var_pr_p:g}_{self.var_pr_r:g}"] = self.var_pr
        if self.var_square is not None:
            out["var_square"] = self.var_square
        if self.lip_y is not None:
            out["lip_y"] = self.lip_y
        return out


def norm_report(f, alpha: float = 0.5, p: float = 2.0, r: float = 0.5) -> NormReport:
    """Compute every norm applicable to the carrier type."""
    if isinstance(f, StepFunction):
        semi, full = var_pr_norm(f, p, r)
        return NormReport(sup=sup_norm(f), var_p=universal_var_p(f, p),
                          var_p_p=p, var_pr=full, var_pr_p=p, var_pr_r=r)
    if f.domain == "interval":
        semi, full = var_pr_norm(f, p, r)
        return NormReport(sup=sup_norm(f), holder=holder_seminorm(f, alpha),
                          holder_alpha=alpha, var_p=universal_var_p(f, p),
                          var_p_p=p, var_pr=full, var_pr_p=p, var_pr_r=r)
    return NormReport(sup=sup_norm(f), lip_y=y_lip_norm(f) - sup_norm(f),
                      var_square=var_square(f))


def random_step_corpus(count: int, max_pieces: int = 20, seed: int = 0,
                       lo: float = 0.0, hi: float = 1.0,
                       value_range=(-1.0, 1.0)) -> list[StepFunction]:
    """Seeded corpus of random step functions (test vehicle for the
    variation inequalities). Function i uses stream (seed, i)."""
    out = []
    vmin, vmax = value_range
    for i in range(count):
        st = Stream(seed, i)
        pieces = 2 + st.integer(max_pieces - 1)
        while True:
            breaks = np.sort([st.uniform_in(lo, hi) for _ in range(pieces - 1)])
            if breaks.size < 2 or np.all(np.diff(breaks) > 0):
                break
        vals = np.array([st.uniform_in(vmin, vmax) for _ in range(pieces)])
        out.append(StepFunction(breaks, vals, lo, hi))
    return out
