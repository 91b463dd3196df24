"""Interval statistics: log-binned distributions, power-law fits, NHPP MLE and KS.

The regression fit follows the usual empirical recipe for inter-event
data: bin the intervals geometrically, take log10 of bin centre and
density, and fit a straight line to the bulk of the points.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import optimize, stats

from nhpp_decay.simulate import EventSeries, IntervalSample

# asymptotic Kolmogorov-Smirnov coefficients
KS_COEFF = {0.05: 1.36, 0.01: 1.63}

# default "main body" used by the log-log regression, as sample-mass quantiles
DEFAULT_MASS_RANGE = (0.75, 1.0)


class EmptySampleError(ValueError):
    """No interval can be formed from the input."""


class InsufficientDataError(ValueError):
    """Too few points for the requested fit."""


@dataclass(frozen=True)
class BinnedDistribution:
    """Log-binned PDF or CCDF; ``t`` are geometric bin centres, empty bins omitted."""

    t: np.ndarray
    value: np.ndarray
    kind: Literal["pdf", "ccdf"]
    bins_per_decade: int
    counts: np.ndarray
    edges: np.ndarray
    sample_count: int

    @property
    def points(self):
        return list(zip(self.t.tolist(), self.value.tolist()))

    def mass_quantile_t(self, q: float) -> float:
        """Centre of the bin holding the ``q`` quantile of the sample mass."""
        cum = np.cumsum(self.counts) / self.counts.sum()
        i = min(int(np.searchsorted(cum, q, side="left")), len(cum) - 1)
        return float(self.t[i])


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    R: float | None
    method: Literal["loglog-regression", "hill-mle"]
    fit_range: tuple
    sample_count: int

    def to_dict(self):
        d = asdict(self)
        d["fit_range"] = list(self.fit_range)
        return d


@dataclass(frozen=True)
class NhppFit:
    """Maximum-likelihood (a, b) of the decaying intensity."""

    a_hat: float
    b_hat: float
    log_likelihood: float
    T_obs: float | tuple
    n_events: int

    @property
    def tail_exponent(self):
        return self.b_hat / self.a_hat + 1.0 if self.a_hat > 0 else None

    def to_dict(self):
        d = asdict(self)
        if isinstance(self.T_obs, tuple):
            d["T_obs"] = list(self.T_obs)
        d["tail_exponent"] = self.tail_exponent
        return d


@dataclass(frozen=True)
class KSResult:
    statistic: float
    sample_count: int
    critical_05: float
    critical_01: float

    @property
    def pass_05(self):
        return self.statistic < self.critical_05

    @property
    def pass_01(self):
        return self.statistic < self.critical_01

    def to_dict(self):
        d = asdict(self)
        d["pass_05"] = self.pass_05
        d["pass_01"] = self.pass_01
        return d


def _as_series_list(series):
    if isinstance(series, EventSeries):
        return [series]
    return list(series)


def intervals_from_events(
    series: EventSeries | Sequence[EventSeries],
    mode: Literal["pooled", "fixed"] = "pooled",
    *,
    n: int | None = None,
    ties: Literal["replace", "drop"] = "replace",
    resolution: float | None = None,
) -> IntervalSample:
    """Inter-event intervals of one or several series.

    Zero gaps are replaced by ``resolution`` (default: the smallest
    positive gap observed) or dropped when ``ties="drop"``.  In fixed
    mode each series contributes its gap T_{n+1} if it has n+1 events.

    Raises:
        EmptySampleError: if no interval can be formed.
    """
    items = _as_series_list(series)
    if mode == "pooled":
        gaps = [np.diff(s.times) for s in items if len(s) >= 2]
    elif mode == "fixed":
        if n is None or int(n) != n or n < 1:
            raise ValueError("fixed mode needs the event index n >= 1")
        gaps = [s.times[n : n + 1] - s.times[n - 1 : n] for s in items if len(s) > n]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    values = np.concatenate(gaps) if gaps else np.empty(0)
    if values.size == 0:
        raise EmptySampleError("fewer than two events: no interval can be formed")

    zero = values <= 0
    if zero.any():
        if ties == "drop":
            values = values[~zero]
        elif ties == "replace":
            if resolution is None:
                positive = values[~zero]
                if positive.size == 0:
                    raise EmptySampleError("all gaps are zero and no resolution was given")
                resolution = float(positive.min())
            if not resolution > 0:
                raise ValueError("resolution must be > 0")
            values = np.where(zero, resolution, values)
        else:
            raise ValueError(f"unknown tie policy {ties!r}")
        if values.size == 0:
            raise EmptySampleError("no positive interval left after dropping ties")
    source = {"ties": ties, "resolution": resolution, "series": len(items)}
    return IntervalSample(values, mode, index=n if mode == "fixed" else None, source=source)


def _positive_values(sample):
    values = np.asarray(sample.intervals if isinstance(sample, IntervalSample) else sample, dtype=float)
    if values.size == 0:
        raise EmptySampleError("empty interval sample")
    bad = values[~(values > 0) | ~np.isfinite(values)]
    if bad.size:
        raise ValueError(f"log binning needs positive finite intervals; got {bad[0]!r}")
    return values


def _log_edges(log_values, bins_per_decade):
    lo, hi = float(log_values.min()), float(log_values.max())
    if hi == lo:
        half = 0.5 / bins_per_decade
        return np.array([lo - half, lo + half])
    nbins = max(1, math.ceil(round((hi - lo) * bins_per_decade, 9)))
    edges = lo + np.arange(nbins + 1) / bins_per_decade
    edges[-1] = max(edges[-1], hi)
    return edges


def log_binned_pdf(sample: IntervalSample, bins_per_decade: int = 10) -> BinnedDistribution:
    """Density on geometric bins: count / (N * bin width), empty bins dropped."""
    if int(bins_per_decade) != bins_per_decade or bins_per_decade < 1:
        raise ValueError("bins_per_decade must be a positive integer")
    values = _positive_values(sample)
    logs = np.log10(values)
    edges = _log_edges(logs, bins_per_decade)
    counts, _ = np.histogram(logs, bins=edges)
    log_width = edges[:-1] + np.log10(np.expm1(np.log(10.0) * np.diff(edges)))
    keep = counts > 0
    log_density = np.log10(counts[keep]) - math.log10(values.size) - log_width[keep]
    centres = 10.0 ** (0.5 * (edges[:-1] + edges[1:]))[keep]
    return BinnedDistribution(
        t=centres,
        value=10.0**log_density,
        kind="pdf",
        bins_per_decade=int(bins_per_decade),
        counts=counts[keep],
        edges=10.0**edges,
        sample_count=int(values.size),
    )


def log_binned_ccdf(sample: IntervalSample, bins_per_decade: int = 10) -> BinnedDistribution:
    """Empirical P{T > t} at the geometric bin centres (zero values dropped)."""
    values = np.sort(_positive_values(sample))
    logs = np.log10(values)
    edges = _log_edges(logs, bins_per_decade)
    counts, _ = np.histogram(logs, bins=edges)
    centres = 10.0 ** (0.5 * (edges[:-1] + edges[1:]))
    ccdf = 1.0 - np.searchsorted(values, centres, side="right") / values.size
    keep = ccdf > 0
    return BinnedDistribution(
        t=centres[keep],
        value=ccdf[keep],
        kind="ccdf",
        bins_per_decade=int(bins_per_decade),
        counts=counts[keep],
        edges=10.0**edges,
        sample_count=int(values.size),
    )


def default_fit_range(dist: BinnedDistribution, mass_range=DEFAULT_MASS_RANGE):
    q_lo, q_hi = mass_range
    if not 0.0 <= q_lo < q_hi <= 1.0:
        raise ValueError("mass range must satisfy 0 <= lo < hi <= 1")
    return dist.mass_quantile_t(q_lo), dist.mass_quantile_t(q_hi)


def fit_loglog_regression(
    dist: BinnedDistribution, fit_range: tuple | None = None, mass_range=DEFAULT_MASS_RANGE
) -> FitResult:
    """Least squares line through (log10 t, log10 value) inside ``fit_range``.

    The exponent is minus the slope and ``R`` the Pearson correlation of
    the regressed points.  Without ``fit_range`` the bins between the
    ``mass_range`` quantiles of the sample are used.
    """
    if fit_range is None:
        fit_range = default_fit_range(dist, mass_range)
    t_lo, t_hi = float(fit_range[0]), float(fit_range[1])
    sel = (dist.t >= t_lo) & (dist.t <= t_hi) & (dist.value > 0)
    if sel.sum() < 3:
        raise InsufficientDataError(
            f"need at least 3 occupied bins in [{t_lo:.6g}, {t_hi:.6g}], found {int(sel.sum())}"
        )
    x = np.log10(dist.t[sel])
    y = np.log10(dist.value[sel])
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx, syy, sxy = dx @ dx, dy @ dy, dx @ dy
    slope = sxy / sxx
    r = sxy / math.sqrt(sxx * syy) if syy > 0 else 0.0
    return FitResult(
        exponent=float(-slope),
        intercept=float(ym - slope * xm),
        R=float(np.clip(r, -1.0, 1.0)),
        method="loglog-regression",
        fit_range=(float(dist.t[sel][0]), float(dist.t[sel][-1])),
        sample_count=int(dist.counts[sel].sum()),
    )


def fit_hill_mle(sample: IntervalSample, t_min: float | None = None) -> FitResult:
    """Continuous power-law MLE ``1 + m / sum(ln(t_i / t_min))`` over t_i >= t_min.

    ``t_min`` defaults to the sample median.
    """
    values = np.asarray(sample.intervals if isinstance(sample, IntervalSample) else sample, dtype=float)
    if values.size == 0:
        raise EmptySampleError("empty interval sample")
    if t_min is None:
        t_min = float(np.median(values))
    if not t_min > 0:
        raise ValueError("t_min must be > 0")
    tail = values[values >= t_min]
    if tail.size < 2:
        raise InsufficientDataError(f"need at least 2 intervals >= t_min={t_min!r}, found {tail.size}")
    log_sum = float(np.log(tail / t_min).sum())
    if log_sum <= 0:
        raise InsufficientDataError("all tail intervals equal t_min; exponent is unbounded")
    gamma = 1.0 + tail.size / log_sum
    # log10 prefactor of the conditional density (gamma-1)/t_min * (t/t_min)^-gamma
    intercept = math.log10(gamma - 1.0) + (gamma - 1.0) * math.log10(t_min)
    return FitResult(
        exponent=gamma,
        intercept=intercept,
        R=None,
        method="hill-mle",
        fit_range=(float(t_min), float(tail.max())),
        sample_count=int(tail.size),
    )


def _nhpp_arrays(series):
    items = _as_series_list(series)
    if not items:
        raise EmptySampleError("no event series given")
    times = np.concatenate([s.times for s in items])
    windows = np.array([s.window_end for s in items], dtype=float)
    return items, times, windows


def profile_b(a: float, n_events: int, windows) -> float:
    """Conditional MLE of b given a: n a / sum(ln(a T + 1)), or n / sum(T) at a = 0."""
    windows = np.atleast_1d(np.asarray(windows, dtype=float))
    if a == 0:
        return n_events / windows.sum()
    return n_events * a / np.log1p(a * windows).sum()


def profile_loglik(a: float, times, windows) -> float:
    """Log-likelihood with b replaced by :func:`profile_b`."""
    times = np.asarray(times, dtype=float)
    n = times.size
    b = profile_b(a, n, windows)
    # sum ln(lambda(s_i)) - sum Lambda(T_r), and the compensator equals n at b = b(a)
    return n * math.log(b) - float(np.log1p(a * times).sum()) - n


def loglik(a: float, b: float, times, windows) -> float:
    times = np.asarray(times, dtype=float)
    windows = np.atleast_1d(np.asarray(windows, dtype=float))
    if a == 0:
        comp = b * windows.sum()
    else:
        comp = b / a * np.log1p(a * windows).sum()
    return times.size * math.log(b) - float(np.log1p(a * times).sum()) - float(comp)


def fit_nhpp_mle(series: EventSeries | Sequence[EventSeries], grid_points: int = 241) -> NhppFit:
    """Maximum-likelihood fit of ``b / (a t + 1)`` to one or more realizations.

    ``b`` is profiled out; ``ln a`` is scanned on a log grid, the best
    grid point refined by golden-section search, and the result compared
    against the homogeneous boundary ``a = 0``.

    Raises:
        InsufficientDataError: fewer than two events in total.
        ValueError: all events at one instant.
    """
    items, times, windows = _nhpp_arrays(series)
    n = times.size
    if n < 2:
        raise InsufficientDataError("need at least two events to fit")
    if np.ptp(times) == 0:
        raise ValueError("degenerate series: all events occur at the same instant")
    if np.any(windows <= 0):
        raise ValueError("observation windows must be > 0")

    positive = times[times > 0]
    a_hi = 1e3 / positive.min()
    a_lo = 1e-8 / windows.max()
    grid = np.linspace(math.log(a_lo), math.log(a_hi), grid_points)

    def negll(theta):
        return -profile_loglik(math.exp(theta), times, windows)

    values = np.array([negll(th) for th in grid])
    i = int(np.argmin(values))
    if 0 < i < grid_points - 1:
        res = optimize.minimize_scalar(
            negll, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden", tol=1e-10
        )
        theta, best = float(res.x), float(res.fun)
        if best > values[i]:
            theta, best = grid[i], values[i]
    else:
        theta, best = grid[i], values[i]
    a_hat = math.exp(theta)

    ll0 = profile_loglik(0.0, times, windows)
    if ll0 >= -best:
        a_hat, ll = 0.0, ll0
    else:
        ll = -best
    b_hat = profile_b(a_hat, n, windows)
    t_obs = float(windows[0]) if len(items) == 1 else tuple(windows.tolist())
    return NhppFit(a_hat=a_hat, b_hat=float(b_hat), log_likelihood=float(ll), T_obs=t_obs, n_events=int(n))


def _critical(m, alpha):
    return KS_COEFF[alpha] / math.sqrt(m)


def ks_distance(
    sample: IntervalSample | np.ndarray, cdf: Callable, continuous: bool = True
) -> KSResult:
    """Sup distance between the empirical CDF of ``sample`` and ``cdf``.

    With ``continuous=False`` the left limits of ``cdf`` are evaluated
    too, so step-function CDFs are compared exactly.
    """
    values = np.asarray(sample.intervals if isinstance(sample, IntervalSample) else sample, dtype=float)
    if values.size == 0:
        raise EmptySampleError("empty sample")
    m = values.size
    xs, counts = np.unique(values, return_counts=True)
    cum = np.cumsum(counts)
    right = cum / m
    left = (cum - counts) / m
    f = np.asarray(cdf(xs), dtype=float)
    f_left = f if continuous else np.asarray(cdf(np.nextafter(xs, -np.inf)), dtype=float)
    d = max(float(np.max(np.abs(right - f))), float(np.max(np.abs(left - f_left))))
    return KSResult(d, m, _critical(m, 0.05), _critical(m, 0.01))


def ks_two_sample(x, y) -> KSResult:
    """Two-sample KS statistic with critical values c(alpha) * sqrt((n+m)/(n m))."""
    x = np.asarray(x.intervals if isinstance(x, IntervalSample) else x, dtype=float)
    y = np.asarray(y.intervals if isinstance(y, IntervalSample) else y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise EmptySampleError("empty sample")
    d = float(stats.ks_2samp(x, y).statistic)
    eff = x.size * y.size / (x.size + y.size)
    return KSResult(d, int(x.size + y.size), _critical(eff, 0.05), _critical(eff, 0.01))
