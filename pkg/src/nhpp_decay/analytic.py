"""Exact distribution of the inter-event time T_{n+1}.

Conditioning on the n-th event time and averaging over it, the survival
function and density of the gap T_{n+1} are expectations under a
Gamma(n, 1) weight of bounded functions::

    P{T_{n+1} > t} = E[(1 + a t exp(-a u / b)) ** (-b / a)]
    f_{T_{n+1}}(t) = b E[exp(-a u / b) (1 + a t exp(-a u / b)) ** (-b / a - 1)]

with ``u ~ Gamma(n, 1)`` (``u`` is the integrated intensity at S_n).

Write ``k = a/b``, ``c = a t`` and ``u* = ln(c) / k``.  For ``c <= 1`` the
integrand is smooth on the whole half line and generalized Gauss-Laguerre
is used directly.  For ``c > 1`` the integrand switches from exponential
growth to a constant near ``u*``; the domain is split there.  Substituting
``u = u* - r`` below and ``u = u* + v`` above gives::

    S = exp(-u*) / G(n) * [ int_0^u* (u*-r)^(n-1) s(r) dr
                           + int_0^inf exp(-v) (u*+v)^(n-1) s(v) dv ]

with ``s(x) = (1 + exp(-k x)) ** (-1/k)``; the density has the same shape
with an extra ``b/c`` factor, exponent ``-1/k - 1`` and ``exp(-k v)`` in
the upper piece.  Both pieces are bounded and are handled with graded
Gauss-Legendre panels plus a Laguerre tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.special import roots_legendre

from nhpp_decay.intensity import IntensityParams

_MAX_PANELS = 4000


class QuadratureError(ArithmeticError):
    """Quadrature did not reach the requested accuracy.

    Attributes:
        estimate: best available value.
        error_bound: difference between the last two refinement levels.
    """

    def __init__(self, message, estimate=float("nan"), error_bound=float("inf")):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class QuadratureConfig:
    """Node budget and stopping rule for the Gamma-weighted quadrature.

    ``node_count`` is the number of Laguerre nodes at the first level;
    Legendre panels use a quarter of it per panel.  Each refinement adds
    the base count again, and stops once successive estimates agree to
    ``relative_tolerance``.
    """

    node_count: int = 64
    relative_tolerance: float = 1e-8
    max_refinements: int = 8

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 8:
            raise ValueError("node_count must be an integer >= 8")
        if not 0 < self.relative_tolerance <= 1e-3:
            raise ValueError("relative_tolerance must lie in (0, 1e-3]")
        if int(self.max_refinements) != self.max_refinements or self.max_refinements < 1:
            raise ValueError("max_refinements must be a positive integer")


DEFAULT_QUADRATURE = QuadratureConfig()


@dataclass(frozen=True)
class TailAsymptote:
    """Power-law exponent of the inter-event density; ``valid`` is False for a = 0."""

    exponent: float | None
    valid: bool


@lru_cache(maxsize=128)
def _gauss_laguerre(count: int, alpha: float):
    """Nodes and log-weights normalised to the Gamma(alpha+1, 1) law.

    Nodes are the eigenvalues of the Jacobi matrix.  The weights are the
    Christoffel numbers ``1 / sum_j p_j(x)^2`` of the orthonormal Laguerre
    polynomials, evaluated by the three-term recurrence with rescaling.
    Unlike squared eigenvector components this keeps relative accuracy for
    the tiny weights of far nodes, and nothing overflows for large
    ``alpha``.
    """
    k = np.arange(count, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    nodes = eigvalsh_tridiagonal(diag, off)
    p_prev = np.zeros(count)
    p_cur = np.ones(count)
    total = np.ones(count)
    log_scale = np.zeros(count)
    for j in range(count - 1):
        p_next = (nodes - diag[j]) * p_cur
        if j > 0:
            p_next -= off[j - 1] * p_prev
        p_next /= off[j]
        p_prev, p_cur = p_cur, p_next
        total += p_cur * p_cur
        big = np.abs(p_cur) > 1e100
        if np.any(big):
            m = np.abs(p_cur[big])
            p_cur[big] /= m
            p_prev[big] /= m
            total[big] /= m * m
            log_scale[big] += np.log(m)
    return nodes, -np.log(total) - 2.0 * log_scale


@lru_cache(maxsize=64)
def _gauss_legendre(count: int):
    x, w = roots_legendre(count)
    return 0.5 * (x + 1.0), np.log(0.5 * w)


def _logsumexp(x, b=None):
    top = np.max(x)
    if not np.isfinite(top):
        return float(top)
    terms = np.exp(x - top)
    if b is not None:
        terms = terms * b
    total = terms.sum()
    return top + math.log(total) if total > 0 else -math.inf


def _softplus(x):
    return np.logaddexp(0.0, x)


def _log_cdf_factor(z, beta):
    """log(1 - (1 + e^z)^-beta), accurate when the result is tiny."""
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.log(-np.expm1(-beta * _softplus(z)))
    # series 1 - (1+x)^-beta = beta x (1 - (beta+1) x / 2 + ...) once x is tiny
    small = z < -30.0
    if np.any(small):
        zs = z[small]
        out[small] = math.log(beta) + zs + np.log1p(-0.5 * (beta + 1.0) * np.exp(zs))
    return out


def _graded_panels(length, h0, max_width, two_sided=False):
    """Breakpoints on [0, length] with widths doubling from h0.

    Widths are capped at ``max_width``, relaxed up to ``8 * max_width`` as
    a quarter of the distance already covered.  With ``two_sided`` the
    grading runs inwards from both ends, for integrands that may carry
    their mass at either end of a long interval.
    """
    if length <= 0:
        return np.array([0.0])
    reach = 0.5 * length if two_sided else length
    edges = [0.0]
    width = min(h0, reach)
    while edges[-1] < reach:
        edges.append(min(edges[-1] + width, reach))
        cap = max(max_width, min(0.25 * edges[-1], 8.0 * max_width))
        width = min(2.0 * width, cap)
        if len(edges) > _MAX_PANELS:
            raise QuadratureError("integration domain needs too many panels")
    edges = np.asarray(edges)
    if two_sided:
        edges = np.concatenate([edges, length - edges[-2::-1]])
    return edges


def _panel_nodes(edges, per_panel):
    x, logw = _gauss_legendre(per_panel)
    lo = edges[:-1, None]
    width = np.diff(edges)[:, None]
    nodes = (lo + width * x[None, :]).ravel()
    logw = (np.log(width) + logw[None, :]).ravel()
    return nodes, logw


class _Problem:
    """One (params, n, t) evaluation of ``kind`` "survival", "density" or "cdf"."""

    def __init__(self, params, n, t, kind):
        self.a, self.b = params.a, params.b
        self.n = n
        self.t = t
        self.kind = kind
        self.density = kind == "density"
        self.k = self.a / self.b
        self.beta = self.b / self.a
        self.c = self.a * t
        self.lgn = math.lgamma(n)

    # -- c <= 1: one Laguerre rule over the whole half line ---------------
    def smooth_log(self, level, quad):
        n, k, c, beta = self.n, self.k, self.c, self.beta
        nodes, logw = _gauss_laguerre(quad.node_count * level, float(n - 1))
        kp = k / (1.0 + k)
        if self.density:
            # b E[exp(-k u) g(u)] = b (1+k)^-n E[g(u / (1+k))]
            vals = -(beta + 1.0) * np.log1p(c * np.exp(-kp * nodes))
            return math.log(self.b) - n * math.log1p(k) + _logsumexp(logw + vals)
        if self.kind == "cdf" and k <= 1.0:
            return _logsumexp(logw + _log_cdf_factor(math.log(c) - k * nodes, beta))
        if k <= 1.0:
            vals = -beta * np.log1p(c * np.exp(-k * nodes))
            return _logsumexp(logw + vals)
        # k > 1: h varies on a 1/k scale near 0; integrate 1 - h instead
        x = c * np.exp(-kp * nodes)
        with np.errstate(invalid="ignore", divide="ignore"):
            phi = np.where(x > 0, -np.expm1(-beta * np.log1p(x)) / x, beta)
        log_deficit = math.log(c) - n * math.log1p(k) + _logsumexp(logw, b=phi)
        if self.kind == "cdf":
            return log_deficit
        deficit = math.exp(log_deficit)
        return math.log1p(-deficit) if deficit < 1.0 else -math.inf

    # -- c > 1: split at u* -------------------------------------------------
    def split_log(self, level, quad):
        n, k = self.n, self.k
        ustar = math.log(self.c) / k
        cdf = self.kind == "cdf"
        p = self.beta + 1.0 if self.density else self.beta
        # the density and the cdf integrands both decay like exp(-(1+k) v) above u*
        q = 0.0 if self.kind == "survival" else k
        m = max(8, quad.node_count // 4) * level
        h0 = 0.25 * min(1.0 / k, 1.0)

        # lower piece, r in [0, u*]
        lo_h0 = min(h0, 0.25 * ustar / max(n - 1, 1))
        edges = _graded_panels(ustar, lo_h0, 8.0, two_sided=True)
        r, lw = _panel_nodes(edges, m)
        if cdf:
            vals = r + _log_cdf_factor(k * r, self.beta)
        else:
            vals = -p * _softplus(-k * r)
        if n > 1:
            vals = vals + (n - 1) * np.log(ustar - r)
        parts = [_logsumexp(lw + vals)]

        # upper piece, v in [0, V] with panels, Laguerre beyond
        v_peak = max(0.0, (n - 1) / (1.0 + q) - ustar)
        vmax = min(40.0 / k, v_peak + 80.0 / (1.0 + q)) if k > 1.0 else 0.0
        if vmax > 0.0:
            edges = _graded_panels(vmax, h0, 4.0 / (1.0 + q))
            v, lw = _panel_nodes(edges, m)
            if cdf:
                vals = -v + _log_cdf_factor(-k * v, self.beta)
            else:
                vals = -(1.0 + q) * v - p * _softplus(-k * v)
            if n > 1:
                vals = vals + (n - 1) * np.log(ustar + v)
            parts.append(_logsumexp(lw + vals))
        y, lw = _gauss_laguerre(quad.node_count * level, 0.0)
        v = vmax + y / (1.0 + q)
        if cdf:
            vals = k * v + _log_cdf_factor(-k * v, self.beta)
        else:
            vals = -p * _softplus(-k * v)
        if n > 1:
            vals = vals + (n - 1) * np.log(ustar + v)
        parts.append(-(1.0 + q) * vmax - math.log1p(q) + _logsumexp(lw + vals))

        total = _logsumexp(np.asarray(parts)) - ustar - self.lgn
        if self.density:
            total += math.log(self.b) - math.log(self.c)
        return total

    def solve(self, quad):
        rule = self.split_log if self.c > 1.0 else self.smooth_log
        prev = rule(1, quad)
        err = math.inf
        for level in range(2, quad.max_refinements + 2):
            cur = rule(level, quad)
            if cur == -math.inf and prev == -math.inf:
                return 0.0
            err = abs(math.expm1(prev - cur)) if cur > -math.inf else math.inf
            if err <= quad.relative_tolerance:
                value = math.exp(cur)
                # probabilities can overshoot 1 by a rounding error in the weight sum
                return value if self.density else min(value, 1.0)
            prev = cur
        est = math.exp(prev)
        raise QuadratureError(
            f"no convergence for a={self.a}, b={self.b}, n={self.n}, t={self.t}",
            estimate=est,
            error_bound=err * est,
        )


def _check_index(n):
    if int(n) != n or n < 1:
        raise ValueError(f"event index n must be a positive integer, got {n!r}")
    return int(n)


def _evaluate(params, n, t, quad, kind):
    n = _check_index(n)
    quad = quad or DEFAULT_QUADRATURE
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(t_arr)) or np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    flat = t_arr.ravel()
    if params.homogeneous:
        if kind == "cdf":
            out = -np.expm1(-params.b * flat)
        else:
            out = np.exp(-params.b * flat)
            if kind == "density":
                out = params.b * out
    else:
        # values at the ends of the support
        edge = {"survival": (1.0, 0.0), "cdf": (0.0, 1.0), "density": (None, 0.0)}[kind]
        out = np.empty_like(flat)
        for i, ti in enumerate(flat):
            if ti == 0.0 and edge[0] is not None:
                out[i] = edge[0]
            elif np.isinf(ti):
                out[i] = edge[1]
            else:
                out[i] = _Problem(params, n, float(ti), kind).solve(quad)
    out = out.reshape(t_arr.shape)
    return float(out) if out.ndim == 0 else out


def survival_Tn(params: IntensityParams, n: int, t, quad: QuadratureConfig | None = None):
    """P{T_{n+1} > t}, the gap after the n-th event exceeding ``t``.

    ``t`` may be a scalar or an array.  For ``a = 0`` this is ``exp(-b t)``.

    Raises:
        QuadratureError: when refinement does not converge.
    """
    return _evaluate(params, n, t, quad, "survival")


def density_Tn(params: IntensityParams, n: int, t, quad: QuadratureConfig | None = None):
    """Probability density of T_{n+1} at ``t`` (``-d/dt`` of :func:`survival_Tn`)."""
    return _evaluate(params, n, t, quad, "density")


def distribution_Tn(params: IntensityParams, n: int, t, quad: QuadratureConfig | None = None):
    """P{T_{n+1} <= t}, integrated directly rather than as ``1 - survival``.

    Keeps full relative accuracy when the probability is tiny, e.g. at
    small ``t`` or for large ``n``.
    """
    return _evaluate(params, n, t, quad, "cdf")


def cdf_Tn(params: IntensityParams, n: int, quad: QuadratureConfig | None = None):
    """Return ``t -> P{T_{n+1} <= t}`` as a vectorised callable."""

    def cdf(t):
        return np.asarray(distribution_Tn(params, n, t, quad))

    return cdf


def tail_exponent(params: IntensityParams) -> TailAsymptote:
    if params.homogeneous:
        return TailAsymptote(exponent=None, valid=False)
    return TailAsymptote(exponent=params.b / params.a + 1.0, valid=True)


def upper_incomplete_gamma(n: int, x: float) -> float:
    """Gamma(n, x) for integer n >= 1 by upward recurrence from exp(-x)."""
    n = _check_index(n)
    x = float(x)
    if not x >= 0:
        raise ValueError("x must be >= 0")
    value = math.exp(-x)
    for k in range(1, n):
        # Gamma(k+1, x) = k Gamma(k, x) + x^k e^-x
        term = math.exp(k * math.log(x) - x) if x > 0 else 0.0
        value = k * value + term
    return value


def eq8_approximation(params: IntensityParams, n: int, t, truncation: float, xi: float):
    """Mean-value approximation of the T_{n+1} density.

    Truncating the density integral at ``truncation`` and pulling the
    t-dependent factor out at a point ``xi`` gives::

        b^(n+1) / (a+b)^n * (1 - Gamma(n, (b/a+1) T) / (n-1)!) * (1 + a e^-xi t)^-(b/a+1)

    Only meant to show the limiting log-log slope ``-(b/a + 1)``.
    """
    n = _check_index(n)
    if params.homogeneous:
        raise ValueError("the power-law approximation requires a > 0")
    if not 0.0 <= xi <= truncation:
        raise ValueError("xi must lie in [0, truncation]")
    gamma = params.b / params.a + 1.0
    remainder = upper_incomplete_gamma(n, gamma * truncation) / math.factorial(n - 1)
    if not remainder < 0.01:
        raise ValueError(
            f"truncation too small: Gamma(n, (b/a+1)T)/(n-1)! = {remainder:.4g} >= 0.01"
        )
    log_const = (n + 1) * math.log(params.b) - n * math.log(params.a + params.b)
    const = math.exp(log_const) * (1.0 - remainder)
    t = np.asarray(t, dtype=float)
    out = const * np.exp(-gamma * np.log1p(params.a * math.exp(-xi) * t))
    return float(out) if out.ndim == 0 else out

