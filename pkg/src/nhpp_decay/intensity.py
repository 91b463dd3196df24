"""Intensity b/(a t + 1), its integral and the closed-form inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# largest argument accepted by exp() without overflowing a float64
_EXP_MAX = float(np.log(np.finfo(float).max))


class IntegratedOverflowError(OverflowError):
    """Raised when the inverse cumulative intensity exceeds float range."""


@dataclass(frozen=True)
class IntensityParams:
    """Decay rate ``a`` (>= 0) and initial rate ``b`` (> 0)."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not np.isfinite(a) or a < 0:
            raise ValueError(f"decay rate a must satisfy a >= 0, got {self.a!r}")
        if not np.isfinite(b) or b <= 0:
            raise ValueError(f"initial rate b must satisfy b > 0, got {self.b!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def homogeneous(self) -> bool:
        return self.a == 0.0


def _check_nonneg(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be >= 0")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def intensity_at(params: IntensityParams, t):
    """Event rate at time(s) ``t``."""
    t = _check_nonneg(t, "t")
    return _out(params.b / (params.a * t + 1.0))


def cumulative_intensity(params: IntensityParams, t):
    """Expected number of events in ``[0, t]``."""
    t = _check_nonneg(t, "t")
    if params.homogeneous:
        return _out(params.b * t)
    return _out(params.b / params.a * np.log1p(params.a * t))


def inverse_cumulative(params: IntensityParams, u):
    """Time at which the cumulative intensity reaches ``u``.

    Raises:
        IntegratedOverflowError: if ``a*u/b`` is beyond the float exponent
            range, i.e. the time would not be representable.
    """
    u = _check_nonneg(u, "u")
    if params.homogeneous:
        return _out(u / params.b)
    z = params.a * u / params.b
    # expm1(z) itself and the division by a < 1 can both overflow
    if np.any(z > _EXP_MAX + min(0.0, np.log(params.a)) - 1e-9):
        raise IntegratedOverflowError(
            f"inverse cumulative intensity overflows for a*u/b = {np.max(z):.6g} "
            f"(a={params.a}, b={params.b})"
        )
    return _out(np.expm1(z) / params.a)
