"""Least-squares fits of large-time decay laws.

Exponential: log y = log kappa - mu t.  Algebraic: log y = log kappa - mu log(1 + t).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import NonPositiveValues, ParameterError, TooFewSamples

MIN_SAMPLES = 10


class DecayKind(str, enum.Enum):
    EXPONENTIAL = "exponential"
    ALGEBRAIC = "algebraic"

    @classmethod
    def parse(cls, value):
        return value if isinstance(value, cls) else cls(str(value).strip().lower())


@dataclass(frozen=True)
class DecayFit:
    kind: DecayKind
    rate: float
    prefactor: float
    r_squared: float
    window: tuple
    samples: int

    @property
    def decaying(self):
        return self.rate > 0


def _window_mask(t, window):
    if window is None:
        # last half of the samples: decay laws are large-time statements
        mask = np.zeros(t.size, dtype=bool)
        mask[t.size // 2 :] = True
        return mask
    lo, hi = window
    return (t >= lo) & (t <= hi)


def fit_decay(t, y, kind="exponential", window=None, floor=None) -> DecayFit:
    """Fit y ~ kappa e^(-mu t) or kappa (1+t)^(-mu) on a window.

    ``window`` is (t_a, t_b) in model time, defaulting to the last half of the
    samples; values at or below ``floor`` are dropped before fitting.
    """
    kind = DecayKind.parse(kind)
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape:
        raise ParameterError("t and y must have the same length")
    mask = _window_mask(t, window)
    if floor is not None:
        mask &= y > floor
    tw, yw = t[mask], y[mask]
    if tw.size < MIN_SAMPLES:
        raise TooFewSamples(f"{tw.size} samples in window, need {MIN_SAMPLES}")
    if np.any(yw <= 0) or not np.all(np.isfinite(yw)):
        raise NonPositiveValues("decay fits need positive finite values")
    x = tw if kind is DecayKind.EXPONENTIAL else np.log1p(tw)
    reg = stats.linregress(x, np.log(yw))
    r2 = float(reg.rvalue**2) if np.isfinite(reg.rvalue) else 1.0
    return DecayFit(
        kind=kind,
        rate=float(-reg.slope),
        prefactor=float(np.exp(reg.intercept)),
        r_squared=min(max(r2, 0.0), 1.0),
        window=(float(tw[0]), float(tw[-1])),
        samples=int(tw.size),
    )


def classify_decay(t, y, window=None, floor=None):
    """Better-fitting law (by r^2) and both fits."""
    fits = {k: fit_decay(t, y, k, window, floor) for k in DecayKind}
    best = max(fits, key=lambda k: fits[k].r_squared)
    return best, fits
