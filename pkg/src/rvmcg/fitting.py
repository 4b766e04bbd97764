"""Ordinary least squares on log-log data, with a range policy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_POINTS = 4
MIN_DECADES = 1.0


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float  # log(prefactor)
    r_squared: float
    ci_halfwidth: float  # 95% half-width on the slope (normal approximation)
    n_points: int
    decades: float
    flagged: bool
    reason: str = ""

    @property
    def prefactor(self) -> float:
        return float(np.exp(self.intercept))


def loglog_fit(x, y, min_points: int = MIN_POINTS, min_decades: float = MIN_DECADES) -> LogLogFit:
    """Fit ``log y = slope * log x + intercept``.

    Nonpositive or non-finite samples are dropped. The fit is flagged when
    fewer than ``min_points`` samples remain or they span less than
    ``min_decades`` decades in x; with fewer than two samples the slope is
    NaN.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    lx, ly = np.log(x[ok]), np.log(y[ok])
    n = int(lx.size)
    decades = float((lx.max() - lx.min()) / np.log(10.0)) if n else 0.0
    reasons = []
    if n < int(ok.size):
        reasons.append("nonpositive values dropped")
    if n < min_points or decades < min_decades - 1e-12:
        reasons.append("insufficient range")
    if n < 2 or np.ptp(lx) == 0:
        return LogLogFit(float("nan"), float("nan"), float("nan"), float("nan"), n, decades, True,
                         "; ".join(reasons or ["insufficient range"]))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ np.array([slope, icpt])
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if n > 2:
        se = np.sqrt(ss_res / (n - 2) / np.sum((lx - lx.mean()) ** 2))
        ci = 1.96 * float(se)
    else:
        ci = float("nan")
    return LogLogFit(float(slope), float(icpt), float(r2), ci, n, decades, bool(reasons), "; ".join(reasons))
