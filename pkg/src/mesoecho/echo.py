"""Echo attenuation analysis and the decoherence-rate regressions.

The attenuation of a perturbed trace relative to the isolated chain is read
off the maxima of ``-ln(P / P_iso)``.  A straight line through the maxima
before the recurrence crossover gives ``1 / tau_phi``; rates across a
``J_y`` grid give one golden-rule slope per interaction type, and slopes
across types give the Ising and flip-flop constants ``A`` and ``B``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import FitError
from .evolution import PolarizationTrace

MASK_FLOOR = 1e-6
WINDOW_FRACTION = 0.3
SEPARATION_FRACTION = 0.5
MIN_CROSSOVER_RECORDS = 4
MIN_FIT_POINTS = 3


@dataclass(frozen=True)
class EchoSeries:
    """``-ln(P / P_iso)`` on a shared time grid; masked points hold NaN."""

    times: np.ndarray
    values: np.ndarray
    p11: np.ndarray
    p11_isolated: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        return ~np.isfinite(self.values)


@dataclass(frozen=True)
class EchoRecord:
    index: int
    time: float
    log_ratio: float
    p11: float
    p11_isolated: float


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    cov: np.ndarray = field(repr=False)
    rmse: float = 0.0


@dataclass(frozen=True)
class DecoherenceFit:
    tau_phi: float
    slope: float
    slope_stderr: float
    intercept: float
    n_points_used: int
    crossover_time: float
    included: tuple[int, ...]

    @property
    def rate(self) -> float:
        return 1.0 / self.tau_phi

    @property
    def tau_phi_stderr(self) -> float:
        return self.slope_stderr / self.slope**2


@dataclass(frozen=True)
class ABFit:
    A: float
    A_err: float
    B: float
    B_err: float


@dataclass(frozen=True)
class FGRFit:
    """Golden-rule slope per interaction type and the pooled constants."""

    slopes: dict
    ab: ABFit | None = None


def line_fit(x, y) -> LineFit:
    """Unweighted least-squares line with free intercept.

    Standard errors come from the residual variance with ``n - 2`` degrees of
    freedom (zero when only two points are given).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 2 or len(y) != n:
        raise FitError("need at least two points with matching lengths")
    xm = x.mean()
    sxx = np.sum((x - xm) ** 2)
    if np.ptp(x) <= 1e-12 * np.max(np.abs(x)):
        raise FitError("degenerate abscissae: all x values coincide")
    slope = np.sum((x - xm) * (y - y.mean())) / sxx
    intercept = y.mean() - slope * xm
    resid = y - (intercept + slope * x)
    rmse = float(np.sqrt(np.mean(resid**2)))
    s2 = np.sum(resid**2) / (n - 2) if n > 2 else 0.0
    var_slope = s2 / sxx
    var_icpt = s2 * (1.0 / n + xm**2 / sxx)
    cov_si = -xm * s2 / sxx
    cov = np.array([[var_slope, cov_si], [cov_si, var_icpt]])
    return LineFit(float(slope), float(intercept), float(np.sqrt(var_slope)), float(np.sqrt(var_icpt)), cov, rmse)


def log_ratio_series(
    perturbed: PolarizationTrace, isolated: PolarizationTrace, floor: float = MASK_FLOOR
) -> EchoSeries:
    """Pointwise ``-ln(P / P_iso)``, NaN wherever either trace is ``<= floor``."""
    if len(perturbed.times) != len(isolated.times) or not np.allclose(
        perturbed.times, isolated.times, rtol=0, atol=1e-12
    ):
        raise ValueError("traces must share the same time grid")
    p = perturbed.values
    q = isolated.values
    valid = (p > floor) & (q > floor)
    values = np.full(len(p), np.nan)
    values[valid] = -np.log(p[valid] / q[valid])
    return EchoSeries(perturbed.times.copy(), values, p.copy(), q.copy())


def first_echo_spacing(times, isolated_values) -> float:
    """Time of the first local maximum of the isolated trace after ``t = 0``."""
    v = np.asarray(isolated_values)
    interior = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:])) + 1
    if len(interior) == 0:
        raise FitError("isolated trace has no echo maximum")
    return float(np.asarray(times)[interior[0]])


def detect_echo_maxima(series: EchoSeries, spacing: float | None = None) -> list[EchoRecord]:
    """Local maxima of the log-ratio within a sliding window.

    The window half-width is ``0.3 * spacing`` and must fit inside the series;
    maxima closer than ``0.5 * spacing`` are merged (the larger value wins).
    ``spacing`` defaults to the first echo time of the isolated trace.  The
    ``t = 0`` point is never a candidate.
    """
    t = series.times
    y = series.values
    if spacing is None:
        spacing = first_echo_spacing(t, series.p11_isolated)
    dt = t[1] - t[0]
    hw = max(1, int(round(WINDOW_FRACTION * spacing / dt)))
    filled = np.where(np.isfinite(y), y, -np.inf)
    picks: list[int] = []
    for k in range(max(1, hw), len(y) - hw):
        if not np.isfinite(y[k]) or t[k] <= 0.0:
            continue
        if y[k] < filled[k - hw:k + hw + 1].max():
            continue
        if picks and t[k] - t[picks[-1]] < SEPARATION_FRACTION * spacing:
            if y[k] > y[picks[-1]]:
                picks[-1] = k
            continue
        picks.append(k)
    if not picks:
        raise FitError("no echo maxima found")
    return [
        EchoRecord(n + 1, float(t[k]), float(y[k]), float(series.p11[k]), float(series.p11_isolated[k]))
        for n, k in enumerate(picks)
    ]


def _deviation_bound(fit: LineFit, y) -> float:
    # an exactly linear prefix has zero RMSE; keep a rounding-level floor
    return 2.0 * max(fit.rmse, 1e-10 * (1.0 + float(np.max(np.abs(y)))))


def estimate_crossover(
    records: Sequence[EchoRecord], fit_preview: Callable = line_fit
) -> float:
    """Time after which the echo envelope stops being linear.

    Scanning forward from the fourth record, a record is flagged when it lies
    further than twice the RMSE from the line through all earlier records.
    The candidate is then moved back until every earlier record (again from
    the fourth on) sits within the bound of the line through its own
    predecessors.  Without a flagged record the last record time is returned.
    """
    if len(records) < MIN_CROSSOVER_RECORDS:
        raise FitError(f"need at least {MIN_CROSSOVER_RECORDS} echo records, got {len(records)}")
    t = np.array([r.time for r in records])
    y = np.array([r.log_ratio for r in records])

    def flagged(k: int) -> bool:
        fit = fit_preview(t[:k], y[:k])
        pred = fit.intercept + fit.slope * t[k]
        return abs(y[k] - pred) > _deviation_bound(fit, y[:k])

    first = MIN_CROSSOVER_RECORDS - 1
    k = next((j for j in range(first, len(t)) if flagged(j)), len(t))
    while True:
        earlier = next((j for j in range(first, k) if flagged(j)), k)
        if earlier == k:
            break
        k = earlier
    return float(t[k]) if k < len(t) else float(t[-1])


def fit_decoherence_time(records: Sequence[EchoRecord], t_R: float) -> DecoherenceFit:
    """Line through the echo maxima strictly before ``t_R``; ``tau_phi = 1/slope``."""
    used = [r for r in records if r.time < t_R]
    if len(used) < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} echo maxima before t_R={t_R}, got {len(used)}")
    fit = line_fit([r.time for r in used], [r.log_ratio for r in used])
    if not fit.slope > 0:
        raise FitError(f"no exponential decay detected (slope {fit.slope:.3e})")
    return DecoherenceFit(
        tau_phi=1.0 / fit.slope,
        slope=fit.slope,
        slope_stderr=fit.slope_stderr,
        intercept=fit.intercept,
        n_points_used=len(used),
        crossover_time=float(t_R),
        included=tuple(r.index for r in used),
    )


def analyse_echoes(perturbed: PolarizationTrace, isolated: PolarizationTrace, t_fit_max: float | None = None):
    """Log-ratio, maxima, crossover and decoherence fit in one call.

    Returns ``(records, fit)``.  ``t_fit_max`` drops maxima beyond that time.
    """
    series = log_ratio_series(perturbed, isolated)
    records = detect_echo_maxima(series)
    if t_fit_max is not None:
        records = [r for r in records if r.time <= t_fit_max]
    t_R = estimate_crossover(records)
    return records, fit_decoherence_time(records, t_R)


def fit_fgr_slope(points) -> LineFit:
    """Slope of ``1/tau_phi`` against ``J_y^2 / J_x``; the intercept is fitted too."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} (x, rate) points")
    return line_fit(pts[:, 0], pts[:, 1])


def extract_AB(entries) -> ABFit:
    """Ising and flip-flop constants from per-type slopes.

    ``entries`` holds ``(a, b, slope)`` triples.  With ``1/slope`` the product
    ``tau_phi J_y^2 / J_x``, the model ``slope = A a^2 + B b^2`` becomes the
    line ``y = 1/B - (A/B) x`` in ``x = a^2/slope``, ``y = b^2/slope``.
    """
    arr = np.asarray([(e[0], e[1], e[2]) for e in entries], dtype=float)
    if len(arr) < 3 or len({(a, b) for a, b, _ in arr.tolist()}) < 3:
        raise FitError("need at least three distinct (a, b) pairs")
    a, b, s = arr.T
    if not np.any(a != 0) or not np.any(b != 0):
        raise FitError("need at least one type with a != 0 and one with b != 0")
    if np.any(s <= 0):
        raise FitError("slopes must be positive")
    fit = line_fit(a**2 / s, b**2 / s)
    c0, c1 = fit.intercept, fit.slope
    if not c0 > 0:
        raise FitError(f"non-positive intercept {c0:.3e}")
    B = 1.0 / c0
    A = -c1 * B
    var_c1, cov, var_c0 = fit.cov[0, 0], fit.cov[0, 1], fit.cov[1, 1]
    # delta method on A = -c1/c0, B = 1/c0
    ga = np.array([-1.0 / c0, c1 / c0**2])
    cov2 = np.array([[var_c1, cov], [cov, var_c0]])
    A_err = float(np.sqrt(max(ga @ cov2 @ ga, 0.0)))
    B_err = float(np.sqrt(var_c0)) / c0**2
    return ABFit(float(A), A_err, float(B), B_err)
