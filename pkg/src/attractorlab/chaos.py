"""Lyapunov exponent estimation and box-counting dimension.

Two exponent estimators are provided: the norm-sum diagnostic
``(1/n) sum log ||f'(x_k)||_2`` (an upper-bound-style quantity, since
log of the spectral norm is submultiplicative) and the standard QR
tangent-space spectrum.  Exponents are per-iterate natural logs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .maps import MapHandle
from .dynamics import PointCloud

TRACE_STRIDE = 100


@dataclass(frozen=True)
class LyapunovEstimate:
    max_exponent: float
    spectrum: np.ndarray            # sorted descending
    n_used: int
    method: str                     # "norm_sum" | "qr_spectrum"
    convergence_trace: np.ndarray   # every 100th partial average (max exp.)
    degenerate: bool = False


@dataclass(frozen=True)
class BoxCountResult:
    scales: np.ndarray       # descending box sizes
    counts: np.ndarray       # occupied boxes per scale
    dimension: float
    r2: float
    scale_window: np.ndarray  # indices retained for the fit
    degenerate: bool = False


def max_lyapunov_norm_sum(handle: MapHandle, x0, n: int,
                          n_transient: int = 0) -> LyapunovEstimate:
    """Average log spectral norm of the Jacobian along an orbit.

    An orbit point with an exactly zero Jacobian norm makes the sum
    -inf; that case is reported with ``degenerate=True`` instead of
    raising.
    """
    _check_lyapunov_args(x0, n, n_transient)
    value, k_used, degenerate, trace = _kernels.run_norm_sum(
        handle, np.asarray(x0, dtype=float), n_transient, n, TRACE_STRIDE)
    if degenerate:
        value = -np.inf
    return LyapunovEstimate(
        max_exponent=float(value),
        spectrum=np.array([value], dtype=float),
        n_used=int(k_used),
        method="norm_sum",
        convergence_trace=np.asarray(trace, dtype=float),
        degenerate=bool(degenerate))


def lyapunov_spectrum_qr(handle: MapHandle, x0, n: int,
                         n_transient: int = 0) -> LyapunovEstimate:
    """QR tangent-space spectrum: re-orthonormalize a frame every step.

    Rank-deficient Jacobian steps mark the affected exponents with a
    -inf sentinel and stop the accumulation.
    """
    _check_lyapunov_args(x0, n, n_transient)
    vals, k_used, deg, trace = _kernels.run_qr(
        handle, np.asarray(x0, dtype=float), n_transient, n, TRACE_STRIDE)
    vals = np.asarray(vals, dtype=float).copy()
    deg = np.asarray(deg, dtype=bool)
    vals[deg] = -np.inf
    order = np.argsort(vals)[::-1]
    spectrum = vals[order]
    trace = np.asarray(trace, dtype=float)
    trace_max = trace.max(axis=1) if trace.size else np.empty(0)
    return LyapunovEstimate(
        max_exponent=float(spectrum[0]),
        spectrum=spectrum,
        n_used=int(k_used),
        method="qr_spectrum",
        convergence_trace=trace_max,
        degenerate=bool(deg.any()))


def _check_lyapunov_args(x0, n: int, n_transient: int):
    if n < 100:
        raise ValueError("need n >= 100 iterates for a Lyapunov estimate")
    if n_transient < 0:
        raise ValueError("n_transient must be nonnegative")
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial point must be finite")


def box_counting_dimension(cloud, n_scales: int = 8) -> BoxCountResult:
    """Box-counting slope over a geometric scale ladder (ratio 2).

    The ladder starts at (bounding-box diagonal)/4 and stops before the
    saturated regime N(eps) > n_points/10.  The grid is anchored at the
    bounding-box corner, which makes counts deterministic and monotone
    across the ladder.
    """
    pts = getattr(cloud, "points", None)
    if pts is None:
        pts = np.asarray(cloud, dtype=float)
    n_pts, m = pts.shape
    if n_pts < 1000:
        raise ValueError(f"cloud too small for box counting: {n_pts} points")
    if n_scales < 5:
        raise ValueError("need at least 5 scales")
    mins = pts.min(axis=0)
    diag = float(np.linalg.norm(pts.max(axis=0) - mins))
    if diag == 0.0:
        return BoxCountResult(scales=np.empty(0), counts=np.empty(0, int),
                              dimension=0.0, r2=1.0,
                              scale_window=np.empty(0, int), degenerate=True)
    scales = diag / 4.0 / (2.0 ** np.arange(n_scales))
    counts = np.empty(n_scales, dtype=np.int64)
    kept = []
    for i, eps in enumerate(scales):
        idx = np.floor((pts - mins) / eps).astype(np.int64)
        counts[i] = len(np.unique(idx, axis=0))
        if counts[i] > n_pts / 10:
            counts = counts[:i + 1]
            scales = scales[:i + 1]
            break
        kept.append(i)
    if len(kept) < 2:              # cloud saturates immediately; fit anyway
        kept = list(range(len(scales)))
    window = np.array(kept, dtype=int)
    logs_inv_eps = np.log(1.0 / scales[window])
    logs_n = np.log(counts[window].astype(float))
    slope, intercept = np.polyfit(logs_inv_eps, logs_n, 1)
    fitted = slope * logs_inv_eps + intercept
    ss_res = float(np.sum((logs_n - fitted) ** 2))
    ss_tot = float(np.sum((logs_n - logs_n.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    dimension = float(min(max(slope, 0.0), m))
    return BoxCountResult(scales=scales, counts=counts, dimension=dimension,
                          r2=r2, scale_window=window)
