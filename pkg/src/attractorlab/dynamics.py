"""Orbit generation, periodic-orbit search, and stability classification.

Orbits of built-in families run through the compiled kernels in
:mod:`attractorlab._kernels`; everything else goes through the generic
callable lane.  Periodic orbits are located with Newton's method on
``f^k - id`` using the chain-rule Jacobian product, then reduced to
their minimal period.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .maps import MapHandle

# hyperbolicity margin for sink/source/saddle classification
HYPERBOLICITY_MARGIN = 1e-3

NEWTON_MAX_STEPS = 100
NEWTON_RESIDUAL = 1e-10
MINIMAL_PERIOD_TOL = 1e-9
PERIOD_DETECT_TOL = 1e-6


class DivergenceError(ArithmeticError):
    """An iterate left the representable range (non-finite coordinates)."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class CycleSearchError(RuntimeError):
    """Newton iteration for a cycle failed.

    ``condition`` carries a condition-number estimate of the last Newton
    matrix when the failure was a (near-)singular solve.
    """

    def __init__(self, message: str, condition: Optional[float] = None,
                 residual: Optional[float] = None):
        super().__init__(message)
        self.condition = condition
        self.residual = residual


@dataclass(frozen=True)
class PointCloud:
    """A finite sample of phase space, optionally ordered along an orbit."""

    points: np.ndarray
    ordered: bool
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            pts = pts.reshape(len(pts), -1) if len(pts) else pts.reshape(0, 1)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Cycle:
    """A periodic orbit: k ordered points, its multipliers, and stability.

    ``multipliers`` are the eigenvalues of the derivative of the k-th
    iterate at ``points[0]``; ``stability`` is one of ``sink``,
    ``source``, ``saddle``, ``nonhyperbolic``.
    """

    points: np.ndarray
    period: int
    multipliers: np.ndarray
    stability: str


def _classify_multipliers(multipliers: np.ndarray) -> str:
    moduli = np.abs(multipliers)
    if np.all(moduli < 1.0 - HYPERBOLICITY_MARGIN):
        return "sink"
    if np.all(moduli > 1.0 + HYPERBOLICITY_MARGIN):
        return "source"
    if (np.any(moduli < 1.0 - HYPERBOLICITY_MARGIN)
            and np.any(moduli > 1.0 + HYPERBOLICITY_MARGIN)):
        return "saddle"
    return "nonhyperbolic"


@dataclass(frozen=True)
class StabilityInfo:
    """Classification plus eigen-directions (populated for saddles)."""

    label: str
    stable_vectors: np.ndarray
    unstable_vectors: np.ndarray
    multipliers: np.ndarray


def orbit(handle: MapHandle, x0, n_transient: int, n_keep: int) -> PointCloud:
    """Iterate the map and keep the n_keep points after the transient.

    Returns ``f^{n0+1}(x0) ... f^{n0+n}(x0)`` in order.  Raises
    :class:`DivergenceError` if an iterate becomes non-finite (possible
    for user maps and for cone-restricted built-ins started outside
    their positivity domain).
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial point must be finite")
    if n_transient < 0 or n_keep < 0:
        raise ValueError("iteration counts must be nonnegative")
    if n_keep == 0:
        return PointCloud(np.empty((0, x0.size)), ordered=True,
                          meta=_orbit_meta(handle, x0, n_transient, n_keep))
    pts = _kernels.run_orbit(handle, x0, n_transient, n_keep)
    if not np.all(np.isfinite(pts)):
        bad = int(np.flatnonzero(~np.isfinite(pts).all(axis=1))[0])
        raise DivergenceError(
            f"orbit diverged to non-finite values at kept step {bad}",
            step=bad)
    return PointCloud(pts, ordered=True,
                      meta=_orbit_meta(handle, x0, n_transient, n_keep))


def _orbit_meta(handle: MapHandle, x0, n_transient: int, n_keep: int) -> dict:
    return {"spec": handle.spec, "x0": np.array(x0, dtype=float),
            "n_transient": int(n_transient), "n_keep": int(n_keep)}


def _iterate_with_product(handle: MapHandle, x: np.ndarray, k: int):
    """Return (f^k(x), product of Jacobians along the k steps)."""
    y = np.array(x, dtype=float)
    prod = np.eye(x.size)
    for _ in range(k):
        prod = handle.jac(y) @ prod
        y = handle.eval(y)
    return y, prod


def find_cycle(handle: MapHandle, period: int, seed) -> Cycle:
    """Newton search for a k-periodic point starting from ``seed``.

    The returned cycle carries its minimal period (a divisor of
    ``period`` when the root has one) and the multipliers of the
    corresponding iterate.
    """
    if period < 1:
        raise ValueError("period must be >= 1")
    x = np.asarray(seed, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("seed must be finite")
    m = x.size
    residual = np.inf
    for _ in range(NEWTON_MAX_STEPS):
        y, prod = _iterate_with_product(handle, x, period)
        if not np.all(np.isfinite(y)):
            raise CycleSearchError("iterate escaped to non-finite values "
                                   "during Newton search")
        fval = y - x
        residual = float(np.linalg.norm(fval))
        if residual <= NEWTON_RESIDUAL:
            break
        amat = prod - np.eye(m)
        if not np.all(np.isfinite(amat)):
            raise CycleSearchError("Newton matrix has non-finite entries")
        try:
            delta = np.linalg.solve(amat, -fval)
        except np.linalg.LinAlgError:
            raise CycleSearchError(
                "singular Newton matrix",
                condition=float(np.linalg.cond(amat))) from None
        cond = float(np.linalg.cond(amat))
        if not np.all(np.isfinite(delta)) or cond > 1e14:
            raise CycleSearchError("ill-conditioned Newton matrix",
                                   condition=cond)
        x = x + delta
    else:
        raise CycleSearchError(
            f"no convergence within {NEWTON_MAX_STEPS} Newton steps "
            f"(residual {residual:.3e})", residual=residual)

    # minimal-period reduction: smallest divisor j of k that already closes
    k_min = period
    for j in _divisors(period):
        z, _ = _iterate_with_product(handle, x, j)
        if np.linalg.norm(z - x) <= MINIMAL_PERIOD_TOL:
            k_min = j
            break
    pts = np.empty((k_min, m))
    y = x.copy()
    for i in range(k_min):
        pts[i] = y
        y = handle.eval(y)
    _, prod = _iterate_with_product(handle, x, k_min)
    mult = np.linalg.eigvals(prod)
    return Cycle(points=pts, period=k_min, multipliers=mult,
                 stability=_classify_multipliers(mult))


def _divisors(k: int):
    return [j for j in range(1, k + 1) if k % j == 0]


def classify_cycle(handle: MapHandle, cycle: Cycle) -> StabilityInfo:
    """Recompute multipliers at cycle.points[0] and attach eigenvectors.

    Saddles get real stable/unstable directions (columns); other classes
    get empty direction arrays.
    """
    x = cycle.points[0]
    _, prod = _iterate_with_product(handle, x, cycle.period)
    vals, vecs = np.linalg.eig(prod)
    label = _classify_multipliers(vals)
    m = x.size
    stable = np.empty((m, 0))
    unstable = np.empty((m, 0))
    if label == "saddle":
        # mixed moduli forces real eigenvalues in the plane; take real parts
        s_cols = [i for i in range(len(vals))
                  if abs(vals[i]) < 1.0 - HYPERBOLICITY_MARGIN]
        u_cols = [i for i in range(len(vals))
                  if abs(vals[i]) > 1.0 + HYPERBOLICITY_MARGIN]
        stable = np.real(vecs[:, s_cols])
        unstable = np.real(vecs[:, u_cols])
        stable /= np.linalg.norm(stable, axis=0, keepdims=True)
        unstable /= np.linalg.norm(unstable, axis=0, keepdims=True)
    return StabilityInfo(label=label, stable_vectors=stable,
                         unstable_vectors=unstable, multipliers=vals)


def detect_period(cloud, max_period: int = 64):
    """Smallest k <= max_period closing the tail of an ordered cloud.

    Checks ``|x_{i+k} - x_i| <= 1e-6`` over the last 2*max_period index
    pairs; returns the string ``"aperiodic"`` when no k qualifies.
    """
    pts = getattr(cloud, "points", None)
    if pts is None:
        pts = np.asarray(cloud, dtype=float)
    if getattr(cloud, "ordered", True) is False:
        raise ValueError("detect_period needs an ordered cloud")
    n = len(pts)
    if n < 3 * max_period:
        raise ValueError(
            f"cloud too short: {n} points, need >= {3 * max_period}")
    window = 2 * max_period
    for k in range(1, max_period + 1):
        tail = pts[n - (window + k):]
        gaps = np.linalg.norm(tail[k:k + window] - tail[:window], axis=1)
        if gaps.max() <= PERIOD_DETECT_TOL:
            return k
    return "aperiodic"
