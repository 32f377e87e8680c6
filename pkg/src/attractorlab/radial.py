"""Radial shell machinery for planar maps with ring-shaped trapping zones.

A map whose modulus behaves like a tent in the radius (expanding inner
branch, folding outer branch, dead zone past a cutoff) deletes a middle
band of radii at every iteration.  What survives is a Cantor set of
circles.  This module estimates the radial derivative bounds, builds
the nested shell partition with binary addresses by bisection against
the 1-D radius return map, evaluates the dimension bound formula, and
implements the binary shift space with its exact metric.

A synthetic "radial tent" family with prescribed slopes serves as the
constructed ground truth for all of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .maps import MapHandle, user_map
from .dynamics import PointCloud

MODE_SOURCE = "source_origin"
MODE_SINK = "sink_origin"

_BISECT_TOL = 1e-12
MAX_DEPTH = 30


class ShellConstructionError(RuntimeError):
    """Bisection bracket failed: the return map broke the shell hypotheses."""

    def __init__(self, message: str, angle: float, address: str):
        super().__init__(message)
        self.angle = angle
        self.address = address


def _const_profile(value: float) -> Callable:
    def profile(u):
        return np.asarray(u, dtype=float) * 0.0 + value
    return profile


@dataclass(frozen=True)
class ShellSpec:
    """Radial shell geometry: profiles are functions of the angle.

    alpha/beta bound the deleted band S* (the preimage of the dead
    zone), zeta is the outer cutoff, alpha0 (sink mode only) is the
    basin radius of the attracting origin.  lam/mu are the radial
    expansion bounds; sampled validation accepts lam == mu since the
    equal-slope tent construction is the primary oracle.
    """
    alpha: Callable
    beta: Callable
    zeta: Callable
    m_small: float
    m_big: float
    lam: float
    mu: float
    mode: str = MODE_SOURCE
    alpha0: Optional[Callable] = None

    def __post_init__(self):
        if self.mode not in (MODE_SOURCE, MODE_SINK):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_SINK and self.alpha0 is None:
            raise ValueError("sink_origin mode requires alpha0")

    def validate(self, n_angles: int = 64) -> None:
        """Check the shell inequalities on a sampled angle grid."""
        u = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
        a, b, z = self.alpha(u), self.beta(u), self.zeta(u)
        if not np.all(0 < a):
            raise ValueError("alpha must be positive")
        if not np.all(a < b):
            raise ValueError("need alpha < beta at every angle")
        if not np.all(b < z):
            raise ValueError("need beta < zeta at every angle")
        if not np.all(b - a < z):
            raise ValueError("band width must stay below zeta")
        if not self.m_big / self.m_small < self.lam:
            raise ValueError("need m_big/m_small < lam")
        if not self.lam <= self.mu:
            raise ValueError("need lam <= mu")
        if self.mode == MODE_SINK:
            a0 = self.alpha0(u)
            if not np.all((0 < a0) & (a0 < a)):
                raise ValueError("need 0 < alpha0 < alpha at every angle")

    def inner_floor(self, u):
        """Inner boundary of the shell region: 0 or alpha0 by mode."""
        if self.mode == MODE_SINK:
            return self.alpha0(u)
        return np.asarray(u, dtype=float) * 0.0


def radial_derivative(handle: MapHandle, x: np.ndarray) -> float:
    """Derivative of |f| along the outward radial direction at x.

    Undefined where x = 0 or f(x) = 0; both raise ValueError.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0.0:
        raise ValueError("radial derivative undefined at the origin")
    fx = handle.eval(x)
    nf = np.linalg.norm(fx)
    if nf == 0.0:
        raise ValueError("radial derivative undefined where f vanishes")
    grad = handle.jac(x).T @ (fx / nf)
    return float(grad @ (x / r))


def estimate_radial_bounds(handle: MapHandle, shells: ShellSpec,
                           grid: int = 256, n_angles: int = 64):
    """Sample d|f|/dr over the inner and outer shell regions.

    Returns (lam_hat, mu_hat, violations) where lam_hat/mu_hat are the
    min/max of |d_r| over both regions and violations collects sample
    points with the wrong sign (inner must be positive, outer negative)
    plus a ratio entry when m_big/m_small >= lam_hat.  Violations are
    data, not errors.
    """
    shells.validate(n_angles)
    angles = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    lam_hat, mu_hat = np.inf, 0.0
    violations = []
    for ang in angles:
        a = float(shells.alpha(ang))
        b = float(shells.beta(ang))
        z = float(shells.zeta(ang))
        lo = float(np.asarray(shells.inner_floor(ang)))
        inner = (np.linspace(lo, a, grid + 1)[1:] if lo == 0.0
                 else np.linspace(lo, a, grid))
        outer = np.linspace(b, z, grid, endpoint=False)
        u = np.array([np.cos(ang), np.sin(ang)])
        for radii, sign in ((inner, 1.0), (outer, -1.0)):
            for r in radii:
                d = radial_derivative(handle, r * u)
                if d * sign <= 0.0:
                    violations.append((r * u, "sign", d))
                    continue
                lam_hat = min(lam_hat, abs(d))
                mu_hat = max(mu_hat, abs(d))
    if lam_hat <= shells.m_big / shells.m_small:
        violations.append((None, "ratio_condition", lam_hat))
    return float(lam_hat), float(mu_hat), violations


def _vector_return_map(return_map: Callable) -> Callable:
    """Accept scalar-only return maps by wrapping with np.vectorize."""
    try:
        probe = return_map(np.array([0.1, 0.2]), np.array([0.0, 0.0]))
        if np.shape(probe) == (2,):
            return return_map
    except Exception:
        pass
    return np.vectorize(return_map, otypes=[float])


def _bisect_many(g, lo, hi, target, angles):
    """Vectorized bisection of g(r, angle) = target on brackets [lo, hi]."""
    flo = g(lo, angles) - target
    fhi = g(hi, angles) - target
    bad = flo * fhi > 0.0
    if np.any(bad):
        return None, bad
    a, b = lo.copy(), hi.copy()
    fa = flo
    for _ in range(100):
        mid = 0.5 * (a + b)
        fm = g(mid, angles) - target
        right = fa * fm > 0.0
        a = np.where(right, mid, a)
        fa = np.where(right, fm, fa)
        b = np.where(right, b, mid)
        if float(np.max(b - a)) < _BISECT_TOL:
            break
    return 0.5 * (a + b), None


@dataclass
class ShellPartition:
    """Nested radial cells addressed by binary words, per sampled angle.

    Address bit 0 picks the inner child, bit 1 the outer one, so cell i
    at level d carries the d-bit binary address of i in radial order.
    Children share their outward endpoints with the parent cell, like
    the middle-thirds construction; strict nesting lives in the deleted
    band: cell.lo < band.lo < band.hi < cell.hi everywhere.
    """
    depth: int
    angles: np.ndarray          # full angle grid
    collapsed: bool             # True when angle-independent storage
    levels: list                # levels[j] = (lo, hi), shape (n_store, 2^j)
    bands: list                 # bands[j] = (lo, hi), j < depth

    @property
    def n_angles(self) -> int:
        return len(self.angles)

    def _expand(self, arr: np.ndarray) -> np.ndarray:
        if self.collapsed:
            return np.broadcast_to(arr, (self.n_angles,) + arr.shape[1:])
        return arr

    def cell(self, address: str):
        """(inner, outer) radius arrays over the angle grid."""
        if len(address) > self.depth or any(c not in "01" for c in address):
            raise KeyError(address)
        level = len(address)
        idx = int(address, 2) if address else 0
        lo, hi = self.levels[level]
        return (self._expand(lo)[:, idx].copy(),
                self._expand(hi)[:, idx].copy())

    def addresses(self, level: int):
        if not 0 <= level <= self.depth:
            raise ValueError("level out of range")
        return [format(i, f"0{level}b") if level else ""
                for i in range(2 ** level)]

    def leaves(self):
        lo, hi = self.levels[self.depth]
        return self._expand(lo), self._expand(hi)

    def validate(self) -> None:
        """Nesting and disjointness at every stored angle and level."""
        for j in range(self.depth):
            clo, chi = self.levels[j]
            blo, bhi = self.bands[j]
            ok = (clo < blo) & (blo < bhi) & (bhi < chi)
            if not np.all(ok):
                bad = np.argwhere(~ok)[0]
                raise AssertionError(
                    f"band not strictly inside cell at level {j}, "
                    f"angle index {bad[0]}, cell index {bad[1]}")
            nlo, nhi = self.levels[j + 1]
            if not (np.all(nlo[:, ::2] == clo) and np.all(nhi[:, ::2] == blo)
                    and np.all(nlo[:, 1::2] == bhi)
                    and np.all(nhi[:, 1::2] == chi)):
                raise AssertionError(f"children do not tile level {j}")

    def sample_cloud(self, max_points: int = 200_000,
                     seed: int = 0) -> PointCloud:
        """Random (leaf, angle) sample of the partition as a 2-D cloud.

        Radii are leaf midpoints at the nearest stored angle; angles
        are uniform on the circle, so the cloud approximates the
        product of the circle with the radial Cantor set.
        """
        rng = np.random.default_rng(seed)
        lo, hi = self.levels[self.depth]
        n_leaves = lo.shape[1]
        leaf = rng.integers(0, n_leaves, size=max_points)
        phi = rng.uniform(0.0, 2 * np.pi, size=max_points)
        if self.collapsed:
            col = np.zeros(max_points, dtype=int)
        else:
            step = 2 * np.pi / self.n_angles
            col = np.rint(phi / step).astype(int) % self.n_angles
        r = 0.5 * (lo[col, leaf] + hi[col, leaf])
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
        return PointCloud(pts, ordered=False,
                          meta={"depth": self.depth, "seed": seed})

    def write_csv(self, path, level: Optional[int] = None) -> None:
        """Rows: angle, address, inner, outer for every cell at level."""
        level = self.depth if level is None else level
        addrs = self.addresses(level)
        lo, hi = self.levels[level]
        lo, hi = self._expand(lo), self._expand(hi)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("angle,address,inner,outer\n")
            for i, ang in enumerate(self.angles):
                for k, addr in enumerate(addrs):
                    fh.write(f"{ang:.17g},{addr or 'root'},"
                             f"{lo[i, k]:.17g},{hi[i, k]:.17g}\n")


def cantor_shells(return_map: Callable, shells: ShellSpec, depth: int,
                  angle_grid: int = 256) -> ShellPartition:
    """Build the nested shell partition to the requested depth.

    ``return_map(r, angle)`` is the 1-D radius map; it must be monotone
    increasing on the inner branch and decreasing on the outer one.
    Preimages of the deleted band are found by bisection (vectorized
    over angles and cells).  Angle-independent maps are detected and
    stored with a single angle column.
    """
    if not 1 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in [1, {MAX_DEPTH}]")
    shells.validate(max(angle_grid, 8))
    g = _vector_return_map(return_map)
    angles = np.linspace(0.0, 2 * np.pi, angle_grid, endpoint=False)

    probe_r = np.linspace(0.05, 0.95, 8)[:, None] * shells.zeta(angles)[None, :]
    probe = g(probe_r, np.broadcast_to(angles, probe_r.shape))
    angle_free = bool(np.all(np.ptp(probe, axis=1) == 0.0))
    for fn in (shells.alpha, shells.beta, shells.zeta, shells.alpha0):
        if fn is not None:
            angle_free &= bool(np.ptp(np.asarray(fn(angles))) == 0.0)

    store = angles[:1] if angle_free else angles
    n_store = len(store)
    if n_store * (2 ** depth) > 2 ** 28:
        raise ValueError("partition too large; reduce depth or angle_grid")

    def prof(fn):
        return np.asarray(fn(store), dtype=float)

    root_lo = prof(shells.alpha0) if shells.mode == MODE_SINK else \
        np.zeros(n_store)
    levels = [(root_lo[:, None].copy(), prof(shells.zeta)[:, None])]
    bands = [(prof(shells.alpha)[:, None], prof(shells.beta)[:, None])]
    # img[i]: index of the cell one level up that g maps cell i onto.
    # Radial order reverses under g on the outer (decreasing) branch,
    # so the image index is not a plain address shift.
    img = np.zeros(1, dtype=int)

    for j in range(depth):
        clo, chi = levels[j]
        blo, bhi = bands[j]
        n_par = 2 ** j
        nlo = np.empty((n_store, 2 * n_par))
        nhi = np.empty_like(nlo)
        nlo[:, ::2], nhi[:, ::2] = clo, blo
        nlo[:, 1::2], nhi[:, 1::2] = bhi, chi
        levels.append((nlo, nhi))
        if j == 0:
            img_child = np.zeros(2, dtype=int)
        else:
            inc_par = (np.arange(n_par) >> (j - 1)) == 0
            img_child = np.empty(2 * n_par, dtype=int)
            img_child[::2] = 2 * img + np.where(inc_par, 0, 1)
            img_child[1::2] = 2 * img + np.where(inc_par, 1, 0)
        img = img_child
        if j + 1 == depth:
            break
        n_cells = 2 * n_par
        t_lo, t_hi = blo[:, img], bhi[:, img]
        lo2 = np.concatenate([nlo, nlo], axis=1)
        hi2 = np.concatenate([nhi, nhi], axis=1)
        targets = np.concatenate([t_lo, t_hi], axis=1)
        ang2 = np.broadcast_to(store[:, None], lo2.shape)
        roots, bad = _bisect_many(g, lo2, hi2, targets, ang2)
        if roots is None:
            ia, ic = np.argwhere(bad)[0]
            addr = format(int(ic) % n_cells, f"0{j + 1}b")
            raise ShellConstructionError(
                f"no sign change bracketing the band preimage at level "
                f"{j + 1}", float(store[ia]), addr)
        r_lo, r_hi = roots[:, :n_cells], roots[:, n_cells:]
        inc_child = (np.arange(n_cells) >> j) == 0
        new_blo = np.where(inc_child, r_lo, r_hi)
        new_bhi = np.where(inc_child, r_hi, r_lo)
        bands.append((new_blo, new_bhi))

    return ShellPartition(depth=depth, angles=angles, collapsed=angle_free,
                          levels=levels, bands=bands)


def hausdorff_bounds(lam: float, mu: float, m: int = 2):
    """Dimension bound pair (m-1+log2/log(1+mu), m-1+log2/log(1+lam))."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if mu < lam:
        raise ValueError("need lam <= mu")
    if m < 1:
        raise ValueError("m must be a positive dimension")
    lower = m - 1 + math.log(2) / math.log(1 + mu)
    upper = m - 1 + math.log(2) / math.log(1 + lam)
    return lower, upper


# binary shift space with exact metric


def _digits_tuple(word) -> tuple:
    if isinstance(word, str):
        word = [int(c) for c in word]
    digits = tuple(int(d) for d in word)
    if any(d not in (0, 1) for d in digits):
        raise ValueError("digits must be 0 or 1")
    return digits


@dataclass(frozen=True)
class SymbolCode:
    """Eventually-periodic binary sequence, canonical representation.

    The stored form has minimal period and minimal preperiod, so two
    codes are equal as sequences iff their fields are equal.  Finite
    words are represented with a trailing period of (0,).
    """
    preperiod: tuple = ()
    period: tuple = (0,)

    def __post_init__(self):
        pre = _digits_tuple(self.preperiod)
        per = _digits_tuple(self.period)
        if not per:
            raise ValueError("period must be nonempty")
        n = len(per)
        for d in range(1, n + 1):
            if n % d == 0 and per[:d] * (n // d) == per:
                per = per[:d]
                break
        while pre and pre[-1] == per[-1]:
            per = per[-1:] + per[:-1]
            pre = pre[:-1]
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)

    def digit(self, n: int) -> int:
        """n-th digit, 1-based."""
        if n < 1:
            raise ValueError("positions are 1-based")
        if n <= len(self.preperiod):
            return self.preperiod[n - 1]
        return self.period[(n - 1 - len(self.preperiod)) % len(self.period)]

    def prefix(self, length: int) -> tuple:
        return tuple(self.digit(n) for n in range(1, length + 1))

    def __str__(self):
        pre = "".join(map(str, self.preperiod))
        per = "".join(map(str, self.period))
        return f".{pre}({per})*"


def shift_map(s: SymbolCode) -> SymbolCode:
    """Drop the first digit."""
    if s.preperiod:
        return SymbolCode(s.preperiod[1:], s.period)
    return SymbolCode((), s.period[1:] + s.period[:1])


def periodic_code(prefix) -> SymbolCode:
    """The periodic sequence repeating the given finite word."""
    digits = _digits_tuple(prefix)
    if not digits:
        raise ValueError("prefix must be nonempty")
    return SymbolCode((), digits)


def shift_metric(s: SymbolCode, t: SymbolCode) -> Fraction:
    """Exact sum of 2^{-n} |s(n) - t(n)| as a Fraction."""
    head = max(len(s.preperiod), len(t.preperiod))
    p = math.lcm(len(s.period), len(t.period))
    total = Fraction(0)
    for n in range(1, head + 1):
        if s.digit(n) != t.digit(n):
            total += Fraction(1, 2 ** n)
    acc = 0
    for k in range(1, p + 1):
        if s.digit(head + k) != t.digit(head + k):
            acc += 2 ** (p - k)
    total += Fraction(acc, (2 ** p - 1) * 2 ** head)
    return total


# synthetic ground-truth family


@dataclass(frozen=True)
class RadialTent:
    handle: MapHandle
    shells: ShellSpec
    return_map: Callable


def radial_tent_map(slopes=(3.0, 3.0), zeta: float = 1.0, theta: float = 0.0,
                    mode: str = MODE_SOURCE,
                    alpha0: Optional[float] = None) -> RadialTent:
    """Planar map with a piecewise-linear tent as its radius return map.

    |f(x)| = g(|x|) with g rising at slope ``slopes[0]`` and falling at
    slope ``slopes[1]`` to hit zero at the cutoff ``zeta`` (exactly
    zero beyond, so the map has compact support).  The image direction
    is the input direction rotated by 2*pi*theta.  Sink mode replaces
    the linear rise below ``alpha0`` with r^2/alpha0, making the origin
    attracting with basin radius alpha0.

    All shell hypotheses hold by construction; returns the handle, the
    matching ShellSpec, and the scalar return map g(r, angle).
    """
    s_in, s_out = float(slopes[0]), float(slopes[1])
    if s_in <= 1 or s_out <= 1:
        raise ValueError("slopes must exceed 1")
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    if mode == MODE_SINK:
        a0 = zeta / 4.0 if alpha0 is None else float(alpha0)
        alpha = a0 + (zeta - a0) / s_in
        apex = (s_out * zeta + (s_in - 1.0) * a0) / (s_in + s_out)
        if not a0 < alpha < apex:
            raise ValueError("alpha0 too large for these slopes")
    elif mode == MODE_SOURCE:
        a0 = None
        alpha = zeta / s_in
        apex = s_out * zeta / (s_in + s_out)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    beta = zeta * (1.0 - 1.0 / s_out)

    def g(r, angle=0.0):
        r = np.asarray(r, dtype=float)
        rise = s_in * r if a0 is None else np.where(
            r < a0, r * r / a0, a0 + s_in * (r - a0))
        out = np.minimum(rise, s_out * (zeta - r))
        return np.maximum(out, 0.0) + np.asarray(angle) * 0.0

    def gprime(r):
        r = np.asarray(r, dtype=float)
        d = np.where(r < apex,
                     s_in if a0 is None else np.where(r < a0, 2 * r / a0,
                                                      s_in),
                     -s_out)
        return np.where(r >= zeta, 0.0, d)

    c, s = np.cos(2 * np.pi * theta), np.sin(2 * np.pi * theta)
    rot = np.array([[c, -s], [s, c]])

    def fn(x):
        r = np.linalg.norm(x)
        if r == 0.0:
            return np.zeros(2)
        return rot @ (float(g(r)) / r * np.asarray(x, dtype=float))

    def batch(pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=1)
        scale = np.zeros_like(r)
        nz = r > 0
        scale[nz] = g(r[nz]) / r[nz]
        return (scale[:, None] * pts) @ rot.T

    def jac(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r == 0.0:
            lead = 0.0 if a0 is not None else s_in
            return rot * lead
        u = x / r
        uu = np.outer(u, u)
        radial = float(g(r)) / r * (np.eye(2) - uu) + float(gprime(r)) * uu
        return rot @ radial

    handle = user_map(fn, 2, jac=jac, batch=batch,
                      params={"s_in": s_in, "s_out": s_out, "zeta": zeta,
                              "theta": theta, "mode": mode,
                              "alpha0": a0 if a0 is not None else np.nan})
    m_small, m_big = alpha, beta
    spec = ShellSpec(alpha=_const_profile(alpha), beta=_const_profile(beta),
                     zeta=_const_profile(zeta), m_small=m_small,
                     m_big=m_big, lam=min(s_in, s_out), mu=max(s_in, s_out),
                     mode=mode,
                     alpha0=None if a0 is None else _const_profile(a0))
    return RadialTent(handle=handle, shells=spec,
                      return_map=lambda r, angle=0.0: g(r, angle))
