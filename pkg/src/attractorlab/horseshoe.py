"""Attracting-horseshoe verification, saddle search, and manifold tracing.

The model region H* is a radius-4 capsule around the segment from
(-2, -1) to (-2, 9): a rectangular core Z* (two expansion bands S0*,
S1* around a fold band S1/2*) with half-disk caps C0* below and C1*
above.  An affine frame carries the model into the plane.  verify_ah
samples the defining conditions of an attracting horseshoe on that
geometry: the region maps into its own interior, both caps and the
fold band land in the proper caps, pushed-forward vertical leaves stay
transverse to horizontal ones inside the core, the lower cap is a
contracting sink region, a saddle with vertical unstable direction
sits in the lower band, and the foliation contraction/expansion rates
bracket 1.

The built-in model map realizes all of it with exact rates (0.2, 4);
its fold sends the middle band onto a family of nested ellipse arcs
inside the top cap, which keeps the map injective through the fold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .maps import MapHandle, user_map
from .dynamics import (Cycle, DivergenceError, CycleSearchError, PointCloud,
                       find_cycle, classify_cycle, _iterate_with_product)

STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_INCONCLUSIVE = "inconclusive"

TRANSVERSALITY_MIN_ANGLE = 1e-2     # radians
FOLIATION_STEP = 1e-5               # first-difference step, model coords
POINT_CAP = 10_000_000

_CAP0 = np.array([-2.0, -1.0])
_CAP1 = np.array([-2.0, 9.0])
_RADIUS = 4.0
_BANDS = (-1.0, 3.0, 5.0, 9.0)      # S0 / fold / S1 limits in x2


class RefinementExplosion(RuntimeError):
    """Manifold refinement exceeded the point budget; .partial saved."""

    def __init__(self, message: str, partial: PointCloud):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class HorseshoeRegion:
    """Affine frame carrying the model capsule H* into the plane."""
    matrix: np.ndarray = None
    offset: np.ndarray = None

    def __post_init__(self):
        m = np.eye(2) if self.matrix is None else \
            np.asarray(self.matrix, dtype=float).reshape(2, 2)
        b = np.zeros(2) if self.offset is None else \
            np.asarray(self.offset, dtype=float).reshape(2)
        if abs(np.linalg.det(m)) < 1e-9:
            raise ValueError("frame matrix is singular")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", b)

    def to_world(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.matrix.T + self.offset

    def to_model(self, pts: np.ndarray) -> np.ndarray:
        return (np.asarray(pts, dtype=float) - self.offset) @ \
            np.linalg.inv(self.matrix).T

    # signed interior distances in model coordinates (positive inside)

    @staticmethod
    def inside_h(q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        x2 = np.clip(q[:, 1], _CAP0[1], _CAP1[1])
        seg = np.column_stack([np.full(len(q), -2.0), x2])
        return _RADIUS - np.linalg.norm(q - seg, axis=1)

    @staticmethod
    def inside_z(q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        return np.minimum.reduce([_RADIUS - np.abs(q[:, 0] + 2.0),
                                  q[:, 1] - _BANDS[0], _BANDS[3] - q[:, 1]])

    @staticmethod
    def _inside_cap(q, center, below: bool) -> np.ndarray:
        q = np.atleast_2d(q)
        ball = _RADIUS - np.linalg.norm(q - center, axis=1)
        side = center[1] - q[:, 1] if below else q[:, 1] - center[1]
        return np.minimum(ball, side)

    def inside_c0(self, q):
        return self._inside_cap(q, _CAP0, below=True)

    def inside_c1(self, q):
        return self._inside_cap(q, _CAP1, below=False)

    def _inside_band(self, q, lo, hi):
        q = np.atleast_2d(q)
        return np.minimum.reduce([_RADIUS - np.abs(q[:, 0] + 2.0),
                                  q[:, 1] - lo, hi - q[:, 1]])

    def inside_s0(self, q):
        return self._inside_band(q, _BANDS[0], _BANDS[1])

    def inside_s_half(self, q):
        return self._inside_band(q, _BANDS[1], _BANDS[2])

    def inside_s1(self, q):
        return self._inside_band(q, _BANDS[2], _BANDS[3])

    def sample(self, piece: str, n: int, boundary: bool = False):
        """Model-coordinate grid sample of one piece of H*.

        boundary=True appends points on the capsule boundary (only
        meaningful for piece='h').
        """
        tests = {"h": self.inside_h, "z": self.inside_z,
                 "c0": self.inside_c0, "c1": self.inside_c1,
                 "s0": self.inside_s0, "s_half": self.inside_s_half,
                 "s1": self.inside_s1}
        boxes = {"h": (-6, 2, -5, 13), "z": (-6, 2, -1, 9),
                 "c0": (-6, 2, -5, -1), "c1": (-6, 2, 9, 13),
                 "s0": (-6, 2, -1, 3), "s_half": (-6, 2, 3, 5),
                 "s1": (-6, 2, 5, 9)}
        if piece not in tests:
            raise ValueError(f"unknown piece {piece!r}")
        x0, x1, y0, y1 = boxes[piece]
        gx = np.linspace(x0, x1, n)
        gy = np.linspace(y0, y1, n)
        g1, g2 = np.meshgrid(gx, gy, indexing="ij")
        pts = np.column_stack([g1.ravel(), g2.ravel()])
        pts = pts[tests[piece](pts) >= 0.0]
        if boundary:
            t = np.linspace(0.0, 1.0, 4 * n)
            ang = np.pi * t
            bottom = _CAP0 + _RADIUS * np.column_stack([np.cos(ang + np.pi),
                                                        -np.sin(ang)])
            top = _CAP1 + _RADIUS * np.column_stack([np.cos(ang),
                                                     np.sin(ang)])
            wall_y = _BANDS[0] + (_BANDS[3] - _BANDS[0]) * t
            left = np.column_stack([np.full_like(wall_y, -6.0), wall_y])
            right = np.column_stack([np.full_like(wall_y, 2.0), wall_y])
            pts = np.vstack([pts, bottom, top, left, right])
        return pts


@dataclass(frozen=True)
class AHEntry:
    name: str
    status: str
    margin: float
    witness: Optional[np.ndarray] = None
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        w = "" if self.witness is None else \
            np.array2string(np.asarray(self.witness), precision=6)
        return f"{self.name}\t{self.status}\t{self.margin:.9g}\t{w}"


@dataclass(frozen=True)
class AHReport:
    entries: list

    def entry(self, name: str) -> AHEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def all_pass(self) -> bool:
        return all(e.status == STATUS_PASS for e in self.entries)

    @property
    def lambda_contr(self) -> float:
        return self.entry("foliation_rates").data.get("lambda_contr",
                                                      float("nan"))

    @property
    def mu_exp(self) -> float:
        return self.entry("foliation_rates").data.get("mu_exp", float("nan"))

    @property
    def saddle(self) -> Optional[Cycle]:
        return self.entry("band_saddle").data.get("saddle")

    def as_text(self) -> str:
        header = "condition\tstatus\tmargin\twitness"
        return "\n".join([header] + [e.line() for e in self.entries]) + "\n"


def _model_jacobian(handle: MapHandle, region: HorseshoeRegion,
                    q: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(region.matrix)
    return inv @ handle.jac(region.to_world(q)) @ region.matrix


def _map_model(handle: MapHandle, region: HorseshoeRegion,
               q: np.ndarray) -> np.ndarray:
    return region.to_model(handle.eval_many(region.to_world(q)))


def verify_ah(handle: MapHandle, region: HorseshoeRegion,
              sampling: int = 48) -> AHReport:
    """Sampled check of the attracting-horseshoe conditions.

    Every condition reports pass/fail/inconclusive with a margin and a
    worst-case witness (world coordinates); nothing raises.  Foliation
    rates are sampled on band interiors (a first difference straddling
    a band boundary would measure the seam, not a leaf rate), and
    transversality is only enforced at samples whose image lands back
    in the core Z, where the horizontal foliation lives.
    """
    entries = []
    h_pts = region.sample("h", sampling, boundary=True)
    h_img = _map_model(handle, region, h_pts)

    # injectivity: identical images from separated preimages
    order = np.lexsort((h_img[:, 1], h_img[:, 0]))
    si, sp = h_img[order], h_pts[order]
    img_close = np.linalg.norm(np.diff(si, axis=0), axis=1) < 1e-7
    pre_far = np.linalg.norm(np.diff(sp, axis=0), axis=1) > 1e-4
    bad = img_close & pre_far
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        entries.append(AHEntry("injectivity", STATUS_FAIL, 0.0,
                               region.to_world(sp[i]),
                               {"collides_with": region.to_world(sp[i + 1])}))
    else:
        img_gap = np.linalg.norm(np.diff(si, axis=0), axis=1)
        sep = float(np.min(img_gap[pre_far])) if np.any(pre_far) else \
            float("inf")
        entries.append(AHEntry("injectivity", STATUS_PASS, sep, None))

    # f(H) inside the open region
    d = region.inside_h(h_img)
    i = int(np.argmin(d))
    entries.append(AHEntry(
        "region_into_interior",
        STATUS_PASS if d[i] > 0 else STATUS_FAIL,
        float(d[i]), region.to_world(h_pts[i])))

    # both caps into the open lower cap
    cap_pts = np.vstack([region.sample("c0", sampling),
                         region.sample("c1", sampling)])
    d = region.inside_c0(_map_model(handle, region, cap_pts))
    i = int(np.argmin(d))
    entries.append(AHEntry(
        "caps_into_sink_cap", STATUS_PASS if d[i] > 0 else STATUS_FAIL,
        float(d[i]), region.to_world(cap_pts[i])))

    # fold band into the open upper cap
    fold_pts = region.sample("s_half", sampling)
    d = region.inside_c1(_map_model(handle, region, fold_pts))
    i = int(np.argmin(d))
    entries.append(AHEntry(
        "fold_band_into_top_cap", STATUS_PASS if d[i] > 0 else STATUS_FAIL,
        float(d[i]), region.to_world(fold_pts[i])))

    # transversality of pushed vertical leaves, where images stay in Z
    z_pts = region.sample("z", sampling)
    z_img = _map_model(handle, region, z_pts)
    active = region.inside_z(z_img) >= 0.0
    if not np.any(active):
        entries.append(AHEntry("vertical_transversality",
                               STATUS_INCONCLUSIVE, 0.0, None,
                               {"note": "no sample maps back into Z"}))
    else:
        worst = np.inf
        wit = None
        for q in z_pts[active]:
            v = _model_jacobian(handle, region, q) @ np.array([0.0, 1.0])
            nv = np.linalg.norm(v)
            ang = 0.0 if nv == 0.0 else math.asin(
                min(1.0, abs(v[1]) / nv))
            if ang < worst:
                worst, wit = ang, q
        entries.append(AHEntry(
            "vertical_transversality",
            STATUS_PASS if worst > TRANSVERSALITY_MIN_ANGLE else STATUS_FAIL,
            float(worst - TRANSVERSALITY_MIN_ANGLE), region.to_world(wit),
            {"min_angle": float(worst)}))

    # lower cap contracts onto an interior sink; the Lipschitz bound is
    # sampled strictly inside the cap so a world-coordinate roundtrip
    # cannot flip a seam sample onto the neighbouring band's derivative
    c0_pts = region.sample("c0", sampling)
    c0_in = c0_pts[region.inside_c0(c0_pts) > 1e-9]
    lip = max(float(np.linalg.norm(_model_jacobian(handle, region, q), 2))
              for q in c0_in)
    sink_entry = None
    try:
        fp = find_cycle(handle, 1, region.to_world(_CAP0 + [0.0, -2.0]))
        q_model = region.to_model(fp.points)[0]
        sink_ok = (lip < 1.0 and fp.stability == "sink"
                   and float(region.inside_c0(q_model)[0]) > 0)
        orbit_pts = region.to_world(c0_pts)
        for _ in range(300):
            orbit_pts = handle.eval_many(orbit_pts)
        basin_err = float(np.max(np.linalg.norm(
            orbit_pts - fp.points[0], axis=1)))
        status = STATUS_PASS if sink_ok and basin_err < 1e-8 else STATUS_FAIL
        sink_entry = AHEntry(
            "sink_cap_contraction", status, float(1.0 - lip), fp.points[0],
            {"fixed_point": fp.points[0], "lipschitz": lip,
             "basin_residual": basin_err})
    except (CycleSearchError, DivergenceError) as exc:
        sink_entry = AHEntry("sink_cap_contraction", STATUS_FAIL,
                             float(1.0 - lip), None, {"error": str(exc)})
    entries.append(sink_entry)

    # saddle in the lower band with vertical unstable direction
    saddle_entry = None
    seeds = region.sample("s0", 7)
    for seed in region.to_world(seeds):
        try:
            cyc = find_cycle(handle, 1, seed)
        except (CycleSearchError, DivergenceError):
            continue
        if cyc.stability != "saddle":
            continue
        qm = region.to_model(cyc.points)[0]
        if float(region.inside_s0(qm)[0]) < -1e-9:
            continue
        info = classify_cycle(handle, cyc)
        if info.unstable_vectors is None or \
                info.unstable_vectors.shape[1] != 1:
            continue
        w = np.linalg.inv(region.matrix) @ info.unstable_vectors[:, 0]
        ang = math.asin(min(1.0, abs(w[0]) / np.linalg.norm(w)))
        status = STATUS_PASS if ang < TRANSVERSALITY_MIN_ANGLE else \
            STATUS_FAIL
        saddle_entry = AHEntry(
            "band_saddle", status, float(region.inside_s0(qm)[0]),
            cyc.points[0],
            {"saddle": cyc, "unstable_angle_from_vertical": float(ang)})
        if status == STATUS_PASS:
            break
    if saddle_entry is None:
        saddle_entry = AHEntry("band_saddle", STATUS_FAIL, 0.0, None,
                               {"note": "no saddle found in lower band"})
    entries.append(saddle_entry)

    # contraction along horizontal leaves, expansion along vertical ones
    eps = FOLIATION_STEP
    z_in = z_pts[(region.inside_z(z_pts) > 2 * eps)]
    dh = _map_model(handle, region, z_in + [eps, 0.0]) - \
        _map_model(handle, region, z_in)
    lam_contr = float(np.max(np.linalg.norm(dh, axis=1))) / eps
    band_pts = np.vstack([region.sample("s0", sampling),
                          region.sample("s1", sampling)])
    keep = (region.inside_s0(band_pts) > 2 * eps) | \
        (region.inside_s1(band_pts) > 2 * eps)
    band_in = band_pts[keep]
    dv = _map_model(handle, region, band_in + [0.0, eps]) - \
        _map_model(handle, region, band_in)
    mu_exp = float(np.min(np.linalg.norm(dv, axis=1))) / eps
    ok = 0.0 < lam_contr < 1.0 < mu_exp
    entries.append(AHEntry(
        "foliation_rates", STATUS_PASS if ok else STATUS_FAIL,
        float(min(1.0 - lam_contr, mu_exp - 1.0)), None,
        {"lambda_contr": lam_contr, "mu_exp": mu_exp}))

    return AHReport(entries=entries)


def find_saddles(handle: MapHandle, search_box, k_max: int = 1,
                 n_seeds: int = 12) -> list:
    """Multi-start Newton cycle search over a box; deduplicated cycles.

    Returns every cycle found (any stability class) whose orbit touches
    the box, sorted by period then position.  Eigen-directions come
    from dynamics.classify_cycle on the returned cycles.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    box = np.asarray(search_box, dtype=float).reshape(-1, 2)
    axes = [np.linspace(lo, hi, n_seeds) for lo, hi in box]
    grids = np.meshgrid(*axes, indexing="ij")
    seeds = np.column_stack([g.ravel() for g in grids])
    found = {}
    for k in range(1, k_max + 1):
        for seed in seeds:
            try:
                cyc = find_cycle(handle, k, seed)
            except (CycleSearchError, DivergenceError):
                continue
            pts = cyc.points
            touches = np.any(np.all((pts >= box[:, 0] - 1e-9) &
                                    (pts <= box[:, 1] + 1e-9), axis=1))
            if not touches:
                continue
            anchor = pts[np.lexsort(pts.T[::-1])][0]
            key = (cyc.period, tuple(np.round(anchor, 6)))
            found.setdefault(key, cyc)
    return [found[k] for k in sorted(found)]


def _power_eval(handle: MapHandle, pts: np.ndarray, k: int) -> np.ndarray:
    for _ in range(k):
        pts = handle.eval_many(pts)
    return pts


def _refine_segment(handle: MapHandle, k: int, pre: np.ndarray,
                    img: np.ndarray, tol: float, cap: int):
    """Insert preimage midpoints until image gaps are below tol."""
    for _ in range(60):
        gaps = np.linalg.norm(np.diff(img, axis=0), axis=1)
        big = np.flatnonzero(gaps > tol)
        if big.size == 0:
            return pre, img
        if len(pre) + big.size > cap:
            raise _CapReached(pre, img)
        mid_pre = 0.5 * (pre[big] + pre[big + 1])
        mid_img = _power_eval(handle, mid_pre, k)
        if not np.all(np.isfinite(mid_img)):
            raise DivergenceError("manifold refinement diverged")
        insert_at = big + 1
        pre = np.insert(pre, insert_at, mid_pre, axis=0)
        img = np.insert(img, insert_at, mid_img, axis=0)
    raise _CapReached(pre, img)


class _CapReached(Exception):
    def __init__(self, pre, img):
        self.pre = pre
        self.img = img


def unstable_manifold(handle: MapHandle, saddle: Cycle,
                      arc_budget: float = 10.0,
                      tol: float = 1e-3) -> PointCloud:
    """Trace the 1-D unstable manifold of a saddle as an ordered polyline.

    A fundamental segment of length 1e-6 along the unstable eigenvector
    is iterated under f^k (k the saddle period), inserting preimage
    midpoints wherever consecutive image points separate by more than
    tol, until each branch has accumulated arc_budget/2 of arclength.
    More than 10^7 points raises RefinementExplosion carrying the
    partial cloud.
    """
    mults = np.asarray(saddle.multipliers)
    unstable_idx = np.flatnonzero(np.abs(mults) > 1.0)
    if unstable_idx.size != 1:
        raise ValueError("saddle must have exactly one unstable multiplier")
    k = saddle.period
    p = saddle.points[0]
    _, jac_prod = _iterate_with_product(handle, p, k)
    vals, vecs = np.linalg.eig(jac_prod)
    iu = int(np.argmax(np.abs(vals)))
    mu = vals[iu]
    if abs(mu.imag) > 1e-9:
        raise ValueError("unstable multiplier must be real")
    mu = float(mu.real)
    v = np.real(vecs[:, iu])
    v = v / np.linalg.norm(v)

    a = 1e-6 / (abs(mu) - 1.0)
    seg = np.linspace(a, a * abs(mu), 33)
    branches = []
    total = 0
    for sign in (1.0, -1.0):
        pre = p + sign * seg[:, None] * v
        chunks = [pre.copy()]
        arc = 0.0
        try:
            while arc < arc_budget / 2.0:
                if total + len(pre) > POINT_CAP:
                    raise _CapReached(pre, pre[:0])
                img = _power_eval(handle, pre, k)
                if not np.all(np.isfinite(img)):
                    raise DivergenceError("unstable manifold diverged")
                pre_r, img = _refine_segment(handle, k, pre, img, tol,
                                             POINT_CAP - total)
                arc += float(np.sum(np.linalg.norm(np.diff(img, axis=0),
                                                   axis=1)))
                # img[0] duplicates the previous chunk's endpoint (both are
                # f^k of the fundamental segment's matched ends); drop it
                chunks.append(img[1:])
                total += len(img) - 1
                pre = img
        except _CapReached as cap:
            chunks.append(cap.img)
            pieces = branches + [np.vstack(chunks)]
            partial = PointCloud(np.vstack(pieces), ordered=True,
                                 meta={"saddle": p})
            raise RefinementExplosion(
                "manifold refinement exceeded the point budget", partial)
        branches.append(np.vstack(chunks))
    minus = branches[1][::-1]
    plus = branches[0]
    pts = np.vstack([minus, p[None, :], plus])
    return PointCloud(pts, ordered=True,
                      meta={"saddle": p, "multiplier": mu, "period": k,
                            "branch_sizes": (len(minus), len(plus)),
                            "tol": tol, "arc_budget": arc_budget})


def trellis(handle: MapHandle, saddle_cycle: Cycle,
            arc_budget: float = 10.0, tol: float = 1e-3) -> PointCloud:
    """Unstable manifold of f^k at one cycle point plus its k-1 images.

    Component i is the forward image of component i-1 under f, refined
    to the same tolerance; meta["component_slices"] delimits them.
    """
    k = saddle_cycle.period
    base = unstable_manifold(handle, saddle_cycle, arc_budget, tol)
    comps = [base.points]
    cur = base.points
    for _ in range(k - 1):
        img = handle.eval_many(cur)
        if not np.all(np.isfinite(img)):
            raise DivergenceError("trellis image diverged")
        try:
            cur, img = _refine_segment(handle, 1, cur, img, tol,
                                       POINT_CAP - sum(map(len, comps)))
        except _CapReached as cap:
            partial = PointCloud(np.vstack(comps + [cap.img]), ordered=True,
                                 meta={"saddle": base.meta["saddle"]})
            raise RefinementExplosion(
                "trellis refinement exceeded the point budget", partial)
        comps.append(img)
        cur = img
    slices = []
    start = 0
    for c in comps:
        slices.append((start, start + len(c)))
        start += len(c)
    pts = np.vstack(comps)
    meta = dict(base.meta)
    meta["component_slices"] = slices
    return PointCloud(pts, ordered=True, meta=meta)


# model fixture


def model_horseshoe_map(region: Optional[HorseshoeRegion] = None,
                        contraction: float = 0.2,
                        expansion: float = 4.0) -> MapHandle:
    """Piecewise map realizing the horseshoe geometry on the capsule.

    Both bands are affine (horizontal rate = contraction, vertical
    rate = expansion); the fold band maps onto nested ellipse arcs in
    the open upper cap, so the whole map is injective on H*; both caps
    land strictly inside the lower cap, which contracts onto the sink
    q = (0, -79/19).  The saddle at the origin has multipliers exactly
    (contraction, expansion).  A non-identity region conjugates the
    model by its affine frame.
    """
    lam, mu = float(contraction), float(expansion)
    if not 0.0 < lam < 1.0 < mu:
        raise ValueError("need 0 < contraction < 1 < expansion")
    frame = region if region is not None else HorseshoeRegion()

    bot, s0_top, fold_top, top = _BANDS

    def batch(pts):
        q = frame.to_model(np.atleast_2d(pts))
        x1, x2 = q[:, 0], q[:, 1]
        t = np.clip((x2 - s0_top) / (fold_top - s0_top), 0.0, 1.0)
        r_ell = lam * x1 + 1.6
        h_ell = 0.2 + 0.025 * (x1 + 6.0)
        out = np.empty_like(q)
        m_c0 = x2 <= bot
        m_s0 = (~m_c0) & (x2 < s0_top)
        m_f = (~m_c0) & (~m_s0) & (x2 <= fold_top)
        m_s1 = (~m_c0) & (~m_s0) & (~m_f) & (x2 < top)
        m_c1 = x2 >= top
        out[m_c0, 0] = lam * x1[m_c0]
        out[m_c0, 1] = -4.0 + 0.05 * (x2[m_c0] - bot)
        out[m_s0, 0] = lam * x1[m_s0]
        out[m_s0, 1] = mu * x2[m_s0]
        out[m_f, 0] = -1.6 + r_ell[m_f] * np.cos(np.pi * t[m_f])
        out[m_f, 1] = 12.0 + h_ell[m_f] * np.sin(np.pi * t[m_f])
        out[m_s1, 0] = -lam * x1[m_s1] - 3.2
        out[m_s1, 1] = -mu * x2[m_s1] + 32.0
        out[m_c1, 0] = -lam * x1[m_c1] - 3.2
        out[m_c1, 1] = -4.0 - 0.05 * (x2[m_c1] - top)
        return frame.to_world(out)

    def fn(x):
        return batch(np.asarray(x, dtype=float)[None, :])[0]

    def jac(x):
        q = frame.to_model(np.asarray(x, dtype=float)[None, :])[0]
        x1, x2 = q
        if x2 <= bot:
            j = np.array([[lam, 0.0], [0.0, 0.05]])
        elif x2 < s0_top:
            j = np.array([[lam, 0.0], [0.0, mu]])
        elif x2 <= fold_top:
            t = (x2 - s0_top) / (fold_top - s0_top)
            dt = 1.0 / (fold_top - s0_top)
            r_ell = lam * x1 + 1.6
            h_ell = 0.2 + 0.025 * (x1 + 6.0)
            c, s = np.cos(np.pi * t), np.sin(np.pi * t)
            j = np.array([
                [lam * c, -r_ell * np.pi * s * dt],
                [0.025 * s, h_ell * np.pi * c * dt]])
        elif x2 < top:
            j = np.array([[-lam, 0.0], [0.0, -mu]])
        else:
            j = np.array([[-lam, 0.0], [0.0, -0.05]])
        return frame.matrix @ j @ np.linalg.inv(frame.matrix)

    return user_map(fn, 2, jac=jac, batch=batch,
                    params={"contraction": lam, "expansion": mu})


def model_strip_branches(contraction: float = 0.2):
    """Horizontal actions of the model's two expansion bands."""
    lam = float(contraction)
    return (lambda x: lam * np.asarray(x, dtype=float),
            lambda x: -lam * np.asarray(x, dtype=float) - 3.2)


def leaf_strip_intervals(depth: int, contraction: float = 0.2) -> np.ndarray:
    """x1 footprints of the 2^depth vertical strips of the iterated model.

    Every binary word is admissible because each band's image spans the
    full height of the core, so the intervals are the images of the
    core's x1 span under all depth-fold branch compositions.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    branches = model_strip_branches(contraction)
    intervals = np.array([[-6.0, 2.0]])
    for _ in range(depth):
        images = []
        for br in branches:
            img = br(intervals)
            images.append(np.sort(img, axis=1))
        intervals = np.vstack(images)
    return intervals[np.argsort(intervals[:, 0])]


def count_components(member: np.ndarray) -> int:
    """Number of runs of consecutive True entries."""
    member = np.asarray(member, dtype=bool)
    if member.size == 0:
        return 0
    starts = member & ~np.concatenate([[False], member[:-1]])
    return int(np.sum(starts))


def leaf_component_count(depth: int, x2_level: float = 1.0,
                         n_samples: int = 1 << 21,
                         contraction: float = 0.2) -> int:
    """Components of the model's depth-n region cut by a horizontal leaf.

    Samples the leaf densely across the core and counts runs of samples
    inside the iterated strip footprint.  Valid for leaf levels strictly
    inside the core's vertical extent.
    """
    if not _BANDS[0] < x2_level < _BANDS[3]:
        raise ValueError("leaf level must lie inside the core")
    intervals = leaf_strip_intervals(depth, contraction)
    xs = np.linspace(-6.0, 2.0, n_samples)
    edges = intervals.ravel()
    if np.any(np.diff(edges) < 0):
        raise RuntimeError("strip intervals overlap; cannot count")
    idx = np.searchsorted(edges, xs)
    member = (idx % 2) == 1
    return count_components(member)
