"""Hot iteration kernels: numba-compiled with a pure-Python/NumPy fallback.

Two lanes live side by side.  The numba lane compiles the scalar step and
Jacobian dispatch for the built-in planar families into tight loops.  The
fallback lane runs ordinary Python loops over callables and therefore also
serves arbitrary user-supplied maps, which cannot be jitted.

Lane selection:

* ``ATTRACTORLAB_NO_NUMBA=1`` (or ``true``/``yes``) forces the fallback.
* If numba is not importable the fallback is used automatically.
* The dispatch helpers accept ``force_python=True`` so both lanes can be
  timed in one process (see ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


_DISABLED = os.environ.get("ATTRACTORLAB_NO_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
)
USE_NUMBA = HAVE_NUMBA and not _DISABLED

# family codes used by the jitted dispatch
FAM_GAUSS_LITERAL = 0
FAM_GAUSS = 1
FAM_PIONEER_FULL = 2
FAM_PIONEER_MIXED = 3


def _step(fam, pa, pb, pc, x1, x2):
    # pa/pb/pc packing: gauss -> (a, cos(2*pi*theta), sin(2*pi*theta)),
    # pioneer -> (a, b, unused)
    if fam == FAM_GAUSS:
        w = pa * math.exp(-(x1 * x1 + x2 * x2))
        return w * (x1 * pb - x2 * pc), w * (x1 * pc + x2 * pb)
    if fam == FAM_GAUSS_LITERAL:
        # degenerate variant: both components share the first formula
        w = pa * math.exp(-(x1 * x1 + x2 * x2))
        t = x1 * pb - x2 * pc
        return w * t, w * t
    if fam == FAM_PIONEER_FULL:
        y1 = x1 * math.exp(pa - 0.8 * x1 - 0.2 * x2)
        y2 = x2 * (0.2 * x1 + 0.8 * x2) * math.exp(pb - 0.2 * x1 - 0.8 * x2)
        return y1, y2
    # FAM_PIONEER_MIXED
    y1 = x1 * math.exp(pa - 0.8 * x1)
    y2 = x2 * (0.2 * x1 + 0.8 * x2) * math.exp(pb - 0.2 * x1 - 0.8 * x2)
    return y1, y2


def _jac(fam, pa, pb, pc, x1, x2):
    """Analytic Jacobian entries (j11, j12, j21, j22) for a built-in family."""
    if fam == FAM_GAUSS:
        w = pa * math.exp(-(x1 * x1 + x2 * x2))
        u1 = x1 * pb - x2 * pc
        u2 = x1 * pc + x2 * pb
        return (
            w * (pb - 2.0 * u1 * x1),
            w * (-pc - 2.0 * u1 * x2),
            w * (pc - 2.0 * u2 * x1),
            w * (pb - 2.0 * u2 * x2),
        )
    if fam == FAM_GAUSS_LITERAL:
        w = pa * math.exp(-(x1 * x1 + x2 * x2))
        t = x1 * pb - x2 * pc
        j11 = w * (pb - 2.0 * t * x1)
        j12 = w * (-pc - 2.0 * t * x2)
        return j11, j12, j11, j12
    if fam == FAM_PIONEER_FULL:
        e1 = math.exp(pa - 0.8 * x1 - 0.2 * x2)
        j11 = e1 * (1.0 - 0.8 * x1)
        j12 = -0.2 * x1 * e1
        p = 0.2 * x1 + 0.8 * x2
        e2 = math.exp(pb - 0.2 * x1 - 0.8 * x2)
        j21 = 0.2 * x2 * e2 * (1.0 - p)
        j22 = e2 * (p + 0.8 * x2 * (1.0 - p))
        return j11, j12, j21, j22
    # FAM_PIONEER_MIXED
    e1 = math.exp(pa - 0.8 * x1)
    j11 = e1 * (1.0 - 0.8 * x1)
    p = 0.2 * x1 + 0.8 * x2
    e2 = math.exp(pb - 0.2 * x1 - 0.8 * x2)
    j21 = 0.2 * x2 * e2 * (1.0 - p)
    j22 = e2 * (p + 0.8 * x2 * (1.0 - p))
    return j11, 0.0, j21, j22


def _spec_norm(j11, j12, j21, j22):
    # largest singular value of a 2x2 matrix, closed form
    q = j11 * j11 + j12 * j12 + j21 * j21 + j22 * j22
    d = j11 * j22 - j12 * j21
    disc = q * q - 4.0 * d * d
    if disc < 0.0:
        disc = 0.0
    return math.sqrt(0.5 * (q + math.sqrt(disc)))


def _orbit_loop(fam, pa, pb, pc, x1, x2, n_transient, n_keep, out):
    for _ in range(n_transient):
        x1, x2 = _step(fam, pa, pb, pc, x1, x2)
    for i in range(n_keep):
        x1, x2 = _step(fam, pa, pb, pc, x1, x2)
        out[i, 0] = x1
        out[i, 1] = x2
    return out


def _norm_sum_loop(fam, pa, pb, pc, x1, x2, n_transient, n, stride, trace):
    for _ in range(n_transient):
        x1, x2 = _step(fam, pa, pb, pc, x1, x2)
    total = 0.0
    degenerate = False
    k_used = 0
    for k in range(n):
        j11, j12, j21, j22 = _jac(fam, pa, pb, pc, x1, x2)
        nrm = _spec_norm(j11, j12, j21, j22)
        if nrm <= 0.0:
            degenerate = True
            break
        total += math.log(nrm)
        k_used = k + 1
        if k_used % stride == 0:
            trace[k_used // stride - 1] = total / k_used
        x1, x2 = _step(fam, pa, pb, pc, x1, x2)
    value = total / k_used if k_used > 0 else 0.0
    return value, k_used, degenerate


def _qr_loop(fam, pa, pb, pc, x1, x2, n_transient, n, stride, trace):
    for _ in range(n_transient):
        x1, x2 = _step(fam, pa, pb, pc, x1, x2)
    # orthonormal frame carried along the orbit, re-orthonormalized each step
    q11, q21 = 1.0, 0.0
    q12, q22 = 0.0, 1.0
    s1 = 0.0
    s2 = 0.0
    deg1 = False
    deg2 = False
    k_used = 0
    for k in range(n):
        j11, j12, j21, j22 = _jac(fam, pa, pb, pc, x1, x2)
        v11 = j11 * q11 + j12 * q21
        v21 = j21 * q11 + j22 * q21
        v12 = j11 * q12 + j12 * q22
        v22 = j21 * q12 + j22 * q22
        r11 = math.sqrt(v11 * v11 + v21 * v21)
        if r11 == 0.0:
            deg1 = True
            deg2 = True
            break
        q11 = v11 / r11
        q21 = v21 / r11
        r12 = q11 * v12 + q21 * v22
        w1 = v12 - r12 * q11
        w2 = v22 - r12 * q21
        r22 = math.sqrt(w1 * w1 + w2 * w2)
        if r22 == 0.0:
            deg2 = True
            break
        q12 = w1 / r22
        q22 = w2 / r22
        s1 += math.log(r11)
        s2 += math.log(r22)
        k_used = k + 1
        if k_used % stride == 0:
            trace[k_used // stride - 1, 0] = s1 / k_used
            trace[k_used // stride - 1, 1] = s2 / k_used
        x1, x2 = _step(fam, pa, pb, pc, x1, x2)
    e1 = s1 / k_used if k_used > 0 else 0.0
    e2 = s2 / k_used if k_used > 0 else 0.0
    return e1, e2, k_used, deg1, deg2


if HAVE_NUMBA:
    _step_nb = njit(cache=True)(_step)
    _jac_nb = njit(cache=True)(_jac)
    _spec_norm_nb = njit(cache=True)(_spec_norm)

    @njit(cache=True)
    def _orbit_nb(fam, pa, pb, pc, x1, x2, n_transient, n_keep, out):
        for _ in range(n_transient):
            x1, x2 = _step_nb(fam, pa, pb, pc, x1, x2)
        for i in range(n_keep):
            x1, x2 = _step_nb(fam, pa, pb, pc, x1, x2)
            out[i, 0] = x1
            out[i, 1] = x2
        return out

    @njit(cache=True)
    def _norm_sum_nb(fam, pa, pb, pc, x1, x2, n_transient, n, stride, trace):
        for _ in range(n_transient):
            x1, x2 = _step_nb(fam, pa, pb, pc, x1, x2)
        total = 0.0
        degenerate = False
        k_used = 0
        for k in range(n):
            j11, j12, j21, j22 = _jac_nb(fam, pa, pb, pc, x1, x2)
            nrm = _spec_norm_nb(j11, j12, j21, j22)
            if nrm <= 0.0:
                degenerate = True
                break
            total += math.log(nrm)
            k_used = k + 1
            if k_used % stride == 0:
                trace[k_used // stride - 1] = total / k_used
            x1, x2 = _step_nb(fam, pa, pb, pc, x1, x2)
        value = total / k_used if k_used > 0 else 0.0
        return value, k_used, degenerate

    @njit(cache=True)
    def _qr_nb(fam, pa, pb, pc, x1, x2, n_transient, n, stride, trace):
        for _ in range(n_transient):
            x1, x2 = _step_nb(fam, pa, pb, pc, x1, x2)
        q11, q21 = 1.0, 0.0
        q12, q22 = 0.0, 1.0
        s1 = 0.0
        s2 = 0.0
        deg1 = False
        deg2 = False
        k_used = 0
        for k in range(n):
            j11, j12, j21, j22 = _jac_nb(fam, pa, pb, pc, x1, x2)
            v11 = j11 * q11 + j12 * q21
            v21 = j21 * q11 + j22 * q21
            v12 = j11 * q12 + j12 * q22
            v22 = j21 * q12 + j22 * q22
            r11 = math.sqrt(v11 * v11 + v21 * v21)
            if r11 == 0.0:
                deg1 = True
                deg2 = True
                break
            q11 = v11 / r11
            q21 = v21 / r11
            r12 = q11 * v12 + q21 * v22
            w1 = v12 - r12 * q11
            w2 = v22 - r12 * q21
            r22 = math.sqrt(w1 * w1 + w2 * w2)
            if r22 == 0.0:
                deg2 = True
                break
            q12 = w1 / r22
            q22 = w2 / r22
            s1 += math.log(r11)
            s2 += math.log(r22)
            k_used = k + 1
            if k_used % stride == 0:
                trace[k_used // stride - 1, 0] = s1 / k_used
                trace[k_used // stride - 1, 1] = s2 / k_used
            x1, x2 = _step_nb(fam, pa, pb, pc, x1, x2)
        e1 = s1 / k_used if k_used > 0 else 0.0
        e2 = s2 / k_used if k_used > 0 else 0.0
        return e1, e2, k_used, deg1, deg2


def warmup():
    """Trigger JIT compilation of the numba lane (no-op on the fallback)."""
    if not HAVE_NUMBA:
        return
    out = np.empty((1, 2))
    _orbit_nb(FAM_GAUSS, 1.0, 1.0, 0.0, 0.1, 0.1, 1, 1, out)
    tr = np.empty(1)
    _norm_sum_nb(FAM_GAUSS, 1.0, 1.0, 0.0, 0.1, 0.1, 1, 1, 1, tr)
    tr2 = np.empty((1, 2))
    _qr_nb(FAM_GAUSS, 1.0, 1.0, 0.0, 0.1, 0.1, 1, 1, 1, tr2)


# ---------------------------------------------------------------------------
# generic callable-based loops (fallback lane, and the only lane for user maps)


def _orbit_generic(step_fn, x0, n_transient, n_keep):
    x = np.array(x0, dtype=float)
    # overflow en route to a caught divergence is expected; the compiled
    # lane never warns, so keep the lanes observably identical
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_transient):
            x = step_fn(x)
        out = np.empty((n_keep, x.size))
        for i in range(n_keep):
            x = step_fn(x)
            out[i] = x
    return out


def _norm_sum_generic(step_fn, jac_fn, x0, n_transient, n, stride, trace):
    x = np.array(x0, dtype=float)
    for _ in range(n_transient):
        x = step_fn(x)
    total = 0.0
    degenerate = False
    k_used = 0
    for k in range(n):
        nrm = np.linalg.norm(jac_fn(x), 2)
        if nrm <= 0.0:
            degenerate = True
            break
        total += math.log(nrm)
        k_used = k + 1
        if k_used % stride == 0:
            trace[k_used // stride - 1] = total / k_used
        x = step_fn(x)
    value = total / k_used if k_used > 0 else 0.0
    return value, k_used, degenerate


def _qr_generic(step_fn, jac_fn, x0, n_transient, n, stride, trace):
    x = np.array(x0, dtype=float)
    m = x.size
    for _ in range(n_transient):
        x = step_fn(x)
    q = np.eye(m)
    sums = np.zeros(m)
    degenerate = np.zeros(m, dtype=bool)
    k_used = 0
    for k in range(n):
        z = jac_fn(x) @ q
        q, r = np.linalg.qr(z)
        diag = np.abs(np.diag(r))
        if np.any(diag == 0.0):
            degenerate |= diag == 0.0
            break
        sums += np.log(diag)
        k_used = k + 1
        if k_used % stride == 0:
            trace[k_used // stride - 1] = sums / k_used
        x = step_fn(x)
    vals = sums / k_used if k_used > 0 else np.zeros(m)
    return vals, k_used, degenerate


# ---------------------------------------------------------------------------
# dispatch helpers; a handle is anything exposing family_code/packed/eval/jac


def _lane(handle, force_python):
    return (
        not force_python
        and USE_NUMBA
        and getattr(handle, "family_code", -1) >= 0
        and handle.spec.dim == 2
    )


def run_orbit(handle, x0, n_transient, n_keep, force_python=False):
    if _lane(handle, force_python):
        pa, pb, pc = handle.packed
        out = np.empty((n_keep, 2))
        return _orbit_nb(
            handle.family_code, pa, pb, pc,
            float(x0[0]), float(x0[1]), n_transient, n_keep, out,
        )
    return _orbit_generic(handle.eval, x0, n_transient, n_keep)


def run_norm_sum(handle, x0, n_transient, n, stride, force_python=False):
    trace = np.full(max(n // stride, 1), np.nan)
    if _lane(handle, force_python):
        pa, pb, pc = handle.packed
        value, k_used, degenerate = _norm_sum_nb(
            handle.family_code, pa, pb, pc,
            float(x0[0]), float(x0[1]), n_transient, n, stride, trace,
        )
    else:
        value, k_used, degenerate = _norm_sum_generic(
            handle.eval, handle.jac, x0, n_transient, n, stride, trace
        )
    return value, k_used, degenerate, trace[: max(k_used // stride, 0)]


def run_qr(handle, x0, n_transient, n, stride, force_python=False):
    m = handle.spec.dim
    trace = np.full((max(n // stride, 1), m), np.nan)
    if _lane(handle, force_python):
        pa, pb, pc = handle.packed
        e1, e2, k_used, d1, d2 = _qr_nb(
            handle.family_code, pa, pb, pc,
            float(x0[0]), float(x0[1]), n_transient, n, stride, trace,
        )
        vals = np.array([e1, e2])
        degenerate = np.array([d1, d2])
    else:
        vals, k_used, degenerate = _qr_generic(
            handle.eval, handle.jac, x0, n_transient, n, stride, trace
        )
    return vals, k_used, degenerate, trace[: max(k_used // stride, 0)]
