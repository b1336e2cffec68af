"""Locating and classifying band-touching points (BTPs).

For t != 0 every band touching is isolated and sits on one of the lines
kx = +-pi/2 or ky = +-pi/2: solving Bx = +-gamma, By = +-i Bx gives
|k_c| = arccos((-T + s*gamma)/(2J)) per branch s, with points at
(+-k_c, +-pi/2) and (+-pi/2, +-k_c).  Each valid branch contributes eight
points generically and four when k_c hits {0, pi/2, pi} (pair mergers).
At t = 0 with gamma != 0 the touchings form rings cos kx + cos ky = c_s
instead, except at |gamma| = |T -+ 4J| where a ring degenerates to the
single point (pi, pi) or (0, 0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .bloch import (
    ModelParams,
    Momentum,
    bloch_field_grid,
    principal_sqrt,
    torus_distance,
    wrap_angle,
)

__all__ = [
    "DIRAC_POINT",
    "SEMI_DIRAC_POINT",
    "NORMAL_EP",
    "HYBRID_EP",
    "TRIVIAL_ISOLATED_EP",
    "Btp",
    "EpRing",
    "RingRegimeError",
    "branch_level",
    "locate_btps",
    "refine_btps_numeric",
    "classify_btp",
    "trace_ep_ring",
    "min_gap",
]

DIRAC_POINT = "DiracPoint"
SEMI_DIRAC_POINT = "SemiDiracPoint"
NORMAL_EP = "NormalEP"
HYBRID_EP = "HybridEP"
TRIVIAL_ISOLATED_EP = "TrivialIsolatedEP"

MERGER_TOL = 1e-9
_T_ZERO = 1e-12
_HALF_PI = 0.5 * math.pi


class RingRegimeError(ValueError):
    """Raised when isolated-point search is asked about a ring configuration."""


@dataclass(frozen=True)
class Btp:
    """One band-touching point.

    branch is +1 or -1 for the two gamma branches and 0 when they coincide
    (gamma = 0).  Winding numbers are attached later by the phase pipeline.
    """

    k: Momentum
    branch: int
    kind: str
    w_i: float | None = None
    w_ii: float | None = None

    def to_json_dict(self):
        return {
            "kx": self.k.kx,
            "ky": self.k.ky,
            "branch": self.branch,
            "kind": self.kind,
            "wI": self.w_i,
            "wII": self.w_ii,
        }


def branch_level(params: ModelParams, s: int) -> float:
    """The level c_s = (-T + s*gamma) / (2J) of branch s."""
    return (-params.T + s * params.gamma) / (2.0 * params.J)


def _abs_e(params: ModelParams, kx, ky):
    bx, by = bloch_field_grid(params, kx, ky)
    return np.abs(principal_sqrt(bx * bx + by * by))


def _merged_locations(c: float):
    """Point set for a branch whose k_c sits exactly on a merger value."""
    if abs(c - 1.0) <= MERGER_TOL:
        return [(0.0, _HALF_PI), (0.0, -_HALF_PI), (_HALF_PI, 0.0), (-_HALF_PI, 0.0)]
    if abs(c) <= MERGER_TOL:
        return [
            (_HALF_PI, _HALF_PI),
            (_HALF_PI, -_HALF_PI),
            (-_HALF_PI, _HALF_PI),
            (-_HALF_PI, -_HALF_PI),
        ]
    if abs(c + 1.0) <= MERGER_TOL:
        return [(math.pi, _HALF_PI), (math.pi, -_HALF_PI), (_HALF_PI, math.pi), (-_HALF_PI, math.pi)]
    return None


def _generic_locations(c: float):
    kc = math.acos(c)
    pts = []
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            pts.append((sx * kc, sy * _HALF_PI))
            pts.append((sx * _HALF_PI, sy * kc))
    return pts


def _sorted_btps(btps):
    return sorted(btps, key=lambda b: (round(b.k.kx, 12), round(b.k.ky, 12), b.branch))


def locate_btps(params: ModelParams) -> list[Btp]:
    """All isolated band-touching points, closed form.

    Requires t != 0 whenever the touchings would otherwise lie on rings;
    the t = 0 exceptions |gamma| = |T -+ 4J| return the single trivial EP at
    (pi, pi) or (0, 0).  A gapped system returns an empty list.
    """
    gamma, t = params.gamma, params.t
    if abs(t) < _T_ZERO:
        if abs(gamma) < _T_ZERO:
            raise ValueError(
                "t = gamma = 0 degenerates the band touchings to nodal lines; "
                "no isolated-point description exists there"
            )
        pts = []
        ring_branches = []
        for s in (1, -1):
            c = branch_level(params, s)
            if abs(c + 2.0) <= MERGER_TOL:
                pts.append(Btp(Momentum(math.pi, math.pi), s, TRIVIAL_ISOLATED_EP))
            elif abs(c - 2.0) <= MERGER_TOL:
                pts.append(Btp(Momentum(0.0, 0.0), s, TRIVIAL_ISOLATED_EP))
            elif abs(c) < 2.0:
                ring_branches.append(s)
        if pts:
            return _sorted_btps(pts)
        if ring_branches:
            raise RingRegimeError(
                "t = 0 with gamma != 0 puts the band touchings on rings "
                f"(branches {ring_branches}); use trace_ep_ring"
            )
        return []  # gapped

    btps = []
    if abs(gamma) < _T_ZERO:
        c = branch_level(params, 1)
        if abs(c) > 1.0 + MERGER_TOL:
            return []
        c = min(1.0, max(-1.0, c))
        merged = _merged_locations(c)
        if merged is not None:
            locs, kind = merged, SEMI_DIRAC_POINT
        else:
            locs, kind = _generic_locations(c), DIRAC_POINT
        btps = [Btp(Momentum(x, y), 0, kind) for x, y in locs]
    else:
        for s in (1, -1):
            c = branch_level(params, s)
            if abs(c) > 1.0 + MERGER_TOL:
                continue
            c = min(1.0, max(-1.0, c))
            merged = _merged_locations(c)
            if merged is not None:
                locs, kind = merged, HYBRID_EP
            else:
                locs, kind = _generic_locations(c), NORMAL_EP
            btps.extend(Btp(Momentum(x, y), s, kind) for x, y in locs)
    return _dedup_btps(_sorted_btps(btps))


def _dedup_btps(btps, tol: float = 1e-4):
    kept: list[Btp] = []
    for b in btps:
        if all(torus_distance(b.k, o.k) > tol for o in kept):
            kept.append(b)
    return kept


def _kind_from_level(params: ModelParams, c: float, level_tol: float) -> str:
    merged = min(abs(c), abs(c - 1.0), abs(c + 1.0)) < level_tol
    if abs(params.gamma) < _T_ZERO:
        return SEMI_DIRAC_POINT if merged else DIRAC_POINT
    if abs(params.t) < _T_ZERO:
        return TRIVIAL_ISOLATED_EP
    return HYBRID_EP if merged else NORMAL_EP


def refine_btps_numeric(params: ModelParams, coarse_n: int = 64, tol: float = 1e-12) -> list[Btp]:
    """Independent numeric search: coarse grid minima of |E^2| plus Newton.

    Newton runs on k -> (Re E^2, Im E^2) with the analytic Jacobian (falling
    back to Bx = By = 0 when gamma = 0 makes Im E^2 vanish identically);
    minima whose seeds fail to converge in 50 steps are dropped with a
    warning.  Converged points are deduplicated on the torus (1e-4) and
    tagged with the branch and kind inferred from cos kx + cos ky.  An empty
    result simply means a gapped spectrum.
    """
    if coarse_n < 32:
        raise ValueError("coarse_n must be at least 32")
    j, t = params.J, params.t
    real_field = abs(params.gamma) < _T_ZERO
    k = wrap_angle(2.0 * np.pi * np.arange(coarse_n) / coarse_n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    bx, by = bloch_field_grid(params, kx, ky)
    a = np.abs(bx * bx + by * by)
    local_min = np.ones_like(a, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            local_min &= a <= np.roll(np.roll(a, dx, axis=0), dy, axis=1)
    # Two touchings closer than ~2 cells can shadow each other's grid minimum,
    # so every cell within 2 of a minimum seeds Newton as well.  Only the
    # minima themselves count as dropped when they fail to converge.
    basin = local_min.copy()
    for dx in range(-2, 3):
        for dy in range(-2, 3):
            basin |= np.roll(np.roll(local_min, dx, axis=0), dy, axis=1)
    seeds = np.column_stack([kx[basin], ky[basin], local_min[basin]])

    converged = []
    dropped = 0
    for x0, y0, primary in seeds:
        x, y = float(x0), float(y0)
        best = None
        for _ in range(50):
            cx, cy, sx, sy = math.cos(x), math.cos(y), math.sin(x), math.sin(y)
            bx1 = 2.0 * j * (cx + cy) + params.T
            r = 4.0 * t * cx * cy
            by1 = r + 1j * params.gamma
            w = bx1 * bx1 + by1 * by1
            if abs(w) <= tol:
                # Keep polishing: at a degenerate touching |E^2| <= tol is met
                # on a whole sliver, and only the fixed point of the iteration
                # is the actual root.
                best = (x, y)
            if real_field:
                # Im E^2 vanishes identically here, so the (Re, Im) system is
                # singular; E^2 = 0 is then equivalent to Bx = By = 0.
                jac = np.array(
                    [
                        [-2.0 * j * sx, -2.0 * j * sy],
                        [-4.0 * t * sx * cy, -4.0 * t * cx * sy],
                    ]
                )
                rhs = np.array([bx1, r])
            else:
                dwx = 2.0 * bx1 * (-2.0 * j * sx) + 2.0 * by1 * (-4.0 * t * sx * cy)
                dwy = 2.0 * bx1 * (-2.0 * j * sy) + 2.0 * by1 * (-4.0 * t * cx * sy)
                jac = np.array([[dwx.real, dwy.real], [dwx.imag, dwy.imag]])
                rhs = np.array([w.real, w.imag])
            det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
            if abs(det) < 1e-14:
                break
            step = np.linalg.solve(jac, -rhs)
            x, y = x + step[0], y + step[1]
            if best is not None and math.hypot(step[0], step[1]) < 1e-12:
                break
        if best is not None:
            converged.append(Momentum(*best))
        elif primary:
            dropped += 1
    if dropped:
        warnings.warn(
            f"refine_btps_numeric: dropped {dropped} non-converged Newton seeds",
            RuntimeWarning,
            stacklevel=2,
        )

    level_tol = 1e-6
    out = []
    for m in converged:
        c = math.cos(m.kx) + math.cos(m.ky)
        branch = 0
        if abs(params.gamma) >= _T_ZERO:
            matches = [s for s in (1, -1) if abs(c - branch_level(params, s)) < level_tol]
            branch = matches[0] if len(matches) == 1 else 0
        out.append(Btp(m, branch, _kind_from_level(params, c, level_tol)))
    return _dedup_btps(_sorted_btps(out))


def classify_btp(params: ModelParams, btp: Btp, w_i: float) -> str:
    """Kind of a band touching from its computed field winding w_i."""
    snapped = round(2.0 * w_i) / 2.0
    if abs(2.0 * w_i - round(2.0 * w_i)) > 1e-6 or abs(snapped) > 1.0:
        raise ValueError(f"winding {w_i!r} is not in {{0, +-1/2, +-1}}")
    hermitian = abs(params.gamma) < _T_ZERO
    if hermitian:
        if abs(snapped) == 1.0:
            return DIRAC_POINT
        if snapped == 0.0:
            return SEMI_DIRAC_POINT
        raise ValueError("half-integer winding is impossible at gamma = 0")
    if abs(params.t) < _T_ZERO:
        if snapped == 0.0:
            return TRIVIAL_ISOLATED_EP
        raise ValueError("a trivial isolated EP must carry zero winding")
    if abs(snapped) == 0.5:
        return NORMAL_EP
    if snapped == 0.0:
        return HYBRID_EP
    raise ValueError("integer winding is impossible at gamma != 0")


@dataclass(frozen=True)
class EpRing:
    """Closed polyline of exceptional points at t = 0 (level set of cos kx + cos ky)."""

    vertices: np.ndarray  # (m, 2), canonical coordinates
    branch: int
    level: float


def trace_ep_ring(params: ModelParams, branch: int, samples: int = 256) -> EpRing:
    """Trace the branch's EP ring cos kx + cos ky = c_s.

    The level set is solved in closed form, ky = +-arccos(c - cos kx), while
    kx marches over the admissible arc; the two half-arcs are stitched into
    one closed polyline.  |c| >= 2 degenerates to a point or to nothing.
    """
    if abs(params.t) >= _T_ZERO:
        raise ValueError("EP rings exist only at t = 0")
    if abs(params.gamma) < _T_ZERO:
        raise ValueError("gamma must be nonzero for exceptional rings")
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    if samples < 8:
        raise ValueError("samples must be at least 8")
    c = branch_level(params, branch)
    if abs(c) > 2.0 + MERGER_TOL:
        return EpRing(np.empty((0, 2)), branch, c)
    if c >= 2.0 - MERGER_TOL:
        return EpRing(np.array([[0.0, 0.0]]), branch, c)
    if c <= -2.0 + MERGER_TOL:
        return EpRing(np.array([[math.pi, math.pi]]), branch, c)

    # Admissible kx arc: cos ky = c - cos kx must land in [-1, 1].
    if c > 0.0:
        half = math.acos(c - 1.0)
        lo, hi = -half, half
    else:
        half = math.acos(c + 1.0)
        lo, hi = half, 2.0 * math.pi - half
    m = max(samples // 2, 4)
    kxs = np.linspace(lo, hi, m)
    kys = np.arccos(np.clip(c - np.cos(kxs), -1.0, 1.0))
    top = np.column_stack([kxs, kys])
    bottom = np.column_stack([kxs[::-1], -kys[::-1]])
    verts = np.vstack([top, bottom])
    verts = np.column_stack([wrap_angle(verts[:, 0]), wrap_angle(verts[:, 1])])
    # Remove consecutive duplicates (arc endpoints have ky = 0 or wrap onto
    # each other), then a duplicated closing vertex if present.
    keep = [0]
    for i in range(1, len(verts)):
        d = np.hypot(
            wrap_angle(verts[i, 0] - verts[keep[-1], 0]),
            wrap_angle(verts[i, 1] - verts[keep[-1], 1]),
        )
        if d > 1e-12:
            keep.append(i)
    verts = verts[keep]
    if len(verts) > 1:
        d = np.hypot(wrap_angle(verts[-1, 0] - verts[0, 0]), wrap_angle(verts[-1, 1] - verts[0, 1]))
        if d <= 1e-12:
            verts = verts[:-1]

    level_err = np.max(np.abs(np.cos(verts[:, 0]) + np.cos(verts[:, 1]) - c))
    if level_err >= 1e-8:
        raise RuntimeError(f"ring vertex off the level set by {level_err:.3g}")
    abs_e = _abs_e(params, verts[:, 0], verts[:, 1])
    if np.max(abs_e) >= 1e-6:
        raise RuntimeError(f"ring vertex with |E| = {np.max(abs_e):.3g}")
    return EpRing(verts, branch, c)


def min_gap(params: ModelParams, grid_n: int = 128) -> float:
    """Minimum of |E+| over the zone: grid scan plus local refinement."""
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    k = wrap_angle(2.0 * np.pi * np.arange(grid_n) / grid_n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    e = _abs_e(params, kx, ky)
    i, jj = np.unravel_index(np.argmin(e), e.shape)
    x0 = np.array([kx[i, jj], ky[i, jj]])

    def f(x):
        return float(_abs_e(params, np.array([x[0]]), np.array([x[1]]))[0])

    res = minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    return float(min(e[i, jj], res.fun))
