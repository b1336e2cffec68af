"""Winding numbers of the spin texture and of the complex energy.

Both invariants are angle accumulations along a small counterclockwise loop:
w_I follows F = (<sigma_x>, <sigma_z>) of one continuously tracked
eigenbranch, w_II follows (Re E, Im E) of its eigenvalue.  Tracking picks,
sample by sample, the candidate eigenvector with the larger overlap
magnitude against the previous one; encircling an exceptional point swaps
the branch after one turn and the winding lands on a half-odd value.
Results are snapped to the nearest half-integer and the snap residual is
reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bloch import ModelParams, Momentum, bloch_field_grid, principal_sqrt, torus_distance, wrap_angle

__all__ = [
    "Loop",
    "WindingResult",
    "WindingError",
    "LoopThroughDefectError",
    "DegenerateTrackingError",
    "NonQuantizedLoopError",
    "make_loop",
    "winding_number",
    "winding_additivity_check",
]

MAX_SAMPLES = 2**16
_FIELD_FLOOR = 1e-10
_TIE_TOL = 1e-12


class WindingError(RuntimeError):
    pass


class LoopThroughDefectError(WindingError):
    """The field magnitude vanished on the loop; a touching point sits on it."""


class DegenerateTrackingError(WindingError):
    """Branch overlaps tied; the loop passes through a degeneracy."""


class NonQuantizedLoopError(WindingError):
    """Refinement cap reached without a quantized angle total."""

    def __init__(self, raw_angle: float):
        super().__init__(f"winding failed to quantize, raw angle {raw_angle:.6f} turns")
        self.raw_angle = raw_angle


@dataclass(frozen=True)
class Loop:
    """Counterclockwise circle on the Brillouin torus."""

    center: Momentum
    radius: float
    samples: int = 512
    orientation: str = "ccw"

    def __post_init__(self):
        if not (self.radius > 0.0) or not math.isfinite(self.radius):
            raise ValueError(f"loop radius must be positive, got {self.radius!r}")
        if self.samples < 256:
            raise ValueError("loops need at least 256 samples")
        if self.orientation != "ccw":
            raise ValueError("only counterclockwise loops are defined")


def make_loop(center: Momentum, params: ModelParams, all_btps, samples: int = 512) -> Loop:
    """Loop around ``center`` sized off the nearest other band touching.

    radius = min(0.4 * distance to the nearest listed BTP other than the
    center itself, 0.1).  A radius below 1e-4 means two touchings are about
    to merge and no loop separates them.  As a cheap guard the sampled loop
    is also rejected if |E| collapses on it.
    """
    dmin = None
    for b in all_btps:
        d = torus_distance(center, b.k)
        if d > 1e-9:
            dmin = d if dmin is None else min(dmin, d)
    radius = 0.1 if dmin is None else min(0.4 * dmin, 0.1)
    if radius < 1e-4:
        raise ValueError(
            f"loop radius {radius:.2e} below 1e-4: band touchings too close to separate"
        )
    loop = Loop(center=center, radius=radius, samples=samples)
    theta = 2.0 * np.pi * np.arange(64) / 64
    bx, by = bloch_field_grid(
        params, center.kx + radius * np.cos(theta), center.ky + radius * np.sin(theta)
    )
    if np.min(np.abs(bx * bx + by * by)) < _FIELD_FLOOR**2:
        raise LoopThroughDefectError("a band touching lies on the proposed loop")
    return loop


@dataclass(frozen=True)
class WindingResult:
    value: float
    raw_angle: float
    residual: float
    field_kind: str
    branch_swapped: bool
    center: Momentum
    radius: float
    samples: int

    def __post_init__(self):
        if self.residual >= 0.05:
            raise ValueError(f"unquantized winding: residual {self.residual:.3g}")
        half_odd = abs(round(2.0 * self.value)) % 2 == 1
        if half_odd != self.branch_swapped:
            raise ValueError("branch swap flag inconsistent with half-integer value")

    def to_json_dict(self):
        return {
            "value": self.value,
            "rawAngle": self.raw_angle,
            "residual": self.residual,
            "fieldKind": self.field_kind,
            "branchSwapped": self.branch_swapped,
            "center": {"kx": self.center.kx, "ky": self.center.ky},
            "radius": self.radius,
            "samples": self.samples,
        }


class _RefineNeeded(Exception):
    def __init__(self, raw_angle: float):
        self.raw_angle = raw_angle


def _candidate_vectors(bx, by, e_signed):
    """Normalized right eigenvectors for one sign of E along the whole loop."""
    v1 = np.stack([bx.astype(complex), e_signed - by], axis=-1)
    v2 = np.stack([e_signed + by, bx.astype(complex)], axis=-1)
    n1 = np.linalg.norm(v1, axis=-1)
    n2 = np.linalg.norm(v2, axis=-1)
    v = np.where((n1 >= n2)[:, None], v1, v2)
    return v / np.linalg.norm(v, axis=-1)[:, None]


def _attempt(params: ModelParams, loop: Loop, m: int, field_kind: str, start_branch: str):
    theta = 2.0 * np.pi * np.arange(m) / m
    kx = loop.center.kx + loop.radius * np.cos(theta)
    ky = loop.center.ky + loop.radius * np.sin(theta)
    kx = np.append(kx, kx[0])  # close the loop on the same matrix
    ky = np.append(ky, ky[0])
    bx, by = bloch_field_grid(params, kx, ky)
    if np.min(np.hypot(np.abs(bx), np.abs(by))) < 1e-12:
        raise LoopThroughDefectError("h(k) vanishes on the loop")
    w = bx * bx + by * by
    e = principal_sqrt(w)
    if np.min(np.abs(e)) < _FIELD_FLOOR:
        raise LoopThroughDefectError("eigenvalue collapses on the loop")

    psi = np.stack(
        [_candidate_vectors(bx, by, e), _candidate_vectors(bx, by, -e)], axis=1
    )  # (n, sign, component)
    overlap = np.abs(np.einsum("nac,nbc->nab", psi[:-1].conj(), psi[1:]))
    flip_from_plus = overlap[:, 0, 1] > overlap[:, 0, 0]
    flip_from_minus = overlap[:, 1, 0] > overlap[:, 1, 1]
    if np.any(flip_from_plus != flip_from_minus):
        raise _RefineNeeded(float("nan"))  # ambiguous tracking, resolve by refining

    parity = np.concatenate([[0], np.cumsum(flip_from_plus.astype(int)) % 2])
    s_idx = parity if start_branch == "plus" else 1 - parity
    margins = np.where(
        s_idx[:-1] == 0,
        np.abs(overlap[:, 0, 0] - overlap[:, 0, 1]),
        np.abs(overlap[:, 1, 1] - overlap[:, 1, 0]),
    )
    if np.min(margins) < _TIE_TOL:
        raise DegenerateTrackingError("eigenbranch overlaps tied on the loop")

    if field_kind == "F":
        tracked = psi[np.arange(len(s_idx)), s_idx]
        a, b = tracked[:, 0], tracked[:, 1]
        cross = a.conj() * b
        fx = 2.0 * cross.real
        fy = np.abs(a) ** 2 - np.abs(b) ** 2
    else:
        e_tr = np.where(s_idx == 0, e, -e)
        fx = e_tr.real
        fy = e_tr.imag
    if np.min(np.hypot(fx, fy)) < _FIELD_FLOOR:
        raise LoopThroughDefectError(f"{field_kind} field magnitude collapses on the loop")

    d = wrap_angle(np.diff(np.arctan2(fy, fx)))
    raw = float(np.sum(d) / (2.0 * np.pi))
    if np.max(np.abs(d)) > 0.5 * np.pi:
        raise _RefineNeeded(raw)
    value = round(2.0 * raw) / 2.0
    residual = abs(raw - value)
    swapped = bool(s_idx[-1] != s_idx[0])
    if residual >= 0.05 or (abs(round(2.0 * value)) % 2 == 1) != swapped:
        raise _RefineNeeded(raw)
    return value, raw, residual, swapped, m


def winding_number(
    params: ModelParams, loop: Loop, field_kind: str = "F", start_branch: str = "plus"
) -> WindingResult:
    """Winding of the chosen field along the loop, in half-integer units.

    Parameters
    ----------
    field_kind : "F" or "E"
        "F" winds the planar spin texture (w_I); "E" winds the complex
        eigenvalue (w_II).
    start_branch : "plus" or "minus"
        Eigenbranch the tracking starts from; the winding value does not
        depend on it.

    The sample count doubles (up to 2^16) whenever some wrapped angle step
    exceeds pi/2; if the total still fails to quantize, the raw angle is
    reported in a :class:`NonQuantizedLoopError`.
    """
    if field_kind not in ("F", "E"):
        raise ValueError(f"field_kind must be 'F' or 'E', got {field_kind!r}")
    if start_branch not in ("plus", "minus"):
        raise ValueError(f"start_branch must be 'plus' or 'minus', got {start_branch!r}")
    m = loop.samples
    raw = float("nan")
    while True:
        try:
            value, raw, residual, swapped, m_used = _attempt(
                params, loop, m, field_kind, start_branch
            )
        except _RefineNeeded as r:
            if not math.isnan(r.raw_angle):
                raw = r.raw_angle
            if m < MAX_SAMPLES:
                m *= 2
                continue
            raise NonQuantizedLoopError(raw) from None
        return WindingResult(
            value=value,
            raw_angle=raw,
            residual=residual,
            field_kind=field_kind,
            branch_swapped=swapped,
            center=loop.center,
            radius=loop.radius,
            samples=m_used,
        )


def winding_additivity_check(params: ModelParams, btps, big_loop: Loop) -> bool:
    """Does the big loop's winding equal the sum over enclosed touchings?

    Checked for both field kinds.  Every listed touching must clear the loop
    path by more than 1e-3 so that enclosure is unambiguous.
    """
    enclosed = []
    for b in btps:
        d = torus_distance(big_loop.center, b.k)
        if abs(d - big_loop.radius) <= 1e-3:
            raise ValueError(f"band touching at {b.k.xy} sits on the loop path")
        if d < big_loop.radius:
            enclosed.append(b)
    for kind in ("F", "E"):
        total = winding_number(params, big_loop, kind).value
        parts = sum(
            winding_number(params, make_loop(b.k, params, btps), kind).value for b in enclosed
        )
        if abs(total - parts) > 1e-9:
            return False
    return True
