"""Momentum-space core of the non-Hermitian bilayer square-lattice model.

The model carries four couplings: nearest-neighbor hopping J, an interlayer
coupling T, a diagonal hopping t with checkerboard-staggered signs, and a
balanced on-site gain/loss rate gamma.  In the two-sublattice momentum basis
the Bloch Hamiltonian is

    h(k) = Bx(k) sigma_x + By(k) sigma_z,
    Bx   = 2 J (cos kx + cos ky) + T,
    By   = 4 t cos kx cos ky + i gamma,

laid out as [[By, Bx], [Bx, -By]].  h is traceless and anticommutes with
sigma_y for every k, so its spectrum comes in +/- pairs.  Everything in this
module is a closed-form evaluation of a 2x2 problem; no iterative eigensolver
is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "ModelParams",
    "Momentum",
    "BlochField",
    "EigenSystem",
    "Observables",
    "SYMMETRY_RELATIONS",
    "wrap_angle",
    "torus_distance",
    "principal_sqrt",
    "bloch_field",
    "bloch_field_grid",
    "bloch_matrix",
    "eigensystem",
    "observables",
    "observables_grid",
    "symmetry_residuals",
    "chiral_residual",
    "spectral_reality",
]

# Pauli matrices in the (A, B) sublattice basis.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def wrap_angle(k):
    """Wrap an angle (scalar or array) onto the canonical interval (-pi, pi]."""
    return np.pi - (np.pi - k) % (2.0 * np.pi)


def torus_distance(k1, k2):
    """Euclidean distance between two momenta on the Brillouin torus."""
    dx = wrap_angle(k1.kx - k2.kx)
    dy = wrap_angle(k1.ky - k2.ky)
    return math.hypot(dx, dy)


def principal_sqrt(w):
    """Principal complex square root: Re >= 0, and Im >= 0 on the cut Re = 0.

    Works on scalars and arrays.  numpy's sqrt already picks Re >= 0 except
    for the sign-of-zero ambiguity on the negative real axis, which is fixed
    here so that sqrt(-x) = +i sqrt(x) for x > 0 regardless of the sign of
    the imaginary zero.
    """
    e = np.sqrt(np.asarray(w, dtype=complex))
    flip = (e.real < 0) | ((e.real == 0) & (e.imag < 0))
    e = np.where(flip, -e, e)
    if np.ndim(w) == 0:
        return complex(e)
    return e


@dataclass(frozen=True)
class ModelParams:
    """Coupling constants. J is the energy unit and must be nonzero."""

    J: float = 1.0
    T: float = 0.0
    t: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("J", "T", "t", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"ModelParams.{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.J == 0.0:
            raise ValueError("ModelParams.J must be nonzero")


@dataclass(frozen=True)
class Momentum:
    """A point on the Brillouin torus, stored canonically in (-pi, pi]^2."""

    kx: float
    ky: float

    def __post_init__(self):
        for name in ("kx", "ky"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"Momentum.{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(wrap_angle(v)))

    @property
    def xy(self):
        return (self.kx, self.ky)


@dataclass(frozen=True)
class BlochField:
    """The pair (Bx, By) defining h(k); By carries the constant gain/loss part."""

    bx: float
    by_re: float
    by_im: float

    @property
    def by(self) -> complex:
        return complex(self.by_re, self.by_im)


def bloch_field(params: ModelParams, k: Momentum) -> BlochField:
    """Evaluate Bx and By at a single momentum."""
    cx = math.cos(k.kx)
    cy = math.cos(k.ky)
    bx = 2.0 * params.J * (cx + cy) + params.T
    return BlochField(bx=bx, by_re=4.0 * params.t * cx * cy, by_im=params.gamma)


def bloch_field_grid(params: ModelParams, kx, ky):
    """Vectorized (Bx, By) on arrays of momenta. By is complex."""
    cx = np.cos(kx)
    cy = np.cos(ky)
    bx = 2.0 * params.J * (cx + cy) + params.T
    by = 4.0 * params.t * cx * cy + 1j * params.gamma
    return bx, by


def bloch_matrix(field: BlochField) -> np.ndarray:
    """Assemble the 2x2 Bloch matrix [[By, Bx], [Bx, -By]]."""
    by = field.by
    bx = complex(field.bx)
    return np.array([[by, bx], [bx, -by]], dtype=complex)


@dataclass(frozen=True)
class EigenSystem:
    """Right eigenpairs of a Bloch matrix.

    ``defective`` marks an exceptional point: both eigenvalues vanish while h
    itself does not, and a single Jordan eigenvector is returned for both
    branches.  ``degenerate`` marks the h = 0 case (a Dirac-type degeneracy)
    where any basis diagonalizes; the canonical basis vectors are returned.
    """

    e_plus: complex
    e_minus: complex
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    defective: bool
    degenerate: bool = False


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _right_eigvec(bx: complex, by: complex, e: complex) -> np.ndarray:
    # Two algebraically equivalent kernel representatives; pick the better
    # conditioned one so Bx = 0 and By = 0 corners are both safe.
    v1 = np.array([bx, e - by], dtype=complex)
    v2 = np.array([e + by, bx], dtype=complex)
    if np.linalg.norm(v1) >= np.linalg.norm(v2):
        return _unit(v1)
    return _unit(v2)


def eigensystem(h: np.ndarray, tol_ep: float = 1e-9) -> EigenSystem:
    """Closed-form eigensystem of a Bloch matrix.

    Parameters
    ----------
    h : (2, 2) complex array
        Matrix of the [[By, Bx], [Bx, -By]] form.
    tol_ep : float
        Scale (in units of J) below which |E| counts as zero.  A band
        touching is flagged defective when |E+| < tol_ep while ||h|| > tol_ep.
        Note that at a touching point located only to accuracy delta the
        eigenvalues are O(sqrt(delta)), so callers classifying numerically
        refined points should pass tol_ep ~ sqrt(delta) * scale.

    Returns
    -------
    EigenSystem
        E+/- on the principal branch (Re E+ >= 0; Im E+ >= 0 when Re E+ = 0)
        with unit right eigenvectors under the Hermitian inner product.
    """
    by = complex(h[0, 0])
    bx = complex(h[0, 1])
    hscale = math.hypot(abs(bx), abs(by))
    if hscale <= tol_ep:
        e1 = np.array([1.0, 0.0], dtype=complex)
        e2 = np.array([0.0, 1.0], dtype=complex)
        return EigenSystem(0j, 0j, e1, e2, defective=False, degenerate=True)
    e = principal_sqrt(bx * bx + by * by)
    if abs(e) < tol_ep:
        # Exceptional point: the 2x2 block is a Jordan block and the kernel
        # is spanned by (Bx, -By) alone.
        psi = _unit(np.array([bx, -by], dtype=complex))
        return EigenSystem(e, -e, psi, psi.copy(), defective=True)
    psi_p = _right_eigvec(bx, by, e)
    psi_m = _right_eigvec(bx, by, -e)
    return EigenSystem(e, -e, psi_p, psi_m, defective=False)


@dataclass(frozen=True)
class Observables:
    """Planar spin texture (fx, fy) = (<sigma_x>, <sigma_z>) and energy point.

    Expectation values use the right eigenvector with the plain Hermitian
    inner product <psi|sigma|psi> / <psi|psi>; no left eigenvector enters.
    For a unit state fx^2 + fy^2 + sigma_y_exp^2 = 1 identically.
    """

    fx: float
    fy: float
    sigma_y_exp: float
    ex: float
    ey: float


def observables(es: EigenSystem, branch: str = "plus") -> Observables:
    """Spin texture and complex-energy components for one eigenbranch."""
    if branch == "plus":
        psi, e = es.psi_plus, es.e_plus
    elif branch == "minus":
        psi, e = es.psi_minus, es.e_minus
    else:
        raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")
    a, b = psi[0], psi[1]
    cross = np.conj(a) * b
    return Observables(
        fx=float(2.0 * cross.real),
        fy=float(abs(a) ** 2 - abs(b) ** 2),
        sigma_y_exp=float(2.0 * cross.imag),
        ex=float(np.real(e)),
        ey=float(np.imag(e)),
    )


def observables_grid(params: ModelParams, kx, ky):
    """Plus-branch (<sigma_x>, <sigma_z>, <sigma_y>) on momentum arrays.

    Vectorized companion of :func:`observables` for figure export.  At exact
    touching points both kernel representatives collapse onto the Jordan
    vector, so the in-plane components vanish there instead of blowing up.
    """
    bx, by = bloch_field_grid(params, kx, ky)
    e = principal_sqrt(bx * bx + by * by)
    a1, b1 = bx + 0j, e - by
    a2, b2 = e + by, bx + 0j
    use1 = np.abs(a1) ** 2 + np.abs(b1) ** 2 >= np.abs(a2) ** 2 + np.abs(b2) ** 2
    a = np.where(use1, a1, a2)
    b = np.where(use1, b1, b2)
    norm = np.abs(a) ** 2 + np.abs(b) ** 2
    norm = np.where(norm == 0.0, 1.0, norm)
    cross = np.conj(a) * b
    fx = 2.0 * cross.real / norm
    fy = (np.abs(a) ** 2 - np.abs(b) ** 2) / norm
    sy = 2.0 * cross.imag / norm
    return fx, fy, sy


# The eight momentum relations h(kx, ky) = h(. , .) implied by the C4/mirror
# structure of Bx and By (both even in each component and swap-symmetric).
SYMMETRY_RELATIONS = (
    ("(-kx,-ky)", lambda kx, ky: (-kx, -ky)),
    ("(-kx,+ky)", lambda kx, ky: (-kx, ky)),
    ("(+kx,-ky)", lambda kx, ky: (kx, -ky)),
    ("(+ky,+kx)", lambda kx, ky: (ky, kx)),
    ("(-ky,-kx)", lambda kx, ky: (-ky, -kx)),
    ("(+ky,-kx)", lambda kx, ky: (ky, -kx)),
    ("(-ky,+kx)", lambda kx, ky: (-ky, kx)),
    ("identity", lambda kx, ky: (kx, ky)),
)


def symmetry_residuals(params: ModelParams, grid_n: int = 128, field_fn=None):
    """Max entrywise deviation |h(k) - h(rel(k))| for each momentum relation.

    Returns a list of (relation_id, residual) pairs: the eight coordinate
    relations followed by a "chiral" row measuring ||sigma_y h sigma_y + h||.
    ``field_fn(params, kx, ky) -> (Bx, By)`` may be injected to test a
    deliberately corrupted field (negative control).
    """
    if grid_n < 4:
        raise ValueError("grid_n must be at least 4")
    if field_fn is None:
        field_fn = bloch_field_grid
    k = wrap_angle(2.0 * np.pi * np.arange(grid_n) / grid_n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    bx, by = field_fn(params, kx, ky)
    rows = []
    for name, rel in SYMMETRY_RELATIONS:
        kx2, ky2 = rel(kx, ky)
        bx2, by2 = field_fn(params, kx2, ky2)
        res = max(np.max(np.abs(bx - bx2)), np.max(np.abs(by - by2)))
        rows.append((name, float(res)))
    # sigma_y h sigma_y + h has entries [[h11+h00, h01-h10], [h10-h01, h00+h11]]
    h00, h01, h10, h11 = by, bx + 0j, bx + 0j, -by
    chi = max(np.max(np.abs(h11 + h00)), np.max(np.abs(h01 - h10)))
    rows.append(("chiral", float(chi)))
    return rows


def chiral_residual(h: np.ndarray) -> float:
    """||sigma_y h sigma_y + h||_max for a single 2x2 matrix."""
    return float(np.max(np.abs(SIGMA_Y @ h @ SIGMA_Y + h)))


def spectral_reality(params: ModelParams, grid_n: int = 128, tol: float = 1e-12) -> bool:
    """True iff every grid eigenvalue is purely real or purely imaginary.

    At t = 0 the model has PT- and CT-like products that force E^2 real, so
    this holds on the whole zone; any t != 0 generically breaks it.
    """
    if grid_n < 4:
        raise ValueError("grid_n must be at least 4")
    k = wrap_angle(2.0 * np.pi * np.arange(grid_n) / grid_n)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    bx, by = bloch_field_grid(params, kx, ky)
    e = principal_sqrt(bx * bx + by * by)
    return bool(np.all(np.minimum(np.abs(e.real), np.abs(e.imag)) < tol))
