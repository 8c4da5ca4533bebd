"""Third-kind differential with poles at a divisor and its involution image.

Omega is stored through the basis ``v_j`` dual to the divisor points:

    Omega(P) = sum_j v_j(P) (1/(u - q_j) + alpha_j),
    v_j = phi * prod_{a != j}(u - q_a) / D_j,   D_j = phi(Q_j) prod_{a != j}(q_j - q_a),

with ``phi = du/v``.  The ratio ``Omega/phi`` is the rational function
``N(u) / prod_a(u - q_a)`` where ``N`` has degree 2g - 1; its roots are the
u-projections of the zeros of Omega.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .curve_core import (CurveFrame, SurfacePoint, abel_integral, eval_phi_ramification,
                         symplectic_transform)
from .divisor_inversion import Divisor, LatticeCoordinates, abel_sum
from .errors import (ComputeError, EvaluationAtPole, MultipleZeroDetected, RootFindingFailure,
                     SingularAlphaSystem)

FOUR_PI_I = 4j * np.pi


def _lagrange_parts(q: np.ndarray) -> list[np.ndarray]:
    """Ascending coefficients of prod_{a != j}(u - q_a) for each j."""
    return [npoly.polyfromroots(np.delete(q, j)) for j in range(q.size)]


@dataclass(frozen=True, eq=False)
class OmegaDifferential:
    frame: CurveFrame
    divisor: Divisor
    coords: LatticeCoordinates
    coords_eff: LatticeCoordinates
    alphas: np.ndarray
    denominators: np.ndarray
    lattice_shift: tuple[np.ndarray, np.ndarray]
    _parts: list = field(repr=False)
    _numerator: np.ndarray = field(repr=False)

    @property
    def genus(self) -> int:
        return self.frame.genus

    @property
    def q(self) -> np.ndarray:
        return self.divisor.q

    def ratio(self, u) -> np.ndarray:
        """Omega / phi as a rational function of u."""
        u = np.asarray(u, dtype=complex)
        return npoly.polyval(u, self._numerator) / npoly.polyval(u, npoly.polyfromroots(self.q))

    @property
    def numerator(self) -> np.ndarray:
        """Ascending coefficients of N(u) = (Omega/phi) prod(u - q_a)."""
        return self._numerator

    def v_basis(self, P: SurfacePoint) -> np.ndarray:
        vals = np.array([npoly.polyval(P.u, c) for c in self._parts])
        return vals / (P.v * self.denominators)

    def v_basis_branch(self, n: int) -> np.ndarray:
        un = self.frame.config.points[n]
        phin = eval_phi_ramification(self.frame, n)
        return phin * np.array([npoly.polyval(un, c) for c in self._parts]) / self.denominators


def _alpha_system(frame: CurveFrame, q: np.ndarray, parts, denominators, a_periods=None):
    """Periods over the a-cycles of v_j / (u - q_j) and of v_j.

    ``a_periods`` overrides the monomial a-periods and the pole integrals
    (used when the cycles are replaced by a symplectic combination).
    """
    g = frame.genus
    if a_periods is None:
        Aper = frame.Aper
        pole = np.column_stack([frame.a_pole_integrals(qj) for qj in q])  # (k, j)
    else:
        Aper, pole = a_periods
    hol = np.zeros((g, g), dtype=complex)
    polar = np.zeros((g, g), dtype=complex)
    for j, c in enumerate(parts):
        c = np.pad(c, (0, g - c.size))
        hol[:, j] = (c @ Aper) / denominators[j]
        quo, _ = npoly.polydiv(c, np.array([-q[j], 1.0]))
        quo = np.pad(np.atleast_1d(quo), (0, g - np.atleast_1d(quo).size))
        Pq = npoly.polyval(q[j], c)
        polar[:, j] = (quo @ Aper + Pq * pole[:, j]) / denominators[j]
    return polar, hol


def effective_coords(frame: CurveFrame, divisor: Divisor, coords: LatticeCoordinates,
                     tol: float = 1e-6):
    """Shift (c1, c2) by the lattice vector that the ray Abel sum sits on.

    Returns the shifted coordinates and the integer shift (m, n) with
    sum A(Q_j) = (c1 + m) + B (c2 + n).
    """
    diff = abel_sum(frame, divisor) - coords.z0(frame)
    m, n = frame.lattice_split(diff)
    mi, ni = np.round(m), np.round(n)
    if max(np.abs(m - mi).max(), np.abs(n - ni).max()) > tol:
        raise ComputeError("divisor does not invert the given lattice coordinates")
    return coords.shifted(mi, ni), (mi.astype(int), ni.astype(int))


def build_omega(frame: CurveFrame, divisor: Divisor, coords: LatticeCoordinates,
                a_periods=None, coords_eff: LatticeCoordinates | None = None) -> OmegaDifferential:
    """Normalise Omega so that its a-periods are -4 pi i c2.

    Raises
    ------
    SingularAlphaSystem
        The a-period matrix of the ``v_j`` basis is too badly conditioned.
    """
    q = divisor.q
    parts = _lagrange_parts(q)
    phiQ = np.array([1.0 / P.v for P in divisor.points])
    D = np.array([phiQ[j] * np.prod(np.delete(q[j] - q, j)) for j in range(q.size)])
    if coords_eff is None:
        coords_eff, shift = effective_coords(frame, divisor, coords)
    else:
        shift = (np.zeros(frame.genus, int), np.zeros(frame.genus, int))
    polar, hol = _alpha_system(frame, q, parts, D, a_periods)
    if np.linalg.cond(hol) > 1e12:
        raise SingularAlphaSystem("a-periods of the divisor basis are degenerate")
    rhs = -FOUR_PI_I * coords_eff.c2v - polar.sum(axis=1)
    alphas = np.linalg.solve(hol, rhs)
    Q = npoly.polyfromroots(q)
    N = np.zeros(2 * q.size, dtype=complex)
    for j, c in enumerate(parts):
        term = npoly.polyadd(c, alphas[j] * Q)
        term = npoly.polymul(c, term) / D[j]
        N[:term.size] += term
    return OmegaDifferential(frame, divisor, coords, coords_eff, alphas, D, shift, parts, N)


def eval_regular(om: OmegaDifferential, P: SurfacePoint) -> complex:
    """Omega at a regular point, local parameter u."""
    scale = 1.0 + abs(P.u)
    if np.min(np.abs(om.q - P.u)) < 1e-14 * scale:
        raise EvaluationAtPole("point coincides with a pole of Omega")
    if np.min(np.abs(om.frame.branch_points - P.u)) < 1e-14 * scale:
        raise EvaluationAtPole("use eval_ramification at branch points")
    return complex(om.ratio(P.u) / P.v)


def eval_ramification(om: OmegaDifferential, n: int) -> complex:
    """Omega at P_n in the parameter sqrt(u - u_n)."""
    un = om.frame.config.points[n]
    return complex(om.ratio(un) * eval_phi_ramification(om.frame, n))


def eval_infinity(om: OmegaDifferential) -> complex:
    """Omega at P_infinity in the parameter u^(-1/2)."""
    return complex(-2.0 * np.sum(om.alphas / om.denominators))


def find_zeros(om: OmegaDifferential, flag_tol: float = 1e-10, strict: bool = False) -> np.ndarray:
    """u-values of the 2g - 1 zero pairs of Omega.

    Near-coincident roots emit a warning (or raise with ``strict``).
    """
    N = om.numerator
    if abs(N[-1]) < 1e-14 * np.abs(N).max():
        raise RootFindingFailure("leading coefficient of the numerator vanishes")
    roots = npoly.polyroots(N)
    dN = npoly.polyder(N)
    for _ in range(3):
        roots = roots - npoly.polyval(roots, N) / npoly.polyval(roots, dN)
    if not np.all(np.isfinite(roots)):
        raise RootFindingFailure("non-finite root of the numerator")
    if roots.size > 1:
        scale = 1.0 + np.abs(roots).max()
        sep = min(abs(a - b) for i, a in enumerate(roots) for b in roots[:i]) / scale
        if sep * sep < flag_tol:
            msg = f"zeros of Omega nearly coincide (separation {sep:.2e})"
            if strict:
                raise MultipleZeroDetected(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return np.sort_complex(roots)


def dq_du(om: OmegaDifferential, j: int, k: int) -> complex:
    """Derivative of q_j with respect to the branch point u_k."""
    return complex(-0.25 * eval_ramification(om, k) * om.v_basis_branch(k)[j])


def a_periods(om: OmegaDifferential) -> np.ndarray:
    """a-periods of Omega recomputed by quadrature on the cycles."""
    fr = om.frame
    out = np.zeros(om.genus, dtype=complex)
    for k in range(om.genus):
        G = lambda u: om.ratio(u)
        poles = om.q
        # the collapsed loop is exact unless a pole sits next to the cut
        out[k] = fr.a_integral(G, k)[0] if _clear_of_cut(fr, k, poles) else np.nan
    return out


def _clear_of_cut(fr: CurveFrame, k: int, poles) -> bool:
    m, h = fr.cycles.a_paths[k]
    for p in poles:
        w = (p - m) / h
        if np.real(np.arccosh(complex(w))) < 0.05:
            return False
    return True


def b_periods(om: OmegaDifferential) -> tuple[np.ndarray, np.ndarray]:
    """b-periods of Omega by quadrature, with the integer ambiguity removed.

    The quadrature value depends on which side of the poles the b-path
    passes, so it equals 4 pi i c1 only modulo 2 pi i.  Returns the reduced
    residual against 4 pi i c1 (effective) and the integer offsets.
    """
    fr = om.frame
    raw = np.array([fr.b_integral(lambda u: om.ratio(u), k)[0] for k in range(om.genus)])
    target = FOUR_PI_I * om.coords_eff.c1v
    turns = (raw - target) / (2j * np.pi)
    offsets = np.round(turns.real).astype(int)
    return raw - target - 2j * np.pi * offsets, offsets


def bilinear_b_periods(om: OmegaDifferential) -> tuple[np.ndarray, np.ndarray]:
    """b-periods of v_j / (u - q_j) and v_j fixed by the bilinear relations.

    For the pole part the b-period of the normalised third-kind differential
    is 4 pi i times the Abel image of Q_j (ray path), plus B times its
    a-periods.
    """
    fr = om.frame
    q = om.q
    polar_a, hol_a = _alpha_system(fr, q, om._parts, om.denominators)
    hol_b = np.zeros_like(hol_a)
    polar_b = np.zeros_like(polar_a)
    for j, P in enumerate(om.divisor.points):
        c = np.pad(om._parts[j], (0, om.genus - om._parts[j].size))
        hol_b[:, j] = (c @ fr.Bper) / om.denominators[j]
        abel = fr.normalizer @ abel_integral(fr, P.u, P.sheet)[0]
        polar_b[:, j] = FOUR_PI_I * abel + fr.RiemannB @ polar_a[:, j]
    return polar_b, hol_b


def rebuild_in_basis(om: OmegaDifferential, S: np.ndarray) -> OmegaDifferential:
    """Rebuild Omega from transformed coordinates in the cycle basis S(b, a)."""
    fr = om.frame
    g = om.genus
    c1n, c2n, _ = symplectic_transform(om.coords_eff.c1v, om.coords_eff.c2v, fr.RiemannB, S)
    S = np.asarray(S, dtype=float)
    C, Dm = S[g:, :g], S[g:, g:]
    polar_a, hol_a = _alpha_system(fr, om.q, om._parts, om.denominators)
    polar_b, hol_b = bilinear_b_periods(om)
    polar_new = C @ polar_b + Dm @ polar_a
    hol_new = C @ hol_b + Dm @ hol_a
    rhs = -FOUR_PI_I * c2n - polar_new.sum(axis=1)
    alphas = np.linalg.solve(hol_new, rhs)
    Q = npoly.polyfromroots(om.q)
    N = np.zeros(2 * g, dtype=complex)
    for j, c in enumerate(om._parts):
        term = npoly.polymul(c, npoly.polyadd(c, alphas[j] * Q)) / om.denominators[j]
        N[:term.size] += term
    return OmegaDifferential(fr, om.divisor, LatticeCoordinates.of(c1n, c2n),
                             LatticeCoordinates.of(c1n, c2n), alphas, om.denominators,
                             om.lattice_shift, om._parts, N)


def decomposition_residual(om: OmegaDifferential, points) -> float:
    """max |omega_k(P) - sum_j omega_k(Q_j) v_j(P)| over the sample points."""
    fr = om.frame
    WQ = np.column_stack([fr.omega(Q) for Q in om.divisor.points])  # (k, j)
    worst = 0.0
    for P in points:
        lhs = fr.omega(P)
        rhs = WQ @ om.v_basis(P)
        worst = max(worst, float(np.abs(lhs - rhs).max() / max(1e-300, np.abs(lhs).max())))
    return worst


def residue_at(om: OmegaDifferential, j: int, radius: float = 1e-7) -> complex:
    """(u - q_j) Omega / du sampled on a small circle, averaged."""
    Q = om.divisor.points[j]
    ang = np.exp(2j * np.pi * np.arange(8) / 8)
    vals = []
    for a in ang:
        u = Q.u + radius * a
        v = Q.sheet * om.frame.v_plus(u)
        # keep the sheet continuous with Q itself
        if abs(v - Q.v) > abs(v + Q.v):
            v = -v
        vals.append((u - Q.u) * om.ratio(u) / v)
    return complex(np.mean(vals))


# elliptic closed forms ------------------------------------------------------

def elliptic_closed_form(om: OmegaDifferential, P: SurfacePoint) -> complex:
    """Omega(P) from the standard genus-one formula using I and I0 only."""
    fr = om.frame
    Q0 = om.divisor.points[0]
    I0 = fr.I0
    I = fr.a_pole_integrals(Q0.u)[0]
    wP = 1.0 / (I0 * P.v)
    wQ = 1.0 / (I0 * Q0.v)
    c2 = om.coords_eff.c2v[0]
    return complex(wP / wQ * (1.0 / (P.u - Q0.u) - I / I0) - FOUR_PI_I * c2 * wP)


def elliptic_zero_closed_form(om: OmegaDifferential) -> complex:
    """y from 1/(y - y0) = I/I0 + 4 pi i c2 omega(Q0)."""
    fr = om.frame
    Q0 = om.divisor.points[0]
    I = fr.a_pole_integrals(Q0.u)[0]
    wQ = 1.0 / (fr.I0 * Q0.v)
    return complex(Q0.u + 1.0 / (I / fr.I0 + FOUR_PI_I * om.coords_eff.c2v[0] * wQ))


def dy0_dx(om: OmegaDifferential, x_index: int = 2) -> complex:
    """-(1/4) Omega(P_x) omega(P_x) / omega(Q0) for the moving branch point."""
    fr = om.frame
    Q0 = om.divisor.points[0]
    wx = fr.omega_branch(x_index)[0]
    wQ = fr.omega(Q0)[0]
    return complex(-0.25 * eval_ramification(om, x_index) * wx / wQ)
