"""Residue matrices built from Omega and finite-difference isomonodromy checks."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .curve_core import (BranchConfiguration, CurveFrame, SurfacePoint, build_frame, eval_W_ramification,
                         eval_phi_ramification)
from .divisor_inversion import Divisor, LatticeCoordinates, invert, track
from .errors import (DegenerateZeros, EvaluationAtPole, MultipleZeroDetected, VanishingA12)
from .omega_diff import (OmegaDifferential, build_omega, dy0_dx, eval_infinity, eval_ramification,
                         eval_regular, find_zeros)
from .quadrature import QuadratureSpec

SIGMA3_QUARTER = np.diag([0.25, -0.25]).astype(complex)


@dataclass(frozen=True)
class BetaSet:
    betas: np.ndarray

    def total(self) -> complex:
        return complex(self.betas.sum())


@dataclass(frozen=True)
class ResidueMatrixSet:
    matrices: np.ndarray          # shape (2g+1, 2, 2)
    points: np.ndarray            # branch points u_n, same order
    a_infinity: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_infinity", -self.matrices.sum(axis=0))

    @property
    def a12(self) -> np.ndarray:
        return self.matrices[:, 0, 1]

    @property
    def a11(self) -> np.ndarray:
        return self.matrices[:, 0, 0]

    @property
    def a21(self) -> np.ndarray:
        return self.matrices[:, 1, 0]

    def sum_rules(self) -> dict[str, float]:
        return {
            "sum_A12": float(abs(self.a12.sum())),
            "sum_A11_plus_quarter": float(abs(self.a11.sum() + 0.25)),
            "sum_A21": float(abs(self.a21.sum())),
            "A_infinity": float(np.abs(self.a_infinity - SIGMA3_QUARTER).max()),
            "max_trace": float(np.abs(np.trace(self.matrices, axis1=1, axis2=2)).max()),
            "max_det_defect": float(np.abs(np.linalg.det(self.matrices) + 1.0 / 16).max()),
        }


def assemble(betas: np.ndarray, a12: np.ndarray, points) -> ResidueMatrixSet:
    if np.any(np.abs(a12) < 1e-12):
        raise VanishingA12("a 12-entry of a residue matrix vanishes")
    mats = np.empty((betas.size, 2, 2), dtype=complex)
    mats[:, 0, 0] = -0.25 - betas / 2
    mats[:, 1, 1] = 0.25 + betas / 2
    mats[:, 0, 1] = a12
    mats[:, 1, 0] = -0.25 * (betas + betas ** 2) / a12
    return ResidueMatrixSet(mats, np.asarray(points, dtype=complex))


def build_matrices(om: OmegaDifferential) -> tuple[BetaSet, ResidueMatrixSet]:
    """Beta coefficients and residue matrices at every finite branch point."""
    fr = om.frame
    pts = fr.branch_points
    Q = npoly.polyfromroots(om.q)
    om_inf = eval_infinity(om)
    betas = np.empty(pts.size, dtype=complex)
    a12 = np.empty(pts.size, dtype=complex)
    for n, un in enumerate(pts):
        phin = eval_phi_ramification(fr, n)
        omn = eval_ramification(om, n)
        a12[n] = 0.25 * omn * phin * npoly.polyval(un, Q)
        betas[n] = 0.25 * omn * om.v_basis_branch(n).sum() - 0.5 * om_inf * a12[n]
    return BetaSet(betas), assemble(betas, a12, pts)


def elliptic_matrices(om: OmegaDifferential) -> tuple[BetaSet, ResidueMatrixSet]:
    """Genus-one formulas written through Omega(P_i)/phi(P_i) and y0 directly."""
    fr = om.frame
    x = fr.config.points[2]
    y0 = om.q[0]
    r = [eval_ramification(om, n) / eval_phi_ramification(fr, n) for n in range(3)]
    pref = np.array([-y0 / x, (y0 - 1) / (x - 1), (x - y0) / (x * (x - 1))])
    rr = np.array(r)
    return BetaSet(pref * rr ** 2), assemble(pref * rr ** 2, pref * rr, fr.branch_points)


def a_of_u(rs: ResidueMatrixSet, u: complex) -> np.ndarray:
    d = u - rs.points
    if np.min(np.abs(d)) < 1e-14 * (1 + abs(u)):
        raise EvaluationAtPole("u coincides with a branch point")
    return np.einsum("n,nij->ij", 1.0 / d, rs.matrices)


def schlesinger_rhs(rs: ResidueMatrixSet, j: int, k: int) -> np.ndarray:
    """Right-hand side for dA^(j)/du_k."""
    A = rs.matrices
    u = rs.points
    if j != k:
        return (A[k] @ A[j] - A[j] @ A[k]) / (u[k] - u[j])
    out = np.zeros((2, 2), dtype=complex)
    for i in range(len(u)):
        if i != k:
            out -= (A[k] @ A[i] - A[i] @ A[k]) / (u[k] - u[i])
    return out


@dataclass(frozen=True)
class Pipeline:
    """Everything derived from one curve and one set of lattice coordinates."""

    frame: CurveFrame
    divisor: Divisor
    omega: OmegaDifferential
    betas: BetaSet
    residues: ResidueMatrixSet


def run_pipeline(config: BranchConfiguration, coords: LatticeCoordinates,
                 quad: QuadratureSpec | None = None, guess: Divisor | None = None,
                 seed: int = 0) -> Pipeline:
    frame = build_frame(config, quad=quad)
    divisor = invert(frame, coords, guess=guess, seed=seed)
    om = build_omega(frame, divisor, coords)
    betas, rs = build_matrices(om)
    return Pipeline(frame, divisor, om, betas, rs)


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-8))


def fd_derivatives(base: Pipeline, coords: LatticeCoordinates, k: int, step: float,
                   quad: QuadratureSpec | None = None, beta_shift: float = 0.0) -> np.ndarray:
    """Central differences of all residue matrices with respect to u_k."""
    out = []
    for s in (1, -1):
        cfg = base.frame.config.moved(k, s * step)
        p = run_pipeline(cfg, coords, quad=quad, guess=base.divisor)
        mats = p.residues.matrices.copy()
        if beta_shift:
            b = p.betas.betas.copy()
            b[0] += beta_shift
            mats = assemble(b, p.residues.a12, p.residues.points).matrices
        out.append(mats)
    return (out[0] - out[1]) / (2 * step)


def verify_schlesinger(config: BranchConfiguration, coords: LatticeCoordinates, step: float | None = None,
                       quad: QuadratureSpec | None = None, threads: int = 1,
                       beta_shift: float = 0.0) -> dict:
    """Compare finite-difference dA^(j)/du_k with the Schlesinger right-hand side.

    Returns a report with a relative residual for every pair (j, k).
    ``beta_shift`` perturbs beta_1 in every rebuilt set (sensitivity control).
    """
    quad = quad or QuadratureSpec(target_tolerance=1e-13)
    base = run_pipeline(config, coords, quad=quad)
    if beta_shift:
        b = base.betas.betas.copy()
        b[0] += beta_shift
        rs = assemble(b, base.residues.a12, base.residues.points)
    else:
        rs = base.residues
    if step is None:
        step = 1e-5 * config.min_gap
    n = len(config.points)

    def work(k):
        return k, fd_derivatives(base, coords, k, step, quad, beta_shift)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            derivs = dict(ex.map(work, range(n)))
    else:
        derivs = dict(map(work, range(n)))
    pairs = {}
    for k in range(n):
        for j in range(n):
            pairs[(j, k)] = _relative(derivs[k][j], schlesinger_rhs(rs, j, k))
    return {"step": step, "pairs": pairs, "max": max(pairs.values()),
            "sum_rules": base.residues.sum_rules(), "pipeline": base}


def richardson_ratio(config: BranchConfiguration, coords: LatticeCoordinates, step: float,
                     quad: QuadratureSpec | None = None, k: int | None = None) -> float:
    """Ratio of Schlesinger residuals at ``step`` and ``step/2``.

    Central differences make the residual O(step^2), so the ratio is about 4
    as long as the step is large enough for truncation to dominate noise.
    """
    quad = quad or QuadratureSpec(target_tolerance=1e-13)
    base = run_pipeline(config, coords, quad=quad)
    n = len(config.points)
    ks = range(n) if k is None else [k]
    res = []
    for h in (step, step / 2):
        worst = 0.0
        for kk in ks:
            d = fd_derivatives(base, coords, kk, h, quad)
            for j in range(n):
                worst = max(worst, float(np.abs(d[j] - schlesinger_rhs(base.residues, j, kk)).max()))
        res.append(worst)
    return res[0] / res[1]


# genus-one identities ---------------------------------------------------------

def elliptic_identities(om: OmegaDifferential, step: float = 1e-5) -> dict[str, float]:
    """Residuals of the genus-one relations among Omega, phi and y0."""
    fr = om.frame
    x = fr.config.points[2]
    y0 = om.q[0]
    phiQ = 1.0 / om.divisor.points[0].v
    r = [eval_ramification(om, n) / eval_phi_ramification(fr, n) for n in range(3)]
    out = {
        "0x": abs(r[0] - r[2] - phiQ * x * (y0 - 1)),
        "1x": abs(r[1] - r[2] - phiQ * y0 * (x - 1)),
        "01": abs(r[0] - r[1] - phiQ * (y0 - x)),
    }
    out["closure"] = abs((r[0] - r[2]) - (r[1] - r[2]) - (r[0] - r[1]))
    # derivative of Omega at P_0 and P_1 along x
    wx = fr.omega_branch(2)[0]
    Ox = eval_ramification(om, 2)
    fd = {}
    for s in (1, -1):
        f2 = build_frame(fr.config.moved(2, s * step), quad=fr.quad)
        d2 = track(fr, om.divisor, f2, om.coords)
        o2 = build_omega(f2, d2, om.coords)
        fd[s] = [eval_ramification(o2, n) for n in range(2)]
    for i, ui in ((0, 0.0), (1, 1.0)):
        num = (fd[1][i] - fd[-1][i]) / (2 * step)
        ana = 0.5 * Ox * wx / fr.omega_branch(i)[0] * (y0 - x) / ((x - ui) * (y0 - ui))
        out[f"dOmega_P{i}"] = abs(num - ana) / abs(ana)
    return {k: float(v) for k, v in out.items()}


def omega_variation_residual(om: OmegaDifferential, P: SurfacePoint, step: float = 1e-5) -> float:
    """Relative mismatch of d Omega(P)/dx at fixed u(P) against its W-based expression.

    The expression is Omega(P_x) W(P, P_x)/2 + (W(P, Q0) - W(P, Q0*)) dy0/dx.  The
    bracket is the derivative in y0 of the normalised third-kind differential
    with poles at Q0, Q0*, taken by central differences from its closed form.
    """
    fr = om.frame
    Q0 = om.divisor.points[0]
    y0 = Q0.u
    wP = fr.omega(P)[0]

    def third_kind(y):
        # v continued from Q0 so the sheet stays fixed
        vy = Q0.sheet * fr.v_plus(y)
        if abs(vy - Q0.v) > abs(vy + Q0.v):
            vy = -vy
        I = fr.a_pole_integrals(y)[0]
        return wP * (fr.I0 * vy / (P.u - y) - vy * I)

    h = 1e-4 * (1 + abs(y0))
    wdiff = (third_kind(y0 + h) - third_kind(y0 - h)) / (2 * h)
    rhs = 0.5 * eval_ramification(om, 2) * eval_W_ramification(fr, P, 2) + wdiff * dy0_dx(om)
    vals = {}
    for s in (1, -1):
        f2 = build_frame(fr.config.moved(2, s * step), quad=fr.quad)
        o2 = build_omega(f2, track(fr, om.divisor, f2, om.coords), om.coords)
        P2 = f2.point(P.u, P.sheet)
        if abs(P2.v - P.v) > abs(P2.v + P.v):
            P2 = P2.star()
        vals[s] = eval_regular(o2, P2)
    lhs = (vals[1] - vals[-1]) / (2 * step)
    return float(abs(lhs - rhs) / abs(rhs))


def remark_beta_identity(om: OmegaDifferential) -> float:
    """|-y0 Omega(P_0)^2 / 4 - beta_1| with beta_1 from the Omega/phi form."""
    betas, _ = elliptic_matrices(om)
    return float(abs(-om.q[0] * eval_ramification(om, 0) ** 2 / 4 - betas.betas[0]))


# Garnier data ----------------------------------------------------------------------

@dataclass(frozen=True)
class GarnierOutput:
    z: np.ndarray
    momenta_printed: np.ndarray
    momenta_full: np.ndarray
    p1_poles: np.ndarray
    p1_residues: np.ndarray
    residues: ResidueMatrixSet = field(repr=False)

    def p1(self, u: complex) -> complex:
        return complex(np.sum(self.p1_residues / (u - self.p1_poles)))

    def p2(self, u: complex) -> complex:
        """det A - dA11/du + A11 d ln A12/du, from exact partial fractions."""
        rs = self.residues
        d = u - rs.points
        A = a_of_u(rs, u)
        dA11 = -np.sum(rs.a11 / d ** 2)
        return complex(np.linalg.det(A) - dA11 - A[0, 0] * self.p1(u))


def garnier_outputs(om: OmegaDifferential, rs: ResidueMatrixSet | None = None,
                    betas: BetaSet | None = None) -> GarnierOutput:
    """Zeros z_i, conjugate momenta under both index readings, and p1 data.

    The printed index range runs over the first 2g - 1 branch points; the
    full range runs over all 2g + 1.
    """
    if rs is None or betas is None:
        betas, rs = build_matrices(om)
    try:
        z = find_zeros(om, strict=True)
    except MultipleZeroDetected as exc:
        raise DegenerateZeros(str(exc)) from None
    u = rs.points
    b = betas.betas
    m = 2 * om.genus - 1
    printed = np.array([0.25 * np.sum((1 + 2 * b[:m]) / (u[:m] - zk)) for zk in z])
    full = np.array([0.25 * np.sum((1 + 2 * b) / (u - zk)) for zk in z])
    # A12(u) = N(u) / prod(u - u_n): simple zeros at z (residue of -dlog is -1),
    # simple poles at u_n (residue +1)
    poles = np.concatenate([u, z])
    res = np.concatenate([np.ones(u.size), -np.ones(z.size)])
    return GarnierOutput(z, printed, full, poles, res, rs)


def a12_function(om: OmegaDifferential, u) -> np.ndarray:
    """A_12(u) = (Omega/phi) prod(u - q_a) / prod(u - u_n)."""
    u = np.asarray(u, dtype=complex)
    return npoly.polyval(u, om.numerator) / npoly.polyval(u, npoly.polyfromroots(om.frame.branch_points))
