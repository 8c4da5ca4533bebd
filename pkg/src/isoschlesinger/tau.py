"""Theta functions with characteristics and the genus-one tau function."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curve_core import elliptic_frame
from .divisor_inversion import LatticeCoordinates, invert
from .errors import ConfigError, HalfIntegerCharacteristic
from .omega_diff import build_omega, eval_infinity
from .painleve import _D1
from .quadrature import QuadratureSpec
from .schlesinger import build_matrices


@dataclass(frozen=True)
class ThetaContext:
    mu: complex

    def __post_init__(self) -> None:
        if not complex(self.mu).imag > 0:
            raise ConfigError("theta needs Im mu > 0")

    @property
    def nome(self) -> complex:
        return complex(np.exp(1j * np.pi * self.mu))

    def terms(self, p: float, z: complex) -> np.ndarray:
        """Summation range whose omitted tail is below 1e-17 of the peak term."""
        im = complex(self.mu).imag
        centre = -complex(z).imag / im - p
        width = np.sqrt(45.0 / (np.pi * im)) + 2
        return np.arange(np.floor(centre - width), np.ceil(centre + width) + 1)


def theta_char(p, q, z, ctx: ThetaContext) -> complex:
    """sum_n exp(pi i (n+p)^2 mu + 2 pi i (n+p)(z+q))."""
    n = ctx.terms(float(np.real(p)), z) + p
    return complex(np.exp(1j * np.pi * n * n * ctx.mu + 2j * np.pi * n * (z + q)).sum())


def theta_char_dz(p, q, z, ctx: ThetaContext, order: int = 1) -> complex:
    n = ctx.terms(float(np.real(p)), z) + p
    return complex(((2j * np.pi * n) ** order
                    * np.exp(1j * np.pi * n * n * ctx.mu + 2j * np.pi * n * (z + q))).sum())


def theta1(z, ctx: ThetaContext) -> complex:
    return -theta_char(0.5, 0.5, z, ctx)


def heat_residual(z: complex, mu: complex, h: float = 1e-3) -> float:
    """Relative mismatch of theta1_zz and 4 pi i d theta1/d mu by finite differences."""
    ctx = ThetaContext(mu)
    c4 = np.array([1, -8, 0, 8, -1]) / 12.0
    c2 = np.array([-1, 16, -30, 16, -1]) / 12.0
    off = np.arange(-2, 3)
    fz = np.array([theta1(z + k * h, ctx) for k in off])
    fm = np.array([theta1(z, ThetaContext(mu + k * h)) for k in off])
    lhs = c2 @ fz / h ** 2
    rhs = 4j * np.pi * (c4 @ fm) / h
    return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))


def quasi_periodicity_residual(p, q, z, ctx: ThetaContext) -> float:
    t = theta_char(p, q, z, ctx)
    r1 = theta_char(p, q, z + 1, ctx) - np.exp(2j * np.pi * p) * t
    r2 = theta_char(p, q, z + ctx.mu, ctx) - np.exp(-1j * np.pi * ctx.mu - 2j * np.pi * (z + q)) * t
    return float(max(abs(r1), abs(r2)) / max(abs(t), 1e-300))


def characteristic_shift_residual(c1: complex, c2: complex, mu: complex) -> float:
    """theta[c2+1/2, c1+1/2](0) against theta1(-c1-c2 mu) times its exponential factor."""
    ctx = ThetaContext(mu)
    lhs = theta_char(c2 + 0.5, c1 + 0.5, 0.0, ctx)
    rhs = theta1(-c1 - c2 * mu, ctx) * np.exp(1j * np.pi * c2 ** 2 * mu + 2j * np.pi * c1 * c2
                                               + 1j * np.pi * c2)
    # theta_3(0) sets the scale where the left side vanishes (half-integer c)
    return float(abs(lhs - rhs) / max(abs(lhs), abs(theta_char(0.0, 0.0, 0.0, ctx))))


def _check_characteristic(coords: LatticeCoordinates) -> None:
    c1, c2 = coords.c1[0], coords.c2[0]
    if all(abs(c.imag) < 1e-12 and abs(2 * c.real - round(2 * c.real)) < 1e-12 for c in (c1, c2)):
        raise HalfIntegerCharacteristic("[c1, c2] is a half-integer characteristic")


def tau_raw(x: complex, coords: LatticeCoordinates, quad: QuadratureSpec | None = None) -> tuple[complex, complex, complex]:
    """(theta constant, x(x-1), I0) before the fractional powers are taken."""
    fr = elliptic_frame(x, quad=quad)
    ctx = ThetaContext(fr.mu)
    th = theta_char(coords.c2[0] + 0.5, coords.c1[0] + 0.5, 0.0, ctx)
    return th, complex(x * (x - 1)), fr.I0


def tau_value(x: complex, coords: LatticeCoordinates, quad: QuadratureSpec | None = None) -> complex:
    """theta[c2+1/2, c1+1/2](0) / ((x(x-1))^(1/8) sqrt(I0)), principal branches."""
    _check_characteristic(coords)
    th, xx, I0 = tau_raw(x, coords, quad)
    return complex(th / (xx ** 0.125 * np.sqrt(I0)))


def tau_on_grid(xs: Sequence[complex], coords: LatticeCoordinates,
                quad: QuadratureSpec | None = None) -> np.ndarray:
    """tau along a grid with the 1/8 and 1/2 powers continued along the path."""
    _check_characteristic(coords)
    raw = [tau_raw(x, coords, quad) for x in xs]
    th = np.array([r[0] for r in raw])
    lxx = np.log(np.array([r[1] for r in raw]))
    lI0 = np.log(np.array([r[2] for r in raw]))
    lxx = lxx.real + 1j * np.unwrap(lxx.imag)
    lI0 = lI0.real + 1j * np.unwrap(lI0.imag)
    return th * np.exp(-lxx / 8 - lI0 / 2)


def tau_log_derivative_target(x: complex, coords: LatticeCoordinates, guess=None,
                              quad: QuadratureSpec | None = None):
    """tr(A1 A3)/x + tr(A2 A3)/(x-1) from the residue matrices at x."""
    fr = elliptic_frame(x, quad=quad)
    D = invert(fr, coords, guess=guess)
    om = build_omega(fr, D, coords)
    _, rs = build_matrices(om)
    A = rs.matrices
    val = np.trace(A[0] @ A[2]) / x + np.trace(A[1] @ A[2]) / (x - 1)
    return complex(val), D


def tau_consistency(xs: Sequence[complex], coords: LatticeCoordinates,
                    quad: QuadratureSpec | None = None, scale: complex = 1.0) -> dict:
    """Finite-difference d ln tau/dx against the residue-matrix expression.

    ``scale`` multiplies tau (the check must not see it).
    """
    xs = np.asarray(xs, dtype=complex)
    h = xs[1] - xs[0]
    tau = scale * tau_on_grid(xs, coords, quad)
    ltau = np.log(tau)
    ltau = ltau.real + 1j * np.unwrap(ltau.imag)
    res = np.full(xs.size, np.nan)
    guess = None
    targets = np.full(xs.size, np.nan, dtype=complex)
    for i in range(2, xs.size - 2):
        t, guess = tau_log_derivative_target(xs[i], coords, guess, quad)
        targets[i] = t
        fd = _D1 @ ltau[i - 2:i + 3] / h
        res[i] = abs(fd - t) / max(abs(t), 1e-12)
    return {"residuals": res, "max": float(np.nanmax(res)), "tau": tau,
            "min_abs_tau": float(np.abs(tau).min()), "targets": targets}


def continuity_jumps(values: np.ndarray, factor: float = 10.0) -> int:
    """Number of steps exceeding ``factor`` times the median neighbouring step."""
    d = np.abs(np.diff(values))
    if d.size < 3:
        return 0
    local = np.maximum.reduce([np.roll(d, 1), np.roll(d, -1)])
    med = np.median(d)
    return int(np.sum(d > factor * np.maximum(local, med)))


def theta_infinity_residual(x: complex, coords: LatticeCoordinates, step: float = 1e-5,
                            quad: QuadratureSpec | None = None) -> float:
    """Relative mismatch in the identity linking Omega(P_inf)^2 with theta1 derivatives.

    The right-hand side's x-derivative is taken by central differences.
    """
    fr = elliptic_frame(x, quad=quad)
    D = invert(fr, coords)
    om = build_omega(fr, D, coords)
    c1, c2 = om.coords_eff.c1[0], om.coords_eff.c2[0]
    wx = fr.omega_branch(2)[0]
    winf = fr.omega_infinity()[0]
    lhs = wx ** 2 / 16 * (eval_infinity(om) / winf) ** 2

    ref = [fr.I0, theta1(-c1 - c2 * fr.mu, ThetaContext(fr.mu))]

    def F(xx):
        # logs are taken relative to the centre value so the stencil stays on one branch
        f = elliptic_frame(xx, quad=quad)
        th = theta1(-c1 - c2 * f.mu, ThetaContext(f.mu))
        return 1j * np.pi * c2 ** 2 * f.mu - 0.5 * np.log(f.I0 / ref[0]) + np.log(th / ref[1])

    vals = [F(x + k * step) for k in (-2, -1, 0, 1, 2)]
    deriv = _D1 @ np.array(vals) / step
    rhs = (D.q[0] - x) / (4 * x * (x - 1)) + deriv
    return float(abs(lhs - rhs) / max(abs(lhs), 1e-300))
