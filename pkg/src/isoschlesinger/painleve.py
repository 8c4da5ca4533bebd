"""Painleve VI: Okamoto map, finite-difference residuals and grid solutions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curve_core import CurveFrame, elliptic_frame
from .divisor_inversion import Divisor, LatticeCoordinates, invert
from .errors import ConfigError, GridTooCoarse, OkamotoSingularity
from .omega_diff import build_omega, dy0_dx, find_zeros
from .quadrature import QuadratureSpec


@dataclass(frozen=True)
class PviParameters:
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def __iter__(self):
        return iter((self.alpha, self.beta, self.gamma, self.delta))


PICARD = PviParameters(0.0, 0.0, 0.0, 0.5)
QUARTER_EIGEN = PviParameters(1 / 8, -1 / 8, 1 / 8, 3 / 8)


@dataclass
class SolutionSample:
    """Solution values on an x-grid; excluded points carry NaN."""

    x: np.ndarray
    y: np.ndarray
    y0: np.ndarray
    y_okamoto: np.ndarray = None
    dy0: np.ndarray = None
    tags: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=complex)
        if np.all(np.abs(self.x.imag) == 0):
            xr = self.x.real
            if np.any(np.diff(xr) <= 0):
                raise ConfigError("real grids must be strictly increasing")
        if np.any(np.abs(self.x) < 1e-6) or np.any(np.abs(self.x - 1) < 1e-6):
            raise ConfigError("grid points must stay away from 0 and 1")


def okamoto_transform(y0: complex, dy0_dx: complex, x: complex) -> complex:
    """Map the Picard solution and its derivative to the (1/8, -1/8, 1/8, 3/8) solution."""
    den = x * (x - 1) * dy0_dx - y0 * (y0 - 1)
    scale = abs(x * (x - 1) * dy0_dx) + abs(y0 * (y0 - 1)) + 1e-300
    if abs(den) <= 1e-12 * scale or abs(y0 * (y0 - 1) * (y0 - x)) <= 1e-14 * (1 + abs(y0)) ** 3:
        raise OkamotoSingularity(f"Okamoto map degenerates at x={x}, y0={y0}")
    return y0 + y0 * (y0 - 1) * (y0 - x) / den


def pvi_rhs(x, y, yp, p: PviParameters):
    a, b, c, d = p
    first = 0.5 * (1 / y + 1 / (y - 1) + 1 / (y - x)) * yp ** 2
    second = -(1 / x + 1 / (x - 1) + 1 / (y - x)) * yp
    third = y * (y - 1) * (y - x) / (x ** 2 * (x - 1) ** 2) * (
        a + b * x / y ** 2 + c * (x - 1) / (y - 1) ** 2 + d * x * (x - 1) / (y - x) ** 2)
    return first + second + third


_D1 = np.array([1, -8, 0, 8, -1]) / 12.0
_D2 = np.array([-1, 16, -30, 16, -1]) / 12.0


def pvi_residual(sample: SolutionSample, params: PviParameters, which: str = "y") -> np.ndarray:
    """|y'' - RHS| at grid points that support a centred five-point stencil.

    Other points, and points whose stencil touches an excluded value, get NaN.
    """
    x = sample.x
    y = getattr(sample, which)
    if x.size < 5:
        raise GridTooCoarse("at least five grid points are needed")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=1e-15):
        raise GridTooCoarse("pvi_residual needs a uniform grid")
    h = h[0]
    out = np.full(x.size, np.nan)
    for i in range(2, x.size - 2):
        win = y[i - 2:i + 3]
        if not np.all(np.isfinite(win)):
            continue
        yp = _D1 @ win / h
        ypp = _D2 @ win / h ** 2
        out[i] = abs(ypp - pvi_rhs(x[i], y[i], yp, params))
    return out


def _point(frame: CurveFrame, coords: LatticeCoordinates, guess: Divisor | None, seed: int):
    D = invert(frame, coords, guess=guess, seed=seed)
    om = build_omega(frame, D, coords)
    y = find_zeros(om)[0]
    y0 = D.q[0]
    d0 = dy0_dx(om)
    return D, om, y0, y, d0


def solve_grid(xs: Sequence[complex], coords: LatticeCoordinates, quad: QuadratureSpec | None = None,
               seed: int = 0, tags: dict | None = None, exclusion_tol: float = 1e-8) -> SolutionSample:
    """Picard y0, Omega-zero y and Okamoto y along a grid, by continuation.

    Each point reuses the previous divisor as the Newton guess.  Points
    where y0 approaches 0, 1 or x are skipped and listed in ``excluded``.
    """
    xs = np.asarray(xs, dtype=complex)
    quad = quad or QuadratureSpec()
    n = xs.size
    y = np.full(n, np.nan, dtype=complex)
    y0 = np.full(n, np.nan, dtype=complex)
    yo = np.full(n, np.nan, dtype=complex)
    d0 = np.full(n, np.nan, dtype=complex)
    excluded = []
    guess = None
    for i, x in enumerate(xs):
        frame = elliptic_frame(x, quad=quad)
        D, om, a, b, c = _point(frame, coords, guess, seed)
        guess = D
        if min(abs(a), abs(a - 1), abs(a - x)) < exclusion_tol:
            excluded.append((complex(x), "y0 near a branch point"))
            continue
        y0[i], y[i], d0[i] = a, b, c
        try:
            yo[i] = okamoto_transform(a, c, x)
        except OkamotoSingularity:
            excluded.append((complex(x), "Okamoto denominator vanishes"))
    return SolutionSample(xs, y, y0, yo, d0, dict(tags or {}), excluded)


def hitchin_case(xs: Sequence[complex], m: int, n: int, k: int, quad: QuadratureSpec | None = None,
                 seed: int = 0) -> SolutionSample:
    """Rational constants c1 = m/k, c2 = n/k (a point of order k)."""
    if k < 3:
        raise ConfigError("the order k must be at least 3")
    coords = LatticeCoordinates.of(m / k, n / k)
    return solve_grid(xs, coords, quad=quad, seed=seed,
                      tags={"kind": "hitchin-rational", "m": m, "n": n, "k": k})


def torsion_defect(sample: SolutionSample, k: int, quad: QuadratureSpec | None = None) -> float:
    """max over the grid of the lattice distance of k * Abel(Q0)."""
    from .curve_core import abel_map
    worst = 0.0
    for x, q in zip(sample.x, sample.y0):
        if not np.isfinite(q):
            continue
        fr = elliptic_frame(x, quad=quad)
        best = min(fr.lattice_distance(k * abel_map(fr, fr.point(q, s))[0]) for s in (1, -1))
        worst = max(worst, best)
    return worst


def default_grid(x_min: float = 0.2, x_max: float = 0.8, points: int = 601) -> np.ndarray:
    return np.linspace(x_min, x_max, points)
