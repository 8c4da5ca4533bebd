"""Jacobi inversion: the divisor whose Abel image is c1 + B c2."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curve_core import (RAY_DIRECTION, CurveFrame, SurfacePoint, _ray_hits_segment,
                         _segments_cross, abel_integral)
from .errors import (ConfigError, DegenerateDivisor, HalfIntegerInput, NewtonDivergence, PathThroughBranchPoint,
                     QuadratureDivergence)

SEED_COUNT = 64
MAX_NEWTON = 50
DIVISOR_TOL = 1e-8


@dataclass(frozen=True)
class LatticeCoordinates:
    """Constant vectors (c1, c2); the Abel image of the divisor is c1 + B c2."""

    c1: tuple[complex, ...]
    c2: tuple[complex, ...]

    def __post_init__(self) -> None:
        c1 = tuple(complex(c) for c in np.atleast_1d(self.c1))
        c2 = tuple(complex(c) for c in np.atleast_1d(self.c2))
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)
        if len(c1) != len(c2) or not c1:
            raise ConfigError("c1 and c2 must be non-empty vectors of equal length")
        if not np.all(np.isfinite(np.array(c1 + c2))):
            raise ConfigError("lattice coordinates must be finite")
        if len(c1) == 1 and _half_integer(c1[0]) and _half_integer(c2[0]):
            raise HalfIntegerInput("(c1, c2) is a pair of half-integers")

    @classmethod
    def of(cls, c1, c2) -> "LatticeCoordinates":
        return cls(tuple(np.atleast_1d(c1)), tuple(np.atleast_1d(c2)))

    @property
    def genus(self) -> int:
        return len(self.c1)

    @property
    def c1v(self) -> np.ndarray:
        return np.array(self.c1, dtype=complex)

    @property
    def c2v(self) -> np.ndarray:
        return np.array(self.c2, dtype=complex)

    def z0(self, frame: CurveFrame) -> np.ndarray:
        return self.c1v + frame.RiemannB @ self.c2v

    def shifted(self, m, n) -> "LatticeCoordinates":
        return LatticeCoordinates.of(self.c1v + np.asarray(m), self.c2v + np.asarray(n))


def _half_integer(c: complex, tol: float = 1e-12) -> bool:
    return abs(c.imag) < tol and abs(2 * c.real - round(2 * c.real)) < tol


@dataclass(frozen=True)
class Divisor:
    """Positive divisor Q_1 + ... + Q_g, order irrelevant."""

    points: tuple[SurfacePoint, ...]

    @property
    def q(self) -> np.ndarray:
        return np.array([p.u for p in self.points], dtype=complex)

    @property
    def sheets(self) -> np.ndarray:
        return np.array([p.sheet for p in self.points])

    def sorted(self) -> "Divisor":
        return Divisor(tuple(sorted(self.points, key=lambda p: (p.u.real, p.u.imag))))

    def check(self, frame: CurveFrame, tol: float = DIVISOR_TOL) -> None:
        """Raise DegenerateDivisor unless the admissibility conditions hold."""
        scale = max(1.0, np.abs(frame.branch_points).max())
        for i, P in enumerate(self.points):
            if np.min(np.abs(frame.branch_points - P.u)) < tol * scale:
                raise DegenerateDivisor(f"Q_{i + 1} sits on a branch point")
            for j in range(i):
                R = self.points[j]
                if abs(P.u - R.u) < tol * scale:
                    if P.sheet == R.sheet:
                        raise DegenerateDivisor(f"Q_{j + 1} and Q_{i + 1} coincide")
                    raise DegenerateDivisor(f"Q_{j + 1} and Q_{i + 1} are exchanged by the involution")


def abel_sum(frame: CurveFrame, divisor: Divisor) -> np.ndarray:
    raw = sum(abel_integral(frame, P.u, P.sheet)[0] for P in divisor.points)
    return frame.normalizer @ raw


def _crossings(frame: CurveFrame, p0: complex, p1: complex) -> int:
    pts = frame.config.points
    n = sum(_segments_cross(p0, p1, pts[i], pts[j]) for i, j in frame.cycles.cuts)
    e = pts[frame.cycles.infinite]
    far = e + RAY_DIRECTION * 1e6 * (1 + abs(e) + abs(p0) + abs(p1))
    n += _segments_cross(p0, p1, e, far)
    return int(n)


def _residual(frame, q, sheets, z0):
    D = Divisor(tuple(frame.point(u, s) for u, s in zip(q, sheets)))
    return frame.lattice_reduce(abel_sum(frame, D) - z0), D


def _jacobian(frame, D):
    return np.column_stack([frame.omega(P) for P in D.points])


def _newton(frame: CurveFrame, q, sheets, z0, tol=1e-13):
    q = np.array(q, dtype=complex)
    sheets = np.array(sheets, dtype=int)
    r, D = _residual(frame, q, sheets, z0)
    gap = frame.config.min_gap
    for _ in range(MAX_NEWTON):
        err = np.abs(r).max()
        if err < tol:
            return D, err
        J = _jacobian(frame, D)
        try:
            step = -np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        # keep steps moderate: the map u -> Abel image is only locally invertible
        cap = 0.5 * gap + 0.5 * np.abs(q).max()
        if np.abs(step).max() > cap:
            step *= cap / np.abs(step).max()
        lam = 1.0
        while lam > 1e-4:
            qn = q + lam * step
            sn = sheets.copy()
            for j in range(q.size):
                if _crossings(frame, q[j], qn[j]) % 2:
                    sn[j] = -sn[j]
            if np.min(np.abs(qn[:, None] - frame.branch_points[None, :])) < 1e-14:
                lam *= 0.5
                continue
            try:
                rn, Dn = _residual(frame, qn, sn, z0)
            except (QuadratureDivergence, PathThroughBranchPoint):
                # a trial point too close to a branch point: treat as a rejected step
                lam *= 0.5
                continue
            if np.abs(rn).max() < err or np.abs(rn).max() < tol:
                q, sheets, r, D = qn, sn, rn, Dn
                break
            lam *= 0.5
        else:
            break
    err = np.abs(r).max()
    return D, err


def _seeds(frame: CurveFrame, count: int, rng: np.random.Generator):
    pts = frame.branch_points
    centre = pts.mean()
    radius = max(1.0, np.abs(pts - centre).max())
    g = frame.genus
    for _ in range(count):
        q = centre + radius * (rng.uniform(-1.5, 1.5, g) + 1j * rng.uniform(-1.5, 1.5, g))
        s = rng.choice([-1, 1], size=g)
        yield q, s


def invert(frame: CurveFrame, coords: LatticeCoordinates, guess: Divisor | None = None,
           seed: int = 0, tol: float = 1e-9) -> Divisor:
    """Divisor D with sum of Abel images equal to c1 + B c2 modulo the lattice.

    Without a guess, ``SEED_COUNT`` random divisors are ranked by their
    lattice-reduced residual and Newton is started from the best ones in turn.

    Raises
    ------
    NewtonDivergence
        No start converged to ``tol``.
    DegenerateDivisor
        The converged divisor violates the admissibility conditions.
    """
    if coords.genus != frame.genus:
        raise ConfigError("lattice coordinates do not match the genus")
    z0 = coords.z0(frame)
    starts = []
    if guess is not None:
        starts.append((guess.q, guess.sheets))
    else:
        rng = np.random.default_rng(seed)
        ranked = []
        for q, s in _seeds(frame, SEED_COUNT, rng):
            try:
                r, _ = _residual(frame, q, s, z0)
            except Exception:
                continue
            ranked.append((np.abs(r).max(), q, s))
        ranked.sort(key=lambda t: t[0])
        starts.extend((q, s) for _, q, s in ranked[:12])
    best = None
    for q, s in starts:
        D, err = _newton(frame, q, s, z0)
        if best is None or err < best[1]:
            best = (D, err)
        if err < tol:
            break
    if best is None or best[1] >= tol:
        near = best is not None and np.min(np.abs(best[0].q[:, None] - frame.branch_points[None, :])) < 1e-4
        if near:
            raise DegenerateDivisor("Newton iterates approach a branch point")
        raise NewtonDivergence(f"Jacobi inversion did not converge (residual {best[1] if best else np.inf:.2e})")
    D = best[0]
    D.check(frame)
    return D


def track(frame_old: CurveFrame, divisor_old: Divisor, frame_new: CurveFrame,
          coords: LatticeCoordinates | None = None) -> Divisor:
    """Follow the divisor to a slightly deformed curve keeping (c1, c2) fixed."""
    if coords is None:
        coords = coords_from_divisor(frame_old, divisor_old)
    return invert(frame_new, coords, guess=divisor_old)


def coords_from_divisor(frame: CurveFrame, divisor: Divisor) -> LatticeCoordinates:
    """Real representative (c1, c2) of the Abel image of ``divisor``."""
    m, n = frame.lattice_split(abel_sum(frame, divisor))
    return LatticeCoordinates.of(m, n)


def divisor_from_points(frame: CurveFrame, us: Sequence[complex], sheets: Sequence[int]) -> Divisor:
    return Divisor(tuple(frame.point(u, s) for u, s in zip(us, sheets)))


def picard_y0(frame: CurveFrame, coords: LatticeCoordinates, guess: Divisor | None = None) -> complex:
    """u-coordinate of the single divisor point for g = 1."""
    if frame.genus != 1:
        raise ConfigError("picard_y0 needs an elliptic curve")
    return complex(invert(frame, coords, guess=guess).q[0])


def same_divisor(a: Divisor, b: Divisor, tol: float = 1e-8) -> bool:
    """Set equality of u-coordinates and sheets up to ``tol``."""
    left = list(zip(a.q, a.sheets))
    for u, s in zip(b.q, b.sheets):
        hit = [i for i, (v, t) in enumerate(left) if abs(u - v) < tol and s == t]
        if not hit:
            return False
        left.pop(hit[0])
    return not left
