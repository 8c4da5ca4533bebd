"""Two-sheeted covers v^2 = prod(u - u_j) of odd degree.

Conventions
-----------
Finite branch points are sorted by (real part, imaginary part) and paired
consecutively into g cuts ``[e_{2k-1}, e_{2k}]``; the last one is joined to
infinity by a ray leaving at angle pi/4 (any direction with positive real part
misses the other cuts because the point is rightmost).

Sheet +1 is the analytic continuation of v from large positive real u with
``v ~ +u**(g + 1/2)``.  ``a_k`` is the counter-clockwise loop hugging the k-th
cut on sheet +1.  ``b_k`` runs on sheet +1 from the right end of cut k above
all branch points down onto the point cut to infinity, and returns on sheet -1
below all branch points.  Written with sheet +1 values both legs are traversed
from the end of cut k to the infinite cut, and the b-period is their sum.

Differentials are evaluated as coefficients of a local parameter: ``u`` at
regular points, ``sqrt(u - u_n)`` at a finite branch point and ``u**(-1/2)``
at infinity.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (ConfigError, DegenerateConfiguration, NotSymplectic,
                     PathThroughBranchPoint, PoleOnContour)
from .quadrature import QuadratureSpec, integrate

RAY_DIRECTION = np.exp(0.25j * np.pi)
_RAY_KAPPA = np.sqrt(-RAY_DIRECTION + 0j)


def csqrt(z):
    return np.sqrt(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class BranchConfiguration:
    """Finite branch points ``u_1 .. u_{2g+1}`` in the caller's order."""

    points: tuple[complex, ...]

    def __post_init__(self) -> None:
        pts = tuple(complex(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        n = len(pts)
        if n < 3 or n % 2 == 0:
            raise ConfigError(f"need 2g+1 >= 3 finite branch points, got {n}")
        if not all(np.isfinite(p.real) and np.isfinite(p.imag) for p in pts):
            raise ConfigError("branch points must be finite")
        if self.min_gap <= 0.0:
            raise ConfigError("branch points must be pairwise distinct")

    @property
    def genus(self) -> int:
        return (len(self.points) - 1) // 2

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    @property
    def min_gap(self) -> float:
        p = np.array(self.points, dtype=complex)
        d = np.abs(p[:, None] - p[None, :])
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())

    def moved(self, index: int, delta: complex) -> "BranchConfiguration":
        pts = list(self.points)
        pts[index] += delta
        return BranchConfiguration(tuple(pts))


def _segments_cross(p0, p1, q0, q1, eps=1e-12) -> bool:
    """Proper intersection test for segments p0p1 and q0q1 (complex numbers)."""
    d1, d2 = p1 - p0, q1 - q0
    den = (d1.conjugate() * d2).imag
    if abs(den) < eps * abs(d1) * abs(d2):
        return False
    w = q0 - p0
    s = (w.conjugate() * d2).imag / den
    t = (w.conjugate() * d1).imag / den
    return eps < s < 1 - eps and eps < t < 1 - eps


def _ray_hits_segment(o, d, q0, q1, eps=1e-12) -> bool:
    far = o + d * 1e6 * (1 + abs(o) + abs(q0) + abs(q1))
    return _segments_cross(o, far, q0, q1, eps)


@dataclass(frozen=True)
class CycleBasis:
    """Cut pairing and the polygonal description of the a- and b-cycles.

    ``cuts`` holds index pairs into the caller's branch-point list;
    ``infinite`` is the index of the point joined to infinity.  ``a_paths``
    stores (midpoint, half-vector) of each cut; ``b_paths`` and
    ``b_lower_paths`` the waypoints of the upper (sheet +1) and lower
    (sheet -1) legs of each b-cycle.
    """

    order: tuple[int, ...]
    cuts: tuple[tuple[int, int], ...]
    infinite: int
    a_paths: tuple[tuple[complex, complex], ...]
    b_paths: tuple[tuple[complex, ...], ...]
    b_lower_paths: tuple[tuple[complex, ...], ...]
    b_sign: float = -1.0

    @classmethod
    def canonical(cls, config: BranchConfiguration) -> "CycleBasis":
        pts = config.points
        g = config.genus
        order = tuple(sorted(range(len(pts)), key=lambda i: (pts[i].real, pts[i].imag)))
        cuts = tuple((order[2 * k], order[2 * k + 1]) for k in range(g))
        inf = order[-1]
        a_paths = tuple((0.5 * (pts[i] + pts[j]), 0.5 * (pts[j] - pts[i])) for i, j in cuts)
        ims = [p.imag for p in pts]
        spread = max(abs(p - q) for p in pts for q in pts)
        top = max(ims) + 0.3 * spread
        bottom = min(ims) - 0.3 * spread
        e = pts[inf]
        upper, lower = [], []
        for _, j in cuts:
            s = pts[j]
            upper.append((s, complex(s.real, top), complex(e.real, top), e))
            lower.append((s, complex(s.real, bottom), complex(e.real, bottom), e))
        basis = cls(order, cuts, inf, a_paths, tuple(upper), tuple(lower))
        basis._check_paths(config)
        return basis

    def _check_paths(self, config: BranchConfiguration) -> None:
        pts = config.points
        segs = [(pts[i], pts[j]) for i, j in self.cuts]
        for cut_a, cut_b in [(s, t) for n, s in enumerate(segs) for t in segs[n + 1:]]:
            if _segments_cross(cut_a[0], cut_a[1], cut_b[0], cut_b[1]):
                raise DegenerateConfiguration("canonical cuts intersect")
        e = pts[self.infinite]
        for q0, q1 in segs:
            if _ray_hits_segment(e, RAY_DIRECTION, q0, q1):
                raise DegenerateConfiguration("cut to infinity meets a finite cut")
        for path in self.b_paths + self.b_lower_paths:
            for p0, p1 in zip(path[:-1], path[1:]):
                if abs(p1 - p0) == 0:
                    continue
                for q0, q1 in segs:
                    if _segments_cross(p0, p1, q0, q1):
                        raise PathThroughBranchPoint("b-path crosses a cut; "
                                                     "branch points share a real part")
                for k, p in enumerate(pts):
                    if p in (path[0], path[-1]):
                        continue
                    if _point_segment_distance(p, p0, p1) < 1e-9 * (1 + abs(p)):
                        raise PathThroughBranchPoint(f"b-path passes through branch point {k}")

    @property
    def genus(self) -> int:
        return len(self.cuts)

    def intersection_matrix(self, config: BranchConfiguration) -> np.ndarray:
        """Signed intersection numbers in the (a, b) ordering.

        a-cycles are disjoint loops around disjoint cuts, b-cycles are nested
        arcs ending on the same cut; so only ``a_k . b_j`` needs computing,
        which is the signed number of exits of the sheet +1 b-leg from a thin
        ellipse around cut k.
        """
        g = self.genus
        J = np.zeros((2 * g, 2 * g), dtype=int)
        for k, (m, h) in enumerate(self.a_paths):
            for j, path in enumerate(self.b_paths):
                pts = _densify(path, 400)
                inside = np.real(np.arccosh((pts - m) / h)) < 1e-3
                # the leg starts on the cut itself when j == k
                inside[0] = abs(pts[0] - (m + h)) < 1e-12 or abs(pts[0] - (m - h)) < 1e-12
                exits = int(np.sum(inside[:-1] & ~inside[1:]) - np.sum(~inside[:-1] & inside[1:]))
                J[k, g + j] = exits
                J[g + j, k] = -exits
        return J


def _densify(path, n):
    out = []
    for p0, p1 in zip(path[:-1], path[1:]):
        out.append(p0 + (p1 - p0) * np.linspace(0.0, 1.0, n, endpoint=False))
    out.append(np.array([path[-1]]))
    return np.concatenate(out)


def _point_segment_distance(p, a, b) -> float:
    d = b - a
    if d == 0:
        return abs(p - a)
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))


class _Sqrt:
    """Sheet +1 square root v_+(u), factorised cut by cut.

    Every call accepts an optional ``base``; the argument is then the offset
    ``u - base``.  Differences to branch points are formed as
    ``(base - p) + offset`` so that they stay accurate when ``base`` is itself
    a branch point and the offset is tiny.
    """

    def __init__(self, config: BranchConfiguration, cycles: CycleBasis):
        pts = config.points
        self.left = np.array([pts[i] for i, _ in cycles.cuts], dtype=complex)
        self.right = np.array([pts[j] for _, j in cycles.cuts], dtype=complex)
        self.mids = 0.5 * (self.left + self.right)
        self.e = pts[cycles.infinite]

    def cut_factor(self, k, u, base=0.0):
        u = np.asarray(u, dtype=complex)
        w = (base - self.mids[k]) + u
        d1 = (base - self.left[k]) + u
        d2 = (base - self.right[k]) + u
        # w sqrt(1 - h^2/w^2) with the radicand built from end-point differences
        with np.errstate(divide="ignore", invalid="ignore"):
            out = w * csqrt((d1 / w) * (d2 / w))
        # the midpoint lies on the cut itself; either boundary value will do
        return np.where(w == 0, csqrt(d1 * d2), out)

    def ray_factor(self, u, base=0.0):
        u = np.asarray(u, dtype=complex)
        return _RAY_KAPPA * csqrt(-((base - self.e) + u) * np.conj(RAY_DIRECTION))

    def __call__(self, u, skip: int | None = None, base: complex = 0.0):
        out = self.ray_factor(u, base)
        for k in range(len(self.mids)):
            if k != skip:
                out = out * self.cut_factor(k, u, base)
        return out


@dataclass(frozen=True)
class SurfacePoint:
    """A point (u, v) of the curve; ``sheet`` is +1 or -1 relative to v_+."""

    u: complex
    sheet: int
    v: complex

    def star(self) -> "SurfacePoint":
        return SurfacePoint(self.u, -self.sheet, -self.v)


@dataclass(frozen=True, eq=False)
class CurveFrame:
    """Curve data with periods of ``u**l du / v`` and the Riemann matrix.

    ``Aper[l, k]`` and ``Bper[l, k]`` are the a_k- and b_k-periods of the
    l-th monomial differential.  ``normalizer`` maps the monomial vector to
    the a-normalised basis ``omega``.
    """

    config: BranchConfiguration
    cycles: CycleBasis
    Aper: np.ndarray
    Bper: np.ndarray
    RiemannB: np.ndarray
    quad: QuadratureSpec
    normalizer: np.ndarray
    _sqrt: _Sqrt = field(repr=False)

    @property
    def genus(self) -> int:
        return self.config.genus

    @property
    def branch_points(self) -> np.ndarray:
        return self.config.array

    # g = 1 shorthands
    @property
    def I0(self) -> complex:
        return complex(self.Aper[0, 0])

    @property
    def mu(self) -> complex:
        return complex(self.RiemannB[0, 0])

    def v_plus(self, u):
        return self._sqrt(u)

    def point(self, u: complex, sheet: int = 1) -> SurfacePoint:
        if sheet not in (1, -1):
            raise ConfigError("sheet must be +1 or -1")
        return SurfacePoint(complex(u), sheet, complex(sheet * self._sqrt(complex(u))))

    def monomials(self, u):
        u = np.asarray(u, dtype=complex)
        return np.stack([u ** l for l in range(self.genus)])

    def omega(self, P: SurfacePoint) -> np.ndarray:
        """Normalised holomorphic differentials at a regular point (param u)."""
        return self.normalizer @ (self.monomials(P.u) / P.v)

    def omega_branch(self, n: int) -> np.ndarray:
        un = self.config.points[n]
        return self.normalizer @ self.monomials(un) * eval_phi_ramification(self, n)

    def omega_infinity(self) -> np.ndarray:
        # only u^{g-1} du/v is non-zero at infinity, with coefficient -2
        return -2.0 * self.normalizer[:, -1]

    def lattice_split(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Real coordinates (m, n) with z = m + B n."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        B = self.RiemannB
        n = np.linalg.solve(B.imag, z.imag)
        m = z.real - B.real @ n
        return m, n

    def lattice_reduce(self, z) -> np.ndarray:
        """Representative of z modulo the lattice spanned by I and B."""
        m, n = self.lattice_split(z)
        return np.asarray(z, dtype=complex) - np.round(m) - self.RiemannB @ np.round(n)

    def lattice_distance(self, z) -> float:
        return float(np.abs(self.lattice_reduce(z)).max())

    # cycle integrals -------------------------------------------------
    def a_integral(self, G: Callable, k: int, pole: complex | None = None,
                   quad: QuadratureSpec | None = None, pole_residue: complex = 1.0) -> np.ndarray:
        """Integral of ``G(u) du / v`` over a_k.

        The loop is collapsed onto the cut, which is exact for integrands
        analytic near the cut.  A pole sitting on an end point of the cut
        (only residue-free poles occur there) is handled on an ellipse kept
        clear of it.  A simple pole close to the cut, where ``G`` has residue
        ``pole_residue``, is subtracted and integrated in closed form.
        """
        quad = quad or self.quad
        m, h = self.cycles.a_paths[k]
        sq = self._sqrt
        if pole is not None:
            w = (pole - m) / h
            rho = float(np.real(np.arccosh(complex(w))))
            if rho < 0.05:
                if min(abs(pole - m - h), abs(pole - m + h)) < 1e-9 * abs(h):
                    return self._a_ellipse(G, k, quad)
                if abs(w.imag) < 1e-13 and abs(w.real) < 1:
                    raise PoleOnContour(f"pole {pole} lies on cut {k}")
                return self._a_near_pole(G, k, complex(pole), complex(pole_residue), quad)

        def f(theta):
            u = m - h * np.cos(theta)
            return 2j * G(u) / sq(u, skip=k)

        return integrate(f, 0.0, np.pi, quad, initial_panels=2)

    def _a_near_pole(self, G, k, pole, res, quad):
        m, h = self.cycles.a_paths[k]
        sq = self._sqrt
        s_pole = sq(pole, skip=k)
        c = (m - pole) / h
        root = np.sqrt(c * c - 1)
        if abs(c + root) < 1:
            root = -root
        # int_0^pi dtheta / (c - cos theta) = pi / sqrt(c^2 - 1)
        singular = 2j * res / s_pole * np.pi / (h * root)

        def f(theta):
            u = m - h * np.cos(theta)
            return 2j * (G(u) / sq(u, skip=k) - res / (s_pole * (u - pole)))

        return integrate(f, 0.0, np.pi, quad, initial_panels=2) + singular

    def _a_ellipse(self, G, k, quad):
        m, h = self.cycles.a_paths[k]
        pts = [p for n, p in enumerate(self.config.points) if n not in self.cycles.cuts[k]]
        e = self.config.points[self.cycles.infinite]
        ray = [e + RAY_DIRECTION * t for t in np.geomspace(1e-3, 1e3, 60) * (1 + abs(h))]
        radii = [np.real(np.arccosh(complex((p - m) / h))) for p in pts + ray]
        rho = min(0.5 * min(radii), 1.0)
        sq = self._sqrt

        def f(theta):
            z = theta - 1j * rho
            u = m - h * np.cos(z)
            du = h * np.sin(z)
            return G(u) * du / sq(u)

        return integrate(f, 0.0, 2 * np.pi, quad, initial_panels=8)

    def b_integral(self, G: Callable, k: int, quad: QuadratureSpec | None = None) -> np.ndarray:
        """Integral of ``G(u) du / v`` over b_k."""
        quad = quad or self.quad
        total = self._leg_integral(G, self.cycles.b_paths[k], quad)
        total = total + self._leg_integral(G, self.cycles.b_lower_paths[k], quad)
        return self.cycles.b_sign * total

    def _leg_integral(self, G, path, quad):
        sq = self._sqrt
        total = 0.0
        last = len(path) - 2
        for i, (p0, p1) in enumerate(zip(path[:-1], path[1:])):
            if abs(p1 - p0) == 0:
                continue
            if i == 0:
                def f(s, p0=p0, p1=p1):
                    du = (p1 - p0) * s * s
                    return G(p0 + du) * 2 * s * (p1 - p0) / sq(du, base=p0)
                total = total + integrate(f, 0.0, 1.0, quad)
            elif i == last:
                def f(s, p0=p0, p1=p1):
                    du = (p0 - p1) * s * s
                    return -G(p1 + du) * 2 * s * (p0 - p1) / sq(du, base=p1)
                total = total + integrate(f, 0.0, 1.0, quad)
            else:
                def f(s, p0=p0, p1=p1):
                    u = p0 + (p1 - p0) * s
                    return G(u) * (p1 - p0) / sq(u)
                total = total + integrate(f, 0.0, 1.0, quad)
        return total

    def a_pole_integrals(self, pole: complex, quad: QuadratureSpec | None = None) -> np.ndarray:
        """Vector over k of the a_k-integrals of du / ((u - pole) v)."""
        return np.array([self.a_integral(lambda u: 1.0 / (u - pole), k, pole=pole, quad=quad)[0]
                         for k in range(self.genus)])

    def b_pole_integrals(self, pole: complex, quad: QuadratureSpec | None = None) -> np.ndarray:
        return np.array([self.b_integral(lambda u: 1.0 / (u - pole), k, quad=quad)[0]
                         for k in range(self.genus)])


def _monomial_stack(g):
    return lambda u: np.stack([np.asarray(u, dtype=complex) ** l for l in range(g)])


def build_frame(config: BranchConfiguration, cycles: CycleBasis | None = None,
                quad: QuadratureSpec | None = None) -> CurveFrame:
    """Compute a- and b-periods of ``u**l du/v`` and the Riemann matrix.

    Raises
    ------
    DegenerateConfiguration
        If the branch points nearly collide or the a-period matrix is too
        badly conditioned to normalise.
    """
    quad = quad or QuadratureSpec()
    cycles = cycles or CycleBasis.canonical(config)
    scale = max(1.0, max(abs(p) for p in config.points))
    if config.min_gap < 1e-8 * scale:
        raise DegenerateConfiguration("branch points too close")
    g = config.genus
    sq = _Sqrt(config, cycles)
    proto = CurveFrame(config, cycles, np.eye(g, dtype=complex), np.eye(g, dtype=complex),
                       np.eye(g, dtype=complex), quad, np.eye(g, dtype=complex), sq)
    G = _monomial_stack(g)
    Aper = np.column_stack([proto.a_integral(G, k) for k in range(g)])
    Bper = np.column_stack([proto.b_integral(G, k) for k in range(g)])
    if np.linalg.cond(Aper) > 1e12:
        raise DegenerateConfiguration("a-period matrix is ill-conditioned")
    normalizer = np.linalg.inv(Aper)
    B = normalizer @ Bper
    return CurveFrame(config, cycles, Aper, Bper, B, quad, normalizer, sq)


def eval_phi_ramification(frame: CurveFrame, n: int) -> complex:
    """``du/v`` at the n-th finite branch point in the parameter sqrt(u - u_n).

    The square root of prod_{j != n}(u_n - u_j) is the principal one.
    """
    pts = frame.config.points
    if not 0 <= n < len(pts):
        raise ConfigError(f"branch index {n} out of range")
    prod = np.prod([pts[n] - p for j, p in enumerate(pts) if j != n])
    return complex(2.0 / csqrt(prod))


def _ray_direction(frame: CurveFrame, u0: complex) -> complex:
    pts = frame.config.points
    segs = [(pts[i], pts[j]) for i, j in frame.cycles.cuts]
    e = pts[frame.cycles.infinite]
    best, best_score = None, -1.0
    for k in range(32):
        d = np.exp(2j * np.pi * (k + 0.5) / 32)
        if any(_ray_hits_segment(u0, d, q0, q1) for q0, q1 in segs):
            continue
        # ray against the cut to infinity
        den = (d.conjugate() * RAY_DIRECTION).imag
        if abs(den) > 1e-14:
            w = e - u0
            s = (w.conjugate() * RAY_DIRECTION).imag / den
            t = (w.conjugate() * d).imag / den
            if s > 1e-12 and t > 1e-12:
                continue
        score = min((_point_segment_distance(p, u0, u0 + d * 1e8)
                     for p in pts if abs(p - u0) > 1e-12), default=1.0)
        if score > best_score:
            best, best_score = d, score
    if best is None:
        raise PathThroughBranchPoint(f"no cut-free ray from {u0} to infinity")
    return complex(best)


@dataclass(frozen=True)
class AbelPath:
    start: complex
    direction: complex
    sheet: int


def abel_integral(frame: CurveFrame, u0: complex, sheet: int, G: Callable | None = None,
                  quad: QuadratureSpec | None = None) -> tuple[np.ndarray, AbelPath]:
    """Integral of ``G(u) du / v`` from P_infinity to (u0, sheet).

    The path is a straight ray from u0 to infinity that crosses no cut.
    """
    quad = quad or frame.quad
    G = G or _monomial_stack(frame.genus)
    d = _ray_direction(frame, u0)
    sq = frame._sqrt

    def f(s):
        r = s / (1.0 - s)
        du = d * r * r
        dt = 2.0 * s / (1.0 - s) ** 3
        return G(u0 + du) * d * dt / sq(du, base=u0)

    val = -sheet * integrate(f, 0.0, 1.0, quad, initial_panels=4)
    return val, AbelPath(complex(u0), d, sheet)


def abel_map(frame: CurveFrame, P: SurfacePoint | None,
             quad: QuadratureSpec | None = None) -> tuple[np.ndarray, AbelPath | None]:
    """Normalised Abel map from P_infinity; ``None`` stands for P_infinity."""
    if P is None:
        return np.zeros(frame.genus, dtype=complex), None
    raw, path = abel_integral(frame, P.u, P.sheet, quad=quad)
    return frame.normalizer @ raw, path


def abel_map_branch(frame: CurveFrame, n: int) -> np.ndarray:
    un = frame.config.points[n]
    raw, _ = abel_integral(frame, un, 1)
    return frame.normalizer @ raw


def a_pole_integral_branch(frame: CurveFrame, n: int) -> np.ndarray:
    """Vector over j of the a_j-integrals of du / ((u - u_n) v)."""
    un = frame.config.points[n]
    return np.array([frame.a_integral(lambda u: 1.0 / (u - un), k, pole=un)[0]
                     for k in range(frame.genus)])


def eval_W_ramification(frame: CurveFrame, P: SurfacePoint, n: int,
                        In: np.ndarray | None = None) -> complex:
    """Bidifferential W(P, P_n): parameter u at P, sqrt(u - u_n) at P_n."""
    un = frame.config.points[n]
    if abs(P.u - un) < 1e-14 * (1 + abs(un)):
        raise PoleOnContour("P coincides with the branch point")
    phin = eval_phi_ramification(frame, n)
    if In is None:
        In = a_pole_integral_branch(frame, n)
    return complex((1.0 / (P.u - un)) / (P.v * phin) - (In / phin) @ frame.omega(P))


def _blocks(S, g):
    S = np.asarray(S)
    return S[:g, :g], S[:g, g:], S[g:, :g], S[g:, g:]


def check_symplectic(S: np.ndarray) -> None:
    S = np.asarray(S)
    n = S.shape[0]
    if S.shape != (n, n) or n % 2:
        raise NotSymplectic("matrix must be 2g x 2g")
    if not np.allclose(S, np.round(S)):
        raise NotSymplectic("matrix must have integer entries")
    g = n // 2
    J = np.block([[np.zeros((g, g)), np.eye(g)], [-np.eye(g), np.zeros((g, g))]])
    if not np.allclose(S.T @ J @ S, J):
        raise NotSymplectic("S^T J S != J")


def symplectic_transform(c1, c2, B, S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """New lattice coordinates and Riemann matrix after a change of basis.

    ``S`` acts on the column (b, a) of cycles in blocks [[A, B], [C, D]].
    """
    check_symplectic(S)
    c1 = np.atleast_1d(np.asarray(c1, dtype=complex))
    c2 = np.atleast_1d(np.asarray(c2, dtype=complex))
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    g = c1.size
    A_, B_, C_, D_ = _blocks(np.asarray(S, dtype=float), g)
    c1n = A_ @ c1 - B_ @ c2
    c2n = D_ @ c2 - C_ @ c1
    Bn = (A_ @ B + B_) @ np.linalg.inv(C_ @ B + D_)
    return c1n, c2n, Bn


def random_symplectic(g: int, rng: np.random.Generator, steps: int = 6) -> np.ndarray:
    """Product of elementary integer symplectic generators."""
    n = 2 * g
    J = np.block([[np.zeros((g, g)), np.eye(g)], [-np.eye(g), np.zeros((g, g))]])
    S = np.eye(n)
    for _ in range(steps):
        kind = rng.integers(3)
        if kind == 0:
            sym = rng.integers(-1, 2, size=(g, g))
            sym = np.triu(sym) + np.triu(sym, 1).T
            E = np.block([[np.eye(g), sym], [np.zeros((g, g)), np.eye(g)]])
        elif kind == 1:
            sym = rng.integers(-1, 2, size=(g, g))
            sym = np.triu(sym) + np.triu(sym, 1).T
            E = np.block([[np.eye(g), np.zeros((g, g))], [sym, np.eye(g)]])
        else:
            E = J
        S = E @ S
    return S.astype(int)


def load_curve_json(source) -> tuple[BranchConfiguration, QuadratureSpec]:
    """Parse ``{"branch_points": [[re, im], ...], "quadrature": {...}}``."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict) or "branch_points" not in doc:
        raise ConfigError("field 'branch_points' is missing")
    try:
        pts = tuple(complex(float(p[0]), float(p[1])) if isinstance(p, (list, tuple))
                    else complex(float(p)) for p in doc["branch_points"])
    except (TypeError, ValueError, IndexError):
        raise ConfigError("field 'branch_points' must be a list of [re, im] pairs") from None
    q = doc.get("quadrature", {}) or {}
    if not isinstance(q, dict):
        raise ConfigError("field 'quadrature' must be an object")
    try:
        quad = QuadratureSpec(node_count=int(q.get("nodes", 24)),
                              target_tolerance=float(q.get("tol", 1e-13)))
    except (TypeError, ValueError):
        raise ConfigError("field 'quadrature' has non-numeric entries") from None
    return BranchConfiguration(pts), quad


def elliptic_frame(x: complex, quad: QuadratureSpec | None = None) -> CurveFrame:
    """Frame of v^2 = u (u - 1) (u - x), branch points in the order 0, 1, x."""
    return build_frame(BranchConfiguration((0.0, 1.0, complex(x))), quad=quad)


def sample_regular_points(frame: CurveFrame, count: int, rng: np.random.Generator,
                          avoid: Sequence[complex] = (), margin: float = 0.05) -> list[SurfacePoint]:
    """Random surface points away from branch points, cuts and ``avoid``."""
    pts = frame.config.array
    centre = pts.mean()
    radius = max(1.0, np.abs(pts - centre).max())
    gap = frame.config.min_gap
    segs = [(frame.config.points[i], frame.config.points[j]) for i, j in frame.cycles.cuts]
    out: list[SurfacePoint] = []
    while len(out) < count:
        u = centre + radius * (rng.uniform(-1.2, 1.2) + 1j * rng.uniform(-1.2, 1.2))
        near = [abs(u - p) for p in list(pts) + list(avoid)]
        if min(near) < margin * gap:
            continue
        if min(_point_segment_distance(u, a, b) for a, b in segs) < margin * gap:
            continue
        e = frame.config.points[frame.cycles.infinite]
        if _point_segment_distance(u, e, e + RAY_DIRECTION * 1e8) < margin * gap:
            continue
        out.append(frame.point(u, int(rng.choice([-1, 1]))))
    return out
