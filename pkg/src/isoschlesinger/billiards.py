"""Billiard ordered games among confocal quadrics and their periodicity tests.

Quadrics are ``sum x_i^2 / (a_i - lam) = 1``.  A game bounces cyclically
off ellipsoids ``Q_beta_1 .. Q_beta_{d-1}``; signature +1 means the ray
hits from inside (the smallest Jacobi coordinate has a local minimum at
the bounce), -1 from outside (local maximum).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .curve_core import BranchConfiguration, CurveFrame, SurfacePoint, abel_map, build_frame, csqrt
from .errors import (ConfigError, DegeneratePoint, ExpansionRadiusTooSmall, NewtonDivergence,
                     NoIntersection, OffQuadric, SignatureViolation, TangencyDegenerate)
from .quadrature import QuadratureSpec

P = np.polynomial.polynomial


@dataclass(frozen=True)
class ConfocalFamily:
    a: tuple[float, ...]

    def __post_init__(self) -> None:
        a = tuple(float(x) for x in self.a)
        object.__setattr__(self, "a", a)
        if len(a) < 2:
            raise ConfigError("a confocal family needs d >= 2 axes")
        if any(x <= 0 for x in a) or any(a[i] <= a[i + 1] for i in range(len(a) - 1)):
            raise ConfigError("axes must satisfy a_1 > a_2 > ... > a_d > 0")

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def arr(self) -> np.ndarray:
        return np.array(self.a)

    def value(self, lam: float, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sum(x * x / (self.arr - lam)))

    def normal(self, lam: float, x) -> np.ndarray:
        """Unit outward normal of Q_lam at x."""
        g = np.asarray(x, dtype=float) / (self.arr - lam)
        return g / np.linalg.norm(g)

    def point_from_jacobi(self, lams: Sequence[float], signs: Sequence[int] | None = None) -> np.ndarray:
        """Cartesian point with the given Jacobi coordinates (positive orthant by default)."""
        lams = np.asarray(lams, dtype=float)
        a = self.arr
        sq = np.array([np.prod(a[i] - lams) / np.prod([a[i] - a[k] for k in range(self.d) if k != i])
                       for i in range(self.d)])
        if np.any(sq < -1e-14):
            raise ConfigError("Jacobi coordinates do not interlace the axes")
        x = np.sqrt(np.clip(sq, 0.0, None))
        return x if signs is None else x * np.asarray(signs, dtype=float)

    def quadric_index(self, lam: float) -> int:
        """Zero-based s with lam in (a_{s+1}, a_s); ellipsoids give d - 1."""
        for s, ai in enumerate(self.a):
            if lam > ai:
                return s - 1
        return self.d - 1


@dataclass(frozen=True)
class GameSpec:
    betas: tuple[float, ...]
    signature: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "signature", tuple(int(s) for s in self.signature))
        if len(self.betas) != len(self.signature) or not self.betas:
            raise ConfigError("betas and signature must have the same positive length")
        if any(s not in (1, -1) for s in self.signature):
            raise ConfigError("signature entries must be +1 or -1")

    def validate(self, fam: ConfocalFamily) -> None:
        k = len(self.betas)
        if k != fam.d - 1:
            raise ConfigError(f"a game in R^{fam.d} needs {fam.d - 1} boundary quadrics")
        if any(b >= fam.a[-1] for b in self.betas):
            raise ConfigError("boundary quadrics must be ellipsoids (beta < a_d)")
        for s in range(k):
            if self.signature[s] == -1:
                for t in ((s - 1) % k, (s + 1) % k):
                    if self.signature[t] != 1 or not self.betas[t] < self.betas[s]:
                        raise ConfigError(f"signature at quadric {s + 1} breaks the boundedness rule")


@dataclass(frozen=True)
class BilliardState:
    position: np.ndarray
    velocity: np.ndarray
    jacobi: np.ndarray

    @classmethod
    def at(cls, fam: ConfocalFamily, position, velocity) -> "BilliardState":
        x = np.asarray(position, dtype=float)
        v = np.asarray(velocity, dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0:
            raise ConfigError("velocity must be nonzero")
        return cls(x, v / nv, jacobi_coordinates(fam, x))


# ---------------------------------------------------------------- coordinates

def _bisect(f, lo: float, hi: float) -> float:
    """Root of an increasing f with f(lo) < 0 < f(hi); endpoints are never evaluated."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def jacobi_coordinates(fam: ConfocalFamily, point, tol: float = 1e-10) -> np.ndarray:
    """The d confocal parameters through ``point``, descending.

    One root lies in each interval (a_{k+1}, a_k), the last in (-inf, a_d);
    the defining function is increasing on each, so bisection is safe.
    """
    x = np.asarray(point, dtype=float)
    if x.shape != (fam.d,):
        raise ConfigError(f"point must have {fam.d} coordinates")
    if np.any(np.abs(x) < tol):
        raise DegeneratePoint("Jacobi coordinates need all Cartesian coordinates nonzero")
    a = fam.arr
    x2 = x * x

    def f(lam):
        return float(np.sum(x2 / (a - lam))) - 1.0

    out = []
    for k in range(fam.d):
        hi = a[k]
        lo = a[k + 1] if k + 1 < fam.d else a[-1] - x2.sum() - 1.0
        out.append(_bisect(f, lo, hi))
    return np.array(out)


def reflect(fam: ConfocalFamily, state: BilliardState, beta: float, tol: float = 1e-10) -> BilliardState:
    x, v = state.position, state.velocity
    if abs(fam.value(beta, x) - 1.0) > tol:
        raise OffQuadric(f"point is not on Q_{beta}")
    n = fam.normal(beta, x)
    w = v - 2.0 * (v @ n) * n
    return BilliardState(x, w / np.linalg.norm(w), state.jacobi)


def _tangency_poly(fam: ConfocalFamily, x, v) -> np.ndarray:
    """Coefficients (ascending) of the cleared tangency discriminant in lam."""
    a = fam.arr
    d = fam.d
    lin = [np.array([ai, -1.0]) for ai in a]

    def prod_except(skip):
        out = np.array([1.0])
        for k in range(d):
            if k not in skip:
                out = P.polymul(out, lin[k])
        return out

    poly = np.zeros(d)
    for i in range(d):
        poly = P.polyadd(poly, v[i] ** 2 * prod_except({i}))
    for i, j in itertools.combinations(range(d), 2):
        m = x[i] * v[j] - x[j] * v[i]
        poly = P.polysub(poly, m * m * prod_except({i, j}))
    return np.trim_zeros(np.asarray(poly, dtype=float), "b")


def caustics_of_line(fam: ConfocalFamily, point, direction, sep_tol: float = 1e-9) -> np.ndarray:
    """The d-1 parameters of confocal quadrics tangent to the line, ascending."""
    x = np.asarray(point, dtype=float)
    v = np.asarray(direction, dtype=float)
    if np.linalg.norm(v) == 0:
        raise ConfigError("direction must be nonzero")
    v = v / np.linalg.norm(v)
    coef = _tangency_poly(fam, x, v)
    roots = P.polyroots(coef)
    if np.any(np.abs(roots.imag) > 1e-7 * (1 + np.abs(roots.real))):
        raise TangencyDegenerate("tangency polynomial has non-real roots")
    roots = np.sort(roots.real)
    dcoef = P.polyder(coef)
    for _ in range(3):
        roots = roots - P.polyval(roots, coef) / P.polyval(roots, dcoef)
    if roots.size > 1 and np.min(np.diff(roots)) < sep_tol * (1 + np.abs(roots).max()):
        raise TangencyDegenerate("caustic parameters coincide")
    return roots


def caustic_velocity(fam: ConfocalFamily, point, alphas: Sequence[float],
                     signs: Sequence[int] | None = None) -> np.ndarray:
    """Unit direction at ``point`` whose line has the prescribed caustics.

    Uses the squared components along the coordinate normals,
    prod_j(lam_k - alpha_j) / prod_{i != k}(lam_k - lam_i).
    """
    x = np.asarray(point, dtype=float)
    lam = jacobi_coordinates(fam, x)
    al = np.asarray(alphas, dtype=float)
    comps = np.array([np.prod(lam[k] - al) / np.prod([lam[k] - lam[i] for i in range(fam.d) if i != k])
                      for k in range(fam.d)])
    if np.any(comps < -1e-12):
        raise ConfigError("caustics are not attainable from this point")
    comps = np.sqrt(np.clip(comps, 0.0, None))
    if signs is not None:
        comps = comps * np.asarray(signs, dtype=float)
    normals = np.array([fam.normal(l, x) for l in lam])
    v = comps @ normals
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------- dynamics

def _next_hit(fam: ConfocalFamily, x, v, beta: float, from_inside: bool) -> float:
    """Forward line parameter of the bounce point on Q_beta.

    q(t) = value(beta, x + t v) - 1 is a convex parabola, so the exit root
    (from inside) is the larger root and the entry root the smaller.
    """
    D = fam.arr - beta
    A = float(np.sum(v * v / D))
    B = float(np.sum(x * v / D))
    C = float(np.sum(x * x / D)) - 1.0
    disc = B * B - A * C
    if disc < 0:
        raise NoIntersection(f"the ray misses Q_{beta}")
    q = -(B + math.copysign(math.sqrt(disc), B))
    r = sorted([q / A, C / q if q != 0 else 0.0])
    t = r[1] if from_inside else r[0]
    if t <= 1e-12 * (1 + np.linalg.norm(x)):
        raise NoIntersection(f"no forward intersection with Q_{beta} of the required type")
    return t


def _extremum_check(fam: ConfocalFamily, x, v_in, v_out, beta: float, inside: bool, h: float) -> None:
    s = fam.quadric_index(beta)
    lam_prev = jacobi_coordinates(fam, x - h * v_in)[s]
    lam_next = jacobi_coordinates(fam, x + h * v_out)[s]
    ok = (lam_prev > beta and lam_next > beta) if inside else (lam_prev < beta and lam_next < beta)
    if not ok:
        kind = "minimum" if inside else "maximum"
        raise SignatureViolation(f"bounce on Q_{beta} is not a local {kind} of lambda_{s + 1}")


@dataclass
class Bounce:
    index: int
    quadric: int
    position: np.ndarray
    velocity: np.ndarray
    jacobi: np.ndarray
    caustics: np.ndarray


@dataclass
class Trajectory:
    bounces: list = field(default_factory=list)
    caustics0: np.ndarray | None = None

    @property
    def caustic_drift(self) -> float:
        return max(float(np.abs(b.caustics - self.caustics0).max()) for b in self.bounces)

    @property
    def speed_defect(self) -> float:
        return max(abs(np.linalg.norm(b.velocity) - 1.0) for b in self.bounces)

    def closure_gap(self, after: int) -> float:
        """Distance between the start and the bounce point ``after`` bounces later."""
        return float(np.linalg.norm(self.bounces[after].position - self.bounces[0].position))

    def velocity_gap(self, after: int) -> float:
        return float(np.linalg.norm(self.bounces[after].velocity - self.bounces[0].velocity))


def run_game(fam: ConfocalFamily, spec: GameSpec, start: BilliardState, rounds: int,
             check_signature: bool = True) -> Trajectory:
    """Play ``rounds`` full cycles Q_beta_1 -> ... -> Q_beta_{d-1} -> Q_beta_1.

    ``start`` sits on Q_beta_1 carrying the velocity just after that bounce.
    """
    spec.validate(fam)
    k = len(spec.betas)
    x, v = start.position, start.velocity
    if abs(fam.value(spec.betas[0], x) - 1.0) > 1e-10:
        raise OffQuadric("start must lie on the first boundary quadric")
    outward = v @ fam.normal(spec.betas[0], x)
    if (spec.signature[0] == 1) != (outward < 0):
        raise ConfigError("start velocity points to the wrong side of the first quadric")
    traj = Trajectory(caustics0=caustics_of_line(fam, x, v))
    traj.bounces.append(Bounce(0, 0, x.copy(), v.copy(), start.jacobi, traj.caustics0))
    for step in range(1, rounds * k + 1):
        s = step % k
        beta, inside = spec.betas[s], spec.signature[s] == 1
        t = _next_hit(fam, x, v, beta, inside)
        x_new = x + t * v
        state = reflect(fam, BilliardState(x_new, v, None), beta)
        if check_signature:
            _extremum_check(fam, x_new, v, state.velocity, beta, inside, h=min(1e-3, 0.25 * t))
        x, v = x_new, state.velocity
        traj.bounces.append(Bounce(step, s, x.copy(), v.copy(), jacobi_coordinates(fam, x),
                                   caustics_of_line(fam, x, v)))
    return traj


def start_state(fam: ConfocalFamily, spec: GameSpec, alphas: Sequence[float], lams: Sequence[float],
                signs: Sequence[int] | None = None) -> BilliardState:
    """A start on Q_beta_1 with the given caustics and the outgoing side set by the signature.

    ``lams`` are the Jacobi coordinates other than the one fixed to beta_1.
    """
    lam = np.sort(np.concatenate([np.asarray(lams, dtype=float), [spec.betas[0]]]))[::-1]
    x = fam.point_from_jacobi(lam, signs)
    v = caustic_velocity(fam, x, alphas)
    if (v @ fam.normal(spec.betas[0], x) < 0) != (spec.signature[0] == 1):
        # flip the component normal to the boundary
        n = fam.normal(spec.betas[0], x)
        v = v - 2 * (v @ n) * n
    return BilliardState.at(fam, x, v)


# ---------------------------------------------------------------- spectral side

@dataclass
class SpectralCurve:
    """nu^2 = prod(lam - a_i) prod(lam - alpha_j) with a frame on its branch points."""

    fam: ConfocalFamily
    alphas: tuple[float, ...]
    quad: QuadratureSpec | None = None

    def __post_init__(self) -> None:
        self.alphas = tuple(float(x) for x in self.alphas)
        if len(self.alphas) != self.fam.d - 1:
            raise ConfigError(f"need {self.fam.d - 1} caustic parameters")
        pts = np.array(self.fam.a + self.alphas)
        gaps = np.abs(pts[:, None] - pts[None, :]) + np.eye(pts.size)
        if gaps.min() < 1e-9:
            raise ConfigError("spectral curve branch points must be distinct")

    @property
    def roots(self) -> np.ndarray:
        return np.array(self.fam.a + self.alphas)

    def poly(self, lam):
        return np.prod([lam - r for r in self.roots], axis=0)

    @cached_property
    def frame(self) -> CurveFrame:
        return build_frame(BranchConfiguration(tuple(self.roots)), quad=self.quad)

    def point(self, beta: float, sign: int) -> SurfacePoint:
        """(beta, sign * sqrt(P(beta))) with the principal square root."""
        nu = sign * complex(csqrt(self.poly(complex(beta))))
        v = self.frame.point(beta, 1).v
        sheet = 1 if abs(v - nu) <= abs(v + nu) else -1
        return self.frame.point(beta, sheet)

    def abel_sum(self, spec: GameSpec) -> np.ndarray:
        return sum(abel_map(self.frame, self.point(b, s))[0] for b, s in zip(spec.betas, spec.signature))


def jacobian_distance(frame: CurveFrame, z) -> float:
    """Distance from z to the period lattice in the flat metric (Im B)^-1.

    The metric is invariant under symplectic changes of basis.
    """
    m, n = frame.lattice_split(z)
    B = frame.RiemannB
    Yi = np.linalg.inv(B.imag)
    base_m, base_n = m - np.round(m), n - np.round(n)
    g = frame.genus
    best = np.inf
    for shift in itertools.product((-1, 0, 1), repeat=2 * g):
        w = (base_m + np.array(shift[:g])) + B @ (base_n + np.array(shift[g:]))
        best = min(best, float(np.real(w.conj() @ Yi @ w)))
    return math.sqrt(max(best, 0.0))


@dataclass
class PeriodicityVerdict:
    periodic: bool
    defect: float
    defect_vector: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    n: int
    bounces: int


def periodicity_check(fam: ConfocalFamily, spec: GameSpec, alphas: Sequence[float], n: int,
                      tol: float = 1e-6, quad: QuadratureSpec | None = None,
                      curve: SpectralCurve | None = None) -> PeriodicityVerdict:
    """Lattice test: is the Abel sum of the boundary points in (1/n) times the lattice?

    ``n`` counts full rounds; ``bounces`` in the verdict is n(d - 1).
    """
    if n < 1:
        raise ConfigError("n must be a positive integer")
    curve = curve or SpectralCurve(fam, tuple(alphas), quad)
    fr = curve.frame
    z = curve.abel_sum(spec)
    c1, c2 = fr.lattice_split(z)
    dv = fr.lattice_reduce(n * z) / n
    defect = jacobian_distance(fr, n * z) / n
    return PeriodicityVerdict(defect < tol, defect, dv, c1, c2, n, n * (fam.d - 1))


def signed_offsets(verdict: PeriodicityVerdict) -> np.ndarray:
    """n*(c1, c2) minus the nearest integers, as one real vector."""
    w = verdict.n * np.concatenate([verdict.c1, verdict.c2])
    return w - np.round(w)


def tune_caustic(fam: ConfocalFamily, spec: GameSpec, n: int, bracket: tuple[float, float],
                 index: int = 0, others: Sequence[float] = (), target: float | None = None,
                 scan: int = 40, tol: float = 1e-13) -> float:
    """Bisection on one caustic parameter until the Abel sum is n-torsion.

    The bracket is scanned for a sign change of the moving lattice offset.
    With ``target`` the moving real coordinate is driven to that value
    (mod 1) instead of to the nearest multiple of 1/n, which selects the
    torsion class.
    """
    def coords(al):
        alphas = list(others)
        alphas.insert(index, al)
        v = periodicity_check(fam, spec, alphas, n)
        return np.concatenate([v.c1, v.c2])

    grid = np.linspace(*bracket, scan)
    raw = np.array([coords(g) for g in grid])
    k = int(np.argmax(np.ptp(raw, axis=0)))

    def offset(w):
        if target is None:
            return n * w - np.round(n * w)
        return (w - target + 0.5) % 1.0 - 0.5

    vals = [offset(r[k]) for r in raw]
    for i in range(scan - 1):
        f0, f1 = vals[i], vals[i + 1]
        if f0 * f1 <= 0 and max(abs(f0), abs(f1)) < 0.25:
            return _bisect_to(lambda al: offset(coords(al)[k]), grid[i], grid[i + 1], tol)
    raise NewtonDivergence("no torsion caustic of the requested class inside the bracket")


def _bisect_to(f, lo, hi, tol):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tune_caustics_newton(fam: ConfocalFamily, spec: GameSpec, n: int, guess: Sequence[float],
                         target: np.ndarray | None = None, tol: float = 1e-12,
                         max_iter: int = 30, step: float = 1e-6) -> np.ndarray:
    """Newton on all caustic parameters so that n*c2 hits an integer vector.

    For real spectral curves the c1 part of the Abel sum is pinned, so the
    g moving c2 components are matched with the g = d - 1 caustics.
    """
    al = np.asarray(guess, dtype=float)

    def c2(a):
        return periodicity_check(fam, spec, a, n).c2

    v0 = c2(al)
    if target is None:
        target = np.round(n * v0) / n
    for _ in range(max_iter):
        r = c2(al) - target
        if np.abs(r).max() < tol:
            return al
        J = np.column_stack([(c2(al + step * e) - c2(al - step * e)) / (2 * step) for e in np.eye(al.size)])
        delta = np.linalg.solve(J, -r)
        lam = 1.0
        while lam > 1e-4:
            trial = al + lam * delta
            try:
                if np.abs(c2(trial) - target).max() < np.abs(r).max():
                    al = trial
                    break
            except ConfigError:
                pass
            lam /= 2
        else:
            raise NewtonDivergence("caustic tuning stalled")
    if np.abs(c2(al) - target).max() < 1e3 * tol:
        return al
    raise NewtonDivergence("caustic tuning did not converge")


# ---------------------------------------------------------------- Cayley test, d = 3

@dataclass
class CayleyVerdict:
    periodic: bool
    singular_values: np.ndarray
    threshold: float
    matrix: np.ndarray
    taylor: np.ndarray


def _continued_nu(roots: np.ndarray, centre: float, nu0: complex):
    """nu continued analytically from (centre, nu0) inside the root-free disc."""
    def f(lam):
        lam = np.asarray(lam, dtype=complex)
        out = np.full(lam.shape, nu0, dtype=complex)
        for r in roots:
            out = out * np.sqrt(1 + (lam - centre) / (centre - r))
        return out
    return f


def _cauchy_derivatives(f, centre: complex, radius: float, count: int, nodes: int = 128) -> np.ndarray:
    """Taylor coefficients f^(r)(centre)/r!, r < count, via the trapezoid rule on a circle."""
    th = 2 * np.pi * np.arange(nodes) / nodes
    vals = f(centre + radius * np.exp(1j * th))
    c = np.fft.fft(vals) / nodes
    return np.array([c[r] / radius ** r for r in range(count)])


def cayley_rank_d3(fam: ConfocalFamily, beta1: float, beta2: float, alphas: Sequence[float], m: int,
                   signature: Sequence[int] = (1, 1), rel_tol: float = 1e-8) -> CayleyVerdict:
    """Rank test on derivatives of the functions f_j at the second boundary point.

    nu is expanded in (lam - beta1) on the sheet nu(beta1) = -i_1 sqrt(P(beta1)).
    f_j = (nu - B_0 - ... - B_{j+1} t^{j+1}) / t^{j+2} with t = lam - beta1,
    j = 1..m-2, spans the functions with a single pole of order <= m at
    P_beta1 modulo constants.  Their derivatives of orders 1..m-1 are taken
    at (beta2, -i_2 sqrt(P(beta2))); the matrix loses rank exactly when
    m(A(P_beta1) + A(P_beta2)) lies in the lattice.
    """
    if fam.d != 3:
        raise ConfigError("the Cayley rank test is written for d = 3")
    if m < 3:
        raise ConfigError("m must be at least 3")
    curve = SpectralCurve(fam, tuple(alphas))
    roots = curve.roots
    radius = float(np.min(np.abs(roots - beta1)))
    if abs(beta2 - beta1) >= 0.95 * radius:
        raise ExpansionRadiusTooSmall(
            f"beta2 lies outside the Taylor disc of radius {radius:.6g} around beta1")
    i1, i2 = signature
    sq1 = complex(csqrt(curve.poly(complex(beta1))))
    sq2 = complex(csqrt(curve.poly(complex(beta2))))
    nu = _continued_nu(roots, beta1, -i1 * sq1)
    t2 = beta2 - beta1
    # enough Taylor terms for the tail series to converge at beta2
    q = abs(t2) / radius
    K = int(np.ceil(np.log(1e-18) / np.log(q))) + m + 8
    rho = 0.5 * (radius + abs(t2))
    B = _cauchy_derivatives(nu, beta1, rho, K, nodes=max(512, 4 * K))
    # nu at the evaluation point is either the continuation or its negative
    target = -i2 * sq2
    flip = -1.0 if abs(nu(beta2) - target) > abs(nu(beta2) + target) else 1.0
    rho2 = float(np.min(np.abs(roots - beta2)))
    if flip < 0:
        rho2 = min(rho2, abs(t2))

    def tail_coeffs(j):
        """Taylor coefficients at beta2 of sum_{k >= j+2} B_k t^(k-j-2)."""
        out = np.zeros(m, dtype=complex)
        ks = np.arange(j + 2, K)
        e = ks - j - 2
        for r in range(m):
            binom = np.array([math.comb(int(x), r) for x in e], dtype=float)
            pw = np.where(e >= r, t2 ** np.clip(e - r, 0, None), 0.0)
            out[r] = np.sum(B[ks] * binom * pw)
        return out

    def pole_coeffs(j):
        # opposite sheet: f_j picks up -2 nu / t^(j+2), analytic near beta2
        return _cauchy_derivatives(lambda lam: -2 * nu(lam) / (lam - beta1) ** (j + 2),
                                   beta2, 0.5 * rho2, m, nodes=256)

    def ref_coeffs(j):
        return _cauchy_derivatives(lambda lam: flip * nu(lam) / (lam - beta1) ** (j + 2),
                                   beta2, 0.5 * rho2, m, nodes=256)

    # Taylor coefficients scaled by rho2^r with rows and columns equilibrated;
    # diagonal scalings do not change the rank
    scale = rho2 ** np.arange(1, m)
    M = np.empty((m - 1, m - 2), dtype=complex)
    for j in range(1, m - 1):
        c = tail_coeffs(j) + (pole_coeffs(j) if flip < 0 else 0.0)
        M[:, j - 1] = c[1:] * scale / np.linalg.norm(ref_coeffs(j)[1:] * scale)
    if m > 3:
        for _ in range(3):
            M = M / np.linalg.norm(M, axis=1)[:, None]
            M = M / np.linalg.norm(M, axis=0)
    # with one column the rank test is the column's size against the
    # unsubtracted reference, so it is kept on that scale
    sv = np.linalg.svd(M, compute_uv=False)
    thr = rel_tol * sv[0] if m > 3 else rel_tol
    return CayleyVerdict(bool(sv[-1] < thr), sv, thr, M, B)
