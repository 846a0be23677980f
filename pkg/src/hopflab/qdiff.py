"""Trajectory structure of holomorphic quadratic differentials phi dz^2.

A vertical arc of phi dz^2 runs along directions v with v^2 phi < 0 (negative
real); a horizontal arc along v^2 phi > 0.  This module finds zeros of phi,
traces vertical/horizontal trajectories with a fourth-order Runge-Kutta
integrator on the unit direction field, measures phi-length
integral |phi|^(1/2) |dz|, accumulates the natural parameter
Phi = integral sqrt(phi) dz with branch continuity, and tests the geodesic
(length-minimizing) property of vertical arcs against competitor curves.

Direction field.  arg v = (pi - arg phi)/2 for vertical arcs, -arg phi / 2
for horizontal ones, with the +-v ambiguity resolved by continuity with the
previous step.  At the seed the branch with Im v > 0 (vertical) respectively
Re v > 0 (horizontal) is chosen, ties broken toward positive real part.

Tracing stops at the domain boundary (bisected onto it), near a zero of phi
(|phi| below 1e-6 times the domain median, where the direction field turns
unstable), at a phi-length budget, or on loop closure (back within one step
of the seed with direction within 5 degrees).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import HopfField
from .examples import ExampleMap
from .geometry import DomainMembershipError, DomainSpec

CRITICAL_STANDOFF = 1e-6      # fraction of median |phi| that halts tracing
LOOP_ANGLE_TOL = math.radians(5.0)
MAX_TRACE_STEPS = 2_000_000


class SeedError(ValueError):
    """Trajectory seed at or too close to a critical point."""


class BranchError(ValueError):
    """Square-root branch tracking failed (path meets a zero of phi)."""


class CompetitorError(ValueError):
    """Competitor endpoints do not straddle the vertical arc."""


@dataclass
class PhiFunction:
    """An evaluable quadratic-differential coefficient on a domain."""

    func: Callable[[np.ndarray], np.ndarray]
    domain: DomainSpec
    zeros: list[complex] = field(default_factory=list)
    abs_median: float = 0.0

    def __post_init__(self):
        if self.abs_median == 0.0:
            self.abs_median = self._estimate_median()

    def _estimate_median(self, n: int = 48) -> float:
        from .geometry import Lattice

        kind = "cartesian" if self.domain.kind == "rectangle" else "polar"
        nodes = Lattice(kind, n, n).nodes(self.domain)
        with np.errstate(divide="ignore", invalid="ignore"):
            mags = np.abs(self.func(nodes))
        mags = mags[np.isfinite(mags)]
        return float(np.median(mags)) if mags.size else 1.0

    def __call__(self, z):
        return self.func(np.asarray(z, dtype=complex))

    @property
    def critical_tolerance(self) -> float:
        return CRITICAL_STANDOFF * self.abs_median

    @staticmethod
    def from_example(emap: ExampleMap) -> "PhiFunction":
        return PhiFunction(func=emap.hopf, domain=emap.domain)

    @staticmethod
    def from_callable(func, domain: DomainSpec) -> "PhiFunction":
        return PhiFunction(func=lambda z: np.asarray(func(z), dtype=complex) * np.ones_like(np.asarray(z, dtype=complex)),
                           domain=domain)

    @staticmethod
    def from_field(hopf: HopfField) -> "PhiFunction":
        """Bilinear interpolation of a sampled Hopf field (periodic in theta)."""
        lattice = hopf.lattice
        domain = hopf.domain
        a1, a2 = lattice.axes(domain)
        vals = hopf.values

        if lattice.kind == "polar":
            d1 = a1[1] - a1[0]
            dth = 2.0 * np.pi / lattice.n2

            def interp(z):
                z = np.asarray(z, dtype=complex)
                rho = np.abs(z)
                th = np.mod(np.angle(z), 2.0 * np.pi)
                u = np.clip((rho - a1[0]) / d1, 0.0, lattice.n1 - 1.000001)
                i0 = np.floor(u).astype(int)
                fu = u - i0
                v = (th - a2[0]) / dth
                j0 = np.floor(v).astype(int)
                fv = v - j0
                j0m = np.mod(j0, lattice.n2)
                j1m = np.mod(j0 + 1, lattice.n2)
                return ((1 - fu) * (1 - fv) * vals[i0, j0m] + fu * (1 - fv) * vals[i0 + 1, j0m]
                        + (1 - fu) * fv * vals[i0, j1m] + fu * fv * vals[i0 + 1, j1m])

            return PhiFunction(func=interp, domain=domain)

        d1 = a1[1] - a1[0]
        d2 = a2[1] - a2[0]

        def interp_cart(z):
            z = np.asarray(z, dtype=complex)
            u = np.clip((z.real - a1[0]) / d1, 0.0, lattice.n1 - 1.000001)
            v = np.clip((z.imag - a2[0]) / d2, 0.0, lattice.n2 - 1.000001)
            i0 = np.floor(u).astype(int)
            j0 = np.floor(v).astype(int)
            fu = u - i0
            fv = v - j0
            return ((1 - fu) * (1 - fv) * vals[i0, j0] + fu * (1 - fv) * vals[i0 + 1, j0]
                    + (1 - fu) * fv * vals[i0, j0 + 1] + fu * fv * vals[i0 + 1, j0 + 1])

        return PhiFunction(func=interp_cart, domain=domain)


# ---------------------------------------------------------------------------
# zeros


@dataclass
class ZeroSearch:
    zeros: list[complex]
    unresolved: list[complex]


def find_zeros(phi: PhiFunction, domain: DomainSpec | None = None, coarse_n: int = 64,
               newton_steps: int = 60) -> ZeroSearch:
    """Zeros of phi in the open domain: coarse |phi| minima refined by Newton.

    Candidates that fail to converge are reported in ``unresolved`` rather
    than dropped.
    """
    from .geometry import Lattice

    domain = domain or phi.domain
    kind = "cartesian" if domain.kind == "rectangle" else "polar"
    lattice = Lattice(kind, coarse_n, coarse_n)
    nodes = lattice.nodes(domain)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.abs(phi(nodes))
    mag = np.where(np.isfinite(mag), mag, np.inf)
    scale = phi.abs_median

    # local minima of |phi| that dip well below the ambient scale
    candidates = []
    m = mag
    for i in range(1, coarse_n - 1):
        for j in range(coarse_n):
            jm, jp = (j - 1) % coarse_n, (j + 1) % coarse_n
            if lattice.kind == "cartesian" and (j == 0 or j == coarse_n - 1):
                continue
            v = m[i, j]
            if v < 0.2 * scale and v <= m[i - 1, j] and v <= m[i + 1, j] and v <= m[i, jm] and v <= m[i, jp]:
                candidates.append(complex(nodes[i, j]))

    h = 1e-6 * max(domain.diameter(), 1.0)
    tol = 1e-10 * scale
    zeros: list[complex] = []
    unresolved: list[complex] = []
    for z0 in candidates:
        z = z0
        ok = False
        for _ in range(newton_steps):
            f = complex(phi(z))
            if abs(f) <= tol:
                ok = True
                break
            df = (complex(phi(z + h)) - complex(phi(z - h))) / (2.0 * h)
            if df == 0:
                break
            z = z - f / df
        if ok and domain.signed_boundary_distance(z) > 1e-9 * domain.diameter():
            if not any(abs(z - w) < 1e-6 * domain.diameter() for w in zeros):
                zeros.append(complex(z))
        elif not ok:
            unresolved.append(z0)
    return ZeroSearch(zeros=zeros, unresolved=unresolved)


# ---------------------------------------------------------------------------
# tracing


@dataclass
class Trajectory:
    """Traced polyline of one vertical or horizontal trajectory."""

    kind: str
    points: np.ndarray
    step: float
    phi_length: float
    termination: str              # hit_boundary | near_critical_point | max_length | closed_loop
    end_reasons: tuple[str, str]  # (backward end, forward end)
    seed_index: int

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points[:-1], self.points[1:]


def _base_direction(phi_val: complex, kind: str) -> complex:
    arg = np.angle(phi_val)
    if kind == "vertical":
        return complex(np.exp(1j * (math.pi - arg) / 2.0))
    return complex(np.exp(-1j * arg / 2.0))


def _oriented(d: complex, prev: complex) -> complex:
    return d if (d * prev.conjugate()).real >= 0 else -d


def _seed_direction(phi_val: complex, kind: str) -> complex:
    d = _base_direction(phi_val, kind)
    if kind == "vertical":
        if abs(d.imag) > 1e-12:
            return d if d.imag > 0 else -d
    else:
        if abs(d.real) > 1e-12:
            return d if d.real > 0 else -d
    return d if d.real > 0 else -d


def _bisect_boundary(domain: DomainSpec, a: complex, b: complex) -> complex:
    """Point on [a, b] at the domain boundary; a inside, b outside."""
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        z = a + mid * (b - a)
        if domain.signed_boundary_distance(z) >= 0:
            lo = mid
        else:
            hi = mid
    return a + lo * (b - a)


def _trace_one_way(phi: PhiFunction, seed: complex, v0: complex, kind: str, step: float,
                   budget: float, allow_loop: bool) -> tuple[list[complex], str]:
    domain = phi.domain
    crit = phi.critical_tolerance
    pts = [seed]
    z = seed
    v_prev = v0
    length = 0.0
    max_steps = min(MAX_TRACE_STEPS, int(budget / (step * math.sqrt(crit) + 1e-300)) + MAX_TRACE_STEPS)

    def direction(zz: complex, prev: complex) -> complex:
        return _oriented(_base_direction(complex(phi(zz)), kind), prev)

    for n_step in range(MAX_TRACE_STEPS):
        k1 = direction(z, v_prev)
        k2 = direction(z + 0.5 * step * k1, k1)
        k3 = direction(z + 0.5 * step * k2, k2)
        k4 = direction(z + step * k3, k3)
        dz = step * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        z_new = z + dz

        if domain.signed_boundary_distance(z_new) < 0:
            z_b = _bisect_boundary(domain, z, z_new)
            if abs(z_b - z) > 1e-12 * step:
                pts.append(z_b)
            return pts, "hit_boundary"

        phi_new = complex(phi(z_new))
        if abs(phi_new) < crit:
            pts.append(z_new)
            return pts, "near_critical_point"

        mid = 0.5 * (z + z_new)
        length += math.sqrt(abs(complex(phi(mid)))) * abs(dz)
        pts.append(z_new)
        v_prev = dz / abs(dz)

        if allow_loop and n_step > 2 and abs(z_new - seed) < step:
            ang = abs(np.angle(v_prev * v0.conjugate()))
            if ang < LOOP_ANGLE_TOL:
                pts.append(seed)
                return pts, "closed_loop"

        if length >= budget:
            return pts, "max_length"
        z = z_new
    return pts, "max_length"


def trace_trajectory(phi: PhiFunction, seed: complex, kind: str = "vertical",
                     step: float = 1e-3, max_phi_length: float = math.inf) -> Trajectory:
    """Trace the trajectory of the given kind through ``seed`` both ways."""
    if kind not in ("vertical", "horizontal"):
        raise ValueError(f"kind must be vertical or horizontal, got {kind!r}")
    seed = complex(seed)
    if phi.domain.signed_boundary_distance(seed) < 0:
        raise DomainMembershipError("trajectory seed outside the domain")
    phi_seed = complex(phi(seed))
    if abs(phi_seed) <= phi.critical_tolerance:
        raise SeedError(f"seed too close to a critical point (|phi| = {abs(phi_seed):.3e})")

    v0 = _seed_direction(phi_seed, kind)
    budget = max_phi_length / 2.0 if math.isfinite(max_phi_length) else math.inf

    fwd_pts, fwd_reason = _trace_one_way(phi, seed, v0, kind, step, budget, allow_loop=True)
    if fwd_reason == "closed_loop":
        points = np.asarray(fwd_pts, dtype=complex)
        return Trajectory(kind=kind, points=points, step=step,
                          phi_length=phi_length(points, phi),
                          termination="closed_loop", end_reasons=("closed_loop", "closed_loop"),
                          seed_index=0)

    back_pts, back_reason = _trace_one_way(phi, seed, -v0, kind, step, budget, allow_loop=False)
    pts = list(reversed(back_pts[1:])) + fwd_pts
    points = np.asarray(pts, dtype=complex)
    seed_index = len(back_pts) - 1
    priority = {"near_critical_point": 0, "hit_boundary": 1, "max_length": 2}
    termination = min((back_reason, fwd_reason), key=lambda r: priority[r])
    return Trajectory(kind=kind, points=points, step=step,
                      phi_length=phi_length(points, phi),
                      termination=termination, end_reasons=(back_reason, fwd_reason),
                      seed_index=seed_index)


def direction_defects(traj: Trajectory, phi: PhiFunction) -> tuple[np.ndarray, np.ndarray]:
    """Per-segment (relative imaginary part, real part) of [dz]^2 phi at midpoints.

    For a valid vertical trajectory the real parts are negative and the
    relative imaginary parts stay at the integrator's angular error level.
    """
    a, b = traj.segments()
    mid = 0.5 * (a + b)
    q = (b - a) ** 2 * phi(mid)
    mag = np.abs(q)
    mag = np.where(mag == 0, 1.0, mag)
    return np.abs(q.imag) / mag, q.real


# ---------------------------------------------------------------------------
# lengths and the natural parameter


def phi_length(points: np.ndarray, phi: PhiFunction) -> float:
    """Composite midpoint quadrature of |phi|^(1/2) along the polyline."""
    points = np.asarray(points, dtype=complex)
    if points.size < 2:
        return 0.0
    a, b = points[:-1], points[1:]
    mid = 0.5 * (a + b)
    return float(np.sum(np.sqrt(np.abs(phi(mid))) * np.abs(b - a)))


@dataclass
class NaturalParameter:
    """Accumulated Phi = integral sqrt(phi) dz along a path.

    Defined up to the recorded initial branch sign and the additive constant
    Phi(start) = 0.
    """

    values: np.ndarray
    initial_branch: complex
    additive_constant: complex = 0j


def natural_parameter(phi: PhiFunction, points: np.ndarray) -> NaturalParameter:
    points = np.asarray(points, dtype=complex)
    a, b = points[:-1], points[1:]
    mid = 0.5 * (a + b)
    phi_mid = np.asarray(phi(mid), dtype=complex)
    if np.any(np.abs(phi_mid) <= phi.critical_tolerance):
        raise BranchError("path passes through a zero of phi")
    roots = np.sqrt(phi_mid)
    chosen = np.empty_like(roots)
    prev = roots[0]
    initial = complex(prev)
    for k in range(roots.size):
        r = roots[k]
        if (r * prev.conjugate()).real < 0:
            r = -r
        chosen[k] = r
        prev = r
    values = np.concatenate([[0j], np.cumsum(chosen * (b - a))])
    return NaturalParameter(values=values, initial_branch=initial)


# ---------------------------------------------------------------------------
# minimality of vertical arcs


@dataclass
class MinimalityResult:
    arc_length: float
    competitor_length: float
    tolerance: float
    passed: bool


def _dist_to_polyline(z: complex, pts: np.ndarray) -> float:
    a, b = pts[:-1], pts[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    denom = np.where(denom == 0, 1.0, denom)
    t = np.clip(((z - a) * np.conj(ab)).real / denom, 0.0, 1.0)
    proj = a + t * ab
    return float(np.min(np.abs(z - proj)))


def minimality_test(phi: PhiFunction, trajectory: Trajectory, arc_slice: tuple[int, int],
                    competitor: np.ndarray, endpoint_tol: float | None = None) -> MinimalityResult:
    """Check that the vertical subarc is phi-shorter than a competitor curve.

    ``arc_slice = (i0, i1)`` selects points[i0:i1+1] of the trajectory; the
    competitor must start near one removed tail (points[:i0+1]) and end near
    the other (points[i1:]).
    """
    i0, i1 = arc_slice
    pts = trajectory.points
    if not (0 < i0 < i1 < pts.size - 1):
        raise CompetitorError("arc slice must leave nonempty tails on both sides")
    competitor = np.asarray(competitor, dtype=complex)
    if endpoint_tol is None:
        endpoint_tol = 2.0 * trajectory.step
    tail_a = pts[: i0 + 1]
    tail_b = pts[i1:]
    ca, cb = complex(competitor[0]), complex(competitor[-1])
    on_a = _dist_to_polyline(ca, tail_a) <= endpoint_tol
    on_b = _dist_to_polyline(cb, tail_b) <= endpoint_tol
    if not (on_a and on_b):
        on_a2 = _dist_to_polyline(cb, tail_a) <= endpoint_tol
        on_b2 = _dist_to_polyline(ca, tail_b) <= endpoint_tol
        if not (on_a2 and on_b2):
            raise CompetitorError("competitor endpoints must lie on the two trajectory tails")
    arc_len = phi_length(pts[i0:i1 + 1], phi)
    comp_len = phi_length(competitor, phi)
    tol = 1e-6 * (1.0 + arc_len + comp_len)
    return MinimalityResult(arc_length=arc_len, competitor_length=comp_len,
                            tolerance=tol, passed=arc_len <= comp_len + tol)


# ---------------------------------------------------------------------------
# CSV export


def trajectory_csv_rows(traj: Trajectory, phi: PhiFunction) -> list[tuple[float, float, float, float]]:
    """Rows (t, x, y, cum_phi_length) with t the cumulative arc length."""
    pts = traj.points
    rows = [(0.0, pts[0].real, pts[0].imag, 0.0)]
    t = 0.0
    s = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        seg = abs(b - a)
        t += seg
        s += math.sqrt(abs(complex(phi(0.5 * (a + b))))) * seg
        rows.append((t, b.real, b.imag, s))
    return rows
