"""Planar domains (disk / annulus / rectangle) and sampling lattices.

Domains answer membership and boundary-distance queries; lattices turn a
domain into a structured grid of complex nodes with quadrature weights.
Everything here is pure and cheap; the heavier numerics live downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Membership tolerance, relative to the domain diameter.
MEMBERSHIP_RTOL = 1e-12


class DomainMembershipError(ValueError):
    """A queried point lies outside the (closed) domain."""


class UnsupportedDomainError(TypeError):
    """Operation not defined for this domain kind."""


class ParameterError(ValueError):
    """A numeric parameter is out of its admissible range."""


@dataclass(frozen=True)
class DomainSpec:
    """Descriptor of a bounded planar domain.

    Exactly the fields for ``kind`` are set: ``radius`` for a disk,
    ``r_inner``/``r_outer`` for an annulus, ``x0,x1,y0,y1`` for a rectangle.
    """

    kind: str
    radius: float | None = None
    r_inner: float | None = None
    r_outer: float | None = None
    x0: float | None = None
    x1: float | None = None
    y0: float | None = None
    y1: float | None = None

    def __post_init__(self):
        if self.kind == "disk":
            if self.radius is None or not (0 < self.radius < math.inf):
                raise ParameterError(f"disk radius must be finite positive, got {self.radius}")
        elif self.kind == "annulus":
            ri, ro = self.r_inner, self.r_outer
            if ri is None or ro is None or not (0 < ri < ro < math.inf):
                raise ParameterError(f"annulus radii must satisfy 0 < r_inner < r_outer, got ({ri}, {ro})")
        elif self.kind == "rectangle":
            if None in (self.x0, self.x1, self.y0, self.y1):
                raise ParameterError("rectangle needs x0, x1, y0, y1")
            if not (self.x0 < self.x1 and self.y0 < self.y1):
                raise ParameterError("rectangle sides must be strictly ordered")
            for v in (self.x0, self.x1, self.y0, self.y1):
                if not math.isfinite(v):
                    raise ParameterError("rectangle coordinates must be finite")
        else:
            raise ParameterError(f"unknown domain kind {self.kind!r}")

    # -- constructors --------------------------------------------------

    @staticmethod
    def disk(radius: float) -> "DomainSpec":
        return DomainSpec(kind="disk", radius=float(radius))

    @staticmethod
    def annulus(r_inner: float, r_outer: float) -> "DomainSpec":
        return DomainSpec(kind="annulus", r_inner=float(r_inner), r_outer=float(r_outer))

    @staticmethod
    def rectangle(x0: float, x1: float, y0: float, y1: float) -> "DomainSpec":
        return DomainSpec(kind="rectangle", x0=float(x0), x1=float(x1), y0=float(y0), y1=float(y1))

    # -- geometry queries ----------------------------------------------

    def diameter(self) -> float:
        if self.kind == "disk":
            return 2.0 * self.radius
        if self.kind == "annulus":
            return 2.0 * self.r_outer
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def area(self) -> float:
        if self.kind == "disk":
            return math.pi * self.radius**2
        if self.kind == "annulus":
            return math.pi * (self.r_outer**2 - self.r_inner**2)
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def bbox(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the closure."""
        if self.kind == "disk":
            r = self.radius
            return (-r, r, -r, r)
        if self.kind == "annulus":
            r = self.r_outer
            return (-r, r, -r, r)
        return (self.x0, self.x1, self.y0, self.y1)

    def signed_boundary_distance(self, z) -> np.ndarray:
        """Distance to the boundary, positive inside, negative outside."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            return self.radius - np.abs(z)
        if self.kind == "annulus":
            a = np.abs(z)
            return np.minimum(a - self.r_inner, self.r_outer - a)
        x, y = z.real, z.imag
        return np.minimum.reduce([x - self.x0, self.x1 - x, y - self.y0, self.y1 - y])

    def contains(self, z, tol: float | None = None) -> np.ndarray:
        """Membership in the closed domain, with tolerance relative to diameter."""
        if tol is None:
            tol = MEMBERSHIP_RTOL * self.diameter()
        return self.signed_boundary_distance(z) >= -tol

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "disk":
            d["radius"] = self.radius
        elif self.kind == "annulus":
            d["r_inner"] = self.r_inner
            d["r_outer"] = self.r_outer
        else:
            d.update(x0=self.x0, x1=self.x1, y0=self.y0, y1=self.y1)
        return d

    @staticmethod
    def from_dict(d: dict) -> "DomainSpec":
        d = dict(d)
        kind = d.pop("kind")
        return DomainSpec(kind=kind, **d)


def dist_to_boundary(domain: DomainSpec, z) -> np.ndarray | float:
    """Euclidean distance from ``z`` to the domain boundary (0 on it).

    Raises ``DomainMembershipError`` if any point lies outside the closure.
    """
    z = np.asarray(z, dtype=complex)
    d = domain.signed_boundary_distance(z)
    tol = MEMBERSHIP_RTOL * domain.diameter()
    if np.any(d < -tol):
        raise DomainMembershipError(f"point outside {domain.kind} domain")
    d = np.maximum(d, 0.0)
    return float(d) if d.ndim == 0 else d


def modulus(domain: DomainSpec) -> float:
    """Conformal modulus of an annulus, normalized as log(r_outer / r_inner)."""
    if domain.kind != "annulus":
        raise UnsupportedDomainError(f"modulus requires an annulus, got {domain.kind}")
    return math.log(domain.r_outer / domain.r_inner)


def nitsche_target(R: float) -> float:
    """Critical outer radius (R + 1/R)/2 of the thinnest admissible target annulus.

    For a round annulus of radius ratio R > 1, harmonic homeomorphisms onto
    {1 < |w| < sigma} exist exactly when sigma reaches this value.
    """
    if not R > 1:
        raise ParameterError(f"radius ratio must exceed 1, got {R}")
    return 0.5 * (R + 1.0 / R)


@dataclass(frozen=True)
class Lattice:
    """Structured grid: ``polar`` (rho x theta) or ``cartesian`` (x x y).

    Polar grids put angular nodes at half-offsets (j + 1/2) * 2*pi/n2 so no
    node falls on the positive real axis, and on a disk the first ring sits
    at half spacing (the origin is never a node).
    """

    kind: str
    n1: int
    n2: int

    def __post_init__(self):
        if self.kind not in ("polar", "cartesian"):
            raise ParameterError(f"unknown lattice kind {self.kind!r}")
        if self.n1 < 8 or self.n2 < 8:
            raise ParameterError(f"lattice resolution must be >= 8 per axis, got ({self.n1}, {self.n2})")

    def axes(self, domain: DomainSpec) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate axes: (rho, theta) for polar, (x, y) for cartesian."""
        if self.kind == "polar":
            if domain.kind == "disk":
                dr = domain.radius / self.n1
                rho = (np.arange(self.n1) + 0.5) * dr
            elif domain.kind == "annulus":
                rho = np.linspace(domain.r_inner, domain.r_outer, self.n1)
            else:
                raise UnsupportedDomainError("polar lattice needs a disk or annulus")
            theta = (np.arange(self.n2) + 0.5) * (2.0 * np.pi / self.n2)
            return rho, theta
        if domain.kind != "rectangle":
            raise UnsupportedDomainError("cartesian lattice needs a rectangle")
        x = np.linspace(domain.x0, domain.x1, self.n1)
        y = np.linspace(domain.y0, domain.y1, self.n2)
        return x, y

    def spacing(self, domain: DomainSpec) -> tuple[float, float]:
        a1, a2 = self.axes(domain)
        return float(a1[1] - a1[0]), float(a2[1] - a2[0])

    def nodes(self, domain: DomainSpec) -> np.ndarray:
        """Complex node positions, shape (n1, n2)."""
        a1, a2 = self.axes(domain)
        if self.kind == "polar":
            return a1[:, None] * np.exp(1j * a2[None, :])
        return a1[:, None] + 1j * a2[None, :]

    def cell_areas(self, domain: DomainSpec) -> np.ndarray:
        """Quadrature weights per node: midpoint cells inside, trapezoid at
        inclusive edges. Sums to the domain area (exactly for polar grids)."""
        a1, a2 = self.axes(domain)
        d1 = a1[1] - a1[0]
        if self.kind == "polar":
            dth = 2.0 * np.pi / self.n2
            w1 = np.full(self.n1, d1)
            if domain.kind == "annulus":
                w1[0] = w1[-1] = 0.5 * d1
            return (a1 * w1)[:, None] * np.full(self.n2, dth)[None, :]
        d2 = a2[1] - a2[0]
        w1 = np.full(self.n1, d1)
        w1[0] = w1[-1] = 0.5 * d1
        w2 = np.full(self.n2, d2)
        w2[0] = w2[-1] = 0.5 * d2
        return w1[:, None] * w2[None, :]

    def is_periodic_axis2(self, domain: DomainSpec) -> bool:
        return self.kind == "polar"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n1": self.n1, "n2": self.n2}

    @staticmethod
    def from_dict(d: dict) -> "Lattice":
        return Lattice(kind=d["kind"], n1=int(d["n1"]), n2=int(d["n2"]))
