"""Closed-form maps with exact Wirtinger derivatives and Hopf products.

Four canonical stationary maps, each carrying analytic h_z, h_zbar and a
closed-form Hopf product phi = h_z * conj(h_zbar):

``piecewise_linear``   2z + conj(z) glued with z + 2conj(z) across the real
                       axis; phi == 2, Jacobian flips sign.
``power_log``          z^(1-a)/(1-a) + conj(z)^(1+a)/(1+a) on the upper half
                       disk (a = 2/p; log z + conj(z)^2/2 when p = 2),
                       reflected to the lower half; phi == 1.  |h_z| is in
                       weak-L^p but not L^p.
``butterfly``          z - conj(z) - i(z^(3/2) - conj(z^(3/2))) on the unit
                       disk with the branch cut along [0, 1]; the cut is
                       squeezed to a point and phi = -(4 + 9z)/4.
``hammering``          z/|z| inside the unit circle glued with the Nitsche
                       map (z + 1/conj(z))/2 outside; the inner collar is
                       squeezed onto the unit circle and phi = -1/(4 z^2).

All evaluators are numpy-vectorized.  Branch convention: arguments are taken
in [0, 2*pi), so discontinuities of the square root fall exactly on the
positive real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import DomainMembershipError, DomainSpec, ParameterError


class SingularPointError(ValueError):
    """Derivatives requested exactly on the singular set."""


class UnsupportedMapError(TypeError):
    """Operation not defined for this map id."""


def _theta02pi(z: np.ndarray) -> np.ndarray:
    """Argument in [0, 2*pi); the cut sits on the positive real axis."""
    th = np.angle(z)
    return np.where(th < 0, th + 2.0 * np.pi, th)


def _seg01_distance(z: np.ndarray) -> np.ndarray:
    """Distance to the segment [0, 1] on the real axis."""
    x, y = z.real, z.imag
    t = np.clip(x, 0.0, 1.0)
    return np.hypot(x - t, y)


@dataclass(frozen=True)
class ExampleMap:
    """A closed-form map with analytic derivative and Hopf-product channels."""

    map_id: str
    domain: DomainSpec
    params: dict = field(default_factory=dict)

    # -- evaluation -----------------------------------------------------

    def value(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return _VALUE[self.map_id](z, self.params)

    def dz(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return _DZ[self.map_id](z, self.params)

    def dzbar(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return _DZBAR[self.map_id](z, self.params)

    def hopf(self, z) -> np.ndarray:
        """Closed-form phi(z) = h_z * conj(h_zbar)."""
        z = np.asarray(z, dtype=complex)
        return _HOPF[self.map_id](z, self.params)

    # -- singular set ----------------------------------------------------

    @property
    def singular_set(self) -> str:
        return _SINGULAR_DESC[self.map_id]

    def singular_distance(self, z) -> np.ndarray:
        """Distance to the locus where first derivatives jump or blow up.

        For ``hammering`` the map is C^1 and the locus (the unit circle,
        where second derivatives jump) only matters for stencil masking.
        """
        z = np.asarray(z, dtype=complex)
        return _SINGULAR_DIST[self.map_id](z)

    @property
    def derivatives_continuous(self) -> bool:
        return self.map_id == "hammering"

    # -- grids -----------------------------------------------------------

    def to_grid(self, n1: int, n2: int, analytic: bool = True):
        """Sample onto the map's natural lattice as a calculus.MapGrid."""
        from . import calculus
        from .geometry import Lattice

        kind = "cartesian" if self.domain.kind == "rectangle" else "polar"
        lattice = Lattice(kind=kind, n1=n1, n2=n2)
        nodes = lattice.nodes(self.domain)
        values = self.value(nodes)
        channel = None
        if analytic:
            channel = (self.dz(nodes), self.dzbar(nodes))
        return calculus.MapGrid(domain=self.domain, lattice=lattice, values=values, analytic=channel)


# ---------------------------------------------------------------------------
# piecewise linear: 2z + conj(z) above the real axis, z + 2conj(z) below


def _pl_value(z, p):
    return np.where(z.imag >= 0, 2 * z + np.conj(z), z + 2 * np.conj(z))


def _pl_dz(z, p):
    return np.where(z.imag >= 0, 2.0, 1.0).astype(complex)


def _pl_dzbar(z, p):
    return np.where(z.imag >= 0, 1.0, 2.0).astype(complex)


def _pl_hopf(z, p):
    return np.full_like(z, 2.0, dtype=complex)


# ---------------------------------------------------------------------------
# power_log: upper-half formulas, reflected (unconjugated) to the lower half


def _plog_upper(z, p):
    if p == 2.0:
        return np.log(z) + np.conj(z) ** 2 / 2.0
    a = 2.0 / p
    return z ** (1.0 - a) / (1.0 - a) + np.conj(z) ** (1.0 + a) / (1.0 + a)


def _plog_upper_dz(z, p):
    return z ** (-2.0 / p)


def _plog_upper_dzbar(z, p):
    # conj(h_zbar) = z^(2/p) on the upper half plane
    return np.conj(z ** (2.0 / p))


def _plog_value(z, p):
    pp = p["p"]
    zu = np.where(z.imag < 0, np.conj(z), z)
    with np.errstate(divide="ignore", invalid="ignore"):
        return _plog_upper(zu, pp)


def _plog_dz(z, p):
    pp = p["p"]
    lower = z.imag < 0
    zu = np.where(lower, np.conj(z), z)
    with np.errstate(divide="ignore", invalid="ignore"):
        up_dz = _plog_upper_dz(zu, pp)
        up_dzbar = _plog_upper_dzbar(zu, pp)
    # reflection h(z) = h(conj z) swaps and conjugates the derivative pair
    return np.where(lower, np.conj(up_dzbar), up_dz)


def _plog_dzbar(z, p):
    pp = p["p"]
    lower = z.imag < 0
    zu = np.where(lower, np.conj(z), z)
    with np.errstate(divide="ignore", invalid="ignore"):
        up_dz = _plog_upper_dz(zu, pp)
        up_dzbar = _plog_upper_dzbar(zu, pp)
    return np.where(lower, np.conj(up_dz), up_dzbar)


def _plog_hopf(z, p):
    return np.ones_like(z, dtype=complex)


# ---------------------------------------------------------------------------
# butterfly: h = 2 rho (sqrt(rho) sin(3 theta/2) + i sin(theta))


def _bf_sqrt(z):
    rho = np.abs(z)
    th = _theta02pi(z)
    return np.sqrt(rho) * np.exp(0.5j * th)


def _bf_value(z, p):
    rho = np.abs(z)
    th = _theta02pi(z)
    return 2.0 * rho * (np.sqrt(rho) * np.sin(1.5 * th) + 1j * np.sin(th))


def _bf_dz(z, p):
    return 1.0 - 1.5j * _bf_sqrt(z)


def _bf_dzbar(z, p):
    return -1.0 + 1.5j * np.conj(_bf_sqrt(z))


def _bf_hopf(z, p):
    return -0.25 * (4.0 + 9.0 * z)


# ---------------------------------------------------------------------------
# hammering: z/|z| on r < |z| <= 1 glued with (z + 1/conj(z))/2 on 1 <= |z| < R


def _hm_value(z, p):
    a = np.abs(z)
    return np.where(a <= 1.0, z / a, 0.5 * (z + 1.0 / np.conj(z)))


def _hm_dz(z, p):
    a = np.abs(z)
    return np.where(a <= 1.0, 0.5 / a, 0.5).astype(complex)


def _hm_dzbar(z, p):
    a = np.abs(z)
    return np.where(a <= 1.0, -(z**2) / (2.0 * a**3), -0.5 / np.conj(z) ** 2)


def _hm_hopf(z, p):
    return -0.25 / z**2


_VALUE = {"piecewise_linear": _pl_value, "power_log": _plog_value, "butterfly": _bf_value, "hammering": _hm_value}
_DZ = {"piecewise_linear": _pl_dz, "power_log": _plog_dz, "butterfly": _bf_dz, "hammering": _hm_dz}
_DZBAR = {"piecewise_linear": _pl_dzbar, "power_log": _plog_dzbar, "butterfly": _bf_dzbar, "hammering": _hm_dzbar}
_HOPF = {"piecewise_linear": _pl_hopf, "power_log": _plog_hopf, "butterfly": _bf_hopf, "hammering": _hm_hopf}

_SINGULAR_DESC = {
    "piecewise_linear": "real axis (derivative jump; values continuous)",
    "power_log": "origin and the real diameter (reflection seam; derivatives unbounded at 0)",
    "butterfly": "ray [0, 1] on the real axis (branch cut; the ray is squeezed to the origin)",
    "hammering": "unit circle (C^1 gluing seam; second derivatives jump)",
}

_SINGULAR_DIST = {
    "piecewise_linear": lambda z: np.abs(z.imag),
    "power_log": lambda z: np.minimum(np.abs(z), np.abs(z.imag)),
    "butterfly": _seg01_distance,
    "hammering": lambda z: np.abs(np.abs(z) - 1.0),
}


# ---------------------------------------------------------------------------
# constructors and operations


def piecewise_linear() -> ExampleMap:
    return ExampleMap("piecewise_linear", DomainSpec.disk(1.0))


def power_log(p: float) -> ExampleMap:
    if not (1.0 < p <= 16.0):
        raise ParameterError(f"power_log exponent must lie in (1, 16], got {p}")
    return ExampleMap("power_log", DomainSpec.disk(1.0), {"p": float(p)})


def butterfly() -> ExampleMap:
    return ExampleMap("butterfly", DomainSpec.disk(1.0))


def hammering(r: float = 0.5, R: float = 2.0) -> ExampleMap:
    if not (0 < r < 1 < R):
        raise ParameterError(f"hammering radii must satisfy 0 < r < 1 < R, got ({r}, {R})")
    return ExampleMap("hammering", DomainSpec.annulus(r, R), {"r": float(r), "R": float(R)})


def make_map(map_id: str, **params) -> ExampleMap:
    builders = {
        "piecewise_linear": piecewise_linear,
        "power_log": power_log,
        "butterfly": butterfly,
        "hammering": hammering,
    }
    if map_id not in builders:
        raise UnsupportedMapError(f"unknown map id {map_id!r}")
    return builders[map_id](**params)


def eval_map(emap: ExampleMap, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate (value, h_z, h_zbar); errors outside the domain or on the cut."""
    z = np.asarray(z, dtype=complex)
    if not np.all(emap.domain.contains(z)):
        raise DomainMembershipError(f"point outside the {emap.map_id} domain")
    if not emap.derivatives_continuous and np.any(emap.singular_distance(z) == 0.0):
        raise SingularPointError(f"derivative request on the singular set of {emap.map_id}")
    return emap.value(z), emap.dz(z), emap.dzbar(z)


def analytic_hopf(emap: ExampleMap) -> Callable[[np.ndarray], np.ndarray]:
    """The closed-form Hopf product as an evaluable function of z."""
    return emap.hopf


def printed_identities(emap: ExampleMap, z) -> dict:
    """Pointwise energy density, Jacobian, |h_z|^2 and |h_zbar|^2 in closed form.

    Only the two squeezing deformations carry these identities:
    butterfly    |h_z|^2 = 1 + 9 rho/4 + 3 sqrt(rho) sin(theta/2),  J = 6 sqrt(rho) sin(theta/2)
    hammering    J = 0 on the inner collar, (1 - |z|^-4)/4 on the outer one.
    """
    z = np.asarray(z, dtype=complex)
    if emap.map_id == "butterfly":
        rho = np.abs(z)
        th = _theta02pi(z)
        s = 3.0 * np.sqrt(rho) * np.sin(0.5 * th)
        hz2 = 1.0 + 2.25 * rho + s
        hzb2 = 1.0 + 2.25 * rho - s
        return {
            "energy_density": 4.0 + 9.0 * rho,
            "jacobian": 2.0 * s,
            "hz_sq": hz2,
            "hzbar_sq": hzb2,
        }
    if emap.map_id == "hammering":
        a = np.abs(z)
        inner = a <= 1.0
        hz2 = np.where(inner, 0.25 / a**2, 0.25)
        hzb2 = np.where(inner, 0.25 / a**2, 0.25 / a**4)
        return {
            "energy_density": 2.0 * (hz2 + hzb2),
            "jacobian": hz2 - hzb2,
            "hz_sq": hz2,
            "hzbar_sq": hzb2,
        }
    raise UnsupportedMapError(f"no printed identities for {emap.map_id!r}")


def weak_lp_profile(emap: ExampleMap, lam: float, n: int = 512) -> float:
    """Lattice-counted area of the superlevel set {|h_z| > lam} in the disk.

    For the power_log map |h_z| = |z|^(-2/p), so the exact area is
    pi * lam^(-p) once lam >= 1; below 1 the set is the whole disk.
    """
    if emap.map_id != "power_log":
        raise UnsupportedMapError("weak-Lp profile is defined for power_log only")
    radius = emap.domain.radius
    if lam < 1.0:
        return math.pi * radius**2
    from .geometry import Lattice

    lattice = Lattice("polar", n, n)
    nodes = lattice.nodes(emap.domain)
    w = lattice.cell_areas(emap.domain)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.abs(emap.dz(nodes))
    return float(np.sum(w[mag > lam]))
