"""Discrete Wirtinger calculus on sampled complex maps.

A ``MapGrid`` stores complex samples of a map h on a polar or cartesian
lattice, optionally with an analytic (h_z, h_zbar) channel.  This module
differentiates, forms the energy / Jacobian / Hopf product, measures how far
the Hopf product is from being holomorphic, and evaluates the circle
quantities (normal/tangential splits, circular means) that the inequality
suite builds on.

Difference scheme.  On cartesian lattices, second-order central differences
with one-sided second-order stencils at the edges.  On polar lattices the
same 1-D stencils act along rho, the theta direction is periodic, and h_z,
h_zbar come from the polar chain rule

    h_z    = exp(-i theta)/2 * (d_rho - i/rho d_theta) h,
    h_zbar = exp(+i theta)/2 * (d_rho + i/rho d_theta) h.

The holomorphy residual of the Hopf product differentiates phi instead; in
the periodic direction it uses the Fourier derivative (exact on band-limited
rings), which keeps the residual of analytic-channel solutions at rounding
level instead of the O(dtheta^2) floor of a three-point stencil.

All reductions run in fixed numpy order, so repeated runs are bit-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import DomainMembershipError, DomainSpec, Lattice, UnsupportedDomainError


class SerializationError(ValueError):
    """Non-finite data or malformed records in grid files."""


@dataclass
class MapGrid:
    """Complex samples of a map on a lattice, plus optional analytic channel."""

    domain: DomainSpec
    lattice: Lattice
    values: np.ndarray
    analytic: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.lattice.n1, self.lattice.n2):
            raise ValueError(f"values shape {self.values.shape} does not match lattice "
                             f"({self.lattice.n1}, {self.lattice.n2})")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    def nodes(self) -> np.ndarray:
        return self.lattice.nodes(self.domain)

    def cell_areas(self) -> np.ndarray:
        return self.lattice.cell_areas(self.domain)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "domain": self.domain.to_dict(),
            "lattice": self.lattice.to_dict(),
            "values": _complex_to_pairs(self.values),
        }
        if self.analytic is not None:
            d["analytic"] = {
                "hz": _complex_to_pairs(self.analytic[0]),
                "hzbar": _complex_to_pairs(self.analytic[1]),
            }
        return d

    @staticmethod
    def from_dict(d: dict) -> "MapGrid":
        domain = DomainSpec.from_dict(d["domain"])
        lattice = Lattice.from_dict(d["lattice"])
        shape = (lattice.n1, lattice.n2)
        values = _pairs_to_complex(d["values"], shape)
        analytic = None
        if d.get("analytic") is not None:
            analytic = (
                _pairs_to_complex(d["analytic"]["hz"], shape),
                _pairs_to_complex(d["analytic"]["hzbar"], shape),
            )
        return MapGrid(domain=domain, lattice=lattice, values=values, analytic=analytic)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @staticmethod
    def from_json(text: str) -> "MapGrid":
        return MapGrid.from_dict(json.loads(text))


def _complex_to_pairs(a: np.ndarray) -> list:
    if not np.all(np.isfinite(a)):
        raise SerializationError("refusing to serialize non-finite complex data")
    flat = np.asarray(a, dtype=complex).ravel()
    return [[float(v.real), float(v.imag)] for v in flat]


def _pairs_to_complex(pairs: list, shape: tuple[int, int]) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] != shape[0] * shape[1]:
        raise SerializationError(f"expected {shape[0] * shape[1]} [re, im] pairs")
    z = arr[:, 0] + 1j * arr[:, 1]
    if not np.all(np.isfinite(z)):
        raise SerializationError("non-finite complex data in record")
    return z.reshape(shape)


def identity_grid(domain: DomainSpec, lattice: Lattice) -> MapGrid:
    """h(z) = z with its exact derivative channel; handy reference input."""
    nodes = lattice.nodes(domain)
    ones = np.ones_like(nodes)
    return MapGrid(domain=domain, lattice=lattice, values=nodes, analytic=(ones, np.zeros_like(nodes)))


@dataclass
class WirtingerField:
    """Per-node (h_z, h_zbar) with its provenance."""

    domain: DomainSpec
    lattice: Lattice
    hz: np.ndarray
    hzbar: np.ndarray
    provenance: str  # "analytic" | "central_difference"
    stencil_order: int = 2

    def __post_init__(self):
        if not (np.all(np.isfinite(self.hz)) and np.all(np.isfinite(self.hzbar))):
            raise ValueError("derivative fields must be finite")

    def cell_areas(self) -> np.ndarray:
        return self.lattice.cell_areas(self.domain)

    def nodes(self) -> np.ndarray:
        return self.lattice.nodes(self.domain)


@dataclass
class HopfField:
    """Samples of phi = h_z conj(h_zbar) and the holomorphy defect of phi."""

    domain: DomainSpec
    lattice: Lattice
    values: np.ndarray
    residual_norm: float
    closed_form: object | None = None

    def nodes(self) -> np.ndarray:
        return self.lattice.nodes(self.domain)

    def l1_norm(self) -> float:
        """Integral of |phi| over the domain."""
        return float(np.sum(np.abs(self.values) * self.lattice.cell_areas(self.domain)))


# ---------------------------------------------------------------------------
# difference stencils


def _diff_axis0(f: np.ndarray, d: float) -> np.ndarray:
    """Second-order first derivative along axis 0, one-sided at the ends."""
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * d)
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * d)
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * d)
    return out


def _diff_axis1_periodic(f: np.ndarray, d: float) -> np.ndarray:
    return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * d)


def _diff_axis1(f: np.ndarray, d: float) -> np.ndarray:
    out = np.empty_like(f)
    out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2.0 * d)
    out[:, 0] = (-3.0 * f[:, 0] + 4.0 * f[:, 1] - f[:, 2]) / (2.0 * d)
    out[:, -1] = (3.0 * f[:, -1] - 4.0 * f[:, -2] + f[:, -3]) / (2.0 * d)
    return out


def _diff_axis1_fourier(f: np.ndarray) -> np.ndarray:
    """Spectral d/dtheta along the periodic axis (exact on band-limited data)."""
    n2 = f.shape[1]
    k = np.fft.fftfreq(n2, d=1.0 / n2)
    if n2 % 2 == 0:
        k = k.copy()
        k[n2 // 2] = 0.0  # drop the unpaired Nyquist mode
    return np.fft.ifft(1j * k[None, :] * np.fft.fft(f, axis=1), axis=1)


def _grad_components(grid_values: np.ndarray, domain: DomainSpec, lattice: Lattice,
                     fourier_theta: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """(h_z, h_zbar) of sampled values by differencing."""
    a1, a2 = lattice.axes(domain)
    d1 = a1[1] - a1[0]
    if lattice.kind == "polar":
        dth = 2.0 * np.pi / lattice.n2
        f_r = _diff_axis0(grid_values, d1)
        if fourier_theta:
            f_t = _diff_axis1_fourier(grid_values)
        else:
            f_t = _diff_axis1_periodic(grid_values, dth)
        phase = np.exp(1j * a2)[None, :]
        rho = a1[:, None]
        hz = 0.5 * np.conj(phase) * (f_r - 1j * f_t / rho)
        hzbar = 0.5 * phase * (f_r + 1j * f_t / rho)
        return hz, hzbar
    d2 = a2[1] - a2[0]
    f_x = _diff_axis0(grid_values, d1)
    f_y = _diff_axis1(grid_values, d2)
    return 0.5 * (f_x - 1j * f_y), 0.5 * (f_x + 1j * f_y)


# ---------------------------------------------------------------------------
# operations


def wirtinger(grid: MapGrid, use_analytic: bool = True) -> WirtingerField:
    """Wirtinger derivatives of the grid; copies the analytic channel if present."""
    if grid.analytic is not None and use_analytic:
        hz, hzbar = grid.analytic
        return WirtingerField(grid.domain, grid.lattice, np.asarray(hz, dtype=complex),
                              np.asarray(hzbar, dtype=complex), provenance="analytic")
    hz, hzbar = _grad_components(grid.values, grid.domain, grid.lattice)
    return WirtingerField(grid.domain, grid.lattice, hz, hzbar, provenance="central_difference")


def dirichlet_energy(field: WirtingerField) -> float:
    """2 * integral of (|h_z|^2 + |h_zbar|^2) over the domain."""
    w = field.cell_areas()
    dens = np.abs(field.hz) ** 2 + np.abs(field.hzbar) ** 2
    return float(2.0 * np.sum(dens * w))


def jacobian(field: WirtingerField) -> np.ndarray:
    """Pointwise J = |h_z|^2 - |h_zbar|^2."""
    return np.abs(field.hz) ** 2 - np.abs(field.hzbar) ** 2


def hopf_product(field: WirtingerField, closed_form=None) -> HopfField:
    """phi = h_z conj(h_zbar) per node plus its holomorphy residual.

    The residual is the mean of |d phi / d zbar| over interior nodes (area
    weighted, normalized by the domain area); it vanishes exactly when phi
    is holomorphic.
    """
    phi = field.hz * np.conj(field.hzbar)
    fourier = field.lattice.kind == "polar"
    pz, pzbar = _grad_components(phi, field.domain, field.lattice, fourier_theta=fourier)
    w = field.cell_areas()
    interior = np.zeros(phi.shape, dtype=bool)
    interior[1:-1, :] = True
    if field.lattice.kind == "cartesian":
        interior[:, 0] = interior[:, -1] = False
    total = float(np.sum(np.abs(pzbar)[interior] * w[interior]))
    residual = total / field.domain.area()
    return HopfField(field.domain, field.lattice, phi, residual_norm=residual, closed_form=closed_form)


@dataclass
class DirectionalDerivatives:
    """Stretch magnitudes along the horizontal/vertical directions of phi.

    ``defect_jacobian`` is |d_H h| |d_V h| - |J| and ``defect_phi`` is
    (|d_H h|^2 - |d_V h|^2) - 4 |phi|; both vanish for exact data.  Where
    phi = 0 the direction field is undefined and the factor phi/|phi| is
    taken to be zero, which the magnitude formulas already realize.
    """

    d_horizontal: np.ndarray
    d_vertical: np.ndarray
    defect_jacobian: np.ndarray
    defect_phi: np.ndarray


def directional_derivatives(field: WirtingerField, hopf: HopfField) -> DirectionalDerivatives:
    a = np.abs(field.hz)
    b = np.abs(field.hzbar)
    dh = a + b
    dv = np.abs(a - b)
    jac = np.abs(a**2 - b**2)
    phi_abs = np.abs(hopf.values)
    return DirectionalDerivatives(
        d_horizontal=dh,
        d_vertical=dv,
        defect_jacobian=dh * dv - jac,
        defect_phi=dh**2 - dv**2 - 4.0 * phi_abs,
    )


def _nearest_ring(grid_or_field, rho: float) -> tuple[int, float]:
    lattice = grid_or_field.lattice
    domain = grid_or_field.domain
    if lattice.kind != "polar":
        raise UnsupportedDomainError("circle quantities need a polar lattice")
    radii, _ = lattice.axes(domain)
    if not domain.contains(complex(rho, 0.0)):
        raise DomainMembershipError(f"circle of radius {rho} leaves the domain")
    i = int(np.argmin(np.abs(radii - rho)))
    return i, float(radii[i])


@dataclass
class CircleSplit:
    """Normal/tangential derivative samples and integrals on one lattice circle."""

    rho: float
    h_normal: np.ndarray
    h_tangential: np.ndarray
    int_normal_sq: float
    int_tangential_sq: float
    int_energy_density: float


def normal_tangential(grid: MapGrid, rho: float, field: WirtingerField | None = None) -> CircleSplit:
    """Split Dh on the lattice circle nearest ``rho`` into h_N and h_T.

    h_N = (z h_z + zbar h_zbar)/|z|, h_T = i (z h_z - zbar h_zbar)/|z|;
    the integrals use the uniform-angle trapezoid rule.
    """
    if field is None:
        field = wirtinger(grid)
    i, r = _nearest_ring(grid, rho)
    z = grid.nodes()[i]
    hz = field.hz[i]
    hzbar = field.hzbar[i]
    hn = (z * hz + np.conj(z) * hzbar) / np.abs(z)
    ht = 1j * (z * hz - np.conj(z) * hzbar) / np.abs(z)
    dth = 2.0 * np.pi / grid.lattice.n2
    int_n = float(np.sum(np.abs(hn) ** 2) * r * dth)
    int_t = float(np.sum(np.abs(ht) ** 2) * r * dth)
    return CircleSplit(rho=r, h_normal=hn, h_tangential=ht,
                       int_normal_sq=int_n, int_tangential_sq=int_t,
                       int_energy_density=int_n + int_t)


@dataclass
class CircularMean:
    """Average of h on a circle, with the Lipschitz-type bound ratio.

    ``bound_ratio`` = |S(rho)| sqrt(pi) (R - rho) / (2 rho ||phi||^{1/2}),
    which cannot exceed 1 for a stationary map fixing h(0) = 0 (R is the
    distance from the center to the domain boundary).
    """

    rho: float
    mean: complex
    bound_ratio: float
    phi_norm: float


def circular_mean(grid: MapGrid, rho: float, field: WirtingerField | None = None,
                  phi_norm: float | None = None) -> CircularMean:
    if field is None:
        field = wirtinger(grid)
    i, r = _nearest_ring(grid, rho)
    mean = complex(np.mean(grid.values[i]))
    if phi_norm is None:
        phi = field.hz * np.conj(field.hzbar)
        phi_norm = float(np.sum(np.abs(phi) * grid.cell_areas()))
    if grid.domain.kind != "disk":
        raise UnsupportedDomainError("the centered mean bound needs a disk domain")
    R = grid.domain.radius
    if phi_norm > 0 and R > r:
        ratio = abs(mean) * math.sqrt(math.pi) * (R - r) / (2.0 * r * math.sqrt(phi_norm))
    else:
        ratio = 0.0
    return CircularMean(rho=r, mean=mean, bound_ratio=ratio, phi_norm=phi_norm)
