"""Specimen geometry, material constants, and grid rasterization.

Materials are isotropic and characterized either by wave speeds (c_L, c_T)
or by Lame parameters (lambda, mu):

    mu     = rho * c_T**2
    lambda = rho * (c_L**2 - 2 * c_T**2)

Cavity defects are cylindrical holes modeled as void (traction-free) cells;
the solver treats void cells as vacuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidMaterialError, InvalidResolutionError, PlacementError

#: Handbook values for rolled aluminum, used as the package-wide default.
ALUMINUM_DENSITY = 2700.0  # kg/m^3
ALUMINUM_C_L = 6320.0  # m/s
ALUMINUM_C_T = 3130.0  # m/s


def lame_from_speeds(density: float, c_l: float, c_t: float) -> tuple[float, float]:
    """Convert (density, wave speeds) to Lame parameters (lambda, mu).

    Raises InvalidMaterialError if density <= 0 or the speeds would imply
    a negative lambda (c_L**2 < 2 * c_T**2).
    """
    if density <= 0.0:
        raise InvalidMaterialError(f"density must be positive, got {density}")
    if c_t < 0.0:
        raise InvalidMaterialError(f"shear speed must be >= 0, got {c_t}")
    if c_l * c_l < 2.0 * c_t * c_t:
        raise InvalidMaterialError(
            f"c_L^2 >= 2*c_T^2 required for lambda >= 0 (c_L={c_l}, c_T={c_t})"
        )
    mu = density * c_t * c_t
    lam = density * (c_l * c_l - 2.0 * c_t * c_t)
    return lam, mu


def speeds_from_lame(density: float, lam: float, mu: float) -> tuple[float, float]:
    """Convert (density, lambda, mu) back to (c_L, c_T)."""
    if density <= 0.0:
        raise InvalidMaterialError(f"density must be positive, got {density}")
    if mu < 0.0:
        raise InvalidMaterialError(f"mu must be >= 0, got {mu}")
    if lam + 2.0 * mu <= 0.0:
        raise InvalidMaterialError("lambda + 2*mu must be positive")
    c_l = math.sqrt((lam + 2.0 * mu) / density)
    c_t = math.sqrt(mu / density)
    return c_l, c_t


@dataclass(frozen=True)
class MaterialSpec:
    """Homogeneous isotropic material given by density and wave speeds."""

    density: float = ALUMINUM_DENSITY
    longitudinal_speed: float = ALUMINUM_C_L
    shear_speed: float = ALUMINUM_C_T

    def __post_init__(self):
        # raises on invalid combinations
        lame_from_speeds(self.density, self.longitudinal_speed, self.shear_speed)

    @property
    def lame_lambda(self) -> float:
        return lame_from_speeds(
            self.density, self.longitudinal_speed, self.shear_speed
        )[0]

    @property
    def lame_mu(self) -> float:
        return lame_from_speeds(
            self.density, self.longitudinal_speed, self.shear_speed
        )[1]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in specimen coordinates (meters).

    x runs along the top surface, z points down into the specimen.
    """

    x0: float
    z0: float
    width: float
    height: float

    @property
    def x1(self) -> float:
        return self.x0 + self.width

    @property
    def z1(self) -> float:
        return self.z0 + self.height

    def contains(self, x: float, z: float, margin: float = 0.0) -> bool:
        return (
            self.x0 + margin <= x <= self.x1 - margin
            and self.z0 + margin <= z <= self.z1 - margin
        )

    def shrunk(self, margin: float) -> "Rect":
        return Rect(
            self.x0 + margin,
            self.z0 + margin,
            self.width - 2.0 * margin,
            self.height - 2.0 * margin,
        )


@dataclass(frozen=True)
class SpecimenGeometry:
    """2D cross-section of the specimen with its imaging window."""

    width: float = 0.100  # m, lateral extent of the section
    depth: float = 0.050  # m, below the transducer surface
    view_region: Rect = Rect(0.040, 0.0, 0.020, 0.050)

    def __post_init__(self):
        if self.width <= 0.0 or self.depth <= 0.0:
            raise InvalidResolutionError("specimen extents must be positive")
        v = self.view_region
        if v.width <= 0.0 or v.height <= 0.0:
            raise InvalidResolutionError("view region extents must be positive")
        eps = 1e-12
        if v.x0 < -eps or v.z0 < -eps or v.x1 > self.width + eps or v.z1 > self.depth + eps:
            raise InvalidResolutionError(
                "view region must lie entirely inside the specimen"
            )

    @property
    def bounds(self) -> Rect:
        return Rect(0.0, 0.0, self.width, self.depth)


@dataclass(frozen=True)
class DefectSpec:
    """Cylindrical cavity: circular cross-section at `center` (meters)."""

    center: tuple[float, float]
    diameter: float = 0.002

    @property
    def radius(self) -> float:
        return self.diameter / 2.0


@dataclass(eq=False)
class MaterialField:
    """Per-cell material parameters on a uniform grid of nx * nz cells.

    Cell (j, i) is centered at ((i + 1/2) dx, (j + 1/2) dx); arrays are
    indexed [z, x]. Void cells mark the cavity and carry zero density and
    moduli. Arrays are frozen (non-writeable) so a field can be shared
    between threads; identity equality keeps instances hashable for the
    solver's coefficient cache.
    """

    dx: float
    nx: int
    nz: int
    density: np.ndarray
    lame_lambda: np.ndarray
    lame_mu: np.ndarray
    void: np.ndarray

    def __post_init__(self):
        for arr in (self.density, self.lame_lambda, self.lame_mu, self.void):
            if arr.shape != (self.nz, self.nx):
                raise ValueError(f"array shape {arr.shape} != (nz={self.nz}, nx={self.nx})")
            arr.setflags(write=False)

    @property
    def width(self) -> float:
        return self.nx * self.dx

    @property
    def depth(self) -> float:
        return self.nz * self.dx

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, z) coordinates of cell centers, each shaped (nz, nx)."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        z = (np.arange(self.nz) + 0.5) * self.dx
        return np.broadcast_to(x, (self.nz, self.nx)), np.broadcast_to(
            z[:, None], (self.nz, self.nx)
        )

    def max_longitudinal_speed(self) -> float:
        solid = ~self.void
        if not solid.any():
            raise InvalidMaterialError("field contains no material cells")
        lam = self.lame_lambda[solid]
        mu = self.lame_mu[solid]
        rho = self.density[solid]
        return float(np.sqrt(np.max((lam + 2.0 * mu) / rho)))


def rasterize_specimen(
    geometry: SpecimenGeometry, material: MaterialSpec, dx: float
) -> MaterialField:
    """Rasterize a homogeneous specimen onto a uniform grid.

    nx = round(width / dx), nz = round(depth / dx); dx must be strictly
    smaller than both extents.
    """
    if dx <= 0.0:
        raise InvalidResolutionError(f"dx must be positive, got {dx}")
    if dx >= min(geometry.width, geometry.depth):
        raise InvalidResolutionError(
            f"dx={dx} m is too coarse for a {geometry.width} x {geometry.depth} m specimen"
        )
    nx = round(geometry.width / dx)
    nz = round(geometry.depth / dx)
    lam, mu = lame_from_speeds(
        material.density, material.longitudinal_speed, material.shear_speed
    )
    shape = (nz, nx)
    return MaterialField(
        dx=dx,
        nx=nx,
        nz=nz,
        density=np.full(shape, material.density),
        lame_lambda=np.full(shape, lam),
        lame_mu=np.full(shape, mu),
        void=np.zeros(shape, dtype=bool),
    )


def insert_cavity(
    field: MaterialField, defect: DefectSpec, margin: float = 0.0
) -> MaterialField:
    """Return a copy of `field` with cells inside the defect circle voided.

    A cell is voided when its center lies within `defect.radius` of the
    defect center. The circle (plus `margin`) must stay strictly inside
    the specimen.
    """
    if defect.diameter <= 0.0:
        raise PlacementError(f"defect diameter must be positive, got {defect.diameter}")
    cx, cz = defect.center
    r = defect.radius
    clearance = r + margin
    if (
        cx - clearance <= 0.0
        or cz - clearance <= 0.0
        or cx + clearance >= field.width
        or cz + clearance >= field.depth
    ):
        raise PlacementError(
            f"cavity at ({cx}, {cz}) with diameter {defect.diameter} and margin "
            f"{margin} does not fit inside the {field.width} x {field.depth} m specimen"
        )
    xs, zs = field.cell_centers()
    inside = (xs - cx) ** 2 + (zs - cz) ** 2 <= r * r
    void = field.void | inside
    zero = np.where(inside, 0.0, 1.0)
    return replace(
        field,
        density=field.density * zero,
        lame_lambda=field.lame_lambda * zero,
        lame_mu=field.lame_mu * zero,
        void=void,
    )
