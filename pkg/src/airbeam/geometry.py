"""Sector geometry in the complex plane.

The feasible set of each auxiliary variable is the part of the
outside-the-unit-circle region whose argument falls in a half-open
interval [l, u).  For intervals no wider than pi the convex hull of
that set is the intersection of three half-planes: a chord cut joining
the two unit-circle corner points plus the two bounding rays.  Wider
sectors have the whole plane as their hull, so no cuts are emitted.

All half-planes are written in the normal form Re{conj(x) * c} >= r.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

ANGLE_TOL = 1e-12  # boundary tolerance for membership tests
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Sector:
    """Half-open argument interval [l, u), width in (0, 2*pi]."""

    l: float
    u: float

    def __post_init__(self):
        if not (math.isfinite(self.l) and math.isfinite(self.u)):
            raise ValueError("sector bounds must be finite")
        w = self.u - self.l
        if not (0.0 < w <= TWO_PI + ANGLE_TOL):
            raise ValueError(f"sector width must be in (0, 2*pi], got {w}")

    @property
    def width(self) -> float:
        return self.u - self.l

    @property
    def mid(self) -> float:
        return 0.5 * (self.l + self.u)


@dataclass(frozen=True)
class SectorBox:
    """Cartesian product of one sector per device."""

    sectors: tuple[Sector, ...]

    def __init__(self, sectors):
        object.__setattr__(self, "sectors", tuple(sectors))
        if len(self.sectors) == 0:
            raise ValueError("a sector box needs at least one sector")

    def __len__(self) -> int:
        return len(self.sectors)

    def __getitem__(self, k: int) -> Sector:
        return self.sectors[k]

    @staticmethod
    def full(num_devices: int) -> "SectorBox":
        """Root box: [0, 2*pi) for every device."""
        return SectorBox([Sector(0.0, TWO_PI)] * num_devices)


@dataclass(frozen=True)
class HalfPlane:
    """The set {x : Re(conj(x) * normal) >= offset}."""

    normal: complex
    offset: float

    def contains(self, x: complex, tol: float = ANGLE_TOL) -> bool:
        return (x.conjugate() * self.normal).real >= self.offset - tol


def feasible_point(x: complex, tol: float = ANGLE_TOL) -> bool:
    """Membership in the outside-unit-circle region |x| >= 1."""
    return abs(x) >= 1.0 - tol


def sector_contains(s: Sector, x: complex, tol: float = ANGLE_TOL) -> bool:
    """Argument membership in [l, u), half-open at u.

    The test is modular, so sectors whose bounds happen to fall outside
    [0, 2*pi) (e.g. a centred interval like [-pi/4, pi/4)) work too.
    """
    if x == 0:
        return False
    delta = (cmath.phase(x) - s.l) % TWO_PI
    # snap angles that are a full turn away from l back onto the lower edge
    if delta >= TWO_PI - tol:
        delta = 0.0
    return delta < s.u - s.l - tol or delta <= tol


def hull_constraints(s: Sector) -> list[HalfPlane]:
    """Half-plane description of the convex hull of a unit-circle-exterior sector.

    For width w <= pi returns exactly three cuts:

    * chord:     Re{conj(x) e^{j(l+u)/2}} >= cos(w/2), the line through the
      two corner points e^{jl} and e^{ju};
    * lower ray: Im{x e^{-jl}} >= 0;
    * upper ray: Im{x e^{-ju}} <= 0.

    For w > pi the hull is the whole plane and the list is empty.  The
    minimum modulus over the returned region is cos(w/2) when w <= pi.
    """
    w = s.u - s.l
    if w > math.pi:
        return []
    chord = HalfPlane(cmath.exp(1j * s.mid), math.cos(0.5 * w))
    # Im{x e^{-jl}} >= 0  <=>  Re{conj(x) * j e^{jl}} >= 0
    lower = HalfPlane(1j * cmath.exp(1j * s.l), 0.0)
    # Im{x e^{-ju}} <= 0  <=>  Re{conj(x) * (-j e^{ju})} >= 0
    upper = HalfPlane(-1j * cmath.exp(1j * s.u), 0.0)
    return [chord, lower, upper]


def hull_contains(s: Sector, x: complex, tol: float = 1e-9) -> bool:
    """True when x satisfies every hull cut of the sector."""
    return all(hp.contains(x, tol) for hp in hull_constraints(s))


def box_hull_contains(box: SectorBox, x, tol: float = 1e-9) -> bool:
    """True when each component of x lies in the hull of its sector."""
    if len(x) != len(box):
        raise ValueError("point length does not match box size")
    return all(hull_contains(s, complex(v), tol) for s, v in zip(box.sectors, x))


def split_sector(s: Sector) -> tuple[Sector, Sector]:
    """Bisect at the midpoint; the halves partition [l, u) exactly."""
    m = s.mid
    return Sector(s.l, m), Sector(m, s.u)


def split_box(box: SectorBox, k: int) -> tuple[SectorBox, SectorBox]:
    """Bisect sector k of the box, leaving every other device untouched."""
    if not 0 <= k < len(box):
        raise IndexError(f"device index {k} out of range for K={len(box)}")
    left_k, right_k = split_sector(box[k])
    sectors = list(box.sectors)
    left = SectorBox(sectors[:k] + [left_k] + sectors[k + 1:])
    right = SectorBox(sectors[:k] + [right_k] + sectors[k + 1:])
    return left, right
