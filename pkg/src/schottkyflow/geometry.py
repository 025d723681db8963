"""Moebius transformations on the boundary sphere of hyperbolic 2- and 3-space.

Maps are 2x2 complex matrices normalized to determinant one and identified
up to a global sign.  The conformal boundary derivative carries both the
expansion rate and the frame rotation, so return times, holonomy angles and
multiplier data all reduce to the arithmetic in this module.  Everything
works in the plane chart: infinity is kept away from all disks by the coding
layer, so no chart switching is needed.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

DET_TOL = 1e-12
POLE_TOL = 1e-14
REAL_TOL = 1e-12
SIGN_EQ_TOL = 1e-9


class PoleAt(ArithmeticError):
    """Evaluation requested too close to the pole of a Moebius map."""


class NotLoxodromic(ValueError):
    """Multiplier data requested for an elliptic, parabolic or identity map."""


class PoleOnBoundary(ValueError):
    """Disk image undefined: the pole lies on the disk boundary."""


class PoleInside(ValueError):
    """Disk image is not a disk: the pole lies inside the disk."""


def require_finite(*values: complex) -> None:
    """Reject NaN/Inf components before they enter any public operation."""
    for z in values:
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise ValueError(f"non-finite complex value {z!r}")


def wrap_angle(x: float) -> float:
    """Reduce an angle to the interval (-pi, pi]."""
    r = math.remainder(x, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """z -> (az + b)/(cz + d), stored with ad - bc = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        require_finite(self.a, self.b, self.c, self.d)
        det = self.a * self.d - self.b * self.c
        if abs(det) < DET_TOL:
            raise ValueError("singular matrix is not a Moebius map")
        if abs(det - 1.0) > DET_TOL:
            s = cmath.sqrt(det)
            object.__setattr__(self, "a", complex(self.a) / s)
            object.__setattr__(self, "b", complex(self.b) / s)
            object.__setattr__(self, "c", complex(self.c) / s)
            object.__setattr__(self, "d", complex(self.d) / s)
        else:
            object.__setattr__(self, "a", complex(self.a))
            object.__setattr__(self, "b", complex(self.b))
            object.__setattr__(self, "c", complex(self.c))
            object.__setattr__(self, "d", complex(self.d))

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def unchecked(cls, a, b, c, d) -> "MoebiusMap":
        """Wrap entries whose determinant is structurally one.

        Long products of normalized maps have huge entries whose determinant
        can no longer be evaluated in floating point (ad and bc agree to all
        digits), so re-normalizing would destroy them; the determinant is
        exactly one by construction and is taken on trust here.
        """
        m = object.__new__(cls)
        object.__setattr__(m, "a", complex(a))
        object.__setattr__(m, "b", complex(b))
        object.__setattr__(m, "c", complex(c))
        object.__setattr__(m, "d", complex(d))
        return m

    @classmethod
    def disk_pairing(cls, source_center: complex, target_center: complex,
                     radius: float) -> "MoebiusMap":
        """Map sending |z - source_center| = r onto |w - target_center| = r.

        g(z) = c_plus - r^2/(z - c_minus) maps the exterior of the source
        disk onto the interior of the target disk.
        """
        if radius <= 0:
            raise ValueError("pairing radius must be positive")
        cm, cp = complex(source_center), complex(target_center)
        return cls(cp, -cp * cm - radius * radius, 1.0, -cm)

    def entries(self) -> tuple[complex, complex, complex, complex]:
        return (self.a, self.b, self.c, self.d)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """Matrix product: (self.compose(other))(z) = self(other(z))."""
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    __matmul__ = compose

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def pole(self) -> complex | None:
        """Point sent to infinity, or None for affine maps (c = 0)."""
        if abs(self.c) < POLE_TOL:
            return None
        return -self.d / self.c

    def __call__(self, z):
        return apply(self, z)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        direct = max(abs(x - y) for x, y in zip(self.entries(), other.entries()))
        flipped = max(abs(x + y) for x, y in zip(self.entries(), other.entries()))
        return min(direct, flipped) < SIGN_EQ_TOL

    def __hash__(self):
        raise TypeError("MoebiusMap compares projectively and is unhashable")

    def __repr__(self):
        return f"MoebiusMap({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"


def apply(m: MoebiusMap, z):
    """Evaluate m at z; z may be a complex scalar or a numpy array."""
    if np.isscalar(z) or isinstance(z, complex):
        require_finite(z)
        den = m.c * z + m.d
        if abs(den) < POLE_TOL:
            raise PoleAt(f"evaluation at pole of Moebius map: z = {z}")
        return (m.a * z + m.b) / den
    z = np.asarray(z, dtype=complex)
    den = m.c * z + m.d
    if np.any(np.abs(den) < POLE_TOL):
        raise PoleAt("array evaluation hits the pole of a Moebius map")
    return (m.a * z + m.b) / den


def derivative(m: MoebiusMap, z):
    """Conformal derivative 1/(cz + d)^2; satisfies the chain rule."""
    if np.isscalar(z) or isinstance(z, complex):
        require_finite(z)
        den = m.c * z + m.d
        if abs(den) < POLE_TOL:
            raise PoleAt(f"derivative at pole of Moebius map: z = {z}")
        return 1.0 / (den * den)
    z = np.asarray(z, dtype=complex)
    den = m.c * z + m.d
    if np.any(np.abs(den) < POLE_TOL):
        raise PoleAt("array derivative hits the pole of a Moebius map")
    return 1.0 / (den * den)


@dataclass(frozen=True)
class LoxodromicData:
    """Geodesic length and frame rotation extracted from the multiplier."""

    translation_length: float
    rotation_angle: float


def loxodromic_data(m: MoebiusMap, tol: float = 1e-9) -> LoxodromicData:
    """Length 2 log|mu| and angle 2 arg(mu) for the eigenvalue |mu| > 1.

    Raises NotLoxodromic for elliptic, parabolic or identity input, i.e.
    whenever the trace lies in the real interval [-2, 2] up to tol.
    """
    t = m.trace
    disc = cmath.sqrt(t * t - 4.0)
    mu1 = (t + disc) / 2.0
    mu2 = (t - disc) / 2.0
    mu = mu1 if abs(mu1) >= abs(mu2) else mu2
    if abs(mu) <= 1.0 + tol:
        raise NotLoxodromic(f"trace {t} is not loxodromic")
    return LoxodromicData(
        translation_length=2.0 * math.log(abs(mu)),
        rotation_angle=wrap_angle(2.0 * cmath.phase(mu)),
    )


def fixed_points(m: MoebiusMap) -> tuple[complex, complex]:
    """Both fixed points, attracting first.  Requires a loxodromic map with c != 0."""
    if abs(m.c) < POLE_TOL:
        if abs(m.d - m.a) < POLE_TOL:
            raise NotLoxodromic("identity or parabolic affine map")
        p = m.b / (m.d - m.a)
        # second fixed point is infinity; attracting one is finite iff |a/d| < 1
        if abs(m.a / m.d) < 1.0:
            return p, complex(math.inf, 0.0)
        raise NotLoxodromic("attracting fixed point at infinity")
    t = m.trace
    disc = cmath.sqrt(t * t - 4.0)
    p1 = (m.a - m.d + disc) / (2.0 * m.c)
    p2 = (m.a - m.d - disc) / (2.0 * m.c)
    # eigenvalue at a fixed point p is c p + d; attracting iff |c p + d| > 1
    if abs(m.c * p1 + m.d) >= abs(m.c * p2 + m.d):
        return p1, p2
    return p2, p1


def is_real(m: MoebiusMap, tol: float = REAL_TOL) -> bool:
    """True iff some global phase makes all four entries real within tol."""
    entries = m.entries()
    pivot = max(entries, key=abs)
    phase = pivot / abs(pivot)
    return all(abs((e / phase).imag) <= tol for e in entries)


@dataclass(frozen=True)
class Disk:
    """Euclidean disk in the plane chart of the boundary sphere."""

    center: complex
    radius: float

    def __post_init__(self):
        require_finite(self.center)
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, z, margin: float = 0.0):
        """Closed-disk membership, shrunk by margin; scalar or array z."""
        return np.abs(np.asarray(z) - self.center) <= self.radius - margin

    def boundary_points(self, n: int = 64) -> np.ndarray:
        angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return self.center + self.radius * np.exp(1j * angles)

    def __repr__(self):
        return f"Disk({self.center!r}, {self.radius!r})"


def circumcircle(z1: complex, z2: complex, z3: complex) -> Disk:
    """Circle through three non-collinear points."""
    x1, y1 = z1.real, z1.imag
    x2, y2 = z2.real, z2.imag
    x3, y3 = z3.real, z3.imag
    d = 2.0 * (x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2))
    scale = max(abs(z1 - z2), abs(z2 - z3), abs(z3 - z1))
    if abs(d) < 1e-14 * scale * scale:
        raise ValueError("collinear points have no circumcircle")
    s1, s2, s3 = abs(z1) ** 2, abs(z2) ** 2, abs(z3) ** 2
    ux = (s1 * (y2 - y3) + s2 * (y3 - y1) + s3 * (y1 - y2)) / d
    uy = (s1 * (x3 - x2) + s2 * (x1 - x3) + s3 * (x2 - x1)) / d
    center = complex(ux, uy)
    return Disk(center, abs(z1 - center))


IMAGE_DISK_TOL = 1e-10


def image_disk(m: MoebiusMap, disk: Disk, samples: int = 64) -> Disk:
    """Exact image disk of a Euclidean disk not meeting the pole of m.

    Constructed as the circumcircle of three boundary images, then checked
    against `samples` further boundary points, which must land on the image
    circle within 1e-10.  One code path for every map, self-validating.
    """
    p = m.pole()
    if p is not None:
        gap = abs(p - disk.center) - disk.radius
        if abs(gap) <= POLE_TOL:
            raise PoleOnBoundary(f"pole {p} lies on the boundary of {disk}")
        if gap < 0:
            raise PoleInside(f"pole {p} lies inside {disk}")
    tri = disk.center + disk.radius * np.exp(1j * np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0]))
    w1, w2, w3 = (apply(m, z) for z in tri)
    image = circumcircle(w1, w2, w3)
    boundary = apply(m, disk.boundary_points(samples))
    residual = float(np.max(np.abs(np.abs(boundary - image.center) - image.radius)))
    if residual > IMAGE_DISK_TOL:
        raise ValueError(f"image circle check failed, residual {residual:.3e}")
    return image
