"""Mobius group of R^3, its ten conformal generators, and chart maps to S^3.

Finite maps are kept as ordered compositions of four primitives
(translation, rotation, dilation, sphere inversion) rather than O(4,1)
matrices, so inversion singularities stay explicit: applying a map checks
the distance of every intermediate point to the upcoming inversion center.

Stereographic convention (documented, fixed): the projection pole is
(0, 0, 0, 1);  to_r3(x) = (x1, x2, x3) / (1 - x4)  and its inverse is
to_s3(y) = (2y, |y|^2 - 1) / (|y|^2 + 1).  The origin maps to the pole
antipode (0, 0, 0, -1).  With this scaling the flat Clifford chart in S^3
projects exactly onto the revolution torus with radii (sqrt(2), 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InversionSingularity, PoleSingularity, ValidationError
from .surface import GeometryCache, Immersion, ScalarField, geometry

__all__ = [
    "Translation",
    "Rotation",
    "Dilation",
    "SphereInversion",
    "MobiusMap",
    "identity_map",
    "apply_mobius",
    "apply_immersion",
    "random_mobius",
    "stereo_to_r3",
    "stereo_to_s3",
    "stereo_jacobian_to_s3",
    "ConformalField",
    "conformal_generators",
    "normal_component",
]


def _unit(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    n = np.linalg.norm(vec)
    if n == 0.0:
        raise ValidationError("zero vector where a direction was expected")
    return vec / n


@dataclass(frozen=True)
class Translation:
    offset: tuple

    def apply(self, pts):
        return pts + np.asarray(self.offset, dtype=float)

    def inverse(self):
        return Translation(tuple(-x for x in self.offset))


@dataclass(frozen=True)
class Rotation:
    axis: tuple  # unit vector
    angle: float

    def apply(self, pts):
        # Rodrigues rotation about the origin
        k = _unit(self.axis)
        c, s = np.cos(self.angle), np.sin(self.angle)
        kxp = np.cross(np.broadcast_to(k, pts.shape), pts)
        kdp = pts @ k
        return pts * c + kxp * s + np.multiply.outer(kdp, k) * (1.0 - c)

    def inverse(self):
        return Rotation(self.axis, -self.angle)


@dataclass(frozen=True)
class Dilation:
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise ValidationError("dilation scale must be positive")

    def apply(self, pts):
        return pts * self.scale

    def inverse(self):
        return Dilation(1.0 / self.scale)


@dataclass(frozen=True)
class SphereInversion:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValidationError("inversion radius must be positive")

    def apply(self, pts, min_distance: float = 0.0):
        c = np.asarray(self.center, dtype=float)
        rel = pts - c
        d2 = np.sum(rel * rel, axis=-1, keepdims=True)
        if min_distance > 0.0 and d2.min() < min_distance**2:
            raise InversionSingularity(
                f"point within {np.sqrt(d2.min()):.3e} of inversion center {self.center}"
            )
        return c + (self.radius**2) * rel / d2

    def inverse(self):
        return SphereInversion(self.center, self.radius)


Primitive = Translation | Rotation | Dilation | SphereInversion


@dataclass(frozen=True)
class MobiusMap:
    """Composition of primitives, applied in list order (first entry first)."""

    primitives: tuple = ()

    def apply(self, pts, min_inversion_distance: float = 1e-3) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        for prim in self.primitives:
            if isinstance(prim, SphereInversion):
                pts = prim.apply(pts, min_distance=min_inversion_distance)
            else:
                pts = prim.apply(pts)
        return pts

    def __call__(self, pts, min_inversion_distance: float = 1e-3):
        return self.apply(pts, min_inversion_distance)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """Map applying `other` first, then self (standard composition)."""
        return MobiusMap(other.primitives + self.primitives)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(tuple(p.inverse() for p in reversed(self.primitives)))

    def exclusion_points(self) -> np.ndarray:
        """Finite singular set: preimages of every inversion center."""
        points = []
        for k, prim in enumerate(self.primitives):
            if isinstance(prim, SphereInversion):
                prefix = MobiusMap(self.primitives[:k]).inverse()
                points.append(prefix.apply(np.asarray(prim.center, dtype=float),
                                           min_inversion_distance=0.0))
        return np.asarray(points).reshape(-1, 3)


def identity_map() -> MobiusMap:
    return MobiusMap(())


def apply_mobius(mapping: MobiusMap, pts, min_inversion_distance: float = 1e-3):
    return mapping.apply(pts, min_inversion_distance)


def apply_immersion(mapping: MobiusMap, immersion: Immersion,
                    min_inversion_distance: float = 1e-3) -> Immersion:
    if immersion.ambient != "r3":
        raise ValidationError("Mobius maps act on R^3 immersions")
    pos = mapping.apply(immersion.positions, min_inversion_distance)
    return Immersion(immersion.grid, "r3", pos)


# bounding radius of the standard Clifford torus, used to place inversion
# spheres so that every center stays >= 1 away from the surfaces it acts on
_TORUS_BOUND = 2.5
_ANCHOR_DISTANCE = 6.0


def random_mobius(seed: int, magnitude: float) -> MobiusMap:
    """Seeded near-identity Mobius map of strength `magnitude`.

    Composition (application order): conjugated inversion pair
    S(c, rho) o T(eps*b) o S(c, rho), then dilation exp(eps*s), rotation by
    eps*theta, translation by eps*a.  The inversion anchor c sits at
    distance 6 from the origin with rho^2 = (|c|-2.5)(|c|+2.5), which keeps
    images of the standard torus bounded and all inversion centers at
    distance >= 1 from the surface each inversion acts on.
    """
    eps = float(magnitude)
    if eps == 0.0:
        return identity_map()
    if not (0.0 < eps <= 0.5):
        raise ValidationError(f"magnitude must lie in (0, 0.5], got {magnitude}")
    rng = np.random.default_rng(seed)

    def unit_vec():
        vec = rng.normal(size=3)
        return vec / np.linalg.norm(vec)

    a = unit_vec()
    rot_axis = unit_vec()
    rot_angle = rng.uniform(-1.0, 1.0)
    log_scale = rng.uniform(-1.0, 1.0)
    b = unit_vec() * rng.uniform(0.2, 1.0)
    c = unit_vec() * _ANCHOR_DISTANCE
    rho = np.sqrt((_ANCHOR_DISTANCE - _TORUS_BOUND) * (_ANCHOR_DISTANCE + _TORUS_BOUND))
    prims = (
        SphereInversion(tuple(c), float(rho)),
        Translation(tuple(eps * b)),
        SphereInversion(tuple(c), float(rho)),
        Dilation(float(np.exp(eps * log_scale))),
        Rotation(tuple(rot_axis), float(eps * rot_angle)),
        Translation(tuple(eps * a)),
    )
    return MobiusMap(prims)


# ---------------------------------------------------------------------------
# stereographic charts
# ---------------------------------------------------------------------------

def stereo_to_r3(pts4) -> np.ndarray:
    """Project S^3 points to R^3 from the pole (0,0,0,1)."""
    pts4 = np.asarray(pts4, dtype=float)
    denom = 1.0 - pts4[..., 3]
    if np.min(np.abs(denom)) < 1e-12:
        raise PoleSingularity("stereographic projection evaluated at the pole")
    return pts4[..., :3] / denom[..., None]


def stereo_to_s3(pts3) -> np.ndarray:
    """Inverse stereographic map; the origin goes to the pole antipode."""
    pts3 = np.asarray(pts3, dtype=float)
    r2 = np.sum(pts3 * pts3, axis=-1)
    denom = r2 + 1.0
    out = np.empty(pts3.shape[:-1] + (4,))
    out[..., :3] = 2.0 * pts3 / denom[..., None]
    out[..., 3] = (r2 - 1.0) / denom
    return out


def stereo_jacobian_to_s3(pts3) -> np.ndarray:
    """Differential of stereo_to_s3 at each point; shape (..., 4, 3)."""
    y = np.asarray(pts3, dtype=float)
    r2 = np.sum(y * y, axis=-1)
    D = (1.0 + r2)[..., None, None]
    eye = np.eye(3)
    jac = np.empty(y.shape[:-1] + (4, 3))
    outer = y[..., :, None] * y[..., None, :]
    jac[..., :3, :] = 2.0 * eye / D - 4.0 * outer / D**2
    jac[..., 3, :] = 4.0 * y / (D[..., 0] ** 2)
    return jac


# ---------------------------------------------------------------------------
# infinitesimal conformal generators
# ---------------------------------------------------------------------------

_KINDS = ("translation", "rotation", "dilation", "special")


@dataclass(frozen=True)
class ConformalField:
    """One of the ten conformal Killing fields of R^3.

    translation_i: X(p) = e_i
    rotation_i:    X(p) = e_i x p
    dilation:      X(p) = p
    special_i:     X(p) = |p|^2/2 e_i - (p . e_i) p
    """

    kind: str
    index: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown generator kind {self.kind!r}")
        if self.kind == "dilation" and self.index != 0:
            raise ValidationError("dilation has a single generator (index 0)")
        if self.kind != "dilation" and self.index not in (0, 1, 2):
            raise ValidationError("generator index must be 0, 1 or 2")

    @property
    def name(self) -> str:
        return self.kind if self.kind == "dilation" else f"{self.kind}_{'xyz'[self.index]}"

    def evaluate(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        e = np.zeros(3)
        e[self.index] = 1.0
        if self.kind == "translation":
            return np.broadcast_to(e, pts.shape).copy()
        if self.kind == "rotation":
            return np.cross(np.broadcast_to(e, pts.shape), pts)
        if self.kind == "dilation":
            return pts.copy()
        p2 = np.sum(pts * pts, axis=-1)
        return 0.5 * np.multiply.outer(p2, e) - pts[..., self.index, None] * pts

    __call__ = evaluate

    def jacobian(self, pts) -> np.ndarray:
        """Exact Jacobian of the field at each point; shape (..., 3, 3)."""
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1] + (3, 3)
        jac = np.zeros(shape)
        if self.kind == "translation":
            return jac
        if self.kind == "rotation":
            e = np.zeros(3)
            e[self.index] = 1.0
            hat = np.array([
                [0.0, -e[2], e[1]],
                [e[2], 0.0, -e[0]],
                [-e[1], e[0], 0.0],
            ])
            jac[...] = hat
            return jac
        if self.kind == "dilation":
            jac[...] = np.eye(3)
            return jac
        i = self.index
        # d/dp_j of (|p|^2/2 e_i - p_i p): p_j e_i - delta_ij p - p_i e_j
        for j in range(3):
            jac[..., i, j] += pts[..., j]
            jac[..., j, j] -= pts[..., i]
            jac[..., j, i] -= pts[..., j]
        return jac

    def one_parameter_map(self, t: float) -> MobiusMap:
        """Exact Mobius flow exp(t X) of this generator."""
        e = np.zeros(3)
        e[self.index] = 1.0
        if self.kind == "translation":
            return MobiusMap((Translation(tuple(t * e)),))
        if self.kind == "rotation":
            return MobiusMap((Rotation(tuple(e), float(t)),))
        if self.kind == "dilation":
            return MobiusMap((Dilation(float(np.exp(t))),))
        # special conformal: exp(tX) = I(0,1) o T(t/2 e_i) o I(0,1)
        inv = SphereInversion((0.0, 0.0, 0.0), 1.0)
        return MobiusMap((inv, Translation(tuple(0.5 * t * e)), inv))


def conformal_generators() -> list[ConformalField]:
    """The ten generators in fixed order: tx ty tz rx ry rz dil sx sy sz."""
    gens = [ConformalField("translation", i) for i in range(3)]
    gens += [ConformalField("rotation", i) for i in range(3)]
    gens.append(ConformalField("dilation", 0))
    gens += [ConformalField("special", i) for i in range(3)]
    return gens


def normal_component(field: ConformalField, obj: Immersion | GeometryCache) -> ScalarField:
    """Scalar field <X(f(p)), nu(p)> on the grid of an R^3 immersion."""
    if isinstance(obj, GeometryCache):
        geom = obj
    else:
        geom = geometry(obj)
    if geom.ambient != "r3":
        raise ValidationError("normal_component expects an R^3 immersion")
    vec = field.evaluate(geom.positions)
    return ScalarField(geom.grid, np.einsum("ijk,ijk->ij", vec, geom.normal))
