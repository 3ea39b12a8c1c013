"""Periodic-grid spectral geometry of immersed tori.

An immersed torus is a map from the flat parameter torus (periods
period_u x period_v, sampled on a uniform endpoint-excluded grid) into R^3
or into the unit S^3 in R^4. All differential geometry (metric, second
fundamental form, mean curvature, bending energy and its L^2 gradient) is
evaluated through FFT derivatives, so errors decay with the spectral tail
of the sampled chart.

Sign conventions, fixed once:

* R^3 charts: nu = normalize(f_u x f_v). For ``revolution_torus`` this is
  the outward normal (pointing away from the core circle).
* S^3 charts: nu = normalize(*(f ^ f_u ^ f_v)) (4D generalized cross
  product), tangent to S^3.
* A_ij = -<d2_ij f, nu> and H = (1/2) g^{ij} A_ij, so the revolution torus
  has H > 0 on its outer equator; the unit sphere with outward normal has
  H = +1.
* Bending energy: integral of H^2 in R^3; integral of (1 + H^2) in S^3
  (the value then matches the R^3 energy of a stereographic image).
* The L^2 gradient field returned by :func:`willmore_gradient` satisfies
  d/dt W(f + t*phi*nu) = integral(grad * phi dmu); with the conventions
  above this is grad = -(Lap H + |A0|^2 H), so stepping ``f - dt*grad*nu``
  descends the energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend, fourier
from .errors import ImmersionDegenerate, ValidationError

TWO_PI = 2.0 * np.pi
CLIFFORD_RATIO = np.sqrt(2.0)
CLIFFORD_PERIOD = np.sqrt(2.0) * np.pi
CLIFFORD_ENERGY = 2.0 * np.pi**2

__all__ = [
    "ParamGrid",
    "Immersion",
    "ScalarField",
    "GeometryCache",
    "make_grid",
    "clifford_grid",
    "revolution_torus",
    "clifford_torus_s3",
    "geometry",
    "integrate",
    "willmore_energy",
    "laplace_beltrami",
    "willmore_gradient",
    "gradient_norm",
    "CLIFFORD_ENERGY",
    "CLIFFORD_PERIOD",
    "CLIFFORD_RATIO",
]


@dataclass(frozen=True)
class ParamGrid:
    """Uniform periodic parameter grid, endpoint excluded."""

    n_u: int
    n_v: int
    period_u: float
    period_v: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_u, self.n_v)

    @property
    def area(self) -> float:
        return self.period_u * self.period_v

    @property
    def cell_area(self) -> float:
        return self.area / (self.n_u * self.n_v)

    def u(self) -> np.ndarray:
        return np.arange(self.n_u) * (self.period_u / self.n_u)

    def v(self) -> np.ndarray:
        return np.arange(self.n_v) * (self.period_v / self.n_v)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.u(), self.v(), indexing="ij")

    def same_as(self, other: "ParamGrid", tol: float = 1e-12) -> bool:
        return (
            self.n_u == other.n_u
            and self.n_v == other.n_v
            and abs(self.period_u - other.period_u) <= tol * (1 + abs(self.period_u))
            and abs(self.period_v - other.period_v) <= tol * (1 + abs(self.period_v))
        )


def make_grid(n_u: int, n_v: int, period_u: float = TWO_PI, period_v: float = TWO_PI) -> ParamGrid:
    """Build a ParamGrid, rejecting odd or undersized sample counts."""
    for name, n in (("n_u", n_u), ("n_v", n_v)):
        if int(n) != n or n < 8:
            raise ValidationError(f"{name} must be an integer >= 8, got {n}")
        if n % 2 != 0:
            raise ValidationError(f"{name} must be even for FFT use, got {n}")
    if period_u <= 0 or period_v <= 0:
        raise ValidationError("grid periods must be positive")
    return ParamGrid(int(n_u), int(n_v), float(period_u), float(period_v))


def clifford_grid(n: int) -> ParamGrid:
    """Flat-chart grid for the Clifford torus in S^3 (periods sqrt(2)*pi)."""
    return make_grid(n, n, CLIFFORD_PERIOD, CLIFFORD_PERIOD)


@dataclass
class Immersion:
    """Sampled torus immersion; positions has shape (n_u, n_v, 3 or 4)."""

    grid: ParamGrid
    ambient: str  # "r3" or "s3"
    positions: np.ndarray

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        dim = 3 if self.ambient == "r3" else 4
        if self.ambient not in ("r3", "s3"):
            raise ValidationError(f"ambient must be 'r3' or 's3', got {self.ambient!r}")
        if self.positions.shape != (self.grid.n_u, self.grid.n_v, dim):
            raise ValidationError(
                f"positions shape {self.positions.shape} does not match grid "
                f"{self.grid.shape} with ambient {self.ambient}"
            )
        if self.ambient == "s3":
            radii = np.linalg.norm(self.positions, axis=-1)
            err = np.abs(radii - 1.0).max()
            if err > 1e-12:
                raise ValidationError(f"s3 positions must lie on the unit sphere (off by {err:.2e})")

    def copy(self) -> "Immersion":
        return Immersion(self.grid, self.ambient, self.positions.copy())

    def spectral_tail(self) -> float:
        stacked = np.moveaxis(self.positions, -1, 0)
        return fourier.tail_fraction(stacked)


@dataclass
class ScalarField:
    """One real value per grid point."""

    grid: ParamGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValidationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def c0_norm(self) -> float:
        return float(np.abs(self.values).max())

    def c2_norm(self) -> float:
        """sup|w| + sup|grad w| + sup|Hess w| with flat-chart derivatives."""
        g = self.grid
        wu, wv, wuu, wuv, wvv = fourier.derivative_stack(
            self.values, g.period_u, g.period_v
        )
        grad = np.sqrt(wu**2 + wv**2)
        hess = np.sqrt(wuu**2 + 2 * wuv**2 + wvv**2)
        return float(np.abs(self.values).max() + grad.max() + hess.max())

    def h2_norm(self) -> float:
        g = self.grid
        return fourier.sobolev_norm(self.values, g.period_u, g.period_v, order=2)


def _require_same_grid(a: ParamGrid, b: ParamGrid, what: str = "fields"):
    if not a.same_as(b):
        raise ValidationError(f"{what} live on different grids: {a} vs {b}")


def revolution_torus(big_radius: float, small_radius: float, grid: ParamGrid | None = None,
                     n: int = 32) -> Immersion:
    """Torus of revolution around the z-axis.

    f(u, v) = ((R + r cos v) cos u, (R + r cos v) sin u, r sin v); the chart
    orientation makes nu outward. big_radius/small_radius = sqrt(2) is the
    energy-minimizing (Clifford) shape.
    """
    R, r = float(big_radius), float(small_radius)
    if not (R > r > 0):
        raise ValidationError(f"need R > r > 0 (degenerate torus otherwise), got R={R}, r={r}")
    if grid is None:
        grid = make_grid(n, n, TWO_PI, TWO_PI)
    if abs(grid.period_u - TWO_PI) > 1e-12 or abs(grid.period_v - TWO_PI) > 1e-12:
        raise ValidationError("revolution_torus expects a (2*pi, 2*pi)-periodic grid")
    uu, vv = grid.mesh()
    rho = R + r * np.cos(vv)
    pos = np.stack([rho * np.cos(uu), rho * np.sin(uu), r * np.sin(vv)], axis=-1)
    return Immersion(grid, "r3", pos)


def clifford_torus_s3(grid: ParamGrid | None = None, n: int = 32) -> Immersion:
    """Flat chart of the Clifford torus (1/sqrt(2))(S^1 x S^1) in S^3.

    Requires periods (sqrt(2)*pi, sqrt(2)*pi); the induced metric is then
    the identity, so the Laplace-Beltrami operator is the flat Laplacian.
    """
    if grid is None:
        grid = clifford_grid(n)
    if (abs(grid.period_u - CLIFFORD_PERIOD) > 1e-12
            or abs(grid.period_v - CLIFFORD_PERIOD) > 1e-12):
        raise ValidationError(
            "clifford_torus_s3 expects periods (sqrt(2)*pi, sqrt(2)*pi); "
            f"got ({grid.period_u}, {grid.period_v})"
        )
    uu, vv = grid.mesh()
    s = np.sqrt(2.0)
    pos = np.stack(
        [np.cos(s * uu), np.sin(s * uu), np.cos(s * vv), np.sin(s * vv)], axis=-1
    ) / s
    return Immersion(grid, "s3", pos)


@dataclass
class GeometryCache:
    """Per-grid-point first/second fundamental data of an immersion."""

    grid: ParamGrid
    ambient: str
    g_uu: np.ndarray
    g_uv: np.ndarray
    g_vv: np.ndarray
    det_g: np.ndarray
    inv_uu: np.ndarray
    inv_uv: np.ndarray
    inv_vv: np.ndarray
    sqrt_det: np.ndarray
    normal: np.ndarray
    a_uu: np.ndarray
    a_uv: np.ndarray
    a_vv: np.ndarray
    mean_h: np.ndarray
    norm_a2: np.ndarray
    tracefree_a2: np.ndarray
    gauss_k: np.ndarray
    positions: np.ndarray = field(repr=False, default=None)

    def max_principal_curvature(self) -> float:
        """max over the grid of the largest |principal curvature|."""
        disc = np.sqrt(np.maximum(self.mean_h**2 - (self.gauss_k - (1.0 if self.ambient == "s3" else 0.0)), 0.0))
        return float(np.maximum(np.abs(self.mean_h + disc), np.abs(self.mean_h - disc)).max())

    def min_spacing(self) -> float:
        """Smallest grid spacing measured in ambient length."""
        du = self.grid.period_u / self.grid.n_u
        dv = self.grid.period_v / self.grid.n_v
        hu = np.sqrt(self.g_uu).min() * du
        hv = np.sqrt(self.g_vv).min() * dv
        return float(min(hu, hv))


def geometry(immersion: Immersion) -> GeometryCache:
    """Fill the full geometry cache via spectral derivatives.

    Raises ImmersionDegenerate when det g collapses anywhere on the grid
    (threshold 1e-10 relative to the mean), instead of regularizing.
    """
    g = immersion.grid
    pos = immersion.positions
    stacked = np.ascontiguousarray(np.moveaxis(pos, -1, 0))
    fu, fv, fuu, fuv, fvv = fourier.derivative_stack(stacked, g.period_u, g.period_v)
    fu = np.ascontiguousarray(np.moveaxis(fu, 0, -1))
    fv = np.ascontiguousarray(np.moveaxis(fv, 0, -1))
    fuu = np.ascontiguousarray(np.moveaxis(fuu, 0, -1))
    fuv = np.ascontiguousarray(np.moveaxis(fuv, 0, -1))
    fvv = np.ascontiguousarray(np.moveaxis(fvv, 0, -1))
    if immersion.ambient == "r3":
        out = backend.assemble_r3(fu, fv, fuu, fuv, fvv)
    else:
        out = backend.assemble_s3(np.ascontiguousarray(pos), fu, fv, fuu, fuv, fvv)
    (g_uu, g_uv, g_vv, det_g, inv_uu, inv_uv, inv_vv, sqrt_det,
     normal, a_uu, a_uv, a_vv, mean_h, norm_a2, tracefree_a2, k_ext) = out
    mean_det = det_g.mean()
    if mean_det <= 0.0 or det_g.min() < 1e-10 * mean_det:
        raise ImmersionDegenerate(
            f"det g collapses on the grid (min {det_g.min():.3e}, mean {mean_det:.3e})"
        )
    gauss = k_ext + 1.0 if immersion.ambient == "s3" else k_ext
    return GeometryCache(
        grid=g, ambient=immersion.ambient,
        g_uu=g_uu, g_uv=g_uv, g_vv=g_vv, det_g=det_g,
        inv_uu=inv_uu, inv_uv=inv_uv, inv_vv=inv_vv, sqrt_det=sqrt_det,
        normal=normal, a_uu=a_uu, a_uv=a_uv, a_vv=a_vv,
        mean_h=mean_h, norm_a2=norm_a2, tracefree_a2=tracefree_a2,
        gauss_k=gauss, positions=pos,
    )


def _as_geometry(obj) -> GeometryCache:
    return obj if isinstance(obj, GeometryCache) else geometry(obj)


def integrate(geom: GeometryCache, values: np.ndarray) -> float:
    """Surface integral of a per-grid-point sample (uniform-weight rule).

    On periodic grids the uniform rule is the trapezoid rule, hence
    spectrally accurate.
    """
    return float(np.sum(values * geom.sqrt_det) * geom.grid.cell_area)


def willmore_energy(obj: Immersion | GeometryCache) -> float:
    """Bending energy: int H^2 dmu in R^3, int (1 + H^2) dmu in S^3."""
    geom = _as_geometry(obj)
    integrand = geom.mean_h**2
    if geom.ambient == "s3":
        integrand = integrand + 1.0
    return integrate(geom, integrand)


def laplace_beltrami(geom: GeometryCache, phi: ScalarField) -> ScalarField:
    """Laplace-Beltrami operator in divergence form, spectral derivatives."""
    _require_same_grid(geom.grid, phi.grid, "geometry and field")
    g = geom.grid
    pu = fourier.spectral_derivative(phi.values, g.period_u, g.period_v, du=1)
    pv = fourier.spectral_derivative(phi.values, g.period_u, g.period_v, dv=1)
    flux_u = geom.sqrt_det * (geom.inv_uu * pu + geom.inv_uv * pv)
    flux_v = geom.sqrt_det * (geom.inv_uv * pu + geom.inv_vv * pv)
    div = (
        fourier.spectral_derivative(flux_u, g.period_u, g.period_v, du=1)
        + fourier.spectral_derivative(flux_v, g.period_u, g.period_v, dv=1)
    )
    return ScalarField(g, div / geom.sqrt_det)


def willmore_gradient(obj: Immersion | GeometryCache) -> ScalarField:
    """L^2 gradient of the bending energy as a normal-speed field (R^3).

    Returns the field grad with d/dt W(f + t*phi*nu) = int grad*phi dmu;
    under the package sign conventions grad = -(Lap H + |A0|^2 H).
    """
    geom = _as_geometry(obj)
    if geom.ambient != "r3":
        raise ValidationError("willmore_gradient is defined for R^3 immersions")
    h_field = ScalarField(geom.grid, geom.mean_h)
    lap_h = laplace_beltrami(geom, h_field)
    return ScalarField(geom.grid, -(lap_h.values + geom.tracefree_a2 * geom.mean_h))


def gradient_norm(obj: Immersion | GeometryCache) -> float:
    """L^2 norm of the Willmore gradient field."""
    geom = _as_geometry(obj)
    grad = willmore_gradient(geom)
    return float(np.sqrt(max(integrate(geom, grad.values**2), 0.0)))
