"""Normal graphs over tori and the gauge-normalized decomposition.

The central operation writes a surface near the standard torus T as a small
Mobius motion of T plus a normal graph by a function orthogonal to the
kernel of the second-variation form:

    Sigma = Exp_{Phi_u(T)}(v),   v in K-perp,

found by a fixed-point (frozen-derivative Newton) iteration on the kernel
projection of the graph field. The kernel space on the R^3 chart is spanned
by the normal components of the ten conformal generators (numerical rank 8);
an orthonormal basis in the discrete H^2 product is built once per grid by
SVD and cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fourier
from .errors import (
    FocalRadiusExceeded,
    NoConvergence,
    NotInNeighborhood,
    ValidationError,
)
from .mobius import (
    Dilation,
    MobiusMap,
    Rotation,
    SphereInversion,
    Translation,
    apply_immersion,
    conformal_generators,
    normal_component,
)
from .surface import (
    CLIFFORD_RATIO,
    GeometryCache,
    Immersion,
    ParamGrid,
    ScalarField,
    geometry,
    revolution_torus,
)

__all__ = [
    "exp_normal",
    "graph_over",
    "KernelChart",
    "kernel_chart",
    "mobius_from_kernel",
    "Decomposition",
    "decompose",
    "shape_distance",
]

FOCAL_SAFETY = 0.9     # exp_normal rejects offsets beyond this fraction of 1/max|k|
TUBE_FRACTION = 0.5    # graph_over accepts graphs up to this fraction of 1/max|k|


def exp_normal(base: Immersion, w, geom: GeometryCache | None = None) -> Immersion:
    """Offset `base` along its unit normal by the scalar field w.

    R^3: straight-line offset f + w*nu. S^3: geodesic offset
    cos(w) f + sin(w) nu. Rejects offsets at or beyond 90% of the focal
    radius estimate 1/max|principal curvature|.
    """
    values = w.values if isinstance(w, ScalarField) else np.asarray(w, dtype=float)
    if np.isscalar(values) or values.ndim == 0:
        values = np.full(base.grid.shape, float(values))
    if values.shape != base.grid.shape:
        raise ValidationError("offset field shape does not match the base grid")
    if geom is None:
        geom = geometry(base)
    kappa = geom.max_principal_curvature()
    bound = FOCAL_SAFETY / kappa if kappa > 0 else np.inf
    amp = np.abs(values).max()
    if amp >= bound:
        raise FocalRadiusExceeded(
            f"max offset {amp:.4f} >= {bound:.4f} (focal-radius safety bound)"
        )
    if base.ambient == "r3":
        pos = base.positions + values[..., None] * geom.normal
    else:
        pos = (
            np.cos(values)[..., None] * base.positions
            + np.sin(values)[..., None] * geom.normal
        )
        pos = pos / np.linalg.norm(pos, axis=-1, keepdims=True)
    return Immersion(base.grid, base.ambient, pos)


def _graph_newton(base_geom: GeometryCache, target: Immersion,
                  tol: float, max_iter: int):
    """Per-base-point Newton solve for the normal-line foot point.

    Unknowns per grid point: target parameters (s, t) and offset w with
    target(s, t) = base + w * nu. All points are solved simultaneously.
    """
    tgrid = target.grid
    interp = fourier.trig_interpolator(
        np.moveaxis(target.positions, -1, 0), tgrid.period_u, tgrid.period_v
    )
    base_pts = base_geom.positions.reshape(-1, 3)
    normals = base_geom.normal.reshape(-1, 3)
    uu, vv = base_geom.grid.mesh()
    s = uu.ravel().copy()
    t = vv.ravel().copy()
    scale = 1.0 + np.abs(target.positions).max()
    w = np.einsum("pk,pk->p", interp(s, t) - base_pts, normals)
    resid = np.inf
    for it in range(max_iter):
        vals = interp(s, t)
        r = vals - base_pts - w[:, None] * normals
        resid = np.abs(r).max()
        if resid <= tol * scale:
            return w, s, t, resid, it
        jac = np.empty((len(s), 3, 3))
        jac[:, :, 0] = interp(s, t, du=1)
        jac[:, :, 1] = interp(s, t, dv=1)
        jac[:, :, 2] = -normals
        try:
            delta = np.linalg.solve(jac, -r[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise NotInNeighborhood(f"singular Newton system while graphing: {exc}")
        s = s + delta[:, 0]
        t = t + delta[:, 1]
        w = w + delta[:, 2]
    raise NotInNeighborhood(
        f"foot-point Newton did not reach {tol:.1e} in {max_iter} iterations "
        f"(last residual {resid:.3e})"
    )


def graph_over(base: Immersion, target: Immersion, tol: float = 1e-11,
               max_iter: int = 50, base_geom: GeometryCache | None = None,
               full_output: bool = False):
    """Write `target` as a normal graph over `base`.

    Returns the offset field w on the base grid (spectral interpolation of
    the target chart); fails with NotInNeighborhood when the pointwise
    Newton solve stalls or the graph leaves half the focal radius.
    """
    if base.ambient != "r3" or target.ambient != "r3":
        raise ValidationError("graph_over operates on R^3 immersions")
    if base_geom is None:
        base_geom = geometry(base)
    w, s, t, resid, iters = _graph_newton(base_geom, target, tol, max_iter)
    kappa = base_geom.max_principal_curvature()
    tube = TUBE_FRACTION / kappa if kappa > 0 else np.inf
    amp = np.abs(w).max()
    if amp >= tube:
        raise NotInNeighborhood(
            f"graph amplitude {amp:.4f} >= tubular bound {tube:.4f} of the base"
        )
    field_w = ScalarField(base.grid, w.reshape(base.grid.shape))
    if full_output:
        return field_w, {"residual": float(resid), "iterations": iters,
                         "s": s.reshape(base.grid.shape), "t": t.reshape(base.grid.shape)}
    return field_w


# ---------------------------------------------------------------------------
# kernel chart on the R^3 Clifford torus
# ---------------------------------------------------------------------------

def _h2_coefficient_vector(values: np.ndarray, grid: ParamGrid) -> np.ndarray:
    """Real vector whose Euclidean dot equals the discrete H^2 product."""
    n = grid.n_u * grid.n_v
    coeffs = fourier.fft2(values) / n
    ku = fourier.angular_wavenumbers(grid.n_u, grid.period_u)
    kv = fourier.angular_wavenumbers(grid.n_v, grid.period_v)
    weight = (1.0 + ku[:, None] ** 2 + kv[None, :] ** 2) ** 2
    scaled = np.sqrt(weight * grid.area) * coeffs
    return np.concatenate([scaled.real.ravel(), scaled.imag.ravel()])


@dataclass
class KernelChart:
    """Orthonormal basis of the 8-dim Mobius kernel on the R^3 torus chart.

    fields: (8, n_u, n_v) basis values, orthonormal in the discrete H^2
    product. generator_weights: (10, 8) columns give the conformal-generator
    combination whose normal component equals each basis field.
    """

    grid: ParamGrid
    base: Immersion
    fields: np.ndarray
    generator_weights: np.ndarray
    singular_values: np.ndarray
    _coeff_matrix: np.ndarray = field(repr=False, default=None)

    def project_coeffs(self, values: np.ndarray) -> np.ndarray:
        """H^2 coefficients of the kernel projection of a field sample."""
        vec = _h2_coefficient_vector(values, self.grid)
        return self._coeff_matrix @ vec

    def kernel_part(self, values: np.ndarray) -> np.ndarray:
        coeffs = self.project_coeffs(values)
        return np.tensordot(coeffs, self.fields, axes=(0, 0))


_CHART_CACHE: dict = {}


def kernel_chart(grid: ParamGrid) -> KernelChart:
    """Build (and cache) the kernel chart for a (2pi, 2pi)-periodic grid."""
    key = (grid.n_u, grid.n_v, round(grid.period_u, 12), round(grid.period_v, 12))
    if key in _CHART_CACHE:
        return _CHART_CACHE[key]
    base = revolution_torus(CLIFFORD_RATIO, 1.0, grid)
    geom = geometry(base)
    gens = conformal_generators()
    raw = np.stack([normal_component(g, geom).values for g in gens])  # (10, n, n)
    mat = np.stack([_h2_coefficient_vector(f, grid) for f in raw])     # (10, m)
    u_mat, svals, _ = np.linalg.svd(mat, full_matrices=False)
    rank = int((svals > 1e-10 * svals[0]).sum())
    if rank != 8:
        raise ValidationError(f"kernel rank {rank} != 8 on grid {grid.shape}")
    weights = u_mat[:, :8] / svals[:8]                                 # (10, 8)
    # deterministic signs: largest |generator weight| positive per column
    for i in range(8):
        j = int(np.argmax(np.abs(weights[:, i])))
        if weights[j, i] < 0:
            weights[:, i] = -weights[:, i]
    fields = np.tensordot(weights.T, raw, axes=(1, 0))                 # (8, n, n)
    coeff_matrix = np.stack([_h2_coefficient_vector(f, grid) for f in fields])
    chart = KernelChart(
        grid=grid, base=base, fields=fields, generator_weights=weights,
        singular_values=svals, _coeff_matrix=coeff_matrix,
    )
    _CHART_CACHE[key] = chart
    return chart


def mobius_from_kernel(coeffs, t: float = 1.0,
                       chart: KernelChart | None = None,
                       grid: ParamGrid | None = None) -> MobiusMap:
    """Finite Mobius map exponentiating a kernel coefficient vector.

    The generator combination g = generator_weights @ coeffs is split into
    its primitive parts, each exponentiated exactly, and composed in the
    fixed order: special-conformal (inversion o translation o inversion),
    dilation, rotation, translation. The composition matches exp(t*sum) to
    first order in t; the deviation is O(t^2).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if chart is None:
        if grid is None:
            raise ValidationError("mobius_from_kernel needs a chart or a grid")
        chart = kernel_chart(grid)
    if coeffs.shape != (8,):
        raise ValidationError("kernel coefficient vector must have length 8")
    if abs(t) * np.linalg.norm(coeffs) > 0.2:
        raise ValidationError("|t|*|coeffs| too large for the gauge exponential (max 0.2)")
    g = chart.generator_weights @ coeffs
    prims = []
    tiny = 1e-15
    special = t * g[7:10]
    if np.linalg.norm(special) > tiny:
        inv = SphereInversion((0.0, 0.0, 0.0), 1.0)
        prims += [inv, Translation(tuple(0.5 * special)), inv]
    if abs(t * g[6]) > tiny:
        prims.append(Dilation(float(np.exp(t * g[6]))))
    rot = t * g[3:6]
    angle = np.linalg.norm(rot)
    if angle > tiny:
        prims.append(Rotation(tuple(rot / angle), float(angle)))
    trans = t * g[0:3]
    if np.linalg.norm(trans) > tiny:
        prims.append(Translation(tuple(trans)))
    return MobiusMap(tuple(prims))


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------

@dataclass
class Decomposition:
    """Result of writing Sigma = Exp_{Phi(T)}(v) with v in K-perp."""

    coeffs: np.ndarray           # kernel coefficients u (length 8)
    mobius: MobiusMap            # Phi_u
    graph: ScalarField           # v, on the gauge-surface chart
    residual: float              # |P_K(v)|_H2 at termination
    iterations: int
    reconstruction_error: float  # C^0 foot-point residual of the final graph
    base_image: Immersion        # Phi_u(T) sampled on the uniform grid
    residual_history: list = field(default_factory=list)

    def v_norms(self) -> dict:
        return {
            "c0": self.graph.c0_norm(),
            "c2": self.graph.c2_norm(),
            "h2": self.graph.h2_norm(),
        }

    def report(self) -> dict:
        return {
            "u_coefficients": [float(x) for x in self.coeffs],
            "v_norms": self.v_norms(),
            "kernel_residual": float(self.residual),
            "iterations": int(self.iterations),
            "reconstruction_error": float(self.reconstruction_error),
        }


def decompose(sigma: Immersion, tol: float = 1e-9, max_outer: int = 30,
              delta: float = 0.1, chart: KernelChart | None = None) -> Decomposition:
    """Split a near-Clifford surface into Mobius gauge plus K-perp graph.

    Iterates u <- u + P_K(graph_over(Phi_u(T), Sigma)) with the frozen
    derivative -Id on the kernel; stops when the kernel residual drops
    below tol. The input must be graphable over T with C^2 size <= delta.
    """
    if sigma.ambient != "r3":
        raise ValidationError("decompose expects an R^3 immersion")
    if chart is None:
        chart = kernel_chart(sigma.grid)
    elif not chart.grid.same_as(sigma.grid):
        raise ValidationError("kernel chart grid does not match the input grid")
    v_field, info = graph_over(chart.base, sigma, full_output=True)
    w_size = v_field.c2_norm()
    if w_size > delta:
        raise NotInNeighborhood(
            f"input is C^2-distance {w_size:.4f} from the torus (limit {delta})"
        )
    u = np.zeros(8)
    history = []
    phi = MobiusMap(())
    base_u = chart.base
    for it in range(max_outer):
        coeffs = chart.project_coeffs(v_field.values)
        res = float(np.linalg.norm(coeffs))
        history.append(res)
        if res <= tol:
            return Decomposition(
                coeffs=u, mobius=phi, graph=v_field, residual=res,
                iterations=it, reconstruction_error=info["residual"],
                base_image=base_u, residual_history=history,
            )
        u = u + coeffs
        phi = mobius_from_kernel(u, 1.0, chart=chart)
        base_u = apply_immersion(phi, chart.base)
        v_field, info = graph_over(base_u, sigma, full_output=True)
    raise NoConvergence(
        f"kernel residual {history[-1]:.3e} after {max_outer} iterations (tol {tol:.1e})"
    )


def _directed_maxmin(pa: np.ndarray, pb: np.ndarray, block: int = 256) -> float:
    worst = 0.0
    for start in range(0, len(pa), block):
        chunk = pa[start:start + block]
        d2 = np.sum((chunk[:, None, :] - pb[None, :, :]) ** 2, axis=-1)
        worst = max(worst, float(d2.min(axis=1).max()))
    return worst


def point_cloud_distance(a: Immersion, b: Immersion) -> float:
    """Symmetric max-min distance between the sampled point clouds.

    Coarse: resolves shape differences only down to the sampling scale.
    Use shape_distance for sub-grid comparisons.
    """
    pa = a.positions.reshape(-1, a.positions.shape[-1])
    pb = b.positions.reshape(-1, b.positions.shape[-1])
    return float(np.sqrt(max(_directed_maxmin(pa, pb), _directed_maxmin(pb, pa))))


def shape_distance(a: Immersion, b: Immersion, tol: float = 1e-12,
                   max_iter: int = 60) -> float:
    """Hausdorff-type distance along normals, exact to solver tolerance.

    Measures max over a's grid of the signed normal offset to the
    trigonometrically interpolated surface b (and is insensitive to
    tangential reparametrization, unlike the raw point-cloud distance).
    """
    geom_a = geometry(a)
    w, _, _, _, _ = _graph_newton(geom_a, b, tol, max_iter)
    return float(np.abs(w).max())
