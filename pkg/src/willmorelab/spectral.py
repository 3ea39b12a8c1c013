"""Second-variation form on the Clifford torus, diagonal in Fourier modes.

Everything here lives in the flat S^3 chart of the Clifford torus (periods
sqrt(2)*pi), where the induced metric is the identity, |A|^2 = 2, and the
stability form

    Q(u, v) = int (Lap + 2)u * (Lap + 4)v dmu

acts on the Fourier mode exp(i*sqrt(2)(m u + n v)) as multiplication by
sigma = (2 - mu)(4 - mu) with mu = 2(m^2 + n^2). Its kernel (mu in {2, 4},
eight real modes) consists of the normal speeds of Mobius motions; on the
orthogonal complement the form is coercive.

Normalization note: Q is twice the second derivative of the bending energy
along geodesic normal offsets, i.e. W(Exp(t v)) = 2 pi^2 + (t^2/4) Q(v, v)
+ O(t^3). `second_differential` returns Q/2, the genuine second
differential; the quadratic-model helpers use it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import fourier
from .errors import ValidationError
from .mobius import conformal_generators, stereo_jacobian_to_s3, stereo_to_r3
from .surface import (
    CLIFFORD_ENERGY,
    CLIFFORD_PERIOD,
    Immersion,
    ParamGrid,
    ScalarField,
    clifford_grid,
    clifford_torus_s3,
    geometry,
)

__all__ = [
    "SpectralModel",
    "spectral_model",
    "w2_apply",
    "w2_form",
    "w2_form_modes",
    "second_differential",
    "kernel_basis",
    "project_kernel",
    "project_kernel_complement",
    "h2_inner",
    "h2_norm",
    "coercivity_lambda",
    "mode_table",
    "CrossCheckReport",
    "kernel_cross_check",
    "random_field",
    "random_kperp_field",
]

COERCIVITY_LAMBDA_EXACT = 24.0 / 81.0  # min sigma/h, attained at mu = 8


@dataclass
class SpectralModel:
    """Fourier mode table of the stability form on the flat Clifford chart."""

    grid: ParamGrid
    mode_u: np.ndarray = field(repr=False, default=None)  # integer m per FFT row
    mode_v: np.ndarray = field(repr=False, default=None)
    mu: np.ndarray = field(repr=False, default=None)      # Laplace eigenvalue 2(m^2+n^2)
    sigma: np.ndarray = field(repr=False, default=None)   # (2-mu)(4-mu)
    h2_weight: np.ndarray = field(repr=False, default=None)  # (1+mu)^2
    kernel_mask: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        g = self.grid
        if (abs(g.period_u - CLIFFORD_PERIOD) > 1e-12
                or abs(g.period_v - CLIFFORD_PERIOD) > 1e-12):
            raise ValidationError("SpectralModel requires the sqrt(2)*pi flat chart")
        m = np.fft.fftfreq(g.n_u, d=1.0 / g.n_u).astype(int)
        n = np.fft.fftfreq(g.n_v, d=1.0 / g.n_v).astype(int)
        self.mode_u, self.mode_v = m, n
        m2 = m[:, None] ** 2 + n[None, :] ** 2
        self.mu = 2.0 * m2
        self.sigma = (2.0 - self.mu) * (4.0 - self.mu)
        self.h2_weight = (1.0 + self.mu) ** 2
        self.kernel_mask = (m2 == 1) | (m2 == 2)

    def check_field(self, u: ScalarField | np.ndarray) -> np.ndarray:
        values = u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)
        if values.shape != self.grid.shape:
            raise ValidationError("field does not live on the model grid")
        return values


def spectral_model(n: int = 32) -> SpectralModel:
    return SpectralModel(clifford_grid(n))


def _coeffs(model: SpectralModel, values: np.ndarray) -> np.ndarray:
    return fourier.fft2(values) / (model.grid.n_u * model.grid.n_v)


def w2_apply(model: SpectralModel, u) -> ScalarField:
    """Apply the stability operator: multiply each mode by sigma."""
    values = model.check_field(u)
    out = fourier.ifft2(fourier.fft2(values) * model.sigma)
    return ScalarField(model.grid, out)


def w2_form(model: SpectralModel, u, v) -> float:
    """Quadrature route: int (Lap+2)u (Lap+4)v on the flat chart."""
    uu = model.check_field(u)
    vv = model.check_field(v)
    a = fourier.ifft2(fourier.fft2(uu) * (2.0 - model.mu))
    b = fourier.ifft2(fourier.fft2(vv) * (4.0 - model.mu))
    return float(np.mean(a * b) * model.grid.area)


def w2_form_modes(model: SpectralModel, u, v) -> float:
    """Parseval route: area * sum sigma * conj(u_hat) v_hat."""
    cu = _coeffs(model, model.check_field(u))
    cv = _coeffs(model, model.check_field(v))
    return float(model.grid.area * np.sum(model.sigma * (np.conj(cu) * cv).real))


def second_differential(model: SpectralModel, u, v) -> float:
    """The actual second differential of the bending energy: Q/2."""
    return 0.5 * w2_form(model, u, v)


def h2_inner(model: SpectralModel, u, v) -> float:
    cu = _coeffs(model, model.check_field(u))
    cv = _coeffs(model, model.check_field(v))
    return float(model.grid.area * np.sum(model.h2_weight * (np.conj(cu) * cv).real))


def h2_norm(model: SpectralModel, u) -> float:
    return float(np.sqrt(max(h2_inner(model, u, u), 0.0)))


def kernel_basis(model: SpectralModel) -> list[ScalarField]:
    """Eight kernel modes, orthonormal in the discrete H^2 product.

    Fixed order: cos/sin of sqrt(2)u, sqrt(2)v, sqrt(2)(u+v), sqrt(2)(u-v).
    """
    uu, vv = model.grid.mesh()
    s = np.sqrt(2.0)
    raw = [
        np.cos(s * uu), np.sin(s * uu),
        np.cos(s * vv), np.sin(s * vv),
        np.cos(s * (uu + vv)), np.sin(s * (uu + vv)),
        np.cos(s * (uu - vv)), np.sin(s * (uu - vv)),
    ]
    out = []
    for values in raw:
        norm = h2_norm(model, values)
        out.append(ScalarField(model.grid, values / norm))
    return out


def project_kernel(model: SpectralModel, u) -> ScalarField:
    """H^2-orthogonal projection onto the kernel (a Fourier mask)."""
    values = model.check_field(u)
    coeffs = fourier.fft2(values)
    return ScalarField(model.grid, fourier.ifft2(coeffs * model.kernel_mask))


def project_kernel_complement(model: SpectralModel, u) -> ScalarField:
    values = model.check_field(u)
    coeffs = fourier.fft2(values)
    return ScalarField(model.grid, fourier.ifft2(coeffs * (~model.kernel_mask)))


def coercivity_lambda(cutoff: int = 8, model: SpectralModel | None = None) -> float:
    """Smallest sigma/h over non-kernel modes with |m|, |n| <= cutoff.

    The minimum sits at mu = 8 (e.g. mode (2, 0)): 24/81; it is stable under
    the cutoff because sigma/h increases monotonically beyond it.
    """
    if cutoff < 3:
        raise ValidationError("cutoff must be at least 3")
    best = np.inf
    for m in range(-cutoff, cutoff + 1):
        for n in range(-cutoff, cutoff + 1):
            m2 = m * m + n * n
            if m2 in (1, 2):
                continue
            mu = 2.0 * m2
            ratio = (2.0 - mu) * (4.0 - mu) / (1.0 + mu) ** 2
            best = min(best, ratio)
    return float(best)


def mode_table(cutoff: int) -> list[dict]:
    """Rows (m, n, mu, sigma, sigma/h, kernel flag) for |m|,|n| <= cutoff."""
    rows = []
    for m in range(-cutoff, cutoff + 1):
        for n in range(-cutoff, cutoff + 1):
            m2 = m * m + n * n
            mu = 2.0 * m2
            sigma = (2.0 - mu) * (4.0 - mu)
            h = (1.0 + mu) ** 2
            rows.append({
                "m": m, "n": n, "mu": mu, "sigma": sigma,
                "sigma_over_h": sigma / h, "kernel": bool(m2 in (1, 2)),
            })
    return rows


# ---------------------------------------------------------------------------
# kernel cross-check against the conformal generators
# ---------------------------------------------------------------------------

@dataclass
class CrossCheckReport:
    grid_n: int
    rank_fourier: int
    rank_generators: int
    principal_angles: np.ndarray
    joint_rank_with_random: int

    def ok(self, angle_tol: float = 1e-6) -> bool:
        return (
            self.rank_fourier == 8
            and self.rank_generators == 8
            and float(self.principal_angles.max()) <= angle_tol
            and self.joint_rank_with_random == 9
        )

    def report(self) -> dict:
        return {
            "grid_n": self.grid_n,
            "rank_fourier_kernel": self.rank_fourier,
            "rank_generator_span": self.rank_generators,
            "max_principal_angle": float(self.principal_angles.max()),
            "principal_angles": [float(a) for a in self.principal_angles],
            "joint_rank_with_random_field": self.joint_rank_with_random,
        }


def transported_generator_fields(n: int = 64) -> tuple[SpectralModel, np.ndarray]:
    """Normal components, on the flat S^3 chart, of the ten R^3 generators.

    Each generator is evaluated at the stereographic image of the chart
    point and pulled back through the differential of the inverse
    projection; the result is a tangent field of S^3 whose inner product
    with the chart normal gives the scalar speed.
    """
    model = spectral_model(n)
    torus = clifford_torus_s3(model.grid)
    geom = geometry(torus)
    y = stereo_to_r3(torus.positions)
    jac = stereo_jacobian_to_s3(y)
    fields = []
    for gen in conformal_generators():
        vec3 = gen.evaluate(y)
        vec4 = np.einsum("ijab,ijb->ija", jac, vec3)
        fields.append(np.einsum("ijk,ijk->ij", vec4, geom.normal))
    return model, np.stack(fields)


def _rank(mat: np.ndarray, rel_tol: float = 1e-8) -> int:
    svals = np.linalg.svd(mat, compute_uv=False)
    return int((svals > rel_tol * svals[0]).sum())


def kernel_cross_check(n: int = 64, seed: int = 7) -> CrossCheckReport:
    """Compare the Fourier kernel span with the conformal-generator span."""
    model, gen_fields = transported_generator_fields(n)
    basis = np.stack([f.values for f in kernel_basis(model)])
    a = basis.reshape(8, -1).T
    b = gen_fields.reshape(10, -1).T
    angles = scipy.linalg.subspace_angles(a, b)
    rng = np.random.default_rng(seed)
    extra = random_field(model, rng).values
    joint = np.vstack([gen_fields.reshape(10, -1), extra.ravel()[None, :]])
    return CrossCheckReport(
        grid_n=n,
        rank_fourier=_rank(basis.reshape(8, -1)),
        rank_generators=_rank(gen_fields.reshape(10, -1)),
        principal_angles=np.sort(angles)[::-1],
        joint_rank_with_random=_rank(joint),
    )


# ---------------------------------------------------------------------------
# seeded smooth fields
# ---------------------------------------------------------------------------

def random_field(model: SpectralModel, rng, max_mode: int = 6,
                 decay: float = 1.5, include_constant: bool = True) -> ScalarField:
    """Seeded random smooth field with geometrically decaying spectrum."""
    uu, vv = model.grid.mesh()
    s = 2.0 * np.pi / model.grid.period_u
    values = np.zeros(model.grid.shape)
    if include_constant:
        values += rng.normal()
    for m in range(0, max_mode + 1):
        for n in range(-max_mode, max_mode + 1):
            if m == 0 and n <= 0:
                continue
            amp = np.exp(-decay * np.hypot(m, n))
            c, d = rng.normal(size=2)
            values += amp * (c * np.cos(s * (m * uu + n * vv))
                             + d * np.sin(s * (m * uu + n * vv)))
    return ScalarField(model.grid, values)


def random_kperp_field(model: SpectralModel, seed: int, unit: str = "h2",
                       include_constant: bool = True) -> ScalarField:
    """Seeded random field projected to K-perp and normalized.

    unit: "h2", "c2" or "c0" selects the normalization.
    """
    rng = np.random.default_rng(seed)
    f = random_field(model, rng, include_constant=include_constant)
    perp = project_kernel_complement(model, f)
    if unit == "h2":
        norm = h2_norm(model, perp)
    elif unit == "c2":
        norm = perp.c2_norm()
    elif unit == "c0":
        norm = perp.c0_norm()
    else:
        raise ValidationError(f"unknown normalization {unit!r}")
    return ScalarField(model.grid, perp.values / norm)
