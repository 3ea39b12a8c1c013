"""Pointwise fundamental-form assembly, pure numpy implementation.

This is the fallback for the compiled module `_kernels_cy`; both expose the
same two functions with identical output layout:

    (g_uu, g_uv, g_vv, det_g, inv_uu, inv_uv, inv_vv, sqrt_det,
     normal, a_uu, a_uv, a_vv, mean_h, norm_a2, tracefree_a2, k_ext)

Conventions: A_ij = -<d2f/didj, nu> so the revolution torus with outward
normal has positive mean curvature on the outer equator; H is half the
trace; k_ext = det(A)/det(g) is the extrinsic curvature product.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _shared(fu, fv, fuu, fuv, fvv, normal):
    g_uu = np.einsum("ijk,ijk->ij", fu, fu)
    g_uv = np.einsum("ijk,ijk->ij", fu, fv)
    g_vv = np.einsum("ijk,ijk->ij", fv, fv)
    det_g = g_uu * g_vv - g_uv * g_uv
    inv_uu = g_vv / det_g
    inv_uv = -g_uv / det_g
    inv_vv = g_uu / det_g
    sqrt_det = np.sqrt(np.maximum(det_g, 0.0))
    a_uu = -np.einsum("ijk,ijk->ij", fuu, normal)
    a_uv = -np.einsum("ijk,ijk->ij", fuv, normal)
    a_vv = -np.einsum("ijk,ijk->ij", fvv, normal)
    mean_h = 0.5 * (inv_uu * a_uu + 2.0 * inv_uv * a_uv + inv_vv * a_vv)
    # |A|^2 = trace of the squared shape operator
    m11 = inv_uu * a_uu + inv_uv * a_uv
    m12 = inv_uu * a_uv + inv_uv * a_vv
    m21 = inv_uv * a_uu + inv_vv * a_uv
    m22 = inv_uv * a_uv + inv_vv * a_vv
    norm_a2 = m11 * m11 + m22 * m22 + 2.0 * m12 * m21
    tracefree_a2 = norm_a2 - 2.0 * mean_h * mean_h
    k_ext = (a_uu * a_vv - a_uv * a_uv) / det_g
    return (
        g_uu, g_uv, g_vv, det_g, inv_uu, inv_uv, inv_vv, sqrt_det,
        normal, a_uu, a_uv, a_vv, mean_h, norm_a2, tracefree_a2, k_ext,
    )


def assemble_r3(fu, fv, fuu, fuv, fvv):
    """Fundamental forms for an immersion into R^3."""
    cross = np.cross(fu, fv)
    norm = np.linalg.norm(cross, axis=-1, keepdims=True)
    normal = cross / np.where(norm > 0.0, norm, 1.0)
    return _shared(fu, fv, fuu, fuv, fvv, normal)


def assemble_s3(f, fu, fv, fuu, fuv, fvv):
    """Fundamental forms for an immersion into the unit S^3 in R^4.

    The normal is the 4D generalized cross product *(f ^ f_u ^ f_v),
    automatically tangent to S^3 and orthogonal to the surface.
    """
    a, b, c = f, fu, fv

    def minor(i, j, k):
        return (
            a[..., i] * (b[..., j] * c[..., k] - b[..., k] * c[..., j])
            - a[..., j] * (b[..., i] * c[..., k] - b[..., k] * c[..., i])
            + a[..., k] * (b[..., i] * c[..., j] - b[..., j] * c[..., i])
        )

    normal = np.stack(
        [minor(1, 2, 3), -minor(0, 2, 3), minor(0, 1, 3), -minor(0, 1, 2)], axis=-1
    )
    norm = np.linalg.norm(normal, axis=-1, keepdims=True)
    normal = normal / np.where(norm > 0.0, norm, 1.0)
    return _shared(fu, fv, fuu, fuv, fvv, normal)
