"""Spectral laboratory for bending-energy experiments on immersed tori.

Core pieces: FFT-based torus geometry (energy, curvature, L^2 gradient),
the Mobius group and its ten conformal generators, the Fourier-diagonal
stability form on the flat Clifford chart, the gauge-plus-graph
decomposition of near-minimal tori, and the adaptive gradient flow.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .errors import (
    FocalRadiusExceeded,
    ImmersionDegenerate,
    InversionSingularity,
    NoConvergence,
    NotInNeighborhood,
    PoleSingularity,
    StepCollapse,
    ValidationError,
    WillmoreLabError,
)
from .surface import (
    CLIFFORD_ENERGY,
    CLIFFORD_PERIOD,
    CLIFFORD_RATIO,
    GeometryCache,
    Immersion,
    ParamGrid,
    ScalarField,
    clifford_grid,
    clifford_torus_s3,
    geometry,
    gradient_norm,
    integrate,
    laplace_beltrami,
    make_grid,
    revolution_torus,
    willmore_energy,
    willmore_gradient,
)
from .mobius import (
    ConformalField,
    Dilation,
    MobiusMap,
    Rotation,
    SphereInversion,
    Translation,
    apply_immersion,
    apply_mobius,
    conformal_generators,
    identity_map,
    normal_component,
    random_mobius,
    stereo_to_r3,
    stereo_to_s3,
)
from .spectral import (
    SpectralModel,
    coercivity_lambda,
    h2_inner,
    h2_norm,
    kernel_basis,
    kernel_cross_check,
    project_kernel,
    project_kernel_complement,
    second_differential,
    spectral_model,
    w2_apply,
    w2_form,
)
from .graphnorm import (
    Decomposition,
    KernelChart,
    decompose,
    exp_normal,
    graph_over,
    kernel_chart,
    mobius_from_kernel,
    shape_distance,
)
from .flow import (
    FlowConfig,
    FlowResult,
    FlowState,
    FlowTrace,
    flow_step,
    gap_scan,
    initial_state,
    perturbed_clifford,
    random_kperp_direction_r3,
    regraph,
    run_flow,
)
