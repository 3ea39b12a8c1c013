"""L^2 negative-gradient flow of the bending energy on torus immersions.

The stepper is explicit adaptive RK2 (Heun) with an unconditional energy
backtracking rule: a proposal is accepted only if the energy does not
increase beyond 1e-12 relative, otherwise the step is halved. dt is capped
by c*h^4 (h = smallest grid spacing in ambient length, c calibrated once);
the cap tracks the stiffness of the fourth-order operator so the controller
does not waste rejection cascades. Periodic regraphing rewrites the surface
as a normal graph over its own Mobius gauge, the discrete counterpart of
reparametrizing the flow by diffeomorphisms.

`gap_scan` probes the energy excess above 2 pi^2 along K-perp directions in
the flat S^3 chart and compares it with the quadratic model
(t^2/2) * D2W[v, v] = (t^2/4) * Q(v, v) from the spectral module.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field, asdict

import numpy as np

from . import backend, fourier, spectral
from .errors import ImmersionDegenerate, StepCollapse, ValidationError
from .graphnorm import decompose, exp_normal, kernel_chart
from .mobius import Dilation, MobiusMap, Translation, apply_immersion
from .surface import (
    CLIFFORD_ENERGY,
    CLIFFORD_RATIO,
    Immersion,
    ParamGrid,
    ScalarField,
    clifford_torus_s3,
    geometry,
    make_grid,
    revolution_torus,
    willmore_energy,
)

__all__ = [
    "FlowConfig",
    "FlowState",
    "FlowTrace",
    "FlowResult",
    "initial_state",
    "flow_step",
    "regraph",
    "run_flow",
    "gap_scan",
    "random_kperp_direction_r3",
    "H4_COEFFICIENT",
]

# frozen calibration of the explicit-stability cap dt <= c * h_min^4
# (measured once against the RK2 stability edge at the Clifford torus, n=32)
H4_COEFFICIENT = 0.03


@dataclass
class FlowConfig:
    dt_init: float = 1e-7
    dt_min: float = 1e-13
    dt_max: float = 1e-3
    safety: float = 0.8
    grad_tol: float = 1e-3
    energy_tol: float = 1e-13
    max_steps: int = 1_000_000
    regraph_every: int = 0          # accepted steps between regraphs; 0 = never
    gauge_fixing: bool = True
    trace_every: int = 100
    plateau_window: int = 50
    accept_slack: float = 1e-12
    h4_coefficient: float = H4_COEFFICIENT
    grow_after: int = 5             # consecutive acceptances before dt grows

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValidationError("need 0 < dt_min <= dt_init <= dt_max")
        if not (0.0 < self.safety < 1.0):
            raise ValidationError("safety factor must lie in (0, 1)")
        for name in ("grad_tol", "energy_tol"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "FlowConfig":
        return cls(**data)


@dataclass
class FlowState:
    time: float
    immersion: Immersion
    dt: float
    energy: float
    grad_norm: float
    steps: int = 0


class FlowTrace:
    """Append-only history of (time, energy, grad_norm, dt, residual)."""

    COLUMNS = ("kind", "step", "time", "energy", "grad_norm", "dt", "residual")

    def __init__(self):
        self.rows: list[tuple] = []

    def record(self, kind: str, step: int, time: float, energy: float,
               grad_norm: float, dt: float, residual: float = float("nan")):
        self.rows.append((kind, step, time, energy, grad_norm, dt, residual))

    def energies(self) -> np.ndarray:
        return np.array([r[3] for r in self.rows])

    def __len__(self):
        return len(self.rows)


@dataclass
class FlowResult:
    trace: FlowTrace
    state: FlowState
    certificate: dict


# ---------------------------------------------------------------------------
# array-level engine (hot path)
# ---------------------------------------------------------------------------

def _diff_matrix(n: int, period: float, order: int) -> np.ndarray:
    """Dense spectral differentiation matrix (real), FFT conventions.

    For grids this small, one BLAS matmul beats per-field FFT dispatch by a
    wide margin; the matrix reproduces fourier.spectral_derivative exactly
    (including the zeroed Nyquist mode for odd orders).
    """
    k = fourier.angular_wavenumbers(n, period)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[n // 2] = 0.0
    return np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real


class _Engine:
    """RK2 stepping on raw position arrays with cached derivative matrices."""

    def __init__(self, grid: ParamGrid):
        self.grid = grid
        n_u, n_v = grid.n_u, grid.n_v
        self.d1u = _diff_matrix(n_u, grid.period_u, 1)
        self.d2u = _diff_matrix(n_u, grid.period_u, 2)
        self.d1v = _diff_matrix(n_v, grid.period_v, 1)
        self.d2v = _diff_matrix(n_v, grid.period_v, 2)
        # right-multiplication forms for (n_u, n_v) scalar fields
        self.d1v_t = self.d1v.T.copy()
        self.cell_area = grid.cell_area
        self.n = (n_u, n_v)

    # -- geometry ----------------------------------------------------------
    def geometry_of(self, pos: np.ndarray, strict: bool = True):
        # single-dgemm derivative evaluation in (n_u, n_v, 3) layout
        n_u, n_v = self.n
        pos = np.ascontiguousarray(pos)
        flat_u = pos.reshape(n_u, 3 * n_v)
        fu = (self.d1u @ flat_u).reshape(n_u, n_v, 3)
        fuu = (self.d2u @ flat_u).reshape(n_u, n_v, 3)
        swapped = np.ascontiguousarray(pos.transpose(1, 0, 2)).reshape(n_v, 3 * n_u)
        fv = np.ascontiguousarray(
            (self.d1v @ swapped).reshape(n_v, n_u, 3).transpose(1, 0, 2))
        fvv = np.ascontiguousarray(
            (self.d2v @ swapped).reshape(n_v, n_u, 3).transpose(1, 0, 2))
        fu_swapped = np.ascontiguousarray(fu.transpose(1, 0, 2)).reshape(n_v, 3 * n_u)
        fuv = np.ascontiguousarray(
            (self.d1v @ fu_swapped).reshape(n_v, n_u, 3).transpose(1, 0, 2))
        out = backend.assemble_r3(fu, fv, fuu, fuv, fvv)
        det = out[3]
        mean_det = det.mean()
        if mean_det <= 0.0 or det.min() < 1e-10 * mean_det:
            if strict:
                raise ImmersionDegenerate(
                    f"det g collapsed during flow (min {det.min():.3e})"
                )
            return None
        return out

    def energy(self, geom) -> float:
        mean_h, sg = geom[12], geom[7]
        return float(np.sum(mean_h * mean_h * sg) * self.cell_area)

    def gradient(self, geom):
        """Returns (gradient field, squared L^2 norm)."""
        (i_uu, i_uv, i_vv, sg) = (geom[4], geom[5], geom[6], geom[7])
        mean_h, tracefree = geom[12], geom[14]
        hu = self.d1u @ mean_h
        hv = mean_h @ self.d1v_t
        p = sg * (i_uu * hu + i_uv * hv)
        q = sg * (i_uv * hu + i_vv * hv)
        div = self.d1u @ p + q @ self.d1v_t
        grad = -(div / sg + tracefree * mean_h)
        norm_sq = float(np.sum(grad * grad * sg) * self.cell_area)
        return grad, norm_sq

    def velocity(self, geom):
        grad, norm_sq = self.gradient(geom)
        return -grad[..., None] * geom[8], norm_sq

    def min_spacing(self, geom) -> float:
        du = self.grid.period_u / self.grid.n_u
        dv = self.grid.period_v / self.grid.n_v
        return float(min(np.sqrt(geom[0].min()) * du, np.sqrt(geom[2].min()) * dv))

    # -- stepping ----------------------------------------------------------
    def accepted_step(self, pos, geom, energy, dt, config: FlowConfig):
        """One accepted RK2 step; halves dt on rejection.

        Returns (pos, geom, energy, dt_used, dt_next, grad_norm, rejections).
        """
        vel1, norm_sq = self.velocity(geom)
        grad_norm = float(np.sqrt(max(norm_sq, 0.0)))
        cap = config.h4_coefficient * self.min_spacing(geom) ** 4
        dt = min(dt, cap, config.dt_max)
        rejections = 0
        while True:
            if dt < config.dt_min:
                raise StepCollapse(
                    f"dt fell below dt_min={config.dt_min:g} after {rejections} rejections"
                )
            mid = pos + dt * vel1
            geom_mid = self.geometry_of(mid, strict=False)
            if geom_mid is not None:
                vel2, _ = self.velocity(geom_mid)
                prop = pos + (0.5 * dt) * (vel1 + vel2)
                geom_prop = self.geometry_of(prop, strict=False)
                if geom_prop is not None:
                    new_energy = self.energy(geom_prop)
                    if new_energy <= energy * (1.0 + config.accept_slack):
                        return prop, geom_prop, new_energy, dt, dt, grad_norm, rejections
            dt *= 0.5
            rejections += 1


_ENGINES: dict = {}


def _engine_for(grid: ParamGrid) -> _Engine:
    key = (grid.n_u, grid.n_v, round(grid.period_u, 12), round(grid.period_v, 12))
    if key not in _ENGINES:
        _ENGINES[key] = _Engine(grid)
    return _ENGINES[key]


def initial_state(f0: Immersion, config: FlowConfig) -> FlowState:
    if f0.ambient != "r3":
        raise ValidationError("the flow is defined for R^3 immersions")
    engine = _engine_for(f0.grid)
    geom = engine.geometry_of(f0.positions)
    _, norm_sq = engine.gradient(geom)
    return FlowState(
        time=0.0, immersion=f0.copy(), dt=config.dt_init,
        energy=engine.energy(geom), grad_norm=float(np.sqrt(max(norm_sq, 0.0))),
        steps=0,
    )


def flow_step(state: FlowState, config: FlowConfig) -> FlowState:
    """One accepted flow step (internal rejections halve dt).

    dt grows by 1/safety after `grow_after` consecutive acceptances in
    run_flow; the single-step API applies the cap but leaves growth to the
    driver.
    """
    engine = _engine_for(state.immersion.grid)
    geom = engine.geometry_of(state.immersion.positions)
    energy = engine.energy(geom)
    pos, geom, energy, dt_used, dt_next, grad_norm, _ = engine.accepted_step(
        state.immersion.positions, geom, energy, state.dt, config
    )
    return FlowState(
        time=state.time + dt_used,
        immersion=Immersion(state.immersion.grid, "r3", pos),
        dt=dt_next, energy=energy, grad_norm=grad_norm, steps=state.steps + 1,
    )


def regraph(state: FlowState, config: FlowConfig | None = None,
            tol: float = 1e-10) -> tuple[FlowState, float]:
    """Resample the surface as a normal graph over its Mobius gauge.

    Returns the new state and the decomposition residual. With gauge fixing
    (default) the translation and dilation parts of the gauge are removed by
    exact inverse primitives, which leaves the discrete energy unchanged.
    """
    gauge_fixing = config.gauge_fixing if config is not None else True
    dec = decompose(state.immersion, tol=tol)
    fresh = exp_normal(dec.base_image, dec.graph)
    if gauge_fixing and len(dec.mobius.primitives) > 0:
        g10 = kernel_chart(state.immersion.grid).generator_weights @ dec.coeffs
        prims = []
        if np.linalg.norm(g10[0:3]) > 1e-15:
            prims.append(Translation(tuple(-g10[0:3])))
        if abs(g10[6]) > 1e-15:
            prims.append(Dilation(float(np.exp(-g10[6]))))
        if prims:
            fresh = apply_immersion(MobiusMap(tuple(prims)), fresh)
    engine = _engine_for(fresh.grid)
    geom = engine.geometry_of(fresh.positions)
    _, norm_sq = engine.gradient(geom)
    new_state = FlowState(
        time=state.time, immersion=fresh, dt=state.dt,
        energy=engine.energy(geom), grad_norm=float(np.sqrt(max(norm_sq, 0.0))),
        steps=state.steps,
    )
    return new_state, dec.residual


def _certificate(state: FlowState, converged: bool, reason: str) -> dict:
    cert = {
        "status": "CONVERGED" if converged else "INCONCLUSIVE",
        "converged": converged,
        "reason": reason,
        "energy": state.energy,
        "energy_minus_clifford": state.energy - CLIFFORD_ENERGY,
        "grad_norm": state.grad_norm,
        "steps": state.steps,
        "time": state.time,
    }
    try:
        dec = decompose(state.immersion, tol=1e-8)
        cert["decomposition"] = dec.report()
    except Exception as exc:  # certification failure demotes the claim
        cert["decomposition"] = {"error": f"{type(exc).__name__}: {exc}"}
        cert["converged"] = False
        if converged:
            cert["status"] = "INCONCLUSIVE"
            cert["reason"] = reason + "+certification_failed"
    return cert


def run_flow(f0: Immersion, config: FlowConfig,
             snapshot_cb=None) -> FlowResult:
    """Drive the flow to the gradient/plateau stopping rule.

    Regraphs every `regraph_every` accepted steps; a run ending on
    max_steps is reported INCONCLUSIVE. The final certificate embeds the
    gauge decomposition of the end state (kernel coefficients and norms of
    the K-perp graph).
    """
    state = initial_state(f0, config)
    engine = _engine_for(f0.grid)
    trace = FlowTrace()
    trace.record("init", 0, 0.0, state.energy, state.grad_norm, state.dt)
    if state.grad_norm <= config.grad_tol:
        return FlowResult(trace, state, _certificate(state, True, "gradient_tolerance"))

    pos = state.immersion.positions.copy()
    geom = engine.geometry_of(pos)
    energy = engine.energy(geom)
    dt = state.dt
    window: collections.deque = collections.deque(maxlen=config.plateau_window)
    window.append(energy)
    streak = 0
    accepted = 0
    time = 0.0
    grad_norm = state.grad_norm
    converged = False
    reason = "max_steps"

    while accepted < config.max_steps:
        pos, geom, energy, dt_used, dt, grad_norm, rejections = engine.accepted_step(
            pos, geom, energy, dt, config
        )
        time += dt_used
        accepted += 1
        streak = 0 if rejections else streak + 1
        if streak >= config.grow_after:
            dt = min(dt / config.safety, config.dt_max)
            streak = 0
        if accepted % config.trace_every == 0:
            trace.record("step", accepted, time, energy, grad_norm, dt_used)
        if snapshot_cb is not None:
            snapshot_cb(accepted, time, Immersion(f0.grid, "r3", pos))
        if grad_norm <= config.grad_tol:
            converged, reason = True, "gradient_tolerance"
            break
        window.append(energy)
        if (len(window) == config.plateau_window
                and window[0] - window[-1] <= config.energy_tol * max(1.0, abs(energy))):
            converged, reason = True, "energy_plateau"
            break
        if config.regraph_every > 0 and accepted % config.regraph_every == 0:
            interim = FlowState(time, Immersion(f0.grid, "r3", pos), dt,
                                energy, grad_norm, accepted)
            interim, residual = regraph(interim, config)
            pos = interim.immersion.positions
            geom = engine.geometry_of(pos)
            energy = interim.energy
            grad_norm = interim.grad_norm
            window.clear()
            window.append(energy)
            trace.record("regraph", accepted, time, energy, grad_norm, dt_used, residual)

    state = FlowState(time, Immersion(f0.grid, "r3", pos), dt, energy,
                      grad_norm, accepted)
    trace.record("final", accepted, time, energy, grad_norm, dt)
    return FlowResult(trace, state, _certificate(state, converged, reason))


# ---------------------------------------------------------------------------
# seeded flow directions and the gap scan
# ---------------------------------------------------------------------------

def random_kperp_direction_r3(grid: ParamGrid, seed: int,
                              include_constant: bool = False) -> ScalarField:
    """Seeded smooth unit field (C^0 norm 1) orthogonal to the R^3 kernel.

    By default the constant mode is excluded: it is the slowest decaying
    K-perp direction and only stretches run times without changing what the
    experiment certifies.
    """
    rng = np.random.default_rng(seed)
    uu, vv = grid.mesh()
    values = np.zeros(grid.shape)
    if include_constant:
        values += rng.normal()
    for m in range(0, 5):
        for n in range(-4, 5):
            if m == 0 and n <= 0:
                continue
            amp = np.exp(-1.2 * np.hypot(m, n))
            c, d = rng.normal(size=2)
            values += amp * (c * np.cos(m * uu + n * vv) + d * np.sin(m * uu + n * vv))
    chart = kernel_chart(grid)
    values = values - chart.kernel_part(values)
    return ScalarField(grid, values / np.abs(values).max())


def perturbed_clifford(n: int, seed: int, amplitude: float = 0.05,
                       include_constant: bool = False) -> Immersion:
    """exp_normal(T, amplitude * v) for the seeded K-perp unit direction."""
    grid = make_grid(n, n)
    base = revolution_torus(CLIFFORD_RATIO, 1.0, grid)
    direction = random_kperp_direction_r3(grid, seed, include_constant)
    return exp_normal(base, amplitude * direction.values)


def gap_scan(directions, amplitudes, model: spectral.SpectralModel | None = None) -> list[dict]:
    """Energy excess along K-perp directions vs. the quadratic model.

    Each row: direction id, amplitude t, measured excess W - 2 pi^2, the
    model (t^2/4) Q(v, v) (= (t^2/2) x second differential), the remainder,
    and the coercivity floor (lambda/4) t^2 |v|_H2^2.
    """
    if model is None:
        first = directions[0]
        model = spectral.SpectralModel(first.grid)
    torus = clifford_torus_s3(model.grid)
    geom = geometry(torus)
    lam = spectral.coercivity_lambda(8)
    rows = []
    for idx, direction in enumerate(directions):
        values = model.check_field(direction)
        kernel_leak = spectral.h2_norm(
            model, spectral.project_kernel(model, values).values
        )
        q_val = spectral.w2_form(model, values, values)
        h2_sq = spectral.h2_inner(model, values, values)
        for t in amplitudes:
            surf = exp_normal(torus, t * values, geom=geom)
            excess = willmore_energy(surf) - CLIFFORD_ENERGY
            quad_model = 0.25 * t * t * q_val
            rows.append({
                "direction": idx,
                "amplitude": t,
                "excess": excess,
                "quad_model": quad_model,
                "remainder": excess - quad_model,
                "coercivity_floor": 0.25 * lam * t * t * h2_sq,
                "w2_form": q_val,
                "h2_norm_sq": h2_sq,
                "kernel_leak": kernel_leak,
            })
    return rows
