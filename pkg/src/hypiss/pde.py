"""Closed-loop simulation of 1-D hyperbolic transport with boundary feedback.

The state lives on cell centers of a uniform grid over (0, 1) and is
advanced with the staggered two-step Lax-Friedrichs scheme: half-step
states on cell interfaces, then a conservative full step back on centers.
The inflow ghost cell is filled from the saturated feedback law applied to
the outflow trace, the outflow ghost by constant extrapolation, so the
boundary coupling enters exactly once per step.  Alongside the solver sit
the trajectory diagnostics: weighted norms, the exponential Lyapunov
functional, and the input-to-state-stability envelope it certifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .control import Plant, closed_loop_boundary, saturate
from .linalg import DiagMatrix, Matrix

ZERO = "zero"
SINUSOIDAL_PRODUCT = "sinusoidal_product"
COSINE_PROFILE = "cosine_profile"
TABULATED = "tabulated"

_KINDS = (ZERO, SINUSOIDAL_PRODUCT, COSINE_PROFILE, TABULATED)

# default cap on recorded diagnostics per run
_MAX_RECORDS = 2000


class BlowUpError(RuntimeError):
    """Simulation produced a non-finite state; time is the first bad time."""

    def __init__(self, time: float):
        super().__init__(f"state became non-finite at t = {time:.6g}")
        self.time = time


@dataclass(frozen=True)
class SignalSpec:
    """Space-time signal used for disturbances and initial conditions.

    kind "zero": identically zero with a fixed component count.
    kind "sinusoidal_product": component i is amplitude * sin(z t) or
    amplitude * cos(z t) according to phases[i].
    kind "cosine_profile": component i is amplitude * (cos(2 pi k_i z) - 1),
    time-independent.
    kind "tabulated": per-component linear interpolation of samples on a
    strictly increasing spatial grid that must cover every queried z.
    """

    kind: str
    components: int = 0
    amplitude: float = 0.0
    phases: tuple[str, ...] = ()
    frequencies: tuple[float, ...] = ()
    sample_grid: np.ndarray | None = None
    sample_values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == ZERO:
            if self.components < 1:
                raise ValueError("zero signal needs a positive component count")
        elif self.kind == SINUSOIDAL_PRODUCT:
            if not self.phases or any(p not in ("sin", "cos") for p in self.phases):
                raise ValueError("phases must be a nonempty tuple of 'sin'/'cos'")
            object.__setattr__(self, "components", len(self.phases))
        elif self.kind == COSINE_PROFILE:
            if not self.frequencies:
                raise ValueError("cosine profile needs at least one frequency")
            object.__setattr__(self, "components", len(self.frequencies))
        else:
            g = np.asarray(self.sample_grid, dtype=float)
            v = np.atleast_2d(np.asarray(self.sample_values, dtype=float))
            if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0.0):
                raise ValueError("tabulated grid must be strictly increasing")
            if v.shape[1] != g.size:
                raise ValueError("tabulated values must match the grid length")
            if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
                raise ValueError("tabulated data must be finite")
            object.__setattr__(self, "sample_grid", _frozen(g))
            object.__setattr__(self, "sample_values", _frozen(v))
            object.__setattr__(self, "components", v.shape[0])

    @staticmethod
    def zero(components: int) -> "SignalSpec":
        return SignalSpec(ZERO, components=components)

    @staticmethod
    def sinusoidal_product(amplitude: float, phases) -> "SignalSpec":
        return SignalSpec(SINUSOIDAL_PRODUCT, amplitude=float(amplitude),
                          phases=tuple(phases))

    @staticmethod
    def cosine_profile(amplitude: float, frequencies) -> "SignalSpec":
        return SignalSpec(COSINE_PROFILE, amplitude=float(amplitude),
                          frequencies=tuple(float(k) for k in frequencies))

    @staticmethod
    def tabulated(sample_grid, sample_values) -> "SignalSpec":
        return SignalSpec(TABULATED, sample_grid=np.asarray(sample_grid),
                          sample_values=np.asarray(sample_values))

    def sample(self, t: float, z) -> np.ndarray:
        """Evaluate at time t on the positions z; shape (components, len(z))."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if self.kind == ZERO:
            return np.zeros((self.components, z.size))
        if self.kind == SINUSOIDAL_PRODUCT:
            arg = z * t
            rows = [np.sin(arg) if p == "sin" else np.cos(arg) for p in self.phases]
            return self.amplitude * np.stack(rows)
        if self.kind == COSINE_PROFILE:
            rows = [np.cos(2.0 * math.pi * k * z) - 1.0 for k in self.frequencies]
            return self.amplitude * np.stack(rows)
        g = self.sample_grid
        if np.min(z) < g[0] or np.max(z) > g[-1]:
            raise ValueError("tabulated signal queried outside its grid")
        return np.stack([np.interp(z, g, row) for row in self.sample_values])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform finite-volume grid on (0, 1) with at least 8 cells."""

    cells: int

    def __post_init__(self):
        if self.cells < 8:
            raise ValueError("grid needs at least 8 cells")

    @property
    def dz(self) -> float:
        return 1.0 / self.cells

    @cached_property
    def centers(self) -> np.ndarray:
        return _frozen((np.arange(self.cells) + 0.5) * self.dz)

    @cached_property
    def interfaces(self) -> np.ndarray:
        return _frozen(np.arange(self.cells + 1) * self.dz)


@dataclass(frozen=True)
class SimConfig:
    """Run description: grid, horizon, CFL number, input signals, and how
    often diagnostics are recorded (stride None picks one keeping at most
    2000 records)."""

    grid: Grid
    t_final: float
    cfl: float = 0.9
    disturbance: SignalSpec | None = None
    initial: SignalSpec | None = None
    snapshot_stride: int | None = None
    keep_snapshots: bool = False

    def __post_init__(self):
        if not (self.t_final > 0.0 and math.isfinite(self.t_final)):
            raise ValueError("t_final must be positive and finite")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.snapshot_stride is not None and self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")


@dataclass(frozen=True)
class Trajectory:
    """Diagnostics recorded along a run, one row per recorded time."""

    times: np.ndarray
    l2_norms: np.ndarray
    boundary_traces: np.ndarray
    control_traces: np.ndarray
    lyapunov_values: np.ndarray | None = None
    snapshots: np.ndarray | None = None


@dataclass(frozen=True)
class IssBoundParams:
    """Constants of the certified envelope: lower/upper Lyapunov sandwich
    constants c1 <= c2, decay rate c3, supply gain chi, and the initial
    norm the envelope starts from."""

    c1: float
    c2: float
    c3: float
    chi: float
    x0_norm: float

    def __post_init__(self):
        if not (0.0 < self.c1 <= self.c2):
            raise ValueError("need 0 < c1 <= c2")
        if self.c3 <= 0.0 or self.chi <= 0.0:
            raise ValueError("c3 and chi must be positive")
        if self.x0_norm < 0.0:
            raise ValueError("x0_norm must be nonnegative")


def l2_norm(state, grid: Grid) -> float:
    """Spatial L2 norm by the composite midpoint rule on cell centers."""
    state = np.atleast_2d(np.asarray(state, dtype=float))
    return math.sqrt(float(np.sum(state * state)) * grid.dz)


def lyapunov_value(state, lyap: DiagMatrix, mu: float, grid: Grid) -> float:
    """Exponentially weighted quadratic functional int e^{-mu z} <X, PX> dz
    by the midpoint rule."""
    if mu < 0.0:
        raise ValueError("mu must be nonnegative")
    if np.any(lyap.diagonal <= 0.0):
        raise ValueError("the Lyapunov weight must be positive")
    state = np.atleast_2d(np.asarray(state, dtype=float))
    weight = np.exp(-mu * grid.centers)
    quad = np.sum(lyap.diagonal[:, None] * state * state, axis=0)
    return float(np.sum(weight * quad)) * grid.dz


def iss_bound_params(lyap: DiagMatrix, mu: float, alpha: float, supply: float,
                     x0_norm: float) -> IssBoundParams:
    """Envelope constants implied by a Lyapunov weight: c1 = e^{-mu} min(P),
    c2 = max(P), c3 = alpha."""
    p = lyap.diagonal
    if np.any(p <= 0.0):
        raise ValueError("the Lyapunov weight must be positive")
    return IssBoundParams(
        c1=math.exp(-mu) * float(np.min(p)),
        c2=float(np.max(p)),
        c3=alpha, chi=supply, x0_norm=x0_norm)


def iss_rhs(t: float, params: IssBoundParams, disturbance_energy: float) -> float:
    """Certified envelope at time t given the accumulated disturbance energy
    int_0^t ||d||^2: decaying term plus the gain times the energy root."""
    if disturbance_energy < 0.0:
        raise ValueError("disturbance energy must be nonnegative")
    decay = math.exp(-0.5 * params.c3 * t) * math.sqrt(params.c2 / params.c1)
    return decay * params.x0_norm + params.chi / math.sqrt(params.c1) * math.sqrt(
        disturbance_energy)


def frechet_check(lyap: DiagMatrix, mu: float, state, direction,
                  stepsize: float, grid: Grid) -> float:
    """Relative gap between the central difference of the functional along
    the direction and the closed-form derivative 2 int e^{-mu z} <PX, h> dz.

    The functional is quadratic, so the gap is rounding noise for any
    stepsize.  The scale for the relative error is max(|derivative|, V(h)),
    which stays meaningful at X = 0.
    """
    if stepsize <= 0.0:
        raise ValueError("stepsize must be positive")
    x = np.atleast_2d(np.asarray(state, dtype=float))
    h = np.atleast_2d(np.asarray(direction, dtype=float))
    if not np.any(h != 0.0):
        raise ValueError("direction must be nonzero")
    plus = lyapunov_value(x + stepsize * h, lyap, mu, grid)
    minus = lyapunov_value(x - stepsize * h, lyap, mu, grid)
    fd = (plus - minus) / (2.0 * stepsize)
    weight = np.exp(-mu * grid.centers)
    exact = 2.0 * float(np.sum(weight * np.sum(
        lyap.diagonal[:, None] * x * h, axis=0))) * grid.dz
    scale = max(abs(exact), lyapunov_value(h, lyap, mu, grid))
    return abs(fd - exact) / scale


def disturbance_energy(spec: SignalSpec, times, grid: Grid) -> np.ndarray:
    """Cumulative int_0^t ||d(theta)||^2 dtheta at each time, trapezoid in
    time over the given instants, midpoint in space."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be a strictly increasing 1-D array")
    if spec is None or spec.kind == ZERO:
        return np.zeros(times.size)
    sq = np.array([l2_norm(spec.sample(t, grid.centers), grid) ** 2
                   for t in times])
    out = np.zeros(times.size)
    np.cumsum(0.5 * (sq[1:] + sq[:-1]) * np.diff(times), out=out[1:])
    return out


def step(state: np.ndarray, plant: Plant, gain: Matrix, t: float, dt: float,
         config: SimConfig) -> np.ndarray:
    """One staggered Lax-Friedrichs step of length dt starting at time t.

    Half-step states are formed on interfaces (boundary values from the
    feedback ghost cell at z=0 and constant extrapolation at z=1), then the
    centers take the conservative full step.  The disturbance enters both
    stages at the half-step time.
    """
    grid = config.grid
    lam = plant.speeds.diagonal[:, None]
    dz = grid.dz
    if float(np.max(lam)) * dt > dz * (1.0 + 1e-12):
        raise ValueError(
            f"CFL violation: max speed * dt / dz = {float(np.max(lam)) * dt / dz:.4g} > 1")

    inflow = closed_loop_boundary(plant, gain, state[:, -1])
    ghosted = np.concatenate([inflow[:, None], state, state[:, -1:]], axis=1)

    half_t = t + 0.5 * dt
    jump = ghosted[:, 1:] - ghosted[:, :-1]
    half = 0.5 * (ghosted[:, 1:] + ghosted[:, :-1]) - (0.5 * dt / dz) * lam * jump
    nd = plant.disturbance_map.array
    if config.disturbance is not None and config.disturbance.kind != ZERO:
        half += (0.5 * dt) * (nd @ config.disturbance.sample(half_t, grid.interfaces))

    out = state - (dt / dz) * lam * (half[:, 1:] - half[:, :-1])
    if config.disturbance is not None and config.disturbance.kind != ZERO:
        out += dt * (nd @ config.disturbance.sample(half_t, grid.centers))
    return out


def simulate(plant: Plant, gain: Matrix, config: SimConfig,
             lyapunov: tuple[DiagMatrix, float] | None = None) -> Trajectory:
    """March the closed loop to t_final, recording diagnostics at t = 0,
    every snapshot stride, and the final time.

    Pass lyapunov = (P, mu) to record the weighted functional along the
    run.  A non-finite state aborts with the first bad time.
    """
    grid = config.grid
    if config.initial is not None and config.initial.components != plant.n:
        raise ValueError("initial condition has the wrong component count")
    if config.disturbance is not None and config.disturbance.components != plant.q:
        raise ValueError("disturbance has the wrong component count")

    lam_max = float(np.max(plant.speeds.diagonal))
    dt = config.cfl * grid.dz / lam_max
    full_steps = int(math.floor(config.t_final / dt + 1e-12))
    remainder = config.t_final - full_steps * dt
    n_steps = full_steps + (1 if remainder > 1e-12 * dt else 0)
    stride = config.snapshot_stride
    if stride is None:
        stride = max(1, math.ceil(n_steps / _MAX_RECORDS))

    if config.initial is None:
        state = np.zeros((plant.n, grid.cells))
    else:
        state = config.initial.sample(0.0, grid.centers)

    times: list[float] = []
    norms: list[float] = []
    boundary: list[np.ndarray] = []
    controls: list[np.ndarray] = []
    lyap_vals: list[float] = []
    snaps: list[np.ndarray] = []
    k_arr = gain.array

    def record(t_now: float, x: np.ndarray):
        times.append(t_now)
        norms.append(l2_norm(x, grid))
        trace = x[:, -1].copy()
        boundary.append(trace)
        controls.append(saturate(k_arr @ trace, plant.u_max))
        if lyapunov is not None:
            lyap_vals.append(lyapunov_value(x, lyapunov[0], lyapunov[1], grid))
        if config.keep_snapshots:
            snaps.append(x.copy())

    record(0.0, state)
    # overflow on the way to a detected blow-up is expected, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            if k <= full_steps:
                t_prev, dt_k, t_now = (k - 1) * dt, dt, k * dt if k < n_steps else config.t_final
            else:
                t_prev, dt_k, t_now = full_steps * dt, remainder, config.t_final
            state = step(state, plant, gain, t_prev, dt_k, config)
            if not np.all(np.isfinite(state)):
                raise BlowUpError(t_now)
            if k % stride == 0 or k == n_steps:
                record(t_now, state)

    return Trajectory(
        times=_frozen(np.array(times)),
        l2_norms=_frozen(np.array(norms)),
        boundary_traces=_frozen(np.array(boundary)),
        control_traces=_frozen(np.array(controls)),
        lyapunov_values=_frozen(np.array(lyap_vals)) if lyapunov is not None else None,
        snapshots=_frozen(np.array(snaps)) if config.keep_snapshots else None)
