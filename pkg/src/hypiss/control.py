"""Boundary-feedback design for 1-D linear hyperbolic transport systems.

The plant transports n characteristic states at positive speeds across the
unit interval; the outflow trace is fed back to the inflow boundary through
a reflection matrix plus a saturated linear control, and an in-domain
disturbance enters through a constant map.  This module poses the gain
synthesis and gain analysis matrix inequalities, extracts certified
input-to-state-stability coefficients, and computes the constants used to
argue well-posedness of the saturated closed loop.

Convention for exponential weights: the certified Lyapunov density decays
like exp(-mu z) across the domain, and alpha is the certified decay rate of
the functional along solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lmi, sdp
from .linalg import DiagMatrix, Matrix, SymMatrix, invert_diag, max_eig, spectral_norm


class SynthesisError(Exception):
    """Base class for design failures; carries the solver's best effort."""

    def __init__(self, message: str, solution: sdp.Solution | None = None):
        super().__init__(message)
        self.solution = solution


class InfeasibleError(SynthesisError):
    pass


class SolverFailureError(SynthesisError):
    pass


@dataclass(frozen=True)
class Plant:
    """1-D hyperbolic transport system with saturated boundary input.

    speeds: positive transport speeds (diagonal), one per state.
    reflection: n x n boundary reflection of the outflow trace.
    input_map: n x m map from the saturated control to the inflow.
    disturbance_map: n x q map from the distributed disturbance.
    u_max: positive saturation levels, one per control channel.
    """

    speeds: DiagMatrix
    reflection: Matrix
    input_map: Matrix
    disturbance_map: Matrix
    u_max: np.ndarray

    def __post_init__(self):
        n = self.speeds.dim
        if np.any(self.speeds.diagonal <= 0.0):
            raise ValueError("transport speeds must be positive")
        if self.reflection.rows != n or self.reflection.cols != n:
            raise ValueError("reflection matrix must be n x n")
        if self.input_map.rows != n:
            raise ValueError("input map must have one row per state")
        if self.disturbance_map.rows != n:
            raise ValueError("disturbance map must have one row per state")
        u = np.asarray(self.u_max, dtype=float)
        if u.ndim != 1 or u.shape[0] != self.input_map.cols:
            raise ValueError("u_max needs one level per control channel")
        if not np.all(np.isfinite(u)) or np.any(u <= 0.0):
            raise ValueError("saturation levels must be positive and finite")
        object.__setattr__(self, "u_max", _frozen(u))

    @property
    def n(self) -> int:
        return self.speeds.dim

    @property
    def m(self) -> int:
        return self.input_map.cols

    @property
    def q(self) -> int:
        return self.disturbance_map.cols


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Controller:
    """Static output-feedback gain applied to the outflow trace."""

    gain: Matrix

    @staticmethod
    def zero(plant: Plant) -> "Controller":
        return Controller(Matrix.zeros(plant.m, plant.n))


@dataclass(frozen=True)
class IssCoefficients:
    """Exponential decay rate, overshoot factor, and disturbance gain of the
    certified input-to-state-stability estimate."""

    omega: float
    kappa: float
    gamma: float


@dataclass(frozen=True)
class SynthesisCertificate:
    """Solution of the gain-design inequalities, plus derived quantities.

    lyap_inv is the inverse of the (diagonal) Lyapunov weight, sector_inv
    the inverse of the sector multiplier, gain_scaled the gain times
    lyap_inv, coupling the disturbance-coupling bound, and peak an upper
    bound on the largest eigenvalue of lyap_inv that the design minimized.
    """

    lyap_inv: DiagMatrix
    sector_inv: DiagMatrix
    gain_scaled: Matrix
    coupling: SymMatrix
    mu: float
    alpha: float
    peak: float
    gain: Matrix
    gamma: float
    omega: float
    kappa: float
    margins: dict[str, float]


@dataclass(frozen=True)
class AnalysisCertificate:
    """Certified check of a fixed gain: Lyapunov weight, sector multiplier,
    disturbance coupling, and supply-rate gain, with inequality margins."""

    lyap: DiagMatrix
    sector: DiagMatrix
    coupling: SymMatrix
    mu: float
    supply: float
    alpha: float
    margins: dict[str, float]

    def is_valid(self, tolerance: float = 0.0) -> bool:
        return all(m >= tolerance for m in self.margins.values())


@dataclass(frozen=True)
class WellPosednessConstants:
    """Constants witnessing well-posedness of the saturated closed loop.

    tau dominates the quadratic input term at the boundary, mu_wp bounds
    the boundary energy amplification, and rho < 0 is an exponential
    weight making the boundary map contractive; slacks holds the checked
    inequalities (all must be positive)."""

    tau: float
    mu_wp: float
    rho: float
    slacks: dict[str, float]


@dataclass(frozen=True)
class GridCell:
    mu: float
    alpha: float
    status: str  # "feasible" | "infeasible" | "failed"
    peak: float | None
    gamma: float | None


@dataclass(frozen=True)
class FeasibilityMap:
    """Design outcome over a (mu, alpha) grid; cells are in row-major order
    with mu varying slowest.  best is the feasible cell of smallest gamma,
    ties broken by smaller mu then smaller alpha."""

    mu_grid: tuple[float, ...]
    alpha_grid: tuple[float, ...]
    cells: tuple[GridCell, ...]
    best: SynthesisCertificate | None


def saturate(u, u_max) -> np.ndarray:
    """Componentwise clamp of u to [-u_max, u_max]."""
    u = np.asarray(u, dtype=float)
    lim = np.asarray(u_max, dtype=float)
    return np.clip(u, -lim, lim)


def deadzone(u, u_max) -> np.ndarray:
    """saturate(u) - u; zero inside the linear range."""
    u = np.asarray(u, dtype=float)
    return saturate(u, u_max) - u


def sector_value(nu, u_max, sector: DiagMatrix) -> float:
    """Quadratic form phi^T T (phi + nu) with phi the deadzone of nu.

    Nonpositive for every nu and every positive diagonal T, which is the
    global sector property the synthesis leans on.
    """
    nu = np.asarray(nu, dtype=float)
    phi = deadzone(nu, u_max)
    return float(phi @ (sector.diagonal * (phi + nu)))


def closed_loop_boundary(plant: Plant, gain: Matrix, outflow) -> np.ndarray:
    """Inflow trace produced by reflecting the outflow and adding the
    saturated control: (H + B K) x + B * deadzone(K x)."""
    x = np.asarray(outflow, dtype=float)
    k = gain.array
    h_cl = plant.reflection.array + plant.input_map.array @ k
    return h_cl @ x + plant.input_map.array @ deadzone(k @ x, plant.u_max)


# variable names used in the synthesis problem
_VQ, _VS, _VW, _VG, _VC = "lyap_inv", "sector_inv", "gain_scaled", "coupling", "peak"
# and in the analysis problem
_VP, _VT, _VGA, _VX = "lyap", "sector", "coupling", "supply_sq"


def build_synthesis_lmis(plant: Plant, mu: float, alpha: float,
                         eps: float = lmi.DEFAULT_EPS) -> lmi.LmiProblem:
    """Convexified gain-design inequalities for the given weights.

    Decision variables: diagonal lyap_inv (inverse Lyapunov weight),
    diagonal sector_inv (inverse sector multiplier), full gain_scaled
    (gain times lyap_inv), symmetric coupling, and the scalar peak bounding
    lyap_inv's largest eigenvalue, which is also the objective.
    """
    if mu <= 0.0 or alpha <= 0.0:
        raise ValueError("mu and alpha must be positive")
    n, m = plant.n, plant.m
    lam = plant.speeds.diagonal
    big_lam = np.diag(lam)
    big_lam_inv = np.diag(1.0 / lam)
    h = plant.reflection.array
    b = plant.input_map.array
    nd = plant.disturbance_map.array

    vq = lmi.VarSpec.diagonal(_VQ, n)
    vs = lmi.VarSpec.diagonal(_VS, m)
    vw = lmi.VarSpec.full(_VW, m, n)
    vg = lmi.VarSpec.symmetric(_VG, n)
    vc = lmi.VarSpec.scalar(_VC)
    q = lmi.MatExpr.from_var(vq)
    s = lmi.MatExpr.from_var(vs)
    w = lmi.MatExpr.from_var(vw)
    g = lmi.MatExpr.from_var(vg)

    boundary = lmi.sym_block([
        [-(q @ big_lam_inv), h @ q + b @ w, b @ s],
        [None, -math.exp(-mu) * (big_lam @ q), -(w.T)],
        [None, None, -2.0 * s]])
    coupling = lmi.sym_block([[g, nd], [None, np.eye(plant.q)]])
    decay = lmi.symmetric_expr(q @ np.diag(alpha - mu * lam) + g)
    cap = lmi.symmetric_expr(q - lmi.MatExpr.scalar_identity(_VC, n))

    constraints = (
        lmi.Constraint(boundary, lmi.LEQ, "boundary_block"),
        lmi.Constraint(coupling, lmi.GEQ, "disturbance_block"),
        lmi.Constraint(decay, lmi.LEQ, "decay_block"),
        lmi.Constraint(cap, lmi.LEQ, "peak_cap", eps=0.0),
        lmi.Constraint(lmi.symmetric_expr(q), lmi.GEQ, "q_pos"),
        lmi.Constraint(lmi.symmetric_expr(s), lmi.GEQ, "s_pos"),
        lmi.Constraint(lmi.symmetric_expr(g), lmi.GEQ, "coupling_pos"),
    )
    return lmi.LmiProblem((vq, vs, vw, vg, vc), constraints,
                          objective=(((_VC, 0), 1.0),), eps=eps)


def iss_coefficients(lyap: DiagMatrix, mu: float, alpha: float,
                     supply: float) -> IssCoefficients:
    """Decay rate, overshoot, and disturbance gain implied by a Lyapunov
    weight P, domain weight mu, decay rate alpha, and supply gain."""
    if mu <= 0.0 or alpha <= 0.0 or supply <= 0.0:
        raise ValueError("mu, alpha, and the supply gain must be positive")
    p = lyap.diagonal
    if np.any(p <= 0.0):
        raise ValueError("the Lyapunov weight must be positive")
    pmin, pmax = float(np.min(p)), float(np.max(p))
    omega = alpha / 2.0
    kappa = math.sqrt(pmax / pmin) * math.exp(mu / 2.0)
    gamma = supply * math.exp(mu / 2.0) / math.sqrt(pmin)
    return IssCoefficients(omega=omega, kappa=kappa, gamma=gamma)


def _certificate_from_solution(plant: Plant, problem: lmi.LmiProblem,
                               solution: sdp.Solution, mu: float,
                               alpha: float) -> SynthesisCertificate:
    point = solution.point
    q = DiagMatrix(point.entries[_VQ])
    s = DiagMatrix(point.entries[_VS])
    w = Matrix(point.matrix(problem.variable(_VW)))
    g = SymMatrix(point.matrix(problem.variable(_VG)))
    peak = point.entry((_VC, 0))
    gain = Matrix(w.array @ invert_diag(q).array)

    labels = [c.label for c in problem.constraints]
    margins = dict(zip(labels, lmi.problem_margins(problem, point)))
    worst = min(margins.values())
    if worst < -1e-9:
        raise SolverFailureError(
            f"re-checked margins dip to {worst:.3e}; refusing to certify",
            solution)
    qmax = float(np.max(q.diagonal))
    if qmax > peak + 1e-9 * max(1.0, abs(peak)):
        raise SolverFailureError(
            f"largest lyap_inv eigenvalue {qmax:.6g} exceeds peak bound {peak:.6g}",
            solution)

    coeffs = iss_coefficients(invert_diag(q), mu, alpha, 1.0)
    gamma = math.sqrt(qmax) * math.exp(mu / 2.0)
    return SynthesisCertificate(
        lyap_inv=q, sector_inv=s, gain_scaled=w, coupling=g,
        mu=mu, alpha=alpha, peak=peak, gain=gain,
        gamma=gamma, omega=coeffs.omega, kappa=coeffs.kappa,
        margins=margins)


def synthesize(plant: Plant, mu: float, alpha: float,
               options: sdp.SolveOptions | None = None,
               eps: float = lmi.DEFAULT_EPS) -> SynthesisCertificate:
    """Design a saturated boundary gain minimizing the certified peak of the
    inverse Lyapunov weight; raises InfeasibleError when the inequalities
    admit no solution at these weights."""
    problem = build_synthesis_lmis(plant, mu, alpha, eps=eps)
    solution = sdp.minimize(problem, options)
    if solution.status is sdp.Status.INFEASIBLE:
        raise InfeasibleError(
            f"synthesis inequalities are infeasible at mu={mu}, alpha={alpha}",
            solution)
    if solution.status is not sdp.Status.OPTIMAL:
        raise SolverFailureError(
            f"solver reported {solution.status.value} at mu={mu}, alpha={alpha}",
            solution)
    return _certificate_from_solution(plant, problem, solution, mu, alpha)


def grid_search(plant: Plant, mu_grid, alpha_grid,
                options: sdp.SolveOptions | None = None,
                eps: float = lmi.DEFAULT_EPS) -> FeasibilityMap:
    """Run the design over a grid of (mu, alpha) weights.

    Cells never abort the sweep: solver failures are recorded as "failed".
    The best cell minimizes the certified disturbance gain gamma, with ties
    broken by smaller mu then smaller alpha.
    """
    mus = tuple(float(v) for v in mu_grid)
    alphas = tuple(float(v) for v in alpha_grid)
    if not mus or not alphas:
        raise ValueError("grids must be nonempty")
    if any(v <= 0.0 for v in mus + alphas):
        raise ValueError("grid weights must be positive")
    if list(mus) != sorted(set(mus)) or list(alphas) != sorted(set(alphas)):
        raise ValueError("grids must be strictly increasing")

    cells = []
    best_key = None
    best_cell = None
    for mu in mus:
        for alpha in alphas:
            try:
                problem = build_synthesis_lmis(plant, mu, alpha, eps=eps)
                solution = sdp.minimize(problem, options)
            except Exception:
                cells.append(GridCell(mu, alpha, "failed", None, None))
                continue
            if solution.status is sdp.Status.OPTIMAL:
                peak = float(solution.objective)
                gamma = math.sqrt(peak) * math.exp(mu / 2.0)
                cells.append(GridCell(mu, alpha, "feasible", peak, gamma))
                key = (gamma, mu, alpha)
                if best_key is None or key < best_key:
                    best_key = key
                    best_cell = (problem, solution, mu, alpha)
            elif solution.status is sdp.Status.INFEASIBLE:
                cells.append(GridCell(mu, alpha, "infeasible", None, None))
            else:
                cells.append(GridCell(mu, alpha, "failed", None, None))

    best = None
    if best_cell is not None:
        best = _certificate_from_solution(plant, best_cell[0], best_cell[1],
                                          best_cell[2], best_cell[3])
    return FeasibilityMap(mu_grid=mus, alpha_grid=alphas,
                          cells=tuple(cells), best=best)


def _analysis_blocks(plant: Plant, gain: Matrix, mu: float, alpha: float,
                     lyap_expr, sector_expr, coupling_expr, supply_sq_expr):
    """The three analysis inequalities as expressions in P, T, Gamma, chi^2."""
    lam = plant.speeds.diagonal
    big_lam = np.diag(lam)
    h_cl = plant.reflection.array + plant.input_map.array @ gain.array
    b = plant.input_map.array
    nd = plant.disturbance_map.array
    k = gain.array

    lam_hcl = big_lam @ h_cl
    lam_b = big_lam @ b
    p = lyap_expr
    t = sector_expr

    a11 = h_cl.T @ (p @ lam_hcl) - math.exp(-mu) * (p @ big_lam)
    a12 = h_cl.T @ (p @ lam_b) - k.T @ t
    a22 = b.T @ (p @ lam_b) - 2.0 * t
    boundary = lmi.sym_block([[a11, a12], [None, a22]])

    coupling = lmi.sym_block([[coupling_expr, p @ nd], [None, supply_sq_expr]])
    decay = lmi.symmetric_expr(p @ np.diag(alpha - mu * lam) + coupling_expr)
    return boundary, coupling, decay


def build_analysis_lmis(plant: Plant, gain: Matrix, mu: float, alpha: float,
                        eps: float = lmi.DEFAULT_EPS) -> lmi.LmiProblem:
    """Feasibility problem certifying a fixed gain: find a diagonal Lyapunov
    weight, diagonal sector multiplier, symmetric coupling bound, and a
    squared supply gain satisfying the dissipation inequalities."""
    if mu <= 0.0 or alpha <= 0.0:
        raise ValueError("mu and alpha must be positive")
    n, m = plant.n, plant.m
    vp = lmi.VarSpec.diagonal(_VP, n)
    vt = lmi.VarSpec.diagonal(_VT, m)
    vg = lmi.VarSpec.symmetric(_VGA, n)
    vx = lmi.VarSpec.scalar(_VX)
    boundary, coupling, decay = _analysis_blocks(
        plant, gain, mu, alpha,
        lmi.MatExpr.from_var(vp), lmi.MatExpr.from_var(vt),
        lmi.MatExpr.from_var(vg), lmi.MatExpr.scalar_identity(_VX, plant.q))
    constraints = (
        lmi.Constraint(boundary, lmi.LEQ, "boundary_block"),
        lmi.Constraint(coupling, lmi.GEQ, "disturbance_block"),
        lmi.Constraint(decay, lmi.LEQ, "decay_block"),
        lmi.Constraint(lmi.symmetric_expr(lmi.MatExpr.from_var(vp)), lmi.GEQ, "p_pos"),
        lmi.Constraint(lmi.symmetric_expr(lmi.MatExpr.from_var(vt)), lmi.GEQ, "t_pos"),
        lmi.Constraint(lmi.symmetric_expr(lmi.MatExpr.from_var(vg)), lmi.GEQ, "coupling_pos"),
        lmi.Constraint(lmi.symmetric_expr(lmi.MatExpr.scalar_identity(_VX, 1)),
                       lmi.GEQ, "supply_pos"),
    )
    return lmi.LmiProblem((vp, vt, vg, vx), constraints, eps=eps)


def verify_analysis(plant: Plant, gain: Matrix, lyap: DiagMatrix,
                    coupling: SymMatrix, mu: float, supply: float, alpha: float,
                    eps: float = lmi.DEFAULT_EPS,
                    options: sdp.SolveOptions | None = None) -> AnalysisCertificate:
    """Check the analysis inequalities at fixed (P, Gamma, chi, mu, alpha),
    searching only over the sector multiplier.

    The boundary inequality is the only one involving the multiplier; it is
    scanned by minimizing the largest eigenvalue of its block over diagonal
    T >= eps I.  The reported margins may be negative; callers decide what
    tolerance to accept.
    """
    if np.any(lyap.diagonal <= 0.0):
        raise ValueError("the Lyapunov weight must be positive")
    if supply <= 0.0:
        raise ValueError("the supply gain must be positive")
    point_fixed = lmi.Point({
        _VP: _frozen(lyap.diagonal),
        _VGA: _frozen(lmi.VarSpec.symmetric(_VGA, plant.n)
                      .entries_from_matrix(coupling.array)),
        _VX: _frozen(np.array([supply ** 2])),
    })

    # pose min shift s.t. boundary_block(T) <= shift*I, T >= eps I
    vt = lmi.VarSpec.diagonal(_VT, plant.m)
    vshift = lmi.VarSpec.scalar("shift")
    p_const = lmi.MatExpr.constant(lyap.array)
    g_const = lmi.MatExpr.constant(coupling.array)
    x_const = lmi.MatExpr.constant(supply ** 2 * np.eye(plant.q))
    boundary, coupling_blk, decay = _analysis_blocks(
        plant, gain, mu, alpha, p_const, lmi.MatExpr.from_var(vt),
        g_const, x_const)
    dim_b = plant.n + plant.m
    shifted = lmi.AffineMatrixExpr.from_expr(
        _expr_of(boundary) - lmi.MatExpr.scalar_identity("shift", dim_b))
    problem = lmi.LmiProblem(
        (vt, vshift),
        (lmi.Constraint(shifted, lmi.LEQ, "shifted_boundary", eps=0.0),
         lmi.Constraint(lmi.symmetric_expr(lmi.MatExpr.from_var(vt)),
                        lmi.GEQ, "t_pos")),
        objective=((("shift", 0), 1.0),), eps=eps)
    solution = sdp.minimize(problem, options)
    if solution.status is not sdp.Status.OPTIMAL:
        raise SolverFailureError(
            f"sector-multiplier search reported {solution.status.value}", solution)
    sector = DiagMatrix(solution.point.entries[_VT])

    point = lmi.Point({**point_fixed.entries, _VT: sector.diagonal})
    margins = {
        "boundary_block": lmi.margin(boundary, lmi.LEQ, point, eps=0.0),
        "disturbance_block": lmi.margin(coupling_blk, lmi.GEQ, point, eps=0.0),
        "decay_block": lmi.margin(decay, lmi.LEQ, point, eps=0.0),
    }
    return AnalysisCertificate(lyap=lyap, sector=sector,
                               coupling=coupling, mu=mu, supply=supply,
                               alpha=alpha, margins=margins)


def _expr_of(e):
    """AffineMatrixExpr back to a MatExpr for further arithmetic."""
    if isinstance(e, lmi.MatExpr):
        return e
    out = lmi.MatExpr((e.dim, e.dim), e.constant.copy(),
                      {r: c.copy() for r, c in e.terms})
    return out


def analysis_values(certificate: SynthesisCertificate) -> tuple[DiagMatrix, SymMatrix]:
    """Map a synthesis certificate to the analysis-side weight and coupling:
    P is the inverse of lyap_inv and Gamma = P * coupling * P."""
    p = invert_diag(certificate.lyap_inv)
    pa = p.array
    return p, SymMatrix.symmetrized(pa @ certificate.coupling.array @ pa)


def wellposedness_certificate(plant: Plant, gain: Matrix,
                              delta: float = 0.01) -> WellPosednessConstants:
    """Constants witnessing well-posedness of the saturated closed loop.

    All four defining inequalities are re-checked numerically and reported
    as positive slacks; delta is the strictness headroom added when picking
    each constant.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    lam = plant.speeds.diagonal
    big_lam = np.diag(lam)
    big_lam_inv = np.diag(1.0 / lam)
    b = plant.input_map.array
    k = gain.array
    h_cl = plant.reflection.array + b @ k

    btlb = SymMatrix.symmetrized(b.T @ big_lam @ b)
    tau = 1.0 + max_eig(btlb) + delta

    cross = spectral_norm(Matrix(h_cl.T @ big_lam @ b))
    inner = (h_cl.T @ big_lam @ h_cl @ big_lam_inv
             + tau * (k.T @ k) @ big_lam_inv
             + cross ** 2 * big_lam_inv)
    amplification = math.log(max(spectral_norm(Matrix(inner)), 1e-300))
    mu_wp = max(amplification, 0.0) + delta

    lam_max = float(np.max(lam))
    norm_sum = spectral_norm(Matrix(h_cl)) + spectral_norm(Matrix(b @ k))
    if norm_sum > 0.0:
        contraction_rho = -lam_max * math.log(norm_sum)
    else:
        contraction_rho = math.inf
    rho = min(-mu_wp / 2.0, contraction_rho) - delta

    slacks = {
        "input_domination": tau - 1.0 - max_eig(btlb),
        "amplification_margin": mu_wp - amplification,
        "drift_margin": -mu_wp / 2.0 - rho,
        "boundary_contraction": 1.0 - math.exp(rho / lam_max) * norm_sum,
    }
    return WellPosednessConstants(tau=tau, mu_wp=mu_wp, rho=rho, slacks=slacks)
