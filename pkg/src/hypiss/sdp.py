"""Interior-point solver for the small dense LMI systems built by `lmi`.

The method is a plain log-det barrier path-following scheme: a phase-1
search drives a uniform slack below zero to find a strictly feasible point,
then (for minimization) Newton centering follows the central path along a
geometrically growing barrier parameter until the duality-gap surrogate
nu / t drops under tolerance.  Everything is dense numpy with fixed
iteration order, so identical inputs produce bit-identical outputs.

Infeasibility is declared heuristically: when phase 1 converges with its
slack optimum above the declaration threshold, no strictly feasible point
exists up to solver accuracy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import lmi

_NEWTON_TOL = 1e-5        # threshold on the squared Newton decrement / 2;
                          # the decrement is affine-invariant, and the gap
                          # surrogate nu/t is valid once it is this small
_ARMIJO = 0.25
_EXIT_SLACK = -1e-9       # phase-1 early exit once the slack is safely negative
_PHASE1_BOX = 1e9         # phase-1 searches |entry| < this; keeps the slack
                          # minimization bounded when the feasible set is not


class Status(enum.Enum):
    FEASIBLE = "feasible"
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolveOptions:
    """Tuning knobs; defaults are sized for blocks of dimension <= ~10."""

    max_newton: int = 600                  # total Newton step budget
    t_init: float = 1.0                    # initial barrier parameter
    t_growth: float = 10.0                 # geometric growth factor
    gap_tol: float = 1e-7                  # stop when nu / t < gap_tol
    infeasibility_threshold: float = 1e-7  # declare infeasible when slack* exceeds this

    def __post_init__(self):
        if self.max_newton <= 0 or self.t_init <= 0.0 or self.gap_tol <= 0.0 \
                or self.infeasibility_threshold <= 0.0:
            raise ValueError("solver options must be positive")
        if self.t_growth <= 1.0:
            raise ValueError("barrier growth factor must exceed 1")


@dataclass(frozen=True)
class Solution:
    """Solver outcome.  `margins` re-checks every constraint of the original
    problem at the returned point through lmi.margin, eps folded in, so a
    feasible/optimal claim can be audited independently of solver internals.
    """

    status: Status
    point: lmi.Point
    objective: float | None
    margins: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.status in (Status.FEASIBLE, Status.OPTIMAL)


class _Cone:
    """One PSD block in normalized form: value(x) must stay positive definite."""

    __slots__ = ("dim", "base", "idx", "coeffs")

    def __init__(self, dim, base, idx, coeffs):
        self.dim = dim
        self.base = base
        self.idx = idx
        self.coeffs = coeffs

    def value(self, x: np.ndarray) -> np.ndarray:
        out = self.base.copy()
        if len(self.idx):
            out += np.tensordot(x[self.idx], self.coeffs, axes=1)
        return out


def _cones(sf: lmi.StandardForm) -> list[_Cone]:
    cones = []
    for blk in sf.blocks:
        sign = -1.0 if blk.sense == lmi.LEQ else 1.0
        base = sign * blk.base - blk.eps * np.eye(blk.dim)
        cones.append(_Cone(blk.dim, base, blk.idx.copy(), sign * blk.coeffs))
    return cones


def _barrier(cones: list[_Cone], x: np.ndarray) -> float | None:
    """-sum log det of the blocks, or None if any block is not PD."""
    total = 0.0
    for c in cones:
        s = c.value(x)
        if not np.all(np.isfinite(s)):
            return None
        try:
            chol = np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            return None
        d = np.diagonal(chol)
        if np.any(d <= 0.0):
            return None
        total -= 2.0 * float(np.sum(np.log(d)))
    return total


def _newton_center(cones, tvec, x, budget, stop_when=None):
    """Damped Newton minimization of tvec @ x - sum log det S_j(x).

    Returns (x, steps_used, outcome) with outcome one of "centered",
    "stopped" (the early-exit predicate fired), "budget", "stalled".
    The iterate stays strictly feasible throughout.
    """
    n = x.size
    used = 0
    while used < budget:
        g = tvec.copy()
        hess = np.zeros((n, n))
        for c in cones:
            s = c.value(x)
            try:
                sinv = np.linalg.inv(s)
            except np.linalg.LinAlgError:
                return x, used, "stalled"
            if len(c.idx) == 0:
                continue
            t = np.einsum("ab,kbc->kac", sinv, c.coeffs)
            g[c.idx] -= np.einsum("kaa->k", t)
            hess[np.ix_(c.idx, c.idx)] += np.einsum("kab,lba->kl", t, t)
        hess = (hess + hess.T) / 2.0

        dx = None
        try:
            dx = np.linalg.solve(hess, -g)
        except np.linalg.LinAlgError:
            pass
        dec = float(-g @ dx) if dx is not None else -1.0
        if dx is None or not np.isfinite(dec) or dec < 0.0:
            ridge = 1e-12 * max(float(np.trace(hess)) / n, 1.0)
            try:
                dx = np.linalg.solve(hess + ridge * np.eye(n), -g)
            except np.linalg.LinAlgError:
                return x, used, "stalled"
            dec = float(-g @ dx)
            if not np.isfinite(dec) or dec < 0.0:
                return x, used, "stalled"
        if dec / 2.0 <= _NEWTON_TOL:
            return x, used, "centered"

        f0 = _barrier(cones, x)
        if f0 is None:
            return x, used, "stalled"
        f0 += float(tvec @ x)
        alpha = 1.0
        accepted = False
        while alpha > 1e-18:
            xn = x + alpha * dx
            bn = _barrier(cones, xn)
            if bn is not None:
                fn = bn + float(tvec @ xn)
                if fn <= f0 - _ARMIJO * alpha * dec:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            return x, used, "stalled"
        x = xn
        used += 1
        if stop_when is not None and stop_when(x):
            return x, used, "stopped"
    return x, used, "budget"


def _phase1(cones, x0, opts):
    """Minimize a uniform slack added to every block until it goes negative.

    The search runs inside a large box |entry| < _PHASE1_BOX so the slack
    minimization stays bounded even when the feasible set has unbounded
    directions (monotone slack-type variables usually give it some).

    Returns (x, slack, steps_used, outcome) with outcome "feasible",
    "infeasible_candidate" (slack converged while positive), or "stalled".
    """
    n = x0.size
    eye_stack = {d: np.eye(d)[None, :, :] for d in {c.dim for c in cones}}
    aug = []
    for c in cones:
        idx = np.append(c.idx, n)
        coeffs = (np.concatenate([c.coeffs, eye_stack[c.dim]])
                  if len(c.idx) else eye_stack[c.dim].copy())
        aug.append(_Cone(c.dim, c.base, idx, coeffs))

    # one diagonal cone holding R - x_i > 0 and R + x_i > 0 for every entry
    box_dim = 2 * (n + 1)
    box_coeffs = np.zeros((n + 1, box_dim, box_dim))
    for i in range(n + 1):
        box_coeffs[i, 2 * i, 2 * i] = -1.0
        box_coeffs[i, 2 * i + 1, 2 * i + 1] = 1.0
    aug.append(_Cone(box_dim, _PHASE1_BOX * np.eye(box_dim),
                     np.arange(n + 1), box_coeffs))

    floor = 0.0
    for c in cones:
        w = np.linalg.eigvalsh((lambda s: (s + s.T) / 2.0)(c.value(x0)))
        floor = max(floor, -float(w[0]))
    xs = np.append(x0, floor + 1.0)

    nu = float(sum(c.dim for c in aug))
    tvec_unit = np.zeros(n + 1)
    tvec_unit[n] = 1.0
    t = opts.t_init
    used_total = 0
    while used_total < opts.max_newton:
        xs, used, outcome = _newton_center(
            aug, t * tvec_unit, xs, opts.max_newton - used_total,
            stop_when=lambda v: v[n] < _EXIT_SLACK)
        used_total += used
        if xs[n] < 0.0:
            return xs[:n], float(xs[n]), used_total, "feasible"
        if outcome == "stalled":
            return xs[:n], float(xs[n]), used_total, "stalled"
        if outcome == "centered" and nu / t < opts.gap_tol:
            return xs[:n], float(xs[n]), used_total, "infeasible_candidate"
        if outcome != "budget":
            t *= opts.t_growth
    return xs[:n], float(xs[n]), used_total, "stalled"


def _phase2(cones, cvec, x, opts, budget):
    """Path-follow the objective from a strictly feasible start."""
    nu = float(sum(c.dim for c in cones))
    t = opts.t_init
    used_total = 0
    achieved = np.inf  # certified gap surrogate from the last centered stage
    while used_total < budget:
        x, used, outcome = _newton_center(cones, t * cvec, x, budget - used_total)
        used_total += used
        if outcome == "stalled":
            # float exhaustion near the end of the path; accept the point if
            # a previous stage already certified a gap close to the target
            if achieved <= 100.0 * opts.gap_tol:
                return x, used_total, Status.OPTIMAL
            return x, used_total, Status.NUMERICAL_FAILURE
        if outcome == "centered":
            achieved = nu / t
            if nu == 0.0 or achieved < opts.gap_tol:
                return x, used_total, Status.OPTIMAL
            t *= opts.t_growth
    return x, used_total, Status.NUMERICAL_FAILURE


def _finish(problem, sf, x, status, objective=None) -> Solution:
    point = sf.point(x)
    margins = tuple(lmi.problem_margins(problem, point))
    return Solution(status=status, point=point, objective=objective, margins=margins)


def solve_feasibility(problem: lmi.LmiProblem, options: SolveOptions | None = None) -> Solution:
    """Search for a strictly feasible point of a problem with no objective."""
    if problem.objective is not None:
        raise ValueError("solve_feasibility expects a problem without an objective")
    opts = options or SolveOptions()
    sf = lmi.vectorize(problem)
    cones = _cones(sf)
    if not cones:
        return _finish(problem, sf, sf.initial.copy(), Status.FEASIBLE)
    x, slack, _, outcome = _phase1(cones, sf.initial.copy(), opts)
    if outcome == "feasible":
        return _finish(problem, sf, x, Status.FEASIBLE)
    if outcome == "infeasible_candidate" and slack > opts.infeasibility_threshold:
        return _finish(problem, sf, x, Status.INFEASIBLE)
    return _finish(problem, sf, x, Status.NUMERICAL_FAILURE)


def minimize(problem: lmi.LmiProblem, options: SolveOptions | None = None) -> Solution:
    """Minimize the problem's linear objective over its feasible set."""
    if problem.objective is None:
        raise ValueError("minimize expects a problem with an objective")
    opts = options or SolveOptions()
    sf = lmi.vectorize(problem)
    cones = _cones(sf)
    cvec = sf.objective

    x, slack, used, outcome = _phase1(cones, sf.initial.copy(), opts)
    if outcome != "feasible":
        if outcome == "infeasible_candidate" and slack > opts.infeasibility_threshold:
            return _finish(problem, sf, x, Status.INFEASIBLE)
        return _finish(problem, sf, x, Status.NUMERICAL_FAILURE)

    x, _, status = _phase2(cones, cvec, x, opts, opts.max_newton - used)
    if status is not Status.OPTIMAL:
        return _finish(problem, sf, x, status)
    return _finish(problem, sf, x, Status.OPTIMAL, objective=float(cvec @ x))
