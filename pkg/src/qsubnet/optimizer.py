"""Constrained minimisation of purification and multiplexing costs.

Two sub-networks are solved from the pair of stationarity/activity equations
by nested bracketed root finding. N sub-networks are solved by enumerating
candidate active sets of the pairwise constraints and running damped Newton
on each KKT system.

The N-network systems are posed in log variables: with ``y_i = -ln x_i``
(``x`` the Werner parameter, or the probability itself) every pair
constraint becomes linear, ``l_i y_i + l_j y_j <= c``, and each cost is a
decreasing convex function of one ``y_i``. Any verified KKT point is
therefore the global minimiser. All acceptance checks are done back in the
original parameters.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, nnls

from . import costs
from .costs import TaskThresholds
from .errors import InfeasibleError, SolverError
from .netmodel import Backbone, SubNetworkProfile

FIDELITY = "fidelity"
PROBABILITY = "probability"
MAX_NETWORKS = 8
# Exhaustive active-set enumeration up to this many networks; above it only
# the candidate families that can be optimal for uniform pair constraints.
FULL_ENUMERATION_LIMIT = 4
_SQRT3 = math.sqrt(3.0)
_TOP = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class SolverOptions:
    root_tol: float = 1e-10
    kkt_tol: float = 1e-8
    max_iterations: int = 100
    starts: tuple = (0.25, 0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class OptimizationProblem:
    profiles: tuple
    backbone: Backbone
    thresholds: TaskThresholds

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if len(self.profiles) < 2:
            raise ValueError("an optimisation problem needs at least two sub-networks")

    @property
    def n(self) -> int:
        return len(self.profiles)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(itertools.combinations(range(self.n), 2))


@dataclass
class KKTSolution:
    kind: str
    values: tuple
    multipliers: dict
    active_set: tuple
    costs: tuple
    total_cost: float
    residuals: dict
    status: str = "optimal"
    method: str = ""

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "values": list(self.values),
            "multipliers": {f"{i},{j}": v for (i, j), v in self.multipliers.items()},
            "active_set": [list(p) for p in self.active_set],
            "costs": list(self.costs),
            "total_cost": self.total_cost,
            "residuals": self.residuals,
            "status": self.status,
            "method": self.method,
        }


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    margin: float
    status: str
    f_eff: Optional[float] = None
    fidelity_margin: Optional[float] = None
    probability_margin: Optional[float] = None
    reasons: tuple = field(default=())


def feasibility_check(problem: OptimizationProblem) -> FeasibilityReport:
    """Evaluate both constraints at the best corner of the domain.

    With every edge perfect, ``g = f_eff - 2`` and ``h = eta_Th - eta*``.
    The margin is the smaller slack; zero slack is only reachable on the
    excluded boundary and is reported as ``infeasible-in-open-domain``.
    """
    th = problem.thresholds
    slacks = []
    reasons = []
    f_eff = fid_margin = prob_margin = None
    if th.fidelity is not None:
        f_eff = costs.effective_fidelity_target(th.fidelity, problem.backbone.fidelity)
        fid_margin = 2.0 - f_eff
        slacks.append(fid_margin)
        if fid_margin <= 0:
            reasons.append("fidelity threshold unreachable with this backbone")
    if th.probability is not None:
        prob_margin = problem.backbone.probability - th.probability
        slacks.append(prob_margin)
        if prob_margin <= 0:
            reasons.append("backbone probability below threshold")
    if not slacks:
        raise ValueError("thresholds carry neither a fidelity nor a probability target")
    margin = min(slacks)
    if margin > 0:
        status = "feasible"
    elif margin == 0:
        status = "infeasible-in-open-domain"
    else:
        status = "infeasible"
    return FeasibilityReport(margin > 0, margin, status, f_eff, fid_margin, prob_margin,
                             tuple(reasons))


# ---------------------------------------------------------------------------
# Per-kind algebra in original variables


class _Kind:
    """Cost, constraint and derivatives for one of the two problems."""

    def __init__(self, kind: str, problem: OptimizationProblem):
        self.kind = kind
        self.problem = problem
        th = problem.thresholds
        bb = problem.backbone
        self.E = np.array([p.edge_count for p in problem.profiles], dtype=np.float64)
        self.l = np.array([p.l_max for p in problem.profiles], dtype=np.int64)
        if kind == FIDELITY:
            if th.fidelity is None:
                raise ValueError("fidelity threshold missing")
            self.f_eff = costs.effective_fidelity_target(th.fidelity, bb.fidelity)
            self.active_level = 0.25 + self.f_eff
            if self.f_eff >= 2.0:
                status = "infeasible" if self.f_eff > 2.0 else "infeasible-in-open-domain"
                raise InfeasibleError(
                    "infeasible: fidelity threshold unreachable with this backbone", status)
            if self.active_level <= 0.0:
                raise InfeasibleError(
                    "fidelity threshold holds everywhere; optimum lies on the lower domain boundary",
                    "infeasible-in-open-domain")
            self.c = math.log(2.25 / self.active_level)
            self.scale = self.E.copy()
        elif kind == PROBABILITY:
            if th.probability is None:
                raise ValueError("probability threshold missing")
            if th.probability >= bb.probability:
                status = "infeasible" if th.probability > bb.probability else "infeasible-in-open-domain"
                raise InfeasibleError("infeasible: backbone probability below threshold", status)
            self.active_level = th.probability
            self.c = math.log(bb.probability / th.probability)
            self.Lb = np.array([-math.log1p(-p.eta_bare) for p in problem.profiles])
            self.scale = self.E / self.Lb
        else:
            raise ValueError(f"unknown problem kind {kind!r}")

    # original variables -------------------------------------------------
    def cost(self, i, v):
        p = self.problem.profiles[i]
        if self.kind == FIDELITY:
            return costs.purification_cost(p.edge_count, v)
        return costs.multiplexing_cost(p.edge_count, v, p.eta_bare, strict=False)

    def cost_grad(self, i, v):
        if self.kind == FIDELITY:
            return 0.5 * self.E[i] * (1.0 - v) ** -1.5
        return self.E[i] / ((1.0 - v) * self.Lb[i])

    def constraint(self, i, j, vi, vj):
        th, bb = self.problem.thresholds, self.problem.backbone
        if self.kind == FIDELITY:
            return costs.fidelity_constraint_g(vi, vj, int(self.l[i]), int(self.l[j]),
                                               th.fidelity, bb.fidelity)
        return costs.probability_constraint_h(vi, vj, int(self.l[i]), int(self.l[j]),
                                              th.probability, bb.probability)

    def constraint_grad(self, i, j, vi, vj):
        """Partial derivatives of the (i, j) constraint w.r.t. (v_i, v_j)."""
        li, lj = int(self.l[i]), int(self.l[j])
        if self.kind == FIDELITY:
            xi, xj = (4 * vi - 1) / 3, (4 * vj - 1) / 3
            return (-3.0 * li * xi ** (li - 1) * xj ** lj,
                    -3.0 * lj * xj ** (lj - 1) * xi ** li)
        es = self.problem.backbone.probability
        return (-li * vi ** (li - 1) * es * vj ** lj,
                -lj * vj ** (lj - 1) * es * vi ** li)

    def ratio_term(self, i, v):
        """Per-network side of the two-network stationarity ratio."""
        if self.kind == FIDELITY:
            return self.E[i] * (4 * v - 1) / (self.l[i] * (1 - v) ** 1.5)
        return self.E[i] * v / (self.l[i] * (1 - v) * self.Lb[i])

    def lower(self):
        return 0.25 if self.kind == FIDELITY else 0.0

    # log variables -----------------------------------------------------
    def to_param(self, y):
        if self.kind == FIDELITY:
            return (1.0 + 3.0 * np.exp(-y)) / 4.0
        return np.exp(-y)

    def dcost(self, y):
        q = -np.expm1(-y)
        if self.kind == FIDELITY:
            return -self.E / _SQRT3 * q ** -1.5 * np.exp(-y)
        return -self.E / (self.Lb * np.expm1(y))

    def d2cost(self, y):
        if self.kind == FIDELITY:
            q = -np.expm1(-y)
            e = np.exp(-y)
            return self.E / _SQRT3 * (1.5 * q ** -2.5 * e * e + q ** -1.5 * e)
        em = np.expm1(y)
        return self.E / self.Lb * np.exp(y) / (em * em)

    def multiplier_from_log(self, nu):
        # at an active pair the constraint's y-gradient is l_i * active_level
        return nu / self.active_level


# ---------------------------------------------------------------------------
# Verification


def _verify(kind: _Kind, values: Sequence[float], multipliers: dict, free=None) -> dict:
    """KKT residuals in original variables.

    Stationarity, complementarity and the multiplier sign are relative to the
    largest cost gradient; ``free`` limits stationarity to coordinates not
    pinned by a bound.
    """
    n = kind.problem.n
    free = range(n) if free is None else free
    grad = np.array([kind.cost_grad(i, values[i]) for i in range(n)])
    for (i, j), lam in multipliers.items():
        gi, gj = kind.constraint_grad(i, j, values[i], values[j])
        grad[i] += lam * gi
        grad[j] += lam * gj
    scale = max(abs(kind.cost_grad(i, values[i])) for i in range(n))
    cons = {p: kind.constraint(p[0], p[1], values[p[0]], values[p[1]]) for p in kind.problem.pairs}
    return {
        "stationarity": float(max(abs(grad[i]) for i in free) / scale) if len(free) else 0.0,
        "feasibility": float(max(0.0, max(cons.values()))),
        "complementarity": float(max((abs(lam * cons[p]) for p, lam in multipliers.items()),
                                     default=0.0) / scale),
        "min_multiplier": float(min(multipliers.values(), default=0.0) / scale),
        "min_abs_constraint": float(min(abs(v) for v in cons.values())),
    }


def _accepts(res: dict, tol: float) -> bool:
    return (res["stationarity"] <= tol and res["feasibility"] <= tol
            and res["complementarity"] <= tol and res["min_multiplier"] >= -tol)


def _make_solution(kind, values, multipliers, method, status="optimal", free=None):
    values = tuple(float(v) for v in values)
    cs = tuple(float(kind.cost(i, v)) for i, v in enumerate(values))
    res = _verify(kind, values, multipliers, free)
    active = tuple(sorted(p for p in multipliers))
    return KKTSolution(kind.kind, values, {p: float(v) for p, v in sorted(multipliers.items())},
                       active, cs, float(sum(cs)), res, status, method)


# ---------------------------------------------------------------------------
# Two sub-networks: nested bracketed root finding


def _solve_two(kind: _Kind, options: SolverOptions) -> KKTSolution:
    if kind.problem.n != 2:
        raise ValueError("the two-network solver needs exactly two profiles")
    lo = kind.lower()
    l1, l2 = int(kind.l[0]), int(kind.l[1])
    xtol = 1e-16

    def partner(v1):
        target = kind.ratio_term(0, v1)
        if kind.ratio_term(1, _TOP) <= target:
            return _TOP
        return brentq(lambda v2: kind.ratio_term(1, v2) - target, lo, _TOP,
                      xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)

    def activity(v1):
        v2 = partner(v1)
        return -kind.constraint(0, 1, v1, v2)

    try:
        v1 = brentq(activity, lo, _TOP, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    except ValueError as exc:
        raise InfeasibleError(f"no bracket for the active constraint: {exc}",
                              "infeasible-in-open-domain") from None
    v2 = partner(v1)
    gi, _ = kind.constraint_grad(0, 1, v1, v2)
    lam = kind.cost_grad(0, v1) / -gi
    sol = _make_solution(kind, (v1, v2), {(0, 1): lam}, method="nested-root")
    r1, r2 = kind.ratio_term(0, v1), kind.ratio_term(1, v2)
    sol.residuals["ratio"] = float(abs(r1 - r2) / max(r1, r2))
    sol.residuals["active"] = float(abs(kind.constraint(0, 1, v1, v2)))
    if sol.residuals["ratio"] > options.root_tol or sol.residuals["active"] > options.root_tol:
        raise SolverError("two-network root residuals above tolerance",
                          max(sol.residuals["ratio"], sol.residuals["active"]))
    if not _accepts(sol.residuals, options.kkt_tol):
        raise SolverError("two-network solution failed KKT verification",
                          sol.residuals["stationarity"])
    return sol


def solve_fidelity_two(problem: OptimizationProblem, options: SolverOptions = SolverOptions()) -> KKTSolution:
    """Optimal mean edge fidelities of two connected sub-networks."""
    return _solve_two(_Kind(FIDELITY, problem), options)


def solve_probability_two(problem: OptimizationProblem, options: SolverOptions = SolverOptions(),
                          clamp: bool = False) -> KKTSolution:
    """Optimal mean edge probabilities of two connected sub-networks.

    Differing ``eta_bare`` values enter through the log of the single-attempt
    failure probability in the stationarity ratio. A solution below some
    network's ``eta_bare`` is flagged ``target-below-bare``; with ``clamp``
    that network is pinned at ``eta_bare`` and the other re-solved from the
    constraint.
    """
    kind = _Kind(PROBABILITY, problem)
    sol = _solve_two(kind, options)
    bare = [p.eta_bare for p in problem.profiles]
    below = [i for i in range(2) if sol.values[i] < bare[i]]
    if not below:
        return sol
    if not clamp:
        sol.status = "target-below-bare"
        return sol
    th, bb = problem.thresholds, problem.backbone
    l = [p.l_max for p in problem.profiles]
    if len(below) == 2:
        vals = tuple(bare)
        return _make_solution(kind, vals, {}, "clamped", "clamped-to-bare", free=())
    k = below[0]
    o = 1 - k
    other = (th.probability / (bb.probability * bare[k] ** l[k])) ** (1.0 / l[o])
    other = max(other, bare[o])
    vals = [0.0, 0.0]
    vals[k], vals[o] = bare[k], other
    grads = kind.constraint_grad(0, 1, vals[0], vals[1])
    mu = kind.cost_grad(o, vals[o]) / -grads[o]
    return _make_solution(kind, vals, {(0, 1): mu}, "clamped", "clamped-to-bare", free=(o,))


# ---------------------------------------------------------------------------
# N sub-networks: active-set enumeration with damped Newton


def _candidate_sets(n: int) -> list[tuple[tuple[int, int], ...]]:
    """Active sets to try, ordered by size then lexicographically.

    Costs fall as parameters rise, so every network must sit in an active
    constraint; sets larger than ``n`` cannot have independent gradients.
    """
    pairs = list(itertools.combinations(range(n), 2))
    if n <= FULL_ENUMERATION_LIMIT:
        out = []
        for size in range(1, n + 1):
            for combo in itertools.combinations(pairs, size):
                if len({v for p in combo for v in p}) == n:
                    out.append(combo)
        return out
    # With identical pair constraints w_i + w_j <= c (w_i = l_i y_i), an
    # optimum either has one w_k above c/2 with all others pinned to c - w_k
    # (a star at k) or has every w_i = c/2.
    return [tuple(sorted((min(k, j), max(k, j)) for j in range(n) if j != k)) for k in range(n)]


def _newton(kind: _Kind, active, y0, options: SolverOptions):
    n = kind.problem.n
    m = len(active)
    l = kind.l.astype(np.float64)
    A = np.zeros((m, n))
    for p, (i, j) in enumerate(active):
        A[p, i], A[p, j] = l[i], l[j]
    s = kind.scale

    def residual(v):
        y, nu = v[:n], v[n:]
        stat = (kind.dcost(y) + A.T @ nu) / s
        return np.concatenate([stat, A @ y - kind.c])

    def jacobian(v):
        y = v[:n]
        J = np.zeros((n + m, n + m))
        J[:n, :n] = np.diag(kind.d2cost(y) / s)
        J[:n, n:] = (A.T) / s[:, None]
        J[n:, :n] = A
        return J

    y = np.asarray(y0, dtype=np.float64)
    nu0, *_ = np.linalg.lstsq(A.T / s[:, None], -kind.dcost(y) / s, rcond=None)
    v = np.concatenate([y, nu0])
    r = residual(v)
    for _ in range(options.max_iterations):
        rn = np.max(np.abs(r))
        ref = max(1.0, float(np.max(np.abs(kind.dcost(v[:n]) / s))))
        if rn <= 1e-14 * ref:
            return v, True
        try:
            step = np.linalg.solve(jacobian(v), -r)
        except np.linalg.LinAlgError:
            return v, False
        alpha = 1.0
        while alpha > 1e-12:
            trial = v + alpha * step
            if np.all(trial[:n] > 0):
                rt = residual(trial)
                if np.max(np.abs(rt)) < (1 - 1e-4 * alpha) * rn or np.max(np.abs(rt)) <= 1e-14 * ref:
                    v, r = trial, rt
                    break
            alpha *= 0.5
        else:
            return v, bool(np.max(np.abs(r)) <= 1e-11 * ref)
    return v, bool(np.max(np.abs(r)) <= 1e-11 * max(1.0, float(np.max(np.abs(kind.dcost(v[:n]) / s)))))


def _all_equal_candidate(kind: _Kind):
    """Point where every pair constraint is tight; multipliers by NNLS."""
    n = kind.problem.n
    pairs = kind.problem.pairs
    l = kind.l.astype(np.float64)
    y = kind.c / (2.0 * l)
    M = np.zeros((n, len(pairs)))
    for p, (i, j) in enumerate(pairs):
        M[i, p], M[j, p] = l[i] / kind.scale[i], l[j] / kind.scale[j]
    nu, _ = nnls(M, -kind.dcost(y) / kind.scale)
    return y, {pairs[p]: nu[p] for p in range(len(pairs)) if nu[p] > 0}


def _solve_n(kind: _Kind, options: SolverOptions) -> KKTSolution:
    n = kind.problem.n
    if n > MAX_NETWORKS:
        raise ValueError(f"at most {MAX_NETWORKS} sub-networks are supported")
    l = kind.l.astype(np.float64)
    accepted = []
    best_res = math.inf
    candidates = [(active, None) for active in _candidate_sets(n)]
    if n > FULL_ENUMERATION_LIMIT:
        candidates.append((tuple(kind.problem.pairs), "all-equal"))
    for order, (active, special) in enumerate(candidates):
        tried = []
        if special == "all-equal":
            y, nu_map = _all_equal_candidate(kind)
            tried.append((y, nu_map))
        else:
            for t in options.starts:
                v, ok = _newton(kind, active, t * kind.c / (2.0 * l), options)
                if ok and np.all(v[:n] > 0):
                    tried.append((v[:n], dict(zip(active, v[n:]))))
                    break
        for y, nu_map in tried:
            values = kind.to_param(y)
            lam = {p: float(kind.multiplier_from_log(nu)) for p, nu in nu_map.items()}
            if not np.all((values > kind.lower()) & (values < 1.0)):
                continue
            res = _verify(kind, values, lam)
            best_res = min(best_res, res["stationarity"] + res["feasibility"])
            if _accepts(res, options.kkt_tol):
                sol = _make_solution(kind, values, lam, method=f"active-set:{order}")
                accepted.append((sol.total_cost, order, sol))
    if not accepted:
        raise SolverError("no candidate active set passed KKT verification", best_res)
    best_cost = min(c for c, _, _ in accepted)
    # costs equal to rounding are ties; the earliest set in enumeration order wins
    for c, _, sol in sorted(accepted, key=lambda t: t[1]):
        if c <= best_cost * (1 + 1e-12):
            return sol
    raise AssertionError("unreachable")


def solve_fidelity_n(problem: OptimizationProblem, options: SolverOptions = SolverOptions()) -> KKTSolution:
    return _solve_n(_Kind(FIDELITY, problem), options)


def solve_probability_n(problem: OptimizationProblem, options: SolverOptions = SolverOptions()) -> KKTSolution:
    kind = _Kind(PROBABILITY, problem)
    sol = _solve_n(kind, options)
    if any(v < p.eta_bare for v, p in zip(sol.values, problem.profiles)):
        sol.status = "target-below-bare"
    return sol


def solve(problem: OptimizationProblem, kind: str, options: SolverOptions = SolverOptions()) -> KKTSolution:
    """Dispatch to the two-network solver when possible."""
    if kind == FIDELITY:
        return solve_fidelity_two(problem, options) if problem.n == 2 else solve_fidelity_n(problem, options)
    if kind == PROBABILITY:
        return solve_probability_two(problem, options) if problem.n == 2 else solve_probability_n(problem, options)
    raise ValueError(f"unknown problem kind {kind!r}")


# ---------------------------------------------------------------------------
# Grid oracle


@dataclass(frozen=True)
class GridResult:
    values: tuple
    cost: float
    resolution: float


def _grid_axis(lo, resolution):
    k = int(round((1.0 - lo) / resolution))
    return lo + resolution * np.arange(1, k)


def grid_oracle(problem: OptimizationProblem, resolution: float, kind: str = FIDELITY) -> Optional[GridResult]:
    """Cheapest feasible point of a regular grid over the open domain.

    Independent of the KKT machinery: it only evaluates the public cost and
    constraint functions. Returns ``None`` when no grid point is feasible.
    """
    n = problem.n
    if n > 3:
        raise ValueError("the grid oracle is limited to three sub-networks")
    th, bb = problem.thresholds, problem.backbone
    profs = problem.profiles
    lo = 0.25 if kind == FIDELITY else 0.0
    axis = _grid_axis(lo, resolution)
    if kind == FIDELITY:
        axis_cost = [costs.purification_cost(p.edge_count, axis) for p in profs]
    else:
        axis_cost = [costs.multiplexing_cost(p.edge_count, axis, p.eta_bare, strict=False) for p in profs]

    def pair_ok(i, j, vi, vj):
        li, lj = profs[i].l_max, profs[j].l_max
        if kind == FIDELITY:
            return costs.fidelity_constraint_g(vi, vj, li, lj, th.fidelity, bb.fidelity) <= 0
        return costs.probability_constraint_h(vi, vj, li, lj, th.probability, bb.probability) <= 0

    best = None
    if n == 2:
        ok = pair_ok(0, 1, axis[:, None], axis[None, :])
        total = np.where(ok, axis_cost[0][:, None] + axis_cost[1][None, :], np.inf)
        idx = np.unravel_index(np.argmin(total), total.shape)
        if np.isfinite(total[idx]):
            best = (float(total[idx]), (axis[idx[0]], axis[idx[1]]))
    else:
        ok12 = pair_ok(1, 2, axis[:, None], axis[None, :])
        base12 = np.where(ok12, axis_cost[1][:, None] + axis_cost[2][None, :], np.inf)
        for a, va in enumerate(axis):
            ok = pair_ok(0, 1, va, axis)[:, None] & pair_ok(0, 2, va, axis)[None, :]
            total = np.where(ok, base12, np.inf)
            idx = np.unravel_index(np.argmin(total), total.shape)
            c = total[idx] + axis_cost[0][a]
            if np.isfinite(c) and (best is None or c < best[0]):
                best = (float(c), (va, axis[idx[0]], axis[idx[1]]))
    if best is None:
        return None
    return GridResult(tuple(float(v) for v in best[1]), best[0], resolution)
