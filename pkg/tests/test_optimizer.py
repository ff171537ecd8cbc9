import itertools

import numpy as np
import pytest

from qsubnet import optimizer as opt
from qsubnet.costs import fidelity_constraint_g, multiplexing_cost, probability_constraint_h, purification_cost
from qsubnet.errors import InfeasibleError, SolverError
from qsubnet.optimizer import (FIDELITY, PROBABILITY, SolverOptions, feasibility_check, grid_oracle,
                               solve, solve_fidelity_n, solve_fidelity_two, solve_probability_n,
                               solve_probability_two)
from tests import frozen
from tests.problems import problem, random_problem

KINDS = (FIDELITY, PROBABILITY)


def _cost(prob, kind, i, v):
    p = prob.profiles[i]
    if kind == FIDELITY:
        return purification_cost(p.edge_count, v)
    return multiplexing_cost(p.edge_count, v, p.eta_bare, strict=False)


def _cons(prob, kind, i, j, vi, vj):
    li, lj = prob.profiles[i].l_max, prob.profiles[j].l_max
    th, bb = prob.thresholds, prob.backbone
    if kind == FIDELITY:
        return fidelity_constraint_g(vi, vj, li, lj, th.fidelity, bb.fidelity)
    return probability_constraint_h(vi, vj, li, lj, th.probability, bb.probability)


def fd_stationarity(prob, kind, sol, h=1e-7):
    """Lagrangian gradient by central differences of the public functions."""
    v = np.array(sol.values)
    grads = []
    for i in range(prob.n):
        def lag(t):
            w = v.copy()
            w[i] = t
            total = _cost(prob, kind, i, t)
            for (a, b), lam in sol.multipliers.items():
                total += lam * _cons(prob, kind, a, b, w[a], w[b])
            return total
        grads.append((lag(v[i] + h) - lag(v[i] - h)) / (2 * h))
    scale = max(abs((_cost(prob, kind, i, v[i] + h) - _cost(prob, kind, i, v[i] - h)) / (2 * h))
                for i in range(prob.n))
    return max(abs(g) for g in grads) / scale


def test_feasibility_check():
    assert feasibility_check(problem([10, 10], [2, 2])).feasible
    rep = feasibility_check(problem([10, 10], [2, 2], eta_th=0.5, eta_star=0.4))
    assert not rep.feasible and rep.status == "infeasible"
    rep = feasibility_check(problem([10, 10], [2, 2], f_th=1.0))
    assert rep.status == "infeasible-in-open-domain" and rep.f_eff == pytest.approx(2.0)


def test_symmetric_closed_forms():
    sol = solve_fidelity_two(problem([500, 500], [2, 2]))
    assert sol.values == pytest.approx((frozen.SYM_FIDELITY_L2,) * 2, abs=1e-9)
    sol = solve_fidelity_two(problem([500, 500], [1, 1]))
    assert sol.values == pytest.approx((frozen.SYM_FIDELITY_L1,) * 2, abs=1e-9)
    sol = solve_probability_two(problem([500, 500], [2, 2]))
    assert sol.values == pytest.approx((frozen.SYM_PROBABILITY_L2,) * 2, abs=1e-9)


@pytest.mark.parametrize("kind,kw", [(FIDELITY, dict(f_star=0.98)),
                                     (PROBABILITY, dict(eta_th=0.01, eta_star=0.9))])
def test_asymmetric_matches_grid(kind, kw):
    prob = problem([1000, 200], [3, 2], **kw)
    sol = solve(prob, kind)
    grid = grid_oracle(prob, 1e-3, kind)
    # the grid minimiser must itself be feasible, so it can sit one step off on each axis
    assert max(abs(a - b) for a, b in zip(sol.values, grid.values)) <= 2e-3
    assert sol.total_cost <= grid.cost


def test_infeasible_probability():
    with pytest.raises(InfeasibleError, match="infeasible: backbone probability below threshold") as exc:
        solve_probability_two(problem([10, 10], [1, 1], eta_th=0.5, eta_star=0.4))
    assert exc.value.status == "infeasible"
    with pytest.raises(InfeasibleError) as exc:
        solve_probability_two(problem([10, 10], [1, 1], eta_th=0.4, eta_star=0.4))
    assert exc.value.status == "infeasible-in-open-domain"


def test_infeasible_fidelity():
    with pytest.raises(InfeasibleError) as exc:
        solve_fidelity_two(problem([10, 10], [1, 1], f_th=1.0))
    assert exc.value.status == "infeasible-in-open-domain"
    with pytest.raises(InfeasibleError):
        solve_fidelity_n(problem([10, 10, 10], [1, 1, 1], f_th=0.99, f_star=0.9))


def test_target_below_bare_and_clamp():
    # loose probability target: optimum sits below a high eta_bare
    prob = problem([100, 100], [1, 1], eta_th=0.001, eta_bare=[0.5, 0.01])
    sol = solve_probability_two(prob)
    assert sol.status == "target-below-bare"
    clamped = solve_probability_two(prob, clamp=True)
    assert clamped.status == "clamped-to-bare"
    assert clamped.values[0] == 0.5
    assert all(v >= b for v, b in zip(clamped.values, (0.5, 0.01)))
    assert probability_constraint_h(*clamped.values, 1, 1, 0.001, 1.0) <= 1e-12


@pytest.mark.parametrize("kind", KINDS)
def test_n2_reduces_to_two_network_solver(kind):
    prob = problem([800, 150], [3, 1], f_star=0.97, eta_star=0.8)
    a = solve(prob, kind)
    b = opt._solve_n(opt._Kind(kind, prob), SolverOptions())
    assert max(abs(x - y) for x, y in zip(a.values, b.values)) <= 1e-8


@pytest.mark.parametrize("kind", KINDS)
def test_n3_symmetric(kind):
    prob = problem([300] * 3, [2] * 3)
    sol = solve(prob, kind)
    target = frozen.SYM_FIDELITY_L2 if kind == FIDELITY else frozen.SYM_PROBABILITY_L2
    assert sol.values == pytest.approx((target,) * 3, abs=1e-9)


@pytest.mark.parametrize("kind,kw", [(FIDELITY, {}), (PROBABILITY, dict(eta_th=0.01, eta_star=0.9))])
def test_n3_asymmetric_matches_grid(kind, kw):
    prob = problem([1000, 500, 200], [3, 2, 2], **kw)
    sol = solve(prob, kind)
    grid = grid_oracle(prob, 2e-3, kind)
    assert max(abs(a - b) for a, b in zip(sol.values, grid.values)) <= 4e-3
    assert sol.total_cost <= grid.cost


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("kind", KINDS)
def test_finite_difference_stationarity(seed, kind):
    rng = np.random.default_rng(seed)
    prob = random_problem(rng, 2 + seed % 3)
    sol = solve(prob, kind)
    assert fd_stationarity(prob, kind, sol) < 1e-6
    assert sol.residuals["min_abs_constraint"] <= 1e-8
    assert all(lam >= 0 for lam in sol.multipliers.values())


@pytest.mark.parametrize("kind", KINDS)
def test_cost_scaling_invariance(kind):
    base = problem([700, 300, 90], [3, 1, 2], f_star=0.97, eta_star=0.8)
    scaled = problem([7000, 3000, 900], [3, 1, 2], f_star=0.97, eta_star=0.8)
    a, b = solve(base, kind), solve(scaled, kind)
    assert a.values == pytest.approx(b.values, abs=1e-9)
    assert b.total_cost == pytest.approx(10 * a.total_cost, rel=1e-9)


@pytest.mark.parametrize("kind", KINDS)
def test_permutation_invariance(kind):
    edges, l = [700, 300, 90, 1500], [3, 1, 2, 2]
    base = solve(problem(edges, l, f_star=0.97, eta_star=0.8), kind)
    for perm in [(3, 1, 0, 2), (2, 3, 1, 0)]:
        sol = solve(problem([edges[i] for i in perm], [l[i] for i in perm], f_star=0.97, eta_star=0.8), kind)
        assert [sol.values[perm.index(i)] for i in range(4)] == pytest.approx(list(base.values), abs=1e-9)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("kind", KINDS)
def test_structured_candidates_match_full_enumeration(monkeypatch, seed, kind):
    prob = random_problem(np.random.default_rng(100 + seed), 4)
    full = solve(prob, kind)
    monkeypatch.setattr(opt, "FULL_ENUMERATION_LIMIT", 3)
    structured = solve(prob, kind)
    assert structured.values == pytest.approx(full.values, abs=1e-9)
    assert structured.total_cost == pytest.approx(full.total_cost, rel=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_five_networks(kind):
    prob = random_problem(np.random.default_rng(7), 5)
    sol = solve(prob, kind)
    assert sol.residuals["feasibility"] <= 1e-8
    assert fd_stationarity(prob, kind, sol) < 1e-6
    # no feasible random perturbation is cheaper
    rng = np.random.default_rng(0)
    v = np.array(sol.values)
    for _ in range(2000):
        w = np.clip(v + rng.normal(0, 1e-3, v.size), 0.2501 if kind == FIDELITY else 1e-6, 1 - 1e-9)
        if all(_cons(prob, kind, i, j, w[i], w[j]) <= 0 for i, j in prob.pairs):
            assert sum(_cost(prob, kind, i, w[i]) for i in range(5)) >= sol.total_cost - 1e-9


def test_all_equal_candidate_wins_for_identical_networks():
    prob = problem([100] * 5, [2] * 5)
    sol = solve_fidelity_n(prob)
    assert sol.values == pytest.approx((frozen.SYM_FIDELITY_L2,) * 5, abs=1e-9)


def test_too_many_networks():
    with pytest.raises(ValueError):
        solve_fidelity_n(problem([10] * 9, [1] * 9))


def test_solver_error_reports_best_residual():
    prob = problem([1000, 500, 200], [3, 2, 2])
    with pytest.raises(SolverError) as exc:
        solve_fidelity_n(prob, SolverOptions(max_iterations=0))
    assert exc.value.best_residual > 0


def test_grid_oracle_infeasible_and_limits():
    prob = problem([10, 10], [4, 4], f_th=0.999, f_star=0.999)
    assert grid_oracle(prob, 1e-2) is None
    with pytest.raises(ValueError):
        grid_oracle(problem([10] * 4, [1] * 4), 1e-2)


def test_grid_oracle_symmetric():
    res = grid_oracle(problem([100, 100], [2, 2]), 1e-3)
    assert all(abs(v - frozen.SYM_FIDELITY_L2) <= 1e-3 for v in res.values)


def test_solution_json():
    sol = solve_fidelity_two(problem([500, 500], [2, 2]))
    d = sol.to_json_dict()
    assert d["active_set"] == [[0, 1]] and set(d["multipliers"]) == {"0,1"}
