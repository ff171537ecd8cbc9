"""Command-line entry point.

Exit codes: 0 success, 2 bad flags or config, 3 graph generation failure,
4 infeasible problem, 5 solver residual failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional

from . import __version__
from .config import RunConfig, load_config
from .costs import attempts_per_edge, multiplexing_cost, purification_cost
from .errors import (ConfigError, InfeasibleEdgeCountError, InfeasibleError, InvalidGraphError,
                     QSubnetError, ResampleLimitError, SolverError)
from .netmodel import (SubNetworkGraph, generate_random_subnetwork, profile_of,
                       validate_separation)
from .optimizer import (FIDELITY, PROBABILITY, OptimizationProblem, SolverOptions, grid_oracle,
                        solve, solve_probability_two)
from .satsim import SatisfiabilityConfig, simulate, sweep_transition

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_INFEASIBLE = 4
EXIT_RESIDUAL = 5

CSV_HEADER = ("mean_fidelity", "r", "mean_psat", "std_psat", "samples")


class _Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _fmt(v):
    return "%.12g" % v


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _meta(cfg: RunConfig, command: str) -> dict:
    return {"version": __version__, "config_hash": cfg.digest(), "master_seed": cfg.master_seed,
            "command": command}


def _load(args) -> RunConfig:
    return load_config(args.config).with_seed(args.seed)


def build_networks(cfg: RunConfig) -> list[SubNetworkGraph]:
    nets = []
    for i, entry in enumerate(cfg.networks):
        net_id = entry.get("id", f"G{i}")
        if "generate" in entry:
            gen = entry["generate"]
            try:
                nets.append(generate_random_subnetwork(int(gen["nodes"]), int(gen["edges"]),
                                                       int(gen["seed"]), id=net_id))
            except InfeasibleEdgeCountError as exc:
                raise ConfigError(f"networks[{i}]: {exc}") from None
        else:
            graph = {k: entry[k] for k in ("node_count", "edges", "gateway", "coords") if k in entry}
            graph["id"] = net_id
            try:
                nets.append(SubNetworkGraph.from_json_dict(graph))
            except (InvalidGraphError, TypeError, ValueError) as exc:
                raise ConfigError(f"networks[{i}]: {exc}") from None
    return nets


# ---------------------------------------------------------------------------
# Subcommands


def cmd_gen_network(args) -> int:
    try:
        graph = generate_random_subnetwork(args.nodes, args.edges, args.seed, id=args.id)
    except InfeasibleEdgeCountError as exc:
        raise _Exit(EXIT_CONFIG, str(exc)) from None
    except ResampleLimitError as exc:
        raise _Exit(EXIT_GENERATION, str(exc)) from None
    _emit(json.dumps(graph.to_json_dict(), sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _problem(cfg: RunConfig) -> OptimizationProblem:
    if cfg.backbone is None or cfg.thresholds is None:
        raise ConfigError("optimize needs backbone and thresholds")
    if not cfg.thresholds.has_pair:
        raise ConfigError("optimize needs fidelity and probability thresholds")
    if cfg.profiles:
        profiles = list(cfg.profiles)
    else:
        nets = build_networks(cfg)
        missing = [i for i, s in enumerate(cfg.networks) if "eta_bare" not in s]
        if missing:
            raise ConfigError(f"networks {missing} need eta_bare to derive profiles")
        profiles = [profile_of(g, float(s["eta_bare"])) for g, s in zip(nets, cfg.networks)]
    try:
        return OptimizationProblem(tuple(profiles), cfg.backbone, cfg.thresholds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _verification(problem, sol, kind, resolution) -> dict:
    if problem.n > 3:
        return {"skipped": "grid oracle limited to three sub-networks"}
    grid = grid_oracle(problem, resolution, kind)
    if grid is None:
        return {"resolution": resolution, "oracle": None, "agreement": False}
    gap = max(abs(a - b) for a, b in zip(sol.values, grid.values))
    return {
        "resolution": resolution,
        "oracle_values": list(grid.values),
        "oracle_cost": grid.cost,
        "kkt_cost": sol.total_cost,
        "parameter_gap": gap,
        "agreement": bool(gap <= 2 * resolution and sol.total_cost <= grid.cost * (1 + 1e-12)),
    }


def cmd_optimize(args) -> int:
    cfg = _load(args)
    problem = _problem(cfg)
    o = cfg.optimizer
    options = SolverOptions(root_tol=o.root_tol, kkt_tol=o.kkt_tol, max_iterations=o.max_iterations)
    try:
        fsol = solve(problem, FIDELITY, options)
        if problem.n == 2:
            psol = solve_probability_two(problem, options, clamp=o.clamp)
        else:
            psol = solve(problem, PROBABILITY, options)
    except InfeasibleError as exc:
        raise _Exit(EXIT_INFEASIBLE, str(exc)) from None
    except SolverError as exc:
        raise _Exit(EXIT_RESIDUAL, str(exc)) from None
    per = []
    for p, f, eta in zip(problem.profiles, fsol.values, psol.values):
        per.append({"F_cost": purification_cost(p.edge_count, f),
                    "eta_cost": multiplexing_cost(p.edge_count, eta, p.eta_bare, strict=False)})
    out = {
        "fidelity_solution": fsol.to_json_dict(),
        "probability_solution": psol.to_json_dict(),
        "costs": {"total_F_cost": sum(r["F_cost"] for r in per),
                  "total_eta_cost": sum(r["eta_cost"] for r in per),
                  "per_network": per},
        "residuals": {FIDELITY: fsol.residuals, PROBABILITY: psol.residuals},
        "active_set": {FIDELITY: [list(a) for a in fsol.active_set],
                       PROBABILITY: [list(a) for a in psol.active_set]},
        "ceil_attempts_per_edge": [math.ceil(attempts_per_edge(eta, p.eta_bare) - 1e-12)
                                   for p, eta in zip(problem.profiles, psol.values)],
        "meta": _meta(cfg, "optimize"),
    }
    if args.verify:
        out["verification"] = {
            FIDELITY: _verification(problem, fsol, FIDELITY, o.grid_resolution),
            PROBABILITY: _verification(problem, psol, PROBABILITY, o.grid_resolution),
        }
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out or cfg.output)
    return EXIT_OK


def _sat_config(cfg: RunConfig) -> SatisfiabilityConfig:
    if cfg.backbone is None or cfg.thresholds is None:
        raise ConfigError("simulation needs backbone and thresholds")
    nets = build_networks(cfg)
    if not nets:
        raise ConfigError("simulation needs at least one network")
    s = cfg.simulation
    try:
        return SatisfiabilityConfig(tuple(nets), cfg.backbone, cfg.thresholds, mode=s.mode,
                                    demand_count=s.demand_count, r=s.r,
                                    config_samples=cfg.sweep.config_samples,
                                    master_seed=cfg.master_seed, fidelity_dist=s.fidelity,
                                    probability_dist=s.probability)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def sweep_csv(result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for row in result.rows:
        writer.writerow([_fmt(row.mean_fidelity), _fmt(row.r), _fmt(row.mean_psat),
                         _fmt(row.std_psat), row.samples])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cfg = _load(args)
    sat = _sat_config(cfg)
    grid = cfg.sweep.grid()
    if not grid:
        raise ConfigError("sweep.fidelity_grid is empty")
    result = sweep_transition(sat, grid, cfg.sweep.r_list, threads=args.threads)
    path = args.out or cfg.output
    _emit(sweep_csv(result), path)
    if path:
        with open(path + ".meta.json", "w") as fh:
            json.dump(_meta(cfg, "sweep"), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    sat = _sat_config(cfg)
    res = simulate(sat)
    warnings = []
    fd = sat.fidelity_dist
    if fd.mean < 0.25 or (fd.std > 0 and fd.support[0] < 0.25):
        warnings.append("edge fidelities below 1/4 are possible; such states carry no entanglement")
    if any(d["fidelity"] < 0.25 for d in res["demands"]):
        warnings.append("some end-to-end fidelities fall below 1/4")
    if len(sat.networks) > 1 and all(g.node_coords is not None for g in sat.networks):
        sep = validate_separation(sat.networks)
        if not sep.ok:
            warnings.append(f"sub-networks are weakly separated (ratio {sep.ratio:.3g})")
    out = {"psat": res["psat"], "demands": res["demands"], "warnings": warnings,
           "meta": _meta(cfg, "simulate")}
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out or cfg.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsubnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-network", help="generate a connected random sub-network")
    gen.add_argument("--nodes", type=int, required=True)
    gen.add_argument("--edges", type=int, required=True)
    gen.add_argument("--seed", type=_u64, default=0)
    gen.add_argument("--id", default="G")
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_gen_network)

    for name, func, helptext in (
        ("optimize", cmd_optimize, "solve the edge fidelity and probability allocation"),
        ("sweep", cmd_sweep, "sweep mean edge fidelity and write a P_SAT table"),
        ("simulate", cmd_simulate, "evaluate one sampled configuration"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=_u64, default=None, help="overrides master_seed")
        p.add_argument("--threads", type=_positive, default=1)
        p.add_argument("--out")
        if name == "optimize":
            p.add_argument("--verify", action="store_true", help="cross-check with the grid oracle")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Exit as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResampleLimitError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_GENERATION
    except InfeasibleError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    except QSubnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
