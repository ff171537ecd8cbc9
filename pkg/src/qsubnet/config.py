"""Run configuration: a single JSON document with a fixed, strictly checked schema.

Top-level keys::

    networks     list of inline graphs ({id, node_count, edges, gateway, coords?})
                 or generators ({id, generate: {nodes, edges, seed}});
                 either form may carry "eta_bare"
    profiles     optional explicit [{edge_count, l_max, eta_bare}] for `optimize`
    backbone     {fidelity, probability}
    thresholds   {fidelity?, probability?, key_rate?, rep_rate?}
    optimizer    {root_tol, kkt_tol, max_iterations, grid_resolution, clamp}
    simulation   {mode, demand_count, r, fidelity: dist, probability: dist}
    sweep        {fidelity_grid: [..] | {start, stop, step}, r_list, config_samples}
    master_seed  integer
    output       optional path

A ``dist`` is ``{kind, mean, std, support}``. Unknown keys anywhere are errors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Any, Optional

import numpy as np

from .costs import TaskThresholds
from .errors import ConfigError
from .netmodel import Backbone, ParameterDistribution, SubNetworkProfile

_NETWORK_KEYS = {"id", "node_count", "edges", "gateway", "coords", "generate", "eta_bare"}


def _check_keys(section: str, data: Any, allowed: set, required: set = frozenset()):
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected an object")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
    missing = set(required) - set(data)
    if missing:
        raise ConfigError(f"{section}: missing keys {sorted(missing)}")


def _wrap(section, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from None


@dataclass(frozen=True)
class OptimizerSettings:
    root_tol: float = 1e-10
    kkt_tol: float = 1e-8
    max_iterations: int = 100
    grid_resolution: float = 1e-3
    clamp: bool = False


@dataclass(frozen=True)
class SimulationSettings:
    mode: str = "threshold"
    demand_count: int = 200
    r: float = 0.5
    fidelity: ParameterDistribution = ParameterDistribution.homogeneous(0.95)
    probability: ParameterDistribution = ParameterDistribution.homogeneous(0.5)


@dataclass(frozen=True)
class SweepSettings:
    fidelity_grid: tuple = ()
    r_list: tuple = (0.1, 0.5, 0.9)
    config_samples: int = 20
    grid_spec: Optional[dict] = None

    def grid(self) -> list[float]:
        if self.grid_spec is not None:
            start, stop, step = (self.grid_spec[k] for k in ("start", "stop", "step"))
            k = int(round((stop - start) / step))
            # rounded so 0.9 + 0.002 * k lands on the decimal it names
            return [float(v) for v in np.round(start + step * np.arange(k + 1), 12)]
        return [float(v) for v in self.fidelity_grid]


@dataclass(frozen=True)
class RunConfig:
    networks: tuple = ()
    profiles: tuple = ()
    backbone: Optional[Backbone] = None
    thresholds: Optional[TaskThresholds] = None
    optimizer: OptimizerSettings = OptimizerSettings()
    simulation: SimulationSettings = SimulationSettings()
    sweep: SweepSettings = SweepSettings()
    master_seed: int = 0
    output: Optional[str] = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        if self.networks:
            out["networks"] = [dict(n) for n in self.networks]
        if self.profiles:
            out["profiles"] = [{"edge_count": p.edge_count, "l_max": p.l_max, "eta_bare": p.eta_bare}
                               for p in self.profiles]
        if self.backbone is not None:
            out["backbone"] = {"fidelity": self.backbone.fidelity, "probability": self.backbone.probability}
        if self.thresholds is not None:
            out["thresholds"] = {k: getattr(self.thresholds, k)
                                 for k in ("fidelity", "probability", "key_rate", "rep_rate")
                                 if getattr(self.thresholds, k) is not None}
        o = self.optimizer
        out["optimizer"] = {"root_tol": o.root_tol, "kkt_tol": o.kkt_tol,
                            "max_iterations": o.max_iterations,
                            "grid_resolution": o.grid_resolution, "clamp": o.clamp}
        s = self.simulation
        out["simulation"] = {"mode": s.mode, "demand_count": s.demand_count, "r": s.r,
                             "fidelity": _dist_to_dict(s.fidelity),
                             "probability": _dist_to_dict(s.probability)}
        w = self.sweep
        out["sweep"] = {
            "fidelity_grid": dict(w.grid_spec) if w.grid_spec is not None else list(w.fidelity_grid),
            "r_list": list(w.r_list),
            "config_samples": w.config_samples,
        }
        out["master_seed"] = self.master_seed
        if self.output is not None:
            out["output"] = self.output
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        return self if seed is None else replace(self, master_seed=int(seed))


def _dist_to_dict(d: ParameterDistribution) -> dict:
    return {"kind": d.kind, "mean": d.mean, "std": d.std, "support": list(d.support)}


def _parse_dist(section, data) -> ParameterDistribution:
    _check_keys(section, data, {"kind", "mean", "std", "support"}, {"kind", "mean"})
    support = tuple(data.get("support", (0.0, 1.0)))
    if len(support) != 2:
        raise ConfigError(f"{section}: support must have two bounds")
    return _wrap(section, ParameterDistribution, data["kind"], float(data["mean"]),
                 float(data.get("std", 0.0)), (float(support[0]), float(support[1])))


def _parse_network(i, data) -> dict:
    section = f"networks[{i}]"
    _check_keys(section, data, _NETWORK_KEYS)
    if "generate" in data:
        _check_keys(f"{section}.generate", data["generate"], {"nodes", "edges", "seed"},
                    {"nodes", "edges", "seed"})
        if set(data) & {"node_count", "edges", "gateway", "coords"}:
            raise ConfigError(f"{section}: 'generate' excludes inline graph keys")
    elif not {"node_count", "edges"} <= set(data):
        raise ConfigError(f"{section}: needs 'generate' or inline node_count/edges")
    if "eta_bare" in data and not 0.0 < float(data["eta_bare"]) < 1.0:
        raise ConfigError(f"{section}: eta_bare must lie in (0, 1)")
    return json.loads(json.dumps(data))


def parse_config(data: dict) -> RunConfig:
    top = {"networks", "profiles", "backbone", "thresholds", "optimizer", "simulation", "sweep",
           "master_seed", "output"}
    _check_keys("config", data, top)
    kw: dict[str, Any] = {}
    if "networks" in data:
        if not isinstance(data["networks"], list):
            raise ConfigError("networks: expected a list")
        kw["networks"] = tuple(_parse_network(i, n) for i, n in enumerate(data["networks"]))
    if "profiles" in data:
        profs = []
        for i, p in enumerate(data["profiles"]):
            _check_keys(f"profiles[{i}]", p, {"edge_count", "l_max", "eta_bare"},
                        {"edge_count", "l_max", "eta_bare"})
            profs.append(_wrap(f"profiles[{i}]", SubNetworkProfile, int(p["edge_count"]),
                               int(p["l_max"]), float(p["eta_bare"])))
        kw["profiles"] = tuple(profs)
    if "backbone" in data:
        b = data["backbone"]
        _check_keys("backbone", b, {"fidelity", "probability"}, {"fidelity", "probability"})
        kw["backbone"] = _wrap("backbone", Backbone, float(b["fidelity"]), float(b["probability"]))
    if "thresholds" in data:
        t = data["thresholds"]
        _check_keys("thresholds", t, {"fidelity", "probability", "key_rate", "rep_rate"})
        kw["thresholds"] = _wrap("thresholds", TaskThresholds,
                                 **{k: float(v) for k, v in t.items() if v is not None})
    if "optimizer" in data:
        o = data["optimizer"]
        _check_keys("optimizer", o, set(OptimizerSettings.__dataclass_fields__))
        kw["optimizer"] = OptimizerSettings(**o)
    if "simulation" in data:
        s = data["simulation"]
        _check_keys("simulation", s, {"mode", "demand_count", "r", "fidelity", "probability"})
        sim = {k: s[k] for k in ("mode", "demand_count", "r") if k in s}
        for k in ("fidelity", "probability"):
            if k in s:
                sim[k] = _parse_dist(f"simulation.{k}", s[k])
        kw["simulation"] = SimulationSettings(**sim)
    if "sweep" in data:
        w = data["sweep"]
        _check_keys("sweep", w, {"fidelity_grid", "r_list", "config_samples"})
        sw: dict[str, Any] = {}
        grid = w.get("fidelity_grid", [])
        if isinstance(grid, dict):
            _check_keys("sweep.fidelity_grid", grid, {"start", "stop", "step"}, {"start", "stop", "step"})
            if not grid["step"] > 0:
                raise ConfigError("sweep.fidelity_grid: step must be positive")
            sw["grid_spec"] = {k: float(v) for k, v in grid.items()}
        else:
            sw["fidelity_grid"] = tuple(float(v) for v in grid)
        if "r_list" in w:
            sw["r_list"] = tuple(float(v) for v in w["r_list"])
            if any(not 0 <= r <= 1 for r in sw["r_list"]):
                raise ConfigError("sweep.r_list: ratios must lie in [0, 1]")
        if "config_samples" in w:
            sw["config_samples"] = int(w["config_samples"])
        kw["sweep"] = SweepSettings(**sw)
    if "master_seed" in data:
        kw["master_seed"] = int(data["master_seed"])
    if "output" in data:
        kw["output"] = data["output"]
    return RunConfig(**kw)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data)
