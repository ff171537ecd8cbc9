"""Threshold constraints and resource cost functions.

Every function accepts numpy arrays as well as scalars so the grid oracle
can evaluate whole meshes at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BackboneTooWeakError, SaturationError, TargetBelowBareError
from .netmodel import SubNetworkProfile

MULTIPLEXING_UNIT_COST = 1.0


@dataclass(frozen=True)
class TaskThresholds:
    """Requirements of a task: fidelity/probability thresholds and/or a key rate.

    ``key_rate`` is the secure key rate threshold in Hz and ``rep_rate`` the
    entangled pair repetition rate it is measured against.
    """

    fidelity: Optional[float] = None
    probability: Optional[float] = None
    key_rate: Optional[float] = None
    rep_rate: Optional[float] = None

    def __post_init__(self):
        has_pair = self.fidelity is not None and self.probability is not None
        has_rate = self.key_rate is not None and self.rep_rate is not None
        if not (has_pair or has_rate):
            raise ValueError("thresholds need (fidelity, probability) or (key_rate, rep_rate)")
        if self.fidelity is not None and not 0.25 < self.fidelity <= 1.0:
            raise ValueError("fidelity threshold must lie in (1/4, 1]")
        if self.probability is not None and not 0.0 < self.probability <= 1.0:
            raise ValueError("probability threshold must lie in (0, 1]")
        for name in ("key_rate", "rep_rate"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def has_pair(self) -> bool:
        return self.fidelity is not None and self.probability is not None

    @property
    def has_rate(self) -> bool:
        return self.key_rate is not None and self.rep_rate is not None


def _path_fidelity(mean_fidelity, hops):
    return 0.25 + 0.75 * ((4.0 * mean_fidelity - 1.0) / 3.0) ** hops


def effective_fidelity_target(f_th: float, f_star: float) -> float:
    """Fidelity threshold with the backbone folded in: (9F_Th - F* - 2)/(4F* - 1)."""
    if f_star <= 0.25:
        raise BackboneTooWeakError(f"backbone fidelity {f_star} must exceed 1/4")
    return (9.0 * f_th - f_star - 2.0) / (4.0 * f_star - 1.0)


def fidelity_constraint_g(f1, f2, l1: int, l2: int, f_th: float, f_star: float):
    """Worst-case fidelity constraint; non-positive when the threshold is met."""
    f_eff = effective_fidelity_target(f_th, f_star)
    fl1 = _path_fidelity(np.asarray(f1, dtype=np.float64), l1)
    fl2 = _path_fidelity(np.asarray(f2, dtype=np.float64), l2)
    g = f_eff - (4.0 * fl1 * fl2 - fl1 - fl2)
    return float(g) if np.ndim(g) == 0 else g


def probability_constraint_h(eta1, eta2, l1: int, l2: int, eta_th: float, eta_star: float):
    """Worst-case probability constraint; non-positive when the threshold is met."""
    eta1 = np.asarray(eta1, dtype=np.float64)
    eta2 = np.asarray(eta2, dtype=np.float64)
    h = eta_th - eta1 ** l1 * eta_star * eta2 ** l2
    return float(h) if np.ndim(h) == 0 else h


def purification_cost(edge_count, mean_fidelity):
    """|E| / sqrt(1 - F)."""
    f = np.asarray(mean_fidelity, dtype=np.float64)
    if np.any((f < 0) | (f > 1)):
        raise ValueError("mean fidelity must lie in [0, 1)")
    if np.any(f == 1.0):
        raise SaturationError("purification cost diverges at mean fidelity 1")
    c = edge_count / np.sqrt(1.0 - f)
    return float(c) if c.ndim == 0 else c


def multiplexing_cost(edge_count, mean_probability, eta_bare, unit_cost=MULTIPLEXING_UNIT_COST,
                      strict=True):
    """C |E| n with n attempts per block, n = ln(1 - eta) / ln(1 - eta_bare).

    ``strict=False`` lets targets below ``eta_bare`` through (n < 1), which
    the optimiser's relaxed domain needs.
    """
    eta = np.asarray(mean_probability, dtype=np.float64)
    if not 0.0 < eta_bare < 1.0:
        raise ValueError("eta_bare must lie in (0, 1)")
    if np.any((eta < 0) | (eta > 1)):
        raise ValueError("mean probability must lie in [0, 1)")
    if np.any(eta == 1.0):
        raise SaturationError("multiplexing cost diverges at mean probability 1")
    if strict and np.any(eta < eta_bare):
        raise TargetBelowBareError("target probability below the single-attempt probability")
    c = unit_cost * edge_count * np.log1p(-eta) / np.log1p(-eta_bare)
    return float(c) if c.ndim == 0 else c


def attempts_per_edge(mean_probability: float, eta_bare: float) -> float:
    return float(np.log1p(-mean_probability) / np.log1p(-eta_bare))


@dataclass(frozen=True)
class GlobalCost:
    total_F_cost: float
    total_eta_cost: float
    per_network: list = field(default_factory=list)


def global_cost(profiles: Sequence[SubNetworkProfile], mean_fidelities: Sequence[float],
                mean_probabilities: Sequence[float]) -> GlobalCost:
    if not (len(profiles) == len(mean_fidelities) == len(mean_probabilities)):
        raise ValueError("profiles and parameter lists must align")
    rows = []
    for p, f, eta in zip(profiles, mean_fidelities, mean_probabilities):
        rows.append({
            "F_cost": purification_cost(p.edge_count, f),
            "eta_cost": multiplexing_cost(p.edge_count, eta, p.eta_bare),
        })
    return GlobalCost(sum(r["F_cost"] for r in rows), sum(r["eta_cost"] for r in rows), rows)
