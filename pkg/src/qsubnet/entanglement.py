"""Closed-form entanglement calculus for swap-based distribution.

Isotropic two-qubit states are tracked through their Werner parameter
``x = (4F - 1) / 3``; a swap multiplies Werner parameters, and the fidelity
is recovered as ``1/4 + 3x/4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .netmodel import Backbone


@dataclass(frozen=True)
class PathParams:
    fidelity: float
    probability: float


@dataclass(frozen=True)
class KeyRateParams:
    rep_rate: float
    path_probability: float

    def __post_init__(self):
        if not self.rep_rate > 0:
            raise ValueError("rep_rate must be positive")
        if not 0.0 <= self.path_probability <= 1.0:
            raise ValueError("path_probability must lie in [0, 1]")


def _check_unit(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}={value} is outside [0, 1]")


def werner(fidelity: float) -> float:
    return (4.0 * fidelity - 1.0) / 3.0


def swap_pair(f1: float, f2: float) -> float:
    """Fidelity after swapping two isotropic pairs."""
    _check_unit("F1", f1)
    _check_unit("F2", f2)
    return 0.25 + 0.75 * (werner(f1) * werner(f2))


def chain_fidelity(fidelities: Sequence[float]) -> float:
    """Fidelity after swapping along a chain of (possibly distinct) edges.

    Werner parameters are multiplied left to right, matching the order used
    by the batch path kernels.
    """
    if len(fidelities) == 0:
        raise ValueError("chain needs at least one edge")
    prod = 1.0
    for f in fidelities:
        _check_unit("F", f)
        prod = prod * werner(f)
    return 0.25 + 0.75 * prod


def chain_probability(probabilities: Sequence[float]) -> float:
    if len(probabilities) == 0:
        raise ValueError("chain needs at least one edge")
    prod = 1.0
    for p in probabilities:
        _check_unit("eta", p)
        prod = prod * p
    return prod


def avg_path_fidelity(mean_fidelity: float, hops: int) -> float:
    _check_unit("F", mean_fidelity)
    if hops < 1:
        raise ValueError("path length must be >= 1")
    return 0.25 + 0.75 * werner(mean_fidelity) ** hops


def avg_path_probability(mean_probability: float, hops: int) -> float:
    _check_unit("eta", mean_probability)
    if hops < 1:
        raise ValueError("path length must be >= 1")
    return mean_probability ** hops


def multiplexed_probability(eta_bare: float, attempts: float) -> float:
    """Success probability of ``attempts`` independent tries (real-valued)."""
    if not 0.0 < eta_bare < 1.0:
        raise ValueError(f"degenerate single-attempt probability {eta_bare}")
    if attempts < 1:
        raise ValueError("attempts must be >= 1")
    return -math.expm1(attempts * math.log1p(-eta_bare))


def end_to_end_params(f_l1: float, f_l2: float, backbone: Backbone,
                      eta_l1: float, eta_l2: float) -> PathParams:
    """End-to-end parameters of two gateway legs joined by the backbone."""
    fs = backbone.fidelity
    for name, v in (("F_l1", f_l1), ("F_l2", f_l2), ("eta_l1", eta_l1), ("eta_l2", eta_l2)):
        _check_unit(name, v)
    fid = (16 * f_l1 * f_l2 * fs - 4 * f_l1 * f_l2 - 4 * fs * f_l1 - 4 * f_l2 * fs
           + f_l1 + f_l2 + fs + 2) / 9
    return PathParams(fid, eta_l1 * backbone.probability * eta_l2)


_PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0)
_PAULIS = (
    np.eye(2),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[0.0, -1j], [1j, 0.0]]),
    np.array([[1.0, 0.0], [0.0, -1.0]]),
)


def isotropic_state(fidelity: float) -> np.ndarray:
    bell = np.outer(_PHI_PLUS, _PHI_PLUS)
    return (4 * fidelity - 1) / 3 * bell + (1 - fidelity) / 3 * np.eye(4)


def swap_oracle_isotropic(f1: float, f2: float) -> float:
    """Swap two isotropic pairs by explicit Bell measurement on 4 qubits.

    Qubit order is (A, B1, B2, C). Every Bell outcome on (B1, B2) is
    corrected by the matching Pauli on C and the corrected states are
    averaged with their outcome probabilities. Kept independent of
    :func:`swap_pair` so it can check it.
    """
    rho = np.kron(isotropic_state(f1), isotropic_state(f2)).reshape([2] * 8)
    fid = 0.0
    total = 0.0
    for pauli in _PAULIS:
        bell_k = np.kron(np.eye(2), pauli) @ _PHI_PLUS
        b = bell_k.reshape(2, 2)
        # <bell_k|_{B1B2} rho |bell_k>_{B1B2}, leaving (A, C)
        rho_ac = np.einsum("ij,aijcekld,kl->aced", b.conj(), rho, b)
        rho_ac = rho_ac.reshape(4, 4)
        corr = np.kron(np.eye(2), pauli.conj().T)
        rho_ac = corr @ rho_ac @ corr.conj().T
        p = float(np.real(np.trace(rho_ac)))
        fid += float(np.real(_PHI_PLUS @ rho_ac @ _PHI_PLUS))
        total += p
    return fid / total


def binary_entropy(x):
    """Shannon entropy in bits; h(0) = h(1) = 0."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("binary entropy needs x in [0, 1]")
    inside = (arr > 0) & (arr < 1)
    safe = np.where(inside, arr, 0.5)
    h = -safe * np.log2(safe) - (1 - safe) * np.log2(1 - safe)
    h = np.where(inside, h, 0.0)
    return float(h) if h.ndim == 0 else h


def secure_key_fraction(fidelity):
    """Asymptotic key yield ``1 - 2 h(1 - F)``, clamped at zero."""
    f = np.asarray(fidelity, dtype=np.float64)
    raw = 1.0 - 2.0 * np.asarray(binary_entropy(1.0 - f))
    out = np.maximum(raw, 0.0)
    return float(out) if out.ndim == 0 else out


def secure_key_rate(params: KeyRateParams, fidelity) -> float:
    return params.rep_rate * params.path_probability * secure_key_fraction(fidelity)
