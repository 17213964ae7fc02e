"""Communication SINR, sensing SCNR, and the scalarized design objectives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import EmChannelSet, apply_pattern_matrix

__all__ = [
    "TriHybridBeamformer",
    "Objectives",
    "effective_channels",
    "comm_sinr",
    "sensing_scnr",
    "sum_rate",
    "objective_sust",
    "objective_mumt",
    "evaluate",
]


@dataclass
class TriHybridBeamformer:
    """Pattern coefficients plus analog/digital factors and the FD surrogate.

    ``coeffs`` is (N_T, D): unit-norm rows for synthesized patterns, one-hot
    rows for selected patterns, all-ones scalar for fixed antennas.
    """

    coeffs: np.ndarray
    f_rf: np.ndarray  # (N_T, N_RF), unit-modulus entries
    f_bb: np.ndarray  # (N_RF, K)
    f_fd: np.ndarray  # (N_T, K) fully digital surrogate

    @property
    def hybrid_product(self) -> np.ndarray:
        return self.f_rf @ self.f_bb


@dataclass
class Objectives:
    """Evaluated metrics for one beamformer on one channel set."""

    sinr: np.ndarray  # (K,)
    scnr: np.ndarray  # (N_Tar,)
    sum_rate: float  # bits/s/Hz
    objective: float  # scalarized trade-off value

    @property
    def scnr_total(self) -> float:
        return float(np.sum(self.scnr))


def effective_channels(chset: EmChannelSet, coeffs: np.ndarray):
    """Per-antenna channels after the pattern stage: (h_comm, h_entities)."""
    h_c = apply_pattern_matrix(chset.h_comm, coeffs)
    h_e = apply_pattern_matrix(chset.h_entities, coeffs)
    return h_c, h_e


def comm_sinr(chset: EmChannelSet, coeffs: np.ndarray, product: np.ndarray, k: int):
    """SINR of user k under the transmit matrix ``product`` (N_T x K).

    Returns (sinr, signal_power, interference_plus_noise) so fractional
    updates can reuse the numerator/denominator.
    """
    if chset.scenario.noise_power <= 0:
        raise ValueError("noise power must be positive")
    h_c, _ = effective_channels(chset, coeffs)
    received = np.conj(h_c[k]) @ product  # (K,)
    powers = np.abs(received) ** 2
    signal = float(powers[k])
    interference = float(powers.sum() - powers[k]) + chset.scenario.noise_power
    return signal / interference, signal, interference


def sensing_scnr(chset: EmChannelSet, coeffs: np.ndarray, product: np.ndarray, i: int):
    """SCNR of target i: weighted echo power over clutter echoes plus noise.

    Returns (scnr, echo_power, clutter_plus_noise), where the denominator is
    expressed in units of the effective noise power (the ratio is unchanged).
    """
    if product.size == 0:
        raise ValueError("beamformer is empty")
    _, h_e = effective_channels(chset, coeffs)
    received = np.conj(h_e) @ product  # (N_E, K)
    powers = np.abs(received) ** 2
    row_power = powers.sum(axis=1)  # ||h_e^H F||^2 per entity
    omega_self, omega_all = chset.normalized_weights(i)
    interferers = chset.interference_indices(i)
    echo = omega_self * float(row_power[i])
    clutter = float(omega_all[interferers] @ row_power[interferers]) + 1.0
    return echo / clutter, echo, clutter


def sum_rate(sinrs) -> float:
    """Shannon sum rate in bits/s/Hz."""
    return float(np.sum(np.log2(1.0 + np.asarray(sinrs))))


def objective_sust(gamma: float, eta: float, beta_tilde: float, beta: float) -> float:
    """Single-user/single-target trade-off: weighted SNR plus SCNR."""
    return beta_tilde * gamma + beta * eta


def objective_mumt(rate: float, etas, beta_tilde: float, beta: float) -> float:
    """Multi-user/multi-target trade-off: weighted sum rate plus total SCNR."""
    return beta_tilde * rate + beta * float(np.sum(etas))


def evaluate(chset: EmChannelSet, coeffs: np.ndarray, product: np.ndarray) -> Objectives:
    """All metrics for one transmit matrix; picks the scalarization by shape.

    For a single user and target the objective is the SNR form; otherwise
    the sum-rate form.
    """
    scenario = chset.scenario
    sinrs = np.asarray(
        [comm_sinr(chset, coeffs, product, k)[0] for k in range(chset.n_users)]
    )
    scnrs = np.asarray(
        [sensing_scnr(chset, coeffs, product, i)[0] for i in range(chset.n_targets)]
    )
    rate = sum_rate(sinrs) if sinrs.size else 0.0
    if chset.n_users == 1 and chset.n_targets == 1:
        value = objective_sust(float(sinrs[0]), float(scnrs[0]), scenario.beta_tilde, scenario.beta)
    else:
        value = objective_mumt(rate, scnrs, scenario.beta_tilde, scenario.beta)
    return Objectives(sinrs, scnrs, rate, value)
