"""Decomposition of a fully digital beamformer into analog and digital factors.

Minimizes ``||F_rf F_bb - F_fd||_F`` subject to unit-modulus entries of
``F_rf`` by alternating an exact least-squares digital update with a
projected (Armijo-backtracked) gradient step on the phase-shifter torus.
For a single stream the exact two-phasor construction (any entry with
``|f_i| <= 2 c`` splits into two unit phasors scaled by ``c``) seeds an
additional start.  The best iterate over all starts is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["HybridPair", "factor_hybrid"]

ARMIJO_C = 1e-4
MIN_STEP = 1e-14


@dataclass
class HybridPair:
    f_rf: np.ndarray  # (N_T, N_RF), |entries| = 1
    f_bb: np.ndarray  # (N_RF, K)
    residual: float  # ||F_rf F_bb - F_fd||_F at the returned factors


def _project_unit(m: np.ndarray) -> np.ndarray:
    out = np.exp(1j * np.angle(m))
    out[m == 0] = 1.0
    return out


def _residual(f_rf, f_bb, f_fd) -> float:
    return float(np.linalg.norm(f_rf @ f_bb - f_fd))


def _two_phasor_init(f: np.ndarray, n_rf: int) -> np.ndarray:
    """Analog start from the exact two-phasor split of a single stream.

    Entry ``f_i = c e^{j(phi_i + d_i)} + c e^{j(phi_i - d_i)}`` with
    ``c = max|f_i| / 2`` and ``cos(d_i) = |f_i| / (2c)``; spare chains come
    in canceling pairs so they do not disturb the fit.
    """
    n_t = f.shape[0]
    mags = np.abs(f[:, 0])
    c = mags.max() / 2.0
    if c == 0.0:
        return np.ones((n_t, n_rf), dtype=complex)
    base = np.angle(f[:, 0])
    delta = np.arccos(np.clip(mags / (2.0 * c), -1.0, 1.0))
    f_rf = np.ones((n_t, n_rf), dtype=complex)
    f_rf[:, 0] = np.exp(1j * (base + delta))
    if n_rf > 1:
        f_rf[:, 1] = np.exp(1j * (base - delta))
    for r in range(2, n_rf):
        # opposite phases pairwise cancel under a balanced digital factor
        f_rf[:, r] = np.exp(1j * (base + np.pi * (r % 2)))
    return f_rf


def _alternate(f_fd: np.ndarray, f_rf: np.ndarray, max_iter: int, tol: float) -> HybridPair:
    def digital_ls(f_rf):
        return np.linalg.lstsq(f_rf, f_fd, rcond=None)[0]

    f_bb = digital_ls(f_rf)
    best = HybridPair(f_rf.copy(), f_bb.copy(), _residual(f_rf, f_bb, f_fd))
    prev = best.residual
    for _ in range(max_iter):
        # one projected gradient step on the analog phases
        err = f_rf @ f_bb - f_fd
        grad = err @ f_bb.conj().T
        gnorm2 = float(np.linalg.norm(grad) ** 2)
        if gnorm2 > 0.0:
            base = _residual(f_rf, f_bb, f_fd) ** 2
            step = 1.0
            while step > MIN_STEP:
                cand = _project_unit(f_rf - step * grad)
                if _residual(cand, f_bb, f_fd) ** 2 <= base - ARMIJO_C * step * gnorm2:
                    f_rf = cand
                    break
                step *= 0.5
        # exact digital refit
        f_bb = digital_ls(f_rf)
        res = _residual(f_rf, f_bb, f_fd)
        if res < best.residual:
            best = HybridPair(f_rf.copy(), f_bb.copy(), res)
        if abs(prev - res) < tol:
            break
        prev = res
    return best


def factor_hybrid(
    f_fd: np.ndarray,
    n_rf: int,
    power_budget: float,
    seed: int = 0,
    init_f_rf: np.ndarray | None = None,
    max_iter: int = 500,
    tol: float = 1e-8,
) -> HybridPair:
    """Factor ``f_fd`` (N_T x K) into unit-modulus analog and digital parts.

    The analog stage starts from the phases of the first ``n_rf`` columns of
    ``f_fd`` padded with seeded random phases (or from ``init_f_rf`` when
    given), plus the two-phasor start for a single stream.  After
    convergence the digital factor is rescaled so the product meets the
    power budget exactly whenever the input did, and never exceeds it.
    """
    f_fd_in = np.atleast_2d(np.asarray(f_fd, dtype=complex))
    if f_fd_in.shape[0] < f_fd_in.shape[1] and f_fd_in.shape[0] == 1:
        f_fd_in = f_fd_in.T
    n_t, n_streams = f_fd_in.shape
    if n_rf < 1:
        raise ValueError("need at least one RF chain")
    # optimize at unit Frobenius scale so gradient steps are well conditioned
    # regardless of the (possibly tiny) power budget
    fd_scale = float(np.linalg.norm(f_fd_in))
    f_fd = f_fd_in / fd_scale if fd_scale > 0 else f_fd_in

    starts: list[np.ndarray] = []
    if init_f_rf is not None:
        start = _project_unit(np.asarray(init_f_rf, dtype=complex).copy())
        if start.shape != (n_t, n_rf):
            raise ValueError("init_f_rf has the wrong shape")
        starts.append(start)
    else:
        rng = np.random.default_rng(seed)
        start = np.empty((n_t, n_rf), dtype=complex)
        n_seed = min(n_rf, n_streams)
        start[:, :n_seed] = _project_unit(f_fd[:, :n_seed])
        if n_rf > n_seed:
            start[:, n_seed:] = np.exp(
                1j * rng.uniform(0.0, 2.0 * np.pi, (n_t, n_rf - n_seed))
            )
        starts.append(start)
        if n_streams == 1 and n_rf >= 2:
            starts.append(_two_phasor_init(f_fd, n_rf))

    best: HybridPair | None = None
    for start in starts:
        pair = _alternate(f_fd, start, max_iter, tol)
        if best is None or pair.residual < best.residual:
            best = pair
        if best.residual < tol:
            break

    f_rf, f_bb = best.f_rf, best.f_bb * fd_scale
    product_power = float(np.linalg.norm(f_rf @ f_bb) ** 2)
    input_power = fd_scale**2
    if product_power > 0.0:
        if abs(input_power - power_budget) <= 1e-6 * max(power_budget, 1e-300):
            f_bb = f_bb * np.sqrt(power_budget / product_power)
        elif product_power > power_budget:
            f_bb = f_bb * np.sqrt(power_budget / product_power)
    return HybridPair(f_rf, f_bb, _residual(f_rf, f_bb, f_fd_in))
