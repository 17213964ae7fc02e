"""Multi-user / multi-target tri-hybrid beamforming solver.

The weighted sum-rate plus total-SCNR objective is a sum of ratios, so the
single-ratio Dinkelbach route does not apply.  Instead the rate terms pass
through the Lagrangian dual transform (one auxiliary per user) and every
remaining ratio through the quadratic transform (one complex auxiliary per
user and per target-user pair).  All block updates are then closed form:

* auxiliaries: ratio-tight expressions evaluated at the incumbent,
* digital beams: a regularized least-squares solve whose power multiplier
  comes from a monotone bisection,
* per-antenna pattern coefficients: the same sphere-constrained quadratic
  maximization as the single-target solver, extended by a linear term.

The transform runs in natural log with the communication weight divided by
ln 2, which makes the surrogate's tight value equal the reported objective
in bits while keeping the closed-form update identities exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import build_channel_set
from .hybrid import factor_hybrid
from .metrics import Objectives, TriHybridBeamformer, evaluate
from .sust import _sphere_quadratic_max, domain_for_model

__all__ = [
    "MumtOptions",
    "MumtResult",
    "update_auxiliaries",
    "update_fd_beams",
    "em_quadratic_per_antenna",
    "solve_c_mumt",
    "select_c_model_ii_mumt",
    "run_mumt",
]

ACCEPT_SLACK = 1e-12


@dataclass
class MumtOptions:
    max_outer: int = 50
    outer_tol: float = 1e-6
    fp_rounds: int = 20
    fp_tol: float = 1e-8
    em_max_passes: int = 4
    norm_tol: float = 1e-8
    power_tol: float = 1e-14
    hybrid_max_iter: int = 500


@dataclass
class MumtResult:
    beamformer: TriHybridBeamformer
    fd_objectives: Objectives
    hybrid_objectives: Objectives
    trace: list[float]  # true objective at stage checkpoints, non-decreasing
    outer_trace: list[float]
    fqua_trace: list[float]  # surrogate values across block updates
    iterations: int
    hybrid_residual: float
    warnings: list[str] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.fd_objectives.objective


class _MumtState:
    """Effective channels, received amplitudes, and weights for one solve."""

    def __init__(self, chset, coeffs: np.ndarray):
        scenario = chset.scenario
        self.chset = chset
        self.n_t = scenario.n_t
        self.dim = chset.domain.dim
        self.n_users = chset.n_users
        self.n_targets = chset.n_targets
        self.n_entities = chset.n_entities
        self.noise = scenario.noise_power
        self.power = scenario.power_budget
        # natural-log surrogate weight; tight value then equals bits * beta_tilde
        self.bt_eff = scenario.beta_tilde / math.log(2.0)
        self.b = scenario.beta
        self.w_self = np.asarray(
            [chset.normalized_weights(i)[0] for i in range(self.n_targets)]
        )
        self.w_cross = np.stack(
            [chset.normalized_weights(i)[1] for i in range(self.n_targets)]
        )
        self.interf = [chset.interference_indices(i) for i in range(self.n_targets)]
        self.blocks_c = chset.h_comm.reshape(self.n_users, self.n_t, self.dim)
        self.blocks_e = chset.h_entities.reshape(self.n_entities, self.n_t, self.dim)
        self.coeffs = coeffs.astype(complex).copy()
        self.h_eff_c = np.einsum("nd,knd->kn", np.conj(self.coeffs), self.blocks_c)
        self.h_eff_e = np.einsum("nd,end->en", np.conj(self.coeffs), self.blocks_e)
        self.f = np.zeros((self.n_t, self.n_users), dtype=complex)
        self.rc = np.zeros((self.n_users, self.n_users), dtype=complex)
        self.re = np.zeros((self.n_entities, self.n_users), dtype=complex)

    def set_beams(self, f: np.ndarray) -> None:
        self.f = f
        self.rc = np.conj(self.h_eff_c) @ f  # rc[k, j] = h_ck^H f_j
        self.re = np.conj(self.h_eff_e) @ f

    def set_antenna(self, n: int, coeff: np.ndarray) -> None:
        self.coeffs[n] = coeff
        new_c = np.conj(coeff) @ self.blocks_c[:, n, :].T
        new_e = np.conj(coeff) @ self.blocks_e[:, n, :].T
        self.rc += np.outer(np.conj(new_c - self.h_eff_c[:, n]), self.f[n])
        self.re += np.outer(np.conj(new_e - self.h_eff_e[:, n]), self.f[n])
        self.h_eff_c[:, n] = new_c
        self.h_eff_e[:, n] = new_e

    # -- metrics --------------------------------------------------------------

    def sinrs(self) -> np.ndarray:
        powers = np.abs(self.rc) ** 2
        signal = np.diag(powers)
        interference = powers.sum(axis=1) - signal + self.noise
        return signal / interference

    def sensing_denominators(self) -> np.ndarray:
        row_power = (np.abs(self.re) ** 2).sum(axis=1)
        return np.asarray(
            [
                self.w_cross[i, self.interf[i]] @ row_power[self.interf[i]] + 1.0
                for i in range(self.n_targets)
            ]
        )

    def etas(self) -> np.ndarray:
        echo = self.w_self * (np.abs(self.re[: self.n_targets]) ** 2).sum(axis=1)
        return echo / self.sensing_denominators()

    def true_objective(self) -> float:
        gammas = self.sinrs()
        return float(
            self.bt_eff * np.sum(np.log1p(gammas)) + self.b * np.sum(self.etas())
        )


def update_auxiliaries(state: _MumtState):
    """Ratio-tight auxiliaries (gamma~, p, q) at the incumbent beams."""
    powers = np.abs(state.rc) ** 2
    signal = np.diag(powers)
    totals = powers.sum(axis=1) + state.noise
    gamma_t = signal / (totals - signal)
    p = np.sqrt(state.bt_eff * (1.0 + gamma_t)) * np.diag(state.rc) / totals
    denom = state.sensing_denominators()
    q = (
        np.sqrt(state.b * state.w_self)[:, None]
        * state.re[: state.n_targets]
        / denom[:, None]
    )
    return gamma_t, p, q


def f_quadratic(state: _MumtState, gamma_t, p, q) -> float:
    """Quadratic-transform surrogate value at the incumbent beams."""
    powers = np.abs(state.rc) ** 2
    totals = powers.sum(axis=1) + state.noise
    a_k = np.log1p(gamma_t) - gamma_t
    val = float(np.sum(state.bt_eff * a_k))
    val += float(
        np.sum(
            2.0
            * np.real(
                np.conj(p) * np.sqrt(state.bt_eff * (1.0 + gamma_t)) * np.diag(state.rc)
            )
            - np.abs(p) ** 2 * totals
        )
    )
    denom = state.sensing_denominators()
    cross = np.sqrt(state.b * state.w_self)[:, None] * state.re[: state.n_targets]
    val += float(np.sum(2.0 * np.real(np.conj(q) * cross)))
    val -= float(np.sum((np.abs(q) ** 2).sum(axis=1) * denom))
    return val


def f_lagrangian(state: _MumtState, gamma_t) -> float:
    """Dual-transform objective; equals the true objective at tight gamma~."""
    powers = np.abs(state.rc) ** 2
    signal = np.diag(powers)
    totals = powers.sum(axis=1) + state.noise
    a_k = np.log1p(gamma_t) - gamma_t
    comm = np.sum(state.bt_eff * (a_k + (1.0 + gamma_t) * signal / totals))
    return float(comm + state.b * np.sum(state.etas()))


def update_fd_beams(state: _MumtState, gamma_t, p, q, power_tol: float = 1e-14):
    """Joint closed-form beam update with a bisected power multiplier.

    The regularizer is the pseudo-inverse at a zero multiplier when the
    unconstrained solution already fits the budget (complementary
    slackness); otherwise the multiplier solves the strictly decreasing
    power equation by bisection.  Returns (beams, multiplier).
    """
    n_t = state.n_t
    m = np.zeros((n_t, n_t), dtype=complex)
    for j in range(state.n_users):
        m += abs(p[j]) ** 2 * np.outer(state.h_eff_c[j], np.conj(state.h_eff_c[j]))
    q_col = (np.abs(q) ** 2).sum(axis=1)
    for i in range(state.n_targets):
        for kappa in state.interf[i]:
            m += (
                q_col[i]
                * state.w_cross[i, kappa]
                * np.outer(state.h_eff_e[kappa], np.conj(state.h_eff_e[kappa]))
            )
    rhs = np.zeros((n_t, state.n_users), dtype=complex)
    for k in range(state.n_users):
        rhs[:, k] = p[k] * np.sqrt(state.bt_eff * (1.0 + gamma_t[k])) * state.h_eff_c[k]
        for i in range(state.n_targets):
            rhs[:, k] += q[i, k] * np.sqrt(state.b * state.w_self[i]) * state.h_eff_e[i]

    lam, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    lam = np.clip(lam, 0.0, None)
    r_t = v.conj().T @ rhs  # (n_t, K) in the eigenbasis
    weights = (np.abs(r_t) ** 2).sum(axis=1)  # per-eigendirection drive power

    def beams(mu: float) -> np.ndarray:
        if mu == 0.0:
            # pseudo-inverse: drop the numerical null space
            keep = lam > 1e-12 * max(lam.max(), 1.0)
            scaled = np.where(keep[:, None], r_t / np.where(keep, lam, 1.0)[:, None], 0.0)
        else:
            scaled = r_t / (lam + mu)[:, None]
        return v @ scaled

    def power(mu: float) -> float:
        # sum_k ||f_k(mu)||^2 collapses to a scalar rational in mu
        if mu == 0.0:
            keep = lam > 1e-12 * max(lam.max(), 1.0)
            return float(np.sum(weights[keep] / lam[keep] ** 2))
        return float(np.sum(weights / (lam + mu) ** 2))

    if power(0.0) <= state.power * (1.0 + 1e-12):
        return beams(0.0), 0.0
    lo, hi = 0.0, max(1.0, float(lam.max()))
    while power(hi) > state.power and hi < 1e300:
        hi *= 2.0
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        if power(mid) > state.power:
            lo = mid
        else:
            hi = mid
        if abs(power(hi) - state.power) <= power_tol * state.power:
            break
        if (hi - lo) <= 1e-15 * (1.0 + hi):
            break
    return beams(hi), hi  # hi side keeps the budget satisfied


def _extended_vectors(state: _MumtState, n: int):
    """Per-beam extended link vectors for antenna n (see the SUST stage)."""
    fn = np.conj(state.f[n])  # (K,)
    ac = fn[None, :, None] * state.blocks_c[:, None, n, :]  # (K, K, D)
    ae = fn[None, :, None] * state.blocks_e[:, None, n, :]  # (E, K, D)
    last_c = np.conj(state.rc) - fn[None, :] * state.h_eff_c[:, n][:, None]
    last_e = np.conj(state.re) - fn[None, :] * state.h_eff_e[:, n][:, None]
    ac_ext = np.concatenate([ac, last_c[:, :, None]], axis=2)
    ae_ext = np.concatenate([ae, last_e[:, :, None]], axis=2)
    return ac_ext, ae_ext


def em_quadratic_per_antenna(state: _MumtState, gamma_t, p, q, n: int):
    """Quadratic and linear terms of the surrogate in antenna n's extended
    coefficient vector.

    The quadratic part is negative semidefinite by construction (a sum of
    negatively weighted outer products plus noise terms on the constant
    slot).
    """
    dim = state.dim
    ac_ext, ae_ext = _extended_vectors(state, n)
    q_col = (np.abs(q) ** 2).sum(axis=1)
    p_sq = np.abs(p) ** 2
    # communication blocks: weight -|p_k|^2 on every beam of user k's channel
    amat = -np.einsum("k,kjd,kjg->dg", p_sq, ac_ext, np.conj(ac_ext))
    # sensing blocks: weight -(sum_k |q_ik|^2) w_ik on interferer kappa, beam j
    w_eff = np.zeros(state.n_entities)
    for i in range(state.n_targets):
        w_eff[state.interf[i]] += q_col[i] * state.w_cross[i, state.interf[i]]
    amat -= np.einsum("e,ejd,ejg->dg", w_eff, ae_ext, np.conj(ae_ext))
    # noise terms land on the constant slot
    amat[-1, -1] -= np.sum(p_sq) * state.noise + np.sum(q_col)
    # with this extended-vector convention c_ext^H a_hat equals the
    # conjugated received amplitude, so the auxiliaries enter unconjugated
    # for 2 Re{a^H c_ext} to reproduce the transform's cross terms
    avec = np.zeros(dim + 1, dtype=complex)
    for k in range(state.n_users):
        avec += p[k] * np.sqrt(state.bt_eff * (1.0 + gamma_t[k])) * ac_ext[k, k]
        for i in range(state.n_targets):
            avec += q[i, k] * np.sqrt(state.b * state.w_self[i]) * ae_ext[i, k]
    return amat, avec


def solve_c_mumt(amat: np.ndarray, avec: np.ndarray, norm_tol: float = 1e-8):
    """Maximize ``x^H A x + 2 Re(a^H x)`` over {x = [c; 1], ||c|| = 1}.

    Folding the linear term into the quadratic's coupling column reduces the
    problem to the same sphere-constrained maximization as the single-target
    pattern update; with a zero linear term the two coincide.
    """
    amat = np.asarray(amat, dtype=complex)
    avec = np.asarray(avec, dtype=complex)
    dim = amat.shape[0] - 1
    m = 0.5 * (amat[:dim, :dim] + amat[:dim, :dim].conj().T)
    b = amat[:dim, -1] + avec[:dim]
    return _sphere_quadratic_max(m, b, norm_tol)


def _surrogate_value(amat, avec, coeff) -> float:
    x = np.concatenate([coeff, [1.0]])
    return float(np.real(np.conj(x) @ amat @ x) + 2.0 * np.real(np.vdot(avec, x)))


def select_c_model_ii_mumt(state: _MumtState, gamma_t, p, q, n: int) -> int:
    """Best candidate pattern (1-based) for antenna n under the surrogate.

    Exploits the 1-sparse selector: each candidate's surrogate value needs
    one element of every link vector, so the scan over the library is linear
    in its size.
    """
    ac_ext, ae_ext = _extended_vectors(state, n)
    dim = state.dim
    scores = np.zeros(dim)
    q_col = (np.abs(q) ** 2).sum(axis=1)
    for k in range(state.n_users):
        acc = np.abs(ac_ext[k, :, :dim] + ac_ext[k, :, -1][:, None]) ** 2
        scores -= abs(p[k]) ** 2 * (acc.sum(axis=0) + state.noise)
    for i in range(state.n_targets):
        acc = np.zeros(dim)
        for kappa in state.interf[i]:
            acc += state.w_cross[i, kappa] * (
                np.abs(ae_ext[kappa, :, :dim] + ae_ext[kappa, :, -1][:, None]) ** 2
            ).sum(axis=0)
        scores -= q_col[i] * (acc + 1.0)
    for k in range(state.n_users):
        lin = p[k] * np.sqrt(state.bt_eff * (1.0 + gamma_t[k])) * (
            ac_ext[k, k, :dim] + ac_ext[k, k, -1]
        )
        scores += 2.0 * np.real(lin)
        for i in range(state.n_targets):
            lin = q[i, k] * np.sqrt(state.b * state.w_self[i]) * (
                ae_ext[i, k, :dim] + ae_ext[i, k, -1]
            )
            scores += 2.0 * np.real(lin)
    return int(np.argmax(scores)) + 1


def run_mumt(scenario, model: str, options: MumtOptions | None = None, library=None) -> MumtResult:
    """Full alternating solve for the multi-user / multi-target scenario.

    The digital and pattern stages alternate until the true objective
    stalls; auxiliaries are refreshed before every checkpoint so the
    recorded trace sits at transform-tight points and is non-decreasing.
    """
    if not scenario.users or not scenario.targets:
        raise ValueError("run_mumt expects at least one user and one target")
    options = options or MumtOptions()
    domain = domain_for_model(scenario, model, library)
    chset = build_channel_set(scenario, domain)
    coeffs = np.tile(domain.initial_coeffs(), (scenario.n_t, 1))
    state = _MumtState(chset, coeffs)

    # matched-filter start with an even power split keeps the first
    # auxiliary update away from the all-zero fixed point
    cols = []
    for h in state.h_eff_c:
        norm = np.linalg.norm(h)
        cols.append(h / norm if norm > 0 else np.ones(state.n_t) / math.sqrt(state.n_t))
    state.set_beams(
        np.stack(cols, axis=1) * math.sqrt(scenario.power_budget / len(scenario.users))
    )

    trace: list[float] = [state.true_objective()]
    outer_trace: list[float] = []
    fqua_trace: list[float] = []
    warnings: list[str] = []
    iterations = 0
    prev_outer = None
    for outer in range(options.max_outer):
        iterations = outer + 1
        # digital stage: alternating transform-tight closed-form blocks
        stage_start = trace[-1]
        snapshot = (state.f.copy(), state.rc.copy(), state.re.copy())
        prev_fqua = None
        for _ in range(options.fp_rounds):
            gamma_t, p, q = update_auxiliaries(state)
            beams, _mu = update_fd_beams(state, gamma_t, p, q, options.power_tol)
            saved = (state.f, state.rc.copy(), state.re.copy())
            state.set_beams(beams)
            fq = f_quadratic(state, gamma_t, p, q)
            if prev_fqua is not None and fq < prev_fqua - 1e-9 * (1.0 + abs(prev_fqua)):
                state.f, state.rc, state.re = saved
                warnings.append(f"outer {outer}: digital block update rejected")
                break
            fqua_trace.append(fq)
            if prev_fqua is not None and abs(fq - prev_fqua) <= options.fp_tol * (
                1.0 + abs(fq)
            ):
                break
            prev_fqua = fq
        obj = state.true_objective()
        if obj < stage_start - ACCEPT_SLACK:
            # transform theory says this cannot happen; guard numerics anyway
            state.f, state.rc, state.re = snapshot
            warnings.append(f"outer {outer}: digital stage reverted")
            obj = stage_start
        trace.append(obj)

        # pattern stage
        if domain.kind != "fixed":
            stage_start = trace[-1]
            snapshot = (
                state.coeffs.copy(),
                state.h_eff_c.copy(),
                state.h_eff_e.copy(),
                state.rc.copy(),
                state.re.copy(),
            )
            for _ in range(options.em_max_passes):
                pass_start = state.true_objective()
                for n in range(state.n_t):
                    gamma_t, p, q = update_auxiliaries(state)
                    if domain.kind == "harmonic":
                        amat, avec = em_quadratic_per_antenna(state, gamma_t, p, q, n)
                        cand = solve_c_mumt(amat, avec, options.norm_tol)
                        if cand is None:
                            continue
                        gain = _surrogate_value(amat, avec, cand) - _surrogate_value(
                            amat, avec, state.coeffs[n]
                        )
                        if gain < -ACCEPT_SLACK:
                            continue
                    else:
                        s_star = select_c_model_ii_mumt(state, gamma_t, p, q, n)
                        cand = np.zeros(state.dim, dtype=complex)
                        cand[s_star - 1] = 1.0
                    state.set_antenna(n, cand)
                if state.true_objective() - pass_start <= options.outer_tol * (
                    1.0 + abs(pass_start)
                ):
                    break
            obj = state.true_objective()
            if obj < stage_start - ACCEPT_SLACK:
                state.coeffs, state.h_eff_c, state.h_eff_e, state.rc, state.re = snapshot
                warnings.append(f"outer {outer}: pattern stage reverted")
                obj = stage_start
            trace.append(obj)

        outer_trace.append(state.true_objective())
        if prev_outer is not None and abs(outer_trace[-1] - prev_outer) <= options.outer_tol * (
            1.0 + abs(outer_trace[-1])
        ):
            break
        prev_outer = outer_trace[-1]

    pair = factor_hybrid(
        state.f,
        scenario.n_rf,
        scenario.power_budget,
        seed=scenario.seed or 0,
        max_iter=options.hybrid_max_iter,
    )
    beamformer = TriHybridBeamformer(
        coeffs=state.coeffs, f_rf=pair.f_rf, f_bb=pair.f_bb, f_fd=state.f.copy()
    )
    fd_metrics = evaluate(chset, state.coeffs, beamformer.f_fd)
    hybrid_metrics = evaluate(chset, state.coeffs, beamformer.hybrid_product)
    return MumtResult(
        beamformer=beamformer,
        fd_objectives=fd_metrics,
        hybrid_objectives=hybrid_metrics,
        trace=trace,
        outer_trace=outer_trace,
        fqua_trace=fqua_trace,
        iterations=iterations,
        hybrid_residual=pair.residual,
        warnings=warnings,
    )
