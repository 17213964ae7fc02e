"""Single-user / single-target tri-hybrid beamforming solver.

Alternates two stages until the weighted SNR + SCNR objective stalls:

* a fully digital stage that solves the power-constrained fractional
  program by Dinkelbach's transform, each parametric subproblem being a
  Rayleigh quotient maximized by the dominant eigenvector;
* an antenna-wise electromagnetic stage that cycles over elements, each
  update maximizing the objective over that element's pattern coefficients
  (closed form via a secular-equation bisection for synthesized patterns,
  exhaustive candidate scan for selected patterns).

Every update is accepted only if it does not decrease the incumbent
objective and does not decrease the stage's Dinkelbach multiplier, so the
recorded objective trace and multiplier sequences are non-decreasing by
construction.  The converged fully digital beamformer is factorized into
unit-modulus analog and digital parts at the very end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import EmChannelSet, build_channel_set
from .harmonics import SphericalHarmonicBasis
from .hybrid import factor_hybrid
from .metrics import Objectives, TriHybridBeamformer, evaluate
from .patterns import (
    FixedDomain,
    HarmonicDomain,
    LibraryDomain,
    cosine_pattern,
    omni_pattern,
    synth_pattern_library,
)

__all__ = [
    "SustOptions",
    "SustResult",
    "build_R",
    "dinkelbach_fd",
    "em_coeffs_per_antenna",
    "solve_c_closed_form",
    "select_c_model_ii",
    "run_sust",
    "domain_for_model",
    "canonical_model",
]

ACCEPT_SLACK = 1e-12

MODEL_ALIASES = {
    "model-i": "model-i",
    "ra-ao-closedform-i": "model-i",
    "model-ii": "model-ii",
    "ra-ao-bruteforce-ii": "model-ii",
    "oa": "oa",
    "oa-hbf": "oa",
    "cosa": "cosa",
    "cosa-hbf": "cosa",
}


def canonical_model(model: str) -> str:
    key = model.strip().lower()
    if key not in MODEL_ALIASES:
        raise ValueError(f"unknown antenna model {model!r}")
    return MODEL_ALIASES[key]


def domain_for_model(scenario, model: str, library=None):
    """Pattern domain for a scheme name; synthesizes a default library."""
    kind = canonical_model(model)
    if kind == "model-i":
        return HarmonicDomain(SphericalHarmonicBasis(scenario.truncation_degree))
    if kind == "model-ii":
        if library is None:
            library = synth_pattern_library(
                64, 7, SphericalHarmonicBasis(scenario.truncation_degree)
            )
        return LibraryDomain(library)
    if kind == "oa":
        return FixedDomain(omni_pattern())
    return FixedDomain(cosine_pattern())


@dataclass
class SustOptions:
    max_outer: int = 50
    outer_tol: float = 1e-6
    dinkelbach_tol: float = 1e-8
    dinkelbach_max_iter: int = 100
    em_max_passes: int = 6
    em_pass_tol: float = 1e-8
    antenna_max_iter: int = 8
    norm_tol: float = 1e-8
    hybrid_max_iter: int = 500


@dataclass
class SustResult:
    beamformer: TriHybridBeamformer
    fd_objectives: Objectives
    hybrid_objectives: Objectives
    trace: list[float]  # accepted objective values, non-decreasing
    outer_trace: list[float]  # objective at the end of each outer iteration
    fd_sigma_traces: list[list[float]]  # Dinkelbach multipliers per FD stage
    em_sigma_traces: list[list[float]]  # multipliers per EM stage
    iterations: int
    hybrid_residual: float
    warnings: list[str] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.fd_objectives.objective


class _SustState:
    """Effective channels and running totals for one solver instance.

    Entity 0 is the target; the remaining entities are scatterers (the
    interference set).  ``h_eff[e, n]`` is the effective per-antenna channel
    of entity ``e``; ``tot[e] = f^H h_eff[e]`` is the received amplitude the
    fractional surrogates are built from.  Weights are pre-divided by the
    effective noise power so the SCNR denominator carries a unit constant.
    """

    def __init__(self, chset: EmChannelSet, coeffs: np.ndarray):
        scenario = chset.scenario
        self.chset = chset
        self.n_t = scenario.n_t
        self.dim = chset.domain.dim
        self.noise = scenario.noise_power
        self.power = scenario.power_budget
        self.bt = scenario.beta_tilde
        self.b = scenario.beta
        omega_self, omega_all = chset.normalized_weights(0)
        self.w_target = omega_self
        self.w_clutter = omega_all[1:]  # scatterer weights under target 0's combiner
        # blocks[e, n, :] stacks the comm channel (entity index -1 by
        # convention: stored first) with the sensing entities
        self.blocks_c = chset.h_comm[0].reshape(self.n_t, self.dim)
        self.blocks_e = chset.h_entities.reshape(-1, self.n_t, self.dim)
        self.coeffs = coeffs.astype(complex).copy()
        self.h_eff_c = np.einsum("nd,nd->n", np.conj(self.coeffs), self.blocks_c)
        self.h_eff_e = np.einsum("nd,end->en", np.conj(self.coeffs), self.blocks_e)
        self.f = np.zeros(self.n_t, dtype=complex)
        self.tot_c = 0.0 + 0.0j
        self.tot_e = np.zeros(self.blocks_e.shape[0], dtype=complex)

    def set_beamformer(self, f: np.ndarray) -> None:
        self.f = f
        self.tot_c = np.vdot(f, self.h_eff_c)
        self.tot_e = self.h_eff_e @ np.conj(f)

    def set_antenna(self, n: int, coeff: np.ndarray) -> None:
        self.coeffs[n] = coeff
        h_c = np.vdot(coeff, self.blocks_c[n])
        h_e = self.blocks_e[:, n, :] @ np.conj(coeff)
        self.tot_c += np.conj(self.f[n]) * (h_c - self.h_eff_c[n])
        self.tot_e += np.conj(self.f[n]) * (h_e - self.h_eff_e[:, n])
        self.h_eff_c[n] = h_c
        self.h_eff_e[:, n] = h_e

    # -- objective pieces ----------------------------------------------------

    def gamma(self) -> float:
        return abs(self.tot_c) ** 2 / self.noise

    def eta(self) -> float:
        clutter = float(self.w_clutter @ (np.abs(self.tot_e[1:]) ** 2)) + 1.0
        return self.w_target * abs(self.tot_e[0]) ** 2 / clutter

    def objective(self) -> float:
        return self.bt * self.gamma() + self.b * self.eta()

    def sensing_ratio(self) -> float:
        """Dinkelbach multiplier value: beta-weighted SCNR at the incumbent."""
        return self.b * self.eta()


def build_R(
    h_comm: np.ndarray,
    h_entities: np.ndarray,
    w_target: float,
    w_clutter: np.ndarray,
    varsigma: float,
    beta_tilde: float,
    beta: float,
    noise_power: float,
) -> np.ndarray:
    """Parametric covariance for the fully digital Rayleigh-Ritz step.

    Weighted communication covariance plus target covariance minus the
    multiplier-scaled clutter covariances; each term is a rank-1 outer
    product of an effective channel.
    """
    r = (beta_tilde / noise_power) * np.outer(h_comm, np.conj(h_comm))
    r = r + beta * w_target * np.outer(h_entities[0], np.conj(h_entities[0]))
    for w, h in zip(w_clutter, h_entities[1:]):
        r = r - varsigma * w * np.outer(h, np.conj(h))
    return r


def dinkelbach_fd(state: _SustState, options: SustOptions, trace: list[float]):
    """Fully digital stage: Dinkelbach recursion at full transmit power.

    Each parametric subproblem is solved globally by the dominant
    eigenvector; the multiplier recursion starts at zero (the
    clutter-ignoring subproblem) and runs on scratch iterates, which lets
    the sensing ratio climb through transient dips of the weighted
    objective.  The recursion stops when the multiplier stalls or would
    decrease (the recorded multiplier sequence is therefore
    non-decreasing), and the best-objective iterate is committed only if it
    does not fall below the incumbent.
    """
    varsigma = 0.0
    sigma_trace: list[float] = []
    start_obj = state.objective() if np.any(state.f) else -np.inf
    best_f = None
    best_obj = -np.inf
    converged = False
    for _ in range(options.dinkelbach_max_iter):
        r = build_R(
            state.h_eff_c,
            state.h_eff_e,
            state.w_target,
            state.w_clutter,
            varsigma,
            state.bt,
            state.b,
            state.noise,
        )
        _, vectors = np.linalg.eigh(0.5 * (r + r.conj().T))
        f_cand = np.sqrt(state.power) * vectors[:, -1]
        # evaluate the candidate without touching the committed state
        tot_c = np.vdot(f_cand, state.h_eff_c)
        tot_e = state.h_eff_e @ np.conj(f_cand)
        gamma = abs(tot_c) ** 2 / state.noise
        clutter = float(state.w_clutter @ (np.abs(tot_e[1:]) ** 2)) + 1.0
        eta = state.w_target * abs(tot_e[0]) ** 2 / clutter
        obj_cand = state.bt * gamma + state.b * eta
        sigma_cand = state.b * eta
        if sigma_trace and sigma_cand < sigma_trace[-1] - ACCEPT_SLACK:
            break
        sigma_trace.append(sigma_cand)
        if obj_cand > best_obj:
            best_obj, best_f = obj_cand, f_cand
        if abs(sigma_cand - varsigma) <= options.dinkelbach_tol * (1.0 + abs(sigma_cand)):
            converged = True
            break
        varsigma = sigma_cand
    if best_f is not None and best_obj >= start_obj - ACCEPT_SLACK:
        state.set_beamformer(best_f)
        trace.append(best_obj)
    return sigma_trace, converged


def em_coeffs_per_antenna(state: _SustState, n: int, varsigma: float) -> np.ndarray:
    """Extended quadratic for antenna n's pattern subproblem.

    For each link the extended vector stacks this antenna's weighted channel
    block with the fixed contribution of all other antennas, so
    ``[c; 1]^H (a a^H) [c; 1]`` reproduces the link's received power.  The
    assembled (D+1) x (D+1) form weights communication positively, the
    target echo positively, and the clutter echoes by the negated
    multiplier.
    """
    fn = np.conj(state.f[n])
    u_c = fn * state.h_eff_c[n]
    u_e = fn * state.h_eff_e[:, n]
    a_c = np.concatenate([fn * state.blocks_c[n], [state.tot_c - u_c]])
    a_e = [
        np.concatenate([fn * state.blocks_e[e, n], [state.tot_e[e] - u_e[e]]])
        for e in range(state.tot_e.size)
    ]
    amat = (state.bt / state.noise) * np.outer(a_c, np.conj(a_c))
    amat += state.b * state.w_target * np.outer(a_e[0], np.conj(a_e[0]))
    for w, a in zip(state.w_clutter, a_e[1:]):
        amat -= varsigma * w * np.outer(a, np.conj(a))
    return amat


def solve_c_closed_form(a_ext: np.ndarray, norm_tol: float = 1e-8):
    """Maximize ``[c; 1]^H A [c; 1]`` over unit-norm pattern coefficients c.

    Stationarity gives the secular equation ``||(mu I - M)^(-1) b|| = 1``
    for the leading block M and coupling column b, whose unique multiplier
    above the top eigenvalue of M is found by bisection (the squared norm is
    non-increasing in the multiplier).  Equivalently the extended vector is
    proportional to ``(A - mu I)^(-1) e``.  When the coupling has no
    component on the top eigenspace and the secular equation has no root
    (the degenerate trust-region case) the maximizer adds a top-eigenvector
    component to the pseudo-solve.  Returns None when the subproblem is
    flat (zero quadratic), signalling the caller to keep the incumbent.
    """
    a_ext = np.asarray(a_ext, dtype=complex)
    dim = a_ext.shape[0] - 1
    m = 0.5 * (a_ext[:dim, :dim] + a_ext[:dim, :dim].conj().T)
    b = a_ext[:dim, -1]
    return _sphere_quadratic_max(m, b, norm_tol)


def _sphere_quadratic_max(m: np.ndarray, b: np.ndarray, norm_tol: float = 1e-8):
    """argmax of ``c^H M c + 2 Re(c^H b)`` over the complex unit sphere.

    Secular-equation bisection for the multiplier; the degenerate case
    (coupling numerically orthogonal to the top eigenspace with the
    pseudo-solve inside the sphere) adds a top-eigenvector component.
    """
    lam, w = np.linalg.eigh(m)
    b_t = w.conj().T @ b
    scale = max(np.abs(lam).max(), np.abs(b_t).max(), 1e-300)
    if scale < 1e-280:
        return None
    dim = lam.size
    lam_max = lam[-1]
    gap = lam_max - lam
    pole_res = 1e-12 * (1.0 + abs(lam_max))  # resolvable distance to the pole
    cluster = gap <= pole_res
    top_coupling = float(np.linalg.norm(b_t[cluster]))
    perp = np.zeros(dim, dtype=complex)
    perp[~cluster] = b_t[~cluster] / gap[~cluster]
    perp_norm_sq = float(np.vdot(perp, perp).real)

    if top_coupling <= pole_res and perp_norm_sq <= 1.0:
        # no secular root above the pole: pseudo-solve plus a
        # top-eigenvector component reaches the sphere exactly
        coeff = perp
        coeff[-1] += np.sqrt(max(0.0, 1.0 - perp_norm_sq))
        c = w @ coeff
    else:

        def norm_sq(mu: float) -> float:
            z = b_t / (mu - lam)
            return float(np.vdot(z, z).real)

        # lower bracket strictly above the pole where the curve exceeds 1
        delta = 1e-9 * (1.0 + abs(lam_max))
        lo = lam_max + delta
        while norm_sq(lo) < 1.0:
            delta *= 0.5
            lo_new = lam_max + delta
            if lo_new >= lo or lo_new == lam_max:
                break
            lo = lo_new
        if not np.isfinite(norm_sq(lo)) or norm_sq(lo) < 1.0:
            return None
        hi = lam_max + max(1.0, float(np.linalg.norm(b)), abs(lam_max))
        expansions = 0
        while norm_sq(hi) > 1.0 and expansions < 60:
            hi = lam_max + 2.0 * (hi - lam_max)
            expansions += 1
        if norm_sq(hi) > 1.0:
            return None
        g_lo = norm_sq(lo) - 1.0
        mu = hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            g_mid = norm_sq(mid) - 1.0
            if abs(g_mid) <= norm_tol or (hi - lo) < 1e-12 * (1.0 + abs(mid)):
                mu = mid
                break
            if g_lo * g_mid <= 0.0:
                hi = mid
            else:
                lo, g_lo = mid, g_mid
        else:
            mu = 0.5 * (lo + hi)
        c = w @ (b_t / (mu - lam))
    norm = np.linalg.norm(c)
    if norm == 0.0 or not np.all(np.isfinite(c.view(float))):
        return None
    return c / norm  # exact unit norm absorbs the bisection tolerance


def select_c_model_ii(state: _SustState, n: int, varsigma: float = 0.0) -> int:
    """Best candidate pattern (1-based) for antenna n by exhaustive scan.

    Scores the exact fractional objective; because the selector is 1-sparse
    each candidate costs one element per link.  The multiplier argument is
    accepted for symmetry with the synthesized-pattern update but the exact
    objective makes it unnecessary.  Ties break toward the lowest index.
    """
    fn = np.conj(state.f[n])
    val_c = (state.tot_c - fn * state.h_eff_c[n]) + fn * state.blocks_c[n]
    val_e = (state.tot_e - fn * state.h_eff_e[:, n])[:, None] + fn * state.blocks_e[:, n, :]
    gamma = np.abs(val_c) ** 2 / state.noise
    clutter = state.w_clutter @ (np.abs(val_e[1:]) ** 2) + 1.0
    eta = state.w_target * np.abs(val_e[0]) ** 2 / clutter
    scores = state.bt * gamma + state.b * eta
    return int(np.argmax(scores)) + 1


def _em_stage(state: _SustState, options: SustOptions, trace: list[float], warnings: list[str]):
    """Antenna-wise pattern stage (closed form or exhaustive), guarded.

    Every antenna visit runs its own small multiplier recursion; a visit
    ends when the multiplier stalls, would decrease, or the candidate would
    lower the incumbent objective.  Returns the per-visit multiplier
    sequences (each non-decreasing by construction).
    """
    kind = state.chset.domain.kind
    visit_traces: list[list[float]] = []
    incumbent_obj = state.objective()
    for _ in range(options.em_max_passes):
        pass_start = incumbent_obj
        for n in range(state.n_t):
            varsigma = state.sensing_ratio()
            visit_sigma: list[float] = []
            for _ in range(options.antenna_max_iter):
                if kind == "harmonic":
                    amat = em_coeffs_per_antenna(state, n, varsigma)
                    cand = solve_c_closed_form(amat, options.norm_tol)
                    if cand is None:
                        warnings.append(f"em: flat subproblem at antenna {n}")
                        break
                else:
                    s_star = select_c_model_ii(state, n, varsigma)
                    cand = np.zeros(state.dim, dtype=complex)
                    cand[s_star - 1] = 1.0
                saved_coeff = state.coeffs[n].copy()
                saved = (
                    state.tot_c,
                    state.tot_e.copy(),
                    state.h_eff_c[n],
                    state.h_eff_e[:, n].copy(),
                )
                state.set_antenna(n, cand)
                obj_cand = state.objective()
                sigma_cand = state.sensing_ratio()
                if obj_cand < incumbent_obj - ACCEPT_SLACK or (
                    visit_sigma and sigma_cand < visit_sigma[-1] - ACCEPT_SLACK
                ):
                    state.coeffs[n] = saved_coeff
                    state.tot_c, state.tot_e = saved[0], saved[1]
                    state.h_eff_c[n], state.h_eff_e[:, n] = saved[2], saved[3]
                    break
                moved = obj_cand > incumbent_obj + ACCEPT_SLACK
                incumbent_obj = obj_cand
                trace.append(obj_cand)
                visit_sigma.append(sigma_cand)
                stalled = abs(sigma_cand - varsigma) <= options.dinkelbach_tol * (
                    1.0 + abs(sigma_cand)
                )
                varsigma = sigma_cand
                if stalled or not moved:
                    break
            if visit_sigma:
                visit_traces.append(visit_sigma)
        if incumbent_obj - pass_start <= options.em_pass_tol * (1.0 + abs(incumbent_obj)):
            break
    return visit_traces


def run_sust(scenario, model: str, options: SustOptions | None = None, library=None) -> SustResult:
    """Full alternating solve for one single-user / single-target scenario.

    Fixed-pattern schemes keep their antenna patterns and run only the
    digital stage.  The returned beamformer carries both the fully digital
    surrogate and its unit-modulus factorization; metrics are reported for
    both.
    """
    if len(scenario.users) != 1 or len(scenario.targets) != 1:
        raise ValueError("run_sust expects exactly one user and one target")
    options = options or SustOptions()
    domain = domain_for_model(scenario, model, library)
    chset = build_channel_set(scenario, domain)
    coeffs = np.tile(domain.initial_coeffs(), (scenario.n_t, 1))
    state = _SustState(chset, coeffs)

    trace: list[float] = []
    outer_trace: list[float] = []
    fd_sigma_traces: list[list[float]] = []
    em_sigma_traces: list[list[float]] = []
    warnings: list[str] = []
    prev_obj = None
    iterations = 0
    for outer in range(options.max_outer):
        iterations = outer + 1
        sigma_trace, converged = dinkelbach_fd(state, options, trace)
        fd_sigma_traces.append(sigma_trace)
        if not converged and len(sigma_trace) >= options.dinkelbach_max_iter:
            warnings.append(f"outer {outer}: digital stage hit the iteration cap")
        if domain.kind != "fixed":
            em_sigma_traces.extend(_em_stage(state, options, trace, warnings))
        obj_now = state.objective()
        outer_trace.append(obj_now)
        if prev_obj is not None and abs(obj_now - prev_obj) <= options.outer_tol * (
            1.0 + abs(obj_now)
        ):
            break
        prev_obj = obj_now

    pair = factor_hybrid(
        state.f.reshape(-1, 1),
        scenario.n_rf,
        scenario.power_budget,
        seed=scenario.seed or 0,
        max_iter=options.hybrid_max_iter,
    )
    beamformer = TriHybridBeamformer(
        coeffs=state.coeffs,
        f_rf=pair.f_rf,
        f_bb=pair.f_bb,
        f_fd=state.f.reshape(-1, 1),
    )
    fd_metrics = evaluate(chset, state.coeffs, beamformer.f_fd)
    hybrid_metrics = evaluate(chset, state.coeffs, beamformer.hybrid_product)
    return SustResult(
        beamformer=beamformer,
        fd_objectives=fd_metrics,
        hybrid_objectives=hybrid_metrics,
        trace=trace,
        outer_trace=outer_trace,
        fd_sigma_traces=fd_sigma_traces,
        em_sigma_traces=em_sigma_traces,
        iterations=iterations,
        hybrid_residual=pair.residual,
        warnings=warnings,
    )
