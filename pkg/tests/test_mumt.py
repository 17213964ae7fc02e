import math

import numpy as np
import pytest

from trihybrid.channel import build_channel_set
from trihybrid.harmonics import SphericalHarmonicBasis
from trihybrid.mumt import (
    MumtOptions,
    _MumtState,
    _surrogate_value,
    em_quadratic_per_antenna,
    f_lagrangian,
    f_quadratic,
    run_mumt,
    select_c_model_ii_mumt,
    solve_c_mumt,
    update_auxiliaries,
    update_fd_beams,
)
from trihybrid.patterns import HarmonicDomain, LibraryDomain, synth_pattern_library
from trihybrid.sust import run_sust, solve_c_closed_form

from conftest import make_scenario


def harmonic_state(scenario, seed=0, beams="random"):
    domain = HarmonicDomain(SphericalHarmonicBasis(scenario.truncation_degree))
    chset = build_channel_set(scenario, domain)
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((scenario.n_t, domain.dim)) + 1j * rng.standard_normal(
        (scenario.n_t, domain.dim)
    )
    coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    state = _MumtState(chset, coeffs)
    if beams == "random":
        f = rng.standard_normal((scenario.n_t, chset.n_users)) + 1j * rng.standard_normal(
            (scenario.n_t, chset.n_users)
        )
        f *= math.sqrt(scenario.power_budget) / np.linalg.norm(f)
        state.set_beams(f)
    return state


@pytest.fixture
def mumt_scenario():
    return make_scenario(n_cu=2, n_tar=2, n_scat=2, n_rf=4, seed=3)


class TestAuxiliaries:
    def test_zero_beams_give_zero_auxiliaries(self, mumt_scenario):
        state = harmonic_state(mumt_scenario, beams="zero")
        gamma_t, p, q = update_auxiliaries(state)
        np.testing.assert_array_equal(gamma_t, 0.0)
        np.testing.assert_array_equal(p, 0.0)
        np.testing.assert_array_equal(q, 0.0)

    def test_gamma_tilde_equals_sinr(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        gamma_t, _, _ = update_auxiliaries(state)
        np.testing.assert_allclose(gamma_t, state.sinrs(), rtol=1e-12)

    def test_p_update_single_user_form(self):
        scenario = make_scenario(n_cu=1, n_tar=1, n_scat=2)
        state = harmonic_state(scenario)
        gamma_t, p, _ = update_auxiliaries(state)
        h_f = state.rc[0, 0]
        want = (
            math.sqrt(state.bt_eff * (1 + gamma_t[0]))
            * h_f
            / (abs(h_f) ** 2 + state.noise)
        )
        assert p[0] == pytest.approx(want, rel=1e-12)

    def test_transform_tightness(self, mumt_scenario):
        # after the auxiliary update the surrogate touches both the dual
        # transform and the true objective
        state = harmonic_state(mumt_scenario)
        gamma_t, p, q = update_auxiliaries(state)
        fq = f_quadratic(state, gamma_t, p, q)
        fl = f_lagrangian(state, gamma_t)
        assert fq == pytest.approx(fl, abs=1e-8 * (1 + abs(fl)))
        assert fl == pytest.approx(state.true_objective(), abs=1e-8)


class TestBeamUpdate:
    def test_zero_auxiliaries_give_zero_beams(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        k, i = state.n_users, state.n_targets
        beams, mu = update_fd_beams(
            state, np.zeros(k), np.zeros(k, dtype=complex), np.zeros((i, k), dtype=complex)
        )
        np.testing.assert_array_equal(beams, 0.0)
        assert mu == 0.0

    def test_power_constraint_and_slackness(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        gamma_t, p, q = update_auxiliaries(state)
        beams, mu = update_fd_beams(state, gamma_t, p, q)
        power = float(np.linalg.norm(beams) ** 2)
        budget = state.power
        assert power <= budget * (1 + 1e-9)
        assert mu * (budget - power) <= 1e-6 * budget

    def test_power_decreasing_in_multiplier(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        gamma_t, p, q = update_auxiliaries(state)
        n_t = state.n_t
        m = np.zeros((n_t, n_t), dtype=complex)
        for j in range(state.n_users):
            m += abs(p[j]) ** 2 * np.outer(state.h_eff_c[j], np.conj(state.h_eff_c[j]))
        q_col = (np.abs(q) ** 2).sum(axis=1)
        for i in range(state.n_targets):
            for kappa in state.interf[i]:
                m += q_col[i] * state.w_cross[i, kappa] * np.outer(
                    state.h_eff_e[kappa], np.conj(state.h_eff_e[kappa])
                )
        rhs = np.zeros((n_t, state.n_users), dtype=complex)
        for k in range(state.n_users):
            rhs[:, k] = (
                p[k] * math.sqrt(state.bt_eff * (1 + gamma_t[k])) * state.h_eff_c[k]
            )
            for i in range(state.n_targets):
                rhs[:, k] += q[i, k] * math.sqrt(state.b * state.w_self[i]) * state.h_eff_e[i]
        mus = np.logspace(-6, 6, 20) * max(np.abs(np.linalg.eigvalsh(m)).max(), 1e-30)
        powers = []
        for mu in mus:
            f = np.linalg.solve(m + mu * np.eye(n_t), rhs)
            powers.append(np.linalg.norm(f) ** 2)
        assert np.all(np.diff(powers) < 0)

    def test_stationarity_of_returned_beams(self, mumt_scenario):
        # returned beams satisfy (M + mu I) f_k = r_k
        state = harmonic_state(mumt_scenario)
        gamma_t, p, q = update_auxiliaries(state)
        beams, mu = update_fd_beams(state, gamma_t, p, q)
        n_t = state.n_t
        m = np.zeros((n_t, n_t), dtype=complex)
        for j in range(state.n_users):
            m += abs(p[j]) ** 2 * np.outer(state.h_eff_c[j], np.conj(state.h_eff_c[j]))
        q_col = (np.abs(q) ** 2).sum(axis=1)
        for i in range(state.n_targets):
            for kappa in state.interf[i]:
                m += q_col[i] * state.w_cross[i, kappa] * np.outer(
                    state.h_eff_e[kappa], np.conj(state.h_eff_e[kappa])
                )
        for k in range(state.n_users):
            r_k = p[k] * math.sqrt(state.bt_eff * (1 + gamma_t[k])) * state.h_eff_c[k]
            for i in range(state.n_targets):
                r_k += q[i, k] * math.sqrt(state.b * state.w_self[i]) * state.h_eff_e[i]
            lhs = m @ beams[:, k] + mu * beams[:, k]
            np.testing.assert_allclose(lhs, r_k, rtol=1e-7, atol=1e-12 * np.abs(r_k).max())

    def test_beam_update_does_not_decrease_surrogate(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        gamma_t, p, q = update_auxiliaries(state)
        before = f_quadratic(state, gamma_t, p, q)
        beams, _ = update_fd_beams(state, gamma_t, p, q)
        state.set_beams(beams)
        after = f_quadratic(state, gamma_t, p, q)
        assert after >= before - 1e-9 * (1 + abs(before))


class TestPerAntennaSurrogate:
    def test_zero_auxiliaries_vanish(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        k, i = state.n_users, state.n_targets
        amat, avec = em_quadratic_per_antenna(
            state, np.zeros(k), np.zeros(k, dtype=complex), np.zeros((i, k), dtype=complex), 0
        )
        assert np.abs(amat).max() == 0.0
        assert np.abs(avec).max() == 0.0

    def test_negative_semidefinite(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        gamma_t, p, q = update_auxiliaries(state)
        for n in [0, 5, 9]:
            amat, _ = em_quadratic_per_antenna(state, gamma_t, p, q, n)
            vals = np.linalg.eigvalsh(0.5 * (amat + amat.conj().T))
            assert vals.max() <= 1e-10 * max(1.0, np.abs(vals).max())

    def test_matches_full_surrogate(self, mumt_scenario):
        state = harmonic_state(mumt_scenario)
        gamma_t, p, q = update_auxiliaries(state)
        fq = f_quadratic(state, gamma_t, p, q)
        const = float(np.sum(state.bt_eff * (np.log1p(gamma_t) - gamma_t)))
        for n in [2, 11]:
            amat, avec = em_quadratic_per_antenna(state, gamma_t, p, q, n)
            v = const + _surrogate_value(amat, avec, state.coeffs[n])
            assert v == pytest.approx(fq, abs=1e-10 * (1 + abs(fq)))


class TestSolveCMumt:
    def test_zero_linear_term_reduces_to_single_target_form(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
        a = 0.5 * (x + x.conj().T)
        c1 = solve_c_mumt(a, np.zeros(10, dtype=complex))
        c2 = solve_c_closed_form(a)
        np.testing.assert_allclose(c1, c2, atol=1e-12)

    def test_matches_fine_grid_oracle_t2(self):
        rng = np.random.default_rng(1)
        for _ in range(3):
            x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            a = -(x @ x.conj().T)  # negative semidefinite, like the surrogate
            lin = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            c = solve_c_mumt(a, lin)
            val = _surrogate_value(a, lin, c)
            t = np.linspace(0, np.pi / 2, 60)
            p1 = np.linspace(0, 2 * np.pi, 60, endpoint=False)
            p2 = np.linspace(0, 2 * np.pi, 60, endpoint=False)
            tt, pp1, pp2 = np.meshgrid(t, p1, p2, indexing="ij")
            grid = np.stack(
                [
                    np.cos(tt) * np.exp(1j * pp1),
                    np.sin(tt) * np.exp(1j * pp2),
                    np.ones_like(tt),
                ],
                axis=-1,
            ).reshape(-1, 3)
            vals = (
                np.einsum("kd,de,ke->k", np.conj(grid), a, grid).real
                + 2 * (np.conj(grid) @ lin).real
            )
            assert val >= vals.max() - 1e-3 * max(1.0, abs(vals.max()))

    def test_unit_norm(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        a = -(x @ x.conj().T)
        lin = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        c = solve_c_mumt(a, lin)
        assert np.linalg.norm(c) == pytest.approx(1.0, abs=1e-12)


class TestModelIISelection:
    def test_single_candidate(self):
        scenario = make_scenario(n_cu=2, n_tar=2, n_rf=4)
        library = synth_pattern_library(1, 3, SphericalHarmonicBasis(2))
        chset = build_channel_set(scenario, LibraryDomain(library))
        coeffs = np.ones((scenario.n_t, 1), dtype=complex)
        state = _MumtState(chset, coeffs)
        rng = np.random.default_rng(0)
        f = rng.standard_normal((scenario.n_t, 2)) + 1j * rng.standard_normal((scenario.n_t, 2))
        state.set_beams(f * math.sqrt(scenario.power_budget) / np.linalg.norm(f))
        gamma_t, p, q = update_auxiliaries(state)
        assert select_c_model_ii_mumt(state, gamma_t, p, q, 0) == 1

    def test_selection_maximizes_surrogate(self):
        scenario = make_scenario(n_cu=2, n_tar=2, n_rf=4, seed=8)
        library = synth_pattern_library(12, 4, SphericalHarmonicBasis(2))
        chset = build_channel_set(scenario, LibraryDomain(library))
        rng = np.random.default_rng(1)
        sel = rng.integers(0, 12, scenario.n_t)
        coeffs = np.zeros((scenario.n_t, 12), dtype=complex)
        coeffs[np.arange(scenario.n_t), sel] = 1.0
        state = _MumtState(chset, coeffs)
        f = rng.standard_normal((scenario.n_t, 2)) + 1j * rng.standard_normal((scenario.n_t, 2))
        state.set_beams(f * math.sqrt(scenario.power_budget) / np.linalg.norm(f))
        gamma_t, p, q = update_auxiliaries(state)
        n = 6
        s_star = select_c_model_ii_mumt(state, gamma_t, p, q, n)
        amat, avec = em_quadratic_per_antenna(state, gamma_t, p, q, n)
        values = []
        for s in range(12):
            cand = np.zeros(12, dtype=complex)
            cand[s] = 1.0
            values.append(_surrogate_value(amat, avec, cand))
        assert s_star - 1 == int(np.argmax(values))


class TestRunMumt:
    def test_trace_monotone_and_constraints(self, mumt_scenario):
        res = run_mumt(mumt_scenario, "model-i")
        trace = np.asarray(res.trace)
        assert np.all(np.diff(trace) >= -1e-9 * (1 + np.abs(trace[:-1])))
        norms = np.linalg.norm(res.beamformer.coeffs, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-9)
        np.testing.assert_allclose(np.abs(res.beamformer.f_rf), 1.0, atol=1e-9)
        power = np.linalg.norm(res.beamformer.hybrid_product) ** 2
        assert power <= mumt_scenario.power_budget * (1 + 1e-9)
        assert np.linalg.norm(res.beamformer.f_fd) ** 2 <= mumt_scenario.power_budget * (
            1 + 1e-9
        )

    def test_model_ii_one_sparse(self, mumt_scenario):
        library = synth_pattern_library(16, 2, SphericalHarmonicBasis(2))
        res = run_mumt(mumt_scenario, "model-ii", library=library)
        coeffs = res.beamformer.coeffs
        assert np.all(np.sum(coeffs != 0, axis=1) == 1)

    def test_matches_single_target_solver_scnr(self):
        # shared special case: the multi-ratio pipeline reproduces the
        # single-ratio pipeline's sensing outcome
        for seed in [0, 1]:
            scenario = make_scenario(n_cu=1, n_tar=1, seed=seed)
            res_m = run_mumt(scenario, "model-i")
            res_s = run_sust(scenario, "model-i")
            s_m = res_m.fd_objectives.scnr_total
            s_s = res_s.fd_objectives.scnr_total
            assert s_m == pytest.approx(s_s, rel=0.02)

    def test_fixed_scheme_skips_pattern_stage(self, mumt_scenario):
        res = run_mumt(mumt_scenario, "oa")
        np.testing.assert_allclose(res.beamformer.coeffs, 1.0)
