import numpy as np
import pytest

from trihybrid.hybrid import factor_hybrid


def random_target(rng, n_t, k):
    return rng.standard_normal((n_t, k)) + 1j * rng.standard_normal((n_t, k))


def test_full_rf_chains_fit_exactly():
    rng = np.random.default_rng(0)
    f = random_target(rng, 8, 2)
    pair = factor_hybrid(f, 8, float(np.linalg.norm(f) ** 2))
    assert pair.residual < 1e-6


def test_two_chain_single_stream_fits_exactly():
    rng = np.random.default_rng(1)
    for _ in range(5):
        f = random_target(rng, 16, 1)
        pair = factor_hybrid(f, 2, float(np.linalg.norm(f) ** 2))
        assert pair.residual < 1e-6


def test_planted_product_recovered():
    rng = np.random.default_rng(2)
    f_rf = np.exp(1j * rng.uniform(0, 2 * np.pi, (12, 3)))
    f_bb = random_target(rng, 3, 2)
    f = f_rf @ f_bb
    pair = factor_hybrid(f, 3, float(np.linalg.norm(f) ** 2), init_f_rf=f_rf)
    assert pair.residual < 1e-8


def test_unit_modulus_and_power_constraints():
    rng = np.random.default_rng(3)
    f = random_target(rng, 10, 2)
    budget = float(np.linalg.norm(f) ** 2)
    pair = factor_hybrid(f, 4, budget)
    np.testing.assert_allclose(np.abs(pair.f_rf), 1.0, atol=1e-9)
    product_power = np.linalg.norm(pair.f_rf @ pair.f_bb) ** 2
    assert product_power <= budget + 1e-9 * budget
    assert product_power == pytest.approx(budget, rel=1e-6)


def test_power_never_exceeded_for_overweight_input():
    rng = np.random.default_rng(4)
    f = random_target(rng, 6, 1)
    budget = 0.25 * float(np.linalg.norm(f) ** 2)
    pair = factor_hybrid(f, 2, budget)
    assert np.linalg.norm(pair.f_rf @ pair.f_bb) ** 2 <= budget * (1 + 1e-9)


def test_nested_initialization_is_monotone():
    rng = np.random.default_rng(5)
    f = random_target(rng, 12, 2)
    budget = float(np.linalg.norm(f) ** 2)
    prev_pair = factor_hybrid(f, 2, budget)
    prev = prev_pair.residual
    for n_rf in range(3, 7):
        init = np.concatenate(
            [prev_pair.f_rf, np.ones((12, 1), dtype=complex)], axis=1
        )
        prev_pair = factor_hybrid(f, n_rf, budget, init_f_rf=init)
        assert prev_pair.residual <= prev * (1 + 1e-9) + 1e-12
        prev = prev_pair.residual


def test_residual_scale_invariance():
    # tiny power budgets must not stall the phase updates
    rng = np.random.default_rng(6)
    f = random_target(rng, 16, 1)
    f *= 1e-3 / np.linalg.norm(f)
    pair = factor_hybrid(f, 2, float(np.linalg.norm(f) ** 2))
    assert pair.residual < 1e-6 * np.linalg.norm(f) + 1e-12
