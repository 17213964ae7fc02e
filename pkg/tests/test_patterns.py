import math

import numpy as np
import pytest

from trihybrid.harmonics import SphericalHarmonicBasis
from trihybrid.patterns import (
    ISOTROPIC_SCALE,
    PatternLibraryError,
    cosine_pattern,
    load_pattern_library,
    omni_pattern,
    save_pattern_library,
    synth_pattern_library,
)

BASIS = SphericalHarmonicBasis(2)


def test_synthesis_is_deterministic():
    a = synth_pattern_library(8, seed=7, basis=BASIS)
    b = synth_pattern_library(8, seed=7, basis=BASIS)
    assert np.array_equal(a.gains, b.gains)
    assert np.array_equal(a.theta_grid, b.theta_grid)


def test_synthetic_energy_is_isotropic_reference(tmp_path):
    lib = synth_pattern_library(6, seed=3, basis=BASIS)
    for s in range(1, lib.count + 1):
        assert lib.sphere_energy(s) == pytest.approx(4 * math.pi, rel=0.02)


def test_single_pattern_matches_generating_gain():
    lib = synth_pattern_library(1, seed=11, basis=BASIS)
    c = lib.source_coeffs[0]
    # exact at tabulation nodes; off-node only bilinear error remains
    for i, j in [(5, 9), (33, 100), (60, 2)]:
        theta, phi = float(lib.theta_grid[i]), float(lib.phi_grid[j])
        assert lib.physical_gain(1, theta, phi) == pytest.approx(BASIS.gain(c, theta, phi))
    assert lib.physical_gain(1, 1.23, 4.56) == pytest.approx(
        BASIS.gain(c, 1.23, 4.56), abs=2e-3
    )


def test_interpolation_exact_at_grid_nodes():
    lib = synth_pattern_library(3, seed=1, basis=BASIS)
    i, j = 20, 77
    got = lib.gain(2, float(lib.theta_grid[i]), float(lib.phi_grid[j]))
    assert got == pytest.approx(lib.gains[1, i, j])


def test_angles_clamped_to_boundary():
    lib = synth_pattern_library(1, seed=1, basis=BASIS)
    beyond = lib.gain(1, 0.0, 2 * math.pi + 0.3)
    assert beyond == pytest.approx(lib.gains[0, 0, -1])


def test_benchmark_patterns():
    oa = omni_pattern()
    cosa = cosine_pattern()
    for theta, phi in [(0.0, 0.0), (1.0, 2.0), (math.pi / 2, 4.0)]:
        assert oa.stored_gain(theta, phi) == pytest.approx(1.0)
    assert cosa.stored_gain(math.pi / 2, 1.0) == pytest.approx(1.0)
    assert cosa.stored_gain(0.0, 1.0) == pytest.approx(0.0)
    # channel-facing values sit on the unit-energy convention
    assert oa.physical_gain(0.7, 0.2) == pytest.approx(1 / ISOTROPIC_SCALE)


def test_round_trip(tmp_path):
    lib = synth_pattern_library(4, seed=5, basis=BASIS, n_theta=16, n_phi=32)
    path = tmp_path / "library.txt"
    save_pattern_library(lib, path)
    loaded = load_pattern_library(path)
    assert loaded.count == lib.count
    assert loaded.scale == lib.scale
    np.testing.assert_array_equal(loaded.theta_grid, lib.theta_grid)
    np.testing.assert_array_equal(loaded.phi_grid, lib.phi_grid)
    np.testing.assert_array_equal(loaded.gains, lib.gains)
    assert loaded.provenance == "loaded"


def test_load_rejects_wrong_energy(tmp_path):
    lib = synth_pattern_library(2, seed=5, basis=BASIS, n_theta=16, n_phi=32)
    lib.gains *= math.sqrt(0.5)  # sphere energy 0.5 * 4 pi
    path = tmp_path / "bad.txt"
    save_pattern_library(lib, path)
    with pytest.raises(PatternLibraryError, match="sphere energy"):
        load_pattern_library(path)


def test_load_warns_on_small_energy_deviation(tmp_path):
    lib = synth_pattern_library(1, seed=5, basis=BASIS, n_theta=16, n_phi=32)
    lib.gains *= math.sqrt(1.05)  # 5% off
    path = tmp_path / "warn.txt"
    save_pattern_library(lib, path)
    with pytest.warns(UserWarning, match="sphere energy"):
        load_pattern_library(path)


def test_load_rejects_malformed_header(tmp_path):
    path = tmp_path / "hdr.txt"
    path.write_text("SIZE 3 NTHETA 4\n")
    with pytest.raises(PatternLibraryError, match="line 1"):
        load_pattern_library(path)


def test_load_reports_truncation_line(tmp_path):
    lib = synth_pattern_library(1, seed=5, basis=BASIS, n_theta=8, n_phi=8)
    path = tmp_path / "trunc.txt"
    save_pattern_library(lib, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:20]) + "\n")
    with pytest.raises(PatternLibraryError, match="line 21"):
        load_pattern_library(path)


def test_load_rejects_nan_gain(tmp_path):
    lib = synth_pattern_library(1, seed=5, basis=BASIS, n_theta=8, n_phi=8)
    path = tmp_path / "nan.txt"
    save_pattern_library(lib, path)
    lines = path.read_text().splitlines()
    parts = lines[5].split()
    parts[2] = "nan"
    lines[5] = " ".join(parts)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(PatternLibraryError, match="non-finite"):
        load_pattern_library(path)


def test_response_matches_physical_gain():
    lib = synth_pattern_library(5, seed=2, basis=BASIS)
    theta, phi = 1.1, 2.7
    vec = lib.response(theta, phi)
    for s in range(1, 6):
        assert vec[s - 1] == pytest.approx(lib.physical_gain(s, theta, phi))
