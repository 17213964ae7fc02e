"""Radiation-pattern libraries, fixed benchmark antennas, and pattern domains.

Two gain conventions coexist and are related by a recorded scale factor:

* *stored* (isotropic-reference) gains: an ideal omnidirectional antenna has
  gain 1 everywhere, i.e. sphere energy ``4 pi``.  Tabulated libraries are
  stored in this convention and validated against it.
* *physical* (unit-energy) gains: what the channel builder consumes.  They
  are ``stored / scale`` with ``scale = sqrt(4 pi)`` so that every antenna —
  synthesized, selected, or fixed — radiates unit total energy, matching the
  unit-norm constraint on harmonic coefficient vectors.

Keeping all antenna models on the same energy budget is what makes the
cross-scheme comparisons meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .harmonics import SphericalHarmonicBasis

__all__ = [
    "ISOTROPIC_SCALE",
    "PatternLibrary",
    "FixedPattern",
    "omni_pattern",
    "cosine_pattern",
    "synth_pattern_library",
    "save_pattern_library",
    "load_pattern_library",
    "PatternLibraryError",
    "HarmonicDomain",
    "LibraryDomain",
    "FixedDomain",
]

# amplitude ratio between the stored (OA = 1) and the unit-energy convention
ISOTROPIC_SCALE = math.sqrt(4.0 * math.pi)

SPHERE_ENERGY_WARN = 0.02  # relative deviation that triggers a warning
SPHERE_ENERGY_FAIL = 0.10  # relative deviation that rejects a library


class PatternLibraryError(ValueError):
    """Raised when a pattern-library file is malformed or invalid."""


@dataclass
class PatternLibrary:
    """Tabulated candidate radiation patterns for discrete pattern selection.

    gains[s, i, j] is the stored gain of pattern ``s`` at
    ``(theta_grid[i], phi_grid[j])``.  The grid covers the full sphere:
    theta ascending over [0, pi] inclusive, phi ascending over [0, 2 pi).
    """

    theta_grid: np.ndarray
    phi_grid: np.ndarray
    gains: np.ndarray
    scale: float = ISOTROPIC_SCALE
    provenance: str = "synthetic"
    source_coeffs: np.ndarray | None = None  # generating coefficients, if synthetic

    @property
    def count(self) -> int:
        return self.gains.shape[0]

    def gain(self, s: int, theta: float, phi: float) -> complex:
        """Stored gain of pattern ``s`` (1-based) via bilinear interpolation.

        Angles beyond the grid are clamped to the nearest boundary sample;
        since the grid covers the sphere this only absorbs rounding.
        """
        if not 1 <= s <= self.count:
            raise IndexError(f"pattern index {s} outside [1, {self.count}]")
        return complex(self._interpolate(self.gains[s - 1], theta, phi))

    def physical_gain(self, s: int, theta: float, phi: float) -> complex:
        """Unit-energy gain of pattern ``s``: stored value divided by scale."""
        return self.gain(s, theta, phi) / self.scale

    def response(self, theta: float, phi: float) -> np.ndarray:
        """Physical gains of all patterns at one angle; shape (S,)."""
        it, wt = self._axis_weight(self.theta_grid, theta)
        ip, wp = self._axis_weight(self.phi_grid, phi)
        g = self.gains
        val = (
            g[:, it, ip] * (1 - wt) * (1 - wp)
            + g[:, it + 1, ip] * wt * (1 - wp)
            + g[:, it, ip + 1] * (1 - wt) * wp
            + g[:, it + 1, ip + 1] * wt * wp
        )
        return val / self.scale

    def sphere_energy(self, s: int) -> float:
        """Quadrature of |stored gain|^2 sin(theta) over the sphere."""
        if not 1 <= s <= self.count:
            raise IndexError(f"pattern index {s} outside [1, {self.count}]")
        return _sphere_energy(self.theta_grid, self.phi_grid, self.gains[s - 1])

    # -- helpers ------------------------------------------------------------

    @staticmethod
    def _axis_weight(grid: np.ndarray, value: float) -> tuple[int, float]:
        # clamp to [grid[0], grid[-1]], return lower cell index and weight
        if value <= grid[0]:
            return 0, 0.0
        if value >= grid[-1]:
            return len(grid) - 2, 1.0
        idx = int(np.searchsorted(grid, value) - 1)
        width = grid[idx + 1] - grid[idx]
        return idx, float((value - grid[idx]) / width)

    def _interpolate(self, table: np.ndarray, theta: float, phi: float) -> complex:
        it, wt = self._axis_weight(self.theta_grid, theta)
        ip, wp = self._axis_weight(self.phi_grid, phi)
        return (
            table[it, ip] * (1 - wt) * (1 - wp)
            + table[it + 1, ip] * wt * (1 - wp)
            + table[it, ip + 1] * (1 - wt) * wp
            + table[it + 1, ip + 1] * wt * wp
        )


def _sphere_energy(theta_grid: np.ndarray, phi_grid: np.ndarray, table: np.ndarray) -> float:
    # trapezoid in theta (grid includes both poles), rectangle in phi
    # (uniform grid over the full period)
    integrand = np.abs(table) ** 2 * np.sin(theta_grid)[:, None]
    per_theta = integrand.sum(axis=1) * (2.0 * math.pi / len(phi_grid))
    return float(np.trapezoid(per_theta, theta_grid))


@dataclass(frozen=True)
class FixedPattern:
    """Analytic benchmark antenna with a fixed radiation pattern.

    ``stored_gain`` follows the isotropic-reference convention (omni = 1).
    """

    name: str
    _fn: object = field(repr=False)

    def stored_gain(self, theta: float, phi: float) -> complex:
        return complex(self._fn(theta, phi))

    def physical_gain(self, theta: float, phi: float) -> complex:
        return self.stored_gain(theta, phi) / ISOTROPIC_SCALE


def omni_pattern() -> FixedPattern:
    """Omnidirectional benchmark antenna: unit stored gain at all angles."""
    return FixedPattern("OA", lambda theta, phi: 1.0)


def cosine_pattern() -> FixedPattern:
    """Directional benchmark antenna with pattern function sin(theta)."""
    return FixedPattern("CosA", lambda theta, phi: math.sin(theta))


def synth_pattern_library(
    count: int,
    seed: int,
    basis: SphericalHarmonicBasis,
    n_theta: int = 64,
    n_phi: int = 128,
) -> PatternLibrary:
    """Generate a deterministic library of ``count`` random patterns.

    Each pattern is the gain of a random unit-norm harmonic coefficient
    vector, tabulated on an ``n_theta x n_phi`` sphere grid and stored in the
    isotropic-reference convention (so each pattern has sphere energy 4 pi;
    dividing by the recorded scale recovers the unit-energy gain exactly).
    Same ``(count, seed)`` reproduces the library bit for bit.
    """
    if count < 1:
        raise ValueError("library must contain at least one pattern")
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((count, basis.size)) + 1j * rng.standard_normal(
        (count, basis.size)
    )
    draws /= np.linalg.norm(draws, axis=1, keepdims=True)

    theta_grid = np.linspace(0.0, math.pi, n_theta)
    phi_grid = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    table = basis.eval_grid(theta_grid, phi_grid)  # (n_theta, n_phi, T)
    gains = ISOTROPIC_SCALE * np.einsum("ijt,st->sij", table, draws)
    return PatternLibrary(theta_grid, phi_grid, gains, ISOTROPIC_SCALE, "synthetic", draws)


# -- file round-trip ---------------------------------------------------------
#
# Line-oriented text format:
#   S <int> NTHETA <int> NPHI <int> SCALE <float>
#   PATTERN <s>
#   theta phi re im          (NTHETA * NPHI lines, theta row-major ascending)


def save_pattern_library(library: PatternLibrary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"S {library.count} NTHETA {len(library.theta_grid)} "
            f"NPHI {len(library.phi_grid)} SCALE {float(library.scale)!r}\n"
        )
        for s in range(library.count):
            fh.write(f"PATTERN {s + 1}\n")
            for i, theta in enumerate(library.theta_grid):
                for j, phi in enumerate(library.phi_grid):
                    g = library.gains[s, i, j]
                    fh.write(
                        f"{float(theta)!r} {float(phi)!r} "
                        f"{float(g.real)!r} {float(g.imag)!r}\n"
                    )


def load_pattern_library(path) -> PatternLibrary:
    """Parse a pattern-library file, validating grid shape and energy.

    Patterns whose sphere energy deviates from 4 pi by 2-10% produce a
    warning; beyond 10% the file is rejected.
    """
    import warnings

    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise PatternLibraryError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 8 or header[0] != "S" or header[2] != "NTHETA" or header[4] != "NPHI" or header[6] != "SCALE":
        raise PatternLibraryError(f"{path}: line 1: malformed header {lines[0]!r}")
    try:
        count, n_theta, n_phi = int(header[1]), int(header[3]), int(header[5])
        scale = float(header[7])
    except ValueError as exc:
        raise PatternLibraryError(f"{path}: line 1: {exc}") from exc
    if count < 1 or n_theta < 2 or n_phi < 2 or scale <= 0:
        raise PatternLibraryError(f"{path}: line 1: invalid header values")

    gains = np.empty((count, n_theta, n_phi), dtype=complex)
    theta_grid = np.empty(n_theta)
    phi_grid = np.empty(n_phi)
    lineno = 1
    for s in range(count):
        if lineno >= len(lines):
            raise PatternLibraryError(f"{path}: line {lineno + 1}: truncated before PATTERN {s + 1}")
        marker = lines[lineno].split()
        if len(marker) != 2 or marker[0] != "PATTERN" or marker[1] != str(s + 1):
            raise PatternLibraryError(
                f"{path}: line {lineno + 1}: expected 'PATTERN {s + 1}', got {lines[lineno]!r}"
            )
        lineno += 1
        for i in range(n_theta):
            for j in range(n_phi):
                if lineno >= len(lines):
                    raise PatternLibraryError(
                        f"{path}: line {lineno + 1}: truncated inside PATTERN {s + 1}"
                    )
                parts = lines[lineno].split()
                if len(parts) != 4:
                    raise PatternLibraryError(
                        f"{path}: line {lineno + 1}: expected 'theta phi re im'"
                    )
                try:
                    theta, phi, re, im = (float(p) for p in parts)
                except ValueError as exc:
                    raise PatternLibraryError(f"{path}: line {lineno + 1}: {exc}") from exc
                if not (math.isfinite(re) and math.isfinite(im)):
                    raise PatternLibraryError(
                        f"{path}: line {lineno + 1}: non-finite gain in PATTERN {s + 1}"
                    )
                if s == 0:
                    if j == 0:
                        theta_grid[i] = theta
                    elif theta != theta_grid[i]:
                        raise PatternLibraryError(
                            f"{path}: line {lineno + 1}: non-rectangular grid (theta)"
                        )
                    if i == 0:
                        phi_grid[j] = phi
                    elif phi != phi_grid[j]:
                        raise PatternLibraryError(
                            f"{path}: line {lineno + 1}: non-rectangular grid (phi)"
                        )
                gains[s, i, j] = complex(re, im)
                lineno += 1
    if np.any(np.diff(theta_grid) <= 0) or np.any(np.diff(phi_grid) <= 0):
        raise PatternLibraryError(f"{path}: grid axes must be strictly ascending")

    library = PatternLibrary(theta_grid, phi_grid, gains, scale, "loaded")
    target = 4.0 * math.pi
    for s in range(1, count + 1):
        deviation = abs(library.sphere_energy(s) - target) / target
        if deviation > SPHERE_ENERGY_FAIL:
            raise PatternLibraryError(
                f"{path}: PATTERN {s}: sphere energy off by {deviation:.1%} (>10%)"
            )
        if deviation > SPHERE_ENERGY_WARN:
            warnings.warn(
                f"{path}: PATTERN {s}: sphere energy off by {deviation:.1%}",
                stacklevel=2,
            )
    return library


# -- pattern domains ---------------------------------------------------------
#
# A pattern domain maps an angle to the vector of per-candidate physical
# gains.  The element-domain channel block for antenna n at angle (theta,
# phi) is response(theta, phi) * alpha * a_n, and the effective per-antenna
# gain is coeffs^H response.  This makes synthesized patterns (coefficients
# on the harmonic basis), selected patterns (one-hot over a library), and
# fixed benchmarks (single candidate) interchangeable downstream.


class HarmonicDomain:
    """Arbitrary pattern synthesis: coefficients on the harmonic basis."""

    kind = "harmonic"

    def __init__(self, basis: SphericalHarmonicBasis):
        self.basis = basis
        self.dim = basis.size

    def response(self, theta: float, phi: float) -> np.ndarray:
        return self.basis.eval(theta, phi)

    def initial_coeffs(self) -> np.ndarray:
        # all energy on the constant harmonic: the isotropic pattern
        c = np.zeros(self.dim, dtype=complex)
        c[0] = 1.0
        return c


class LibraryDomain:
    """Discrete pattern selection from a tabulated library."""

    kind = "library"

    def __init__(self, library: PatternLibrary):
        self.library = library
        self.dim = library.count

    def response(self, theta: float, phi: float) -> np.ndarray:
        return self.library.response(theta, phi)

    def initial_coeffs(self) -> np.ndarray:
        c = np.zeros(self.dim, dtype=complex)
        c[0] = 1.0
        return c


class FixedDomain:
    """Non-reconfigurable benchmark antenna (single candidate pattern)."""

    kind = "fixed"

    def __init__(self, pattern: FixedPattern):
        self.pattern = pattern
        self.dim = 1

    def response(self, theta: float, phi: float) -> np.ndarray:
        return np.asarray([self.pattern.physical_gain(theta, phi)], dtype=complex)

    def initial_coeffs(self) -> np.ndarray:
        return np.ones(1, dtype=complex)
