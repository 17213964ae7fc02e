"""Shared numeric kernels: Hermitian eigen-pairs, shifted solves, bisection."""

from __future__ import annotations

import numpy as np

__all__ = [
    "hermitian_max_eigpair",
    "all_eigenvalues",
    "shifted_solve",
    "bisection",
    "SingularShiftError",
    "BracketError",
]

HERMITICITY_TOL = 1e-10
SOLVE_RESIDUAL_TOL = 1e-10
BISECTION_MAX_ITER = 200
BRACKET_MAX_EXPANSIONS = 60


class SingularShiftError(np.linalg.LinAlgError):
    """Shifted system is numerically singular; the caller should back off."""


class BracketError(ValueError):
    """Bisection could not bracket the target value."""


def _check_hermitian(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.conj().T).max() > HERMITICITY_TOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return 0.5 * (a + a.conj().T)


def hermitian_max_eigpair(a) -> tuple[float, np.ndarray]:
    """Dominant eigenvalue and unit eigenvector of a Hermitian matrix.

    The eigenvector phase is fixed so its first entry of non-negligible
    magnitude is real positive, making repeated calls deterministic.
    """
    h = _check_hermitian(a)
    values, vectors = np.linalg.eigh(h)
    v = vectors[:, -1]
    idx = int(np.argmax(np.abs(v) > 1e-12 * max(1.0, np.abs(v).max())))
    pivot = v[idx]
    if np.abs(pivot) > 0:
        v = v * (np.conj(pivot) / np.abs(pivot))
    return float(values[-1]), v


def all_eigenvalues(a) -> np.ndarray:
    """Full real spectrum of a Hermitian matrix, ascending."""
    return np.linalg.eigvalsh(_check_hermitian(a))


def shifted_solve(a, mu: float, rhs) -> np.ndarray:
    """Solve (A - mu I) x = rhs for Hermitian A.

    Raises :class:`SingularShiftError` when the shifted system is too close
    to singular for the residual guarantee.
    """
    h = _check_hermitian(a)
    rhs = np.asarray(rhs, dtype=complex)
    shifted = h - mu * np.eye(h.shape[0])
    try:
        x = np.linalg.solve(shifted, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularShiftError(str(exc)) from exc
    residual = np.linalg.norm(shifted @ x - rhs)
    if not np.all(np.isfinite(x.view(float))) or residual > SOLVE_RESIDUAL_TOL * max(
        np.linalg.norm(rhs), 1e-300
    ):
        raise SingularShiftError("shifted system is numerically singular")
    return x


def bisection(f, lo: float, hi: float, target: float, tol: float) -> float:
    """Root of ``f(x) = target`` for monotone ``f`` on [lo, hi].

    If [lo, hi] does not bracket the target, ``hi`` is pushed outward by
    doubling the interval up to 60 times before giving up.  Stops when
    ``|f(x) - target| <= tol`` or the interval shrinks below
    ``1e-12 * (1 + |x|)``.
    """
    if hi <= lo:
        raise ValueError("need lo < hi")
    g_lo = f(lo) - target
    g_hi = f(hi) - target
    if g_lo == 0.0:
        return lo
    expansions = 0
    while g_lo * g_hi > 0.0:
        if expansions >= BRACKET_MAX_EXPANSIONS:
            raise BracketError("could not bracket the target value")
        span = hi - lo
        hi = hi + span
        g_hi = f(hi) - target
        expansions += 1
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        g_mid = f(mid) - target
        if abs(g_mid) <= tol or (hi - lo) < 1e-12 * (1.0 + abs(mid)):
            return mid
        if g_lo * g_mid <= 0.0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    return 0.5 * (lo + hi)
