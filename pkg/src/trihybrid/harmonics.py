"""Truncated spherical-harmonic basis for reconfigurable element patterns.

A radiation pattern is represented by a complex coefficient vector on the
orthonormal complex spherical harmonics up to degree ``U``.  The basis is
flattened with the index ``t = u^2 + u + q + 1`` for ``u in [0, U]`` and
``q in [-u, u]``, so the window length is ``T = U^2 + 2U + 1 = (U + 1)^2``.

Conventions (fixed once, used everywhere in the package):

* associated Legendre functions carry no Condon-Shortley phase,
* the normalization ``N_u^q = sqrt((2u+1)/(4 pi) * (u-|q|)!/(u+|q|)!)``
  uses ``|q|``, and negative orders evaluate ``P_u^{|q|}`` with the phase
  factor ``exp(j*q*phi)`` kept signed,
* a unit-norm coefficient vector therefore has unit energy over the
  sphere: ``integral |b(theta,phi)^T c|^2 sin(theta) dtheta dphi = 1``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["assoc_legendre", "SphericalHarmonicBasis"]


def assoc_legendre(u: int, q: int, x):
    """Associated Legendre function P_u^q(x) without Condon-Shortley phase.

    Computed by the stable upward recurrence in the degree:

        P_q^q(x)     = (2q-1)!! (1-x^2)^{q/2}
        P_{q+1}^q(x) = (2q+1) x P_q^q(x)
        (u-q) P_u^q  = (2u-1) x P_{u-1}^q - (u+q-1) P_{u-2}^q

    ``x`` may be a scalar or an array; the result matches its shape.
    Orders with ``q > u`` are identically zero.
    """
    if u < 0 or q < 0:
        raise ValueError(f"degree/order must be nonnegative, got u={u}, q={q}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-15):
        raise ValueError("assoc_legendre argument must lie in [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    if q > u:
        out = np.zeros_like(x)
        return out if out.ndim else float(out)

    # seed: P_q^q, then one-step raise to P_{q+1}^q, then the three-term
    # recurrence upward in degree.
    somx2 = np.sqrt((1.0 - x) * (1.0 + x))
    pqq = np.ones_like(x)
    for k in range(1, q + 1):
        pqq *= (2 * k - 1) * somx2
    if u == q:
        return pqq if pqq.ndim else float(pqq)
    pq1q = (2 * q + 1) * x * pqq
    if u == q + 1:
        return pq1q if pq1q.ndim else float(pq1q)
    p_prev, p_curr = pqq, pq1q
    for degree in range(q + 2, u + 1):
        p_next = ((2 * degree - 1) * x * p_curr - (degree + q - 1) * p_prev) / (degree - q)
        p_prev, p_curr = p_curr, p_next
    return p_curr if p_curr.ndim else float(p_curr)


class SphericalHarmonicBasis:
    """Orthonormal spherical-harmonic basis truncated at degree ``U``.

    Attributes:
        truncation_degree: maximum harmonic degree U.
        size: window length T = (U+1)^2.
    """

    def __init__(self, truncation_degree: int):
        if truncation_degree < 0:
            raise ValueError("truncation degree must be nonnegative")
        self.truncation_degree = int(truncation_degree)
        self.size = self.truncation_degree**2 + 2 * self.truncation_degree + 1
        # normalization cache indexed by flattened t (uses |q|)
        norms = np.empty(self.size)
        degrees = np.empty(self.size, dtype=int)
        orders = np.empty(self.size, dtype=int)
        for u in range(self.truncation_degree + 1):
            for q in range(-u, u + 1):
                t = self.harmonic_index(u, q)
                degrees[t - 1] = u
                orders[t - 1] = q
                norms[t - 1] = math.sqrt(
                    (2 * u + 1)
                    / (4.0 * math.pi)
                    * math.factorial(u - abs(q))
                    / math.factorial(u + abs(q))
                )
        self._norms = norms
        self._degrees = degrees
        self._orders = orders

    # -- indexing -----------------------------------------------------------

    def harmonic_index(self, u: int, q: int) -> int:
        """1-based flattened index t = u^2 + u + q + 1."""
        if u < 0 or u > self.truncation_degree:
            raise IndexError(f"degree {u} outside [0, {self.truncation_degree}]")
        if abs(q) > u:
            raise IndexError(f"order {q} outside [-{u}, {u}]")
        return u * u + u + q + 1

    def index_degree_order(self, t: int) -> tuple[int, int]:
        """Inverse of :meth:`harmonic_index`."""
        if t < 1 or t > self.size:
            raise IndexError(f"index {t} outside [1, {self.size}]")
        return int(self._degrees[t - 1]), int(self._orders[t - 1])

    # -- evaluation ---------------------------------------------------------

    def eval(self, theta: float, phi: float) -> np.ndarray:
        """Basis vector b(theta, phi) of length T, entries Y_u^q."""
        return self.eval_grid(np.asarray([theta]), np.asarray([phi]))[0, 0]

    def eval_grid(self, thetas, phis) -> np.ndarray:
        """Tabulate the basis on an angle grid.

        Returns an array of shape ``(len(thetas), len(phis), T)``.
        """
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        x = np.cos(thetas)
        out = np.empty((thetas.size, phis.size, self.size), dtype=complex)
        # legendre part depends on theta only, the azimuthal phase on phi only
        for u in range(self.truncation_degree + 1):
            for q in range(0, u + 1):
                p = np.atleast_1d(assoc_legendre(u, q, x))
                phase = np.exp(1j * q * phis)
                t_pos = self.harmonic_index(u, q)
                norm = self._norms[t_pos - 1]
                out[:, :, t_pos - 1] = norm * p[:, None] * phase[None, :]
                if q > 0:
                    t_neg = self.harmonic_index(u, -q)
                    out[:, :, t_neg - 1] = norm * p[:, None] * np.conj(phase)[None, :]
        return out

    def eval_at(self, thetas, phis) -> np.ndarray:
        """Basis vectors at paired angles; shape ``(len(thetas), T)``."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        if thetas.shape != phis.shape:
            raise ValueError("theta/phi arrays must have matching shapes")
        x = np.cos(thetas)
        out = np.empty((thetas.size, self.size), dtype=complex)
        for u in range(self.truncation_degree + 1):
            for q in range(0, u + 1):
                p = np.atleast_1d(assoc_legendre(u, q, x))
                t_pos = self.harmonic_index(u, q)
                norm = self._norms[t_pos - 1]
                out[:, t_pos - 1] = norm * p * np.exp(1j * q * phis)
                if q > 0:
                    t_neg = self.harmonic_index(u, -q)
                    out[:, t_neg - 1] = norm * p * np.exp(-1j * q * phis)
        return out

    # -- pattern gains ------------------------------------------------------

    def gain(self, coeffs, theta: float, phi: float) -> complex:
        """Synthesized pattern gain b(theta, phi)^T c (unconjugated)."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (self.size,):
            raise ValueError(f"coefficient vector must have length {self.size}")
        return complex(self.eval(theta, phi) @ coeffs)

    def effective_gain(self, coeffs, theta: float, phi: float) -> complex:
        """Gain as seen by the channel/metric chain: c^H b(theta, phi).

        This is the conjugate-coefficient form produced when a block-diagonal
        pattern matrix is applied to the element-domain channel; it is the
        quantity the optimizers shape and the beampattern export reports.
        """
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (self.size,):
            raise ValueError(f"coefficient vector must have length {self.size}")
        return complex(np.conj(coeffs) @ self.eval(theta, phi))
