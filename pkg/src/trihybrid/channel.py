"""Far-field channels for a planar array of reconfigurable antennas.

The element-domain ("EM") channel of an entity stacks, antenna-major, the
product of the pattern-domain response at the entity's angle with the path
gain and the geometric steering phase:

    h_em[(n - 1) * D + t] = response_t(theta, phi) * alpha * a_n(theta, phi)

where ``D`` is the pattern-domain dimension (harmonic window length, library
size, or 1 for a fixed antenna).  Applying the block-diagonal pattern matrix
``F_em^H`` contracts each block with that antenna's coefficient vector and
yields the effective per-antenna channel used by all metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .harmonics import SphericalHarmonicBasis

__all__ = [
    "steering_vector",
    "comm_path_gain",
    "sensing_gain",
    "CommUser",
    "PointEntity",
    "Scenario",
    "EmChannelSet",
    "build_comm_em_channel",
    "build_sensing_em_channels",
    "assemble_F_EM",
    "apply_pattern_matrix",
    "fixed_receive_combiner",
    "build_channel_set",
    "generate_scenario",
]


def steering_vector(theta, phi, nx: int, ny: int, dx: float, dy: float, wavelength: float):
    """Uniform-planar-array response vector of length nx * ny.

    Kronecker product of the two linear-phase factors: entry ``ix * ny + iy``
    carries ``exp(-j 2 pi / lambda * (ix dx sin(theta) cos(phi) +
    iy dy sin(theta) sin(phi)))``.
    """
    if nx < 1 or ny < 1 or dx <= 0 or dy <= 0 or wavelength <= 0:
        raise ValueError("array geometry parameters must be positive")
    k = 2.0 * math.pi / wavelength
    ux = np.exp(-1j * k * np.arange(nx) * dx * math.sin(theta) * math.cos(phi))
    uy = np.exp(-1j * k * np.arange(ny) * dy * math.sin(theta) * math.sin(phi))
    return np.kron(ux, uy)


def comm_path_gain(dist: float, pathloss_exponent: float, wavelength: float, psi: float) -> complex:
    """One-way complex path gain sqrt(lambda^2 / ((4 pi)^2 r^sigma)) e^{j psi}."""
    if dist <= 0:
        raise ValueError("propagation distance must be positive")
    amp = math.sqrt(wavelength**2 / ((4.0 * math.pi) ** 2 * dist**pathloss_exponent))
    return amp * complex(math.cos(psi), math.sin(psi))


def sensing_gain(dist: float, rcs: float, wavelength: float, psi: float) -> complex:
    """Round-trip gain sqrt(lambda^2 sigma_rcs / ((4 pi)^3 r^4)) e^{j psi}."""
    if dist <= 0 or rcs <= 0:
        raise ValueError("distance and radar cross-section must be positive")
    amp = math.sqrt(wavelength**2 * rcs / ((4.0 * math.pi) ** 3 * dist**4))
    return amp * complex(math.cos(psi), math.sin(psi))


@dataclass(frozen=True)
class CommUser:
    """Multipath geometry of one communication user (arrays of length L)."""

    theta: np.ndarray
    phi: np.ndarray
    dist: np.ndarray
    psi: np.ndarray

    @property
    def n_paths(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class PointEntity:
    """Point target or scatterer with a radar cross-section."""

    theta: float
    phi: float
    dist: float
    psi: float
    rcs: float


@dataclass(frozen=True)
class Scenario:
    """Concrete geometry, entity placements, and link-budget parameters."""

    nt_x: int
    nt_y: int
    nr_x: int
    nr_y: int
    dx: float
    dy: float
    wavelength: float
    users: tuple[CommUser, ...]
    targets: tuple[PointEntity, ...]
    scatterers: tuple[PointEntity, ...]
    pathloss_exponent: float
    noise_power: float  # watts
    power_budget: float  # watts
    beta_tilde: float
    n_rf: int
    truncation_degree: int = 2
    seed: int | None = None

    def __post_init__(self):
        if self.dx <= 0 or self.dy <= 0 or self.wavelength <= 0:
            raise ValueError("geometry lengths must be positive")
        if self.noise_power <= 0 or self.power_budget <= 0:
            raise ValueError("noise and power budget must be positive")
        if not 0.0 <= self.beta_tilde <= 1.0:
            raise ValueError("beta_tilde must lie in [0, 1]")

    @property
    def n_t(self) -> int:
        return self.nt_x * self.nt_y

    @property
    def n_r(self) -> int:
        return self.nr_x * self.nr_y

    @property
    def beta(self) -> float:
        # trade-off weights sum to one
        return 1.0 - self.beta_tilde

    def tx_steering(self, theta, phi):
        return steering_vector(theta, phi, self.nt_x, self.nt_y, self.dx, self.dy, self.wavelength)

    def rx_steering(self, theta, phi):
        return steering_vector(theta, phi, self.nr_x, self.nr_y, self.dx, self.dy, self.wavelength)


def build_comm_em_channel(scenario: Scenario, user: CommUser, domain) -> np.ndarray:
    """Element-domain downlink channel of one user, length N_T * D.

    Sum over the user's paths of the antenna-major stacking of
    ``response(theta_l, phi_l) * alpha_l * a_n``, scaled by sqrt(N_T / L).
    """
    if user.n_paths == 0:
        raise ValueError("user must have at least one propagation path")
    n_t = scenario.n_t
    acc = np.zeros(n_t * domain.dim, dtype=complex)
    for l in range(user.n_paths):
        alpha = comm_path_gain(
            user.dist[l], scenario.pathloss_exponent, scenario.wavelength, user.psi[l]
        )
        v = domain.response(user.theta[l], user.phi[l])
        a = scenario.tx_steering(user.theta[l], user.phi[l])
        acc += alpha * np.kron(a, v)
    return math.sqrt(n_t / user.n_paths) * acc


def build_sensing_em_channels(
    scenario: Scenario, entity: PointEntity, domain, rx_basis: SphericalHarmonicBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Forward (transmit-side) and backward (receive-side) EM channels.

    Both carry the principal square root of the round-trip gain so their
    outer product reconstructs the rank-1 round-trip channel.
    """
    alpha = sensing_gain(entity.dist, entity.rcs, scenario.wavelength, entity.psi)
    sq = np.sqrt(complex(alpha))
    v_tx = domain.response(entity.theta, entity.phi)
    a_tx = scenario.tx_steering(entity.theta, entity.phi)
    forward = sq * np.kron(a_tx, v_tx)
    v_rx = rx_basis.eval(entity.theta, entity.phi)
    a_rx = scenario.rx_steering(entity.theta, entity.phi)
    backward = sq * np.kron(a_rx, v_rx)
    return forward, backward


def assemble_F_EM(coeffs: np.ndarray) -> np.ndarray:
    """Block-diagonal pattern matrix; column n holds antenna n's coefficients."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim != 2:
        raise ValueError("coeffs must be a (n_antennas, dim) array")
    n, d = coeffs.shape
    f_em = np.zeros((n * d, n), dtype=complex)
    for i in range(n):
        f_em[i * d : (i + 1) * d, i] = coeffs[i]
    return f_em


def apply_pattern_matrix(h_em: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Effective per-antenna channel F_em^H h_em without forming F_em.

    ``h_em`` may be a single EM vector or a stack of them (last axis
    N_T * D); coeffs is (N_T, D).
    """
    n, d = coeffs.shape
    blocks = np.asarray(h_em).reshape(*np.asarray(h_em).shape[:-1], n, d)
    return np.einsum("nd,...nd->...n", np.conj(coeffs), blocks)


def fixed_receive_combiner(rx_channels: np.ndarray, i: int, noise_power: float):
    """Scalar sensing weights under a matched-filter receive combiner.

    ``rx_channels`` holds the effective backward channels of all entities
    (targets first, then scatterers), one row each.  The combiner for target
    ``i`` is the unit-norm matched filter toward its own backward channel, so
    the self weight is the squared channel norm and the cross weights follow
    from projections.  Returns (omega_row, sigma_tilde_sq).
    """
    h_i = rx_channels[i]
    norm = np.linalg.norm(h_i)
    if norm == 0.0:
        raise ValueError(f"backward channel of target {i} is identically zero")
    w = h_i / norm
    omega = np.abs(rx_channels @ np.conj(w)) ** 2
    return omega, noise_power  # ||w|| = 1, so the effective noise is unchanged


@dataclass
class EmChannelSet:
    """All element-domain channels and sensing weights for one scenario.

    Entities are indexed globally: targets 0..N_Tar-1 then scatterers.
    ``omega[i, e]`` is the combiner weight of entity ``e`` under target
    ``i``'s matched filter; the interference set of target ``i`` is every
    entity except ``i`` itself.
    """

    scenario: Scenario
    domain: object
    h_comm: np.ndarray  # (K, N_T * D)
    h_entities: np.ndarray  # (N_Tar + N_Scat, N_T * D) forward channels
    rx_entities: np.ndarray  # (N_Tar + N_Scat, N_R) effective backward channels
    omega: np.ndarray  # (N_Tar, N_Tar + N_Scat)
    sigma_tilde_sq: np.ndarray  # (N_Tar,)

    @property
    def n_users(self) -> int:
        return self.h_comm.shape[0]

    @property
    def n_targets(self) -> int:
        return len(self.scenario.targets)

    @property
    def n_entities(self) -> int:
        return self.h_entities.shape[0]

    def interference_indices(self, i: int) -> np.ndarray:
        """Entity indices interfering with target i: other targets + scatterers."""
        return np.asarray([e for e in range(self.n_entities) if e != i], dtype=int)

    def normalized_weights(self, i: int) -> tuple[float, np.ndarray]:
        """Sensing weights divided by the effective noise power.

        Expressing the SCNR as (omega_i/sigma~^2) C / ((omega_k/sigma~^2) D + 1)
        leaves its value unchanged but keeps the fractional-programming
        surrogates on the same numeric scale as the communication terms.
        """
        return (
            float(self.omega[i, i] / self.sigma_tilde_sq[i]),
            self.omega[i] / self.sigma_tilde_sq[i],
        )


def build_channel_set(scenario: Scenario, domain) -> EmChannelSet:
    """Construct every EM channel and the fixed receive-side weights.

    The receive array uses the same harmonic window as the transmit side
    with all pattern energy on the constant harmonic (isotropic elements),
    and a unit-norm matched filter per target.
    """
    rx_basis = SphericalHarmonicBasis(scenario.truncation_degree)
    h_comm = np.stack(
        [build_comm_em_channel(scenario, user, domain) for user in scenario.users]
    ) if scenario.users else np.zeros((0, scenario.n_t * domain.dim), dtype=complex)

    entities = list(scenario.targets) + list(scenario.scatterers)
    if not scenario.targets:
        raise ValueError("scenario must contain at least one sensing target")
    fwd, bwd_full = [], []
    for entity in entities:
        f, b = build_sensing_em_channels(scenario, entity, domain, rx_basis)
        fwd.append(f)
        bwd_full.append(b)
    h_entities = np.stack(fwd)

    # fixed receive EM stage: isotropic coefficients contract each receive
    # block to its constant-harmonic component
    iso = np.zeros((scenario.n_r, rx_basis.size), dtype=complex)
    iso[:, 0] = 1.0
    rx_entities = np.stack([apply_pattern_matrix(b, iso) for b in bwd_full])

    n_tar = len(scenario.targets)
    omega = np.empty((n_tar, len(entities)))
    sigma_tilde = np.empty(n_tar)
    for i in range(n_tar):
        omega[i], sigma_tilde[i] = fixed_receive_combiner(rx_entities, i, scenario.noise_power)
    return EmChannelSet(scenario, domain, h_comm, h_entities, rx_entities, omega, sigma_tilde)


def generate_scenario(config, seed: int) -> Scenario:
    """Randomized entity placement, deterministic under (config, seed).

    Angles are drawn uniformly over the visible hemisphere
    (theta in [0, pi/2], phi in [0, 2 pi)); distances, cross-sections, and
    phase shifts uniformly over the configured ranges.
    """
    rng = np.random.default_rng(seed)

    def draw_user() -> CommUser:
        n = config.paths_per_cu
        return CommUser(
            theta=rng.uniform(0.0, math.pi / 2.0, n),
            phi=rng.uniform(0.0, 2.0 * math.pi, n),
            dist=rng.uniform(*config.cu_range_m, n),
            psi=rng.uniform(0.0, 2.0 * math.pi, n),
        )

    def draw_entity(dist_range, rcs_range) -> PointEntity:
        return PointEntity(
            theta=float(rng.uniform(0.0, math.pi / 2.0)),
            phi=float(rng.uniform(0.0, 2.0 * math.pi)),
            dist=float(rng.uniform(*dist_range)),
            psi=float(rng.uniform(0.0, 2.0 * math.pi)),
            rcs=float(rng.uniform(*rcs_range)),
        )

    users = tuple(draw_user() for _ in range(config.n_cu))
    targets = tuple(
        draw_entity(config.target_range_m, config.target_rcs_m2) for _ in range(config.n_tar)
    )
    scatterers = tuple(
        draw_entity(config.scatterer_range_m, config.scatterer_rcs_m2)
        for _ in range(config.n_scat)
    )
    return Scenario(
        nt_x=config.nt_x,
        nt_y=config.nt_y,
        nr_x=config.nr_x,
        nr_y=config.nr_y,
        dx=config.spacing_m,
        dy=config.spacing_m,
        wavelength=config.wavelength,
        users=users,
        targets=targets,
        scatterers=scatterers,
        pathloss_exponent=config.pathloss_exponent,
        noise_power=config.noise_power,
        power_budget=config.power_budget,
        beta_tilde=config.beta_tilde,
        n_rf=config.n_rf,
        truncation_degree=config.truncation_degree,
        seed=seed,
    )
