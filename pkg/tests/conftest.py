import math

import numpy as np
import pytest

from trihybrid.channel import CommUser, PointEntity, Scenario


def make_scenario(
    nt_x=4,
    nt_y=4,
    nr_x=4,
    nr_y=4,
    n_cu=1,
    n_tar=1,
    n_scat=2,
    paths=5,
    beta_tilde=5e-3,
    n_rf=2,
    seed=0,
    power_dbm=-30.0,
    noise_dbm=-94.0,
    truncation_degree=2,
):
    """Hand-rolled random scenario with the desk-scale default link budget."""
    rng = np.random.default_rng(seed)

    def user():
        return CommUser(
            theta=rng.uniform(0, math.pi / 2, paths),
            phi=rng.uniform(0, 2 * math.pi, paths),
            dist=rng.uniform(10, 30, paths),
            psi=rng.uniform(0, 2 * math.pi, paths),
        )

    def entity():
        return PointEntity(
            theta=float(rng.uniform(0, math.pi / 2)),
            phi=float(rng.uniform(0, 2 * math.pi)),
            dist=float(rng.uniform(3, 7)),
            psi=float(rng.uniform(0, 2 * math.pi)),
            rcs=float(rng.uniform(10, 100)),
        )

    return Scenario(
        nt_x=nt_x,
        nt_y=nt_y,
        nr_x=nr_x,
        nr_y=nr_y,
        dx=0.005,
        dy=0.005,
        wavelength=0.1,
        users=tuple(user() for _ in range(n_cu)),
        targets=tuple(entity() for _ in range(n_tar)),
        scatterers=tuple(entity() for _ in range(n_scat)),
        pathloss_exponent=2.0,
        noise_power=10 ** (noise_dbm / 10) * 1e-3,
        power_budget=10 ** (power_dbm / 10) * 1e-3,
        beta_tilde=beta_tilde,
        n_rf=n_rf,
        truncation_degree=truncation_degree,
        seed=seed,
    )


@pytest.fixture
def scenario():
    return make_scenario()
