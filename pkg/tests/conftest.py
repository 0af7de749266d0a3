"""Shared builders: a tiny 8-profile scenario for fast checks, plus the desk one."""

from fractions import Fraction

import pytest

from spectrumshare import MessageGrid, ScenarioConfig, TableUtility
from spectrumshare.measurement import Honest
from spectrumshare.presets import desk_config, desk_scenario
from spectrumshare.scenario import Scenario


def peak_table(size: int, peak: int, scale=1) -> TableUtility:
    """Strictly single-peaked value table; entry 0 is the null allocation."""
    values = [Fraction(0)]
    for index in range(1, size + 1):
        values.append(Fraction(scale) * (size + 24 - abs(index - peak)))
    return TableUtility(tuple(values))


def uniform_gains(num_users: int, num_bands: int, direct=Fraction(1), cross=Fraction(1, 2)):
    return tuple(
        tuple(
            tuple(direct if tx == rx else cross for _ in range(num_bands))
            for rx in range(num_users)
        )
        for tx in range(num_users)
    )


def small_config(peaks=(4, 4, 4), scales=(1, 2, 3), utilities=None) -> ScenarioConfig:
    """Three users, one band, levels {0,1}: a 2-bundle, 8-profile catalog."""
    if utilities is None:
        utilities = tuple(peak_table(8, p, s) for p, s in zip(peaks, scales))
    return ScenarioConfig(
        num_users=3,
        num_bands=1,
        quant_levels=(Fraction(0), Fraction(1)),
        power_budget=Fraction(1),
        noise_half_density=Fraction(1),
        gains=uniform_gains(3, 1),
        utilities=utilities,
    )


def small_scenario(config: ScenarioConfig | None = None, seed: int = 7) -> Scenario:
    config = config if config is not None else small_config()
    return Scenario(
        config=config,
        pi_step=Fraction(1, 4),
        pi_max=Fraction(3),
        pilot_power=Fraction(1),
        behaviors=tuple(Honest() for _ in range(config.num_users)),
        seed=seed,
        digest="",
    )


@pytest.fixture(scope="session")
def small():
    return small_config()


@pytest.fixture(scope="session")
def small_grid(small):
    return MessageGrid.standard(small.catalog.size, small.num_users)


@pytest.fixture(scope="session")
def desk():
    return desk_config()


@pytest.fixture(scope="session")
def desk_grid(desk):
    return MessageGrid.standard(desk.catalog.size, desk.num_users)


@pytest.fixture(scope="session")
def desk_scn():
    return desk_scenario()
