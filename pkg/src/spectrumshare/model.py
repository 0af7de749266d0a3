"""Physical and economic model of the shared-spectrum allocation game.

Users split a fixed power budget across frequency bands, drawing per-band
power from a finite quantization set.  Every joint choice of bundles (one
bundle per user) is a "profile"; profiles are enumerated once and addressed
by a catalog index so that users can talk about them by number.  Index 0 is
reserved for "no feasible allocation".

All powers, gains and taxes are exact rationals (`fractions.Fraction`);
floating point enters only when a logarithmic utility is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterator, Sequence, Union

from .errors import ConfigError

PowerBundle = tuple[Fraction, ...]

# Catalog indices must stay addressable as signed 64-bit integers; anything
# larger is out of desk scale and almost certainly a misconfiguration.
MAX_CATALOG_SIZE = 2**63 - 1


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions, decimal or "p/q" strings to an exact rational.

    Floats are converted through their shortest decimal representation, so a
    literal 0.1 means 1/10 rather than the underlying binary float.
    """
    if isinstance(value, bool):
        raise ConfigError(f"expected a rational number, got {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse rational from {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"expected a finite number, got {value!r}")
        return Fraction(repr(value))
    raise ConfigError(f"expected a rational number, got {value!r}")


def _validate_quant_levels(quant_levels) -> tuple[Fraction, ...]:
    levels = tuple(as_fraction(q) for q in quant_levels)
    if not levels:
        raise ConfigError("quantization set must not be empty")
    if levels[0] != 0:
        raise ConfigError("quantization set must start with the zero level")
    for lo, hi in zip(levels, levels[1:]):
        if hi <= lo:
            raise ConfigError("quantization levels must be strictly increasing")
    return levels


def enumerate_bundles(quant_levels, num_bands: int, power_budget) -> tuple[PowerBundle, ...]:
    """All per-user power bundles: vectors in Q^num_bands with sum <= budget.

    Bundles are ordered lexicographically with the quantization levels
    ascending, which fixes the catalog ordering once and for all.
    """
    levels = _validate_quant_levels(quant_levels)
    if num_bands < 1:
        raise ConfigError("num_bands must be at least 1")
    if len(levels) ** num_bands > MAX_CATALOG_SIZE:
        raise ConfigError(
            f"bundle space {len(levels)}^{num_bands} exceeds the supported "
            f"enumeration bound {MAX_CATALOG_SIZE}"
        )
    budget = as_fraction(power_budget)
    if budget < 0:
        raise ConfigError("power budget must be non-negative")
    return tuple(b for b in product(levels, repeat=num_bands) if sum(b) <= budget)


@dataclass(frozen=True)
class ProfileCatalog:
    """Bijection between indices {1..size} and joint power profiles.

    A profile assigns one bundle to each user.  Profiles are ordered
    lexicographically by per-user bundle position (user 0 most significant),
    so decoding and encoding are O(num_users) mixed-radix arithmetic.  Index
    0 never decodes: it denotes "no feasible allocation".
    """

    bundles: tuple[PowerBundle, ...]
    num_users: int

    def __post_init__(self):
        if not self.bundles:
            raise ConfigError("catalog needs at least one bundle")
        if self.num_users < 1:
            raise ConfigError("catalog needs at least one user")
        size = len(self.bundles) ** self.num_users
        if size > MAX_CATALOG_SIZE:
            raise ConfigError(
                f"catalog would hold {len(self.bundles)}^{self.num_users} = {size} "
                f"profiles; indices are limited to {MAX_CATALOG_SIZE}"
            )

    @property
    def size(self) -> int:
        """Number of feasible profiles (the largest valid index)."""
        return len(self.bundles) ** self.num_users

    @cached_property
    def _position(self) -> dict[PowerBundle, int]:
        return {bundle: i for i, bundle in enumerate(self.bundles)}

    def profile_of(self, index: int) -> tuple[PowerBundle, ...]:
        """Decode a 1-based catalog index into a per-user bundle tuple."""
        if not 1 <= index <= self.size:
            raise ValueError(f"catalog index {index} outside 1..{self.size}")
        base = len(self.bundles)
        rest = index - 1
        digits = []
        for _ in range(self.num_users):
            rest, digit = divmod(rest, base)
            digits.append(digit)
        return tuple(self.bundles[d] for d in reversed(digits))

    def index_of(self, profile: Sequence[PowerBundle]) -> int:
        """Encode a per-user bundle tuple into its 1-based catalog index."""
        if len(profile) != self.num_users:
            raise ValueError(
                f"profile has {len(profile)} bundles, catalog expects {self.num_users}"
            )
        base = len(self.bundles)
        index = 0
        for bundle in profile:
            try:
                position = self._position[tuple(bundle)]
            except KeyError:
                raise ValueError(f"bundle {bundle!r} is not in the catalog") from None
            index = index * base + position
        return index + 1

    def iter_profiles(self) -> Iterator[tuple[PowerBundle, ...]]:
        for index in range(1, self.size + 1):
            yield self.profile_of(index)


def build_catalog(num_users: int, bundles: Sequence[PowerBundle]) -> ProfileCatalog:
    """Build the shared profile catalog for `num_users` over `bundles`."""
    return ProfileCatalog(tuple(tuple(b) for b in bundles), num_users)


@dataclass(frozen=True)
class TableUtility:
    """Quasi-linear utility from a value table: V(k, t) = values[k] - t.

    `values` has one entry per catalog index, 0 through catalog size; entry 0
    is the no-allocation value and is normalized to zero.
    """

    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_fraction(v) for v in self.values))
        if not self.values or self.values[0] != 0:
            raise ConfigError("utility table must start with value 0 for the null allocation")
        if any(v < 0 for v in self.values):
            raise ConfigError("utility table values must be non-negative")


@dataclass(frozen=True)
class SirLogUtility:
    """Rate-style utility: V(k, t) = sum_b weights[b] * log(1 + SIR_b) - t.

    The signal-to-interference ratios depend on which user is evaluating, so
    the spec carries its owner's index.
    """

    user: int
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(as_fraction(w) for w in self.weights))
        if any(w < 0 for w in self.weights):
            raise ConfigError("SIR utility weights must be non-negative")


@dataclass(frozen=True)
class CubicTaxUtility:
    """Non-quasi-linear utility: V(k, t) = values[k] - beta * t**3, beta > 0."""

    values: tuple[Fraction, ...]
    beta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(as_fraction(v) for v in self.values))
        object.__setattr__(self, "beta", as_fraction(self.beta))
        if not self.values or self.values[0] != 0:
            raise ConfigError("utility table must start with value 0 for the null allocation")
        if any(v < 0 for v in self.values):
            raise ConfigError("utility table values must be non-negative")
        if self.beta <= 0:
            raise ConfigError("beta must be strictly positive")


UtilitySpec = Union[TableUtility, SirLogUtility, CubicTaxUtility]


@dataclass(frozen=True)
class ScenarioConfig:
    """Immutable description of one allocation session.

    `gains[tx][rx][band]` is the channel gain from user tx's transmitter to
    user rx's receiver on that band.  At least three users are required: the
    price charged to a user is built from the two users after it in the
    cycle, and with fewer than three users a user would end up controlling
    its own price.
    """

    num_users: int
    num_bands: int
    quant_levels: tuple[Fraction, ...]
    power_budget: Fraction
    noise_half_density: Fraction
    gains: tuple[tuple[tuple[Fraction, ...], ...], ...]
    utilities: tuple[UtilitySpec, ...]

    def __post_init__(self):
        if self.num_users < 3:
            raise ConfigError(
                f"at least 3 users are required, got {self.num_users}: the cyclic "
                "price structure degenerates below that"
            )
        object.__setattr__(self, "quant_levels", _validate_quant_levels(self.quant_levels))
        object.__setattr__(self, "power_budget", as_fraction(self.power_budget))
        object.__setattr__(self, "noise_half_density", as_fraction(self.noise_half_density))
        if self.noise_half_density <= 0:
            raise ConfigError("noise_half_density must be strictly positive")

        gains = tuple(
            tuple(tuple(as_fraction(g) for g in row) for row in plane) for plane in self.gains
        )
        object.__setattr__(self, "gains", gains)
        if len(gains) != self.num_users or any(len(plane) != self.num_users for plane in gains):
            raise ConfigError("gains tensor must be num_users x num_users x num_bands")
        for plane in gains:
            for row in plane:
                if len(row) != self.num_bands:
                    raise ConfigError("gains tensor must be num_users x num_users x num_bands")
                if any(g < 0 for g in row):
                    raise ConfigError("channel gains must be non-negative")

        object.__setattr__(self, "utilities", tuple(self.utilities))
        if len(self.utilities) != self.num_users:
            raise ConfigError(
                f"expected one utility per user ({self.num_users}), got {len(self.utilities)}"
            )
        size = self.catalog.size
        for user, spec in enumerate(self.utilities):
            if isinstance(spec, (TableUtility, CubicTaxUtility)):
                if len(spec.values) != size + 1:
                    raise ConfigError(
                        f"utilities[{user}]: table needs {size + 1} entries "
                        f"(indices 0..{size}), got {len(spec.values)}"
                    )
            elif isinstance(spec, SirLogUtility):
                if spec.user != user:
                    raise ConfigError(
                        f"utilities[{user}]: SIR utility is owned by user {spec.user}"
                    )
                if len(spec.weights) != self.num_bands:
                    raise ConfigError(
                        f"utilities[{user}]: need {self.num_bands} band weights, "
                        f"got {len(spec.weights)}"
                    )
            else:
                raise ConfigError(f"utilities[{user}]: unknown utility spec {spec!r}")

    @cached_property
    def bundles(self) -> tuple[PowerBundle, ...]:
        return enumerate_bundles(self.quant_levels, self.num_bands, self.power_budget)

    @cached_property
    def catalog(self) -> ProfileCatalog:
        return build_catalog(self.num_users, self.bundles)


def sir(catalog_index: int, user: int, band: int, config: ScenarioConfig) -> Fraction:
    """Signal-to-interference ratio of `user` on `band` under a profile.

        gain[user][user][band] * p_user
        -------------------------------------------------
        noise_half_density + sum_{j != user} gain[j][user][band] * p_j

    Undefined for index 0 (nobody transmits under the null allocation).
    """
    catalog = config.catalog
    if not 1 <= catalog_index <= catalog.size:
        raise ValueError(f"SIR undefined for catalog index {catalog_index}")
    if not 0 <= user < config.num_users:
        raise ValueError(f"user {user} outside 0..{config.num_users - 1}")
    if not 0 <= band < config.num_bands:
        raise ValueError(f"band {band} outside 0..{config.num_bands - 1}")
    profile = catalog.profile_of(catalog_index)
    signal = config.gains[user][user][band] * profile[user][band]
    interference = config.noise_half_density
    for j in range(config.num_users):
        if j != user:
            interference += config.gains[j][user][band] * profile[j][band]
    return signal / interference


def utility_eval(spec: UtilitySpec, allocation: int, tax, config: ScenarioConfig):
    """Evaluate a utility spec at (allocation index, tax).

    Table-based variants return exact rationals; the SIR variant returns a
    float.  Allocation 0 always means "no allocation", worth 0 before taxes.
    """
    size = config.catalog.size
    if not 0 <= allocation <= size:
        raise ValueError(f"allocation index {allocation} outside 0..{size}")
    tax = as_fraction(tax)
    if isinstance(spec, TableUtility):
        return spec.values[allocation] - tax
    if isinstance(spec, CubicTaxUtility):
        return spec.values[allocation] - spec.beta * tax**3
    if isinstance(spec, SirLogUtility):
        total = 0.0
        if allocation != 0:
            for band, weight in enumerate(spec.weights):
                total += float(weight) * math.log1p(float(sir(allocation, spec.user, band, config)))
        return total - float(tax)
    raise ConfigError(f"unknown utility spec {spec!r}")


def utility_tolerance(spec: UtilitySpec):
    """Comparison slack for utilities: exact for rational variants, 1e-12 for float."""
    return 1e-12 if isinstance(spec, SirLogUtility) else Fraction(0)
