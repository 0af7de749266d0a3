"""Channel-gain determination run by the neutral accounting agent.

Before the allocation game starts, every transmitter/receiver pair exchanges
pilot signals at an agreed power, both sides report the power they received,
and the accountant cross-checks the two reports.  Physical reciprocity makes
the two directions of one pair see the same gain, so honest reports always
match; if the reports of a pair differ on any band, both members of the pair
are barred from the game.  The cross-check catches any one-sided deviation
but is intentionally blind to a pair distorting symmetrically; that limit is
part of the protocol, not a bug here.

The simulation is sequential and deterministic: pairs in lexicographic
order, bands inner-most, exactly one report record per (pair, band).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence, Union

from .errors import ConfigError, DegenerateScenarioError
from .model import ScenarioConfig, SirLogUtility, as_fraction, build_catalog


@dataclass(frozen=True)
class Honest:
    """Sends the agreed pilot and reports measurements unchanged."""


@dataclass(frozen=True)
class PilotCheat:
    """Scales the transmitted pilot per band; reports honestly."""

    scale: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "scale", tuple(as_fraction(s) for s in self.scale))
        if any(s < 0 for s in self.scale):
            raise ConfigError("pilot scale factors must be non-negative")


@dataclass(frozen=True)
class ReportCheat:
    """Distorts the reported received power per band; pilots are honest."""

    mode: str  # "additive" or "multiplicative"
    amount: tuple[Fraction, ...]

    def __post_init__(self):
        if self.mode not in ("additive", "multiplicative"):
            raise ConfigError(f"report cheat mode must be additive|multiplicative, got {self.mode!r}")
        object.__setattr__(self, "amount", tuple(as_fraction(a) for a in self.amount))


AgentBehavior = Union[Honest, PilotCheat, ReportCheat]


@dataclass(frozen=True)
class GainReport:
    """Both sides' received-power reports for one pair and band."""

    transmitter: int
    receiver: int
    band: int
    reported_by_tx: Fraction
    reported_by_rx: Fraction

    def __post_init__(self):
        if self.transmitter == self.receiver:
            raise ValueError("a pair needs two distinct users")

    @property
    def consistent(self) -> bool:
        return self.reported_by_tx == self.reported_by_rx


@dataclass(frozen=True)
class MeasurementResult:
    estimated_gains: tuple[tuple[tuple[Fraction, ...], ...], ...]
    excluded: frozenset[int]
    mismatched_pairs: tuple[tuple[int, int], ...]
    reports: tuple[GainReport, ...]


def _pilot_scale(behavior: AgentBehavior, band: int) -> Fraction:
    if isinstance(behavior, PilotCheat):
        return behavior.scale[band]
    return Fraction(1)


def _reported(behavior: AgentBehavior, band: int, measured: Fraction) -> Fraction:
    if isinstance(behavior, ReportCheat):
        if behavior.mode == "additive":
            return measured + behavior.amount[band]
        return measured * behavior.amount[band]
    return measured


def run_measurement(
    true_gains,
    behaviors: Sequence[AgentBehavior],
    pilot_power,
    config: ScenarioConfig,
    tolerance=Fraction(0),
) -> MeasurementResult:
    """Simulate the pilot/report protocol and apply the exclusion rule.

    `true_gains[tx][rx][band]` is the ground-truth gain; by reciprocity the
    reverse pilot of a pair travels through the same gain.  Estimated cross
    gains come from the receiving side's report divided by the agreed pilot
    power; own-pair gains are each user's own measurement and are taken as
    the true diagonal.  Reports are compared exactly by default; `tolerance`
    exists for runs on inexact inputs.
    """
    users = config.num_users
    bands = config.num_bands
    pilot = as_fraction(pilot_power)
    if pilot <= 0:
        raise ConfigError("pilot power must be strictly positive")
    tolerance = as_fraction(tolerance)
    if len(behaviors) != users:
        raise ConfigError(f"need one behavior per user ({users}), got {len(behaviors)}")
    gains = tuple(
        tuple(tuple(as_fraction(g) for g in row) for row in plane) for plane in true_gains
    )

    estimated = [[[Fraction(0)] * bands for _ in range(users)] for _ in range(users)]
    for user in range(users):
        for band in range(bands):
            estimated[user][user][band] = gains[user][user][band]

    reports: list[GainReport] = []
    mismatched: list[tuple[int, int]] = []
    excluded: set[int] = set()
    for tx in range(users):
        for rx in range(users):
            if rx == tx:
                continue
            gain_row = gains[tx][rx]
            pair_consistent = True
            for band in range(bands):
                forward = gain_row[band] * _pilot_scale(behaviors[tx], band) * pilot
                by_rx = _reported(behaviors[rx], band, forward)
                reverse = gain_row[band] * _pilot_scale(behaviors[rx], band) * pilot
                by_tx = _reported(behaviors[tx], band, reverse)
                reports.append(GainReport(tx, rx, band, by_tx, by_rx))
                estimated[tx][rx][band] = by_rx / pilot
                if abs(by_tx - by_rx) > tolerance:
                    pair_consistent = False
            if not pair_consistent:
                mismatched.append((tx, rx))
                excluded.update((tx, rx))

    frozen = tuple(tuple(tuple(row) for row in plane) for plane in estimated)
    return MeasurementResult(frozen, frozenset(excluded), tuple(mismatched), tuple(reports))


def exclusion_consequence(excluded, config: ScenarioConfig) -> ScenarioConfig:
    """Restrict a scenario to the users that survived the cross-check.

    Gains are sliced, SIR utilities are renumbered, and value tables are
    re-indexed through the reduced catalog by pinning every excluded user to
    the all-zero bundle (a barred user transmits nothing).  Budget, levels
    and noise stay as they were.
    """
    excluded = frozenset(excluded)
    unknown = excluded - set(range(config.num_users))
    if unknown:
        raise ValueError(f"excluded users {sorted(unknown)} are not in the scenario")
    if not excluded:
        return config
    remaining = [u for u in range(config.num_users) if u not in excluded]
    if len(remaining) < 3:
        raise DegenerateScenarioError(
            f"only {len(remaining)} users remain after exclusion; at least 3 are needed"
        )

    gains = tuple(
        tuple(config.gains[tx][rx] for rx in remaining) for tx in remaining
    )
    old_catalog = config.catalog
    zero_bundle = tuple(Fraction(0) for _ in range(config.num_bands))
    reduced_catalog = None
    utilities = []
    for new_user, old_user in enumerate(remaining):
        spec = config.utilities[old_user]
        if isinstance(spec, SirLogUtility):
            utilities.append(replace(spec, user=new_user))
            continue
        if reduced_catalog is None:
            reduced_catalog = build_catalog(len(remaining), old_catalog.bundles)
        values = [spec.values[0]]
        for index in range(1, reduced_catalog.size + 1):
            reduced_profile = reduced_catalog.profile_of(index)
            embedded = []
            position = 0
            for user in range(config.num_users):
                if user in excluded:
                    embedded.append(zero_bundle)
                else:
                    embedded.append(reduced_profile[position])
                    position += 1
            values.append(spec.values[old_catalog.index_of(tuple(embedded))])
        utilities.append(replace(spec, values=tuple(values)))

    return ScenarioConfig(
        num_users=len(remaining),
        num_bands=config.num_bands,
        quant_levels=config.quant_levels,
        power_budget=config.power_budget,
        noise_half_density=config.noise_half_density,
        gains=gains,
        utilities=tuple(utilities),
    )
