"""Equilibrium machinery: grid Nash checks, best-response dynamics, and the
two-way bridge between Nash equilibria of the game and Lindahl allocations.

Messages live in an infinite space (any integer proposal, any non-negative
price), so Nash certification at desk scale runs over a finite grid.  A
"grid NE" is a profile no user can improve by any unilateral grid deviation;
it is a necessary-condition certificate for a true NE, in the spirit of
treating stationarity under message exchange as the solution concept.

The standard grid always contains prices down to 0 and one proposal large
enough to force the rounded average out of the catalog no matter what the
others propose, because the classical deviations (drop your price to zero /
opt out into the null allocation) must be available to the checker.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import repeat
from typing import Iterable, Iterator, Optional

from .errors import ContractError, PriceScaleError, PriceSystemError
from .mechanism import (
    Message,
    MessageProfile,
    lindahl_price,
    nearest_integer,
    outcome,
    proposal_feasible,
    rounded_average,
    tax,
)
from .model import ProfileCatalog, ScenarioConfig, as_fraction, utility_eval, utility_tolerance


@dataclass(frozen=True)
class MessageGrid:
    """Finite slice of the message space used for search and certification."""

    n_values: tuple[int, ...]
    pi_values: tuple[Fraction, ...]

    def __post_init__(self):
        n_values = tuple(sorted(set(int(v) for v in self.n_values)))
        pi_values = tuple(sorted(set(as_fraction(v) for v in self.pi_values)))
        if not n_values or not pi_values:
            raise ValueError("grid needs at least one proposal and one price")
        if pi_values[0] < 0:
            raise ValueError("grid prices must be non-negative")
        object.__setattr__(self, "n_values", n_values)
        object.__setattr__(self, "pi_values", pi_values)

    @classmethod
    def standard(
        cls,
        catalog_size: int,
        num_users: int,
        pi_step=Fraction(1, 4),
        pi_max=Fraction(3),
    ) -> "MessageGrid":
        """Canonical certification grid.

        Proposals: -1, 0, every catalog index, and an escape value
        num_users * (catalog_size + 2).  The escape value makes the rounded
        average exceed the catalog against every grid choice of the others,
        so the opt-out deviation always exists.  Prices: 0 to pi_max in
        pi_step increments.
        """
        step = as_fraction(pi_step)
        top = as_fraction(pi_max)
        if step <= 0:
            raise ValueError("pi_step must be positive")
        if top < 0:
            raise ValueError("pi_max must be non-negative")
        escape = num_users * (catalog_size + 2)
        n_values = (-1, *range(catalog_size + 1), escape)
        pi_values = tuple(k * step for k in range(int(top / step) + 1))
        return cls(n_values, pi_values)

    def with_prices(self, prices: Iterable) -> "MessageGrid":
        """Same grid with extra price points (for externally solved prices)."""
        return MessageGrid(self.n_values, self.pi_values + tuple(as_fraction(p) for p in prices))

    def contains(self, message: Message) -> bool:
        return message.proposal in self.n_values and message.price in self.pi_values


def _require_on_grid(profile: MessageProfile, grid: MessageGrid) -> None:
    for user, message in enumerate(profile):
        if not grid.contains(message):
            raise ValueError(f"message of user {user} ({message}) is off the grid")


def _deviation_outcomes(
    user: int, profile: MessageProfile, grid: MessageGrid, config: ScenarioConfig
) -> Iterator[tuple[Message, Fraction | float]]:
    """Yield (message, utility) over user's grid messages, others held fixed.

    When the price cannot influence the outcome (infeasible average, or no
    proposal mismatch with the next user) the message is yielded once with
    the smallest grid price; any other price gives the identical outcome.
    """
    catalog = config.catalog
    size = catalog.size
    n_users = len(profile)
    spec = config.utilities[user]
    after = profile[(user + 1) % n_users]
    after2 = profile[(user + 2) % n_users]
    others_sum = sum(m.proposal for m in profile) - profile[user].proposal
    unit_price = Fraction(after.price - after2.price, n_users)
    credit = (after.proposal - after2.proposal) ** 2 * after.price
    pi_low = grid.pi_values[0]
    opt_out_utility = utility_eval(spec, 0, Fraction(0), config)
    for proposal in grid.n_values:
        average = nearest_integer(others_sum + proposal, n_users)
        if not 1 <= average <= size:
            yield Message(proposal, pi_low), opt_out_utility
            continue
        mismatch = (proposal - after.proposal) ** 2
        base_tax = average * unit_price - credit
        if mismatch == 0:
            yield Message(proposal, pi_low), utility_eval(spec, average, base_tax, config)
            continue
        for price in grid.pi_values:
            value = utility_eval(spec, average, base_tax + mismatch * price, config)
            yield Message(proposal, price), value


@dataclass(frozen=True)
class Deviation:
    """A unilateral move and the utility it would gain over the candidate."""

    user: int
    message: Message
    gain: Fraction | float


@dataclass(frozen=True)
class NEVerification:
    is_ne: bool
    best_deviation: Optional[Deviation]


def verify_ne(
    candidate: MessageProfile,
    grid: MessageGrid,
    config: ScenarioConfig,
    stop_at_first: bool = False,
) -> NEVerification:
    """Check that no user has a strictly improving unilateral grid deviation.

    Returns the most profitable violating deviation when the check fails
    (the first one found in scan order when `stop_at_first` is set).
    Improvement is exact for rational utilities and uses a 1e-12 slack for
    float-valued ones.
    """
    _require_on_grid(candidate, grid)
    base = outcome(candidate, config.catalog)
    best: Optional[Deviation] = None
    for user in range(len(candidate)):
        spec = config.utilities[user]
        slack = utility_tolerance(spec)
        held = utility_eval(spec, base.allocation, base.taxes[user], config)
        for message, value in _deviation_outcomes(user, candidate, grid, config):
            gain = value - held
            if gain > slack and (best is None or gain > best.gain):
                best = Deviation(user, message, gain)
                if stop_at_first:
                    return NEVerification(False, best)
    return NEVerification(best is None, best)


def _best_reply(
    user: int, profile: MessageProfile, grid: MessageGrid, config: ScenarioConfig
) -> tuple[Message, Fraction | float]:
    best_message = None
    best_value = None
    for message, value in _deviation_outcomes(user, profile, grid, config):
        if best_message is None or value > best_value:
            best_message, best_value = message, value
    return best_message, best_value


def best_response(
    user: int, profile: MessageProfile, grid: MessageGrid, config: ScenarioConfig
) -> Message:
    """Grid message maximizing user's utility against the rest of `profile`.

    `profile[user]` is ignored.  Ties resolve to the smallest (proposal,
    price) in grid order, so the result is deterministic.
    """
    return _best_reply(user, profile, grid, config)[0]


@dataclass(frozen=True)
class BRResult:
    """Outcome of round-robin best-response dynamics.

    `converged` means a full round changed nothing; the fixed point is then
    re-checked with `verify_ne` and the verdict stored in `verification`.
    Non-convergence after `max_rounds` is a report, not an error.
    """

    converged: bool
    rounds: int
    profile: MessageProfile
    verification: Optional[NEVerification]
    history: tuple[MessageProfile, ...]


def br_dynamics(
    start: MessageProfile,
    grid: MessageGrid,
    config: ScenarioConfig,
    max_rounds: int = 50,
) -> BRResult:
    """Round-robin best responses from `start` until a fixed point or cutoff.

    A user only moves when the best reply strictly improves on keeping the
    current message (with the usual float slack); when it moves it adopts
    the smallest best reply in grid order.  The inertia makes every verified
    NE an immediate fixed point instead of drifting along utility ties.
    """
    _require_on_grid(start, grid)
    catalog = config.catalog
    profile = tuple(start)
    history = [profile]
    converged = False
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        current = list(profile)
        changed = False
        for user in range(config.num_users):
            spec = config.utilities[user]
            slack = utility_tolerance(spec)
            held_outcome = outcome(tuple(current), catalog)
            held = utility_eval(spec, held_outcome.allocation, held_outcome.taxes[user], config)
            message, value = _best_reply(user, tuple(current), grid, config)
            if value > held + slack:
                current[user] = message
                changed = True
        if not changed:
            converged = True
            break
        profile = tuple(current)
        history.append(profile)
    verification = verify_ne(profile, grid, config) if converged else None
    return BRResult(converged, rounds, profile, verification, tuple(history))


def mismatch_penalties_vanish(profile: MessageProfile) -> bool:
    """True iff every user's (proposal gap to the next user)^2 * price is zero.

    This holds at every NE: a user facing a positive own penalty could drop
    its price to zero and strictly lower its tax.
    """
    n = len(profile)
    return all(
        (profile[i].proposal - profile[(i + 1) % n].proposal) ** 2 * profile[i].price == 0
        for i in range(n)
    )


def equilibrium_tax_form(profile: MessageProfile, catalog_size: int) -> tuple[Fraction, ...]:
    """Taxes via the reduced form (rounded average) x (personal price).

    Only valid when the mismatch penalties vanish; then it coincides exactly
    with the full tax rule, which is verified before returning.
    """
    if not mismatch_penalties_vanish(profile):
        raise ContractError("reduced tax form requires vanishing mismatch penalties")
    proposals = [m.proposal for m in profile]
    if proposal_feasible(proposals, catalog_size):
        average = rounded_average(proposals)
        reduced = tuple(average * lindahl_price(profile, user) for user in range(len(profile)))
    else:
        reduced = tuple(Fraction(0) for _ in profile)
    actual = tuple(tax(profile, user, catalog_size) for user in range(len(profile)))
    if reduced != actual:
        raise ContractError(
            f"reduced taxes {reduced} disagree with the tax rule {actual}"
        )
    return reduced


def individual_rationality(profile: MessageProfile, config: ScenarioConfig) -> tuple[bool, ...]:
    """Per user: is the outcome weakly preferred to the (0, 0) endowment?"""
    result = outcome(profile, config.catalog)
    flags = []
    for user, spec in enumerate(config.utilities):
        slack = utility_tolerance(spec)
        value = utility_eval(spec, result.allocation, result.taxes[user], config)
        endowment = utility_eval(spec, 0, Fraction(0), config)
        flags.append(value >= endowment - slack)
    return tuple(flags)


@dataclass(frozen=True)
class LindahlAllocation:
    """Allocation index, tax vector, and personalized price vector."""

    allocation: int
    taxes: tuple[Fraction, ...]
    prices: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "taxes", tuple(as_fraction(t) for t in self.taxes))
        object.__setattr__(self, "prices", tuple(as_fraction(p) for p in self.prices))
        if len(self.taxes) != len(self.prices):
            raise ValueError("taxes and prices must have one entry per user")


@dataclass(frozen=True)
class LindahlCertificate:
    """A candidate Lindahl allocation with its three condition verdicts.

    prices_balance: the personalized prices sum to zero (exact).
    taxes_balance: the taxes sum to zero (exact).
    user_best: per user, (allocation, tax) maximizes utility over every
        catalog profile priced at its personal price line.
    user_best_nonneg_tax: same check with alternatives restricted to
        non-negative taxes; recorded separately because equilibrium
        subsidies make negative taxes legitimate.
    """

    allocation: LindahlAllocation
    prices_balance: bool
    taxes_balance: bool
    user_best: tuple[bool, ...]
    user_best_nonneg_tax: tuple[bool, ...]

    @property
    def best_on_price_line(self) -> bool:
        return all(self.user_best)

    @property
    def all_conditions_hold(self) -> bool:
        return self.prices_balance and self.taxes_balance and self.best_on_price_line


def ne_to_lindahl(candidate: MessageProfile, config: ScenarioConfig) -> LindahlCertificate:
    """Read a Lindahl allocation off a message profile and check it.

    The price-line optimality check is exhaustive over the whole catalog, so
    at desk scale its verdict is ground truth, not a sample.
    """
    catalog = config.catalog
    result = outcome(candidate, catalog)
    prices = tuple(lindahl_price(candidate, user) for user in range(len(candidate)))
    allocation = LindahlAllocation(result.allocation, result.taxes, prices)
    prices_balance = sum(prices, Fraction(0)) == 0
    taxes_balance = sum(result.taxes, Fraction(0)) == 0
    user_best = []
    user_best_nonneg = []
    for user, spec in enumerate(config.utilities):
        slack = utility_tolerance(spec)
        price = prices[user]
        charged = result.taxes[user]
        on_line = result.allocation != 0 and charged == result.allocation * price
        ok = on_line
        ok_nonneg = on_line and charged >= 0
        held = utility_eval(spec, result.allocation, charged, config)
        for alternative in range(1, catalog.size + 1):
            value = utility_eval(spec, alternative, alternative * price, config)
            if value > held + slack:
                ok = False
                if alternative * price >= 0:
                    ok_nonneg = False
        user_best.append(ok)
        user_best_nonneg.append(ok_nonneg)
    return LindahlCertificate(
        allocation, prices_balance, taxes_balance, tuple(user_best), tuple(user_best_nonneg)
    )


def lindahl_to_ne(psi: LindahlAllocation, seed_price, catalog: ProfileCatalog) -> MessageProfile:
    """Message profile whose outcome reproduces the Lindahl allocation `psi`.

    Every user proposes the allocation index; the prices solve the cyclic
    system personal_price[i] = (price[i+1] - price[i+2]) / N exactly, seeded
    by price[0] = seed_price.  The system is consistent only when the
    personal prices sum to zero, and seed_price must be large enough to keep
    every solved price non-negative.
    """
    n = len(psi.prices)
    if n != catalog.num_users:
        raise ValueError(f"allocation is for {n} users, catalog expects {catalog.num_users}")
    if not 0 <= psi.allocation <= catalog.size:
        raise ValueError(f"allocation {psi.allocation} outside 0..{catalog.size}")
    if sum(psi.prices, Fraction(0)) != 0:
        raise PriceSystemError(
            f"personal prices must sum to zero, got {sum(psi.prices, Fraction(0))}"
        )
    seed = as_fraction(seed_price)
    solved = [seed]
    for j in range(1, n):
        previous_personal = psi.prices[(j - 2) % n]
        solved.append(solved[j - 1] - n * previous_personal)
    lowest = min(solved)
    if lowest < 0:
        minimum = seed - lowest
        raise PriceScaleError(
            f"seed price {seed} makes a solved price negative; "
            f"the smallest feasible seed price is {minimum}",
            minimum,
        )
    return tuple(Message(psi.allocation, price) for price in solved)


@dataclass(frozen=True)
class EquilibriumReport:
    """All per-candidate verdicts in one place.

    When `is_ne_on_grid` holds, every structural flag below must hold too;
    `soundness_violations` lists any that do not (there must never be any).
    The price-line optimality verdicts live in `lindahl` and may fail for a
    too-coarse grid; they are reported, not enforced.
    """

    candidate: MessageProfile
    allocation: int
    taxes: tuple[Fraction, ...]
    is_ne_on_grid: bool
    mismatch_penalties_vanish: bool
    feasible: bool
    individual_rationality: tuple[bool, ...]
    tax_form_matches: bool
    lindahl: Optional[LindahlCertificate]

    def soundness_violations(self) -> tuple[str, ...]:
        if not self.is_ne_on_grid:
            return ()
        problems = []
        if not self.mismatch_penalties_vanish:
            problems.append("NE with a non-vanishing mismatch penalty")
        if not self.feasible:
            problems.append("NE with a null allocation")
        if not all(self.individual_rationality):
            problems.append("NE a user would rather opt out of")
        if not self.tax_form_matches:
            problems.append("NE whose taxes break the reduced form")
        if self.lindahl is None:
            problems.append("NE without a Lindahl certificate")
        else:
            if not self.lindahl.prices_balance:
                problems.append("NE whose personal prices do not sum to zero")
            if not self.lindahl.taxes_balance:
                problems.append("NE whose taxes do not sum to zero")
        return tuple(problems)


def build_report(
    candidate: MessageProfile,
    grid: MessageGrid,
    config: ScenarioConfig,
    verification: Optional[NEVerification] = None,
    include_lindahl: Optional[bool] = None,
) -> EquilibriumReport:
    """Assemble the full per-candidate report (NE check + property checks)."""
    catalog = config.catalog
    if verification is None:
        verification = verify_ne(candidate, grid, config)
    result = outcome(candidate, catalog)
    vanish = mismatch_penalties_vanish(candidate)
    matches = False
    if vanish:
        matches = equilibrium_tax_form(candidate, catalog.size) == result.taxes
    if include_lindahl is None:
        include_lindahl = verification.is_ne
    certificate = ne_to_lindahl(candidate, config) if include_lindahl else None
    return EquilibriumReport(
        candidate=tuple(candidate),
        allocation=result.allocation,
        taxes=result.taxes,
        is_ne_on_grid=verification.is_ne,
        mismatch_penalties_vanish=vanish,
        feasible=result.allocation != 0,
        individual_rationality=individual_rationality(candidate, config),
        tax_form_matches=matches,
        lindahl=certificate,
    )


def _scan_candidate(index: int, price: Fraction, grid: MessageGrid, config: ScenarioConfig):
    candidate = tuple(Message(index, price) for _ in range(config.num_users))
    verification = verify_ne(candidate, grid, config, stop_at_first=True)
    return build_report(candidate, grid, config, verification=verification)


def unanimity_scan(
    price, grid: MessageGrid, config: ScenarioConfig, jobs: int = 1
) -> list[EquilibriumReport]:
    """Test every unanimity candidate (k, price, ..., price), k over the catalog.

    Unanimity is where the mismatch penalties point, so this scan is the
    systematic way to harvest grid equilibria.  Returns one report per
    catalog index, NE or not.
    """
    price = as_fraction(price)
    if price not in grid.pi_values:
        raise ValueError(f"scan price {price} is off the grid")
    size = config.catalog.size
    indices = range(1, size + 1)
    if jobs <= 1:
        return [_scan_candidate(k, price, grid, config) for k in indices]
    chunk = max(1, size // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(
            pool.map(
                _scan_candidate,
                indices,
                repeat(price),
                repeat(grid),
                repeat(config),
                chunksize=chunk,
            )
        )
