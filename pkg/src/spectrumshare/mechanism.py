"""The allocation game form: messages, outcome rule, and the cyclic tax.

Each user submits a message (proposal, price): an integer catalog index it
proposes, and a non-negative price per unit of profile index it is willing
to pay.  The outcome is the catalog entry nearest to the average proposal
(clipped to 0 when the average falls outside the catalog) plus one tax or
subsidy per user.  The tax of user i only involves its own message and the
messages of the two users after it in the cycle, which is what makes the
budget balance exactly, on and off equilibrium.

Everything here is exact rational arithmetic; there are no tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ContractError
from .model import ProfileCatalog, as_fraction


@dataclass(frozen=True)
class Message:
    """One user's message: a proposed catalog index and a unit price."""

    proposal: int
    price: Fraction

    def __post_init__(self):
        if not isinstance(self.proposal, int) or isinstance(self.proposal, bool):
            raise ValueError(f"proposal must be an integer, got {self.proposal!r}")
        object.__setattr__(self, "price", as_fraction(self.price))
        if self.price < 0:
            raise ValueError(f"price must be non-negative, got {self.price}")


MessageProfile = tuple[Message, ...]


def nearest_integer(total: int, count: int) -> int:
    """Integer nearest to total/count; exact halves round away from zero."""
    quotient, remainder = divmod(total, count)
    doubled = 2 * remainder
    if doubled > count:
        return quotient + 1
    if doubled < count:
        return quotient
    return quotient + 1 if quotient >= 0 else quotient


def rounded_average(proposals: Sequence[int]) -> int:
    """Integer nearest to the exact mean of the proposals."""
    if not proposals:
        raise ValueError("need at least one proposal")
    return nearest_integer(sum(proposals), len(proposals))


def clip_allocation(value: int, catalog_size: int) -> int:
    """Map an integer onto the catalog: itself when valid, else 0."""
    if catalog_size < 1:
        raise ValueError("catalog_size must be at least 1")
    return value if 1 <= value <= catalog_size else 0


def proposal_feasible(proposals: Sequence[int], catalog_size: int) -> bool:
    """The tax indicator: the (unclipped) rounded average names a real profile."""
    return 1 <= rounded_average(proposals) <= catalog_size


@dataclass(frozen=True)
class TaxComponents:
    """The three pieces of one user's tax.

    allocation_charge: what the user pays for the allocated profile, at a
        price set entirely by the next two users in the cycle.
    mismatch_penalty: (own proposal - next user's proposal)^2 * own price;
        pushes all users toward proposing the same profile.
    balancing_credit: minus the next user's mismatch penalty; not controlled
        by this user, it is what makes the taxes sum to zero.
    """

    allocation_charge: Fraction
    mismatch_penalty: Fraction
    balancing_credit: Fraction

    @property
    def total(self) -> Fraction:
        return self.allocation_charge + self.mismatch_penalty + self.balancing_credit


def tax_components(profile: MessageProfile, user: int, catalog_size: int) -> TaxComponents:
    """Per-component tax of `user` (0-indexed; the cycle wraps around)."""
    n = len(profile)
    if not 0 <= user < n:
        raise ValueError(f"user {user} outside 0..{n - 1}")
    if not proposal_feasible([m.proposal for m in profile], catalog_size):
        zero = Fraction(0)
        return TaxComponents(zero, zero, zero)
    average = rounded_average([m.proposal for m in profile])
    own = profile[user]
    after = profile[(user + 1) % n]
    after2 = profile[(user + 2) % n]
    charge = average * Fraction(after.price - after2.price, n)
    penalty = (own.proposal - after.proposal) ** 2 * own.price
    credit = -((after.proposal - after2.proposal) ** 2) * after.price
    return TaxComponents(charge, penalty, credit)


def tax(profile: MessageProfile, user: int, catalog_size: int) -> Fraction:
    """Exact tax (positive) or subsidy (negative) charged to `user`."""
    return tax_components(profile, user, catalog_size).total


def budget_sum(profile: MessageProfile, catalog_size: int) -> Fraction:
    """Sum of all taxes.  Identically zero; computed, never assumed."""
    return sum((tax(profile, user, catalog_size) for user in range(len(profile))), Fraction(0))


def lindahl_price(profile: MessageProfile, user: int) -> Fraction:
    """Personalized price per unit of allocation index faced by `user`."""
    n = len(profile)
    if not 0 <= user < n:
        raise ValueError(f"user {user} outside 0..{n - 1}")
    after = profile[(user + 1) % n]
    after2 = profile[(user + 2) % n]
    return Fraction(after.price - after2.price, n)


@dataclass(frozen=True)
class Outcome:
    """Allocation index (0 = none) plus the exact tax vector."""

    allocation: int
    taxes: tuple[Fraction, ...]

    def __post_init__(self):
        if sum(self.taxes, Fraction(0)) != 0:
            raise ContractError(f"taxes must sum to zero, got {self.taxes}")
        if self.allocation == 0 and any(t != 0 for t in self.taxes):
            raise ContractError("a null allocation must carry zero taxes")


def outcome(profile: MessageProfile, catalog: ProfileCatalog) -> Outcome:
    """Apply the game form to a full message profile."""
    if len(profile) != catalog.num_users:
        raise ValueError(
            f"profile has {len(profile)} messages, catalog expects {catalog.num_users}"
        )
    size = catalog.size
    allocation = clip_allocation(rounded_average([m.proposal for m in profile]), size)
    taxes = tuple(tax(profile, user, size) for user in range(len(profile)))
    return Outcome(allocation, taxes)
