"""Exception hierarchy shared across the package."""


class ConfigError(Exception):
    """A scenario or parameter is malformed or out of the supported range."""


class ContractError(Exception):
    """An internal identity that must always hold was violated."""


class DegenerateScenarioError(ConfigError):
    """Too few users remain for the cyclic pricing structure to work."""


class PriceSystemError(ValueError):
    """The personalized prices are inconsistent (they must sum to zero)."""


class PriceScaleError(ValueError):
    """The seed price is too small to keep all solved prices non-negative."""

    def __init__(self, message: str, min_seed_price):
        super().__init__(message)
        self.min_seed_price = min_seed_price
