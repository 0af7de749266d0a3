"""Tax-based game form for decentralized power allocation over shared spectrum.

Strategic users split quantized power budgets across frequency bands.  Each
submits a (proposal, price) message; the outcome rule picks the catalog
profile nearest the average proposal and charges cyclic taxes that balance
to zero exactly, on and off equilibrium.  The package enumerates the profile
catalog, applies the game form in exact rational arithmetic, searches and
certifies grid Nash equilibria, bridges them to Lindahl allocations with
personalized prices, and simulates the pilot-based gain measurement with its
exclusion rule.
"""

from .equilibrium import (
    BRResult,
    Deviation,
    EquilibriumReport,
    LindahlAllocation,
    LindahlCertificate,
    MessageGrid,
    NEVerification,
    best_response,
    br_dynamics,
    build_report,
    equilibrium_tax_form,
    individual_rationality,
    lindahl_to_ne,
    mismatch_penalties_vanish,
    ne_to_lindahl,
    unanimity_scan,
    verify_ne,
)
from .errors import (
    ConfigError,
    ContractError,
    DegenerateScenarioError,
    PriceScaleError,
    PriceSystemError,
)
from .measurement import (
    AgentBehavior,
    GainReport,
    Honest,
    MeasurementResult,
    PilotCheat,
    ReportCheat,
    exclusion_consequence,
    run_measurement,
)
from .mechanism import (
    Message,
    MessageProfile,
    Outcome,
    TaxComponents,
    budget_sum,
    clip_allocation,
    lindahl_price,
    nearest_integer,
    outcome,
    proposal_feasible,
    rounded_average,
    tax,
    tax_components,
)
from .model import (
    CubicTaxUtility,
    ProfileCatalog,
    ScenarioConfig,
    SirLogUtility,
    TableUtility,
    UtilitySpec,
    as_fraction,
    build_catalog,
    enumerate_bundles,
    sir,
    utility_eval,
    utility_tolerance,
)
from .scenario import Scenario, load_scenario, parse_scenario, scenario_to_jsonable, write_scenario

__version__ = "0.1.0"
