"""Acceptance gate: every top-level property, one labelled pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.  The desk
workload is the scenario from `spectrumshare.presets`: 3 users, 2 bands,
levels {0,1,2}, budget 2 (6 bundles, 216 profiles), quasi-linear tables with
a shared peak.  Identities are exact unless a tolerance is stated.
"""

import functools
import json
import random
import time
from fractions import Fraction

import pytest

from spectrumshare import (
    ConfigError,
    Honest,
    LindahlAllocation,
    Message,
    MessageGrid,
    ReportCheat,
    ScenarioConfig,
    br_dynamics,
    budget_sum,
    build_report,
    lindahl_price,
    lindahl_to_ne,
    outcome,
    run_measurement,
    tax,
    unanimity_scan,
    verify_ne,
)
from spectrumshare.presets import DESK_PEAK_INDEX, desk_config
from spectrumshare.scenario import parse_scenario, scenario_to_jsonable

from conftest import peak_table, small_scenario, uniform_gains


def criterion(label):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[acceptance] {label}: FAIL")
                raise
            print(f"[acceptance] {label}: PASS")
            return result

        return inner

    return wrap


@pytest.fixture(scope="module")
def desk():
    return desk_config()


@pytest.fixture(scope="module")
def grid(desk):
    return MessageGrid.standard(desk.catalog.size, desk.num_users)


@pytest.fixture(scope="module")
def found_equilibria(desk, grid):
    """Grid NE harvested by both methods; shared by criteria 3 and 4."""
    started = time.perf_counter()
    reports = unanimity_scan(1, grid, desk, jobs=4)
    scan_seconds = time.perf_counter() - started
    equilibria = [r for r in reports if r.is_ne_on_grid]

    rng = random.Random(20260810)
    for _ in range(8):
        start = tuple(
            Message(rng.choice(grid.n_values), rng.choice(grid.pi_values)) for _ in range(3)
        )
        result = br_dynamics(start, grid, desk, max_rounds=40)
        if result.converged and result.verification.is_ne:
            report = build_report(
                result.profile, grid, desk, verification=result.verification
            )
            if report.candidate not in {r.candidate for r in equilibria}:
                equilibria.append(report)
    return equilibria, scan_seconds


@criterion("1 budget balance, 100000 random grid profiles, exact")
def test_budget_balance_always(desk, grid):
    rng = random.Random(95014)
    started = time.perf_counter()
    for _ in range(100_000):
        profile = tuple(
            Message(rng.choice(grid.n_values), rng.choice(grid.pi_values)) for _ in range(3)
        )
        assert budget_sum(profile, desk.catalog.size) == 0
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"budget sweep took {elapsed:.2f}s"


@criterion("2 hand-derived tax vector, exact")
def test_derived_tax_vector(desk):
    profile = tuple(Message(n, Fraction(p)) for n, p in ((1, 1), (2, 2), (3, 3)))
    taxes = tuple(tax(profile, user, desk.catalog.size) for user in range(3))
    assert taxes == (Fraction(-5, 3), Fraction(-26, 3), Fraction(31, 3))
    assert sum(taxes) == 0


@criterion("3 equilibrium property chain on every found grid NE, exact")
def test_equilibrium_property_chain(found_equilibria):
    equilibria, scan_seconds = found_equilibria
    assert scan_seconds < 60.0, f"unanimity scan took {scan_seconds:.2f}s"
    assert equilibria, "the desk scenario must yield at least one grid NE"
    assert any(r.allocation == DESK_PEAK_INDEX for r in equilibria)
    for report in equilibria:
        assert report.mismatch_penalties_vanish
        assert report.allocation != 0
        assert all(report.individual_rationality)
        assert report.tax_form_matches
        assert report.soundness_violations() == ()


@criterion("4 every grid NE induces a Lindahl allocation (exhaustive check)")
def test_ne_induces_lindahl_allocation(found_equilibria):
    equilibria, _ = found_equilibria
    assert equilibria
    for report in equilibria:
        certificate = report.lindahl
        assert certificate is not None
        assert certificate.prices_balance
        assert certificate.taxes_balance
        assert certificate.user_best == (True, True, True)
        # the sign-constrained verdict is recorded alongside, not enforced
        assert len(certificate.user_best_nonneg_tax) == 3
        assert all(isinstance(flag, bool) for flag in certificate.user_best_nonneg_tax)


@criterion("5 Lindahl allocation rebuilds to a grid NE and back, exact")
def test_lindahl_roundtrip_at_common_peak(desk, grid):
    zero = Fraction(0)
    psi = LindahlAllocation(DESK_PEAK_INDEX, (zero,) * 3, (zero,) * 3)
    messages = lindahl_to_ne(psi, 1, desk.catalog)
    assert verify_ne(messages, grid, desk).is_ne
    result = outcome(messages, desk.catalog)
    assert result.allocation == psi.allocation
    assert result.taxes == psi.taxes
    assert tuple(lindahl_price(messages, user) for user in range(3)) == psi.prices


@criterion("6 cyclic price system solve and inversion, exact")
def test_price_system_solve(desk):
    prices = (Fraction(-1, 3), Fraction(-1, 3), Fraction(2, 3))
    taxes = tuple(2 * p for p in prices)
    psi = LindahlAllocation(2, taxes, prices)
    messages = lindahl_to_ne(psi, 3, desk.catalog)
    assert tuple(m.price for m in messages) == (3, 1, 2)
    assert tuple(lindahl_price(messages, user) for user in range(3)) == prices


@criterion("7 measurement: honest recovery exact, one-sided cheat excluded")
def test_measurement_protocol(desk):
    started = time.perf_counter()
    honest = run_measurement(desk.gains, (Honest(),) * 3, 1, desk)
    assert honest.estimated_gains == desk.gains
    assert honest.excluded == frozenset()

    for cheater in range(3):
        behaviors = tuple(
            ReportCheat("multiplicative", (Fraction(2), Fraction(1))) if u == cheater else Honest()
            for u in range(3)
        )
        result = run_measurement(desk.gains, behaviors, 1, desk)
        expected_pairs = {(cheater, other) for other in range(3) if other != cheater}
        expected_pairs |= {(other, cheater) for other in range(3) if other != cheater}
        assert set(result.mismatched_pairs) == expected_pairs
        assert result.excluded == frozenset({0, 1, 2})
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"measurement runs took {elapsed:.2f}s"


@criterion("8 degenerate guards: 2 users rejected, 1-profile catalog is NE")
def test_degenerate_guards():
    document = scenario_to_jsonable(small_scenario())
    document["num_users"] = 2
    document["gains"] = [[[1], [1]], [[1], [1]]]
    document["utilities"] = document["utilities"][:2]
    document["measurement"]["behaviors"] = document["measurement"]["behaviors"][:2]
    with pytest.raises(ConfigError):
        parse_scenario(json.loads(json.dumps(document)))

    lone = ScenarioConfig(
        num_users=3,
        num_bands=1,
        quant_levels=(Fraction(0),),
        power_budget=Fraction(1),
        noise_half_density=Fraction(1),
        gains=uniform_gains(3, 1),
        utilities=tuple(peak_table(1, 1, s) for s in (1, 2, 3)),
    )
    assert lone.catalog.size == 1
    reports = unanimity_scan(1, MessageGrid.standard(1, 3), lone)
    assert [r.is_ne_on_grid for r in reports] == [True]
    assert reports[0].soundness_violations() == ()
