"""Command-line front end: load a scenario, run a command, emit a report.

Commands: enumerate, outcome, find-ne, verify, lindahl-roundtrip, measure.
Every command prints a human table by default; --format json emits one
machine-readable document instead (rationals as lossless "p/q" strings,
floats at 12 significant digits); --format csv emits rows for list-shaped
output and otherwise falls back to the table.  --out writes the JSON
document to a file regardless of the stdout format.

Exit codes: 0 success (including "no equilibrium found"), 2 configuration
error, 3 violated internal identity (must never happen).
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from .equilibrium import (
    EquilibriumReport,
    LindahlAllocation,
    MessageGrid,
    br_dynamics,
    build_report,
    lindahl_to_ne,
    unanimity_scan,
    verify_ne,
)
from .errors import ConfigError, ContractError, PriceScaleError, PriceSystemError
from .measurement import run_measurement
from .mechanism import Message, lindahl_price, outcome
from .model import as_fraction
from .scenario import Scenario, load_scenario, rational_to_json


def _fmt(value) -> str:
    """Render a quantity: exact rationals as p/q, floats at 12 digits."""
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        return str(Fraction(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _standard_grid(scenario: Scenario) -> MessageGrid:
    return MessageGrid.standard(
        scenario.config.catalog.size,
        scenario.config.num_users,
        pi_step=scenario.pi_step,
        pi_max=scenario.pi_max,
    )


def _parse_messages(spec: str, num_users: int) -> tuple[Message, ...]:
    text = spec
    if spec.startswith("@"):
        text = Path(spec[1:]).read_text()
    try:
        data = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"messages: not valid JSON ({exc})") from None
    if not isinstance(data, list) or len(data) != num_users:
        raise ConfigError(f"messages: need a list of {num_users} entries")
    messages = []
    for i, entry in enumerate(data):
        if isinstance(entry, dict):
            if set(entry) != {"proposal", "price"}:
                raise ConfigError(f"messages[{i}]: expected keys proposal and price")
            proposal, price = entry["proposal"], entry["price"]
        elif isinstance(entry, list) and len(entry) == 2:
            proposal, price = entry
        else:
            raise ConfigError(f"messages[{i}]: expected [proposal, price]")
        if not isinstance(proposal, int) or isinstance(proposal, bool):
            raise ConfigError(f"messages[{i}]: proposal must be an integer")
        try:
            messages.append(Message(proposal, as_fraction(price)))
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"messages[{i}]: {exc}") from None
    return tuple(messages)


def _message_json(message: Message) -> dict:
    return {"proposal": message.proposal, "price": rational_to_json(message.price)}


def _report_json(report: EquilibriumReport) -> dict:
    doc = {
        "candidate": [_message_json(m) for m in report.candidate],
        "allocation": report.allocation,
        "taxes": [rational_to_json(t) for t in report.taxes],
        "is_ne_on_grid": report.is_ne_on_grid,
        "mismatch_penalties_vanish": report.mismatch_penalties_vanish,
        "feasible": report.feasible,
        "individual_rationality": list(report.individual_rationality),
        "tax_form_matches": report.tax_form_matches,
        "lindahl": None,
    }
    if report.lindahl is not None:
        cert = report.lindahl
        doc["lindahl"] = {
            "prices": [rational_to_json(p) for p in cert.allocation.prices],
            "prices_balance": cert.prices_balance,
            "taxes_balance": cert.taxes_balance,
            "best_on_price_line": list(cert.user_best),
            "best_on_price_line_nonneg_tax": list(cert.user_best_nonneg_tax),
        }
    return doc


_REPORT_CSV_COLUMNS = (
    "proposal",
    "price",
    "allocation",
    "is_ne_on_grid",
    "mismatch_penalties_vanish",
    "feasible",
    "individual_rationality",
    "tax_form_matches",
    "prices_balance",
    "taxes_balance",
    "best_on_price_line",
    "taxes",
)


def _report_csv_row(report: EquilibriumReport) -> list:
    cert = report.lindahl
    return [
        report.candidate[0].proposal,
        _fmt(report.candidate[0].price),
        report.allocation,
        report.is_ne_on_grid,
        report.mismatch_penalties_vanish,
        report.feasible,
        all(report.individual_rationality),
        report.tax_form_matches,
        "" if cert is None else cert.prices_balance,
        "" if cert is None else cert.taxes_balance,
        "" if cert is None else cert.best_on_price_line,
        " ".join(_fmt(t) for t in report.taxes),
    ]


def _print_report_table(report: EquilibriumReport) -> None:
    print(f"candidate: {', '.join(f'({m.proposal}, {_fmt(m.price)})' for m in report.candidate)}")
    print(f"allocation: {report.allocation}")
    print(f"taxes: {', '.join(_fmt(t) for t in report.taxes)} (sum={_fmt(sum(report.taxes))})")
    print(f"grid NE: {report.is_ne_on_grid}")
    print(f"mismatch penalties vanish: {report.mismatch_penalties_vanish}")
    print(f"feasible allocation: {report.feasible}")
    print(f"individual rationality: {list(report.individual_rationality)}")
    print(f"reduced tax form matches: {report.tax_form_matches}")
    if report.lindahl is not None:
        cert = report.lindahl
        print(f"personal prices: {', '.join(_fmt(p) for p in cert.allocation.prices)}")
        print(f"prices balance: {cert.prices_balance}")
        print(f"taxes balance: {cert.taxes_balance}")
        print(f"best on price line: {list(cert.user_best)}")
        print(f"best on price line (non-negative taxes): {list(cert.user_best_nonneg_tax)}")


def _emit(args, document: dict) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(document, indent=2) + "\n")


def cmd_enumerate(args) -> int:
    scenario = load_scenario(args.scenario)
    catalog = scenario.config.catalog
    document = {
        "command": "enumerate",
        "scenario_digest": scenario.digest,
        "bundle_count": len(catalog.bundles),
        "profile_count": catalog.size,
    }
    rows = None
    if args.table:
        rows = [
            [index] + [" ".join(_fmt(p) for p in bundle) for bundle in catalog.profile_of(index)]
            for index in range(1, catalog.size + 1)
        ]
        document["profiles"] = [
            {"index": row[0], "bundles": row[1:]} for row in rows
        ]
    if args.format == "json":
        print(json.dumps(document, indent=2))
    elif args.format == "csv" and rows is not None:
        writer = csv.writer(sys.stdout)
        writer.writerow(["index"] + [f"user{u}" for u in range(catalog.num_users)])
        writer.writerows(rows)
    else:
        print(f"bundles={len(catalog.bundles)} profiles={catalog.size}")
        if rows is not None:
            for row in rows:
                print(f"  {row[0]:>6}: " + " | ".join(row[1:]))
    _emit(args, document)
    return 0


def cmd_outcome(args) -> int:
    scenario = load_scenario(args.scenario)
    catalog = scenario.config.catalog
    messages = _parse_messages(args.messages, scenario.config.num_users)
    result = outcome(messages, catalog)
    prices = [lindahl_price(messages, u) for u in range(len(messages))]
    document = {
        "command": "outcome",
        "scenario_digest": scenario.digest,
        "messages": [_message_json(m) for m in messages],
        "allocation": result.allocation,
        "taxes": [rational_to_json(t) for t in result.taxes],
        "tax_sum": rational_to_json(sum(result.taxes)),
        "personal_prices": [rational_to_json(p) for p in prices],
    }
    if args.format == "json":
        print(json.dumps(document, indent=2))
    else:
        print(f"allocation: {result.allocation}")
        for user, (message, t) in enumerate(zip(messages, result.taxes)):
            print(
                f"  user {user}: proposal={message.proposal} price={_fmt(message.price)} "
                f"tax={_fmt(t)}"
            )
        print(f"sum={_fmt(sum(result.taxes))}")
    _emit(args, document)
    return 0


def _run_unanimity(scenario: Scenario, grid: MessageGrid, price, jobs: int):
    started = time.perf_counter()
    reports = unanimity_scan(price, grid, scenario.config, jobs=jobs)
    elapsed = time.perf_counter() - started
    return reports, elapsed


def _run_br(scenario: Scenario, grid: MessageGrid, starts: int, seed: int, max_rounds: int):
    rng = random.Random(seed)
    started = time.perf_counter()
    results = []
    for _ in range(starts):
        profile = tuple(
            Message(rng.choice(grid.n_values), rng.choice(grid.pi_values))
            for _ in range(scenario.config.num_users)
        )
        results.append(br_dynamics(profile, grid, scenario.config, max_rounds=max_rounds))
    elapsed = time.perf_counter() - started
    return results, elapsed


def cmd_find_ne(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = scenario.seed if args.seed is None else args.seed
    grid = _standard_grid(scenario)
    catalog = scenario.config.catalog
    measurement = run_measurement(
        scenario.config.gains, scenario.behaviors, scenario.pilot_power, scenario.config
    )
    document = {
        "command": "find-ne",
        "scenario_digest": scenario.digest,
        "seed": seed,
        "catalog": {"bundle_count": len(catalog.bundles), "profile_count": catalog.size},
        "measurement": {
            "excluded_users": sorted(measurement.excluded),
            "mismatched_pairs": [list(pair) for pair in measurement.mismatched_pairs],
        },
        "timing_seconds": {},
    }
    contract_broken = []
    equilibria = []

    if args.method in ("unanimity", "both"):
        price = as_fraction(args.price)
        reports, elapsed = _run_unanimity(scenario, grid, price, args.jobs)
        found = [r for r in reports if r.is_ne_on_grid]
        equilibria.extend(found)
        for report in found:
            contract_broken.extend(report.soundness_violations())
        document["unanimity"] = {
            "price": rational_to_json(price),
            "candidates_tested": len(reports),
            "equilibria": [_report_json(r) for r in found],
        }
        document["timing_seconds"]["unanimity"] = round(elapsed, 4)

    if args.method in ("br", "both"):
        results, elapsed = _run_br(scenario, grid, args.starts, seed, args.max_rounds)
        converged = [r for r in results if r.converged]
        fixed_points = []
        seen = set()
        for result in converged:
            if result.profile in seen:
                continue
            seen.add(result.profile)
            report = build_report(
                result.profile, grid, scenario.config, verification=result.verification
            )
            fixed_points.append(report)
            if report.is_ne_on_grid:
                contract_broken.extend(report.soundness_violations())
                if report.candidate not in {r.candidate for r in equilibria}:
                    equilibria.append(report)
        document["best_response"] = {
            "starts": args.starts,
            "max_rounds": args.max_rounds,
            "converged": len(converged),
            "trajectories": [
                {
                    "rounds": r.rounds,
                    "converged": r.converged,
                    "final": [_message_json(m) for m in r.profile],
                    "is_ne_on_grid": None if r.verification is None else r.verification.is_ne,
                }
                for r in results
            ],
            "unique_fixed_points": [_report_json(r) for r in fixed_points],
        }
        document["timing_seconds"]["best_response"] = round(elapsed, 4)

    if contract_broken:
        raise ContractError("; ".join(sorted(set(contract_broken))))

    if args.format == "json":
        print(json.dumps(document, indent=2))
    elif args.format == "csv":
        writer = csv.writer(sys.stdout)
        writer.writerow(_REPORT_CSV_COLUMNS)
        for report in equilibria:
            writer.writerow(_report_csv_row(report))
    else:
        print(f"seed={seed} profiles={catalog.size} grid_ne_found={len(equilibria)}")
        for report in equilibria:
            print("-" * 40)
            _print_report_table(report)
    _emit(args, document)
    return 0


def cmd_verify(args) -> int:
    scenario = load_scenario(args.scenario)
    grid = _standard_grid(scenario)
    messages = _parse_messages(args.messages, scenario.config.num_users)
    verification = verify_ne(messages, grid, scenario.config)
    report = build_report(
        messages, grid, scenario.config, verification=verification, include_lindahl=True
    )
    document = {
        "command": "verify",
        "scenario_digest": scenario.digest,
        "report": _report_json(report),
        "best_deviation": None,
    }
    if verification.best_deviation is not None:
        deviation = verification.best_deviation
        document["best_deviation"] = {
            "user": deviation.user,
            "message": _message_json(deviation.message),
            "gain": _fmt(deviation.gain),
        }
    if args.format == "json":
        print(json.dumps(document, indent=2))
    else:
        _print_report_table(report)
        if verification.best_deviation is not None:
            deviation = verification.best_deviation
            print(
                f"best deviation: user {deviation.user} -> "
                f"({deviation.message.proposal}, {_fmt(deviation.message.price)}) "
                f"gains {_fmt(deviation.gain)}"
            )
    _emit(args, document)
    violations = report.soundness_violations()
    if violations:
        raise ContractError("; ".join(violations))
    return 0


def _parse_psi(path, num_users: int) -> LindahlAllocation:
    try:
        data = json.loads(Path(path).read_text(), parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"psi: not valid JSON ({exc})") from None
    if not isinstance(data, dict) or set(data) != {"allocation", "taxes", "prices"}:
        raise ConfigError("psi: expected keys allocation, taxes, prices")
    if not isinstance(data["allocation"], int):
        raise ConfigError("psi.allocation: expected an integer")
    taxes = [as_fraction(t) for t in data["taxes"]]
    prices = [as_fraction(p) for p in data["prices"]]
    if len(taxes) != num_users or len(prices) != num_users:
        raise ConfigError(f"psi: need {num_users} taxes and {num_users} prices")
    return LindahlAllocation(data["allocation"], tuple(taxes), tuple(prices))


def cmd_lindahl_roundtrip(args) -> int:
    scenario = load_scenario(args.scenario)
    catalog = scenario.config.catalog
    psi = _parse_psi(args.psi, scenario.config.num_users)
    try:
        messages = lindahl_to_ne(psi, as_fraction(args.pi1), catalog)
    except (PriceSystemError, PriceScaleError) as exc:
        raise ConfigError(str(exc)) from None
    grid = _standard_grid(scenario).with_prices(m.price for m in messages)
    verification = verify_ne(messages, grid, scenario.config)
    result = outcome(messages, catalog)
    prices = tuple(lindahl_price(messages, u) for u in range(len(messages)))
    roundtrip = {
        "allocation_match": result.allocation == psi.allocation,
        "taxes_match": result.taxes == psi.taxes,
        "prices_match": prices == psi.prices,
    }
    document = {
        "command": "lindahl-roundtrip",
        "scenario_digest": scenario.digest,
        "messages": [_message_json(m) for m in messages],
        "is_ne_on_grid": verification.is_ne,
        "allocation": result.allocation,
        "taxes": [rational_to_json(t) for t in result.taxes],
        "personal_prices": [rational_to_json(p) for p in prices],
        "roundtrip": roundtrip,
    }
    if args.format == "json":
        print(json.dumps(document, indent=2))
    else:
        print(f"solved prices: {', '.join(_fmt(m.price) for m in messages)}")
        print(f"grid NE: {verification.is_ne}")
        print(
            "roundtrip: allocation={allocation_match} taxes={taxes_match} "
            "prices={prices_match}".format(**roundtrip)
        )
    _emit(args, document)
    return 0


def cmd_measure(args) -> int:
    scenario = load_scenario(args.scenario)
    result = run_measurement(
        scenario.config.gains, scenario.behaviors, scenario.pilot_power, scenario.config
    )
    document = {
        "command": "measure",
        "scenario_digest": scenario.digest,
        "pilot_power": rational_to_json(scenario.pilot_power),
        "excluded_users": sorted(result.excluded),
        "mismatched_pairs": [list(pair) for pair in result.mismatched_pairs],
        "estimated_gains": [
            [[rational_to_json(g) for g in row] for row in plane]
            for plane in result.estimated_gains
        ],
        "reports": [
            {
                "transmitter": r.transmitter,
                "receiver": r.receiver,
                "band": r.band,
                "reported_by_tx": rational_to_json(r.reported_by_tx),
                "reported_by_rx": rational_to_json(r.reported_by_rx),
                "consistent": r.consistent,
            }
            for r in result.reports
        ],
    }
    if args.format == "json":
        print(json.dumps(document, indent=2))
    else:
        print(f"pairs measured: {len(result.reports)} reports")
        print(f"mismatched pairs: {[tuple(p) for p in result.mismatched_pairs]}")
        print(f"excluded users: {sorted(result.excluded)}")
    _emit(args, document)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario JSON file")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--format", choices=("json", "table", "csv"), default="table")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common.add_argument("--out", default=None, help="also write the JSON document here")

    parser = argparse.ArgumentParser(
        prog="spectrumshare",
        description="Allocation game form for shared spectrum: enumerate, play, verify.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="catalog summary")
    p.add_argument("--table", action="store_true", help="print the full index table")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("outcome", parents=[common], help="apply the game form to messages")
    p.add_argument("--messages", required=True, help='JSON [[n, price], ...] or @file')
    p.set_defaults(func=cmd_outcome)

    p = sub.add_parser("find-ne", parents=[common], help="search for grid equilibria")
    p.add_argument("--method", choices=("unanimity", "br", "both"), default="both")
    p.add_argument("--price", default="1", help="common price for the unanimity scan")
    p.add_argument("--starts", type=int, default=20, help="random starts for best response")
    p.add_argument("--max-rounds", type=int, default=50)
    p.set_defaults(func=cmd_find_ne)

    p = sub.add_parser("verify", parents=[common], help="full report for one candidate")
    p.add_argument("--messages", required=True, help='JSON [[n, price], ...] or @file')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "lindahl-roundtrip", parents=[common], help="rebuild messages from an allocation"
    )
    p.add_argument("--psi", required=True, help="JSON file with allocation, taxes, prices")
    p.add_argument("--pi1", default="1", help="seed price for the cyclic solve")
    p.set_defaults(func=cmd_lindahl_roundtrip)

    p = sub.add_parser("measure", parents=[common], help="run the gain measurement protocol")
    p.set_defaults(func=cmd_measure)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must fit in an unsigned 64-bit integer")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ContractError as exc:
        print(f"internal contract violated: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
