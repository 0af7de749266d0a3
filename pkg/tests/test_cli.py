"""End-to-end command checks: output content, formats, exit codes."""

import json
from fractions import Fraction

import pytest

from spectrumshare.cli import main
from spectrumshare.measurement import Honest, ReportCheat
from spectrumshare.scenario import write_scenario
from spectrumshare.presets import desk_scenario

from spectrumshare import ScenarioConfig
from conftest import peak_table, small_config, small_scenario, uniform_gains


@pytest.fixture(scope="module")
def small_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("scenarios") / "small.json"
    write_scenario(small_scenario(), path)
    return str(path)


@pytest.fixture(scope="module")
def desk_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("scenarios") / "desk.json"
    write_scenario(desk_scenario(), path)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEnumerate:
    def test_summary(self, capsys, desk_path):
        code, out, _ = run(capsys, "enumerate", "--scenario", desk_path)
        assert code == 0
        assert "bundles=6" in out
        assert "profiles=216" in out

    def test_json_format(self, capsys, small_path):
        code, out, _ = run(capsys, "enumerate", "--scenario", small_path, "--format", "json")
        assert code == 0
        document = json.loads(out)
        assert document["bundle_count"] == 2
        assert document["profile_count"] == 8

    def test_full_table(self, capsys, small_path):
        code, out, _ = run(capsys, "enumerate", "--scenario", small_path, "--table")
        assert code == 0
        assert out.count(":") >= 8

    def test_csv_table(self, capsys, small_path):
        code, out, _ = run(
            capsys, "enumerate", "--scenario", small_path, "--table", "--format", "csv"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("index,")
        assert len(lines) == 9

    def test_zero_level_catalog(self, capsys, tmp_path):
        config = ScenarioConfig(
            num_users=3,
            num_bands=1,
            quant_levels=(Fraction(0),),
            power_budget=Fraction(1),
            noise_half_density=Fraction(1),
            gains=uniform_gains(3, 1),
            utilities=tuple(peak_table(1, 1) for _ in range(3)),
        )
        path = tmp_path / "lone.json"
        write_scenario(small_scenario(config), path)
        code, out, _ = run(capsys, "enumerate", "--scenario", str(path))
        assert code == 0
        assert "bundles=1 profiles=1" in out

    def test_malformed_scenario_exits_2(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"num_users": 3, "mystery_key": 1}))
        code, _, err = run(capsys, "enumerate", "--scenario", str(path))
        assert code == 2
        assert "mystery_key" in err

    def test_missing_file_exits_2(self, capsys, tmp_path):
        code, _, err = run(capsys, "enumerate", "--scenario", str(tmp_path / "nope.json"))
        assert code == 2


class TestOutcome:
    def test_hand_computed_case(self, capsys, desk_path):
        code, out, _ = run(
            capsys,
            "outcome",
            "--scenario",
            desk_path,
            "--messages",
            '[[1, 1], [2, 2], [3, 3]]',
        )
        assert code == 0
        assert "-5/3" in out and "-26/3" in out and "31/3" in out
        assert "sum=0" in out

    def test_unanimity(self, capsys, desk_path):
        code, out, _ = run(
            capsys,
            "outcome",
            "--scenario",
            desk_path,
            "--messages",
            '[[9, "1/2"], [9, "1/2"], [9, "1/2"]]',
        )
        assert code == 0
        assert "allocation: 9" in out
        assert "sum=0" in out

    def test_messages_from_file(self, capsys, desk_path, tmp_path):
        messages = tmp_path / "messages.json"
        messages.write_text('[{"proposal": 1, "price": 1}, {"proposal": 2, "price": 2}, {"proposal": 3, "price": 3}]')
        code, out, _ = run(
            capsys, "outcome", "--scenario", desk_path, "--messages", f"@{messages}"
        )
        assert code == 0
        assert "31/3" in out

    def test_json_taxes_are_ratio_strings(self, capsys, desk_path):
        code, out, _ = run(
            capsys,
            "outcome",
            "--scenario",
            desk_path,
            "--messages",
            '[[1, 1], [2, 2], [3, 3]]',
            "--format",
            "json",
        )
        document = json.loads(out)
        assert document["taxes"] == ["-5/3", "-26/3", "31/3"]
        assert document["tax_sum"] == 0

    def test_bad_messages_exit_2(self, capsys, desk_path):
        code, _, err = run(
            capsys, "outcome", "--scenario", desk_path, "--messages", "[[1, 1]]"
        )
        assert code == 2


class TestFindNe:
    def test_unanimity_method(self, capsys, small_path):
        code, out, _ = run(
            capsys, "find-ne", "--scenario", small_path, "--method", "unanimity"
        )
        assert code == 0
        assert "grid_ne_found=1" in out

    def test_json_document(self, capsys, small_path, tmp_path):
        out_path = tmp_path / "report.json"
        code, out, _ = run(
            capsys,
            "find-ne",
            "--scenario",
            small_path,
            "--method",
            "both",
            "--starts",
            "5",
            "--format",
            "json",
            "--out",
            str(out_path),
        )
        assert code == 0
        document = json.loads(out)
        assert document["catalog"] == {"bundle_count": 2, "profile_count": 8}
        found = document["unanimity"]["equilibria"]
        assert [e["allocation"] for e in found] == [4]
        assert found[0]["lindahl"]["prices_balance"] is True
        assert document["best_response"]["starts"] == 5
        assert json.loads(out_path.read_text()) == document

    def test_seed_determinism(self, capsys, small_path):
        _, first, _ = run(
            capsys, "find-ne", "--scenario", small_path, "--method", "br",
            "--starts", "4", "--seed", "3", "--format", "json",
        )
        _, second, _ = run(
            capsys, "find-ne", "--scenario", small_path, "--method", "br",
            "--starts", "4", "--seed", "3", "--format", "json",
        )
        first, second = json.loads(first), json.loads(second)
        del first["timing_seconds"], second["timing_seconds"]
        assert first == second

    def test_no_ne_is_still_success(self, capsys, tmp_path):
        scenario = small_scenario(small_config(peaks=(1, 8, 4)))
        path = tmp_path / "conflict.json"
        write_scenario(scenario, path)
        code, out, _ = run(
            capsys, "find-ne", "--scenario", str(path), "--method", "unanimity"
        )
        assert code == 0
        assert "grid_ne_found=0" in out

    def test_csv_format(self, capsys, small_path):
        code, out, _ = run(
            capsys,
            "find-ne",
            "--scenario",
            small_path,
            "--method",
            "unanimity",
            "--format",
            "csv",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("proposal,price,allocation")
        assert len(lines) == 2


class TestVerify:
    def test_ne_report(self, capsys, small_path):
        code, out, _ = run(
            capsys, "verify", "--scenario", small_path, "--messages", "[[4,1],[4,1],[4,1]]"
        )
        assert code == 0
        assert "grid NE: True" in out

    def test_non_ne_reports_deviation(self, capsys, small_path):
        code, out, _ = run(
            capsys,
            "verify",
            "--scenario",
            small_path,
            "--messages",
            "[[2,1],[2,1],[2,1]]",
            "--format",
            "json",
        )
        assert code == 0
        document = json.loads(out)
        assert document["report"]["is_ne_on_grid"] is False
        assert document["best_deviation"]["gain"]


class TestLindahlRoundtrip:
    def test_zero_price_roundtrip(self, capsys, small_path, tmp_path):
        psi = tmp_path / "psi.json"
        psi.write_text(json.dumps({"allocation": 4, "taxes": [0, 0, 0], "prices": [0, 0, 0]}))
        code, out, _ = run(
            capsys,
            "lindahl-roundtrip",
            "--scenario",
            small_path,
            "--psi",
            str(psi),
            "--pi1",
            "1",
            "--format",
            "json",
        )
        assert code == 0
        document = json.loads(out)
        assert document["is_ne_on_grid"] is True
        assert document["roundtrip"] == {
            "allocation_match": True,
            "taxes_match": True,
            "prices_match": True,
        }

    def test_seed_price_too_small_exits_2(self, capsys, small_path, tmp_path):
        psi = tmp_path / "psi.json"
        psi.write_text(
            json.dumps(
                {
                    "allocation": 2,
                    "taxes": ["-2/3", "-2/3", "4/3"],
                    "prices": ["-1/3", "-1/3", "2/3"],
                }
            )
        )
        code, _, err = run(
            capsys,
            "lindahl-roundtrip",
            "--scenario",
            small_path,
            "--psi",
            str(psi),
            "--pi1",
            "0",
        )
        assert code == 2
        assert "smallest feasible seed price is 2" in err


class TestMeasure:
    def test_honest_run(self, capsys, desk_path):
        code, out, _ = run(capsys, "measure", "--scenario", desk_path)
        assert code == 0
        assert "excluded users: []" in out

    def test_cheat_run_lists_pairs(self, capsys, tmp_path):
        scenario = small_scenario()
        scenario = type(scenario)(
            config=scenario.config,
            pi_step=scenario.pi_step,
            pi_max=scenario.pi_max,
            pilot_power=scenario.pilot_power,
            behaviors=(Honest(), Honest(), ReportCheat("multiplicative", (Fraction(2),))),
            seed=scenario.seed,
            digest="",
        )
        path = tmp_path / "cheat.json"
        write_scenario(scenario, path)
        code, out, _ = run(capsys, "measure", "--scenario", str(path), "--format", "json")
        assert code == 0
        document = json.loads(out)
        assert sorted(document["excluded_users"]) == [0, 1, 2]
        assert ["0", "2"] not in document["mismatched_pairs"]
        assert [0, 2] in document["mismatched_pairs"]
