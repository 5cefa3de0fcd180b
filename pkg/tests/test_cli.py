import csv
import io
import json

import pytest

from auction_lab.cli import EXIT_INVALID, EXIT_OK, main, resolve_seed
from auction_lab.instances import InstanceError, load_instance, parse_instance


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def instance(tmp_path):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps({"bids": [10, 7, 3, 3], "environment": {"type": "multi_unit", "units": 2}}))
    return str(path)


def test_sample_round_trip(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("AUCTION_LAB_SEED", raising=False)
    out = tmp_path / "s.json"
    assert run(capsys, "sample", "--n", "5", "--seed", "3", "--out", str(out))[0] == EXIT_OK
    inst = load_instance(out)
    assert inst.profile.n == 5 and min(inst.profile.bids) >= 1
    again = tmp_path / "t.json"
    run(capsys, "sample", "--n", "5", "--seed", "3", "--out", str(again))
    assert out.read_bytes() == again.read_bytes()


def test_seed_precedence(monkeypatch):
    monkeypatch.setenv("AUCTION_LAB_SEED", "99")
    assert resolve_seed(None) == 99
    assert resolve_seed(5) == 5
    monkeypatch.delenv("AUCTION_LAB_SEED")
    assert resolve_seed(None) == 2014


def test_bad_seed_env_is_invalid_input(monkeypatch, capsys):
    monkeypatch.setenv("AUCTION_LAB_SEED", "abc")
    code, _, err = run(capsys, "sample", "--n", "3")
    assert code == EXIT_INVALID and "AUCTION_LAB_SEED" in err


def test_bench(instance, capsys):
    code, out, _ = run(capsys, "bench", "--instance", instance)
    values = {r["benchmark"]: float(r["value"]) for r in rows(out)}
    assert code == EXIT_OK
    assert values["f2"] == 14 and values["maxv"] == 9 and values["f2l"] == 14 and values["efo"] == 14


def test_ratios(capsys):
    code, out, _ = run(capsys, "ratios", "--max-n", "10")
    table = rows(out)
    assert code == EXIT_OK and len(table) == 9
    assert table[0]["n"] == "2" and table[0]["tail_term"] == ""
    code, out, _ = run(capsys, "ratios", "--max-n", "4", "--exact")
    assert rows(out)[1]["lambda_ell"] == "13/6"
    assert run(capsys, "ratios", "--max-n", "100", "--exact")[0] == EXIT_INVALID


def test_simulate_and_online(instance, capsys):
    code, out, _ = run(capsys, "simulate", "--auction", "vickrey", "--instance", instance, "--trials", "50", "--seed", "1")
    row = rows(out)[0]
    assert code == EXIT_OK and float(row["mean_revenue"]) == 6.0
    code, out, _ = run(capsys, "online", "--instance", instance, "--pricer", "max", "--seed", "1")
    row = rows(out)[0]
    assert code == EXIT_OK and row["estimator"] == "exact"


def test_malformed_instance_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"bids": [1, 2],\n}')
    code, _, err = run(capsys, "bench", "--instance", str(bad))
    assert code == EXIT_INVALID and "line 2, column 1" in err


@pytest.mark.parametrize(
    "text",
    ['{"bids": [1, NaN]}', '{"bids": [-1]}', '{"bids": "x"}', '{"bids": [1], "environment": {"type": "multi_unit", "units": 0}}'],
)
def test_invalid_instances(text):
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_missing_file_and_unknown_command(capsys):
    assert run(capsys, "bench", "--instance", "/nonexistent.json")[0] == EXIT_INVALID
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_headline_table_flags_discrepancy(capsys):
    code, out, _ = run(capsys, "paper-table")
    table = {r["quantity"]: r for r in rows(out)}
    assert code == EXIT_OK
    assert abs(float(table["downward_closed_ratio"]["computed"]) - 6.5074) < 1e-3
    assert "differ" in table["note"]["note"]


def test_verify_single_suite_is_deterministic(capsys):
    args = ("verify", "--suite", "factorization", "--seed", "7", "--trials", "50000")
    first = run(capsys, *args)
    second = run(capsys, *args[:-2], "--trials", "50000", "--workers", "2")
    assert first[0] == EXIT_OK and first[1] == second[1]
    assert "factorization: PASS" in first[2]
