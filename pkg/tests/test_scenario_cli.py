import json

import pytest

from chainsem.cli import main
from chainsem.core import Action, Address, Transfer
from chainsem.execution import ChainTrace, Order
from chainsem.scenario import (
    CONGRESS_ADDR,
    ParseError,
    ScenarioError,
    exploit_scenario,
    parse_scenario,
    resolve_header,
    run_scenario,
    scenario_to_json,
)
from chainsem.tracefile import dumps_trace, loads_trace

TRANSFER_BLOCK = {
    "header": {"creator": "1", "reward": "50"},
    "actions": [{"from": "1", "kind": "transfer", "to": "2", "amount": "20"}],
}


def scenario_text(*blocks):
    return json.dumps({"blocks": list(blocks)})


# -- parsing ------------------------------------------------------------------


def test_parse_minimal_scenario():
    s = parse_scenario(scenario_text(TRANSFER_BLOCK))
    assert len(s.blocks) == 1
    assert s.blocks[0].actions == (Action(Address(1), Transfer(Address(2), 20)),)


def test_unknown_contract_name_is_a_parse_error():
    block = {"actions": [{"from": "1", "kind": "deploy", "contract": "dao", "amount": "0", "setup": {"unit": None}}]}
    with pytest.raises(ParseError) as err:
        parse_scenario(scenario_text(block))
    assert err.value.where == "blocks[0].actions[0].contract"


@pytest.mark.parametrize(
    "text, where",
    [
        ('{"blocks": [}', "line 1 column 13"),
        ('{"blocks": [], "extra": 1}', "scenario"),
        ('{"blocks": [{"header": {"height": "01"}}]}', "blocks[0].header.height"),
        ('{"blocks": [{"header": {"slot": 3}}]}', "blocks[0].header.slot"),
        ('{"blocks": [{"actions": [{"from": "1", "kind": "mint"}]}]}', "blocks[0].actions[0].kind"),
    ],
)
def test_parse_errors_locate_the_problem(text, where):
    with pytest.raises(ParseError) as err:
        parse_scenario(text)
    assert err.value.where == where


def test_missing_header_fields_get_defaults():
    s = parse_scenario(scenario_text({"header": {"reward": "5", "slot": "4"}}, {}))
    r = run_scenario(s)
    assert r.state.env.chain.current_slot == 5
    assert resolve_header(r.state, {}).block_height == 3
    h = resolve_header(r.state, {"creator": 9})
    assert (h.slot, h.finalized_height, h.creator, h.reward) == (6, 0, Address(9), 0)


def test_scenario_json_roundtrip():
    s = exploit_scenario()
    assert parse_scenario(json.dumps(scenario_to_json(s))) == s


# -- running ------------------------------------------------------------------


def test_empty_scenario():
    r = run_scenario(parse_scenario('{"blocks": []}'))
    assert r.trace == ChainTrace() and r.state.queue == ()
    assert r.state.env.chain.balances == {} and r.state.env.contracts == {}


def test_rejected_block_reports_its_index():
    bad = {"actions": [{"from": "7", "kind": "transfer", "to": "2", "amount": "1"}]}
    s = parse_scenario(scenario_text(TRANSFER_BLOCK, bad))
    with pytest.raises(ScenarioError) as err:
        run_scenario(s)
    assert err.value.block_index == 1
    r = run_scenario(s, keep_going=True)
    assert [i for i, _ in r.rejected] == [1] and r.state.env.chain.chain_height == 1


def test_correct_congress_survives_the_exploit():
    with pytest.raises(ScenarioError) as err:
        run_scenario(exploit_scenario("congress"))
    assert err.value.block_index == 2
    r = run_scenario(exploit_scenario("congress"), keep_going=True)
    assert [i for i, _ in r.rejected] == [2]


@pytest.mark.parametrize("order", list(Order))
def test_reruns_give_identical_trace_files(order):
    a = dumps_trace(run_scenario(exploit_scenario(), order).trace)
    b = dumps_trace(run_scenario(exploit_scenario(), order).trace)
    assert a == b
    assert dumps_trace(loads_trace(a)) == a


# -- command line ---------------------------------------------------------------


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_cli_run_writes_a_replayable_trace(tmp_path, capsys):
    src = tmp_path / "s.json"
    src.write_text(json.dumps(scenario_to_json(exploit_scenario())))
    trace = tmp_path / "t.json"
    code, out = run_cli(capsys, "run", src, "--order", "bfs", "--trace-out", trace)
    assert code == 0 and out["height"] == 3 and out["rejected_blocks"] == []
    code, out2 = run_cli(capsys, "validate-trace", trace)
    assert code == 0 and out2["valid"] and out2["balances"] == out["balances"]
    code, verdict = run_cli(capsys, "check-invariant", trace, "--address", CONGRESS_ADDR)
    assert code == 4 and verdict == {"holds": False, "outgoing": 4, "created": 1, "failing_step": None}
    code, verdict = run_cli(capsys, "check-invariant", trace, "--address", CONGRESS_ADDR, "--strengthened")
    assert code == 4 and verdict["failing_step"] is not None


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run_cli(capsys, "run", bad)[0] == 2
    assert run_cli(capsys, "validate-trace", bad)[0] == 2
    failing = tmp_path / "f.json"
    failing.write_text(scenario_text({"actions": [{"from": "1", "kind": "transfer", "to": "2", "amount": "1"}]}))
    assert run_cli(capsys, "run", failing)[0] == 3
    assert run_cli(capsys, "run", failing, "--keep-going")[0] == 0


def test_cli_rejects_tampered_trace(tmp_path, capsys):
    trace = tmp_path / "t.json"
    assert run_cli(capsys, "demo-exploit", "--trace-out", trace)[0] == 0
    steps = json.loads(trace.read_text())
    steps[0]["header"]["reward"] = "999"
    steps[1]["evaluation"]["amount"] = "11"
    trace.write_text(json.dumps(steps))
    code, out = run_cli(capsys, "validate-trace", trace)
    assert code == 3 and out == {"valid": False, "failing_step": 1, "error": out["error"]}


@pytest.mark.parametrize(
    "contract, holds, outgoing, rejected",
    [("buggy_congress", False, 4, []), ("congress", True, 0, [2])],
)
@pytest.mark.parametrize("order", ["dfs", "bfs"])
def test_cli_demo_exploit(capsys, contract, holds, outgoing, rejected, order):
    code, out = run_cli(capsys, "demo-exploit", "--order", order, "--contract", contract)
    assert code == 0
    assert (out["holds"], out["outgoing"], out["created"], out["rejected_blocks"]) == (holds, outgoing, 1, rejected)


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "chainsem", "demo-exploit"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["outgoing"] == 4


@pytest.mark.parametrize("name, contract", [("exploit_buggy", "buggy_congress"), ("exploit_correct", "congress")])
def test_shipped_scenarios_match_the_builtin_exploit(name, contract):
    from pathlib import Path

    path = Path(__file__).parent.parent / "scenarios" / f"{name}.json"
    assert parse_scenario(path.read_text()) == exploit_scenario(contract)
