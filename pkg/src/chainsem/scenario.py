"""Scenario files: scripted sequences of blocks run through a chain builder.

A scenario is a JSON object ``{"blocks": [...]}``.  Each block has an
optional ``"header"`` with any of ``height``, ``slot``, ``finalized_height``,
``creator`` and ``reward`` (decimal strings), and an ``"actions"`` array in
the trace-file action format.  Omitted header fields default to the next
height, the previous slot plus one, the previous finalized height, creator
``0`` and reward ``0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .congress import MSG, RULES, ATTACKER_STATE, AddMember, AttackerState, CreateProposal, CTransfer
from .congress import FinishProposal, Rules, VoteForProposal
from .contracts import DynamicContract
from .core import CONTRACT_ADDRESS_BASE, Action, Address, BlockHeader, Call, Deploy
from .execution import BlockError, ChainBuilder, ChainTrace, ExecutionFailed, Order
from .environment import ChainState
from .registry import BUILTIN_CONTRACTS
from .tracefile import (
    TraceFormatError,
    action_from_json,
    action_to_json,
    check_fields,
    read_address,
    read_amount,
    read_u64,
)

SCENARIO_CONTRACTS = frozenset({"congress", "buggy_congress", "attacker", "counter"})

_HEADER_KEYS = {"height", "slot", "finalized_height", "creator", "reward"}


class ParseError(ValueError):
    def __init__(self, where: str, detail: str) -> None:
        super().__init__(f"{where}: {detail}")
        self.where = where
        self.detail = detail


class ScenarioError(Exception):
    """A block of the scenario was rejected by the builder."""

    def __init__(self, block_index: int, cause: Exception) -> None:
        super().__init__(f"block {block_index}: {type(cause).__name__}: {cause}")
        self.block_index = block_index
        self.cause = cause


@dataclass(frozen=True)
class ScenarioBlock:
    actions: tuple[Action, ...] = ()
    # header fields the scenario sets explicitly; the rest are defaulted at run time
    header: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    blocks: tuple[ScenarioBlock, ...] = ()


def parse_scenario(text: str, registry: Mapping[str, DynamicContract] = BUILTIN_CONTRACTS) -> Scenario:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    try:
        return scenario_from_json(obj, registry)
    except TraceFormatError as exc:
        raise ParseError(exc.path, exc.detail) from None


def scenario_from_json(obj: Any, registry: Mapping[str, DynamicContract] = BUILTIN_CONTRACTS) -> Scenario:
    usable = {name: c for name, c in registry.items() if name in SCENARIO_CONTRACTS}
    check_fields(obj, "scenario", {"blocks"})
    if not isinstance(obj["blocks"], list):
        raise TraceFormatError("scenario.blocks", "expected an array")
    blocks = []
    for i, b in enumerate(obj["blocks"]):
        path = f"blocks[{i}]"
        check_fields(b, path, set(), {"header", "actions"})
        header = check_fields(b.get("header", {}), f"{path}.header", set(), _HEADER_KEYS)
        overrides: dict[str, int] = {}
        for key, value in header.items():
            where = f"{path}.header.{key}"
            if key == "creator":
                overrides[key] = read_address(value, where)
            elif key == "reward":
                overrides[key] = read_amount(value, where)
            else:
                overrides[key] = read_u64(value, where)
        raw_actions = b.get("actions", [])
        if not isinstance(raw_actions, list):
            raise TraceFormatError(f"{path}.actions", "expected an array")
        actions = tuple(
            action_from_json(a, f"{path}.actions[{j}]", usable) for j, a in enumerate(raw_actions)
        )
        blocks.append(ScenarioBlock(actions, overrides))
    return Scenario(tuple(blocks))


def scenario_to_json(s: Scenario) -> dict:
    blocks = []
    for b in s.blocks:
        out: dict[str, Any] = {}
        if b.header:
            out["header"] = {k: str(v) for k, v in sorted(b.header.items())}
        out["actions"] = [action_to_json(a) for a in b.actions]
        blocks.append(out)
    return {"blocks": blocks}


def resolve_header(state: ChainState, overrides: Mapping[str, int]) -> BlockHeader:
    chain = state.env.chain
    return BlockHeader(
        block_height=overrides.get("height", chain.chain_height + 1),
        slot=overrides.get("slot", chain.current_slot + 1),
        finalized_height=overrides.get("finalized_height", chain.finalized_height),
        creator=Address(overrides.get("creator", 0)),
        reward=overrides.get("reward", 0),
    )


@dataclass(frozen=True)
class RunResult:
    builder: ChainBuilder
    # (block index, error) for blocks dropped under keep_going
    rejected: tuple[tuple[int, Exception], ...] = ()

    @property
    def state(self) -> ChainState:
        return self.builder.state

    @property
    def trace(self) -> ChainTrace:
        return self.builder.trace


def run_scenario(
    s: Scenario,
    order: Order = Order.DEPTH_FIRST,
    keep_going: bool = False,
    builder: Optional[ChainBuilder] = None,
) -> RunResult:
    """Fold ``add_block`` over the scenario's blocks.

    By default the first rejected block raises ``ScenarioError``.  With
    ``keep_going`` a rejected block is dropped, as a real chain would drop
    an invalid block, and the run continues from the previous state.
    """
    b = builder if builder is not None else ChainBuilder(order)
    rejected = []
    for i, blk in enumerate(s.blocks):
        header = resolve_header(b.state, blk.header)
        try:
            b = b.add_block(header, blk.actions)
        except (BlockError, ExecutionFailed) as exc:
            if not keep_going:
                raise ScenarioError(i, exc) from exc
            rejected.append((i, exc))
    return RunResult(b, tuple(rejected))


# -- the reentrancy demonstration -------------------------------------------

OWNER = Address(1)
MEMBER = Address(2)
MALLORY = Address(3)
CONGRESS_ADDR = Address(CONTRACT_ADDRESS_BASE)
ATTACKER_ADDR = Address(CONTRACT_ADDRESS_BASE + 1)


def exploit_scenario(congress: str = "buggy_congress", reentries: int = 3) -> Scenario:
    """Fund a Congress, pass a one-action proposal paying the attacker, then finish it.

    The attacker contract answers each payment by finishing the same
    proposal again, up to ``reentries`` times.
    """
    code = BUILTIN_CONTRACTS[congress]
    rules = Rules(500, 501, 1)
    attacker_setup = AttackerState(reentries, CONGRESS_ADDR, 1)

    def call(sender: Address, msg) -> Action:
        return Action(sender, Call(CONGRESS_ADDR, 0, MSG.serialize(msg)))

    deploy = ScenarioBlock(
        (
            Action(OWNER, Deploy(10, code, RULES.serialize(rules))),
            Action(OWNER, Deploy(0, BUILTIN_CONTRACTS["attacker"], ATTACKER_STATE.serialize(attacker_setup))),
        ),
        {"creator": OWNER, "reward": 1000},
    )
    propose = ScenarioBlock(
        (
            call(OWNER, AddMember(MEMBER)),
            call(MALLORY, CreateProposal((CTransfer(ATTACKER_ADDR, 1),))),
            call(MEMBER, VoteForProposal(1)),
        )
    )
    finish = ScenarioBlock((call(MALLORY, FinishProposal(1)),))
    return Scenario((deploy, propose, finish))
