"""JSON encodings of headers, actions, evaluations and traces.

A trace file is a JSON array of step records::

    {"type": "block", "header": {...}, "actions": [<action>, ...]}
    {"type": "evaluate", "action": <action>, "evaluation": {...}}
    {"type": "permute", "permutation": [2, 0, 1]}

Actions look like ``{"from": "1", "kind": "transfer", "to": "7", "amount": "4"}``;
calls add ``"msg"`` and deployments carry ``"contract"`` (a registry name),
``"amount"`` and ``"setup"``.  Every integer except permutation indices and
sum branches is a decimal string.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Sequence

from .contracts import DynamicContract
from .core import I128_MAX, I128_MIN, U64_MAX, Action, Address, BlockHeader, Call, Deploy, Transfer
from .execution import (
    ActionEvaluation,
    BlockStep,
    ChainStep,
    ChainTrace,
    EvalKind,
    EvaluateStep,
    PermuteStep,
)
from .registry import BUILTIN_CONTRACTS
from .serialization import from_json, parse_decimal, to_json


class TraceFormatError(ValueError):
    def __init__(self, path: str, detail: str) -> None:
        super().__init__(f"{path}: {detail}")
        self.path = path
        self.detail = detail


def check_fields(obj: Any, path: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise TraceFormatError(path, f"expected an object, got {type(obj).__name__}")
    missing = required - set(obj)
    if missing:
        raise TraceFormatError(path, f"missing fields {sorted(missing)}")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise TraceFormatError(path, f"unknown fields {sorted(unknown)}")
    return obj


def read_u64(value: Any, path: str) -> int:
    try:
        n = parse_decimal(value)
    except ValueError as exc:
        raise TraceFormatError(path, str(exc)) from None
    if not 0 <= n <= U64_MAX:
        raise TraceFormatError(path, f"{n} outside unsigned 64-bit range")
    return n


def read_address(value: Any, path: str) -> Address:
    return Address(read_u64(value, path))


def read_amount(value: Any, path: str) -> int:
    try:
        n = parse_decimal(value, "amount")
    except ValueError as exc:
        raise TraceFormatError(path, str(exc)) from None
    if not I128_MIN <= n <= I128_MAX:
        raise TraceFormatError(path, f"{n} outside signed 128-bit range")
    return n


def read_sv(value: Any, path: str):
    try:
        return from_json(value)
    except (ValueError, TypeError, OverflowError) as exc:
        raise TraceFormatError(path, f"bad serialized value: {exc}") from None


# -- headers ----------------------------------------------------------------


def header_to_json(h: BlockHeader) -> dict:
    return {
        "height": str(h.block_height),
        "slot": str(h.slot),
        "finalized_height": str(h.finalized_height),
        "creator": str(h.creator),
        "reward": str(h.reward),
    }


HEADER_FIELDS = {"height", "slot", "finalized_height", "creator", "reward"}


def header_from_json(obj: Any, path: str = "header") -> BlockHeader:
    check_fields(obj, path, HEADER_FIELDS)
    return BlockHeader(
        block_height=read_u64(obj["height"], f"{path}.height"),
        slot=read_u64(obj["slot"], f"{path}.slot"),
        finalized_height=read_u64(obj["finalized_height"], f"{path}.finalized_height"),
        creator=read_address(obj["creator"], f"{path}.creator"),
        reward=read_amount(obj["reward"], f"{path}.reward"),
    )


# -- actions ----------------------------------------------------------------


def action_to_json(a: Action) -> dict:
    body = a.body
    out: dict[str, Any] = {"from": str(a.act_from)}
    if isinstance(body, Transfer):
        out.update(kind="transfer", to=str(body.to), amount=str(body.amount))
    elif isinstance(body, Call):
        out.update(kind="call", to=str(body.to), amount=str(body.amount), msg=to_json(body.msg))
    elif isinstance(body, Deploy):
        out.update(
            kind="deploy", contract=body.contract.name, amount=str(body.amount), setup=to_json(body.setup)
        )
    else:
        raise TypeError(f"unknown action body {body!r}")
    return out


_ACTION_FIELDS = {
    "transfer": {"from", "kind", "to", "amount"},
    "call": {"from", "kind", "to", "amount", "msg"},
    "deploy": {"from", "kind", "contract", "amount", "setup"},
}


def action_from_json(
    obj: Any, path: str = "action", registry: Mapping[str, DynamicContract] = BUILTIN_CONTRACTS
) -> Action:
    if not isinstance(obj, dict):
        raise TraceFormatError(path, "expected an object")
    kind = obj.get("kind")
    if kind not in _ACTION_FIELDS:
        raise TraceFormatError(f"{path}.kind", f"unknown action kind {kind!r}")
    check_fields(obj, path, _ACTION_FIELDS[kind])
    sender = read_address(obj["from"], f"{path}.from")
    amount = read_amount(obj["amount"], f"{path}.amount")
    if kind == "transfer":
        return Action(sender, Transfer(read_address(obj["to"], f"{path}.to"), amount))
    if kind == "call":
        to = read_address(obj["to"], f"{path}.to")
        return Action(sender, Call(to, amount, read_sv(obj["msg"], f"{path}.msg")))
    name = obj["contract"]
    if not isinstance(name, str) or name not in registry:
        raise TraceFormatError(f"{path}.contract", f"unknown contract {name!r}")
    return Action(sender, Deploy(amount, registry[name], read_sv(obj["setup"], f"{path}.setup")))


def _actions_from_json(objs: Any, path: str, registry: Mapping[str, DynamicContract]) -> tuple[Action, ...]:
    if not isinstance(objs, list):
        raise TraceFormatError(path, "expected an array of actions")
    return tuple(action_from_json(x, f"{path}[{i}]", registry) for i, x in enumerate(objs))


# -- evaluations and steps --------------------------------------------------


def evaluation_to_json(ev: ActionEvaluation) -> dict:
    return {
        "kind": ev.kind.value,
        "from": str(ev.from_addr),
        "to": str(ev.to_addr),
        "amount": str(ev.amount),
        "message": None if ev.message is None else to_json(ev.message),
        "deployed_address": None if ev.deployed_address is None else str(ev.deployed_address),
        "new_actions": [action_to_json(a) for a in ev.new_actions],
    }


_EVAL_FIELDS = {"kind", "from", "to", "amount", "message", "deployed_address", "new_actions"}


def evaluation_from_json(
    obj: Any, path: str = "evaluation", registry: Mapping[str, DynamicContract] = BUILTIN_CONTRACTS
) -> ActionEvaluation:
    check_fields(obj, path, _EVAL_FIELDS)
    try:
        kind = EvalKind(obj["kind"])
    except ValueError:
        raise TraceFormatError(f"{path}.kind", f"unknown evaluation kind {obj['kind']!r}") from None
    message = None if obj["message"] is None else read_sv(obj["message"], f"{path}.message")
    deployed = obj["deployed_address"]
    return ActionEvaluation(
        kind=kind,
        from_addr=read_address(obj["from"], f"{path}.from"),
        to_addr=read_address(obj["to"], f"{path}.to"),
        amount=read_amount(obj["amount"], f"{path}.amount"),
        message=message,
        deployed_address=None if deployed is None else read_address(deployed, f"{path}.deployed_address"),
        new_actions=_actions_from_json(obj["new_actions"], f"{path}.new_actions", registry),
    )


def step_to_json(step: ChainStep) -> dict:
    if isinstance(step, BlockStep):
        return {
            "type": "block",
            "header": header_to_json(step.header),
            "actions": [action_to_json(a) for a in step.actions],
        }
    if isinstance(step, EvaluateStep):
        return {
            "type": "evaluate",
            "action": action_to_json(step.action),
            "evaluation": evaluation_to_json(step.evaluation),
        }
    if isinstance(step, PermuteStep):
        return {"type": "permute", "permutation": list(step.permutation)}
    raise TypeError(f"unknown step {step!r}")


def step_from_json(
    obj: Any, path: str = "step", registry: Mapping[str, DynamicContract] = BUILTIN_CONTRACTS
) -> ChainStep:
    if not isinstance(obj, dict):
        raise TraceFormatError(path, "expected an object")
    kind = obj.get("type")
    if kind == "block":
        check_fields(obj, path, {"type", "header", "actions"})
        return BlockStep(
            header_from_json(obj["header"], f"{path}.header"),
            _actions_from_json(obj["actions"], f"{path}.actions", registry),
        )
    if kind == "evaluate":
        check_fields(obj, path, {"type", "action", "evaluation"})
        return EvaluateStep(
            action_from_json(obj["action"], f"{path}.action", registry),
            evaluation_from_json(obj["evaluation"], f"{path}.evaluation", registry),
        )
    if kind == "permute":
        check_fields(obj, path, {"type", "permutation"})
        perm = obj["permutation"]
        if not isinstance(perm, list) or not all(type(i) is int and i >= 0 for i in perm):
            raise TraceFormatError(f"{path}.permutation", "expected an array of non-negative integers")
        return PermuteStep(tuple(perm))
    raise TraceFormatError(f"{path}.type", f"unknown step type {kind!r}")


def trace_to_json(t: ChainTrace | Sequence[ChainStep]) -> list:
    return [step_to_json(s) for s in t]


def trace_from_json(obj: Any, registry: Mapping[str, DynamicContract] = BUILTIN_CONTRACTS) -> ChainTrace:
    if not isinstance(obj, list):
        raise TraceFormatError("trace", "expected an array of steps")
    return ChainTrace(tuple(step_from_json(s, f"trace[{i}]", registry) for i, s in enumerate(obj)))


def dumps_trace(t: ChainTrace | Sequence[ChainStep]) -> str:
    return json.dumps(trace_to_json(t), indent=1, sort_keys=True) + "\n"


def loads_trace(text: str, registry: Mapping[str, DynamicContract] = BUILTIN_CONTRACTS) -> ChainTrace:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return trace_from_json(obj, registry)
