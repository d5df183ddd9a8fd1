"""Executable semantics for smart-contract execution layers.

Contracts are pure functions from (chain view, call context, state, message)
to a new state plus a list of requested actions.  The engine evaluates those
actions in depth-first or breadth-first order and records a trace that can be
replayed and checked from the empty chain.
"""

from .core import (
    Action,
    Address,
    BlockHeader,
    Call,
    Chain,
    ContractCallContext,
    Deploy,
    Transfer,
    is_contract_address,
)
from .environment import ChainState, Environment, environments_equivalent
from .execution import (
    ActionEvaluation,
    BlockError,
    ChainBuilder,
    ChainTrace,
    EvalError,
    ExecutionFailed,
    Order,
    StepError,
    add_block,
    apply_step,
    evaluate_action,
    replay_trace,
    validate_header,
)

__all__ = [
    "Action",
    "ActionEvaluation",
    "Address",
    "BlockError",
    "BlockHeader",
    "Call",
    "Chain",
    "ChainBuilder",
    "ChainState",
    "ChainTrace",
    "ContractCallContext",
    "Deploy",
    "Environment",
    "EvalError",
    "ExecutionFailed",
    "Order",
    "StepError",
    "Transfer",
    "add_block",
    "apply_step",
    "environments_equivalent",
    "evaluate_action",
    "is_contract_address",
    "replay_trace",
    "validate_header",
]
