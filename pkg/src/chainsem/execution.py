"""Action evaluation, the chain step relation, chain builders and trace replay.

A chain moves by three kinds of step.  A block step adds a validated header
and a list of user-originated actions to an empty queue.  An evaluate step
pops the head of the queue, evaluates it and pushes the resulting actions on
the front.  A permute step reorders the queue without touching the
environment.  Pushing on the front gives depth-first order; a breadth-first
builder follows every spawning evaluation with a permute that rotates the
new actions to the back.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence, Union

from .core import (
    CONTRACT_ADDRESS_BASE,
    Action,
    Address,
    BlockHeader,
    Call,
    ContractCallContext,
    Deploy,
    Transfer,
    check_amount,
    is_contract_address,
)
from .environment import (
    ChainState,
    Environment,
    credit,
    register_contract,
    set_contract_state,
    transfer_balance,
)
from .serialization import SerializedValue

DEFAULT_STEP_LIMIT = 10_000


# -- errors -----------------------------------------------------------------


class EvalError(Exception):
    """An action cannot be evaluated in the given environment."""


class NegativeAmount(EvalError):
    pass


class InsufficientBalance(EvalError):
    pass


class NoContractAtAddress(EvalError):
    pass


class ContractRejected(EvalError):
    pass


class AddressNotFresh(EvalError):
    pass


class AmountOverflow(EvalError):
    pass


class BlockErrorReason(enum.Enum):
    HEIGHT = "height"
    SLOT = "slot"
    FINALIZED = "finalized"
    REWARD = "reward"
    CREATOR = "creator"
    ORIGIN = "origin"


class BlockError(Exception):
    def __init__(self, reason: BlockErrorReason, detail: str) -> None:
        super().__init__(f"{reason.value}: {detail}")
        self.reason = reason
        self.detail = detail


class ExecutionFailed(Exception):
    """Some action in a block could not be evaluated; the block is dropped."""

    def __init__(self, detail: str, cause: Exception | None = None, action: Action | None = None) -> None:
        super().__init__(detail)
        self.cause = cause
        self.action = action


class StepError(Exception):
    def __init__(self, detail: str, cause: Exception | None = None, index: int | None = None) -> None:
        where = f"step {index}: " if index is not None else ""
        super().__init__(where + detail)
        self.detail = detail
        self.cause = cause
        self.index = index


# -- action evaluation ------------------------------------------------------


class EvalKind(enum.Enum):
    TRANSFER = "transfer"
    DEPLOY = "deploy"
    CALL = "call"


@dataclass(frozen=True)
class ActionEvaluation:
    """The record of how one action was evaluated, including implementation choices."""

    kind: EvalKind
    from_addr: Address
    to_addr: Address
    amount: int
    message: Optional[SerializedValue] = None
    deployed_address: Optional[Address] = None
    new_actions: tuple[Action, ...] = ()


def evaluate_action(
    e: Environment, a: Action, fresh_addr: Address | None = None
) -> tuple[Environment, tuple[Action, ...], ActionEvaluation]:
    """Evaluate one action, returning the new environment, spawned actions and record.

    Transfers to contract addresses run the contract's receive with no
    message.  ``fresh_addr`` is only consulted for deployments.
    """
    body = a.body
    try:
        amount = check_amount(body.amount)
    except OverflowError as exc:
        raise AmountOverflow(str(exc)) from exc
    if amount < 0:
        raise NegativeAmount(f"negative amount {amount}")
    balance = e.account_balance(a.act_from)
    if amount > balance:
        raise InsufficientBalance(f"{a.act_from} holds {balance}, needs {amount}")

    if isinstance(body, Deploy):
        if fresh_addr is None or not is_contract_address(fresh_addr) or fresh_addr in e.contracts:
            raise AddressNotFresh(f"cannot deploy at {fresh_addr}")
        moved = _transfer(a.act_from, fresh_addr, amount, e)
        ctx = ContractCallContext(a.act_from, fresh_addr, amount)
        state = body.contract.init(moved.chain, ctx, body.setup)
        if state is None:
            raise ContractRejected(f"{body.contract.name} init rejected its setup")
        new_env = register_contract(fresh_addr, body.contract, state, moved)
        record = ActionEvaluation(EvalKind.DEPLOY, a.act_from, fresh_addr, amount, None, fresh_addr, ())
        return new_env, (), record

    if isinstance(body, Transfer) and not is_contract_address(body.to):
        new_env = _transfer(a.act_from, body.to, amount, e)
        return new_env, (), ActionEvaluation(EvalKind.TRANSFER, a.act_from, body.to, amount)

    if not isinstance(body, (Transfer, Call)):
        raise TypeError(f"unknown action body {body!r}")
    msg = body.msg if isinstance(body, Call) else None
    contract = e.contracts.get(body.to)
    if contract is None:
        raise NoContractAtAddress(f"no contract at {body.to}")
    moved = _transfer(a.act_from, body.to, amount, e)
    ctx = ContractCallContext(a.act_from, body.to, amount)
    result = contract.receive(moved.chain, ctx, moved.contract_states[body.to], msg)
    if result is None:
        raise ContractRejected(f"{contract.name} at {body.to} rejected the call")
    new_state, bodies = result
    if not all(isinstance(b, (Transfer, Call, Deploy)) for b in bodies):
        raise ContractRejected(f"{contract.name} returned a malformed action list")
    new_actions = tuple(Action(body.to, b) for b in bodies)
    new_env = set_contract_state(body.to, new_state, moved)
    record = ActionEvaluation(EvalKind.CALL, a.act_from, body.to, amount, msg, None, new_actions)
    return new_env, new_actions, record


def _transfer(from_addr: Address, to_addr: Address, amount: int, e: Environment) -> Environment:
    try:
        return transfer_balance(from_addr, to_addr, amount, e)
    except OverflowError as exc:
        raise AmountOverflow(str(exc)) from exc


# -- blocks -----------------------------------------------------------------


def validate_header(e: Environment, h: BlockHeader) -> None:
    """Raise ``BlockError`` unless ``h`` may extend the chain in ``e``."""
    chain = e.chain
    if h.block_height != chain.chain_height + 1:
        raise BlockError(
            BlockErrorReason.HEIGHT, f"expected height {chain.chain_height + 1}, got {h.block_height}"
        )
    if h.slot <= chain.current_slot:
        raise BlockError(BlockErrorReason.SLOT, f"slot {h.slot} not after {chain.current_slot}")
    if not chain.finalized_height <= h.finalized_height < h.block_height:
        raise BlockError(
            BlockErrorReason.FINALIZED,
            f"finalized height {h.finalized_height} outside [{chain.finalized_height}, {h.block_height})",
        )
    if h.reward < 0:
        raise BlockError(BlockErrorReason.REWARD, f"negative reward {h.reward}")
    if is_contract_address(h.creator):
        raise BlockError(BlockErrorReason.CREATOR, f"creator {h.creator} is a contract")


def _add_block(e: Environment, h: BlockHeader, actions: Sequence[Action]) -> Environment:
    validate_header(e, h)
    for act in actions:
        if is_contract_address(act.act_from):
            raise BlockError(BlockErrorReason.ORIGIN, f"action from contract {act.act_from}")
    chain = replace(
        e.chain,
        chain_height=h.block_height,
        current_slot=h.slot,
        finalized_height=h.finalized_height,
    )
    try:
        return credit(h.creator, h.reward, replace(e, chain=chain))
    except OverflowError as exc:
        raise BlockError(BlockErrorReason.REWARD, str(exc)) from exc


# -- steps and traces -------------------------------------------------------


@dataclass(frozen=True)
class BlockStep:
    header: BlockHeader
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class EvaluateStep:
    action: Action
    evaluation: ActionEvaluation


@dataclass(frozen=True)
class PermuteStep:
    # new_queue[i] = old_queue[permutation[i]]
    permutation: tuple[int, ...]


ChainStep = Union[BlockStep, EvaluateStep, PermuteStep]


@dataclass(frozen=True)
class ChainTrace:
    steps: tuple[ChainStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[ChainStep]:
        return iter(self.steps)

    def __getitem__(self, i: int) -> ChainStep:
        return self.steps[i]

    def extended(self, steps: Sequence[ChainStep]) -> ChainTrace:
        return ChainTrace(self.steps + tuple(steps))


def permute_queue(queue: Sequence[Action], permutation: Sequence[int]) -> tuple[Action, ...]:
    if sorted(permutation) != list(range(len(queue))):
        raise StepError(f"{list(permutation)} is not a permutation of {len(queue)} queue positions")
    return tuple(queue[i] for i in permutation)


def apply_step(s: ChainState, step: ChainStep) -> ChainState:
    """Take one step, or raise ``StepError`` if ``step`` is not allowed from ``s``."""
    if isinstance(step, BlockStep):
        if s.queue:
            raise StepError("block added while actions are still queued")
        try:
            env = _add_block(s.env, step.header, step.actions)
        except BlockError as exc:
            raise StepError(f"invalid block: {exc}", exc) from exc
        return ChainState(env, step.actions)

    if isinstance(step, EvaluateStep):
        if not s.queue:
            raise StepError("evaluate step on an empty queue")
        head, rest = s.queue[0], s.queue[1:]
        if head != step.action:
            raise StepError("recorded action is not the head of the queue")
        try:
            env, new_actions, record = evaluate_action(s.env, head, step.evaluation.deployed_address)
        except EvalError as exc:
            raise StepError(f"action cannot be evaluated: {exc}", exc) from exc
        if record != step.evaluation:
            raise StepError("recorded evaluation does not match the action's effect")
        return ChainState(env, new_actions + rest)

    if isinstance(step, PermuteStep):
        return ChainState(s.env, permute_queue(s.queue, step.permutation))

    raise StepError(f"unknown step {step!r}")


def iter_replay(t: ChainTrace | Sequence[ChainStep], start: ChainState | None = None) -> Iterator[ChainState]:
    """Yield the state after each step; raises ``StepError`` carrying the step index."""
    state = ChainState() if start is None else start
    for i, step in enumerate(t):
        try:
            state = apply_step(state, step)
        except StepError as exc:
            raise StepError(exc.detail, exc.cause, i) from exc
        yield state


def replay_trace(t: ChainTrace | Sequence[ChainStep]) -> ChainState:
    """Fold the step relation from the empty state; success certifies reachability."""
    state = ChainState()
    for state in iter_replay(t):
        pass
    return state


# -- builders ---------------------------------------------------------------


class Order(enum.Enum):
    DEPTH_FIRST = "dfs"
    BREADTH_FIRST = "bfs"


@dataclass(frozen=True)
class ChainBuilder:
    """An executable chain that records a replayable trace of everything it did.

    Builders are immutable: ``add_block`` returns a new builder or raises,
    leaving the original untouched.
    """

    order: Order = Order.DEPTH_FIRST
    state: ChainState = field(default_factory=ChainState)
    trace: ChainTrace = field(default_factory=ChainTrace)
    next_contract_ordinal: int = 0
    step_limit: int = DEFAULT_STEP_LIMIT

    @property
    def env(self) -> Environment:
        return self.state.env

    def add_block(self, header: BlockHeader, actions: Sequence[Action]) -> ChainBuilder:
        actions = tuple(actions)
        assert not self.state.queue, "builder queue must be empty between blocks"
        env = _add_block(self.state.env, header, actions)
        steps: list[ChainStep] = [BlockStep(header, actions)]
        queue = actions
        ordinal = self.next_contract_ordinal
        evaluations = 0
        while queue:
            evaluations += 1
            if evaluations > self.step_limit:
                raise ExecutionFailed(f"block exceeded {self.step_limit} evaluations")
            head, rest = queue[0], queue[1:]
            fresh = None
            if isinstance(head.body, Deploy):
                fresh = Address(CONTRACT_ADDRESS_BASE + ordinal)
                while fresh in env.contracts:
                    ordinal += 1
                    fresh = Address(CONTRACT_ADDRESS_BASE + ordinal)
            try:
                env, new_actions, record = evaluate_action(env, head, fresh)
            except EvalError as exc:
                raise ExecutionFailed(f"{type(exc).__name__}: {exc}", exc, head) from exc
            if fresh is not None:
                ordinal += 1
            steps.append(EvaluateStep(head, record))
            queue = new_actions + rest
            if self.order is Order.BREADTH_FIRST and new_actions:
                k, r = len(new_actions), len(rest)
                perm = tuple(range(k, k + r)) + tuple(range(k))
                steps.append(PermuteStep(perm))
                queue = rest + new_actions
        return replace(
            self,
            state=ChainState(env, ()),
            trace=self.trace.extended(steps),
            next_contract_ordinal=ordinal,
        )


def depth_first_builder(step_limit: int = DEFAULT_STEP_LIMIT) -> ChainBuilder:
    return ChainBuilder(Order.DEPTH_FIRST, step_limit=step_limit)


def breadth_first_builder(step_limit: int = DEFAULT_STEP_LIMIT) -> ChainBuilder:
    return ChainBuilder(Order.BREADTH_FIRST, step_limit=step_limit)


def add_block(b: ChainBuilder, h: BlockHeader, actions: Sequence[Action]) -> ChainBuilder:
    return b.add_block(h, actions)
