"""Transaction extraction from traces and the Congress counting invariant.

The plain invariant says a Congress never sent more transactions than the
number of actions ever put into proposals.  The strengthened form also counts
actions still stored in live proposals and actions from the Congress still
waiting in the queue, and holds after every single step, not just between
blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .congress import MSG, STATE, CONGRESS_CODE_NAMES, CreateProposal
from .core import Address
from .environment import ChainState
from .execution import ChainStep, ChainTrace, EvalKind, EvaluateStep, iter_replay, replay_trace
from .serialization import SerializedValue


@dataclass(frozen=True)
class Tx:
    from_addr: Address
    to_addr: Address
    amount: int
    message: Optional[SerializedValue]
    kind: EvalKind


def _tx(step: EvaluateStep) -> Tx:
    ev = step.evaluation
    return Tx(ev.from_addr, ev.to_addr, ev.amount, ev.message, ev.kind)


def transactions(t: ChainTrace | Sequence[ChainStep], validate: bool = True) -> list[Tx]:
    """One transaction per evaluate step, in trace order.

    With ``validate`` the trace is replayed first and a ``StepError`` is
    raised if it is not a valid trace from the empty state.
    """
    if validate:
        replay_trace(t)
    return [_tx(s) for s in t if isinstance(s, EvaluateStep)]


def outgoing_txs(t: ChainTrace | Sequence[ChainStep], addr: int, validate: bool = True) -> list[Tx]:
    return [tx for tx in transactions(t, validate) if tx.from_addr == addr]


def incoming_txs(t: ChainTrace | Sequence[ChainStep], addr: int, validate: bool = True) -> list[Tx]:
    return [tx for tx in transactions(t, validate) if tx.to_addr == addr]


def _created(message: Optional[SerializedValue]) -> int:
    msg = MSG.try_deserialize(message)
    return len(msg.actions) if isinstance(msg, CreateProposal) else 0


def num_acts_created_in_proposals(txs: Sequence[Tx]) -> int:
    return sum(_created(tx.message) for tx in txs)


@dataclass(frozen=True)
class Verdict:
    holds: bool
    outgoing: int
    created: int
    failing_step: Optional[int] = None
    # only filled in by the strengthened check
    stored: Optional[int] = None
    queued: Optional[int] = None

    def to_json(self) -> dict:
        out = {
            "holds": self.holds,
            "outgoing": self.outgoing,
            "created": self.created,
            "failing_step": self.failing_step,
        }
        if self.stored is not None:
            out["stored"] = self.stored
            out["queued"] = self.queued
        return out


def check_congress_invariant(t: ChainTrace | Sequence[ChainStep], addr: int, validate: bool = True) -> Verdict:
    if validate:
        final = replay_trace(t)
        if final.queue:
            raise ValueError("the invariant is stated for states with an empty queue")
    txs = transactions(t, validate=False)
    outgoing = sum(1 for tx in txs if tx.from_addr == addr)
    created = num_acts_created_in_proposals([tx for tx in txs if tx.to_addr == addr])
    return Verdict(outgoing <= created, outgoing, created)


@dataclass(frozen=True)
class StrengthenedRow:
    index: int
    outgoing: int
    stored: int
    queued: int
    created: int
    state: ChainState

    @property
    def holds(self) -> bool:
        return self.outgoing + self.stored + self.queued <= self.created


def strengthened_counts(t: ChainTrace | Sequence[ChainStep], addr: int) -> Iterator[StrengthenedRow]:
    """Replay ``t`` and yield the four invariant quantities after every step."""
    outgoing = created = stored = 0
    last_sv = None
    for i, (step, state) in enumerate(zip(t, iter_replay(t))):
        if isinstance(step, EvaluateStep):
            tx = _tx(step)
            if tx.from_addr == addr:
                outgoing += 1
            if tx.to_addr == addr:
                created += _created(tx.message)
        sv = state.env.contract_states.get(addr)
        if sv is not last_sv:
            last_sv = sv
            stored = 0
            contract = state.env.contracts.get(addr)
            if sv is not None and contract is not None and contract.name in CONGRESS_CODE_NAMES:
                stored = STATE.deserialize(sv).stored_action_count()
        queued = sum(1 for a in state.queue if a.act_from == addr)
        yield StrengthenedRow(i, outgoing, stored, queued, created, state)


def check_strengthened_invariant(
    t: ChainTrace | Sequence[ChainStep], addr: int, s: Optional[ChainState] = None
) -> Verdict:
    """Check the strengthened inequality after every step of ``t``.

    The verdict reports the first failing step, or the final counts when the
    inequality holds throughout.  If ``s`` is given it must equal the replay
    result of ``t``.
    """
    last = None
    for row in strengthened_counts(t, addr):
        if not row.holds:
            return Verdict(False, row.outgoing, row.created, row.index, row.stored, row.queued)
        last = row
    contract = None if last is None else last.state.env.contracts.get(addr)
    if contract is None or contract.name not in CONGRESS_CODE_NAMES:
        raise ValueError(f"no Congress deployed at {addr}")
    if s is not None and (s.queue != last.state.queue or s.env != last.state.env):
        raise ValueError("given state is not the replay result of the trace")
    return Verdict(True, last.outgoing, last.created, None, last.stored, last.queued)
