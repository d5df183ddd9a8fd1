"""The Congress governance contract, a reentrancy-prone variant, and an attacker.

Members vote on proposals; a proposal carries transfers and calls that the
Congress sends out once the proposal has been debated long enough, has been
finished, and passed.  The correct Congress removes a proposal from its state
in the same step that emits the proposal's actions, so a callee that
reenters with another ``FinishProposal`` finds nothing to finish.  The buggy
variant keeps the proposal around, which is enough for the attacker contract
to drain it repeatedly under depth-first execution.

``Msg`` branch table (nested binary sums, declaration order)::

    TransferOwnership    [0]          CreateProposal       [1,1,1,1,0]
    ChangeRules          [1,0]        VoteForProposal      [1,1,1,1,1,0]
    AddMember            [1,1,0]      VoteAgainstProposal  [1,1,1,1,1,1,0]
    RemoveMember         [1,1,1,0]    RetractVote          [1,1,1,1,1,1,1,0]
                                      FinishProposal       [1,1,1,1,1,1,1,1]
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Optional

from .contracts import TypedContract, wrap_typed_contract
from .core import ActionBody, Address, Call, Chain, ContractCallContext, Transfer
from .serialization import (
    ADDRESS,
    BOOL,
    INT,
    RAW,
    Codec,
    SerializedValue,
    list_of,
    map_of,
    mapped,
    nat,
    pair,
    set_of,
    tuple_of,
    variants,
)

ProposalId = int

NAT = nat(INT)


@dataclass(frozen=True)
class Rules:
    min_vote_count_permille: int
    margin_needed_permille: int
    debating_period_in_blocks: int

    def valid(self) -> bool:
        return (
            0 <= self.min_vote_count_permille <= 1000
            and 0 <= self.margin_needed_permille <= 1000
            and self.debating_period_in_blocks >= 0
        )


@dataclass(frozen=True)
class CTransfer:
    to: Address
    amount: int

    def payload(self) -> tuple:
        return (self.to, self.amount)

    @classmethod
    def from_payload(cls, p: tuple) -> CTransfer:
        return cls(*p)

    def to_body(self) -> ActionBody:
        return Transfer(self.to, self.amount)


@dataclass(frozen=True)
class CCall:
    to: Address
    amount: int
    msg: SerializedValue

    def payload(self) -> tuple:
        return (self.to, self.amount, self.msg)

    @classmethod
    def from_payload(cls, p: tuple) -> CCall:
        return cls(*p)

    def to_body(self) -> ActionBody:
        return Call(self.to, self.amount, self.msg)


CongressAction = CTransfer | CCall


@dataclass(frozen=True)
class Proposal:
    actions: tuple[CongressAction, ...]
    # member -> True for a vote in favour, False against
    votes: Mapping[Address, bool]
    proposed_in_slot: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "votes", dict(self.votes))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class CongressState:
    owner: Address
    rules: Rules
    members: frozenset[Address] = frozenset()
    proposals: Mapping[ProposalId, Proposal] = field(default_factory=dict)
    next_proposal_id: ProposalId = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(self.members))
        object.__setattr__(self, "proposals", dict(self.proposals))

    __hash__ = None  # type: ignore[assignment]

    def stored_action_count(self) -> int:
        return sum(len(p.actions) for p in self.proposals.values())


# -- messages ---------------------------------------------------------------


class _Single:
    """A message case with exactly one payload field."""

    def payload(self):
        return getattr(self, fields(self)[0].name)

    @classmethod
    def from_payload(cls, p):
        return cls(p)


@dataclass(frozen=True)
class TransferOwnership(_Single):
    new_owner: Address


@dataclass(frozen=True)
class ChangeRules(_Single):
    rules: Rules


@dataclass(frozen=True)
class AddMember(_Single):
    member: Address


@dataclass(frozen=True)
class RemoveMember(_Single):
    member: Address


@dataclass(frozen=True)
class CreateProposal(_Single):
    actions: tuple[CongressAction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))


@dataclass(frozen=True)
class VoteForProposal(_Single):
    pid: ProposalId


@dataclass(frozen=True)
class VoteAgainstProposal(_Single):
    pid: ProposalId


@dataclass(frozen=True)
class RetractVote(_Single):
    pid: ProposalId


@dataclass(frozen=True)
class FinishProposal(_Single):
    pid: ProposalId


Msg = (
    TransferOwnership
    | ChangeRules
    | AddMember
    | RemoveMember
    | CreateProposal
    | VoteForProposal
    | VoteAgainstProposal
    | RetractVote
    | FinishProposal
)


# -- codecs -----------------------------------------------------------------

RULES: Codec[Rules] = mapped(
    tuple_of(INT, INT, INT),
    lambda t: Rules(*t),
    lambda r: (r.min_vote_count_permille, r.margin_needed_permille, r.debating_period_in_blocks),
    "rules",
)

CONGRESS_ACTION: Codec[CongressAction] = variants(
    [(CTransfer, pair(ADDRESS, INT)), (CCall, tuple_of(ADDRESS, INT, RAW))],
    "congress_action",
)

PROPOSAL: Codec[Proposal] = mapped(
    tuple_of(list_of(CONGRESS_ACTION), map_of(ADDRESS, BOOL), NAT),
    lambda t: Proposal(*t),
    lambda p: (p.actions, p.votes, p.proposed_in_slot),
    "proposal",
)

STATE: Codec[CongressState] = mapped(
    tuple_of(ADDRESS, RULES, set_of(ADDRESS), map_of(NAT, PROPOSAL), NAT),
    lambda t: CongressState(*t),
    lambda s: (s.owner, s.rules, s.members, s.proposals, s.next_proposal_id),
    "congress_state",
)

MSG: Codec[Msg] = variants(
    [
        (TransferOwnership, ADDRESS),
        (ChangeRules, RULES),
        (AddMember, ADDRESS),
        (RemoveMember, ADDRESS),
        (CreateProposal, list_of(CONGRESS_ACTION)),
        (VoteForProposal, NAT),
        (VoteAgainstProposal, NAT),
        (RetractVote, NAT),
        (FinishProposal, NAT),
    ],
    "congress_msg",
)


# -- contract logic ---------------------------------------------------------


def proposal_passed(p: Proposal, r: Rules, member_count: int) -> bool:
    """Quorum and margin test; hitting a threshold exactly counts as passing."""
    total = len(p.votes)
    in_favour = sum(1 for v in p.votes.values() if v)
    return (
        total * 1000 >= r.min_vote_count_permille * member_count
        and in_favour * 1000 >= r.margin_needed_permille * total
    )


def congress_init(chain: Chain, ctx: ContractCallContext, setup: Rules) -> Optional[CongressState]:
    if not setup.valid():
        return None
    return CongressState(owner=ctx.ctx_from, rules=setup)


Result = Optional[tuple[CongressState, list[ActionBody]]]


def _receive(
    chain: Chain,
    ctx: ContractCallContext,
    st: CongressState,
    msg: Optional[Msg],
    clear_finished: bool,
) -> Result:
    sender = ctx.ctx_from
    if msg is None:
        return st, []

    if isinstance(msg, (TransferOwnership, ChangeRules, AddMember, RemoveMember)):
        if sender != st.owner:
            return None
        if isinstance(msg, TransferOwnership):
            return replace(st, owner=msg.new_owner), []
        if isinstance(msg, ChangeRules):
            if not msg.rules.valid():
                return None
            return replace(st, rules=msg.rules), []
        if isinstance(msg, AddMember):
            if msg.member in st.members:
                return None
            return replace(st, members=st.members | {msg.member}), []
        if msg.member not in st.members:
            return None
        proposals = {
            pid: replace(p, votes={m: v for m, v in p.votes.items() if m != msg.member})
            for pid, p in st.proposals.items()
        }
        return replace(st, members=st.members - {msg.member}, proposals=proposals), []

    if isinstance(msg, CreateProposal):
        if any(a.amount < 0 for a in msg.actions):
            return None
        pid = st.next_proposal_id
        proposal = Proposal(msg.actions, {}, chain.current_slot)
        return replace(st, proposals={**st.proposals, pid: proposal}, next_proposal_id=pid + 1), []

    if isinstance(msg, (VoteForProposal, VoteAgainstProposal, RetractVote)):
        p = st.proposals.get(msg.pid)
        if sender not in st.members or p is None:
            return None
        votes = dict(p.votes)
        if isinstance(msg, RetractVote):
            if sender not in votes:
                return None
            del votes[sender]
        else:
            votes[sender] = isinstance(msg, VoteForProposal)
        return replace(st, proposals={**st.proposals, msg.pid: replace(p, votes=votes)}), []

    if isinstance(msg, FinishProposal):
        p = st.proposals.get(msg.pid)
        if p is None:
            return None
        if chain.current_slot < p.proposed_in_slot + st.rules.debating_period_in_blocks:
            return None
        new_st = st
        if clear_finished:
            new_st = replace(st, proposals={k: v for k, v in st.proposals.items() if k != msg.pid})
        if not proposal_passed(p, st.rules, len(st.members)):
            return new_st, []
        return new_st, [a.to_body() for a in p.actions]

    return None


def congress_receive(chain: Chain, ctx: ContractCallContext, st: CongressState, msg: Optional[Msg]) -> Result:
    return _receive(chain, ctx, st, msg, clear_finished=True)


def buggy_congress_receive(
    chain: Chain, ctx: ContractCallContext, st: CongressState, msg: Optional[Msg]
) -> Result:
    """Like ``congress_receive`` but a finished proposal stays in the state."""
    return _receive(chain, ctx, st, msg, clear_finished=False)


CONGRESS_TYPED = TypedContract("congress", RULES, STATE, MSG, congress_init, congress_receive)
BUGGY_CONGRESS_TYPED = TypedContract(
    "buggy_congress", RULES, STATE, MSG, congress_init, buggy_congress_receive
)

CONGRESS = wrap_typed_contract(CONGRESS_TYPED)
BUGGY_CONGRESS = wrap_typed_contract(BUGGY_CONGRESS_TYPED)

CONGRESS_CODE_NAMES = frozenset({CONGRESS.name, BUGGY_CONGRESS.name})


# -- attacker ---------------------------------------------------------------


@dataclass(frozen=True)
class AttackerState:
    reentries_left: int
    target: Address
    pid: ProposalId


ATTACKER_STATE: Codec[AttackerState] = mapped(
    tuple_of(NAT, ADDRESS, NAT),
    lambda t: AttackerState(*t),
    lambda s: (s.reentries_left, s.target, s.pid),
    "attacker_state",
)


def attacker_init(chain: Chain, ctx: ContractCallContext, setup: AttackerState) -> AttackerState:
    return setup


def attacker_receive(
    chain: Chain, ctx: ContractCallContext, st: AttackerState, msg: Optional[SerializedValue]
) -> Optional[tuple[AttackerState, list[ActionBody]]]:
    """On every incoming payment, ask the target to finish ``pid`` again."""
    if msg is not None:
        return None
    if st.reentries_left == 0:
        return st, []
    reenter = Call(st.target, 0, MSG.serialize(FinishProposal(st.pid)))
    return replace(st, reentries_left=st.reentries_left - 1), [reenter]


ATTACKER_TYPED = TypedContract(
    "attacker", ATTACKER_STATE, ATTACKER_STATE, RAW, attacker_init, attacker_receive
)
ATTACKER = wrap_typed_contract(ATTACKER_TYPED)
