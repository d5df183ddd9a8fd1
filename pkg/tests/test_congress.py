import itertools
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from chainsem.congress import (
    ATTACKER_TYPED,
    MSG,
    STATE,
    AddMember,
    AttackerState,
    CCall,
    ChangeRules,
    CongressState,
    CreateProposal,
    CTransfer,
    FinishProposal,
    Proposal,
    RemoveMember,
    RetractVote,
    Rules,
    TransferOwnership,
    VoteAgainstProposal,
    VoteForProposal,
    attacker_receive,
    buggy_congress_receive,
    congress_init,
    congress_receive,
    proposal_passed,
)
from chainsem.core import Address, Call, Chain, ContractCallContext, Transfer
from chainsem.serialization import SAddress, SInt, SSum, SUnit
from strategies import congress_msgs, congress_states, valid_rules

OWNER, M1, M2, M3, STRANGER = (Address(i) for i in range(1, 6))
SELF = Address(2**31)


def ctx(sender, amount=0):
    return ContractCallContext(Address(sender), SELF, amount)


def at_slot(slot):
    return Chain(chain_height=slot, current_slot=slot)


def fresh(rules=Rules(500, 501, 2), members=()):
    return CongressState(OWNER, rules, frozenset(members))


def send(st, sender, msg, slot=0, receive=congress_receive):
    return receive(at_slot(slot), ctx(sender), st, msg)


# -- init ---------------------------------------------------------------------


def test_init_sets_owner_from_creator():
    st = congress_init(at_slot(0), ctx(OWNER), Rules(500, 501, 2))
    assert st.owner == OWNER and st.members == frozenset() and st.proposals == {}
    assert st.next_proposal_id == 1


@pytest.mark.parametrize(
    "rules, ok",
    [(Rules(500, 1001, 2), False), (Rules(-1, 0, 0), False), (Rules(0, 0, -1), False), (Rules(0, 0, 0), True), (Rules(1000, 1000, 9), True)],
)
def test_init_validates_rules(rules, ok):
    assert (congress_init(at_slot(0), ctx(OWNER), rules) is not None) is ok


# -- owner-only messages ------------------------------------------------------


def test_owner_adds_member():
    st, acts = send(fresh(), OWNER, AddMember(M1))
    assert st.members == {M1} and acts == []


@pytest.mark.parametrize(
    "msg",
    [ChangeRules(Rules(1, 1, 1)), AddMember(M1), RemoveMember(M1), TransferOwnership(STRANGER)],
)
def test_non_owner_is_rejected(msg):
    assert send(fresh(members=[M1]), STRANGER, msg) is None


def test_member_bookkeeping_rejections():
    assert send(fresh(members=[M1]), OWNER, AddMember(M1)) is None
    assert send(fresh(), OWNER, RemoveMember(M1)) is None
    assert send(fresh(), OWNER, ChangeRules(Rules(0, 1001, 0))) is None


def test_transfer_ownership_and_self_governance():
    st, _ = send(fresh(), OWNER, TransferOwnership(SELF))
    assert st.owner == SELF
    assert send(st, OWNER, AddMember(M1)) is None
    st2, _ = send(st, SELF, AddMember(M1))
    assert st2.members == {M1}


def test_remove_member_drops_their_votes():
    st = fresh(members=[M1, M2])
    st, _ = send(st, STRANGER, CreateProposal(()))
    st, _ = send(st, M1, VoteForProposal(1))
    st, _ = send(st, M2, VoteAgainstProposal(1))
    st, _ = send(st, OWNER, RemoveMember(M1))
    assert st.proposals[1].votes == {M2: False}


# -- proposals and votes ------------------------------------------------------


def test_anyone_creates_proposals_with_fresh_ids():
    st, acts = send(fresh(), STRANGER, CreateProposal((CTransfer(M1, 3),)), slot=7)
    st, _ = send(st, M2, CreateProposal(()), slot=8)
    assert acts == []
    assert st.proposals[1] == Proposal((CTransfer(M1, 3),), {}, 7)
    assert st.proposals[2].proposed_in_slot == 8
    assert st.next_proposal_id == 3


def test_create_proposal_rejects_negative_amounts():
    assert send(fresh(), M1, CreateProposal((CTransfer(M1, -1),))) is None


def test_vote_overwrites_previous_vote():
    st = fresh(members=[M1])
    st, _ = send(st, M1, CreateProposal(()))
    st, _ = send(st, M1, VoteForProposal(1))
    st, _ = send(st, M1, VoteForProposal(1))
    assert st.proposals[1].votes == {M1: True}
    st, _ = send(st, M1, VoteAgainstProposal(1))
    assert st.proposals[1].votes == {M1: False}


def test_vote_guards():
    st = fresh(members=[M1])
    st, _ = send(st, M1, CreateProposal(()))
    assert send(st, STRANGER, VoteForProposal(1)) is None
    assert send(st, M1, VoteForProposal(2)) is None
    assert send(st, M1, RetractVote(1)) is None
    st, _ = send(st, M1, VoteForProposal(1))
    st, _ = send(st, M1, RetractVote(1))
    assert st.proposals[1].votes == {}


def _passed_proposal(actions, slot=0):
    st = fresh(rules=Rules(500, 501, 2), members=[M1, M2, M3])
    st, _ = send(st, STRANGER, CreateProposal(actions), slot=slot)
    st, _ = send(st, M1, VoteForProposal(1), slot=slot)
    st, _ = send(st, M2, VoteForProposal(1), slot=slot)
    return st


def test_finish_before_debate_period_is_rejected():
    st = _passed_proposal((CTransfer(M1, 1),), slot=3)
    assert send(st, STRANGER, FinishProposal(1), slot=4) is None
    assert send(st, STRANGER, FinishProposal(1), slot=5) is not None


def test_finish_passed_proposal_emits_actions_and_clears_it():
    acts = (CTransfer(M1, 2), CCall(M2, 1, SUnit()))
    st = _passed_proposal(acts)
    st2, emitted = send(st, STRANGER, FinishProposal(1), slot=2)
    assert 1 not in st2.proposals
    assert emitted == [Transfer(M1, 2), Call(M2, 1, SUnit())]


def test_finish_failed_proposal_clears_it_silently():
    st = fresh(rules=Rules(500, 501, 0), members=[M1, M2, M3])
    st, _ = send(st, STRANGER, CreateProposal((CTransfer(M1, 2),)))
    st, _ = send(st, M1, VoteAgainstProposal(1))
    st, _ = send(st, M2, VoteAgainstProposal(1))
    st2, emitted = send(st, STRANGER, FinishProposal(1))
    assert 1 not in st2.proposals and emitted == []


def test_finish_unknown_proposal_is_rejected():
    assert send(fresh(), STRANGER, FinishProposal(1)) is None


def test_plain_transfer_is_accepted():
    st = fresh()
    assert send(st, STRANGER, None) == (st, [])


# -- vote tally ---------------------------------------------------------------


def tally_oracle(votes, rules, member_count):
    """Fractions of members and of votes; an empty denominator passes vacuously."""
    total = len(votes)
    quorum_ok = member_count == 0 or Fraction(total, member_count) >= Fraction(rules.min_vote_count_permille, 1000)
    margin_ok = total == 0 or Fraction(sum(votes), total) >= Fraction(rules.margin_needed_permille, 1000)
    return quorum_ok and margin_ok


PERMILLES = [0, 1, 333, 334, 500, 501, 666, 667, 999, 1000]


def test_proposal_passed_matches_brute_force_oracle():
    checked = 0
    for n in range(4):
        members = [Address(10 + i) for i in range(n)]
        # each member is absent, for, or against
        for assignment in itertools.product((None, True, False), repeat=n):
            votes = {m: v for m, v in zip(members, assignment) if v is not None}
            p = Proposal((), votes, 0)
            for q, m in itertools.product(PERMILLES, PERMILLES):
                r = Rules(q, m, 0)
                assert proposal_passed(p, r, n) == tally_oracle(list(votes.values()), r, n), (votes, r, n)
                checked += 1
    assert checked == sum(3**n for n in range(4)) * len(PERMILLES) ** 2


@pytest.mark.parametrize(
    "rules, votes, members, expected",
    [
        (Rules(500, 501, 0), [True, True], 3, True),
        (Rules(0, 0, 0), [], 0, True),
        (Rules(0, 0, 0), [], 3, True),
        (Rules(1000, 0, 0), [True, True], 3, False),
        (Rules(0, 501, 0), [True, False], 2, False),
        (Rules(0, 500, 0), [True, False], 2, True),
    ],
)
def test_proposal_passed_examples(rules, votes, members, expected):
    p = Proposal((), {Address(10 + i): v for i, v in enumerate(votes)}, 0)
    assert proposal_passed(p, rules, members) is expected


# -- buggy variant and attacker -----------------------------------------------


def test_buggy_finish_keeps_proposal():
    st = _passed_proposal((CTransfer(M1, 2),))
    st2, emitted = send(st, STRANGER, FinishProposal(1), slot=2, receive=buggy_congress_receive)
    assert 1 in st2.proposals and emitted == [Transfer(M1, 2)]
    st3, again = send(st2, STRANGER, FinishProposal(1), slot=2, receive=buggy_congress_receive)
    assert again == [Transfer(M1, 2)]


@given(congress_states, congress_msgs, st.sampled_from([OWNER, M1, STRANGER, SELF]), st.integers(0, 60))
def test_buggy_differs_only_in_clearing(state, msg, sender, slot):
    good = congress_receive(at_slot(slot), ctx(sender), state, msg)
    bad = buggy_congress_receive(at_slot(slot), ctx(sender), state, msg)
    if not isinstance(msg, FinishProposal):
        assert good == bad
        return
    assert (good is None) == (bad is None)
    if good is not None:
        assert good[1] == bad[1]
        assert bad[0] == state
        assert good[0] == replace(state, proposals={k: v for k, v in state.proposals.items() if k != msg.pid})


def test_attacker_reenters_while_counter_positive():
    st = AttackerState(3, SELF, 1)
    st2, acts = attacker_receive(at_slot(0), ctx(SELF), st, None)
    assert st2.reentries_left == 2
    assert acts == [Call(SELF, 0, MSG.serialize(FinishProposal(1)))]
    assert attacker_receive(at_slot(0), ctx(SELF), AttackerState(0, SELF, 1), None) == (AttackerState(0, SELF, 1), [])
    assert attacker_receive(at_slot(0), ctx(SELF), st, SUnit()) is None
    assert ATTACKER_TYPED.init(at_slot(0), ctx(OWNER), st) == st


# -- properties ---------------------------------------------------------------


@given(congress_states, congress_msgs, st.sampled_from([OWNER, M1, STRANGER, SELF]), st.integers(0, 60))
def test_receive_properties(state, msg, sender, slot):
    out = congress_receive(at_slot(slot), ctx(sender), state, msg)
    if out is None:
        return
    new, acts = out
    if isinstance(msg, FinishProposal):
        assert msg.pid not in new.proposals
        stored = state.proposals[msg.pid]
        assert acts in ([], [a.to_body() for a in stored.actions])
    else:
        assert acts == []
    # each handler only touches the components it is about
    if isinstance(msg, (TransferOwnership, ChangeRules, AddMember)):
        assert new.proposals == state.proposals and new.next_proposal_id == state.next_proposal_id
    if isinstance(msg, (CreateProposal, VoteForProposal, VoteAgainstProposal, RetractVote, FinishProposal)):
        assert (new.owner, new.rules, new.members) == (state.owner, state.rules, state.members)
    if isinstance(msg, (VoteForProposal, VoteAgainstProposal, RetractVote)):
        assert set(new.proposals) == set(state.proposals)


@given(valid_rules, st.lists(st.tuples(st.sampled_from([OWNER, M1, M2, M3, STRANGER]), congress_msgs), max_size=25))
def test_votes_never_outnumber_members(rules, script):
    state = CongressState(OWNER, rules)
    for sender, msg in script:
        if isinstance(msg, (VoteForProposal, VoteAgainstProposal, RetractVote, FinishProposal)):
            msg = type(msg)(msg.pid % 3 + 1)
        out = congress_receive(at_slot(100), ctx(sender), state, msg)
        if out is not None:
            state = out[0]
        for p in state.proposals.values():
            assert set(p.votes) <= state.members


@given(congress_states)
def test_state_roundtrip(state):
    assert STATE.deserialize(STATE.serialize(state)) == state


@given(congress_msgs)
def test_msg_roundtrip(msg):
    assert MSG.deserialize(MSG.serialize(msg)) == msg


def test_msg_branch_table():
    a = Address(7)
    assert MSG.serialize(TransferOwnership(a)) == SSum(0, SAddress(a))
    assert MSG.serialize(AddMember(a)) == SSum(1, SSum(1, SSum(0, SAddress(a))))
    finish = SInt(4)
    for _ in range(8):
        finish = SSum(1, finish)
    assert MSG.serialize(FinishProposal(4)) == finish
