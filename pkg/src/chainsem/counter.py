"""A minimal counter contract used to exercise the engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .contracts import TypedContract, wrap_typed_contract
from .core import ActionBody, Chain, ContractCallContext
from .serialization import INT, UNIT, Codec, variants


@dataclass(frozen=True)
class Increment:
    def payload(self) -> None:
        return None

    @classmethod
    def from_payload(cls, p: None) -> Increment:
        return cls()


@dataclass(frozen=True)
class Add:
    n: int

    def payload(self) -> int:
        return self.n

    @classmethod
    def from_payload(cls, p: int) -> Add:
        return cls(p)


CounterMsg = Increment | Add

COUNTER_MSG: Codec[CounterMsg] = variants([(Increment, UNIT), (Add, INT)], "counter_msg")


def counter_init(chain: Chain, ctx: ContractCallContext, setup: int) -> int:
    return setup


def counter_receive(
    chain: Chain, ctx: ContractCallContext, state: int, msg: Optional[CounterMsg]
) -> Optional[tuple[int, list[ActionBody]]]:
    if msg is None:
        return state, []
    step = 1 if isinstance(msg, Increment) else msg.n
    try:
        INT.serialize(state + step)
    except OverflowError:
        return None
    return state + step, []


COUNTER_TYPED = TypedContract("counter", INT, INT, COUNTER_MSG, counter_init, counter_receive)
COUNTER = wrap_typed_contract(COUNTER_TYPED)
