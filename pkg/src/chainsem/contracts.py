"""Dynamically typed contracts for the engine and typed contracts for authors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Generic, Optional, Sequence, TypeVar

from .core import ActionBody, Chain, ContractCallContext
from .serialization import Codec, DeserializeError, SerializedValue

Setup = TypeVar("Setup")
State = TypeVar("State")
Msg = TypeVar("Msg")

InitFn = Callable[[Chain, ContractCallContext, SerializedValue], Optional[SerializedValue]]
ReceiveFn = Callable[
    [Chain, ContractCallContext, SerializedValue, Optional[SerializedValue]],
    Optional[tuple[SerializedValue, Sequence[ActionBody]]],
]


@dataclass(frozen=True)
class DynamicContract:
    """Contract code as the engine sees it: two pure functions over serialized values.

    Code cannot be compared extensionally, so equality goes by ``name``,
    which must be unique within whatever registry resolves contracts from
    trace files.
    """

    name: str
    init: InitFn = field(compare=False, repr=False)
    receive: ReceiveFn = field(compare=False, repr=False)


@dataclass(frozen=True)
class TypedContract(Generic[Setup, State, Msg]):
    """A contract written against its own setup, state and message types.

    ``init`` and ``receive`` return None to reject, so None cannot be a
    state value.
    """

    name: str
    setup_codec: Codec[Setup]
    state_codec: Codec[State]
    msg_codec: Codec[Msg]
    init: Callable[[Chain, ContractCallContext, Setup], Optional[State]]
    receive: Callable[
        [Chain, ContractCallContext, State, Optional[Msg]],
        Optional[tuple[State, Sequence[ActionBody]]],
    ]


_REJECT = object()


def _decode(codec: Codec, sv: SerializedValue) -> object:
    try:
        return codec.deserialize(sv)
    except DeserializeError:
        return _REJECT


def wrap_typed_contract(c: TypedContract) -> DynamicContract:
    """Bridge a typed contract to the engine.

    Any input that fails to decode makes the wrapped function return None,
    which the engine treats as the contract rejecting the call.
    """

    def init(chain: Chain, ctx: ContractCallContext, setup: SerializedValue) -> SerializedValue | None:
        typed_setup = _decode(c.setup_codec, setup)
        if typed_setup is _REJECT:
            return None
        state = c.init(chain, ctx, typed_setup)
        if state is None:
            return None
        return c.state_codec.serialize(state)

    def receive(
        chain: Chain,
        ctx: ContractCallContext,
        state: SerializedValue,
        msg: SerializedValue | None,
    ) -> tuple[SerializedValue, tuple[ActionBody, ...]] | None:
        typed_state = _decode(c.state_codec, state)
        if typed_state is _REJECT:
            return None
        typed_msg = None
        if msg is not None:
            typed_msg = _decode(c.msg_codec, msg)
            if typed_msg is _REJECT:
                return None
        result = c.receive(chain, ctx, typed_state, typed_msg)
        if result is None:
            return None
        new_state, actions = result
        return c.state_codec.serialize(new_state), tuple(actions)

    return DynamicContract(c.name, init, receive)
