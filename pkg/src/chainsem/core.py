"""Chain-facing value types shared by the engine and every contract."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import TYPE_CHECKING, Mapping, Union

if TYPE_CHECKING:
    from .contracts import DynamicContract
    from .serialization import SerializedValue

U64_MAX = 2**64 - 1
I128_MIN = -(2**127)
I128_MAX = 2**127 - 1

# Addresses at or above this value belong to contracts.
CONTRACT_ADDRESS_BASE = 2**31


class Address(int):
    """A 64-bit account identifier, rendered as a decimal integer."""

    def __new__(cls, value: int) -> Address:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"address must be an integer, got {value!r}")
        if not 0 <= value <= U64_MAX:
            raise ValueError(f"address out of range: {value}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"Address({int(self)})"

    def __str__(self) -> str:
        return int.__repr__(self)


def is_contract_address(a: int) -> bool:
    return a >= CONTRACT_ADDRESS_BASE


def check_amount(value: int) -> int:
    """Reject anything that is not a signed 128-bit integer."""
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"amount must be an integer, got {value!r}")
    if not I128_MIN <= value <= I128_MAX:
        raise OverflowError(f"amount outside signed 128-bit range: {value}")
    return value


def _frozen(mapping: Mapping) -> Mapping:
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True)
class Chain:
    """What a contract may observe about the chain.

    Balances are stored sparsely; an address that is absent has balance 0
    and zero balances are never stored, so plain equality is extensional.
    """

    chain_height: int = 0
    current_slot: int = 0
    finalized_height: int = 0
    balances: Mapping[Address, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.finalized_height <= self.chain_height:
            raise ValueError("finalized_height must lie in [0, chain_height]")
        clean = {Address(a): check_amount(v) for a, v in self.balances.items() if v != 0}
        object.__setattr__(self, "balances", _frozen(clean))

    def account_balance(self, addr: int) -> int:
        return self.balances.get(addr, 0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Chain):
            return NotImplemented
        return (
            self.chain_height == other.chain_height
            and self.current_slot == other.current_slot
            and self.finalized_height == other.finalized_height
            and dict(self.balances) == dict(other.balances)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class BlockHeader:
    block_height: int
    slot: int
    finalized_height: int
    creator: Address
    reward: int = 0


@dataclass(frozen=True)
class ContractCallContext:
    ctx_from: Address
    ctx_contract_address: Address
    ctx_amount: int


@dataclass(frozen=True)
class Transfer:
    to: Address
    amount: int


@dataclass(frozen=True)
class Call:
    to: Address
    amount: int
    msg: SerializedValue


@dataclass(frozen=True)
class Deploy:
    amount: int
    contract: DynamicContract
    setup: SerializedValue


ActionBody = Union[Transfer, Call, Deploy]


@dataclass(frozen=True)
class Action:
    """An action body together with the address that requested it."""

    act_from: Address
    body: ActionBody
