"""Full ledger state: the chain view plus deployed code and contract states.

All updates return new values; nothing here mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

from .contracts import DynamicContract
from .core import Action, Address, Chain, check_amount, is_contract_address
from .serialization import SerializedValue


@dataclass(frozen=True)
class Environment:
    chain: Chain = field(default_factory=Chain)
    contracts: Mapping[Address, DynamicContract] = field(default_factory=dict)
    contract_states: Mapping[Address, SerializedValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if set(self.contracts) != set(self.contract_states):
            raise ValueError("every deployed contract needs exactly one state")
        if not all(is_contract_address(a) for a in self.contracts):
            raise ValueError("contracts may only live at contract addresses")
        object.__setattr__(self, "contracts", MappingProxyType(dict(self.contracts)))
        object.__setattr__(self, "contract_states", MappingProxyType(dict(self.contract_states)))

    def account_balance(self, addr: int) -> int:
        return self.chain.account_balance(addr)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class ChainState:
    env: Environment = field(default_factory=Environment)
    queue: tuple[Action, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "queue", tuple(self.queue))

    __hash__ = None  # type: ignore[assignment]


def transfer_balance(from_addr: Address, to_addr: Address, amount: int, e: Environment) -> Environment:
    """Move ``amount`` between accounts; sufficiency is the caller's concern."""
    if amount < 0:
        raise ValueError(f"negative transfer amount: {amount}")
    if from_addr == to_addr or amount == 0:
        return e
    balances = dict(e.chain.balances)
    balances[from_addr] = check_amount(balances.get(from_addr, 0) - amount)
    balances[to_addr] = check_amount(balances.get(to_addr, 0) + amount)
    return replace(e, chain=replace(e.chain, balances=balances))


def credit(addr: Address, amount: int, e: Environment) -> Environment:
    balances = dict(e.chain.balances)
    balances[addr] = check_amount(balances.get(addr, 0) + amount)
    return replace(e, chain=replace(e.chain, balances=balances))


def register_contract(addr: Address, c: DynamicContract, state: SerializedValue, e: Environment) -> Environment:
    assert is_contract_address(addr), f"{addr} is not a contract address"
    assert addr not in e.contracts, f"address {addr} already hosts a contract"
    return replace(
        e,
        contracts={**e.contracts, addr: c},
        contract_states={**e.contract_states, addr: state},
    )


def set_contract_state(addr: Address, state: SerializedValue, e: Environment) -> Environment:
    assert addr in e.contracts, f"no contract deployed at {addr}"
    return replace(e, contract_states={**e.contract_states, addr: state})


def environments_equivalent(e1: Environment, e2: Environment) -> bool:
    """Extensional equality; contract code is compared by its registry name."""
    c1, c2 = e1.chain, e2.chain
    if (c1.chain_height, c1.current_slot, c1.finalized_height) != (
        c2.chain_height,
        c2.current_slot,
        c2.finalized_height,
    ):
        return False
    tracked = set(c1.balances) | set(c2.balances)
    if any(c1.account_balance(a) != c2.account_balance(a) for a in tracked):
        return False
    if {a: c.name for a, c in e1.contracts.items()} != {a: c.name for a, c in e2.contracts.items()}:
        return False
    return dict(e1.contract_states) == dict(e2.contract_states)


def total_balance(e: Environment) -> int:
    return sum(e.chain.balances.values())
