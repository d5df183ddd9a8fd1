"""Named contract code that scenario and trace files can refer to."""

from __future__ import annotations

from types import MappingProxyType
from typing import Iterable, Mapping

from .congress import ATTACKER, BUGGY_CONGRESS, CONGRESS
from .contracts import DynamicContract
from .counter import COUNTER

BUILTIN_CONTRACTS: Mapping[str, DynamicContract] = MappingProxyType(
    {c.name: c for c in (CONGRESS, BUGGY_CONGRESS, ATTACKER, COUNTER)}
)


def make_registry(extra: Iterable[DynamicContract] = ()) -> Mapping[str, DynamicContract]:
    """The built-in contracts plus ``extra``; names must stay unique."""
    reg = dict(BUILTIN_CONTRACTS)
    for c in extra:
        if c.name in reg and reg[c.name] is not c:
            raise ValueError(f"duplicate contract name {c.name!r}")
        reg[c.name] = c
    return MappingProxyType(reg)
