import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chainsem.contracts import TypedContract, wrap_typed_contract  # noqa: E402
from chainsem.core import Action, Address, BlockHeader, Call, Deploy  # noqa: E402
from chainsem.execution import ChainBuilder, EvaluateStep  # noqa: E402
from chainsem.serialization import INT, SInt, lazy, list_of, mapped, pair  # noqa: E402

ALICE = Address(1)
BOB = Address(2)
CAROL = Address(3)
C0 = Address(2**31)
C1 = Address(2**31 + 1)


def header(height, slot=None, fin=0, creator=ALICE, reward=0):
    return BlockHeader(height, height if slot is None else slot, fin, Address(creator), reward)


# A contract that fans out calls to itself following a tree carried in the message.
# Each node is (label, children); receiving a node emits one self-call per child.
TREE = mapped(
    pair(INT, list_of(lazy(lambda: TREE, "tree"))),
    lambda t: (t[0], tuple(t[1])),
    lambda t: t,
    "tree",
)


def _spawner_receive(chain, ctx, state, msg):
    if msg is None:
        return state, []
    _, children = msg
    return state, [Call(ctx.ctx_contract_address, 0, TREE.serialize(c)) for c in children]


SPAWNER = wrap_typed_contract(
    TypedContract("spawner", INT, INT, TREE, lambda chain, ctx, s: s, _spawner_receive)
)


def call(sender, to, msg, amount=0):
    return Action(Address(sender), Call(Address(to), amount, msg))


# Two roots, three generations:
#   a -> a1 -> (a11, a12);  a -> a2 -> a21;  b -> b1 -> b11
LEAF = lambda n: (n, ())  # noqa: E731
TREE_A = (10, ((11, (LEAF(111), LEAF(112))), (12, (LEAF(121),))))
TREE_B = (20, ((21, (LEAF(211),)),))

# Enumerated by hand from the step rules: depth-first pushes children on the
# front; breadth-first rotates them behind everything already queued.
EXPECTED_DFS = [10, 11, 111, 112, 12, 121, 20, 21, 211]
EXPECTED_BFS = [10, 20, 11, 12, 21, 111, 112, 121, 211]


def evaluated_labels(trace):
    return [
        TREE.deserialize(s.evaluation.message)[0]
        for s in trace
        if isinstance(s, EvaluateStep) and s.evaluation.message is not None
    ]


def run_tree(order):
    b = ChainBuilder(order).add_block(header(1), [Action(ALICE, Deploy(0, SPAWNER, SInt(0)))])
    roots = [call(ALICE, C0, TREE.serialize(TREE_A)), call(BOB, C0, TREE.serialize(TREE_B))]
    return b.add_block(header(2), roots)


@pytest.fixture
def spawner():
    return SPAWNER


# -- acceptance summary -------------------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    report = outcome.get_result()
    if report.when != "call" and report.passed:
        return
    n, title = marker.args
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "details": [], "seconds": 0.0})
    entry["ok"] = entry["ok"] and report.passed
    entry["seconds"] += report.duration
    entry["details"] += [v for k, v in item.user_properties if k == "detail" and v not in entry["details"]]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        line = f"criterion {n}: {'PASS' if e['ok'] else 'FAIL'}  {e['title']} ({e['seconds']:.1f}s)"
        if e["details"]:
            line += "  [" + "; ".join(e["details"]) + "]"
        terminalreporter.write_line(line)
