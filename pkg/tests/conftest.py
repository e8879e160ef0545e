import os
import random
import sys

import pytest

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from coarsesim.speclang import COMBINATORS

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

rationals = st.builds(
    lambda q, p: f"{p % (q + 1)}/{q}", st.integers(1, 12), st.integers(0, 12)
)
bitstrings = st.text("01", min_size=1, max_size=8)

atoms = st.one_of(
    st.sampled_from(["empty", "full", "evens"]),
    bitstrings.map(lambda b: f"periodic:{b}"),
    st.lists(st.integers(0, 300), max_size=6).map(lambda xs: "finite:{" + ",".join(map(str, xs)) + "}"),
    st.integers(0, 50).map(lambda s: f"rand:{s}"),
    rationals.map(lambda r: f"cr:{r}"),
    rationals.map(lambda r: f"xr:{r}"),
)


def _extend(children):
    unary = st.sampled_from(["not", "icode", "jcode", "rcode"])
    binary = st.sampled_from(["symdiff", "agree", "join", "cap", "cup", "rrel"])
    return st.one_of(
        st.builds(lambda f, a: f"{f}({a})", unary, children),
        st.builds(lambda f, a, b: f"{f}({a}, {b})", binary, children, children),
        st.builds(lambda f, a, r: f"{f}({a}, {r})", st.sampled_from(["ar", "geo"]), children, rationals),
        st.builds(lambda a, b, x: f"mid({a}, {b}, {x})", children, children, children),
        st.builds(lambda xs: "rjoin(" + ", ".join(xs) + ")", st.lists(children, min_size=1, max_size=3)),
        st.builds(lambda xs: "diag(" + ", ".join(xs) + ")", st.lists(children, min_size=1, max_size=3)),
    )


specs = st.recursive(atoms, _extend, max_leaves=5)


def random_spec(rng, budget=4):
    if budget <= 1 or rng.random() < 0.3:
        kind = rng.choice(["empty", "full", "evens", "periodic", "finite", "rand", "cr", "xr", "treepath"])
        if kind in ("empty", "full", "evens"):
            return kind
        if kind in ("periodic", "treepath"):
            return f"{kind}:" + "".join(rng.choice("01") for _ in range(rng.randint(1, 6)))
        if kind == "finite":
            return "finite:{" + ", ".join(str(rng.randrange(1000)) for _ in range(rng.randint(0, 4))) + "}"
        if kind == "rand":
            return f"rand:{rng.randint(-50, 50)}"
        q = rng.randint(1, 20)
        return f"{kind}:{rng.randint(0, q)}/{q}"
    name = rng.choice(sorted(COMBINATORS))
    kinds, variadic = COMBINATORS[name]
    slots = kinds * rng.randint(1, 3) if variadic else kinds
    args = []
    for k in slots:
        if k == "r":
            q = rng.randint(1, 9)
            args.append(f"{rng.randint(0, q)} / {q}")
        else:
            args.append(random_spec(rng, budget - 1))
    return f"{name}( " + " ,".join(args) + ")"


def random_triple(seed: int) -> tuple:
    rng = random.Random(seed)
    return tuple(random_spec(rng, 3) for _ in range(3))


# -- acceptance reporting -------------------------------------------------------

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record ``(criterion, ok, detail)``; the summary prints one line each."""
    store = request.config.stash.setdefault(_RESULTS, {})

    def record(number: int, ok: bool, detail: str) -> bool:
        store[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        ok, detail = store[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
