"""A small expression language naming sets, used by the command line.

Grammar (whitespace between tokens is ignored)::

    spec  := atom | NAME "(" arg ("," arg)* ")"
    atom  := "empty" | "full" | "evens"
           | "periodic:" BITS | "finite:{" [INT ("," INT)*] "}"
           | "rand:" ["-"] INT | "cr:" RAT | "xr:" RAT | "treepath:" BITS
    arg   := spec | RAT          (rationals only where a combinator takes one)
    RAT   := INT ["/" INT]

>>> to_text(parse_spec("symdiff( cr:1/2 , not(evens))"))
'symdiff(cr:1/2, not(evens))'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from . import codings, geodesics, seq, tree

ATOM_WORDS = ("empty", "full", "evens")
ATOM_PARAMS = ("periodic", "finite", "rand", "cr", "xr", "treepath")

# name -> (argument kinds, variadic); "s" is a set, "r" a rational in [0, 1]
COMBINATORS: dict[str, tuple[str, bool]] = {
    "not": ("s", False),
    "symdiff": ("ss", False),
    "agree": ("ss", False),
    "join": ("ss", False),
    "cap": ("ss", False),
    "cup": ("ss", False),
    "icode": ("s", False),
    "jcode": ("s", False),
    "rcode": ("s", False),
    "rrel": ("ss", False),
    "rjoin": ("s", True),
    "ar": ("sr", False),
    "geo": ("sr", False),
    "mid": ("sss", False),
    "diag": ("s", True),
}


class SpecError(ValueError):
    """Invalid set specification; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int, expected: frozenset = frozenset()):
        self.message = message
        self.offset = offset
        self.expected = expected
        text = f"{message} at offset {offset}"
        if expected:
            text += " (expected one of: " + ", ".join(sorted(expected)) + ")"
        super().__init__(text)


class SpecSyntaxError(SpecError):
    pass


class SpecArityError(SpecError):
    pass


class SpecRangeError(SpecError):
    pass


@dataclass(frozen=True)
class Atom:
    kind: str
    value: object = None


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


SetSpec = Union[Atom, Call]

_TOKEN = re.compile(r"\s*(?:(?P<name>[a-z]+)|(?P<int>-?\d+)|(?P<punct>[(),:{}/]))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _offset(self) -> int:
        return len(self.text[: self.pos].encode())

    def peek(self) -> tuple[str, str, int]:
        self._skip()
        if self.pos >= len(self.text):
            return "eof", "", self.pos
        m = _TOKEN.match(self.text, self.pos)
        if not m:
            raise SpecSyntaxError(f"unexpected character {self.text[self.pos]!r}", self._offset())
        kind = m.lastgroup
        return kind, m.group(kind), m.end()

    def take(self, expected: str = None) -> tuple[str, str]:
        kind, value, end = self.peek()
        if expected is not None and value != expected:
            got = "end of input" if kind == "eof" else repr(value)
            raise SpecSyntaxError(f"unexpected {got}", self._offset(), frozenset({repr(expected)}))
        if kind == "eof":
            raise SpecSyntaxError("unexpected end of input", self._offset())
        self.pos = end
        return kind, value

    def take_int(self, what: str) -> int:
        kind, value, end = self.peek()
        if kind != "int":
            raise SpecSyntaxError(f"expected {what}", self._offset(), frozenset({"INT"}))
        self.pos = end
        return int(value)

    def rational(self) -> Fraction:
        self._skip()
        start = self._offset()
        num = self.take_int("rational")
        den = 1
        if self.peek()[1] == "/":
            self.take("/")
            den = self.take_int("denominator")
        if den <= 0 or num < 0:
            raise SpecRangeError(f"invalid rational {num}/{den}", start)
        return Fraction(num, den)

    def unit_rational(self) -> Fraction:
        self._skip()
        start = self._offset()
        r = self.rational()
        if r > 1:
            raise SpecRangeError(f"rational {r} outside [0, 1]", start)
        return r

    def bits(self) -> str:
        self._skip()
        m = re.compile(r"[01]+").match(self.text, self.pos)
        if not m:
            raise SpecSyntaxError("expected bit string", self._offset(), frozenset({"BITS"}))
        self.pos = m.end()
        return m.group()

    def spec(self) -> SetSpec:
        self._skip()
        start = self._offset()
        kind, name, end = self.peek()
        if kind != "name":
            raise SpecSyntaxError(
                "expected a set", start, frozenset(ATOM_WORDS + ATOM_PARAMS + tuple(COMBINATORS))
            )
        self.pos = end
        if name in ATOM_WORDS:
            return Atom(name)
        if name in ATOM_PARAMS:
            self.take(":")
            if name in ("periodic", "treepath"):
                return Atom(name, self.bits())
            if name == "rand":
                return Atom(name, self.take_int("seed"))
            if name in ("cr", "xr"):
                return Atom(name, self.unit_rational())
            self.take("{")
            items = []
            if self.peek()[1] != "}":
                while True:
                    self._skip()
                    at = self._offset()
                    v = self.take_int("integer")
                    if v < 0:
                        raise SpecRangeError("finite sets hold natural numbers", at)
                    items.append(v)
                    if self.peek()[1] != ",":
                        break
                    self.take(",")
            self.take("}")
            return Atom(name, tuple(items))
        if name not in COMBINATORS:
            raise SpecSyntaxError(
                f"unknown name {name!r}", start, frozenset(ATOM_WORDS + ATOM_PARAMS + tuple(COMBINATORS))
            )
        kinds, variadic = COMBINATORS[name]
        self.take("(")
        args = []
        while True:
            slot = kinds[min(len(args), len(kinds) - 1)] if variadic else (kinds[len(args)] if len(args) < len(kinds) else "s")
            args.append(self.unit_rational() if slot == "r" else self.spec())
            if self.peek()[1] != ",":
                break
            self.take(",")
        close = self._offset()
        self.take(")")
        if (variadic and len(args) < len(kinds)) or (not variadic and len(args) != len(kinds)):
            want = f"at least {len(kinds)}" if variadic else str(len(kinds))
            raise SpecArityError(f"{name} takes {want} argument(s), got {len(args)}", close)
        return Call(name, tuple(args))


def parse_spec(text: str) -> SetSpec:
    p = _Parser(text)
    ast = p.spec()
    kind, value, _ = p.peek()
    if kind != "eof":
        raise SpecSyntaxError(f"trailing input {value!r}", p._offset(), frozenset({"end of input"}))
    return ast


def to_text(node) -> str:
    """Canonical text; ``parse_spec(to_text(x)) == x``."""
    if isinstance(node, Fraction):
        return f"{node.numerator}/{node.denominator}"
    if isinstance(node, Atom):
        if node.kind in ATOM_WORDS:
            return node.kind
        if node.kind == "finite":
            return "finite:{" + ",".join(map(str, node.value)) + "}"
        return f"{node.kind}:{to_text(node.value)}"
    if isinstance(node, Call):
        return f"{node.name}(" + ", ".join(to_text(a) for a in node.args) + ")"
    return str(node)


def depth(node) -> int:
    if isinstance(node, Call):
        return 1 + max((depth(a) for a in node.args), default=0)
    return 1 if isinstance(node, Atom) else 0


def build(node: SetSpec) -> seq.BitSequence:
    """Turn a parsed specification into a :class:`~coarsesim.seq.BitSequence`."""
    if isinstance(node, str):
        node = parse_spec(node)
    if isinstance(node, Atom):
        k, v = node.kind, node.value
        if k == "empty":
            return seq.empty()
        if k == "full":
            return seq.full()
        if k == "evens":
            return seq.evens()
        if k == "periodic":
            return seq.periodic(v)
        if k == "finite":
            return seq.finite(v)
        if k == "rand":
            return seq.bernoulli_stream(v)
        if k == "cr":
            return geodesics.c_r(v)
        if k == "xr":
            return geodesics.x_r(v)
        if k == "treepath":
            # the given directions, then the leftmost continuation
            path = tree.tree_path(seq.finite(i for i, ch in enumerate(v) if ch == "1"))
            path.descriptor = ("treepath", v)
            return path
        raise ValueError(f"unknown atom {k!r}")
    name, args = node.name, node.args
    sets = [build(a) for a in args if not isinstance(a, Fraction)]
    if name == "not":
        return seq.complement(sets[0])
    if name in ("symdiff", "agree", "join", "cap", "cup"):
        fn = {
            "symdiff": seq.symdiff,
            "agree": seq.symagree,
            "join": seq.join,
            "cap": seq.intersect,
            "cup": seq.union,
        }[name]
        return fn(sets[0], sets[1])
    if name in ("icode", "jcode", "rcode"):
        return codings.code(name[0].upper(), sets[0])
    if name == "rrel":
        return codings.r_relative(sets[0], sets[1])
    if name == "rjoin":
        return codings.r_join(sets)
    if name == "ar":
        return geodesics.a_r(sets[0], args[1])
    if name == "geo":
        return geodesics.geodesic_within(sets[0], args[1])
    if name == "mid":
        return geodesics.midpoint_family(*sets)
    if name == "diag":
        return codings.diagonal_distance_one(sets)
    raise ValueError(f"unknown combinator {name!r}")
