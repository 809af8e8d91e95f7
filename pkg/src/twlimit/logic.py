"""First-order formulas over rooted k-trees, Stone pairings and Ehrenfeucht-Fraisse games.

Signature: ``E<i>(x,y)`` (y is the i-parent of x), ``kept(x,y)`` / ``fill(x,y)``
(the edge from x to its parent y has that color), ``U<j>(x)`` and ``x=y``.
A local quantifier ``exists_z x`` ranges over neighbours of z, where a
neighbour is adjacent by any parent relation in either direction.
"""
from __future__ import annotations

import enum
import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .graph import EdgeColor, RootedKTree


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundVariable(KeyError):
    pass


class BudgetExceeded(RuntimeError):
    pass


# -- AST ------------------------------------------------------------------------


@dataclass(frozen=True)
class Rel:
    """Binary atom.  ``kind`` is ``"E"``, ``"kept"`` or ``"fill"``; ``index`` only for ``"E"``."""

    kind: str
    index: int
    x: str
    y: str


@dataclass(frozen=True)
class Mark:
    index: int
    x: str


@dataclass(frozen=True)
class Eq:
    x: str
    y: str


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Quant:
    exists: bool
    var: str
    guard: str | None
    body: "Formula"


Formula = Rel | Mark | Eq | Not | And | Or | Quant


def free_variables(phi: Formula) -> list[str]:
    """Free variables in order of first occurrence."""
    out: list[str] = []

    def visit(f, bound):
        match f:
            case Rel(x=x, y=y) | Eq(x=x, y=y):
                names = (x, y)
            case Mark(x=x):
                names = (x,)
            case Not(body=b):
                visit(b, bound)
                return
            case And(left=l, right=r) | Or(left=l, right=r):
                visit(l, bound)
                visit(r, bound)
                return
            case Quant(var=v, guard=g, body=b):
                names = (g,) if g is not None else ()
                for name in names:
                    if name not in bound and name not in out:
                        out.append(name)
                visit(b, bound | {v})
                return
        for name in names:
            if name not in bound and name not in out:
                out.append(name)

    visit(phi, frozenset())
    return out


def quantifier_depth(phi: Formula) -> int:
    match phi:
        case Not(body=b):
            return quantifier_depth(b)
        case And(left=l, right=r) | Or(left=l, right=r):
            return max(quantifier_depth(l), quantifier_depth(r))
        case Quant(body=b):
            return 1 + quantifier_depth(b)
    return 0


def is_local(phi: Formula) -> bool:
    match phi:
        case Not(body=b):
            return is_local(b)
        case And(left=l, right=r) | Or(left=l, right=r):
            return is_local(l) and is_local(r)
        case Quant(guard=g, body=b):
            return g is not None and is_local(b)
    return True


def max_relation_index(phi: Formula) -> int:
    match phi:
        case Rel(kind="E", index=i):
            return i
        case Not(body=b) | Quant(body=b):
            return max_relation_index(b)
        case And(left=l, right=r) | Or(left=l, right=r):
            return max(max_relation_index(l), max_relation_index(r))
    return 0


def to_text(phi: Formula) -> str:
    match phi:
        case Rel(kind="E", index=i, x=x, y=y):
            return f"E{i}({x},{y})"
        case Rel(kind=kind, x=x, y=y):
            return f"{kind}({x},{y})"
        case Mark(index=j, x=x):
            return f"U{j}({x})"
        case Eq(x=x, y=y):
            return f"{x} = {y}"
        case Not(body=b):
            return f"!{_wrap(b)}"
        case And(left=l, right=r):
            return f"{_wrap(l)} & {_wrap(r)}"
        case Or(left=l, right=r):
            return f"{_wrap(l)} | {_wrap(r)}"
        case Quant(exists=e, var=v, guard=g, body=b):
            q = "exists" if e else "forall"
            if g is not None:
                q += f"_{g}"
            return f"{q} {v} . {to_text(b)}"
    raise TypeError(phi)


def _wrap(phi):
    s = to_text(phi)
    return s if isinstance(phi, (Rel, Mark)) else f"({s})"


# -- parser ---------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[().,=!&|]))")
_QUANT = re.compile(r"^(exists|forall)(?:_([A-Za-z][A-Za-z0-9]*))?$")
_REL = re.compile(r"^E([0-9]+)$")
_MARK = re.compile(r"^U([0-9]+)$")


@dataclass(frozen=True)
class ParsedFormula:
    formula: Formula
    free: tuple[str, ...]
    depth: int
    local: bool


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos:].lstrip()[0]!r}", pos)
        kind = "name" if m.group("name") else "sym"
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    """Precedence: quantifiers extend as far right as possible; ``|`` < ``&`` < ``!``."""

    def __init__(self, text: str, k: int | None):
        self.toks = _tokenize(text)
        self.i = 0
        self.k = k

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            raise FormulaSyntaxError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def var(self):
        kind, val, pos = self.take()
        if kind != "name" or _QUANT.match(val) or _REL.match(val) or _MARK.match(val) or val in ("kept", "fill"):
            raise FormulaSyntaxError(f"expected a variable, found {val or 'end of input'!r}", pos)
        return val

    def formula(self):
        kind, val, pos = self.peek()
        if kind == "name" and _QUANT.match(val):
            return self.quant()
        return self.disj()

    def quant(self):
        _, val, _ = self.take()
        m = _QUANT.match(val)
        v = self.var()
        self.take(".")
        return Quant(m.group(1) == "exists", v, m.group(2), self.formula())

    def disj(self):
        left = self.conj()
        while self.peek()[1] == "|":
            self.take()
            left = Or(left, self.conj_or_quant())
        return left

    def conj(self):
        left = self.unary()
        while self.peek()[1] == "&":
            self.take()
            left = And(left, self.unary_or_quant())
        return left

    def conj_or_quant(self):
        if self.peek()[0] == "name" and _QUANT.match(self.peek()[1]):
            return self.quant()
        return self.conj()

    def unary_or_quant(self):
        if self.peek()[0] == "name" and _QUANT.match(self.peek()[1]):
            return self.quant()
        return self.unary()

    def unary(self):
        kind, val, pos = self.peek()
        if val == "!":
            self.take()
            return Not(self.unary_or_quant())
        if val == "(":
            self.take()
            f = self.formula()
            self.take(")")
            return f
        if kind != "name":
            raise FormulaSyntaxError(f"unexpected {val or 'end of input'!r}", pos)
        if m := _REL.match(val):
            i = int(m.group(1))
            if i < 1 or (self.k is not None and i > self.k):
                raise FormulaSyntaxError(f"unknown relation index {i}", pos)
            self.take()
            x, y = self.args(2)
            return Rel("E", i, x, y)
        if val in ("kept", "fill"):
            self.take()
            x, y = self.args(2)
            return Rel(val, 0, x, y)
        if m := _MARK.match(val):
            j = int(m.group(1))
            if j < 1:
                raise FormulaSyntaxError(f"unknown mark index {j}", pos)
            self.take()
            (x,) = self.args(1)
            return Mark(j, x)
        x = self.var()
        self.take("=")
        return Eq(x, self.var())

    def args(self, count):
        self.take("(")
        out = [self.var()]
        while len(out) < count:
            self.take(",")
            out.append(self.var())
        self.take(")")
        return out


def parse_formula(text: str, k: int | None = None) -> ParsedFormula:
    """Parse the ASCII grammar; ``k`` (optional) bounds the relation indices."""
    p = _Parser(text, k)
    f = p.formula()
    kind, val, pos = p.peek()
    if kind != "end":
        raise FormulaSyntaxError(f"trailing input {val!r}", pos)
    return ParsedFormula(f, tuple(free_variables(f)), quantifier_depth(f), is_local(f))


def _as_formula(phi) -> Formula:
    if isinstance(phi, ParsedFormula):
        return phi.formula
    if isinstance(phi, str):
        return parse_formula(phi).formula
    return phi


# -- evaluation -----------------------------------------------------------------


def _holds_atom(T: RootedKTree, f, a: Mapping[str, int]) -> bool:
    try:
        match f:
            case Rel(kind="E", index=i, x=x, y=y):
                return T.i_parent(a[x], i) == a[y] if i <= T.k else False
            case Rel(kind=kind, x=x, y=y):
                e = T.edge(a[x], a[y])
                want = EdgeColor.KEPT if kind == "kept" else EdgeColor.FILL
                return e is not None and e[1] == want
            case Mark(index=j, x=x):
                return T.marks.get(j) == a[x]
            case Eq(x=x, y=y):
                return a[x] == a[y]
    except KeyError as exc:
        raise UnboundVariable(exc.args[0]) from None
    raise TypeError(f)


def evaluate(T: RootedKTree, phi, a: Mapping[str, int]) -> bool:
    f = _as_formula(phi)
    match f:
        case Not(body=b):
            return not evaluate(T, b, a)
        case And(left=l, right=r):
            return evaluate(T, l, a) and evaluate(T, r, a)
        case Or(left=l, right=r):
            return evaluate(T, l, a) or evaluate(T, r, a)
        case Quant(exists=ex, var=v, guard=g, body=b):
            if g is None:
                domain = range(T.n)
            else:
                if g not in a:
                    raise UnboundVariable(g)
                domain = T.neighbors[a[g]]
            env = dict(a)
            test = any if ex else all

            def sat(w):
                env[v] = w
                return evaluate(T, b, env)

            return test(sat(w) for w in domain)
    return _holds_atom(T, f, a)


@dataclass(frozen=True)
class Pairing:
    value: Fraction
    exact: bool
    samples: int = 0
    stderr: float = 0.0


def stone_pairing(
    T: RootedKTree,
    phi,
    budget: int = 1_000_000,
    samples: int | None = None,
    seed: int = 0,
) -> Pairing:
    """Fraction of ordered tuples (repetitions allowed) of free-variable values satisfying ``phi``.

    Exact when ``n**l <= budget``.  Otherwise a uniform sample of ``samples``
    tuples is drawn if allowed, else ``BudgetExceeded``.
    """
    f = _as_formula(phi)
    free = free_variables(f)
    total = T.n ** len(free)
    if total <= budget:
        hits = sum(
            1 for tup in itertools.product(range(T.n), repeat=len(free)) if evaluate(T, f, dict(zip(free, tup)))
        )
        return Pairing(Fraction(hits, total), True, total)
    if samples is None:
        raise BudgetExceeded(f"{total} tuples exceed budget {budget}")
    rng = random.Random(seed)
    hits = 0
    for _ in range(samples):
        tup = [rng.randrange(T.n) for _ in free]
        hits += evaluate(T, f, dict(zip(free, tup)))
    p = hits / samples
    return Pairing(Fraction(hits, samples), False, samples, (p * (1 - p) / samples) ** 0.5)


# -- Ehrenfeucht-Fraisse games ----------------------------------------------------


class Winner(enum.Enum):
    DUPLICATOR = "duplicator"
    SPOILER = "spoiler"


def _mark(T: RootedKTree, v: int, cutoff: int) -> int:
    j = T.mark_of.get(v, 0)
    return j if j <= cutoff else 0


def _extends_iso(T, a, T2, b, cutoff) -> bool:
    """Does appending the last pebble pair keep the pebble map a partial isomorphism?"""
    x, y = a[-1], b[-1]
    if _mark(T, x, cutoff) != _mark(T2, y, cutoff):
        return False
    if (T.edge(x, x) is None) != (T2.edge(y, y) is None):
        return False
    for p, q in zip(a[:-1], b[:-1]):
        if (p == x) != (q == y):
            return False
        if T.edge(x, p) != T2.edge(y, q) or T.edge(p, x) != T2.edge(q, y):
            return False
    return True


class _Game:
    def __init__(self, T, T2, cutoff, local):
        self.T, self.T2, self.cutoff, self.local = T, T2, cutoff, local
        self.memo: dict = {}

    def moves(self, G, pebbles):
        if not self.local:
            return [(None, w) for w in range(G.n)]
        return [(p, w) for p, v in enumerate(pebbles) for w in G.neighbors[v]]

    def answers(self, G, pebbles, anchor):
        if not self.local:
            return range(G.n)
        return G.neighbors[pebbles[anchor]]

    def duplicator_wins(self, a: tuple, b: tuple, rounds: int) -> bool:
        if rounds == 0:
            return True
        if self.T is self.T2 and a == b:
            return True
        key = (a, b, rounds)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        result = self._side(self.T, a, self.T2, b, rounds, False) and self._side(self.T2, b, self.T, a, rounds, True)
        self.memo[key] = result
        return result

    def _side(self, G, pa, H, pb, rounds, swapped) -> bool:
        for anchor, w in self.moves(G, pa):
            na = pa + (w,)
            ok = False
            for u in self.answers(H, pb, anchor):
                nb = pb + (u,)
                if not _extends_iso(G, na, H, nb, self.cutoff):
                    continue
                if swapped:
                    ok = self.duplicator_wins(nb, na, rounds - 1)
                else:
                    ok = self.duplicator_wins(na, nb, rounds - 1)
                if ok:
                    break
            if not ok:
                return False
        return True


def local_ef_winner(T: RootedKTree, u: int, T2: RootedKTree, u2: int, d: int) -> Winner:
    """Winner of the d-round local game started from pebbles on ``u`` and ``u2``.

    Spoiler pebbles a neighbour of some pebbled vertex in either structure,
    duplicator answers in the other one with a neighbour of the matching
    pebble.  Marks U_j count only for j <= d.
    """
    game = _Game(T, T2, d, local=True)
    if not _extends_iso(T, (u,), T2, (u2,), d):
        return Winner.SPOILER
    return Winner.DUPLICATOR if game.duplicator_wins((u,), (u2,), d) else Winner.SPOILER


def global_ef_equivalent(T: RootedKTree, T2: RootedKTree, d: int) -> bool:
    """True iff duplicator wins the unrestricted d-round game (marks U_j with j <= d)."""
    if T is T2:
        return True
    return _Game(T, T2, d, local=False).duplicator_wins((), (), d)
