"""Tiny arithmetic expression language for grid data.

Supported surface: ``+ - * / ^ abs min max``, numeric literals, variables.
Binary operators are left-associative; ``^`` binds tightest (so ``-x^2`` is
``-(x^2)`` and ``2^3^2`` is ``(2^3)^2``).  Parsing is deterministic
recursive descent; evaluation is vectorized over numpy arrays.

Finiteness of results is the caller's concern: ``evaluate`` computes with
floating error states suppressed, and the grid layer decides which nodes
must come out finite.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ExprSyntaxError, UnknownVariable

_FUNCTIONS = {"abs": 1, "min": 2, "max": 2}  # name -> minimum arity


# --- tokenizer --------------------------------------------------------------

_SYMBOLS = set("+-*/^(),")


def _tokens(text: str) -> Iterator[tuple[str, str, int]]:
    """Yield (kind, value, col) triples; kind in {num, name, sym, end}."""
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SYMBOLS:
            yield "sym", c, i
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                float(text[i:j])
            except ValueError:
                raise ExprSyntaxError(f"bad number {text[i:j]!r}", i) from None
            yield "num", text[i:j], i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            yield "name", text[i:j], i
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    yield "end", "", n


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokens(text))
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.pos]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, col = self.take()
        if val != value:
            raise ExprSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", col)

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = ("bin", op, node, self.term())
        return node

    # term := unary (('*'|'/') unary)*
    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = ("bin", op, node, self.unary())
        return node

    # unary := '-' unary | power
    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return ("neg", self.unary())
        return self.power()

    # power := atom ('^' atom)*, left-associative
    def power(self):
        node = self.atom()
        while self.peek()[1] == "^":
            self.take()
            node = ("bin", "^", node, self.atom())
        return node

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            return ("num", float(val))
        if kind == "name":
            if self.peek()[1] == "(":
                if val not in _FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", col)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) < _FUNCTIONS[val]:
                    raise ExprSyntaxError(f"{val} needs at least {_FUNCTIONS[val]} arguments", col)
                if val == "abs" and len(args) != 1:
                    raise ExprSyntaxError("abs takes exactly one argument", col)
                return ("call", val, tuple(args))
            return ("var", val)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", col)


def parse(text: str):
    """Parse expression text into an AST; raises ExprSyntaxError."""
    p = _Parser(text)
    node = p.expr()
    kind, val, col = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"trailing input {val!r}", col)
    return node


def variables(node) -> frozenset[str]:
    """Names of all variables referenced by the AST."""
    tag = node[0]
    if tag == "num":
        return frozenset()
    if tag == "var":
        return frozenset((node[1],))
    if tag == "neg":
        return variables(node[1])
    if tag == "bin":
        return variables(node[2]) | variables(node[3])
    return frozenset().union(*(variables(a) for a in node[2]))


def evaluate(node, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Evaluate the AST over broadcastable numpy arrays.

    Unknown variables raise UnknownVariable.  Floating faults (division by
    zero, 0^negative, ...) are not raised here; they surface as inf/NaN in
    the result for the caller to police.
    """
    tag = node[0]
    if tag == "num":
        return np.float64(node[1])
    if tag == "var":
        try:
            return env[node[1]]
        except KeyError:
            raise UnknownVariable(
                f"unknown variable {node[1]!r}; available: {sorted(env)}"
            ) from None
    if tag == "neg":
        return -evaluate(node[1], env)
    with np.errstate(all="ignore"):
        if tag == "bin":
            op = node[1]
            a = evaluate(node[2], env)
            b = evaluate(node[3], env)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "/":
                return np.divide(a, b)
            return np.power(a, b)
        name, args = node[1], node[2]
        vals = [evaluate(a, env) for a in args]
        if name == "abs":
            return np.abs(vals[0])
        if name == "min":
            out = vals[0]
            for v in vals[1:]:
                out = np.minimum(out, v)
            return out
        out = vals[0]
        for v in vals[1:]:
            out = np.maximum(out, v)
        return out


def parse_and_check(text: str, allowed: Sequence[str]):
    """Parse and verify every variable is in `allowed`; returns the AST."""
    node = parse(text)
    extra = variables(node) - set(allowed)
    if extra:
        raise UnknownVariable(
            f"unknown variable(s) {sorted(extra)} in {text!r}; allowed: {sorted(set(allowed))}"
        )
    return node
