"""Tokenizer and precedence-climbing parser for q-difference operator text.

Grammar (whitespace insignificant, ``#`` starts a comment)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" ["-"] INT)?
    atom   := INT | "q" | "Q" | "E" | "(" expr ")"

Values live in the skew algebra generated by Q, q, E with ``E Q = q Q E``;
every product is brought to the normal form ``sum_j b_j(Q, q) E^j``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .poly import RationalFunction2


class OperatorSyntaxError(ValueError):
    """Malformed operator text; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        caret = ""
        if text:
            line_start = text.rfind("\n", 0, position) + 1
            line_end = text.find("\n", position)
            line = text[line_start : line_end if line_end >= 0 else None]
            caret = f"\n  {line}\n  {' ' * (position - line_start)}^"
        super().__init__(f"{message} at position {position}{caret}")


class EInDenominatorError(OperatorSyntaxError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "sym", "op", "lparen", "rparen", "end"
    value: object
    pos: int


def tokenize(text: str) -> list[Token]:
    if not text.isascii():
        bad = next(i for i, ch in enumerate(text) if not ch.isascii())
        raise OperatorSyntaxError("non-ASCII character", bad, text)
    out: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            out.append(Token("int", int(text[i:j]), i))
            i = j
        elif ch in "qQE":
            out.append(Token("sym", ch, i))
            i += 1
        elif ch in "+-*/^":
            out.append(Token("op", ch, i))
            i += 1
        elif ch == "(":
            out.append(Token("lparen", ch, i))
            i += 1
        elif ch == ")":
            out.append(Token("rparen", ch, i))
            i += 1
        else:
            raise OperatorSyntaxError(f"unexpected character {ch!r}", i, text)
    out.append(Token("end", None, n))
    return out


class NCElement:
    """Element ``sum_j coeffs[j] * E^j`` of the skew algebra, E to the right."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[int, RationalFunction2] | None = None):
        self.coeffs = {j: c for j, c in (coeffs or {}).items() if not c.is_zero()}

    @classmethod
    def scalar(cls, r: RationalFunction2) -> "NCElement":
        return cls({0: r})

    def is_E_free(self) -> bool:
        return set(self.coeffs) <= {0}

    def degree(self) -> int:
        return max(self.coeffs, default=-1)

    def __add__(self, o: "NCElement") -> "NCElement":
        out = dict(self.coeffs)
        for j, c in o.coeffs.items():
            out[j] = out[j] + c if j in out else c
        return NCElement(out)

    def __neg__(self) -> "NCElement":
        return NCElement({j: -c for j, c in self.coeffs.items()})

    def __sub__(self, o: "NCElement") -> "NCElement":
        return self + (-o)

    def __mul__(self, o: "NCElement") -> "NCElement":
        # (b E^j)(c E^k) = b * c(q^j Q, q) E^(j+k)
        out: dict[int, RationalFunction2] = {}
        for j, b in self.coeffs.items():
            for k, c in o.coeffs.items():
                term = b * c.substitute_Q_shift(j)
                out[j + k] = out[j + k] + term if j + k in out else term
        return NCElement(out)

    def inverse_scalar(self) -> "NCElement":
        return NCElement({0: self.coeffs[0].inverse()})


_E = NCElement({1: RationalFunction2(1)})
_SYMBOLS = {
    "q": NCElement.scalar(RationalFunction2.monomial(0, 1)),
    "Q": NCElement.scalar(RationalFunction2.monomial(1, 0)),
    "E": _E,
}

# binding powers for infix operators
_BINARY = {"+": 10, "-": 10, "*": 20, "/": 20}
_POWER_BP = 30


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise OperatorSyntaxError(msg, tok.pos, self.text)

    def parse(self) -> NCElement:
        if self.peek().kind == "end":
            self.error("empty expression")
        value = self.expression(0)
        if self.peek().kind != "end":
            self.error("unexpected token")
        return value

    def expression(self, min_bp: int) -> NCElement:
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.value == "^":
                if tok.kind in ("end", "rparen"):
                    return left
                if tok.kind == "op" and tok.value == "^":
                    self.error("misplaced '^'")
                self.error("expected an operator")
            bp = _BINARY[tok.value]
            if bp <= min_bp:
                return left
            self.advance()
            right = self.expression(bp)
            if tok.value == "+":
                left = left + right
            elif tok.value == "-":
                left = left - right
            elif tok.value == "*":
                left = left * right
            else:
                left = self._divide(left, right, tok)

    def _divide(self, left: NCElement, right: NCElement, tok: Token) -> NCElement:
        if not right.is_E_free():
            raise EInDenominatorError("E may not appear in a denominator", tok.pos, self.text)
        if not right.coeffs:
            self.error("division by zero", tok)
        return left * right.inverse_scalar()

    def prefix(self) -> NCElement:
        tok = self.peek()
        if tok.kind == "op" and tok.value in "+-":
            self.advance()
            # unary minus binds looser than ^ but tighter than * and /
            operand = self.expression(_BINARY["*"])
            return -operand if tok.value == "-" else operand
        return self.power()

    def power(self) -> NCElement:
        base_tok = self.peek()
        base = self.atom()
        if self.peek().kind == "op" and self.peek().value == "^":
            caret = self.advance()
            negative = False
            if self.peek().kind == "op" and self.peek().value == "-":
                self.advance()
                negative = True
            exp_tok = self.peek()
            if exp_tok.kind != "int":
                self.error("exponent must be an integer literal", exp_tok)
            self.advance()
            n = exp_tok.value
            if negative:
                if not base.is_E_free():
                    raise EInDenominatorError("negative power of an expression with E", caret.pos, self.text)
                if not base.coeffs:
                    self.error("zero to a negative power", base_tok)
                base = base.inverse_scalar()
            result = NCElement({0: RationalFunction2(1)})
            for _ in range(n):
                result = result * base
            return result
        return base

    def atom(self) -> NCElement:
        tok = self.advance()
        if tok.kind == "int":
            return NCElement.scalar(RationalFunction2(tok.value))
        if tok.kind == "sym":
            return _SYMBOLS[tok.value]
        if tok.kind == "lparen":
            value = self.expression(0)
            if self.peek().kind != "rparen":
                self.error("expected ')'")
            self.advance()
            return value
        if tok.kind == "end":
            self.error("unexpected end of input", tok)
        self.error(f"unexpected token {tok.value!r}", tok)


def parse_expression(text: str) -> NCElement:
    return _Parser(text).parse()
