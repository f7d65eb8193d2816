"""Concrete syntax for form series and a report syntax for elements.

Grammar accepted by :func:`parse_expr`::

    expr   :=  ['+'|'-'] term (('+'|'-') term)*
    term   :=  atom (sep atom)*          sep is '*', '^' before a wedge,
                                         or plain whitespace
    atom   :=  rational | 'i' | 'h' ['^' int] | var ['^' nat] | 'dx' idx
    var    :=  'x' idx | 'xi' idx
    rational := int ['/' int]

Indices are 1-based in the source text.  Wedge factors may repeat (the
term then normalizes to zero) and arrive in any order; the sign of the
sorting permutation is folded into the scalar.  Floats are rejected so
exactness is preserved end to end.

:func:`format_form_series` inverts the parser on canonical output:
``parse_expr(format_form_series(s), n)`` rebuilds ``s`` exactly.
Elements with Weyl, Clifford or dy-form content are printed by
:func:`format_element` with the extra generators ``y<slot>``, ``e<k>``
and ``dy<slot>``; that wider surface is for reports and is not parsed
back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .algebra import Element, Monomial
from .engine import FormSeries
from .jets import BaseJet
from .scalars import GR_ONE, GaussianRational, parse_rational, rational

__all__ = [
    "ParseError",
    "ExprTerm",
    "ExprAst",
    "parse_expr",
    "parse_form_series",
    "format_form_series",
    "format_element",
]


class ParseError(ValueError):
    """Syntax or range error, annotated with the 0-based source position."""

    def __init__(self, msg: str, src: str, pos: int):
        self.pos = pos
        self.src = src
        caret = " " * pos + "^"
        super().__init__(f"{msg} at position {pos}\n  {src}\n  {caret}")


@dataclass(frozen=True)
class ExprTerm:
    """One normalized additive term of an expression.

    ``exponents`` runs over the 2n interleaved base slots (x1, xi1, x2,
    ...); ``wedge`` holds strictly increasing 1-based dx indices with the
    sorting sign already folded into ``scalar``.
    """

    scalar: GaussianRational
    hbar: int
    exponents: tuple[int, ...]
    wedge: tuple[int, ...]


@dataclass(frozen=True)
class ExprAst:
    n: int
    terms: tuple[ExprTerm, ...]

    def to_form_series(self, J: int) -> FormSeries:
        n = self.n
        acc: dict[tuple[int, tuple[int, ...]], dict] = {}
        for t in self.terms:
            if sum(t.exponents) > J:
                continue  # zero in the order-J quotient
            key = (t.hbar, t.wedge)
            bucket = acc.setdefault(key, {})
            cur = bucket.get(t.exponents)
            cur = t.scalar if cur is None else cur + t.scalar
            if cur:
                bucket[t.exponents] = cur
            else:
                bucket.pop(t.exponents, None)
        triples = []
        for (h, wedge), coeffs in acc.items():
            if not coeffs:
                continue
            slots = tuple(2 * (i - 1) for i in wedge)
            triples.append((h, slots, BaseJet(n, J, coeffs)))
        return FormSeries.from_terms(n, J, triples)


_TOKEN = re.compile(r"""
    (?P<float>\d+\.\d*|\.\d+|\d+[eE][+-]?\d+)
  | (?P<number>\d+(?:\s*/\s*\d+)?)
  | (?P<name>[A-Za-z]+\d*)
  | (?P<op>[+\-*^])
  | (?P<ws>\s+)
  | (?P<bad>.)
""", re.VERBOSE)

_NAME = re.compile(r"(dx|dy|xi|x|y|e|h|i)(\d*)$")


def _tokens(src: str):
    out = []
    for m in _TOKEN.finditer(src):
        kind = m.lastgroup
        if kind == "ws":
            continue
        if kind == "float":
            raise ParseError(
                f"floats are not accepted, write an exact rational like 3/2 "
                f"(got {m.group()!r})", src, m.start())
        if kind == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", src, m.start())
        out.append((kind, m.group().replace(" ", ""), m.start()))
    return out


def parse_expr(src: str, n: int) -> ExprAst:
    """Parse the x-form grammar over n base pairs; 1-based indices."""
    toks = _tokens(src)
    if not toks:
        raise ParseError("empty expression", src, 0)
    terms: list[ExprTerm] = []
    pos = 0

    def peek(k=0):
        return toks[pos + k] if pos + k < len(toks) else (None, "", len(src))

    def index_of(tok, base: str) -> int:
        kind, text, at = tok
        digits = text[len(base):]
        if not digits:
            raise ParseError(f"'{base}' needs an index, like {base}1", src, at)
        idx = int(digits)
        if not 1 <= idx <= n:
            raise ParseError(f"index {idx} out of range 1..{n} for '{text}'", src, at)
        return idx

    while pos < len(toks):
        sign = 1
        kind, text, at = peek()
        while kind == "op" and text in "+-":
            if text == "-":
                sign = -sign
            pos += 1
            kind, text, at = peek()
        if kind is None:
            raise ParseError("dangling sign", src, at)

        scalar = GaussianRational(sign)
        hbar = 0
        exps = [0] * (2 * n)
        wedge: list[int] = []
        wedge_sign = 1
        saw_atom = False

        while True:
            kind, text, at = peek()
            if kind is None or (kind == "op" and text in "+-"):
                break
            if kind == "op":
                if text == "*" or text == "^":
                    # '^' joins wedge factors in canonical output (dx1^dx2)
                    pos += 1
                    continue
                raise ParseError(f"unexpected operator {text!r}", src, at)
            if kind == "number":
                scalar = scalar * GaussianRational(parse_rational(text))
                pos += 1
                saw_atom = True
                continue
            m = _NAME.match(text)
            if not m:
                raise ParseError(f"unknown symbol {text!r}", src, at)
            head = m.group(1)
            if head == "i" and not m.group(2):
                scalar = scalar * GaussianRational(0, 1)
                pos += 1
                saw_atom = True
                continue
            if head == "h" and not m.group(2):
                pos += 1
                k = 1
                if peek()[0] == "op" and peek()[1] == "^":
                    pos += 1
                    k, used = _signed_int(toks, pos, src)
                    pos += used
                hbar += k
                saw_atom = True
                continue
            if head in ("x", "xi"):
                idx = index_of((kind, text, at), head)
                slot = 2 * (idx - 1) + (1 if head == "xi" else 0)
                pos += 1
                k = 1
                if peek()[0] == "op" and peek()[1] == "^":
                    nk, nt, na = peek(1)
                    if nk == "number" and "/" not in nt:
                        pos += 2
                        k = int(nt)
                    elif nk == "name" and nt.startswith(("dx", "dy")):
                        pass  # wedge separator, leave for the loop
                    else:
                        raise ParseError("exponent must be a bare integer", src, na)
                exps[slot] += k
                saw_atom = True
                continue
            if head == "dx":
                idx = index_of((kind, text, at), "dx")
                pos += 1
                if idx in wedge:
                    wedge_sign = 0
                else:
                    below = sum(1 for w in wedge if w > idx)
                    if below & 1:
                        wedge_sign = -wedge_sign
                    wedge.append(idx)
                saw_atom = True
                continue
            raise ParseError(
                f"symbol {text!r} is not part of the x-form grammar", src, at)

        if not saw_atom:
            raise ParseError("empty term", src, at)
        if wedge_sign == 0:
            continue  # repeated wedge factor: the term is zero
        if wedge_sign < 0:
            scalar = -scalar
        if scalar:
            terms.append(ExprTerm(scalar, hbar, tuple(exps), tuple(sorted(wedge))))
    return ExprAst(n, tuple(terms))


def _signed_int(toks, pos, src) -> tuple[int, int]:
    """Read an optionally signed integer at toks[pos]; returns (value, used)."""
    used = 0
    sign = 1
    if pos < len(toks) and toks[pos][0] == "op" and toks[pos][1] in "+-":
        if toks[pos][1] == "-":
            sign = -1
        pos += 1
        used += 1
    if pos >= len(toks) or toks[pos][0] != "number" or "/" in toks[pos][1]:
        at = toks[pos][2] if pos < len(toks) else len(src)
        raise ParseError("exponent must be a bare integer", src, at)
    return sign * int(toks[pos][1]), used + 1


def parse_form_series(src: str, n: int, J: int) -> FormSeries:
    return parse_expr(src, n).to_form_series(J)


# ---------------------------------------------------------------------------
# canonical printing
# ---------------------------------------------------------------------------


def _rat_str(q) -> str:
    return str(q)


def _scalar_factors(c: GaussianRational) -> tuple[int, list[str]]:
    """Split a purely real or purely imaginary scalar into sign + factors."""
    if c.im:
        q = c.im
        imag = True
    else:
        q = c.re
        imag = False
    sign = 1 if q >= 0 else -1
    q = q if sign > 0 else -q
    factors = []
    if q != 1:
        factors.append(_rat_str(q))
    if imag:
        factors.append("i")
    return sign, factors


def _var_name(slot: int) -> str:
    pair, kind = divmod(slot, 2)
    return f"{'xi' if kind else 'x'}{pair + 1}"


def _render_terms(parts: list[tuple[int, list[str], str]]) -> str:
    if not parts:
        return "0"
    chunks = []
    for k, (sign, factors, wedge) in enumerate(parts):
        if factors:
            body = "*".join(factors)
            if wedge:
                body = f"{body} {wedge}"
        else:
            body = wedge if wedge else "1"
        if k == 0:
            chunks.append(body if sign > 0 else f"-{body}")
        else:
            chunks.append(f"{'+' if sign > 0 else '-'} {body}")
    return " ".join(chunks)


def format_form_series(s: FormSeries) -> str:
    """Deterministic text for a FormSeries; parse_expr inverts it."""
    parts: list[tuple[int, list[str], str]] = []
    for h, slots, jet in s.terms:
        if any(v & 1 for v in slots):
            raise ValueError("only x-form series have a concrete syntax")
        wedge = "^".join(f"dx{v // 2 + 1}" for v in slots)
        for exps in sorted(jet.coeffs):
            c = jet.coeffs[exps]
            for part in _split_gaussian(c):
                sign, factors = _scalar_factors(part)
                vars_ = [f"{_var_name(i)}^{e}" if e > 1 else _var_name(i)
                         for i, e in enumerate(exps) if e]
                factors = factors + vars_ if vars_ else factors
                if h:
                    factors = factors + ([f"h^{h}"] if h != 1 else ["h"])
                parts.append((sign, factors, wedge))
    return _render_terms(parts)


def _split_gaussian(c: GaussianRational):
    out = []
    if c.re:
        out.append(GaussianRational(c.re))
    if c.im:
        out.append(GaussianRational(0, c.im))
    return out


def format_element(x, mode: str = "text") -> str:
    """Canonical text for an Element or FormSeries.

    FormSeries output round-trips through :func:`parse_expr`;  Element
    output extends the vocabulary with y<slot>, e<k> and dy<slot> factors
    and is meant for reports.
    """
    if mode not in ("text", "json"):
        raise ValueError(f"unknown format mode {mode!r}")
    if isinstance(x, FormSeries):
        return format_form_series(x)
    if not isinstance(x, Element):
        raise TypeError(f"cannot format {type(x).__name__}")
    rows = []
    for jet, m in x.terms:
        for exps in sorted(jet.coeffs):
            rows.append((m.hbar, m.weyl, m.cliff, m.form, exps, jet.coeffs[exps]))
    rows.sort(key=lambda r: (r[0], sum(r[1]), r[1], r[2], r[3], r[4]))
    parts = []
    for h, weyl, cliff, form, exps, c in rows:
        for part in _split_gaussian(c):
            sign, factors = _scalar_factors(part)
            factors += [f"{_var_name(i)}^{e}" if e > 1 else _var_name(i)
                        for i, e in enumerate(exps) if e]
            factors += [f"y{i + 1}^{e}" if e > 1 else f"y{i + 1}"
                        for i, e in enumerate(weyl) if e]
            factors += [f"e{k + 1}" for k in cliff]
            if h:
                factors.append(f"h^{h}" if h != 1 else "h")
            wedge = "^".join(f"dy{v + 1}" for v in form)
            parts.append((sign, factors, wedge))
    return _render_terms(parts)
