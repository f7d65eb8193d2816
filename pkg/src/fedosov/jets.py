"""Truncated polynomial jets on a cotangent chart.

A :class:`BaseJet` is a polynomial in the 2n interleaved base coordinates

    (x^1, xi^1, x^2, xi^2, ..., x^n, xi^n)

truncated at total degree J, i.e. an element of the quotient ring
Q(i)[x, xi] / (terms of degree > J).  Sums and products are exact in the
quotient: multiplication drops every monomial of total degree above J and
nothing else.

Python-level variable indices are 0-based over the 2n slots; slot 2a holds
x^(a+1) and slot 2a+1 holds xi^(a+1).  All textual surfaces (printers, JSON)
use the 1-based names x1, xi1, ...
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .scalars import GR_ONE, GaussianRational


class BaseJet:
    """Exact jet (truncated polynomial) in 2n base variables at order J.

    ``coeffs`` maps exponent tuples of length 2n to nonzero
    :class:`GaussianRational` values; zero jets have an empty dict.
    Instances are treated as immutable.
    """

    __slots__ = ("n", "J", "coeffs")

    def __init__(self, n: int, J: int, coeffs: Mapping[tuple[int, ...], GaussianRational] | None = None):
        if n < 1:
            raise ValueError(f"need n >= 1, got {n}")
        if J < 0:
            raise ValueError(f"need J >= 0, got {J}")
        clean: dict[tuple[int, ...], GaussianRational] = {}
        if coeffs:
            for exp, val in coeffs.items():
                exp = tuple(exp)
                if len(exp) != 2 * n:
                    raise ValueError(f"exponent tuple {exp} has length {len(exp)}, expected {2 * n}")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent in {exp}")
                if sum(exp) > J:
                    raise ValueError(f"monomial {exp} exceeds jet order J={J}")
                if not isinstance(val, GaussianRational):
                    val = GaussianRational(val)
                if val:
                    clean[exp] = val
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("BaseJet is immutable")

    # -- constructors ------------------------------------------------

    @classmethod
    def zero(cls, n: int, J: int) -> "BaseJet":
        return cls(n, J)

    @classmethod
    def const(cls, n: int, J: int, c) -> "BaseJet":
        c = c if isinstance(c, GaussianRational) else GaussianRational(c)
        if not c:
            return cls(n, J)
        return cls(n, J, {(0,) * (2 * n): c})

    @classmethod
    def one(cls, n: int, J: int) -> "BaseJet":
        return cls.const(n, J, GR_ONE)

    @classmethod
    def var(cls, n: int, J: int, v: int) -> "BaseJet":
        """The coordinate function of base slot v (0-based, 0 <= v < 2n)."""
        if not 0 <= v < 2 * n:
            raise ValueError(f"variable slot {v} out of range for n={n}")
        if J < 1:
            raise ValueError("J must be >= 1 to hold a coordinate function")
        exp = [0] * (2 * n)
        exp[v] = 1
        return cls(n, J, {tuple(exp): GR_ONE})

    # -- ring operations ---------------------------------------------

    def _check_compat(self, other: "BaseJet") -> None:
        if self.n != other.n or self.J != other.J:
            raise ValueError(
                f"jet shape mismatch: (n={self.n}, J={self.J}) vs (n={other.n}, J={other.J})"
            )

    def __add__(self, other: "BaseJet") -> "BaseJet":
        self._check_compat(other)
        out = dict(self.coeffs)
        for exp, val in other.coeffs.items():
            s = out.get(exp)
            s = val if s is None else s + val
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return _raw(self.n, self.J, out)

    def __sub__(self, other: "BaseJet") -> "BaseJet":
        return self + (-other)

    def __neg__(self) -> "BaseJet":
        return _raw(self.n, self.J, {e: -v for e, v in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, BaseJet):
            return jet_mul(self, other)
        other = other if isinstance(other, GaussianRational) else GaussianRational(other)
        if not other:
            return BaseJet.zero(self.n, self.J)
        return _raw(self.n, self.J, {e: v * other for e, v in self.coeffs.items()})

    def __rmul__(self, other):
        return self.__mul__(other)

    # -- queries ------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BaseJet):
            return NotImplemented
        return self.n == other.n and self.J == other.J and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, self.J, frozenset(self.coeffs.items())))

    def at_origin(self) -> GaussianRational:
        from .scalars import GR_ZERO

        return self.coeffs.get((0,) * (2 * self.n), GR_ZERO)

    def degree(self) -> int:
        """Largest total degree present; -1 for the zero jet."""
        return max((sum(e) for e in self.coeffs), default=-1)

    def min_degree(self) -> int:
        """Smallest total degree present; J + 1 for the zero jet."""
        return min((sum(e) for e in self.coeffs), default=self.J + 1)

    def depends_only_on_x(self) -> bool:
        """True when no xi slot (odd 0-based index) carries an exponent."""
        return all(all(e[v] == 0 for v in range(1, 2 * self.n, 2)) for e in self.coeffs)

    def sorted_items(self) -> list[tuple[tuple[int, ...], GaussianRational]]:
        return sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def __repr__(self) -> str:
        body = ", ".join(f"{e}: {v}" for e, v in self.sorted_items()) or "0"
        return f"BaseJet(n={self.n}, J={self.J}, {{{body}}})"


def _raw(n: int, J: int, coeffs: dict[tuple[int, ...], GaussianRational]) -> BaseJet:
    out = BaseJet.__new__(BaseJet)
    object.__setattr__(out, "n", n)
    object.__setattr__(out, "J", J)
    object.__setattr__(out, "coeffs", coeffs)
    return out


def jet_mul(a: BaseJet, b: BaseJet) -> BaseJet:
    """Product in the quotient ring: exact, with degrees above J dropped."""
    a._check_compat(b)
    J = a.J
    out: dict[tuple[int, ...], GaussianRational] = {}
    bitems = [(exp, sum(exp), val) for exp, val in b.coeffs.items()]
    for ea, va in a.coeffs.items():
        da = sum(ea)
        for eb, db, vb in bitems:
            if da + db > J:
                continue
            exp = tuple(x + y for x, y in zip(ea, eb))
            s = out.get(exp)
            s = va * vb if s is None else s + va * vb
            if s:
                out[exp] = s
            else:
                del out[exp]
    return _raw(a.n, a.J, out)


def jet_partial(a: BaseJet, v: int) -> BaseJet:
    """Partial derivative with respect to base slot v (0-based)."""
    if not 0 <= v < 2 * a.n:
        raise ValueError(f"variable slot {v} out of range for n={a.n}")
    out: dict[tuple[int, ...], GaussianRational] = {}
    for exp, val in a.coeffs.items():
        k = exp[v]
        if k == 0:
            continue
        newexp = list(exp)
        newexp[v] = k - 1
        out[tuple(newexp)] = val * k
    return _raw(a.n, a.J, out)


def jet_product_many(factors: Iterable[BaseJet]) -> BaseJet:
    it = iter(factors)
    try:
        acc = next(it)
    except StopIteration:
        raise ValueError("empty product needs an explicit ring")
    for f in it:
        acc = jet_mul(acc, f)
    return acc
