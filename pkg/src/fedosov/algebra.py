"""Graded Weyl-Clifford-form algebra over truncated jets.

Elements live in the algebra

    W = (jets) (x) Q(i)[hbar, hbar^-1] (x) Weyl(2n) (x) Cl(n) (x) Lambda(2n)

with generators, per chart of half-dimension n:

* 2n Weyl generators ``y^0 .. y^(2n-1)`` (interleaved: slot 2a is the
  fiberwise-lifted x^(a+1), slot 2a+1 is xi^(a+1)), with the Moyal product:
  the only nonzero elementary commutator is [y^(2a), y^(2a+1)] = i*hbar.
* n odd Clifford generators ``e_0 .. e_(n-1)`` with
  e_i e_j + e_j e_i = -2*hbar*delta_ij  (orthonormal frame).
* 2n odd wedge generators ``dy^0 .. dy^(2n-1)`` (slot 2a prints as
  dx^(a+1), slot 2a+1 as dxi^(a+1)).
* coefficients are :class:`~fedosov.jets.BaseJet` jets in the base
  variables, truncated at total degree J.

A term is stored flattened as (jet monomial) * i^b * hbar^h * y^alpha *
e_S * dy^T in this factor order; products carry the super sign
(-1)^(|T_a| * |S_b|) from moving e_(S_b) past dy^(T_a).

The filtration degree of a monomial is 2*hbar_exp + |alpha| + |S| (form
degree not counted); the zero element sits at +infinity.

Terms are keyed by a packed integer, one bit field per datum, so products
run on machine ints plus one exact rational multiply per surviving pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

from .jets import BaseJet, _raw as _jet_raw
from .scalars import GR_ZERO, GaussianRational, rational

INF = math.inf

_HBAR_FLOOR = [-64]


def set_hbar_floor(k: int) -> None:
    """Set the global lower bound on hbar exponents (default -64)."""
    _HBAR_FLOOR[0] = int(k)


def get_hbar_floor() -> int:
    return _HBAR_FLOOR[0]


class HbarFloorError(ArithmeticError):
    """An operation tried to produce hbar^k below the configured floor."""


class ShapeMismatchError(ValueError):
    """Operands live on different (n, J) algebras."""


# ---------------------------------------------------------------------------
# packed-key layout
# ---------------------------------------------------------------------------

_HBITS = 16
_HOFF = 1 << (_HBITS - 1)
_WBITS = 8  # per-variable Weyl exponent field
_BBITS = 6  # per-variable base exponent field
_MAX_J = (1 << _BBITS) - 1
_WCAP = 1 << _WBITS


class _Layout:
    """Bit layout of packed term keys for a fixed (n, J), plus product caches."""

    def __init__(self, n: int, J: int):
        if J > _MAX_J:
            raise ValueError(f"jet order J={J} exceeds supported maximum {_MAX_J}")
        self.n = n
        self.J = J
        nv = 2 * n
        self.nv = nv
        self.form_shift = 1
        self.cliff_shift = 1 + nv
        self.hbar_shift = 1 + nv + n
        self.weyl_shift = self.hbar_shift + _HBITS
        self.base_shift = self.weyl_shift + _WBITS * nv
        self.form_mask = ((1 << nv) - 1) << self.form_shift
        self.cliff_mask = ((1 << n) - 1) << self.cliff_shift
        self.hbar_mask = ((1 << _HBITS) - 1) << self.hbar_shift
        self.weyl_mask = ((1 << (_WBITS * nv)) - 1) << self.weyl_shift
        self.base_mask = ((1 << (_BBITS * nv)) - 1) << self.base_shift
        self._moyal: dict[tuple[int, int], tuple] = {}
        self._cliff: dict[tuple[int, int], tuple[int, int, int]] = {}
        self._wedge: dict[tuple[int, int], int] = {}
        self._fact = [1]
        for k in range(1, 64):
            self._fact.append(self._fact[-1] * k)

    # -- packing -------------------------------------------------------

    def pack(self, h: int, weyl: tuple[int, ...], S: int, T: int, base: tuple[int, ...], ibit: int) -> int:
        key = ibit | (T << self.form_shift) | (S << self.cliff_shift)
        key |= (h + _HOFF) << self.hbar_shift
        shift = self.weyl_shift
        for e in weyl:
            key |= e << shift
            shift += _WBITS
        shift = self.base_shift
        for e in base:
            key |= e << shift
            shift += _BBITS
        return key

    def unpack(self, key: int) -> tuple[int, tuple[int, ...], int, int, tuple[int, ...], int]:
        ibit = key & 1
        T = (key & self.form_mask) >> self.form_shift
        S = (key & self.cliff_mask) >> self.cliff_shift
        h = ((key & self.hbar_mask) >> self.hbar_shift) - _HOFF
        weyl = tuple((key >> (self.weyl_shift + _WBITS * v)) & (_WCAP - 1) for v in range(self.nv))
        base = tuple((key >> (self.base_shift + _BBITS * v)) & (_MAX_J) for v in range(self.nv))
        return h, weyl, S, T, base, ibit

    def weyl_abs(self, weyl: tuple[int, ...]) -> int:
        out = 0
        shift = self.weyl_shift
        for e in weyl:
            out |= e << shift
            shift += _WBITS
        return out

    def base_abs(self, base: tuple[int, ...]) -> int:
        out = 0
        shift = self.base_shift
        for e in base:
            out |= e << shift
            shift += _BBITS
        return out

    def weyl_tuple(self, wabs: int) -> tuple[int, ...]:
        return tuple((wabs >> (self.weyl_shift + _WBITS * v)) & (_WCAP - 1) for v in range(self.nv))

    def base_tuple(self, babs: int) -> tuple[int, ...]:
        return tuple((babs >> (self.base_shift + _BBITS * v)) & _MAX_J for v in range(self.nv))

    # -- Clifford word products -----------------------------------------

    def cliff_pair(self, Sa: int, Sb: int) -> tuple[int, int, int]:
        """e_{Sa} * e_{Sb} = sign * hbar^annih * e_{mask}; returns (sign, annih, mask)."""
        hit = self._cliff.get((Sa, Sb))
        if hit is not None:
            return hit
        sign = 1
        annih = 0
        S = Sa
        rem = Sb
        while rem:
            j = (rem & -rem).bit_length() - 1
            rem &= rem - 1
            higher = S >> (j + 1)
            c = higher.bit_count()
            bit = 1 << j
            if S & bit:
                # e_j meets e_j: contributes (-hbar); minus sign folded here
                if (c + 1) & 1:
                    sign = -sign
                annih += 1
                S &= ~bit
            else:
                if c & 1:
                    sign = -sign
                S |= bit
        out = (sign, annih, S)
        self._cliff[(Sa, Sb)] = out
        return out

    def wedge_sign(self, Ta: int, Tb: int) -> int:
        """Sign of merging two disjoint increasing wedge words, Ta on the left."""
        hit = self._wedge.get((Ta, Tb))
        if hit is not None:
            return hit
        swaps = 0
        rem = Tb
        while rem:
            t = (rem & -rem).bit_length() - 1
            rem &= rem - 1
            swaps += (Ta >> (t + 1)).bit_count()
        sign = -1 if swaps & 1 else 1
        self._wedge[(Ta, Tb)] = sign
        return sign

    # -- Moyal contraction table -----------------------------------------

    def moyal_entries(self, wa: int, wb: int):
        """All bidifferential contractions of two packed Weyl exponents.

        Yields tuples (packed result exponent, contraction order k, exact
        rational coefficient).  The coefficient carries (1/2)^k, the
        falling-factorial counts and the antisymmetry sign (-1)^|v|; the
        factor i^k is applied by the caller.
        """
        key = (wa, wb)
        hit = self._moyal.get(key)
        if hit is not None:
            return hit
        alpha = self.weyl_tuple(wa)
        beta = self.weyl_tuple(wb)
        n = self.n
        fact = self._fact
        entries: list[tuple[int, int, object]] = []
        res = list(x + y for x, y in zip(alpha, beta))

        def rec(p: int, k: int, num: int, den: int, vpar: int):
            if p == n:
                coeff = rational(num, den << k)
                if vpar & 1:
                    coeff = -coeff
                entries.append((self.weyl_abs(tuple(res)), k, coeff))
                return
            xv, sv = 2 * p, 2 * p + 1
            umax = min(alpha[xv], beta[sv])
            vmax = min(alpha[sv], beta[xv])
            for u in range(umax + 1):
                nu = num
                for t in range(u):
                    nu *= (alpha[xv] - t) * (beta[sv] - t)
                for v in range(vmax + 1):
                    nv = nu
                    for t in range(v):
                        nv *= (alpha[sv] - t) * (beta[xv] - t)
                    res[xv] = alpha[xv] + beta[xv] - u - v
                    res[sv] = alpha[sv] + beta[sv] - u - v
                    rec(p + 1, k + u + v, nv, den * fact[u] * fact[v], vpar + v)
            res[xv] = alpha[xv] + beta[xv]
            res[sv] = alpha[sv] + beta[sv]

        rec(0, 0, 1, 1, 0)
        out = tuple(entries)
        self._moyal[key] = out
        return out


@lru_cache(maxsize=None)
def _layout(n: int, J: int) -> _Layout:
    return _Layout(n, J)


# ---------------------------------------------------------------------------
# monomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Monomial:
    """Generator word: hbar^hbar_exp * y^weyl * e_cliff * dy^form.

    ``weyl`` has one exponent per 2n slot; ``cliff`` and ``form`` are
    strictly increasing tuples of 0-based generator indices.
    """

    hbar: int
    weyl: tuple[int, ...]
    cliff: tuple[int, ...] = ()
    form: tuple[int, ...] = ()

    def __post_init__(self):
        if list(self.cliff) != sorted(set(self.cliff)):
            raise ValueError(f"cliff word {self.cliff} must be strictly increasing")
        if list(self.form) != sorted(set(self.form)):
            raise ValueError(f"form word {self.form} must be strictly increasing")
        if any(e < 0 for e in self.weyl):
            raise ValueError(f"negative Weyl exponent in {self.weyl}")

    @property
    def filtration_degree(self) -> int:
        return 2 * self.hbar + sum(self.weyl) + len(self.cliff)

    @property
    def parity(self) -> int:
        """Z/2 parity: Clifford plus form degree mod 2."""
        return (len(self.cliff) + len(self.form)) & 1

    def sort_key(self):
        return (self.filtration_degree, self.hbar, self.weyl, self.cliff, self.form)


# ---------------------------------------------------------------------------
# elements
# ---------------------------------------------------------------------------


def _vmin(*vals):
    return min(vals)


class Element:
    """A finite sum of jets times generator words, exact and canonical.

    Equality is structural on the canonical form.  ``filt_valid`` and
    ``base_valid`` record through which filtration degree, respectively
    jet degree, the element agrees with the untruncated model; +inf means
    exact.  Validity does not take part in equality.
    """

    __slots__ = ("n", "J", "_lay", "_t", "filt_valid", "base_valid", "_dec", "_dmin")

    def __init__(self, n: int, J: int, terms: Iterable[tuple[BaseJet, Monomial]] = (), *,
                 filt_valid=INF, base_valid=INF):
        lay = _layout(n, J)
        t: dict[int, object] = {}
        for jet, mono in terms:
            if jet.n != n or jet.J != J:
                raise ShapeMismatchError(
                    f"jet (n={jet.n}, J={jet.J}) does not fit algebra (n={n}, J={J})")
            if len(mono.weyl) != 2 * n:
                raise ValueError(f"Weyl tuple {mono.weyl} needs length {2 * n}")
            if any(v >= _WCAP // 2 for v in mono.weyl):
                raise ValueError(f"Weyl exponent too large in {mono.weyl}")
            if mono.cliff and mono.cliff[-1] >= n:
                raise ValueError(f"Clifford index out of range in {mono.cliff}")
            if mono.form and mono.form[-1] >= 2 * n:
                raise ValueError(f"form slot out of range in {mono.form}")
            S = 0
            for i in mono.cliff:
                S |= 1 << i
            T = 0
            for v in mono.form:
                T |= 1 << v
            for bexp, val in jet.coeffs.items():
                for part, ibit in ((val.re, 0), (val.im, 1)):
                    if part == 0:
                        continue
                    key = lay.pack(mono.hbar, mono.weyl, S, T, bexp, ibit)
                    cur = t.get(key)
                    cur = part if cur is None else cur + part
                    if cur:
                        t[key] = cur
                    else:
                        del t[key]
        self._init_raw(n, J, lay, t, filt_valid, base_valid)

    def _init_raw(self, n, J, lay, t, filt_valid, base_valid):
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "_lay", lay)
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "filt_valid", filt_valid)
        object.__setattr__(self, "base_valid", _vmin(base_valid, INF))
        object.__setattr__(self, "_dec", None)
        object.__setattr__(self, "_dmin", None)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("Element is immutable")

    # -- raw constructor ---------------------------------------------

    @classmethod
    def _make(cls, n: int, J: int, t: dict, *, filt_valid=INF, base_valid=INF) -> "Element":
        out = cls.__new__(cls)
        out._init_raw(n, J, _layout(n, J), t, filt_valid, base_valid)
        return out

    # -- convenience constructors --------------------------------------

    @classmethod
    def zero(cls, n: int, J: int) -> "Element":
        return cls._make(n, J, {})

    @classmethod
    def scalar(cls, n: int, J: int, c) -> "Element":
        c = c if isinstance(c, GaussianRational) else GaussianRational(c)
        jet = BaseJet.const(n, J, c)
        return cls(n, J, [(jet, Monomial(0, (0,) * (2 * n)))])

    @classmethod
    def hbar(cls, n: int, J: int, k: int = 1) -> "Element":
        return cls(n, J, [(BaseJet.one(n, J), Monomial(k, (0,) * (2 * n)))])

    @classmethod
    def weyl_gen(cls, n: int, J: int, v: int) -> "Element":
        if not 0 <= v < 2 * n:
            raise ValueError(f"Weyl slot {v} out of range")
        w = [0] * (2 * n)
        w[v] = 1
        return cls(n, J, [(BaseJet.one(n, J), Monomial(0, tuple(w)))])

    @classmethod
    def cliff_gen(cls, n: int, J: int, i: int) -> "Element":
        if not 0 <= i < n:
            raise ValueError(f"Clifford index {i} out of range")
        return cls(n, J, [(BaseJet.one(n, J), Monomial(0, (0,) * (2 * n), (i,)))])

    @classmethod
    def form_gen(cls, n: int, J: int, v: int) -> "Element":
        if not 0 <= v < 2 * n:
            raise ValueError(f"form slot {v} out of range")
        return cls(n, J, [(BaseJet.one(n, J), Monomial(0, (0,) * (2 * n), (), (v,)))])

    @classmethod
    def from_jet(cls, jet: BaseJet) -> "Element":
        return cls(jet.n, jet.J, [(jet, Monomial(0, (0,) * (2 * jet.n)))])

    # -- decoding -------------------------------------------------------

    def _decode(self):
        """Per-term tuples used by the product kernel; built once, cached."""
        dec = self._dec
        if dec is not None:
            return dec
        lay = self._lay
        out = []
        wmaskbits = _WCAP - 1
        for key, coeff in self._t.items():
            ibit = key & 1
            T = (key & lay.form_mask) >> lay.form_shift
            S = (key & lay.cliff_mask) >> lay.cliff_shift
            h = ((key & lay.hbar_mask) >> lay.hbar_shift) - _HOFF
            wabs = key & lay.weyl_mask
            babs = key & lay.base_mask
            wdeg = 0
            x = wabs >> lay.weyl_shift
            while x:
                wdeg += x & wmaskbits
                x >>= _WBITS
            bdeg = 0
            x = babs >> lay.base_shift
            while x:
                bdeg += x & _MAX_J
                x >>= _BBITS
            popS = S.bit_count()
            fdeg = 2 * h + wdeg + popS
            out.append((h, wabs, wdeg, S, T, babs, bdeg, ibit, fdeg, popS, T.bit_count(), coeff))
        object.__setattr__(self, "_dec", out)
        return out

    def min_filtration_degree(self):
        d = self._dmin
        if d is None:
            d = min((t[8] for t in self._decode()), default=INF)
            object.__setattr__(self, "_dmin", d)
        return d

    def filtration_degree(self):
        """Smallest filtration degree among terms; +inf for the zero element."""
        return self.min_filtration_degree()

    def max_filtration_degree(self):
        return max((t[8] for t in self._decode()), default=-INF)

    def parity(self) -> str:
        """'even', 'odd', or 'mixed' (zero counts as even)."""
        seen = {(t[9] + t[10]) & 1 for t in self._decode()}
        if len(seen) == 2:
            return "mixed"
        if seen == {1}:
            return "odd"
        return "even"

    # -- canonical term view ---------------------------------------------

    @property
    def terms(self) -> list[tuple[BaseJet, Monomial]]:
        """Canonical sorted (jet, monomial) pairs; the public view of the element."""
        lay = self._lay
        groups: dict[tuple, dict] = {}
        for key, coeff in self._t.items():
            h, weyl, S, T, base, ibit = lay.unpack(key)
            gk = (h, weyl, S, T)
            jetd = groups.setdefault(gk, {})
            cur = jetd.get(base, GR_ZERO)
            add = GaussianRational(0, coeff) if ibit else GaussianRational(coeff, 0)
            jetd[base] = cur + add
        out = []
        for (h, weyl, S, T), jetd in groups.items():
            mono = Monomial(h, weyl, _bits(S), _bits(T))
            jet = _jet_raw(self.n, self.J, {e: v for e, v in jetd.items() if v})
            if jet:
                out.append((jet, mono))
        out.sort(key=lambda jm: jm[1].sort_key())
        return out

    # -- linear structure --------------------------------------------------

    def _check_compat(self, other: "Element") -> None:
        if self.n != other.n or self.J != other.J:
            raise ShapeMismatchError(
                f"algebra mismatch: (n={self.n}, J={self.J}) vs (n={other.n}, J={other.J})")

    def __add__(self, other: "Element") -> "Element":
        if not isinstance(other, Element):
            return NotImplemented
        self._check_compat(other)
        t = dict(self._t)
        for key, val in other._t.items():
            cur = t.get(key)
            cur = val if cur is None else cur + val
            if cur:
                t[key] = cur
            else:
                del t[key]
        return Element._make(self.n, self.J, t,
                             filt_valid=_vmin(self.filt_valid, other.filt_valid),
                             base_valid=_vmin(self.base_valid, other.base_valid))

    def __sub__(self, other: "Element") -> "Element":
        if not isinstance(other, Element):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "Element":
        return Element._make(self.n, self.J, {k: -v for k, v in self._t.items()},
                             filt_valid=self.filt_valid, base_valid=self.base_valid)

    def __mul__(self, c):
        """Scalar multiple (int, backend rational, or GaussianRational)."""
        if isinstance(c, Element):
            return mc_product(self, c)
        if not isinstance(c, GaussianRational):
            if isinstance(c, float):
                raise TypeError("floats are not accepted; use exact rationals")
            c = GaussianRational(c)
        t: dict[int, object] = {}
        re, im = c.re, c.im
        for key, val in self._t.items():
            if re:
                _acc(t, key, val * re)
            if im:
                # multiply by im*i: flips the i bit, i*i = -1
                if key & 1:
                    _acc(t, key & ~1, -(val * im))
                else:
                    _acc(t, key | 1, val * im)
        return Element._make(self.n, self.J, t,
                             filt_valid=self.filt_valid, base_valid=self.base_valid)

    __rmul__ = __mul__

    # -- structure queries ---------------------------------------------

    def __bool__(self) -> bool:
        return bool(self._t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        return self.n == other.n and self.J == other.J and self._t == other._t

    def __hash__(self):
        raise TypeError("Element is not hashable")

    def __repr__(self) -> str:
        return f"Element(n={self.n}, J={self.J}, {len(self._t)} packed terms)"

    def is_weyl_free(self) -> bool:
        return all(t[1] == 0 for t in self._decode())

    def is_cliff_free(self) -> bool:
        return all(t[3] == 0 for t in self._decode())

    def is_form_free(self) -> bool:
        return all(t[4] == 0 for t in self._decode())

    # -- filtration slicing ----------------------------------------------

    def filt_component(self, d: int) -> "Element":
        """The part of exact filtration degree d."""
        t = {}
        lay_items = self._decode()
        for rec in lay_items:
            if rec[8] == d:
                key = self._rebuild_key(rec)
                t[key] = rec[11]
        return Element._make(self.n, self.J, t,
                             filt_valid=self.filt_valid, base_valid=self.base_valid)

    def filt_truncate(self, maxd: int) -> "Element":
        """Drop every term of filtration degree above maxd."""
        t = {}
        for rec in self._decode():
            if rec[8] <= maxd:
                t[self._rebuild_key(rec)] = rec[11]
        return Element._make(self.n, self.J, t,
                             filt_valid=_vmin(self.filt_valid, maxd),
                             base_valid=self.base_valid)

    def base_truncate(self, maxb) -> "Element":
        """Drop every term whose base monomial degree exceeds maxb.

        Used to restrict identity checks to the window where truncated
        jets still agree with the functions they stand for; maxb below 0
        yields the zero element, INF returns self unchanged.
        """
        if maxb == INF:
            return self
        if maxb < 0:
            return Element.zero(self.n, self.J)
        t = {}
        for rec in self._decode():
            if rec[6] <= maxb:
                t[self._rebuild_key(rec)] = rec[11]
        return Element._make(self.n, self.J, t,
                             filt_valid=self.filt_valid,
                             base_valid=_vmin(self.base_valid, maxb))

    def _rebuild_key(self, rec) -> int:
        lay = self._lay
        h, wabs, _, S, T, babs, _, ibit = rec[0], rec[1], rec[2], rec[3], rec[4], rec[5], rec[6], rec[7]
        return (ibit | (T << lay.form_shift) | (S << lay.cliff_shift)
                | ((h + _HOFF) << lay.hbar_shift) | wabs | babs)

    def parity_split(self) -> tuple["Element", "Element"]:
        """(even part, odd part) under the Clifford+form parity."""
        te: dict[int, object] = {}
        to: dict[int, object] = {}
        for rec in self._decode():
            key = self._rebuild_key(rec)
            if (rec[9] + rec[10]) & 1:
                to[key] = rec[11]
            else:
                te[key] = rec[11]
        mk = lambda t: Element._make(self.n, self.J, t,
                                     filt_valid=self.filt_valid, base_valid=self.base_valid)
        return mk(te), mk(to)

    def with_validity(self, *, filt_valid=None, base_valid=None) -> "Element":
        return Element._make(self.n, self.J, self._t,
                             filt_valid=self.filt_valid if filt_valid is None else filt_valid,
                             base_valid=self.base_valid if base_valid is None else base_valid)

    def map_jets(self, f: Callable[[BaseJet], BaseJet]) -> "Element":
        """Apply a jet-linear map to every coefficient jet (slow path, test helper)."""
        out = []
        for jet, mono in self.terms:
            nj = f(jet)
            if nj:
                out.append((nj, mono))
        return Element(self.n, self.J, out, filt_valid=self.filt_valid, base_valid=self.base_valid)


def _bits(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        b = (mask & -mask).bit_length() - 1
        out.append(b)
        mask &= mask - 1
    return tuple(out)


def _acc(t: dict, key: int, val) -> None:
    cur = t.get(key)
    cur = val if cur is None else cur + val
    if cur:
        t[key] = cur
    else:
        del t[key]


# ---------------------------------------------------------------------------
# the Moyal-Clifford product
# ---------------------------------------------------------------------------


def mc_product(a: Element, b: Element, *, max_filt=None) -> Element:
    """Associative product on W: Moyal on Weyl slots, Clifford word
    rewriting on e-slots, wedge on form slots, jets multiplied in the
    J-quotient.

    ``max_filt`` drops every output term of filtration degree above the
    bound and records it in the result's ``filt_valid``; callers that know
    a working degree cutoff use it to skip unreachable pairs early.
    """
    a._check_compat(b)
    lay = a._lay
    J = a.J
    floor = _HBAR_FLOOR[0]
    da = a._decode()
    db = b._decode()
    out: dict[int, object] = {}
    truncated = False
    cliff_pair = lay.cliff_pair
    wedge_sign = lay.wedge_sign
    moyal_entries = lay.moyal_entries
    form_shift = lay.form_shift
    cliff_shift = lay.cliff_shift
    hbar_shift = lay.hbar_shift
    for ha, wa, wdega, Sa, Ta, ba, bdega, ia, fa, pSa, pTa, ca in da:
        for hb, wb, wdegb, Sb, Tb, bb, bdegb, ib, fb, pSb, pTb, cb in db:
            if Ta & Tb:
                continue
            if bdega + bdegb > J:
                truncated = True
                continue
            if max_filt is not None and fa + fb > max_filt:
                continue
            if wdega + wdegb >= _WCAP:
                raise OverflowError(
                    f"Weyl degree {wdega + wdegb} exceeds packed field capacity")
            sgn, annih, Sm = cliff_pair(Sa, Sb)
            if pTa & pSb & 1:
                sgn = -sgn
            if Ta and Tb and wedge_sign(Ta, Tb) < 0:
                sgn = -sgn
            cc = ca * cb
            if sgn < 0:
                cc = -cc
            hb0 = ha + hb + annih
            ip0 = ia + ib
            stat = (Ta | Tb) << form_shift | (Sm << cliff_shift)
            babs = ba + bb
            for wres, k, coef in moyal_entries(wa, wb):
                h = hb0 + k
                if h < floor:
                    raise HbarFloorError(
                        f"hbar exponent {h} fell below the configured floor {floor}")
                v = cc * coef
                ip = ip0 + k
                if ip & 2:
                    v = -v
                key = (ip & 1) | stat | ((h + _HOFF) << hbar_shift) | wres | babs
                cur = out.get(key)
                cur = v if cur is None else cur + v
                if cur:
                    out[key] = cur
                else:
                    del out[key]
    fa_v = _prod_valid(a, b, max_filt)
    base_v = _vmin(a.base_valid, b.base_valid, INF if not truncated else J)
    return Element._make(a.n, a.J, out, filt_valid=fa_v, base_valid=base_v)


def _prod_valid(a: Element, b: Element, max_filt):
    # errors in a (degree > filt_valid) meet stored terms of b from its
    # minimum degree up, and the two error tails meet each other
    fv = _vmin(a.filt_valid + b.min_filtration_degree(),
               b.filt_valid + a.min_filtration_degree(),
               a.filt_valid + b.filt_valid + 1)
    if max_filt is not None:
        fv = _vmin(fv, max_filt)
    return fv


def supercommutator(a: Element, b: Element) -> Element:
    """[a, b] = a*b - (-1)^(|a||b|) b*a; mixed parities are split and summed."""
    a._check_compat(b)
    ae, ao = a.parity_split()
    be, bo = b.parity_split()
    out = Element.zero(a.n, a.J)
    for ap, pa in ((ae, 0), (ao, 1)):
        if not ap:
            continue
        for bp, pb in ((be, 0), (bo, 1)):
            if not bp:
                continue
            term = mc_product(ap, bp)
            swap = mc_product(bp, ap)
            if pa & pb:
                out = out + term + swap
            else:
                out = out + term - swap
    return out


# ---------------------------------------------------------------------------
# Clifford symbol and quantization maps
# ---------------------------------------------------------------------------


def clifford_symbol(a: Element) -> Element:
    """Rescaled symbol map: e-words to x-wedge words, e_(i1..ik) to
    hbar^k dx^(i1)^...^dx^(ik).

    Requires a trivial Weyl part.  Existing wedge factors are kept: the
    converted word lands on the left and collisions kill the term.
    """
    if not a.is_weyl_free():
        raise ValueError("clifford_symbol requires an element with trivial Weyl part")
    lay = a._lay
    out: dict[int, object] = {}
    for rec in a._decode():
        h, wabs, _, S, T, babs, _, ibit, _, popS, _, coeff = rec
        Tc = 0
        m = S
        while m:
            i = (m & -m).bit_length() - 1
            m &= m - 1
            Tc |= 1 << (2 * i)
        if Tc & T:
            continue
        sgn = lay.wedge_sign(Tc, T) if (Tc and T) else 1
        h2 = h + popS
        key = (ibit | ((Tc | T) << lay.form_shift) | ((h2 + _HOFF) << lay.hbar_shift)
               | wabs | babs)
        _acc(out, key, coeff if sgn > 0 else -coeff)
    return Element._make(a.n, a.J, out, filt_valid=a.filt_valid, base_valid=a.base_valid)


def clifford_quantization(a: Element) -> Element:
    """Inverse of :func:`clifford_symbol` on x-wedge words:
    dx^(i1)^...^dx^(ik) to hbar^(-k) e_(i1..ik).

    Requires trivial Weyl and Clifford parts and no dxi wedge slots.
    """
    if not a.is_weyl_free() or not a.is_cliff_free():
        raise ValueError("clifford_quantization requires a pure form/scalar element")
    lay = a._lay
    floor = _HBAR_FLOOR[0]
    out: dict[int, object] = {}
    for rec in a._decode():
        h, wabs, _, S, T, babs, _, ibit, _, _, _, coeff = rec
        Sc = 0
        m = T
        while m:
            v = (m & -m).bit_length() - 1
            m &= m - 1
            if v & 1:
                raise ValueError(
                    f"clifford_quantization: wedge slot dxi{v // 2 + 1} has no Clifford counterpart")
            Sc |= 1 << (v // 2)
        k = Sc.bit_count()
        h2 = h - k
        if h2 < floor:
            raise HbarFloorError(
                f"hbar exponent {h2} fell below the configured floor {floor}")
        key = ibit | (Sc << lay.cliff_shift) | ((h2 + _HOFF) << lay.hbar_shift) | wabs | babs
        _acc(out, key, coeff)
    return Element._make(a.n, a.J, out, filt_valid=a.filt_valid, base_valid=a.base_valid)


# ---------------------------------------------------------------------------
# quadratic embeddings of sp(2n) and so(n)
# ---------------------------------------------------------------------------


def _as_gr_matrix(M, rows: int, cols: int, what: str) -> list[list[GaussianRational]]:
    if len(M) != rows or any(len(r) != cols for r in M):
        raise ValueError(f"{what} must be {rows}x{cols}")
    out = []
    for r in M:
        row = []
        for v in r:
            if isinstance(v, float):
                raise TypeError("floats are not accepted; use exact rationals")
            row.append(v if isinstance(v, GaussianRational) else GaussianRational(v))
        out.append(row)
    return out


def omega_matrix(n: int) -> list[list[int]]:
    """Canonical symplectic form on the interleaved slots:
    omega(2a, 2a+1) = +1."""
    nv = 2 * n
    om = [[0] * nv for _ in range(nv)]
    for a in range(n):
        om[2 * a][2 * a + 1] = 1
        om[2 * a + 1][2 * a] = -1
    return om


def sp_matrix_to_weyl(S, n: int, J: int) -> Element:
    """Quadratic Weyl realization of sp(2n): S maps to
    (1/(2*hbar)) * sigma_uv y^u y^v with sigma = omega S.

    Checks sigma is symmetric (that is the sp condition) and raises
    ValueError naming the offending entry otherwise.  Under this Moyal
    convention [result, y] = i * (S y): the commutator action carries a
    fixed factor i, and [a, b] = i * embed([S_a, S_b]) accordingly.
    """
    nv = 2 * n
    S = _as_gr_matrix(S, nv, nv, "sp matrix")
    om = omega_matrix(n)
    sigma = [[GR_ZERO] * nv for _ in range(nv)]
    for i in range(nv):
        for j in range(nv):
            acc = GR_ZERO
            for l in range(nv):
                if om[i][l]:
                    acc = acc + (S[l][j] if om[i][l] > 0 else -S[l][j])
            sigma[i][j] = acc
    for i in range(nv):
        for j in range(i + 1, nv):
            if sigma[i][j] != sigma[j][i]:
                raise ValueError(
                    f"matrix is not in sp(2n): omega*S not symmetric at ({i}, {j})")
    half = GaussianRational(rational(1, 2))
    terms = []
    one = BaseJet.one(n, J)
    for i in range(nv):
        for j in range(i, nv):
            c = sigma[i][j] * half if i == j else sigma[i][j]
            if not c:
                continue
            w = [0] * nv
            w[i] += 1
            w[j] += 1
            terms.append((one * c, Monomial(-1, tuple(w))))
    return Element(n, J, terms)


def so_matrix_to_spin(A, n: int, J: int) -> Element:
    """Quadratic Clifford realization of so(n): antisymmetric A maps to
    (1/(2*hbar)) * sum_(i<j) <A e_i, e_j> e_i e_j.

    Exact Lie algebra embedding: [result, e_k] = A e_k with no extra
    factor, and brackets of two images realize [A, B] on the nose.
    """
    A = _as_gr_matrix(A, n, n, "so matrix")
    for i in range(n):
        for j in range(n):
            if A[i][j] != -A[j][i]:
                raise ValueError(f"matrix is not antisymmetric at ({i}, {j})")
    half = GaussianRational(rational(1, 2))
    one = BaseJet.one(n, J)
    terms = []
    for i in range(n):
        for j in range(i + 1, n):
            c = A[j][i] * half  # <A e_i, e_j> = A[j][i]
            if not c:
                continue
            terms.append((one * c, Monomial(-1, (0,) * (2 * n), (i, j))))
    return Element(n, J, terms)


def filtration_degree(x) -> float:
    """Filtration degree of an Element (min over terms) or a Monomial."""
    if isinstance(x, Monomial):
        return x.filtration_degree
    return x.filtration_degree()


def parity(x) -> str:
    if isinstance(x, Monomial):
        return "odd" if x.parity else "even"
    return x.parity()
