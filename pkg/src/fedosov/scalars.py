"""Exact scalar arithmetic over the Gaussian rationals Q(i).

Every coefficient in this package is a Gaussian rational a + b*i with a, b
exact rationals.  No floats enter any computation.

The underlying rational type is selected once at import time through the
environment variable ``FEDOSOV_RATIONAL_BACKEND``:

* ``gmpy2``      -- use :class:`gmpy2.mpq` (fast C implementation),
* ``fractions``  -- use :class:`fractions.Fraction` (pure stdlib),
* unset/``auto`` -- prefer gmpy2 when importable, else fall back to fractions.

Both backends are exact; they differ only in speed.  See
``benchmarks/bench_backends.py`` for a comparison.
"""

from __future__ import annotations

import os
import re as _re

_BACKEND_ENV = "FEDOSOV_RATIONAL_BACKEND"


def _load_backend() -> tuple[str, type]:
    choice = os.environ.get(_BACKEND_ENV, "auto").strip().lower()
    if choice not in ("auto", "", "gmpy2", "fractions"):
        raise ValueError(
            f"{_BACKEND_ENV}={choice!r} not understood (use 'gmpy2' or 'fractions')"
        )
    if choice in ("auto", "", "gmpy2"):
        try:
            from gmpy2 import mpq  # type: ignore[import-not-found]

            return "gmpy2", mpq
        except ImportError:
            if choice == "gmpy2":
                raise
    from fractions import Fraction

    return "fractions", Fraction


#: name of the active backend ("gmpy2" or "fractions")
RATIONAL_BACKEND, rational = _load_backend()

QZERO = rational(0)
QONE = rational(1)

_RAT_RE = _re.compile(r"^[+-]?\d+(/\d+)?$")


def parse_rational(text: str):
    """Parse an exact rational written as ``p`` or ``p/q``.

    Raises ValueError on anything else, in particular on floats: decimal
    points and exponents are rejected so no inexact value can sneak in.
    """
    s = text.strip()
    if not _RAT_RE.match(s):
        raise ValueError(f"not an exact rational 'p' or 'p/q': {text!r}")
    if "/" in s:
        num, den = s.split("/")
        if int(den) == 0:
            raise ValueError(f"zero denominator in rational {text!r}")
        return rational(int(num), int(den))
    return rational(int(s))


class GaussianRational:
    """An element a + b*i of Q(i), stored as two exact backend rationals.

    Instances are immutable and hashable.  ``str`` produces the canonical
    text form used throughout the package (``0``, ``3/4``, ``-i``,
    ``1/2*i``, ``2-3/5*i``); :meth:`parse` inverts it.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _as_rational(re))
        object.__setattr__(self, "im", _as_rational(im))

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("GaussianRational is immutable")

    # -- constructors ------------------------------------------------

    @classmethod
    def from_rational(cls, q) -> "GaussianRational":
        return cls(q, 0)

    @classmethod
    def i(cls) -> "GaussianRational":
        return cls(0, 1)

    @classmethod
    def parse(cls, text: str) -> "GaussianRational":
        """Inverse of ``str``: accepts ``a``, ``b*i``, ``i``, ``a+b*i`` forms."""
        s = text.strip().replace(" ", "")
        if not s:
            raise ValueError("empty Gaussian rational")
        # split into one or two signed atoms
        atoms: list[str] = []
        start = 0
        for pos in range(1, len(s)):
            if s[pos] in "+-" and s[pos - 1] not in "+-/*":
                atoms.append(s[start:pos])
                start = pos
        atoms.append(s[start:])
        if len(atoms) > 2:
            raise ValueError(f"not a Gaussian rational: {text!r}")
        re_part = QZERO
        im_part = QZERO
        seen_re = seen_im = False
        for atom in atoms:
            if atom.endswith("i"):
                if seen_im:
                    raise ValueError(f"repeated imaginary part in {text!r}")
                seen_im = True
                body = atom[:-1]
                if body in ("", "+"):
                    im_part = QONE
                elif body == "-":
                    im_part = -QONE
                else:
                    if body.endswith("*"):
                        body = body[:-1]
                    sign = 1
                    if body.startswith(("+", "-")):
                        sign = -1 if body[0] == "-" else 1
                        body = body[1:]
                    im_part = sign * parse_rational(body)
            else:
                if seen_re:
                    raise ValueError(f"repeated real part in {text!r}")
                seen_re = True
                sign = 1
                body = atom
                if body.startswith(("+", "-")):
                    sign = -1 if body[0] == "-" else 1
                    body = body[1:]
                re_part = sign * parse_rational(body)
        return cls(re_part, im_part)

    # -- ring/field structure ----------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        """Multiplicative inverse; raises ZeroDivisionError at 0."""
        n2 = self.re * self.re + self.im * self.im
        if n2 == 0:
            raise ZeroDivisionError("inverse of zero Gaussian rational")
        return GaussianRational(self.re / n2, -self.im / n2)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = GaussianRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    # -- predicates / protocol ---------------------------------------

    def __bool__(self) -> bool:
        return self.re != 0 or self.im != 0

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __str__(self) -> str:
        if not self:
            return "0"
        parts = []
        if self.re != 0:
            parts.append(str(self.re))
        if self.im != 0:
            if self.im == 1:
                imtxt = "i"
            elif self.im == -1:
                imtxt = "-i"
            else:
                imtxt = f"{self.im}*i"
            if parts and not imtxt.startswith("-"):
                parts.append("+" + imtxt)
            else:
                parts.append(imtxt)
        return "".join(parts)

    def __repr__(self) -> str:
        return f"GaussianRational({self})"


def _as_rational(v):
    if isinstance(v, int):
        return rational(v)
    if isinstance(v, str):
        return parse_rational(v)
    if isinstance(v, float):
        raise TypeError("floats are not accepted; use exact rationals")
    return +v  # backend rationals pass through; anything else must coerce


def _coerce(v):
    if isinstance(v, GaussianRational):
        return v
    if isinstance(v, int) or type(v) is type(QONE):
        return GaussianRational(v, 0)
    return NotImplemented


GR_ZERO = GaussianRational(0)
GR_ONE = GaussianRational(1)
GR_I = GaussianRational(0, 1)
