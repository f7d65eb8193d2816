"""Abelian connection recursion, flat sections and star products.

Operators on :class:`~fedosov.algebra.Element`, for a fixed chart geometry:

* ``delta``      Koszul differential  delta = sum_V dy^V wedge d/dy-hat^V,
* ``delta_inv``  its contracting homotopy  sum_V y-hat^V iota_V,
  normalized so that  delta delta_inv + delta_inv delta = (p + r) id
  on terms with Weyl degree p and form degree r,
* ``solve_delta``  the normalized right inverse: given a delta-closed b
  with no central (p + r = 0) part, the unique a with delta a = b and
  delta_inv a = 0,
* ``exterior_d``   base exterior derivative on jet coefficients,
* ``nabla_w`` / ``nabla_c``  the lifted symplectic and spin covariant
  derivatives d + ad(G) for the quadratic connection elements

      G_w = (i/(2 hbar)) GammaTildeLow_JKI y^J y^K dy^I
      G_c = (1/(4 hbar)) (Gamma^k_ij - Gamma^j_ik) e_j e_k dx^i ,

* ``abelian_connection``  the degree-by-degree recursion producing the
  correction r with  D = -delta + d + ad(G_w + G_c + r)  satisfying
  D^2 = Omega through the requested filtration order,
* ``flat_extension``  the unique D-flat prolongation of an x-form symbol,
* ``star``  the induced product  p * q = symbol(ext(p) o ext(q)).

Sign conventions: wedge factors are created on the left of the word
e_S dy^T, so every dy^V insertion carries (-1)^|S| plus the position sign
inside dy^T.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable

from .algebra import (
    INF,
    _HOFF,
    _WBITS,
    _BBITS,
    Element,
    Monomial,
    clifford_quantization,
    clifford_symbol,
    mc_product,
)
from .geometry import ChartGeometry
from .jets import BaseJet
from .scalars import GaussianRational, rational


class EngineConsistencyError(RuntimeError):
    """An internal identity the recursion relies on failed; names the
    identity and the filtration degree."""


class NotClosedError(ValueError):
    """solve_delta input is not delta-closed."""


class CentralObstructionError(ValueError):
    """solve_delta input has a central (p + r = 0) component."""

    def __init__(self, msg: str, central: Element):
        super().__init__(msg)
        self.central = central


class OrderError(ValueError):
    """A computation was requested beyond the order the inputs support."""


# ---------------------------------------------------------------------------
# Koszul operators and the base exterior derivative
# ---------------------------------------------------------------------------


def _form_insert_sign(V: int, T: int, popS: int) -> int:
    """Sign of dy^V wedge (e_S dy^T) relative to the canonical word."""
    below = T & ((1 << V) - 1)
    swaps = popS + below.bit_count()
    return -1 if swaps & 1 else 1


def delta(a: Element) -> Element:
    """Koszul differential: trades one y-hat for the matching dy slot."""
    lay = a._lay
    nv = lay.nv
    out: dict[int, object] = {}
    for h, wabs, wdeg, S, T, babs, _, ibit, _, popS, _, coeff in a._decode():
        if wdeg == 0:
            continue
        stat = ibit | (S << lay.cliff_shift) | ((h + _HOFF) << lay.hbar_shift) | babs
        for V in range(nv):
            shift = lay.weyl_shift + _WBITS * V
            e = (wabs >> shift) & ((1 << _WBITS) - 1)
            if e == 0:
                continue
            bit = 1 << V
            if T & bit:
                continue
            sgn = _form_insert_sign(V, T, popS)
            key = stat | ((T | bit) << lay.form_shift) | (wabs - (1 << shift))
            val = coeff * e
            _acc(out, key, val if sgn > 0 else -val)
    return Element._make(a.n, a.J, out, filt_valid=a.filt_valid, base_valid=a.base_valid)


def delta_inv(a: Element) -> Element:
    """Contracting homotopy: trades one dy slot for the matching y-hat."""
    lay = a._lay
    out: dict[int, object] = {}
    for h, wabs, wdeg, S, T, babs, _, ibit, _, popS, _, coeff in a._decode():
        if T == 0:
            continue
        stat = ibit | (S << lay.cliff_shift) | ((h + _HOFF) << lay.hbar_shift) | babs
        rem = T
        while rem:
            bit = rem & -rem
            rem &= rem - 1
            V = bit.bit_length() - 1
            sgn = _form_insert_sign(V, T & (bit - 1), popS)
            shift = lay.weyl_shift + _WBITS * V
            key = stat | ((T ^ bit) << lay.form_shift) | (wabs + (1 << shift))
            _acc(out, key, coeff if sgn > 0 else -coeff)
    return Element._make(a.n, a.J, out, filt_valid=a.filt_valid, base_valid=a.base_valid)


def solve_delta(b: Element, *, check: bool = True) -> Element:
    """Solve delta a = b with the gauge delta_inv a = 0.

    Splits b into bihomogeneous pieces of Weyl degree p and form degree r
    and applies delta_inv / (p + r).  Raises NotClosedError when b is not
    delta-closed and CentralObstructionError when a p + r = 0 component is
    present (that piece is not in the image of delta; it is attached to
    the exception rather than dropped).
    """
    lay = b._lay
    if check:
        # jets are only trusted through base degree base_valid, so the
        # closedness requirement is asserted on that window
        res = delta(b).base_truncate(b.base_valid)
        if res:
            raise NotClosedError(
                f"solve_delta input is not delta-closed (residual has "
                f"{len(res._t)} terms, lowest filtration degree {res.filtration_degree()})")
    central: dict[int, object] = {}
    buckets: dict[int, dict[int, object]] = {}
    for rec in b._decode():
        wdeg, T = rec[2], rec[4]
        p_plus_r = wdeg + T.bit_count()
        key = b._rebuild_key(rec)
        if p_plus_r == 0:
            central[key] = rec[11]
        else:
            buckets.setdefault(p_plus_r, {})[key] = rec[11]
    if central:
        ce = Element._make(b.n, b.J, central).base_truncate(b.base_valid)
        if ce:
            raise CentralObstructionError(
                f"solve_delta input has a central component ({len(ce._t)} terms); "
                "it cannot be produced by delta", ce)
    out = Element.zero(b.n, b.J)
    for p_plus_r, terms in buckets.items():
        piece = Element._make(b.n, b.J, terms,
                              filt_valid=b.filt_valid, base_valid=b.base_valid)
        inv = rational(1, p_plus_r)
        out = out + delta_inv(piece) * GaussianRational(inv)
    return out.with_validity(filt_valid=b.filt_valid, base_valid=b.base_valid)


def exterior_d(a: Element) -> Element:
    """Base exterior derivative d = sum_V dy^V wedge d/d(base_V)."""
    lay = a._lay
    nv = lay.nv
    out: dict[int, object] = {}
    for h, wabs, _, S, T, babs, bdeg, ibit, _, popS, _, coeff in a._decode():
        if bdeg == 0:
            continue
        stat = ibit | (S << lay.cliff_shift) | ((h + _HOFF) << lay.hbar_shift) | wabs
        for V in range(nv):
            shift = lay.base_shift + _BBITS * V
            e = (babs >> shift) & ((1 << _BBITS) - 1)
            if e == 0:
                continue
            bit = 1 << V
            if T & bit:
                continue
            sgn = _form_insert_sign(V, T, popS)
            key = stat | ((T | bit) << lay.form_shift) | (babs - (1 << shift))
            val = coeff * e
            _acc(out, key, val if sgn > 0 else -val)
    bv = a.base_valid if a.base_valid == INF else a.base_valid - 1
    return Element._make(a.n, a.J, out, filt_valid=a.filt_valid, base_valid=bv)


def _acc(t: dict, key: int, val) -> None:
    cur = t.get(key)
    cur = val if cur is None else cur + val
    if cur:
        t[key] = cur
    else:
        del t[key]


# ---------------------------------------------------------------------------
# connection elements per chart
# ---------------------------------------------------------------------------


class ChartOperators:
    """Covariant operators of one chart geometry.

    Builds the quadratic connection elements once and exposes the
    covariant derivatives and their curvature elements.
    """

    def __init__(self, geom: ChartGeometry):
        self.geometry = geom
        self.n = geom.n
        self.J = geom.J
        self.g_w = self._build_g_w()
        self.g_c = self._build_g_c()
        self._curv_w: Element | None = None
        self._curv_c: Element | None = None

    def _build_g_w(self) -> Element:
        geom = self.geometry
        n, J = self.n, self.J
        nv = 2 * n
        low = geom.gamma_tilde_lowered()
        half_i = GaussianRational(0, rational(1, 2))
        full_i = GaussianRational(0, 1)
        terms = []
        for I in range(nv):
            for Jx in range(nv):
                for K in range(Jx, nv):
                    jet = low[Jx][K][I]
                    if not jet:
                        continue
                    w = [0] * nv
                    w[Jx] += 1
                    w[K] += 1
                    c = half_i if Jx == K else full_i
                    terms.append((jet * c, Monomial(-1, tuple(w), (), (I,))))
        el = Element(n, J, terms)
        return el.with_validity(base_valid=geom.base_valid)

    def _build_g_c(self) -> Element:
        geom = self.geometry
        n, J = self.n, self.J
        quarter = GaussianRational(rational(1, 4))
        terms = []
        for i in range(n):
            for j in range(n):
                for k in range(j + 1, n):
                    jet = geom.Gamma[k][i][j] - geom.Gamma[j][i][k]
                    if not jet:
                        continue
                    terms.append((jet * quarter,
                                  Monomial(-1, (0,) * (2 * n), (j, k), (2 * i,))))
        el = Element(n, J, terms)
        return el.with_validity(base_valid=geom.base_valid)

    # -- covariant derivatives -----------------------------------------

    def ad(self, g: Element, a: Element, max_filt=None) -> Element:
        """Supercommutator with an odd connection element."""
        if not g:
            return Element.zero(self.n, self.J)
        ae, ao = a.parity_split()
        out = Element.zero(self.n, self.J)
        if ae:
            out = out + mc_product(g, ae, max_filt=max_filt) \
                      - mc_product(ae, g, max_filt=max_filt)
        if ao:
            out = out + mc_product(g, ao, max_filt=max_filt) \
                      + mc_product(ao, g, max_filt=max_filt)
        return out

    def nabla_w(self, a: Element, max_filt=None) -> Element:
        return exterior_d(a) + self.ad(self.g_w, a, max_filt)

    def nabla_c(self, a: Element, max_filt=None) -> Element:
        return exterior_d(a) + self.ad(self.g_c, a, max_filt)

    def nabla_total(self, a: Element, max_filt=None) -> Element:
        """d + ad(G_w) + ad(G_c): the exterior derivative is counted once."""
        return (exterior_d(a) + self.ad(self.g_w, a, max_filt)
                + self.ad(self.g_c, a, max_filt))

    # -- curvature elements ----------------------------------------------

    @property
    def curv_w(self) -> Element:
        if self._curv_w is None:
            self._curv_w = exterior_d(self.g_w) + mc_product(self.g_w, self.g_w)
        return self._curv_w

    @property
    def curv_c(self) -> Element:
        if self._curv_c is None:
            self._curv_c = exterior_d(self.g_c) + mc_product(self.g_c, self.g_c)
        return self._curv_c


def nabla_w(a: Element, geom: ChartGeometry) -> Element:
    return ChartOperators(geom).nabla_w(a)


def nabla_c(a: Element, geom: ChartGeometry) -> Element:
    return ChartOperators(geom).nabla_c(a)


# ---------------------------------------------------------------------------
# hbar-graded series of base forms
# ---------------------------------------------------------------------------


def canonical_omega_element(n: int, J: int) -> Element:
    """The canonical symplectic form sum_a dx^(a+1) wedge dxi^(a+1)."""
    terms = [(BaseJet.one(n, J), Monomial(0, (0,) * (2 * n), (), (2 * a, 2 * a + 1)))
             for a in range(n)]
    return Element(n, J, terms)


class FormSeries:
    """Laurent series in hbar of base differential forms with jet coefficients.

    Wraps a Weyl-free, Clifford-free :class:`Element` together with
    ``validity_order``: the hbar order through which every stored
    coefficient agrees with the untruncated computation (+inf when the
    computation terminated without truncation).  Equality is structural
    and ignores validity.
    """

    __slots__ = ("element", "validity_order", "base_windows")

    def __init__(self, element: Element, validity_order=None, base_windows=None):
        if not element.is_weyl_free() or not element.is_cliff_free():
            raise ValueError("FormSeries needs a Weyl-free, Clifford-free element")
        object.__setattr__(self, "element", element)
        if validity_order is None:
            f = element.filt_valid
            validity_order = INF if f == INF else int(f) // 2
        object.__setattr__(self, "validity_order", validity_order)
        object.__setattr__(self, "base_windows",
                           dict(base_windows) if base_windows else None)

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("FormSeries is immutable")

    @property
    def n(self) -> int:
        return self.element.n

    @property
    def J(self) -> int:
        return self.element.J

    @classmethod
    def zero(cls, n: int, J: int) -> "FormSeries":
        return cls(Element.zero(n, J))

    @classmethod
    def canonical_omega(cls, n: int, J: int) -> "FormSeries":
        return cls(canonical_omega_element(n, J))

    @classmethod
    def from_terms(cls, n: int, J: int, triples: Iterable[tuple[int, tuple[int, ...], BaseJet]],
                   validity_order=None) -> "FormSeries":
        terms = []
        for h, slots, jet in triples:
            terms.append((jet, Monomial(h, (0,) * (2 * n), (), tuple(sorted(slots)))))
        return cls(Element(n, J, terms), validity_order)

    @property
    def terms(self) -> list[tuple[int, tuple[int, ...], BaseJet]]:
        """Sorted (hbar_exp, wedge slots, jet) triples."""
        out = [(m.hbar, m.form, jet) for jet, m in self.element.terms]
        out.sort(key=lambda t: (t[0], len(t[1]), t[1]))
        return out

    def is_x_form(self) -> bool:
        """True when only dx slots (even, 0-based) appear."""
        return all(all(v % 2 == 0 for v in slots) for _, slots, _ in self.terms)

    def base_window(self, k: int) -> float:
        """Base degree through which the hbar^k coefficient jets are
        supported; beyond it they are truncation artifacts."""
        if self.base_windows is None:
            return self.element.base_valid
        return self.base_windows.get(k, self.element.base_valid)

    def through(self, vmax) -> "FormSeries":
        """Restriction to hbar orders <= vmax (for validated comparisons)."""
        lay = self.element._lay
        t = {}
        for rec in self.element._decode():
            if rec[0] <= vmax:
                t[self.element._rebuild_key(rec)] = rec[11]
        el = Element._make(self.n, self.J, t,
                           filt_valid=self.element.filt_valid,
                           base_valid=self.element.base_valid)
        return FormSeries(el, min(self.validity_order, vmax), self.base_windows)

    def hbar_coefficient(self, k: int) -> list[tuple[tuple[int, ...], BaseJet]]:
        return [(slots, jet) for h, slots, jet in self.terms if h == k]

    def _merged_windows(self, other: "FormSeries"):
        if self.base_windows is None and other.base_windows is None:
            return None
        keys = set(self.base_windows or ()) | set(other.base_windows or ())
        return {k: min(self.base_window(k), other.base_window(k)) for k in keys}

    def __add__(self, other: "FormSeries") -> "FormSeries":
        return FormSeries(self.element + other.element,
                          min(self.validity_order, other.validity_order),
                          self._merged_windows(other))

    def __sub__(self, other: "FormSeries") -> "FormSeries":
        return FormSeries(self.element - other.element,
                          min(self.validity_order, other.validity_order),
                          self._merged_windows(other))

    def __neg__(self) -> "FormSeries":
        return FormSeries(-self.element, self.validity_order, self.base_windows)

    def __mul__(self, c) -> "FormSeries":
        return FormSeries(self.element * c, self.validity_order, self.base_windows)

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return bool(self.element)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FormSeries):
            return NotImplemented
        return self.element == other.element

    def __repr__(self) -> str:
        return (f"FormSeries(n={self.n}, J={self.J}, {len(self.element._t)} packed terms, "
                f"validity_order={self.validity_order})")


# ---------------------------------------------------------------------------
# the abelian connection
# ---------------------------------------------------------------------------


@dataclass
class FedosovConnection:
    """Result of the abelian connection recursion.

    ``r_parts[k]`` is the filtration-degree-k correction term; they exist
    for 1 <= k <= order + 1 so the curvature identity holds through
    filtration degree ``order``.  ``r_minus1`` is the degree -1 element
    (1/hbar) omega_uv y-hat^u dy^v whose adjoint action is i*delta; it is
    stored for reference and handled as the explicit operator delta.
    """

    geometry: ChartGeometry
    ops: ChartOperators
    order: int
    omega: FormSeries
    r_parts: dict[int, Element]
    r_minus1: Element
    gauge_ok: bool
    _r_plus: Element | None = field(default=None, repr=False)

    @property
    def r_plus(self) -> Element:
        if self._r_plus is None:
            acc = Element.zero(self.geometry.n, self.geometry.J)
            for k in sorted(self.r_parts):
                acc = acc + self.r_parts[k]
            self._r_plus = acc
        return self._r_plus

    def r_term(self, k: int) -> Element:
        return self.r_parts.get(k, Element.zero(self.geometry.n, self.geometry.J))

    def base_window(self, d: int) -> float:
        """Base degree through which the curvature identity is supported
        at filtration degree d; jets beyond it are truncation artifacts."""
        part = self.r_parts.get(d + 1)
        if part is not None:
            return part.base_valid
        vals = [p.base_valid for k, p in self.r_parts.items() if k <= d + 1]
        return min(vals, default=INF)

    @property
    def is_flat(self) -> bool:
        return not self.r_plus and not self.ops.curv_w and not self.ops.curv_c


def _r_minus1_element(n: int, J: int) -> Element:
    # (1/hbar) omega_uv y-hat^u dy^v on the interleaved slots
    terms = []
    one = BaseJet.one(n, J)
    for a in range(n):
        wx = [0] * (2 * n)
        wx[2 * a] = 1
        terms.append((one, Monomial(-1, tuple(wx), (), (2 * a + 1,))))
        ws = [0] * (2 * n)
        ws[2 * a + 1] = 1
        terms.append((-one, Monomial(-1, tuple(ws), (), (2 * a,))))
    return Element(n, J, terms)


def _check_omega_input(omega: FormSeries, n: int, J: int) -> Element:
    """Validate an Omega series and return its hbar >= 1 part as an element."""
    el = omega.element
    for jet, m in el.terms:
        if len(m.form) != 2:
            raise ValueError(
                f"Omega must be a series of 2-forms; found wedge degree {len(m.form)}")
        if m.hbar < 0:
            raise ValueError("Omega must not contain negative hbar powers")
    om0 = Element._make(n, J, {k: v for k, v in el._t.items()
                               if ((k & el._lay.hbar_mask) >> el._lay.hbar_shift) == _HOFF})
    if om0 != canonical_omega_element(n, J):
        raise ValueError("the hbar^0 part of Omega must equal the canonical symplectic form")
    rest = el - om0
    closed = exterior_d(rest)
    if closed:
        raise ValueError("Omega must be d-closed in every hbar order")
    return rest


def abelian_connection(geom: ChartGeometry, omega: FormSeries | None = None,
                       order: int = 6) -> FedosovConnection:
    """Run the degree-by-degree recursion for the correction r.

    Solves, for each filtration degree d from 0 through ``order``,

        delta(r_(d+1)) = [ R_w + R_c + nabla(r) + r o r - Omega_(>=1) ]_d

    with the normalized homotopy, so the curvature identity
    D^2 = Omega holds through filtration degree ``order``.  Every step
    checks delta-closedness of the residual, the absence of a central
    obstruction, and the gauge delta_inv r_(d+1) = 0; a failure raises
    EngineConsistencyError naming the degree.
    """
    n, J = geom.n, geom.J
    if order < 0:
        raise OrderError(f"order must be >= 0, got {order}")
    ops = ChartOperators(geom)
    if omega is None:
        omega = FormSeries.canonical_omega(n, J)
    if omega.n != n or omega.J != J:
        raise ValueError("Omega series lives on a different chart")
    omega_hi = _check_omega_input(omega, n, J)

    N = order
    rho = ops.curv_w + ops.curv_c - omega_hi
    r_parts: dict[int, Element] = {}
    r_plus = Element.zero(n, J)
    gauge_ok = True
    for d in range(0, N + 1):
        low = rho.filt_truncate(d - 1)
        if low:
            raise EngineConsistencyError(
                f"curvature residual has unexpected terms below degree {d} "
                f"(lowest {low.filtration_degree()})")
        rho_d = rho.filt_component(d)
        if not rho_d:
            continue
        try:
            r_new = solve_delta(rho_d)
        except NotClosedError as e:
            raise EngineConsistencyError(
                f"curvature residual at degree {d} is not delta-closed: {e}") from e
        except CentralObstructionError as e:
            raise EngineConsistencyError(
                f"curvature residual at degree {d} has a central obstruction") from e
        if delta_inv(r_new):
            gauge_ok = False
        r_parts[d + 1] = r_new
        # delta(r_new) cancels rho_d on the valid base window; beyond it
        # the jets are truncation garbage, so the whole degree-d piece is
        # removed outright and the leftover is not dragged along
        rho = rho - rho_d
        if d < N:
            rho = (rho + ops.nabla_total(r_new, max_filt=N)
                   + mc_product(r_new, r_plus, max_filt=N)
                   + mc_product(r_plus, r_new, max_filt=N)
                   + mc_product(r_new, r_new, max_filt=N))
        r_plus = r_plus + r_new
    tail = rho.filt_truncate(N)
    if tail:
        raise EngineConsistencyError(
            f"curvature residual not cleared through degree {N} "
            f"(lowest remaining {tail.filtration_degree()})")
    return FedosovConnection(geom, ops, N, omega, r_parts,
                             _r_minus1_element(n, J), gauge_ok)


def curvature(conn: FedosovConnection) -> Element:
    """Recompute D^2 as an element from scratch: omega_0 + R_w + R_c
    + nabla(r) - delta(r) + r o r.  Should equal Omega through the
    connection's order; computed independently of the recursion's
    incremental bookkeeping so tests can cross-check the two paths."""
    ops = conn.ops
    r = conn.r_plus
    total = (canonical_omega_element(conn.geometry.n, conn.geometry.J)
             + ops.curv_w + ops.curv_c
             + ops.nabla_total(r) - delta(r) + mc_product(r, r))
    return total.with_validity(filt_valid=conn.order)


# ---------------------------------------------------------------------------
# flat sections and the star product
# ---------------------------------------------------------------------------


def flat_extension(a: FormSeries, conn: FedosovConnection, order: int | None = None,
                   _shuffle_seed: int | None = None, return_parts: bool = False):
    """The D-flat section with symbol ``a``, through filtration order N.

    Seeds with the Clifford quantization of ``a`` and solves
    delta(A_(g+1)) = [ (d + ad(G_w + G_c))(A_g) + sum_k [r_k, A_(g-k)] ]
    degree by degree; the delta_inv gauge picks the unique flat
    prolongation.  ``_shuffle_seed`` permutes the accumulation order of
    the right-hand side (the canonical result must not depend on it).
    """
    n, J = conn.geometry.n, conn.geometry.J
    if a.n != n or a.J != J:
        raise ValueError("symbol lives on a different chart")
    N = conn.order if order is None else order
    seed = clifford_quantization(a.element)
    if a.validity_order != INF:
        seed = seed.with_validity(filt_valid=2 * int(a.validity_order) + 1 - n)
    if not seed:
        z = Element.zero(n, J).with_validity(base_valid=seed.base_valid)
        return (z, {}) if return_parts else z
    parts: dict[int, Element] = {}
    for dgr in sorted({int(t[8]) for t in seed._decode()}):
        parts[dgr] = seed.filt_component(dgr)
    g_min = min(parts)
    k_avail = conn.order + 1  # recursion produced r through this degree
    k_need = N - 1 - g_min
    if k_need > k_avail and not conn.is_flat:
        raise OrderError(
            f"extension to order {N} from seed degree {g_min} needs r through "
            f"degree {k_need}, connection has {k_avail}")
    rng = random.Random(_shuffle_seed) if _shuffle_seed is not None else None
    ops = conn.ops
    exact = False
    g = g_min
    while g < N:
        A_g = parts.get(g)
        contribs: list[Element] = []
        if A_g:
            contribs.append(ops.nabla_total(A_g, max_filt=N))
        for k in sorted(conn.r_parts):
            A_low = parts.get(g - k)
            if A_low:
                contribs.append(ops.ad(conn.r_parts[k], A_low, max_filt=N))
        if rng is not None:
            rng.shuffle(contribs)
        phi = Element.zero(n, J)
        for c in contribs:
            phi = phi + c
        if phi:
            try:
                sol = solve_delta(phi)
            except (NotClosedError, CentralObstructionError) as e:
                raise EngineConsistencyError(
                    f"flat extension right-hand side at degree {g} is defective: {e}") from e
            prev = parts.get(g + 1)
            parts[g + 1] = sol if prev is None else prev + sol
        elif conn.is_flat and not any(d > g for d in parts):
            exact = True
            break
        g += 1
    acc = Element.zero(n, J)
    for dgr in sorted(parts):
        acc = acc + parts[dgr]
    # acc.filt_valid already carries the seed's validity; a truncated run
    # additionally caps it at N so downstream products stay honest.
    fv = acc.filt_valid if exact else min(acc.filt_valid, N)
    acc = acc.with_validity(filt_valid=fv)
    if return_parts:
        parts = {g: el.with_validity(filt_valid=min(el.filt_valid, fv))
                 for g, el in parts.items()}
        return acc, parts
    return acc


def full_symbol(A: Element) -> FormSeries:
    """Set y-hat to zero and apply the Clifford symbol map; the inverse of
    flat extension on flat sections."""
    if not A.is_form_free():
        raise ValueError("full_symbol expects a section (no wedge factors)")
    t = {}
    for rec in A._decode():
        if rec[2] == 0:
            t[A._rebuild_key(rec)] = rec[11]
    body = Element._make(A.n, A.J, t, filt_valid=A.filt_valid, base_valid=A.base_valid)
    return FormSeries(clifford_symbol(body))


def _extension_sectors(f: FormSeries, conn: FedosovConnection, order):
    """Flat extensions of the hbar sectors of ``f``, one parts dict each.

    Extension is linear in the seed, so extending sector by sector gives
    the same section while letting every sector carry its own jet window
    (an Element stores a single base_valid; the whole-series seed would
    collapse all windows to the worst one).
    """
    n, J = conn.geometry.n, conn.geometry.J
    groups: dict[int, list] = {}
    for h, slots, jet in f.terms:
        groups.setdefault(h, []).append((h, slots, jet))
    out = []
    for h in sorted(groups):
        fh = FormSeries.from_terms(n, J, groups[h])
        el = fh.element
        w = f.base_window(h)
        if w != INF:
            el = el.with_validity(base_valid=w)
        _, parts = flat_extension(FormSeries(el, f.validity_order), conn, order,
                                  return_parts=True)
        out.append(parts)
    return out


def star(p: FormSeries, q: FormSeries, conn: FedosovConnection,
         order: int | None = None) -> FormSeries:
    """Star product of two symbols: extend flatly, multiply, take the symbol.

    The result's ``validity_order`` is derived from the operands'
    validity, the extension order and the filtration / jet cutoffs by the
    min rule; the series may contain terms beyond it, which are reported
    as-is but not guaranteed.  Per-hbar-order base windows are tracked
    from the degree parts of both extensions: a product of parts at
    degrees g and g' only reaches hbar orders k with
    2k - n <= g + g' <= 2k, so each coefficient inherits the worst jet
    validity among the part products that can feed it.
    """
    n = conn.geometry.n
    N = conn.order if order is None else order
    p_sectors = _extension_sectors(p, conn, order)
    q_sectors = _extension_sectors(q, conn, order)
    total = Element.zero(conn.geometry.n, conn.geometry.J)
    kmax = (2 * N + n) // 2 + 1
    windows = {k: INF for k in range(-n, kmax + 1)}
    for p_parts in p_sectors:
        for q_parts in q_sectors:
            for g in sorted(p_parts):
                for g2 in sorted(q_parts):
                    piece = mc_product(p_parts[g], q_parts[g2])
                    total = total + piece
                    v = piece.base_valid
                    if v == INF:
                        continue
                    m = g + g2
                    for k in range(max(-n, (m + 1) // 2), min((m + n) // 2, kmax) + 1):
                        if v < windows[k]:
                            windows[k] = v
    vo = total.filt_valid if total.filt_valid == INF else int(total.filt_valid) // 2
    for k in range(-n, kmax + 1):
        if vo != INF and k > vo:
            break
        if windows[k] < 0:
            vo = k - 1
            break
    sym = full_symbol(total)
    return FormSeries(sym.element, vo, windows)


def validity_order(x):
    """Validity of an Element (filtration scale) or FormSeries (hbar scale)."""
    if isinstance(x, FormSeries):
        return x.validity_order
    if isinstance(x, Element):
        return x.filt_valid
    raise TypeError(f"no validity notion for {type(x).__name__}")
