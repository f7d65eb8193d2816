import random

import pytest

from fedosov.algebra import INF, Element, Monomial, mc_product, supercommutator
from fedosov.engine import (
    CentralObstructionError,
    FormSeries,
    NotClosedError,
    OrderError,
    abelian_connection,
    canonical_omega_element,
    curvature,
    delta,
    delta_inv,
    exterior_d,
    flat_extension,
    full_symbol,
    solve_delta,
    star,
    validity_order,
)
from fedosov.geometry import preset_constant_curvature
from fedosov.jets import BaseJet
from fedosov.scalars import GaussianRational
from fedosov.verify import _random_monomial, _random_poly, _random_section


def test_homotopy_identity():
    rng = random.Random(0)
    n, J = 2, 3
    for _ in range(120):
        m = _random_monomial(rng, n, J)
        rec = m._decode()[0]
        p_plus_r = rec[2] + rec[4].bit_count()
        lhs = delta(delta_inv(m)) + delta_inv(delta(m))
        assert lhs == m * GaussianRational(p_plus_r)


def test_delta_nilpotent():
    rng = random.Random(1)
    for _ in range(15):
        a = _random_section(rng, 2, 3)
        assert not delta(delta(a))
        assert not delta_inv(delta_inv(a))


def test_exterior_d_squared_zero():
    rng = random.Random(2)
    for _ in range(15):
        a = _random_section(rng, 2, 3)
        assert not exterior_d(exterior_d(a))


def test_solve_delta_inverts():
    rng = random.Random(3)
    for _ in range(10):
        a = _random_section(rng, 2, 3)
        b = delta(a)
        if not b:
            continue
        sol = solve_delta(b)
        assert delta(sol) == b
        assert not delta_inv(sol)


def test_solve_delta_rejects_defective_input():
    n, J = 2, 3
    not_closed = Element(n, J, [(BaseJet.one(n, J), Monomial(0, (1, 0, 0, 0), (), (1,)))])
    with pytest.raises(NotClosedError):
        solve_delta(not_closed)
    with pytest.raises(CentralObstructionError):
        solve_delta(Element.scalar(n, J, 3))


def test_canonical_omega_is_central():
    rng = random.Random(4)
    om = canonical_omega_element(2, 3)
    assert om
    for _ in range(8):
        a = _random_section(rng, 2, 3)
        assert not supercommutator(om, a)


def test_flat_connection_has_no_corrections(flat_conn):
    assert all(not el for el in flat_conn.r_parts.values())
    assert flat_conn.is_flat
    n, J = flat_conn.geometry.n, flat_conn.geometry.J
    assert flat_conn.omega.element == canonical_omega_element(n, J)


def test_curved_connection_basics(curved_conn):
    assert not curved_conn.is_flat
    assert curved_conn.r_term(1)
    for k, el in curved_conn.r_parts.items():
        assert not delta_inv(el)
        if el:
            assert el.filtration_degree() == k == el.max_filtration_degree()


def test_curvature_identity_on_windows(curved_conn):
    n, J = curved_conn.geometry.n, curved_conn.geometry.J
    omega_hi = curved_conn.omega.element - canonical_omega_element(n, J)
    defect = curvature(curved_conn) - canonical_omega_element(n, J) - omega_hi
    for d in range(curved_conn.order + 1):
        assert not defect.filt_component(d).base_truncate(curved_conn.base_window(d))


def test_windows_shrink_with_degree(curved_conn):
    ws = [curved_conn.base_window(d) for d in range(curved_conn.order + 1)]
    assert all(a >= b for a, b in zip(ws, ws[1:]))


def _jet_content(el, wmax):
    out = {}
    for jet, mono in el.terms:
        for e, c in jet.coeffs.items():
            if sum(e) <= wmax:
                out[(mono, e)] = c
    return out


def test_finer_jets_agree_on_windows(curved_conn):
    # the same recursion at J=8 must reproduce every trusted J=4 coefficient
    c8 = abelian_connection(preset_constant_curvature(2, 8), order=4)
    for k in sorted(curved_conn.r_parts):
        a4 = curved_conn.r_parts[k]
        w = a4.base_valid
        if w < 0:
            continue
        assert _jet_content(a4, w) == _jet_content(c8.r_parts[k], w)


def test_order_six_full_windows_at_fine_jets():
    # at J=8 every window through degree 6 is nonnegative, so the curvature
    # and flatness identities are checked with no vacuous region
    c8 = abelian_connection(preset_constant_curvature(2, 8), order=6)
    n, J = 2, 8
    assert all(c8.base_window(d) >= 0 for d in range(7))
    omega_hi = c8.omega.element - canonical_omega_element(n, J)
    defect = curvature(c8) - canonical_omega_element(n, J) - omega_hi
    for d in range(7):
        assert not defect.filt_component(d).base_truncate(c8.base_window(d))

    rng = random.Random(2)
    a = FormSeries.from_terms(n, J, [(0, (0,), _random_poly(rng, n, J, deg=3))])
    A = flat_extension(a, c8)
    DA = -delta(A) + c8.ops.nabla_total(A) + c8.ops.ad(c8.r_plus, A)
    for d in range(6):
        assert not DA.filt_component(d).base_truncate(c8.base_window(d))
    assert not (full_symbol(A) - a).element


def test_extension_beyond_available_order_raises(curved_conn):
    n, J = curved_conn.geometry.n, curved_conn.geometry.J
    a = FormSeries.from_terms(n, J, [(0, (), BaseJet.var(n, J, 0))])
    with pytest.raises(OrderError):
        flat_extension(a, curved_conn, order=curved_conn.order + 4)


def test_extension_shuffle_invariance(curved_conn):
    n, J = curved_conn.geometry.n, curved_conn.geometry.J
    rng = random.Random(5)
    a = FormSeries.from_terms(n, J, [(0, (0,), _random_poly(rng, n, J))])
    A = flat_extension(a, curved_conn)
    for seed in (1, 2, 3):
        assert flat_extension(a, curved_conn, _shuffle_seed=seed) == A


def test_validity_order_dispatch(curved_conn):
    n, J = curved_conn.geometry.n, curved_conn.geometry.J
    el = Element.scalar(n, J, 1)
    assert validity_order(el) == INF
    s = FormSeries.from_terms(n, J, [(0, (), BaseJet.one(n, J))])
    assert validity_order(s) == INF
    with pytest.raises(TypeError):
        validity_order(42)


def test_truncated_extension_reports_finite_validity(flat_geom):
    # a low-order connection cannot promise the full product: the parts
    # must carry the truncation order so star stays honest
    conn2 = abelian_connection(flat_geom, order=2)
    n, J = flat_geom.n, flat_geom.J
    rng = random.Random(6)
    p = FormSeries.from_terms(n, J, [(0, (), _random_poly(rng, n, J, deg=3))])
    q = FormSeries.from_terms(n, J, [(0, (), _random_poly(rng, n, J, deg=3))])
    s = star(p, q, conn2)
    assert s.validity_order <= conn2.order // 2
