import math
import random

from fedosov.algebra import INF
from fedosov.engine import FormSeries, star
from fedosov.jets import BaseJet, jet_mul, jet_partial
from fedosov.scalars import GR_I, GaussianRational, rational
from fedosov.verify import _random_poly

N, J = 2, 4


def scalar_series(jet):
    return FormSeries.from_terms(N, J, [(0, (), jet)])


def moyal_oracle(p, q):
    """hbar expansion of the symmetric Moyal product of two scalar jets.

    Bidifferential form: sum_k (i/2)^k/k! hbar^k Lambda^k with
    Lambda = sum_a (d_x_a (x) d_xi_a - d_xi_a (x) d_x_a).
    """
    out = {}
    cur = [(p, q, 1)]
    k = 0
    while cur:
        coeff = GaussianRational(0, 1) ** k * GaussianRational(rational(1, math.factorial(k) * 2 ** k))
        acc = BaseJet.zero(N, J)
        for a, b, sgn in cur:
            acc = acc + jet_mul(a, b) * GaussianRational(sgn)
        term = acc * coeff
        if term:
            out[k] = term
        nxt = []
        for a, b, sgn in cur:
            for i in range(N):
                da, db = jet_partial(a, 2 * i), jet_partial(b, 2 * i + 1)
                if da and db:
                    nxt.append((da, db, sgn))
                da, db = jet_partial(a, 2 * i + 1), jet_partial(b, 2 * i)
                if da and db:
                    nxt.append((da, db, -sgn))
        cur = nxt
        k += 1
    return out


def poisson(p, q):
    acc = BaseJet.zero(N, J)
    for i in range(N):
        acc = acc + jet_mul(jet_partial(p, 2 * i), jet_partial(q, 2 * i + 1))
        acc = acc - jet_mul(jet_partial(p, 2 * i + 1), jet_partial(q, 2 * i))
    return acc


def test_flat_star_is_moyal(flat_conn):
    rng = random.Random(0)
    for _ in range(12):
        p = _random_poly(rng, N, J, deg=3)
        q = _random_poly(rng, N, J, deg=3)
        s = star(scalar_series(p), scalar_series(q), flat_conn)
        assert s.validity_order == INF
        got = {h: jet for h, slots, jet in s.terms if slots == ()}
        assert got == moyal_oracle(p, q)
        assert not [t for t in s.terms if t[1] != ()]


def test_flat_one_form_products(flat_conn):
    one = BaseJet.one(N, J)
    dx1 = FormSeries.from_terms(N, J, [(0, (0,), one)])
    dx2 = FormSeries.from_terms(N, J, [(0, (2,), one)])
    wedge = star(dx1, dx2, flat_conn)
    assert wedge.terms == [(0, (0, 2), one)]
    square = star(dx1, dx1, flat_conn)
    assert square.terms == [(-1, (), one * GaussianRational(-1))]
    anti = star(dx2, dx1, flat_conn)
    assert anti.terms == [(0, (0, 2), one * GaussianRational(-1))]


def test_leading_term_is_wedge_product(curved_conn):
    rng = random.Random(1)
    p = _random_poly(rng, N, J, deg=2)
    q = _random_poly(rng, N, J, deg=2)
    fp = FormSeries.from_terms(N, J, [(0, (0,), p)])
    fq = FormSeries.from_terms(N, J, [(0, (2,), q)])
    s = star(fp, fq, curved_conn)
    lead = [(slots, jet) for h, slots, jet in s.terms if h == 0 and len(slots) == 2]
    assert lead == [((0, 2), jet_mul(p, q))]


def test_commutator_leading_order_is_poisson(curved_conn):
    rng = random.Random(2)
    for _ in range(4):
        p = _random_poly(rng, N, J, deg=2)
        q = _random_poly(rng, N, J, deg=2)
        fp, fq = scalar_series(p), scalar_series(q)
        pq = star(fp, fq, curved_conn)
        qp = star(fq, fp, curved_conn)
        comm = pq - qp
        got = dict(comm.hbar_coefficient(1)).get((), BaseJet.zero(N, J))
        want = poisson(p, q) * GR_I
        w = min(pq.base_window(1), qp.base_window(1))
        diff = got - want
        assert not BaseJet(N, J, {e: c for e, c in diff.coeffs.items() if sum(e) <= w})


def test_associativity_with_forms(curved_conn):
    rng = random.Random(3)

    def rnd_form():
        wedge = tuple(sorted(rng.sample([0, 2], rng.randrange(0, 2))))
        return FormSeries.from_terms(N, J, [(0, wedge, _random_poly(rng, N, J, deg=2))])

    for _ in range(2):
        p, q, w = rnd_form(), rnd_form(), rnd_form()
        lhs = star(star(p, q, curved_conn), w, curved_conn)
        rhs = star(p, star(q, w, curved_conn), curved_conn)
        vo = min(lhs.validity_order, rhs.validity_order)
        assert vo >= 0
        diff = (lhs - rhs).through(vo)
        for h, slots, jet in diff.terms:
            win = min(lhs.base_window(h), rhs.base_window(h))
            if win == INF:
                assert not jet
            else:
                assert not BaseJet(N, J, {e: c for e, c in jet.coeffs.items()
                                          if sum(e) <= win})


def test_star_zero_and_scalars(flat_conn):
    one = scalar_series(BaseJet.one(N, J))
    zero = FormSeries.zero(N, J)
    p = scalar_series(BaseJet.var(N, J, 0))
    assert star(zero, p, flat_conn).terms == []
    assert star(one, p, flat_conn).terms == p.terms
    assert star(p, one, flat_conn).terms == p.terms
