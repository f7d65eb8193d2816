import random

import pytest

from fedosov.algebra import (
    Element,
    Monomial,
    ShapeMismatchError,
    clifford_quantization,
    clifford_symbol,
    filtration_degree,
    mc_product,
    omega_matrix,
    parity,
    supercommutator,
)
from fedosov.jets import BaseJet
from fedosov.scalars import GR_I, GaussianRational

N, J = 2, 3


def rand_element(rng, n=N, jmax=J, terms=2, wmax=3):
    out = []
    for _ in range(terms):
        w = [0] * (2 * n)
        for _ in range(rng.randrange(0, wmax + 1)):
            w[rng.randrange(2 * n)] += 1
        cliff = tuple(sorted(rng.sample(range(n), rng.randrange(0, n + 1))))
        form = tuple(sorted(rng.sample(range(2 * n), rng.randrange(0, 2))))
        e = tuple(0 for _ in range(2 * n))
        jet = BaseJet(n, jmax, {e: GaussianRational(rng.randrange(-4, 5))})
        if not jet:
            continue
        out.append((jet, Monomial(rng.randrange(0, 2), tuple(w), cliff, form)))
    return Element(n, jmax, out)


def hbar_id(k=1):
    return Element.hbar(N, J, k)


def test_monomial_validation():
    with pytest.raises(ValueError):
        Monomial(0, (1, 0), (1, 0), ())
    with pytest.raises(ValueError):
        Monomial(0, (1, 0), (), (3, 1))


def test_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        mc_product(Element.hbar(2, 3), Element.hbar(1, 3))


def test_canonical_commutator():
    # position and momentum of the same cotangent pair: [x, xi] = i*hbar
    x, xi = Element.weyl_gen(N, J, 0), Element.weyl_gen(N, J, 1)
    assert mc_product(x, xi) - mc_product(xi, x) == hbar_id() * GR_I
    # different pairs commute
    x2 = Element.weyl_gen(N, J, 2)
    assert mc_product(x, x2) == mc_product(x2, x)


def test_clifford_relations():
    for n in range(1, 7):
        two_h = Element.hbar(n, 2) * GaussianRational(2)
        for i in range(n):
            for j in range(n):
                ei, ej = Element.cliff_gen(n, 2, i), Element.cliff_gen(n, 2, j)
                anti = mc_product(ei, ej) + mc_product(ej, ei)
                assert anti == (-two_h if i == j else Element.zero(n, 2))


def test_product_associative_random():
    rng = random.Random(3)
    for _ in range(40):
        a, b, c = (rand_element(rng) for _ in range(3))
        assert mc_product(mc_product(a, b), c) == mc_product(a, mc_product(b, c))


def test_supercommutator_graded_antisymmetry():
    rng = random.Random(5)
    for _ in range(20):
        a = rand_element(rng)
        b = rand_element(rng)
        for pa, sa in zip(a.parity_split(), (1, -1)):
            for pb, sb in zip(b.parity_split(), (1, -1)):
                lhs = supercommutator(pa, pb)
                sign = GaussianRational(-1 if sa > 0 or sb > 0 else 1)
                assert lhs == supercommutator(pb, pa) * sign


def test_filtration_additive_on_products():
    rng = random.Random(7)
    for _ in range(30):
        a = rand_element(rng, terms=1)
        b = rand_element(rng, terms=1)
        p = mc_product(a, b)
        if a and b and p:
            assert p.filtration_degree() == a.filtration_degree() + b.filtration_degree()
            assert p.max_filtration_degree() == p.filtration_degree()


def test_parity_labels():
    assert parity(Monomial(0, (0,) * 4, (0,), ())) == "odd"
    assert parity(Monomial(0, (0,) * 4, (0,), (1,))) == "even"
    assert parity(Monomial(3, (0,) * 4)) == "even"


def test_filt_component_partition():
    rng = random.Random(11)
    a = rand_element(rng, terms=4)
    degrees = {int(rec[8]) for rec in a._decode()}
    acc = Element.zero(N, J)
    for d in degrees:
        comp = a.filt_component(d)
        assert all(int(rec[8]) == d for rec in comp._decode())
        acc = acc + comp
    assert acc == a


def test_clifford_symbol_quantization_roundtrip():
    rng = random.Random(13)
    zero_w = (0,) * (2 * N)
    for _ in range(20):
        a = rand_element(rng)
        # quantization is defined on pure x-form words over the base ring
        terms = [(jet, Monomial(m.hbar, zero_w, (), m.form)) for jet, m in a.terms
                 if all(s % 2 == 0 for s in m.form)]
        xf = Element(N, J, terms)
        assert clifford_symbol(clifford_quantization(xf)) == xf


def test_omega_matrix_blocks():
    m = omega_matrix(2)
    assert m[0][1] == 1 and m[1][0] == -1 and m[2][3] == 1
    assert all(m[i][j] == 0 for i in range(4) for j in range(4)
               if abs(i - j) != 1 or i // 2 != j // 2)


def test_truncation_tracks_validity():
    rng = random.Random(17)
    a = rand_element(rng, terms=4)
    t = a.filt_truncate(2)
    assert t.filt_valid <= 2
    assert all(int(rec[8]) <= 2 for rec in t._decode())
    b = a.base_truncate(1)
    assert b.base_valid <= 1
    assert all(int(rec[6]) <= 1 for rec in b._decode())
