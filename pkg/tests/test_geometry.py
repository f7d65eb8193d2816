import json

import pytest

from fedosov.geometry import (
    GeometryError,
    from_christoffel,
    geometry_to_dict,
    load_geometry,
    preset_constant_curvature,
    preset_flat,
    validate,
)
from fedosov.jets import BaseJet
from fedosov.scalars import GaussianRational


def test_flat_preset():
    g = preset_flat(2, 3)
    assert validate(g).ok
    assert all(not jet for k in range(2) for row in g.Gamma[k] for jet in row)
    assert all(not jet for blk in g.Riemann for pl in blk for row in pl for jet in row)


def test_constant_curvature_preset():
    g = preset_constant_curvature(2, 4, kappa=1)
    assert validate(g).ok
    # sectional curvature pins R^1_212 at the chart origin
    assert g.Riemann[0][1][0][1].at_origin() == GaussianRational(1)
    # normal coordinates: symbols vanish at the origin
    assert all(not jet.at_origin() for k in range(2) for row in g.Gamma[k] for jet in row)


def test_constant_curvature_kappa_scales():
    g3 = preset_constant_curvature(2, 4, kappa=3)
    assert g3.Riemann[0][1][0][1].at_origin() == GaussianRational(3)
    assert validate(g3).ok


def test_validator_names_broken_identity():
    n, J = 2, 2
    G = [[[BaseJet.zero(n, J) for _ in range(n)] for _ in range(n)] for _ in range(n)]
    G[0][0][1] = BaseJet.var(n, J, 0)
    rep = validate(from_christoffel(G, n, J))
    assert not rep.ok
    idents = {i.identity for i in rep.issues}
    assert "christoffel-symmetry" in idents
    issue = next(i for i in rep.issues if i.identity == "christoffel-symmetry")
    assert issue.indices == (0, 0, 1)


def test_dict_round_trip():
    g = preset_constant_curvature(2, 3)
    d = geometry_to_dict(g)
    g2 = load_geometry(d)
    assert g2.n == g.n and g2.J == g.J
    assert g2.Gamma == g.Gamma
    assert g2.Riemann == g.Riemann
    assert g2.RiemannTilde == g.RiemannTilde


def test_dict_is_json_serializable():
    d = geometry_to_dict(preset_constant_curvature(2, 3))
    assert load_geometry(json.loads(json.dumps(d))).Gamma is not None


@pytest.mark.parametrize("src,fragment", [
    ({"J": 4, "preset": "flat"}, "missing required field 'n'"),
    ({"n": 2, "J": 4}, "exactly one of"),
    ({"n": 2, "J": 4, "preset": "flat", "metric": []}, "exactly one of"),
    ({"n": 2, "J": 4, "preset": "wavy"}, "unknown preset"),
    ({"n": 0, "J": 4, "preset": "flat"}, "n"),
])
def test_loader_diagnostics(src, fragment):
    with pytest.raises(GeometryError) as exc:
        load_geometry(src)
    assert fragment in str(exc.value)


def test_loader_rejects_floats(tmp_path):
    p = tmp_path / "geom.json"
    p.write_text('{"n": 2, "J": 4, "preset": "constant_curvature", "kappa": 0.5}')
    with pytest.raises(GeometryError) as exc:
        load_geometry(str(p))
    assert "float" in str(exc.value)


def test_loader_reads_file(tmp_path):
    p = tmp_path / "geom.json"
    p.write_text('{"n": 2, "J": 3, "preset": "flat"}')
    g = load_geometry(str(p))
    assert g.n == 2 and g.J == 3
