"""Chart geometry: Christoffel jets, curvature tensors, symplectic lift.

A :class:`ChartGeometry` packages, on one cotangent chart of half-dimension
n with jets truncated at order J:

* ``Gamma[k][i][j]``      Christoffel symbols Gamma^k_ij of a torsion-free
  metric connection on the base, jets in the x variables only;
* ``GammaTilde[L][K][I]`` the lifted symplectic connection on the 2n
  interleaved slots (even slot 2a = x^(a+1), odd slot 2a+1 = xi^(a+1));
* ``Riemann[k][j][i][l]`` the curvature R^k_jil = d_i Gamma^k_lj
  - d_l Gamma^k_ij + Gamma^k_im Gamma^m_lj - Gamma^k_lm Gamma^m_ij,
  so R(d_i, d_l) d_j = R^k_jil d_k;
* ``RiemannTilde[j][k][i][l]`` the lowered lift curvature
  omega_jm RTilde^m_kil, computed from GammaTilde by the same commutator
  formula.

The lift is the horizontal/dual lift with vanishing extra symmetric part:

    GammaTilde^(2k)_(2i)(2j)       = Gamma^k_ij
    GammaTilde^(2k+1)_(2i)(2j+1)   = GammaTilde^(2k+1)_(2j+1)(2i) = -Gamma^j_ik

and zero otherwise.  Its lowered symbols omega_LM GammaTilde^M_KI are fully
symmetric exactly when Gamma is torsion-free, which is what
:func:`validate` checks (it flags problems, it never repairs data).

Geometry files are JSON with every number an int or an exact "p/q" string;
any float anywhere is rejected.  See :func:`load_geometry`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Any

from .algebra import INF, omega_matrix
from .jets import BaseJet, jet_mul, jet_partial
from .scalars import GR_ONE, GR_ZERO, GaussianRational, parse_rational, rational


class GeometryError(ValueError):
    """Malformed or inconsistent geometry data; message carries a field path."""


@dataclass(frozen=True)
class ValidationIssue:
    identity: str
    indices: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        where = ",".join(str(i + 1) for i in self.indices)
        return f"{self.identity} fails at ({where}): {self.detail}"


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, identity: str, indices: tuple[int, ...], detail: str) -> None:
        self.issues.append(ValidationIssue(identity, indices, detail))

    def __str__(self) -> str:
        if self.ok:
            return "all geometry identities hold"
        return "\n".join(str(i) for i in self.issues)


@dataclass(frozen=True)
class ChartGeometry:
    n: int
    J: int
    Gamma: tuple
    GammaTilde: tuple
    Riemann: tuple
    RiemannTilde: tuple
    base_valid: float = INF

    @property
    def omega(self) -> list[list[int]]:
        return omega_matrix(self.n)

    def is_flat(self) -> bool:
        return all(not self.Gamma[k][i][j]
                   for k in range(self.n) for i in range(self.n) for j in range(self.n)) \
            and all(not g for a in self.GammaTilde for b in a for g in b)

    def gamma_tilde_lowered(self) -> tuple:
        """Fully lowered lift symbols GammaTilde_(J,K,I) = omega_JM GammaTilde^M_KI."""
        n2 = 2 * self.n
        om = self.omega
        out = []
        for Jx in range(n2):
            plane = []
            for K in range(n2):
                row = []
                for I in range(n2):
                    acc = BaseJet.zero(self.n, self.J)
                    for M in range(n2):
                        if om[Jx][M]:
                            t = self.GammaTilde[M][K][I]
                            acc = acc + t if om[Jx][M] > 0 else acc - t
                    row.append(acc)
                plane.append(tuple(row))
            out.append(tuple(plane))
        return tuple(out)


# ---------------------------------------------------------------------------
# tensor helpers
# ---------------------------------------------------------------------------


def _nested(shape: tuple[int, ...], fill) -> list:
    if len(shape) == 1:
        return [fill() for _ in range(shape[0])]
    return [_nested(shape[1:], fill) for _ in range(shape[0])]


def _freeze(t):
    if isinstance(t, list):
        return tuple(_freeze(x) for x in t)
    return t


def lift_levi_civita(Gamma, n: int, J: int):
    """Symplectic lift of base Christoffel symbols to the 2n slots (see module doc)."""
    n2 = 2 * n
    GT = _nested((n2, n2, n2), lambda: BaseJet.zero(n, J))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                g = Gamma[k][i][j]
                if g:
                    GT[2 * k][2 * i][2 * j] = GT[2 * k][2 * i][2 * j] + g
                # mixed block: GammaTilde^(2k+1)_(2i)(2j+1) = -Gamma^j_ik
                h = Gamma[j][i][k]
                if h:
                    GT[2 * k + 1][2 * i][2 * j + 1] = GT[2 * k + 1][2 * i][2 * j + 1] - h
                    GT[2 * k + 1][2 * j + 1][2 * i] = GT[2 * k + 1][2 * j + 1][2 * i] - h
    return _freeze(GT)


def _curvature_from_symbols(G, dim: int, partial_slot, n: int, J: int):
    """R^k_jil = d_i G^k_lj - d_l G^k_ij + G^k_im G^m_lj - G^k_lm G^m_ij."""
    R = _nested((dim, dim, dim, dim), lambda: BaseJet.zero(n, J))
    for k in range(dim):
        for j in range(dim):
            for i in range(dim):
                for l in range(i + 1, dim):
                    acc = jet_partial(G[k][l][j], partial_slot(i)) - jet_partial(G[k][i][j], partial_slot(l))
                    for m in range(dim):
                        t1 = G[k][i][m], G[m][l][j]
                        if t1[0] and t1[1]:
                            acc = acc + jet_mul(*t1)
                        t2 = G[k][l][m], G[m][i][j]
                        if t2[0] and t2[1]:
                            acc = acc - jet_mul(*t2)
                    R[k][j][i][l] = acc
                    R[k][j][l][i] = -acc
    return R


def riemann_from_christoffel(Gamma, n: int, J: int):
    """Base curvature tensor; x-derivative of slot i is base slot 2i."""
    return _freeze(_curvature_from_symbols(Gamma, n, lambda i: 2 * i, n, J))


def riemann_tilde_from_lift(GammaTilde, n: int, J: int):
    """Lowered curvature of the lifted connection on all 2n slots."""
    n2 = 2 * n
    R = _curvature_from_symbols(GammaTilde, n2, lambda i: i, n, J)
    om = omega_matrix(n)
    low = _nested((n2, n2, n2, n2), lambda: BaseJet.zero(n, J))
    for j in range(n2):
        for k in range(n2):
            for i in range(n2):
                for l in range(n2):
                    acc = BaseJet.zero(n, J)
                    for m in range(n2):
                        if om[j][m]:
                            acc = acc + R[m][k][i][l] if om[j][m] > 0 else acc - R[m][k][i][l]
                    low[j][k][i][l] = acc
    return _freeze(low)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def preset_flat(n: int, J: int) -> ChartGeometry:
    """Flat chart: all symbols and curvatures vanish identically."""
    z = lambda: BaseJet.zero(n, J)
    return ChartGeometry(
        n, J,
        _freeze(_nested((n, n, n), z)),
        _freeze(_nested((2 * n, 2 * n, 2 * n), z)),
        _freeze(_nested((n, n, n, n), z)),
        _freeze(_nested((2 * n,) * 4, z)),
        base_valid=INF,
    )


def space_form_curvature(n: int, kappa) -> dict[tuple[int, int, int, int], GaussianRational]:
    """Constant-curvature candidate tensor
    Rbar_iajb = kappa * (d_ij d_ab - d_ib d_aj), 0-based indices."""
    kq = kappa if isinstance(kappa, GaussianRational) else GaussianRational(kappa)
    out: dict[tuple[int, int, int, int], GaussianRational] = {}
    for i in range(n):
        for a in range(n):
            for j in range(n):
                for b in range(n):
                    v = GR_ZERO
                    if i == j and a == b:
                        v = v + kq
                    if i == b and a == j:
                        v = v - kq
                    if v:
                        out[(i, a, j, b)] = v
    return out


def metric_normal_coordinates(n: int, J: int, rbar: dict[tuple[int, int, int, int], GaussianRational]):
    """Second-order normal-coordinate metric g_ij = d_ij - (1/3) Rbar_iajb x^a x^b."""
    if J < 2:
        raise GeometryError("normal-coordinate metric needs J >= 2")
    third = GaussianRational(rational(1, 3))
    g = _nested((n, n), lambda: BaseJet.zero(n, J))
    for i in range(n):
        g[i][i] = BaseJet.one(n, J)
    for (i, a, j, b), v in rbar.items():
        exp = [0] * (2 * n)
        exp[2 * a] += 1
        exp[2 * b] += 1
        c = -(v * third)
        g[i][j] = g[i][j] + BaseJet(n, J, {tuple(exp): c})
    return _freeze(g)


def preset_constant_curvature(n: int, J: int, kappa=1) -> ChartGeometry:
    """Normal-coordinate chart of a space form of sectional curvature kappa."""
    rbar = space_form_curvature(n, kappa)
    return from_metric_jets(metric_normal_coordinates(n, J, rbar), n, J)


def _jet_matrix_inverse(g, n: int, J: int):
    """Neumann series inverse of a jet matrix with g(0) = identity."""
    dim = len(g)
    # h = g - I, nilpotent in the quotient since h(0) = 0
    h = [[g[i][j] - (BaseJet.one(n, J) if i == j else BaseJet.zero(n, J)) for j in range(dim)]
         for i in range(dim)]
    inv = [[BaseJet.one(n, J) if i == j else BaseJet.zero(n, J) for j in range(dim)]
           for i in range(dim)]
    power = [row[:] for row in inv]
    for it in range(1, J + 1):
        power = [[sum((jet_mul(power[i][m], h[m][j]) for m in range(dim)),
                      BaseJet.zero(n, J)) for j in range(dim)] for i in range(dim)]
        if all(not power[i][j] for i in range(dim) for j in range(dim)):
            break
        sign = -1 if it & 1 else 1
        inv = [[inv[i][j] + (power[i][j] if sign > 0 else -power[i][j]) for j in range(dim)]
               for i in range(dim)]
    return inv


def from_metric_jets(g, n: int, J: int) -> ChartGeometry:
    """Levi-Civita data from an exact polynomial metric given as n x n jets.

    Requires g symmetric, depending only on the x slots, with g(0) the
    identity (an orthonormal frame at the origin).  Raises GeometryError
    naming the failing entry otherwise.
    """
    if len(g) != n or any(len(row) != n for row in g):
        raise GeometryError(f"metric must be {n}x{n}")
    for i in range(n):
        for j in range(n):
            gij = g[i][j]
            if not isinstance(gij, BaseJet) or gij.n != n or gij.J != J:
                raise GeometryError(f"metric[{i + 1}][{j + 1}] is not a jet on (n={n}, J={J})")
            if gij != g[j][i]:
                raise GeometryError(f"metric not symmetric at ({i + 1},{j + 1})")
            if not gij.depends_only_on_x():
                raise GeometryError(f"metric[{i + 1}][{j + 1}] depends on xi slots")
            want = GR_ONE if i == j else GR_ZERO
            if gij.at_origin() != want:
                raise GeometryError(
                    f"metric[{i + 1}][{j + 1}](0) = {gij.at_origin()}, need identity at origin")
    ginv = _jet_matrix_inverse(g, n, J)
    half = GaussianRational(rational(1, 2))
    Gamma = _nested((n, n, n), lambda: BaseJet.zero(n, J))
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                acc = BaseJet.zero(n, J)
                for l in range(n):
                    braces = (jet_partial(g[j][l], 2 * i) + jet_partial(g[i][l], 2 * j)
                              - jet_partial(g[i][j], 2 * l))
                    if braces and ginv[k][l]:
                        acc = acc + jet_mul(ginv[k][l], braces)
                acc = acc * half
                Gamma[k][i][j] = acc
                Gamma[k][j][i] = acc
    Gamma = _freeze(Gamma)
    # the metric is exact by contract and jet products are quotient-exact,
    # so Gamma is trusted through J; only the Neumann inverse caps it there
    return from_christoffel(Gamma, n, J, base_valid=J)


def from_christoffel(Gamma, n: int, J: int, GammaTilde=None, Riemann=None,
                     RiemannTilde=None, base_valid=None) -> ChartGeometry:
    """Assemble a chart geometry, deriving whatever is not supplied.

    ``base_valid`` is the base degree through which the connection jets
    agree with the functions they stand for.  Christoffel jets handed in
    directly are taken at face value as exact polynomial data; callers
    holding truncations of a non-polynomial connection should pass the
    degree they actually trust.
    """
    Gamma = _freeze(Gamma)
    if GammaTilde is None:
        GammaTilde = lift_levi_civita(Gamma, n, J)
    else:
        GammaTilde = _freeze(GammaTilde)
    if Riemann is None:
        Riemann = riemann_from_christoffel(Gamma, n, J)
    else:
        Riemann = _freeze(Riemann)
    if RiemannTilde is None:
        RiemannTilde = riemann_tilde_from_lift(GammaTilde, n, J)
    else:
        RiemannTilde = _freeze(RiemannTilde)
    if base_valid is None:
        base_valid = INF
    return ChartGeometry(n, J, Gamma, GammaTilde, Riemann, RiemannTilde, base_valid=base_valid)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate(geom: ChartGeometry) -> ValidationReport:
    """Check every structural identity of the chart data.  Returns a report
    listing each failure with the identity name and 1-based indices; never
    modifies the geometry."""
    n, J = geom.n, geom.J
    n2 = 2 * n
    rep = ValidationReport()

    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                if geom.Gamma[k][i][j] != geom.Gamma[k][j][i]:
                    rep.add("christoffel-symmetry", (k, i, j), "Gamma^k_ij != Gamma^k_ji")
            for j in range(n):
                if not geom.Gamma[k][i][j].depends_only_on_x():
                    rep.add("christoffel-base-only", (k, i, j), "depends on xi slots")

    for L in range(n2):
        for K in range(n2):
            for I in range(K + 1, n2):
                if geom.GammaTilde[L][K][I] != geom.GammaTilde[L][I][K]:
                    rep.add("lift-symmetry", (L, K, I),
                            "GammaTilde^L_KI not symmetric in the lower pair")
    low = geom.gamma_tilde_lowered()
    for Jx in range(n2):
        for K in range(Jx + 1, n2):
            for I in range(n2):
                if low[Jx][K][I] != low[K][Jx][I]:
                    rep.add("lift-omega-compatibility", (Jx, K, I),
                            "omega-lowered symbols not symmetric in the first pair")

    R = geom.Riemann
    for k in range(n):
        for j in range(n):
            for i in range(n):
                for l in range(n):
                    if R[k][j][i][l] != -R[k][j][l][i]:
                        rep.add("riemann-antisymmetry", (k, j, i, l),
                                "R^k_jil != -R^k_jli")
    for k in range(n):
        for j in range(n):
            for i in range(n):
                for l in range(n):
                    s = R[k][j][i][l] + R[k][i][l][j] + R[k][l][j][i]
                    if s:
                        rep.add("riemann-first-bianchi", (k, j, i, l),
                                "cyclic sum over the last three indices is nonzero")
    want = riemann_from_christoffel(geom.Gamma, n, J)
    for k in range(n):
        for j in range(n):
            for i in range(n):
                for l in range(n):
                    if R[k][j][i][l] != want[k][j][i][l]:
                        rep.add("riemann-matches-christoffel", (k, j, i, l),
                                "stored R differs from the commutator formula on Gamma")

    RT = geom.RiemannTilde
    for j in range(n2):
        for k in range(j + 1, n2):
            for i in range(n2):
                for l in range(n2):
                    if RT[j][k][i][l] != RT[k][j][i][l]:
                        rep.add("tilde-riemann-pair-symmetry", (j, k, i, l),
                                "lowered RTilde not symmetric in (j,k)")
    for j in range(n2):
        for k in range(n2):
            for i in range(n2):
                for l in range(i + 1, n2):
                    if RT[j][k][i][l] != -RT[j][k][l][i]:
                        rep.add("tilde-riemann-antisymmetry", (j, k, i, l),
                                "lowered RTilde not antisymmetric in (i,l)")
                for l in range(n2):
                    s = RT[j][k][i][l] + RT[j][i][l][k] + RT[j][l][k][i]
                    if s:
                        rep.add("tilde-riemann-first-bianchi", (j, k, i, l),
                                "cyclic sum over the last three indices is nonzero")
    want_t = riemann_tilde_from_lift(geom.GammaTilde, n, J)
    for j in range(n2):
        for k in range(n2):
            for i in range(n2):
                for l in range(n2):
                    if RT[j][k][i][l] != want_t[j][k][i][l]:
                        rep.add("tilde-riemann-matches-lift", (j, k, i, l),
                                "stored RTilde differs from the commutator formula on GammaTilde")
    return rep


# ---------------------------------------------------------------------------
# JSON geometry files
# ---------------------------------------------------------------------------


def _reject_float(s: str):
    raise GeometryError(f"float literal {s!r} in geometry file; use exact 'p/q' strings")


def _parse_value(v, path: str) -> GaussianRational:
    if isinstance(v, bool):
        raise GeometryError(f"{path}: boolean is not a number")
    if isinstance(v, int):
        return GaussianRational(v)
    if isinstance(v, str):
        try:
            return GaussianRational(parse_rational(v))
        except ValueError as e:
            raise GeometryError(f"{path}: {e}") from None
    raise GeometryError(f"{path}: expected int or 'p/q' string, got {type(v).__name__}")


def _parse_jet(obj, n: int, J: int, path: str) -> BaseJet:
    if isinstance(obj, (int, str)):
        return BaseJet.const(n, J, _parse_value(obj, path))
    if not isinstance(obj, dict):
        raise GeometryError(f"{path}: expected a constant or an exponent table")
    coeffs = {}
    for expkey, val in obj.items():
        try:
            exp = tuple(int(s) for s in expkey.split(","))
        except ValueError:
            raise GeometryError(f"{path}.{expkey}: malformed exponent key") from None
        if len(exp) != 2 * n:
            raise GeometryError(f"{path}.{expkey}: need {2 * n} exponents, got {len(exp)}")
        if any(e < 0 for e in exp):
            raise GeometryError(f"{path}.{expkey}: negative exponent")
        if sum(exp) > J:
            raise GeometryError(f"{path}.{expkey}: total degree {sum(exp)} exceeds J={J}")
        v = _parse_value(val, f"{path}.{expkey}")
        if v:
            coeffs[exp] = v
    return BaseJet(n, J, coeffs)


def _parse_indexed(obj, rank: int, dim: int, n: int, J: int, path: str):
    """Parse {"i,j,..": jet} into a dense rank-`rank` tuple tensor (1-based keys)."""
    out = _nested((dim,) * rank, lambda: BaseJet.zero(n, J))
    if not isinstance(obj, dict):
        raise GeometryError(f"{path}: expected an object of index keys")
    for key, val in obj.items():
        try:
            idx = tuple(int(s) for s in key.split(","))
        except ValueError:
            raise GeometryError(f"{path}.{key}: malformed index key") from None
        if len(idx) != rank:
            raise GeometryError(f"{path}.{key}: need {rank} indices")
        if any(not 1 <= i <= dim for i in idx):
            raise GeometryError(f"{path}.{key}: index out of range 1..{dim}")
        cur = out
        for i in idx[:-1]:
            cur = cur[i - 1]
        cur[idx[-1] - 1] = _parse_jet(val, n, J, f"{path}.{key}")
    return out


_DEFAULT_RIEMANN_ORDER = ("k", "j", "i", "l")


def _apply_riemann_order(tensor, order: str, dim: int, n: int, J: int, path: str):
    labels = tuple(s.strip() for s in order.split(","))
    if sorted(labels) != sorted(_DEFAULT_RIEMANN_ORDER):
        raise GeometryError(
            f"{path}: riemann_index_order must be a permutation of 'k,j,i,l', got {order!r}")
    if labels == _DEFAULT_RIEMANN_ORDER:
        return tensor
    pos = {lab: p for p, lab in enumerate(labels)}
    perm = tuple(pos[lab] for lab in _DEFAULT_RIEMANN_ORDER)
    out = _nested((dim,) * 4, lambda: BaseJet.zero(n, J))
    for a in range(dim):
        for b in range(dim):
            for c in range(dim):
                for d in range(dim):
                    src = (a, b, c, d)
                    out[src[perm[0]]][src[perm[1]]][src[perm[2]]][src[perm[3]]] = \
                        tensor[a][b][c][d]
    return out


def load_geometry(source) -> ChartGeometry:
    """Load and validate a geometry JSON file (path, file object, or dict).

    Exactly one of "preset", "metric", "christoffel" must be present.
    Raises GeometryError with a field path on malformed input and a
    validation summary when the data is internally inconsistent.
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source, parse_float=_reject_float)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh, parse_float=_reject_float)
    if not isinstance(doc, dict):
        raise GeometryError("geometry file must hold a JSON object")
    for fieldname in ("n", "J"):
        if fieldname not in doc:
            raise GeometryError(f"missing required field '{fieldname}'")
        if not isinstance(doc[fieldname], int) or isinstance(doc[fieldname], bool):
            raise GeometryError(f"{fieldname}: must be an integer")
    n, J = doc["n"], doc["J"]
    if n < 1:
        raise GeometryError("n: must be >= 1")
    if J < 0:
        raise GeometryError("J: must be >= 0")

    known = {"n", "J", "preset", "kappa", "metric", "christoffel", "christoffel_tilde",
             "riemann", "riemann_tilde", "riemann_index_order"}
    for key in doc:
        if key not in known:
            raise GeometryError(f"unknown field '{key}'")

    sources = [k for k in ("preset", "metric", "christoffel") if k in doc]
    if len(sources) != 1:
        raise GeometryError(
            "give exactly one of 'preset', 'metric', 'christoffel' "
            f"(found {sources or 'none'})")

    if "preset" in doc:
        preset = doc["preset"]
        if preset == "flat":
            geom = preset_flat(n, J)
        elif preset == "constant_curvature":
            kappa = _parse_value(doc.get("kappa", 1), "kappa")
            geom = preset_constant_curvature(n, J, kappa)
        else:
            raise GeometryError(f"preset: unknown preset {preset!r}")
    else:
        extras = {}
        order = doc.get("riemann_index_order", "k,j,i,l")
        if not isinstance(order, str):
            raise GeometryError("riemann_index_order: must be a string permutation of 'k,j,i,l'")
        if "metric" in doc:
            gtab = _parse_indexed(doc["metric"], 2, n, n, J, "metric")
            # accept upper-triangle input: mirror missing entries
            for i in range(n):
                for j in range(n):
                    if not gtab[i][j] and gtab[j][i]:
                        gtab[i][j] = gtab[j][i]
            geom = from_metric_jets(_freeze(gtab), n, J)
        else:
            Gamma = _freeze(_parse_indexed(doc["christoffel"], 3, n, n, J, "christoffel"))
            if "christoffel_tilde" in doc:
                extras["GammaTilde"] = _freeze(
                    _parse_indexed(doc["christoffel_tilde"], 3, 2 * n, n, J, "christoffel_tilde"))
            if "riemann" in doc:
                rt = _parse_indexed(doc["riemann"], 4, n, n, J, "riemann")
                extras["Riemann"] = _freeze(_apply_riemann_order(rt, order, n, n, J, "riemann"))
            if "riemann_tilde" in doc:
                rt = _parse_indexed(doc["riemann_tilde"], 4, 2 * n, n, J, "riemann_tilde")
                extras["RiemannTilde"] = _freeze(
                    _apply_riemann_order(rt, order, 2 * n, n, J, "riemann_tilde"))
            geom = from_christoffel(Gamma, n, J, **extras)

    report = validate(geom)
    if not report.ok:
        raise GeometryError(f"geometry fails validation:\n{report}")
    return geom


def geometry_to_dict(geom: ChartGeometry) -> dict[str, Any]:
    """Serializable description (christoffel form) of a chart geometry."""
    def jet_obj(jet: BaseJet):
        return {",".join(str(e) for e in exp): str(v) for exp, v in jet.sorted_items()}

    christoffel = {}
    for k in range(geom.n):
        for i in range(geom.n):
            for j in range(geom.n):
                if geom.Gamma[k][i][j]:
                    christoffel[f"{k + 1},{i + 1},{j + 1}"] = jet_obj(geom.Gamma[k][i][j])
    return {"n": geom.n, "J": geom.J, "christoffel": christoffel}
