import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from greenlab import singular_loci as sl
from greenlab import surface_maps as sm
from greenlab import zoo

x, y, z = sp.symbols("x y z")
x0, x1, y0, y1 = sp.symbols("x0 x1 y0 y1")


def same_set(found, expected):
    def same(p, q):
        return all(sp.simplify(p[i] * q[j] - p[j] * q[i]) == 0 for i in range(len(p)) for j in range(len(p)))
    return len(found) == len(expected) and all(any(same(p, q) for q in expected) for p in found)


def test_three_lines_indeterminacy_exact():
    a, b, c = sp.symbols("a b c")
    e = zoo.three_lines(self_check=False)
    assert same_set(sl.exact_indeterminacy(e.map), [(a, 1, 0), (0, b, 1), (1, 0, c)])


def test_automorphism_has_no_indeterminacy():
    L = sl.singular_loci(sm.linear_map([[1, 2, 0], [0, 1, 0], [0, 0, 3]]))
    assert L.indeterminacy == [] and L.curves == []


def test_quadratic_loci():
    e = zoo.quadratic_rotation(3, self_check=False)
    L = sl.singular_loci(e.map)
    assert sl.exact_indeterminacy(e.map) == [(1, 0, 0)]
    assert len(L.contracted_points) == 1
    assert sm.chordal(L.contracted_points[0], [0, 1, 0], "P2") < 1e-9


def test_quadratic_invariant_line_not_contracted():
    e = zoo.quadratic_rotation(3, self_check=False)
    assert sl.contracted_image(e.map, sm.ring("P2").gens()[2]) is sl.NOT_CONTRACTED


def test_secant_indeterminacy_validated_by_evaluate():
    e = zoo.secant("z**2 - 2", self_check=False)
    L = sl.singular_loci(e.map)
    assert len(L.indeterminacy) == 2
    for p in L.indeterminacy:
        with pytest.raises(sm.Indeterminate):
            sm.evaluate(e.map, p)


def test_secant_each_factor_classified():
    e = zoo.secant("z**2 - 1", self_check=False)
    L = sl.singular_loci(e.map)
    assert L.curves
    # the factor y0^2 - y1^2 splits into two lines, each collapsed to a diagonal root pair
    imgs = L.contracted_points
    want = [np.array([1, 1, 1, 1]), np.array([-1, 1, -1, 1])]
    assert len(imgs) == 2
    assert all(any(sm.chordal(p, q, "P1xP1") < 1e-8 for q in want) for p in imgs)


def test_numeric_indeterminacy_matches_exact():
    e = zoo.three_lines_slice(2.0, 0.3, self_check=False)
    f = e.map
    nf = sm.NumericMap.from_map(f, e.numeric_params or None)
    pts = sl.numeric_indeterminacy(nf)
    av, bv, cv = 1j, complex(e.params["b"]), 1j / 2
    want = [np.array(p, dtype=complex) for p in ((av, 1, 0), (0, bv, 1), (1, 0, cv))]
    assert len(pts) == 3
    assert all(any(sm.chordal(p, q, "P2") < 1e-8 for q in want) for p in pts)


@pytest.mark.parametrize("entry_id", ["quad-a3", "secant-z2m1", "three-lines-slice", "henon"])
def test_components_vanish_at_indeterminacy(entry_id):
    e = zoo.get(entry_id)
    L = sl.singular_loci(e.map, e.numeric_params or None)
    nf = sm.NumericMap.from_map(e.map, e.numeric_params or None)
    blocks = [(0, 1, 2)] if nf.ambient == "P2" else [(0, 1), (2, 3)]
    for p in L.indeterminacy:
        lift = np.array(p) / np.linalg.norm(p)
        val = nf(lift)
        # some output factor vanishes entirely
        assert min(np.max(np.abs(val[list(b)])) for b in blocks) < 1e-9 * nf.coefficient_norm()


def test_henon_infinity_collapsed_to_fixed_point():
    e = zoo.get("henon")
    L = sl.singular_loci(e.map)
    (q,) = L.contracted_points
    with pytest.raises(sm.Indeterminate):
        # the collapse target of the line at infinity is the indeterminacy point of the inverse
        sm.evaluate(e.inverse, q)
    assert any(f.name == "I-fixed" and f.verified for f in e.facts)


@pytest.mark.parametrize("entry_id", ["quad-a3", "three-lines-slice", "henon"])
def test_jacobian_degree(entry_id):
    e = zoo.get(entry_id)
    f = e.map if not (e.map.exact and e.map.params) else sm.specialize(e.map, e.numeric_params)
    _, facs = sm.jacobian_determinant(f)
    d = f.degree.scalar
    assert sum(sm.coordinate_degree(p, "P2") * m for p, m in facs) == 3 * (d - 1)


def test_spurious_p2_all_false():
    e = zoo.get("quad-a3")
    L = sl.singular_loci(e.map)
    plus, minus = sl.spurious_flags(L, [1.0], [1.0])
    assert plus == [False] and minus == [False]


def test_spurious_secant_all_false():
    e = zoo.get("secant-z2m1")
    L = sl.singular_loci(e.map)
    D = np.array(e.map.degree.matrix, dtype=float)
    w, v = np.linalg.eig(D.T)
    vp = np.abs(v[:, np.argmax(w.real)].real)
    plus, minus = sl.spurious_flags(L, vp, vp[::-1], f=e.map, inverse=e.inverse)
    assert not any(plus) and not any(minus)


def test_spurious_degenerate_fixture():
    # (x, y) -> (x, x y): the invariant class (1, 0) pairs to zero with the fibre class of f(p)
    f = sm.from_exprs([x0, x1, x0 * y0, x1 * y1], "P1xP1")
    L = sl.singular_loci(f)
    plus, _ = sl.spurious_flags(L, [1.0, 0.0], [0.0, 1.0], f=f)
    assert plus and all(plus)
    assert L.image_classes == [(0, 1)] * len(plus)


def test_spurious_needs_classes():
    L = sl.singular_loci(zoo.get("quad-a3").map)
    with pytest.raises(sl.ClassesMissing):
        sl.spurious_flags(L, None, [1.0])


def test_degenerate_common_curve():
    f = sm.HomogeneousMap("P2", tuple(sm.from_exprs([x * y, x * z, x * x], "P2").components))
    with pytest.raises(sl.DegenerateMap):
        sl.exact_indeterminacy(f)


def test_loci_json_and_table():
    L = sl.singular_loci(zoo.get("quad-a3").map)
    d = json.loads(L.to_json())
    assert d["indeterminacy_exact"] == [["1", "0", "0"]]
    assert "contracted images" in L.table()


@settings(max_examples=15, deadline=None)
@given(st.complex_numbers(min_magnitude=0.2, max_magnitude=3), st.complex_numbers(min_magnitude=0.2, max_magnitude=3),
       st.complex_numbers(min_magnitude=0.2, max_magnitude=3))
def test_three_lines_indeterminacy_in_numeric_mode(a, b, c):
    e = zoo.three_lines(a, b, c, self_check=False)
    nf = sm.NumericMap.from_map(e.map)
    for p in ((a, 1, 0), (0, b, 1), (1, 0, c)):
        lift = np.array(p, dtype=complex)
        lift /= np.linalg.norm(lift)
        assert np.max(np.abs(nf(lift))) < 1e-9 * nf.coefficient_norm()
