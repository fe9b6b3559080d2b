import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from greenlab import surface_maps as sm
from greenlab import zoo

x, y, z = sp.symbols("x y z")
a = sp.Symbol("a")


@pytest.fixture(scope="module")
def quad_sym():
    return zoo.quadratic_rotation("a", self_check=False)


@pytest.fixture(scope="module")
def three():
    return zoo.three_lines(self_check=False)


def test_compose_identity_left(quad_sym):
    f = quad_sym.map
    h = sm.compose(sm.identity("P2"), f)
    g = sm.strip(f)
    assert all((p - q).is_zero() for p, q in zip(h.components, g.components))


def test_three_lines_inverse_both_orders(three):
    assert sm.is_identity(sm.compose(three.map, three.inverse))
    assert sm.is_identity(sm.compose(three.inverse, three.map))


def test_quadratic_square_degree_symbolic(quad_sym):
    h = sm.compose(quad_sym.map, quad_sym.map)
    assert h.degree.scalar == 4
    assert h.raw_degree.scalar == 4


@pytest.mark.parametrize("n", [2, 3, 4])
def test_symbolic_degree_law(quad_sym, n):
    h = sm.iterate(quad_sym.map, n)
    assert h.degree.scalar == 2**n


def test_raw_degree_is_product():
    f = sm.from_exprs([x * y, y * z, z * x], "P2")
    h = sm.compose(f, f)
    assert h.raw_degree.scalar == 4
    assert h.degree.scalar <= h.raw_degree.scalar


def test_strip_idempotent():
    f = sm.from_exprs([x * (x + y), x * (y - z), x * z], "P2")
    s1 = sm.strip(f)
    s2 = sm.strip(s1)
    assert s1.degree.scalar == 1
    assert all((p - q).is_zero() for p, q in zip(s1.components, s2.components))


def test_compose_ambient_mismatch():
    with pytest.raises(sm.AmbientMismatch):
        sm.compose(sm.identity("P2"), sm.identity("P1xP1"))


def test_compose_into_indeterminacy_raises():
    # g maps everything to [0:0:1], where f is undefined
    f = sm.from_exprs([x * y, x * z, y * z], "P2")
    g = sm.from_exprs([0, 0, z], "P2")
    with pytest.raises(sm.ZeroMapError):
        sm.compose(f, g)


def test_zero_map_rejected():
    with pytest.raises(sm.ZeroMapError):
        sm.from_exprs([0, 0, 0], "P2")


def test_inhomogeneous_rejected():
    with pytest.raises(ValueError):
        sm.from_exprs([x**2, y, z], "P2")


def test_evaluate_indeterminate_quadratic():
    q = zoo.quadratic_rotation(3, self_check=False)
    with pytest.raises(sm.Indeterminate):
        sm.evaluate(q.map, [1, 0, 0])


def test_evaluate_three_lines_on_line():
    e = zoo.three_lines(1j, 2.0, -0.5, self_check=False)
    av, bv, cv = 1j, 2.0, -0.5
    for t in (0.3, -1.7 + 0.2j, 4.0):
        img = sm.evaluate(e.map, [t, 1, 0])
        want = sm.normalize([-bv * cv * t, av, 0], "P2")
        assert sm.chordal(img, want, "P2") < 1e-12


def test_evaluate_identity():
    p = np.array([0.3 + 1j, -2.0, 0.5j])
    assert sm.chordal(sm.evaluate(sm.identity(), p), p, "P2") < 1e-14


def test_jacobian_linear_map_has_no_factors():
    content, facs = sm.jacobian_determinant(sm.linear_map([[1, 2, 0], [0, 1, 0], [0, 0, 3]]))
    assert facs == []
    assert int(content) == 3


def test_jacobian_quadratic_degree():
    q = zoo.quadratic_rotation(3, self_check=False)
    _, facs = sm.jacobian_determinant(q.map)
    total = sum(sm.coordinate_degree(p, "P2") * m for p, m in facs)
    assert total == 3 * (2 - 1)
    # only the collapsed line y = 0 appears; t = 0 is invariant, not critical
    assert [(str(p), m) for p, m in facs] == [("y", 3)]


def test_json_roundtrip_exact(three):
    f = three.map
    g = sm.from_json(sm.to_json(f))
    assert all((p - q).is_zero() for p, q in zip(f.components, g.components))
    assert json.loads(sm.to_json(f))["mode"] == "exact"


def test_json_roundtrip_numeric():
    e = zoo.three_lines_slice(2.0, 0.3, self_check=False)
    f = sm.specialize(e.map, e.numeric_params) if e.map.exact else e.map
    g = sm.from_json(sm.to_json(f))
    assert g.components == f.components


def test_specialize_rational_stays_exact(quad_sym):
    f = sm.specialize(quad_sym.map, {"a": 3})
    assert f.exact and not f.params


def test_bidegree_bookkeeping_secant():
    e = zoo.secant("z**2 - 1", self_check=False)
    assert e.map.degree.matrix == ((0, 1), (1, 1))
    h = sm.compose(e.map, e.map)
    assert h.raw_degree.matrix == ((1, 1), (1, 2))


def test_modular_matches_exact_degrees():
    q = zoo.quadratic_rotation(1, self_check=False)
    h = sm.specialize(q.map, {})
    mod = [d.scalar for d in sm.modular_degree_sequence(h, 5)]
    exact = [sm.iterate(h, n).degree.scalar for n in range(1, 6)]
    assert mod == exact


def test_chordal_is_projective():
    p = np.array([1.0, 2.0 + 1j, -0.5])
    assert sm.chordal(p, 3j * p, "P2") < 1e-15
    assert sm.chordal(p, np.array([1.0, 0, 0]), "P2") > 0.1


lifts = st.tuples(*[st.floats(-3, 3, allow_nan=False) for _ in range(6)]).filter(
    lambda v: sum(t * t for t in v) > 0.1)
scalars = st.tuples(st.floats(0.1, 5), st.floats(0, 2 * np.pi))


@settings(max_examples=40, deadline=None)
@given(lifts, scalars)
def test_evaluate_projective_invariance(v, s):
    f = zoo.quadratic_rotation(3, self_check=False).map
    p = np.array([v[0] + 1j * v[1], v[2] + 1j * v[3], v[4] + 1j * v[5]])
    lam = s[0] * np.exp(1j * s[1])
    try:
        a1 = sm.evaluate(f, p)
    except sm.Indeterminate:
        return
    a2 = sm.evaluate(f, lam * p)
    assert sm.chordal(a1, a2, "P2") < 1e-12


@settings(max_examples=40, deadline=None)
@given(lifts, scalars, scalars)
def test_evaluate_projective_invariance_per_factor(v, s, t):
    f = zoo.secant("z**2 - 1", self_check=False).map
    p = np.array([v[0] + 1j, v[1], v[2] - 0.5j, v[3] + 1])
    l1 = s[0] * np.exp(1j * s[1])
    l2 = t[0] * np.exp(1j * t[1])
    q = p * np.array([l1, l1, l2, l2])
    try:
        a1 = sm.evaluate(f, p)
    except sm.Indeterminate:
        return
    assert sm.chordal(a1, sm.evaluate(f, q), "P1xP1") < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=9, max_size=9))
def test_linear_composition_matches_matrix_product(entries):
    A = np.array(entries).reshape(3, 3)
    if round(np.linalg.det(A)) == 0:
        return
    B = A.T + np.eye(3, dtype=int)
    if round(np.linalg.det(B)) == 0:
        return
    fa, fb = sm.linear_map(A.tolist()), sm.linear_map(B.tolist())
    h = sm.compose(fa, fb)
    pts = np.array([[1.0, 0.2, -0.3], [0.5j, 1, 2]])
    want = (A @ B @ pts.T).T
    got = h.numeric()(pts)
    for g, w in zip(got, want):
        assert sm.chordal(g, w, "P2") < 1e-12
