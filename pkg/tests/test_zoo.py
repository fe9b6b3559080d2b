import math

import numpy as np
import pytest
import sympy as sp

from greenlab import surface_maps as sm
from greenlab import zoo


def test_ids_deterministic():
    assert zoo.ids() == sorted(zoo.REGISTRY)
    assert set(zoo.DESCRIPTIONS) == set(zoo.REGISTRY)


def test_unknown_id():
    with pytest.raises(KeyError):
        zoo.get("nope")


@pytest.mark.parametrize("entry_id", ["quad-a3", "quad-third", "three-lines-slice", "secant-z2m1", "henon", "poly-xy1"])
def test_entries_self_check(entry_id):
    e = zoo.get(entry_id)
    assert e.facts and all(f.verified for f in e.facts)
    s = e.summary()
    assert s["id"] == entry_id and s["facts"]


def test_quadratic_symbolic_facts_exact():
    e = zoo.quadratic_rotation("a")
    assert e.map.exact
    assert {f.name for f in e.facts} >= {"inverse", "I+", "line-invariant", "I-"}
    assert all(f.exact for f in e.facts if f.name in ("inverse", "I+", "I-"))


def test_quadratic_golden_rotation_fact():
    e = zoo.get("quad-golden")
    assert e.theta == pytest.approx((math.sqrt(5) - 1) / 2)
    assert any(f.name == "rotation" and f.verified for f in e.facts)


def test_three_lines_symbolic_facts():
    e = zoo.three_lines()
    assert [f.name for f in e.facts] == ["inverse", "I_f", "lines"]
    assert all(f.verified for f in e.facts)


def test_three_lines_line_action_second_line():
    e = zoo.three_lines(self_check=False)
    img = zoo.line_action_images(e.map)[1]
    a, b, c, t = sp.symbols("a b c t")
    want = (0, -a * c * t, b)
    assert all(sp.simplify(img[i] * want[j] - img[j] * want[i]) == 0 for i in range(3) for j in range(3))


def test_three_lines_zero_parameter():
    with pytest.raises(ValueError):
        zoo.three_lines(0, 1, 1)


def test_three_lines_slice_params():
    e = zoo.three_lines_slice(2.0, 0.3)
    b = e.numeric_params.get("b", e.params["b"])
    assert complex(b) == pytest.approx(-2 * complex(math.cos(0.6 * math.pi), math.sin(0.6 * math.pi)))
    assert e.expectations["lambda2"] == 1


def test_secant_orbit_converges():
    e = zoo.secant("z**2 - 1")
    p = np.array([1.1, 1, 0.9, 1], dtype=complex)
    for _ in range(12):
        p = sm.evaluate(e.map, p)
    assert sm.chordal(p, np.array([1, 1, 1, 1]), "P1xP1") < 1e-8


def test_secant_cubic_fixed_points():
    e = zoo.secant("z**3 - z")
    for r in (-1.0, 0.0, 1.0):
        p = np.array([r, 1, r, 1], dtype=complex)
        # (r, r) is the image of the collapsed curve, not a point of definition, so approach it
        q = p + np.array([1e-3, 0, -2e-3, 0])
        d0 = sm.chordal(q, p, "P1xP1")
        for _ in range(3):
            q = sm.evaluate(e.map, q)
        assert sm.chordal(q, p, "P1xP1") < d0


def test_secant_affine_formula():
    # x = 0, y = 1, P = z^2 - 1: P(y) = 0 gives z = y
    e = zoo.secant("z**2 - 1", self_check=False)
    img = sm.evaluate(e.map, [0, 1, 1, 1])
    assert sm.chordal(img, [1, 1, 1, 1], "P1xP1") < 1e-12


def test_secant_repeated_root_rejected():
    with pytest.raises(ValueError):
        zoo.secant("z**2")


def test_secant_diagonal_attraction_strict():
    e = zoo.secant("z**2 - 1", self_check=False)
    target = np.array([1, 1, 1, 1], dtype=complex)
    rng = np.random.default_rng(4)
    for _ in range(5):
        q = target + 0.05 * np.array([rng.normal() + 1j * rng.normal(), 0, rng.normal() + 1j * rng.normal(), 0])
        ds = []
        for _ in range(8):
            q = sm.evaluate(e.map, q)
            ds.append(float(sm.chordal(q, target, "P1xP1")))
        assert all(b < a for a, b in zip(ds[3:], ds[4:]) if a > 1e-12)
        assert ds[-1] < 1e-6


def test_polynomial_map_caveat_and_degree():
    e = zoo.get("henon")
    assert "naive" in e.caveat
    assert e.map.degree.scalar == 2


def test_linear_polynomial_map():
    x, y = sp.symbols("x y")
    e = zoo.polynomial_plane_map(x + 2 * y, y)
    assert e.map.degree.scalar == 1


def test_constant_polynomial_map_rejected():
    with pytest.raises(ValueError):
        zoo.polynomial_plane_map(sp.Integer(1), sp.Integer(2))
