import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greenlab import grid_currents as gc
from greenlab import surface_maps as sm
from greenlab import zoo


def r2(a, b):
    return abs(a) ** 2 + abs(b) ** 2


def chart(n=12, **kw):
    return gc.GridChart("P2", (0,), n=n, **kw)


def pot(ch, fn, **kw):
    return gc.GridPotential.from_function(ch, fn, **kw)


def test_ddc_of_norm_squared_is_identity():
    c = gc.ddc(pot(chart(10, center=(0.3 + 0.1j, -0.2j)), r2))
    assert np.max(np.abs(c.a11 - 1)) < 1e-12
    assert np.max(np.abs(c.a22 - 1)) < 1e-12
    assert np.max(np.abs(c.a12)) < 1e-12


def test_ddc_quadratic_offdiagonal():
    # Re(z1 conj z2) has d^2/dz1 dzbar2 = 1/2
    c = gc.ddc(pot(chart(8), lambda a, b: r2(a, b) + (a * np.conj(b)).real))
    assert np.max(np.abs(c.a12 - 0.5)) < 1e-12
    assert c.is_positive()


def test_pluriharmonic_not_psd():
    c = gc.ddc(pot(chart(8), lambda a, b: (a * a).real))
    assert np.max(np.abs(c.trace())) < 1e-9
    assert not c.is_positive(tol=-1e-9) or np.max(np.abs(c.a11)) < 1e-9
    # the stencil sees a pure pluriharmonic field as zero, so the strict PSD flag fails
    assert not c.is_positive(tol=-1e-12)


def test_log_norm_rank_one():
    ch = chart(12, center=(1.5 + 0j, 0j), half_width=0.5)
    c = gc.ddc(pot(ch, lambda a, b: 0.5 * np.log(r2(a, b))))
    det = c.a11 * c.a22 - np.abs(c.a12) ** 2
    scale = c.trace() ** 2
    # PSD and rank one up to O(h^2): det sits at zero within the stencil error
    assert np.all(c.trace() > 0)
    assert np.max(np.abs(det) / scale) < 5e-3


def test_log_norm_hessian_oracle():
    # d^2 (1/2) log |z|^2 / dz_j dzbar_k = (delta_jk |z|^2 - zbar_j z_k) / (2 |z|^4)
    errs = []
    for n in (8, 16):
        ch = chart(n, center=(1.5 + 0j, 0.5j), half_width=0.25)
        c = gc.ddc(pot(ch, lambda a, b: 0.5 * np.log(r2(a, b))))
        z1, z2 = ch.coords(ghost=False)
        R = r2(z1, z2)
        want11 = abs(z2) ** 2 / (2 * R**2)
        want12 = -np.conj(z1) * z2 / (2 * R**2)
        e = max(np.max(np.abs(c.a11 - want11) / np.abs(want11)), np.max(np.abs(c.a12 - want12) / np.abs(want12)))
        errs.append(e)
    assert errs[1] < 1e-2
    assert np.log2(errs[0] / errs[1]) > 1.7  # second order, pre-asymptotic at these sizes


@pytest.mark.parametrize("S_fn, T_fn, density", [
    (r2, r2, 2.0),
    (lambda a, b: abs(a) ** 2, lambda a, b: abs(b) ** 2, 1.0),
    (lambda a, b: abs(a) ** 2, lambda a, b: abs(a) ** 2, 0.0),
])
def test_wedge_closed_forms(S_fn, T_fn, density):
    ch = chart(6)
    m = gc.wedge(gc.ddc(pot(ch, S_fn)), gc.ddc(pot(ch, T_fn)))
    per_vol = m.masses / (gc.WEDGE_CONST * ch.h**4)
    assert np.max(np.abs(per_vol - density)) < 1e-10
    assert m.clipped == 0


def test_log_norm_squared_wedge_vanishes_on_annulus():
    ch = chart(16, center=(1.5 + 0j, 0j), half_width=0.5)
    S = gc.ddc(pot(ch, lambda a, b: 0.5 * np.log(r2(a, b))))
    dens = gc.wedge_density(S, S)
    assert np.max(np.abs(dens)) < 1e-2 * np.max(S.trace() ** 2)


def test_wedge_symmetric_exact():
    rng = np.random.default_rng(0)
    ch = chart(8)
    c1, c2 = rng.normal(size=2)
    S = gc.ddc(pot(ch, lambda a, b: r2(a, b) + c1 * abs(a) ** 4))
    T = gc.ddc(pot(ch, lambda a, b: np.log(1 + r2(a, b)) + c2 * (a * b).real))
    assert np.array_equal(gc.wedge(S, T).masses, gc.wedge(T, S).masses)
    assert np.array_equal(gc.wedge_density(S, T), gc.wedge_density(T, S))


def test_lelong_box_mass():
    # dd^c log|z1| is the current of z1 = 0; against dd^c|z|^2 on the box it has mass 4 * 2/pi
    ch = chart(16)
    m = gc.wedge(gc.ddc(pot(ch, lambda a, b: np.log(abs(a)))), gc.ddc(pot(ch, r2)))
    signed = m.total - m.clipped
    assert signed == pytest.approx(8 / np.pi, rel=2e-3)


def test_fubini_study_chart_mass():
    # one polydisk chart of P^2 carries a third of the total Monge-Ampere mass
    ch = gc.GridChart("P2", (0,), n=24)
    u = pot(ch, lambda a, b: 0.5 * np.log(1 + r2(a, b)))
    S = gc.ddc(u)
    m = gc.wedge(S, S).weighted(gc.disk_weight(ch))
    assert m.total == pytest.approx(1 / 3, rel=0.01)


def test_richardson_order_smooth_fixture():
    vals = []
    for n in (12, 24, 48):
        ch = chart(n)
        S = gc.ddc(pot(ch, lambda a, b: r2(a, b) + 0.3 * abs(a) ** 4))
        vals.append(gc.wedge(S, S).total)
    order = np.log2((vals[0] - vals[1]) / (vals[1] - vals[2]))
    assert order >= 1.8


def test_canonical_approximant_plateau():
    ch = chart(16)
    u = pot(ch, lambda a, b: np.log(abs(a)))
    u5 = gc.canonical_approximant(u, 2.0)
    z1, _ = ch.coords()
    assert np.all(u5.values[np.abs(z1) < np.exp(-2)] == -2.0)
    assert np.array_equal(gc.canonical_approximant(pot(ch, r2), 1.0).values, pot(ch, r2).values)
    with pytest.raises(ValueError):
        gc.canonical_approximant(u, 0)


def test_approximants_decrease_in_j():
    ch = chart(8)
    u = pot(ch, lambda a, b: np.log(r2(a, b)))
    prev = None
    for j in (0.5, 1, 2, 4):
        v = gc.canonical_approximant(u, j).values
        if prev is not None:
            assert np.all(v <= prev)
        prev = v


def test_mu_j_bounded_full_measure():
    ch = chart(10)
    u = pot(ch, lambda a, b: r2(a, b) - 3)
    T = gc.ddc(pot(ch, r2))
    assert gc.mu_j(u, T, 10).total == pytest.approx(gc.wedge(gc.ddc(u), T).total, rel=1e-14)
    prof = gc.mass_profile(u, T, [4, 8])
    assert all(r["residual"] == 0 for r in prof["rows"])
    assert prof["rows"][0]["mu_j"] == prof["rows"][1]["mu_j"]


def test_single_point_pole_profile():
    # log ||z|| has zero Monge-Ampere mass against a smooth form; limit is the analytic box mass
    ch = chart(24)
    u = pot(ch, lambda a, b: 0.5 * np.log(r2(a, b)))
    T = gc.ddc(pot(ch, r2))
    prof = gc.mass_profile(u, T, [1, 2, 3, 4, 6, 8])
    assert prof["monotone"] and prof["verdict"] == "E-plausible"
    last = prof["rows"][-1]
    assert last["residual"] < 0.01 * (last["mu_j"] + last["residual"])
    mp.mp.dps = 20
    box = mp.quad(lambda s: (mp.sqrt(mp.pi / s) * mp.erf(mp.sqrt(s))) ** 4, [0, 1, mp.inf])
    assert last["mu_j"] == pytest.approx(float(2 / mp.pi**2 * box), rel=2e-3)


def test_divisor_pole_negative_control():
    # log|z1| charges the line z1 = 0, so the mass on {u <= -j} does not decay
    ch = chart(32, half_width=0.5)
    u = pot(ch, lambda a, b: np.log(abs(a)))
    prof = gc.mass_profile(u, gc.ddc(pot(ch, r2)), [0.75, 1.0, 1.5, 2.0, 2.5])
    assert prof["verdict"] == "not-E-plausible"
    assert all(r["residual"] > 0.3 * (r["mu_j"] + r["residual"]) for r in prof["rows"])


def test_mass_profile_requires_increasing():
    ch = chart(4)
    with pytest.raises(ValueError):
        gc.mass_profile(pot(ch, r2), gc.ddc(pot(ch, r2)), [2, 1])


def test_plurifine_locality():
    ch = chart(12)
    fu = lambda a, b: r2(a, b) + 0.2 * abs(a) ** 4  # noqa: E731
    fv = lambda a, b: 0.6 + 0.4 * (a.real) + 0.1 * abs(b) ** 2  # noqa: E731
    u, v = pot(ch, fu), pot(ch, fv)
    w = gc.GridPotential(ch, np.maximum(u.values, v.values))
    T = gc.ddc(pot(ch, r2))
    d1 = gc.wedge_density(gc.ddc(u), T)
    d2 = gc.wedge_density(gc.ddc(w), T)
    above = u.values > v.values
    # cells whose whole 3^4 stencil neighbourhood has u > v
    from numpy.lib.stride_tricks import sliding_window_view

    safe = sliding_window_view(above, (3, 3, 3, 3)).all(axis=(-4, -3, -2, -1))
    assert safe.any()
    assert np.array_equal(d1[safe], d2[safe])
    interface = above[1:-1, 1:-1, 1:-1, 1:-1] & ~safe
    gap = abs(np.sum(np.where(above[1:-1, 1:-1, 1:-1, 1:-1], d1 - d2, 0.0)))
    assert gap <= interface.sum() * np.max(np.abs(d1 - d2)) + 1e-12


def test_exclusion_bounds_reported():
    ch = gc.GridChart("P2", (0,), n=16, exclusions=((0j, 0j, 1.0),))
    u = pot(ch, lambda a, b: 0.5 * np.log(r2(a, b)))
    m = gc.wedge(gc.ddc(u), gc.ddc(pot(ch, r2)))
    assert m.excluded.sum() > 0
    r0 = gc.EXCLUSION_CELLS * ch.h
    assert m.excluded_bound == pytest.approx(2 * r0**2, rel=1e-9)
    assert m.summary()["excluded_cells"] == int(m.excluded.sum())


def test_chart_mismatch():
    S = gc.ddc(pot(chart(4), r2))
    T = gc.ddc(pot(chart(6), r2))
    with pytest.raises(ValueError):
        gc.wedge(S, T)


def test_nan_rejected():
    ch = chart(4)
    with pytest.raises(ValueError):
        gc.GridPotential(ch, np.full((6,) * 4, np.nan))


def test_psh_check():
    ch = chart(8)
    assert pot(ch, r2).psh_check()
    assert not pot(ch, lambda a, b: -r2(a, b)).psh_check()


def test_dump_roundtrip(tmp_path):
    ch = chart(4)
    vals = np.random.default_rng(2).normal(size=(4,) * 4)
    gc.dump_grid(vals, ch, tmp_path / "cells", {"tag": 1})
    back, side = gc.load_grid(tmp_path / "cells")
    assert np.array_equal(back, vals)
    assert side["h"] == ch.h and side["tag"] == 1
    assert (tmp_path / "cells.bin").stat().st_size == vals.size * 8


def test_heatmap_files(tmp_path):
    img = np.arange(12.0).reshape(3, 4)
    csv, pgm = gc.write_heatmap(img, tmp_path / "h", {"n": 3})
    rows = [r for r in csv.read_text().splitlines() if not r.startswith("#")]
    assert len(rows) == 3 and rows[0].split(",")[1] == "1"
    raw = pgm.read_bytes()
    assert raw.startswith(b"P5\n4 3\n65535\n")
    data = np.frombuffer(raw[len(b"P5\n4 3\n65535\n"):], dtype=">u2")
    assert data[0] == 0 and data[-1] == 65535


def test_chart_lift_and_back():
    p = np.array([0.2 + 0.1j, 1.0, -0.5j])
    c, z = gc.chart_for_point("P2", p)
    assert c == (1,)
    ch = gc.GridChart("P2", c)
    assert sm.chordal(ch.lift(*z), p, "P2") < 1e-14
    assert gc.to_chart(ch, p) == pytest.approx(z)
    q = np.array([1.0, 0.5, 0.25, 4.0])
    c2, z2 = gc.chart_for_point("P1xP1", q)
    assert c2 == (0, 1)
    assert sm.chordal(gc.GridChart("P1xP1", c2).lift(*z2), q, "P1xP1") < 1e-14


def test_disk_weights_partition():
    ch = gc.GridChart("P2", (0,), n=16)
    w = gc.disk_weight(ch)
    area = (np.pi / 4) ** 2  # per unit box area, two unit disks
    assert w.mean() == pytest.approx(area, rel=0.02)
    assert w.min() >= 0 and w.max() <= 1


def test_pullback_mass_small_grid():
    e = zoo.get("quad-a3")
    nf = sm.NumericMap.from_map(e.map)
    errs = []
    for g in (16, 24):
        mc = gc.pullback_mass(nf, 1, 2.0, 1.0, poles=[np.array([1, 0, 0])], grid_n=g)
        errs.append(abs(mc.signed - 1.0))
        assert len(mc.per_chart) == 3
    # the 5% level is reached at 48 cells per axis (acceptance suite); here only the trend
    assert errs[1] < 0.6 * errs[0] and errs[1] < 0.1


@settings(max_examples=10, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_ddc_linear(c1, c2, c3):
    ch = chart(4)
    u = pot(ch, lambda a, b: c1 * abs(a) ** 4 + c2 * (a * np.conj(b)).real)
    v = pot(ch, lambda a, b: c3 * np.log(1 + r2(a, b)))
    lhs = gc.ddc(u + v)
    rhs = gc.ddc(u) + gc.ddc(v)
    scale = 1 + np.max(np.abs(u.values)) + np.max(np.abs(v.values))
    tol = 1e-12 * scale / ch.h**2
    assert np.max(np.abs(lhs.a11 - rhs.a11)) < tol
    assert np.max(np.abs(lhs.a12 - rhs.a12)) < tol


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3))
def test_wedge_bilinear_nonnegative(s, t):
    ch = chart(4)
    S = gc.ddc(pot(ch, lambda a, b: r2(a, b) + 0.2 * abs(a) ** 4))
    T = gc.ddc(pot(ch, lambda a, b: np.log(1 + r2(a, b))))
    ref = gc.wedge(S, T).masses
    got = gc.wedge(S.scaled(s), T.scaled(t)).masses
    assert np.allclose(got, s * t * ref, rtol=1e-12, atol=1e-300)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.5, 6), st.floats(0.1, 2))
def test_mu_j_monotone_cells(j, dj):
    # the drop is O(h): about 6% at h = 1/4, within the 2% budget from the default h = 1/12
    ch = chart(24)
    u = pot(ch, lambda a, b: 0.5 * np.log(r2(a, b)))
    T = gc.ddc(pot(ch, r2))
    m1, m2 = gc.mu_j(u, T, j), gc.mu_j(u, T, j + dj)
    assert m2.total >= m1.total - gc.CLIP_BUDGET * m2.total
