"""Weights, weighted energies and gradients, and the finite-dynamical-energy diagnostics.

For a weight chi and a relative potential phi <= 0 with approximants
phi_j = max(phi, -j), the level values are

    E_j    = int (-chi(phi_j)) [alpha + dd^c phi_j] ^ T
    grad_j = int chi'(phi_j) d phi_j ^ d^c phi_j ^ T

and for compactly supported modifications they satisfy
    E_j = int (-chi(phi_j)) alpha ^ T + grad_j.

Verdicts are evidence grades at fixed (h, N, M, jList); none of them is a proof.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from . import grid_currents as gc
from . import potentials as pt
from .surface_maps import factor_blocks

CAUCHY_TOL = 0.02
EXCLUSION_BUDGET = 0.5
CLAMP_SWEEP = (20.0, 40.0, 80.0)
CLAMP_THRESHOLD = 0.5 * np.log(10.0)
DEFAULT_JLIST = (1, 2, 4, 8, 16, 32)
SHELL_DIRECTIONS = 256
CHI_PRIME_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class Weight:
    """chi in the class W: identity, homogeneous -(-t)^p, or piecewise affine through (t_i, chi_i)."""

    kind: str = "identity"
    p: float = 1.0
    table: tuple = ()  # ((t, chi), ...), t ascending, last knot (0, 0)

    def __post_init__(self):
        if self.kind == "homogeneous" and not (0 < self.p <= 1):
            raise ValueError("homogeneous weight needs 0 < p <= 1")
        if self.kind == "piecewise":
            ts = [t for t, _ in self.table]
            if len(ts) < 2 or ts[-1] != 0 or self.table[-1][1] != 0 or any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError("piecewise table must ascend in t and end at (0, 0)")
        elif self.kind not in ("identity", "homogeneous"):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def parse(cls, spec) -> "Weight":
        """'t', 'p=0.5', or a dict with kind/p/table."""
        if isinstance(spec, Weight):
            return spec
        if isinstance(spec, dict):
            return cls(spec.get("kind", "identity"), float(spec.get("p", 1.0)),
                       tuple(tuple(map(float, r)) for r in spec.get("table", ())))
        s = str(spec).strip()
        if s in ("t", "identity"):
            return cls()
        if s.startswith("p="):
            return cls("homogeneous", float(s[2:]))
        raise ValueError(f"cannot parse weight {spec!r}")

    def chi(self, t):
        t = np.minimum(np.asarray(t, dtype=float), 0.0)
        if self.kind == "identity" or (self.kind == "homogeneous" and self.p == 1):
            return t
        if self.kind == "homogeneous":
            return -((-t) ** self.p)
        ts = np.array([r[0] for r in self.table])
        cs = np.array([r[1] for r in self.table])
        s0 = (cs[1] - cs[0]) / (ts[1] - ts[0])
        return np.where(t < ts[0], cs[0] + s0 * (t - ts[0]), np.interp(t, ts, cs))

    def dchi(self, t):
        t = np.minimum(np.asarray(t, dtype=float), 0.0)
        if self.kind == "identity" or (self.kind == "homogeneous" and self.p == 1):
            return np.ones_like(t)
        if self.kind == "homogeneous":
            # chi' blows up at 0 for p < 1; evaluate at |t| >= floor
            return self.p * np.maximum(-t, CHI_PRIME_FLOOR) ** (self.p - 1)
        ts = np.array([r[0] for r in self.table])
        cs = np.array([r[1] for r in self.table])
        slopes = np.diff(cs) / np.diff(ts)
        idx = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    def validate(self, n: int = 1000, t_min: float = -50.0) -> bool:
        """Class W by sampling: chi(0) = 0, increasing, convex, unbounded below."""
        t = np.linspace(t_min, 0.0, n)
        c = self.chi(t)
        d1 = np.diff(c)
        d2 = np.diff(c, 2)
        scale = max(1.0, float(np.max(np.abs(c))))
        return bool(abs(float(self.chi(0.0))) == 0.0 and np.all(d1 > 0) and np.all(d2 >= -1e-12 * scale)
                    and self.chi(-1e6) < self.chi(t_min))

    def to_dict(self):
        return {"kind": self.kind, "p": self.p, "table": [list(r) for r in self.table]}


# ---------------------------------------------------------------------------
# level functionals on one chart


def _cell_weights(u: gc.GridPotential, w):
    return 1.0 if w is None else w


def _signed_mass(S: gc.GridCurrent, T: gc.GridCurrent) -> np.ndarray:
    return gc.wedge_density(S, T) * gc.WEDGE_CONST * S.chart.h ** 4


def weighted_energy(u: gc.GridPotential, T: gc.GridCurrent, chi: Weight, j: float, w=None,
                    mask=None) -> float:
    """sum over cells of (-chi(u_j)) times the wedge cell mass of [alpha + dd^c u_j] ^ T."""
    uj = gc.canonical_approximant(u, j)
    meas = gc.wedge(gc.ddc(uj), T, exclude=False)
    vals = -chi.chi(uj.interior()) * meas.masses * _cell_weights(u, w)
    if mask is not None:
        vals = np.where(mask, vals, 0.0)
    return float(np.sum(vals))


def weighted_gradient(u: gc.GridPotential, T: gc.GridCurrent, chi: Weight, j: float, w=None,
                      mask=None) -> float:
    """sum over cells of chi'(u_j) times the cell mass of d u_j ^ d^c u_j ^ T."""
    uj = gc.canonical_approximant(u, j)
    G = gc.gradient_current(uj)
    dens = np.maximum(_signed_mass(G, T), 0.0)
    vals = chi.dchi(uj.interior()) * dens * _cell_weights(u, w)
    if mask is not None:
        vals = np.where(mask, vals, 0.0)
    return float(np.sum(vals))


def boundary_ring(chart: gc.GridChart, cells: int = 1) -> np.ndarray:
    """Mask of interior cells at least ``cells`` away from the box boundary."""
    n = chart.n
    i = np.arange(n)
    k = (i >= cells) & (i < n - cells)
    return k[:, None, None, None] & k[None, :, None, None] & k[None, None, :, None] & k[None, None, None, :]


def ibp_residual(u: gc.GridPotential, T: gc.GridCurrent, chi: Weight, j: float, ring: int = 1) -> dict:
    """Both sides of the integration-by-parts identity on one chart, signed cell masses.

    u must be a compactly supported modification inside the box; the boundary
    ring is dropped from all three integrals alike.
    """
    keep = boundary_ring(u.chart, ring)
    uj = gc.canonical_approximant(u, j)
    c = -chi.chi(uj.interior())
    lhs = float(np.sum(np.where(keep, c * _signed_mass(gc.ddc(uj), T), 0.0)))
    if u.background_values is None:
        alpha = gc.GridCurrent.constant(u.chart, 0.0, 0.0, 0j)
    else:
        alpha = gc.ddc(gc.GridPotential(u.chart, u.background_values))
    a_term = float(np.sum(np.where(keep, c * _signed_mass(alpha, T), 0.0)))
    g_term = float(np.sum(np.where(keep, chi.dchi(uj.interior()) * _signed_mass(gc.gradient_current(uj), T), 0.0)))
    rhs = a_term + g_term
    res = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)
    if lhs == rhs:
        res = 0.0
    return {"lhs": lhs, "alpha_term": a_term, "gradient_term": g_term, "residual": res, "h": u.chart.h}


# ---------------------------------------------------------------------------
# dynamical energy


@dataclass
class EnergyReport:
    direction: str  # "G+ vs T-" or "G- vs T+"
    weight: dict
    h: float
    grid_n: int
    N: int
    M: float
    jList: list
    energies: list
    gradients: list
    sup: float
    excluded_energy_bound: list
    excluded_mass_bound: float
    total_mass: float
    clipped: float
    ibp_residuals: list
    verdict: str  # finite-plausible | divergent | inconclusive
    evidence: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    def rows(self):
        for j, e, g, b in zip(self.jList, self.energies, self.gradients, self.excluded_energy_bound):
            yield [j, e, g, b]


def chart_cover(ambient: str) -> list[tuple]:
    """Charts whose unit polydisks partition the surface (up to measure zero)."""
    if ambient == "P2":
        return [(0,), (1,), (2,)]
    return [(0, 0), (0, 1), (1, 0), (1, 1)]


def local_potential(chart: gc.GridChart, weights):
    """Local potential sum_k v_k log ||lift_k|| of the class form in the chart."""
    blocks = factor_blocks(chart.ambient)

    def fn(z1, z2):
        X = chart.lift(z1, z2)
        return sum(float(v) * np.log(np.linalg.norm(X[..., list(b)], axis=-1)) for v, b in zip(weights, blocks))

    return fn


def lelong_estimate(green_fn, ambient: str, p, rng, radii=(1e-2, 1e-3), n_dirs: int = 8) -> float:
    """Slope of the potential against log distance near p, averaged over directions in the chart of p."""
    chart, zp = gc.chart_for_point(ambient, p)
    ch = gc.GridChart(ambient, chart)
    est = []
    for _ in range(n_dirs):
        d = rng.normal(size=2) + 1j * rng.normal(size=2)
        d /= np.linalg.norm(d)
        vals = []
        for r in radii:
            z = np.array(zp) + r * d
            vals.append(float(green_fn(ch.lift(z[0], z[1])[None, :])[0]))
        est.append((vals[0] - vals[1]) / np.log(radii[0] / radii[1]))
    return max(0.0, float(np.median(est)))


def _green_on_chart(fn, chart: gc.GridChart, chunk: int = 1 << 16) -> np.ndarray:
    z1, z2 = chart.coords(ghost=True)
    X = chart.lift(z1, z2).reshape(-1, len(sum(factor_blocks(chart.ambient), ())))
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], chunk):
        out[s:s + chunk] = fn(X[s:s + chunk])
    return out.reshape(z1.shape)


def _pole_terms(ch: gc.GridChart, poles, S: gc.GridCurrent, T: gc.GridCurrent, uj_int, chi: Weight, j):
    """Excluded-cell mask, mass bound and energy bound for the declared poles of one chart."""
    z1, z2 = ch.coords(ghost=False)
    r0 = gc.EXCLUSION_CELLS * ch.h
    lamS, lamT = gc._lambda_max(S), gc._lambda_max(T)
    mask = np.zeros(z1.shape, dtype=bool)
    mass_b = energy_b = 0.0
    for a, b, nu_u, nu_T in poles:
        r2 = np.abs(z1 - a) ** 2 + np.abs(z2 - b) ** 2
        ball = r2 < r0 ** 2
        if not ball.any():
            continue
        ring = ~ball & (r2 < 4 * r0 ** 2)
        if not ring.any():
            ring = ~ball
        lS, lT = max(float(np.max(lamS[ring])), 0.0), max(float(np.max(lamT[ring])), 0.0)
        mb = nu_u * nu_T + 2 * r0 ** 2 * (nu_u * lT + nu_T * lS) + 4 * lS * lT * r0 ** 4
        shell = float(np.min(uj_int[ring]))
        # mean of -chi(phi) over the ball of a log pole of slope nu_u is below -chi(shell - nu_u/2)
        energy_b += mb * float(-chi.chi(max(shell - nu_u / 2, -j)))
        mass_b += mb
        mask |= ball
    return mask, mass_b, energy_b


def _verdict(energies, bounds, clipped, total, excl_mass):
    ev = {}
    last, prev = energies[-1], energies[-2]
    rel = abs(last - prev) / max(abs(last), 1e-300)
    up_last, up_prev = last + bounds[-1], prev + bounds[-2]
    rel_up = abs(up_last - up_prev) / max(abs(up_last), 1e-300)
    ev.update(last_change=rel, upper_last_change=rel_up, clip_fraction=clipped / max(total, 1e-300),
              exclusion_fraction=bounds[-1] / max(abs(last), 1e-300))
    js = np.arange(len(energies))
    tail = slice(max(0, len(energies) - 3), None)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = float(np.polyfit(js[tail], np.log(np.maximum(np.abs(energies), 1e-300))[tail], 1)[0])
    ev["growth_slope_per_level"] = slope
    if clipped > gc.CLIP_BUDGET * total:
        return "inconclusive", ev | {"reason": "clipped-noise budget exceeded"}
    if bounds[-1] > EXCLUSION_BUDGET * max(abs(last), 1e-300) or excl_mass > EXCLUSION_BUDGET * total:
        return "inconclusive", ev | {"reason": "pole-exclusion budget exceeded"}
    if rel < CAUCHY_TOL and rel_up < CAUCHY_TOL:
        return "finite-plausible", ev | {"reason": "last two levels differ < 2% (included and upper envelope)"}
    if rel >= CAUCHY_TOL and slope > 0.1:
        return "divergent", ev | {"reason": "level values keep growing"}
    return "inconclusive", ev | {"reason": "level values not Cauchy"}


def _one_direction(data, sign, chi, grid_n, N, M, jList, seed):
    """E_chi of G^sign relative to T^-sign over the chart cover."""
    amb = data.ambient
    rng = np.random.default_rng(seed)
    if sign > 0:
        g_u = lambda X: pt.green_plus(data, X, N, M).values
        g_T = lambda X: pt.green_minus(data, X, N, M).values
        w_u, w_T = data.v_plus, data.v_minus
        poles_u, poles_T = data.I_plus, data.I_minus
    else:
        g_u = lambda X: pt.green_minus(data, X, N, M).values
        g_T = lambda X: pt.green_plus(data, X, N, M).values
        w_u, w_T = data.v_minus, data.v_plus
        poles_u, poles_T = data.I_minus, data.I_plus
    poles = [(p, lelong_estimate(g_u, amb, p, rng), 0.0) for p in poles_u]
    poles += [(p, 0.0, lelong_estimate(g_T, amb, p, rng)) for p in poles_T]
    E = np.zeros(len(jList))
    Gr = np.zeros(len(jList))
    EB = np.zeros(len(jList))
    ibp = np.zeros(len(jList))
    mass_b = clipped = total = 0.0
    sup = -np.inf
    for chart in chart_cover(amb):
        ch = gc.GridChart(amb, chart, n=grid_n)
        local = []
        for p, nu_u, nu_T in poles:
            z = gc.to_chart(ch, p)
            if z is not None and max(abs(c) for c in z) <= 1 + 2 * gc.EXCLUSION_CELLS * ch.h:
                local.append((complex(z[0]), complex(z[1]), nu_u, nu_T))
        u_vals = _green_on_chart(g_u, ch)
        t_vals = _green_on_chart(g_T, ch)
        sup = max(sup, float(np.max(u_vals)))
        bg_u = gc.GridPotential.from_function(ch, local_potential(ch, w_u)).values
        bg_T = gc.GridPotential.from_function(ch, local_potential(ch, w_T)).values
        u = gc.GridPotential(ch, np.minimum(u_vals, 0.0), "eigenclass", bg_u)
        T = gc.ddc(gc.GridPotential(ch, t_vals, "eigenclass", bg_T))
        wt = gc.disk_weight(ch)
        for k, j in enumerate(jList):
            uj = gc.canonical_approximant(u, j)
            S = gc.ddc(uj)
            mask, mb, eb = _pole_terms(ch, local, S, T, uj.interior(), chi, j)
            keep = ~mask
            meas = _signed_mass(S, T)
            E[k] += float(np.sum(np.where(keep, -chi.chi(uj.interior()) * np.maximum(meas, 0.0) * wt, 0.0)))
            Gr[k] += float(np.sum(np.where(keep, chi.dchi(uj.interior()) *
                                           np.maximum(_signed_mass(gc.gradient_current(uj), T), 0.0) * wt, 0.0)))
            EB[k] += eb
            if k == len(jList) - 1:
                mass_b += mb
                clipped += float(-np.sum(np.where(keep & (meas < 0), meas * wt, 0.0)))
                total += float(np.sum(np.where(keep, np.maximum(meas, 0.0) * wt, 0.0)))
            # global IBP: cover weights form a partition of unity, so boundary terms cancel in the continuum
            c = -chi.chi(uj.interior())
            alpha = gc.ddc(gc.GridPotential(ch, bg_u))
            ibp[k] += float(np.sum(np.where(keep, (c * (meas - _signed_mass(alpha, T))
                                                   - chi.dchi(uj.interior()) * _signed_mass(gc.gradient_current(uj), T)) * wt, 0.0)))
    ibp_rel = [float(abs(r) / max(abs(e), 1e-12)) for r, e in zip(ibp, E)]
    verdict, ev = _verdict(list(E), list(EB), clipped, total, mass_b)
    direction = "G+ vs T-" if sign > 0 else "G- vs T+"
    notes = [f"poles excluded within r0 = {gc.EXCLUSION_CELLS:g} h; Lelong estimates " +
             ", ".join(f"{nu_u:.3g}/{nu_T:.3g}" for _, nu_u, nu_T in poles),
             "expected total mass {T+}.{T-} = 1"]
    return EnergyReport(direction, chi.to_dict(), 2.0 / grid_n, grid_n, N, M, list(jList), E.tolist(), Gr.tolist(),
                        float(np.max(E)), EB.tolist(), mass_b, total, clipped, ibp_rel, verdict, ev, notes)


def dynamical_energy_report(data: pt.InvariantClassData, weight="t", grid_n: int = 24, N: int = pt.DEFAULT_N,
                            M: float = pt.DEFAULT_M, jList=DEFAULT_JLIST, seed: int = 0) -> tuple[EnergyReport, EnergyReport]:
    """Energy of G+ against T- and of G- against T+ on the polydisk chart cover."""
    if data.inverse is None:
        raise pt.Unsupported("the two-sided energy report needs G-, hence an explicit inverse")
    chi = Weight.parse(weight)
    jList = list(jList)
    if len(jList) < 2 or any(b <= a for a, b in zip(jList, jList[1:])):
        raise ValueError("jList must increase and have at least two levels")
    return (_one_direction(data, +1, chi, grid_n, N, M, jList, seed),
            _one_direction(data, -1, chi, grid_n, N, M, jList, seed))


def two_sided_verdict(plus: EnergyReport, minus: EnergyReport) -> str:
    if plus.verdict == minus.verdict == "finite-plausible":
        return "finite-plausible"
    if "divergent" in (plus.verdict, minus.verdict):
        return "divergent"
    return "inconclusive"


# ---------------------------------------------------------------------------
# criteria from pointwise Green values


def _offset_points(ambient, p, delta, rng, k=4):
    chart, zp = gc.chart_for_point(ambient, p)
    ch = gc.GridChart(ambient, chart)
    out = []
    for _ in range(k):
        d = rng.normal(size=2) + 1j * rng.normal(size=2)
        z = np.array(zp) + delta * d / np.linalg.norm(d)
        out.append(ch.lift(z[0], z[1]))
    return np.array(out)


def clamp_trend(values) -> str:
    """finite | infinite | undetermined from Green values at M = 20, 40, 80."""
    d = -np.diff(np.asarray(values, dtype=float))  # decrease per sweep step
    if np.all(np.abs(d) <= CLAMP_THRESHOLD):
        return "finite"
    if d[-1] > CLAMP_THRESHOLD and np.all(d >= -1e-9):
        return "infinite"
    return "undetermined"


def e1_criterion(data: pt.InvariantClassData, N: int = pt.DEFAULT_N, Ms=CLAMP_SWEEP, h: float = 2.0 / 24,
                 seed: int = 0) -> dict:
    """Finiteness of G+ on I- and of G- on I+ by clamp sweeps.

    Points that are themselves poles of the potential being evaluated are
    replaced by points at distance 4h in their chart.
    """
    rng = np.random.default_rng(seed)
    out = {"plus_on_I_minus": [], "minus_on_I_plus": [], "Ms": list(Ms), "N": N, "h": h}
    sides = [("plus_on_I_minus", data.I_minus, pt.green_plus, data.I_plus)]
    if data.inverse is not None:
        sides.append(("minus_on_I_plus", data.I_plus, pt.green_minus, data.I_minus))
    for key, pts_, fn, own_poles in sides:
        for p in pts_:
            x = pt.unit_lift(np.atleast_2d(p), data.ambient)
            offset = any(float(np.min(gc_chordal(p, q, data.ambient))) < 1e-9 for q in own_poles)
            X = _offset_points(data.ambient, p, gc.EXCLUSION_CELLS * h, rng) if offset else x
            vals = [float(np.mean(fn(data, X, N, M).values)) for M in Ms]
            out[key].append({"point": [[complex(c).real, complex(c).imag] for c in x[0]], "values": vals,
                             "offset": offset, "class": clamp_trend(vals)})
    classes = [r["class"] for k in ("plus_on_I_minus", "minus_on_I_plus") for r in out[k]]
    if data.inverse is None:
        out["verdict"] = "undetermined"
        out["note"] = "G- needs an explicit inverse"
    elif all(c == "finite" for c in classes):
        out["verdict"] = "finite"
    elif any(c == "infinite" for c in classes):
        out["verdict"] = "infinite"
    else:
        out["verdict"] = "undetermined"
    return out


def gc_chordal(p, q, ambient):
    from .surface_maps import chordal

    return chordal(pt.unit_lift(np.atleast_2d(p), ambient), q, ambient)


def shell_directions(n: int = SHELL_DIRECTIONS, seed: int = 0) -> np.ndarray:
    """Quasi-random unit vectors in C^2 (scrambled Sobol through the normal quantile)."""
    u = qmc.Sobol(4, scramble=True, seed=seed).random(n)
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    d = g[:, :2] + 1j * g[:, 2:]
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def spherical_mean(data: pt.InvariantClassData, p, ts, sign: int = -1, N: int = pt.DEFAULT_N,
                   M: float = pt.DEFAULT_M, n_dirs: int = SHELL_DIRECTIONS, seed: int = 0) -> dict:
    """Mean of G^sign over the chart spheres |z - p| = e^t, with per-shell clamp counts."""
    chart, zp = gc.chart_for_point(data.ambient, p)
    ch = gc.GridChart(data.ambient, chart)
    dirs = shell_directions(n_dirs, seed)
    fn = pt.green_minus if sign < 0 else pt.green_plus
    means, starved, clamped = [], [], []
    for t in ts:
        z = np.array(zp)[None, :] + np.exp(t) * dirs
        ev = fn(data, ch.lift(z[:, 0], z[:, 1]), N, M)
        means.append(float(np.mean(ev.values)))
        clamped.append(float(ev.clamped_fraction))
        starved.append(bool(np.all(ev.pole_hit | (ev.values <= -M))))
    return {"t": list(map(float, ts)), "mean": means, "clamped_fraction": clamped, "starved": starved}


def ep_criterion(data: pt.InvariantClassData, q: float, ts=None, N: int = pt.DEFAULT_N, M: float = pt.DEFAULT_M,
                 n_dirs: int = SHELL_DIRECTIONS, seed: int = 0) -> dict:
    """Profile |t|^(q-1) |m-(t)| on spheres around each point of I+, with a bounded/unbounded fit."""
    if data.inverse is None:
        raise pt.Unsupported("m-(t) needs G-, hence an explicit inverse")
    ts = np.linspace(-25, -1, 49) if ts is None else np.asarray(ts, dtype=float)
    out = {"q": q, "N": N, "M": M, "points": []}
    verdicts = []
    for p in data.I_plus:
        sm = spherical_mean(data, p, ts, -1, N, M, n_dirs, seed)
        keep = [i for i, s in enumerate(sm["starved"]) if not s]
        truncated = len(keep) < len(ts)
        t = np.array(sm["t"])[keep]
        m = np.array(sm["mean"])[keep]
        prof = np.abs(t) ** (q - 1) * np.abs(m)
        deep = t <= np.median(t)
        if deep.sum() >= 3 and np.all(prof[deep] > 0):
            slope = float(np.polyfit(np.log(np.abs(t[deep])), np.log(prof[deep]), 1)[0])
        else:
            slope = 0.0
        v = "bounded" if slope < 0.1 else "unbounded"
        verdicts.append(v)
        out["points"].append({"point": [[complex(c).real, complex(c).imag] for c in p], "t": t.tolist(),
                              "mean": m.tolist(), "profile": prof.tolist(), "loglog_slope": slope,
                              "truncated": truncated, "verdict": v})
    out["verdict"] = "bounded" if all(v == "bounded" for v in verdicts) else "unbounded"
    if out["verdict"] == "bounded":
        out["conclusion"] = f"Gamma+ in E^p for all p < {q} (evidence grade)"
    return out
