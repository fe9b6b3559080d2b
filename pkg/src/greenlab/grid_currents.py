"""Discrete pluripotential operators on affine-chart lattices.

A chart is a box in C^2 with complex coordinates (z1, z2), sampled on a 4-D
real lattice with axes (x1, y1, x2, y2) and spacing h. Cells are centred on
lattice points with offsets (i + 1/2) h - w, so n cells per axis tile the box
of half-width w exactly; potentials carry one ghost layer for the stencils.

Normalisation: dd^c = (i/pi) d dbar. A (1,1)-form is stored through the
Hermitian matrix a_{jk} = d^2 u / dz_j dzbar_k; the mixed product of two such
forms has mass (4/pi^2) (a11 b22 + a22 b11 - 2 Re(a12 conj b12)) per unit
4-volume. With this, dd^c log|z| has mass 1 across a disk and the
Fubini-Study form has total Monge-Ampere mass 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .surface_maps import factor_blocks

WEDGE_CONST = 4.0 / np.pi**2
CLIP_BUDGET = 0.02
EXCLUSION_CELLS = 4.0


@dataclass(frozen=True)
class GridChart:
    """Box {|Re z_k - Re c_k|, |Im z_k - Im c_k| <= w} in the affine chart ``chart`` of ``ambient``.

    ``chart`` lists, per projective factor, which homogeneous coordinate is set to 1
    (P^2: one index; P^1 x P^1: two indices, one per factor).
    """

    ambient: str
    chart: tuple
    center: tuple = (0j, 0j)
    half_width: float = 1.0
    n: int = 16
    exclusions: tuple = ()  # (z1, z2, coefficient A) pole declarations in chart coordinates

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    def axis(self, k: int, ghost: bool = True) -> np.ndarray:
        """Real coordinates along axis k in (x1, y1, x2, y2)."""
        c = self.center[k // 2]
        off = c.real if k % 2 == 0 else c.imag
        idx = np.arange(-1, self.n + 1) if ghost else np.arange(self.n)
        return off - self.half_width + (idx + 0.5) * self.h

    def coords(self, ghost: bool = True):
        """Complex (z1, z2) on the lattice, shape (m,)*4 each (m = n + 2 with ghosts)."""
        x1, y1, x2, y2 = (self.axis(k, ghost) for k in range(4))
        z1 = x1[:, None, None, None] + 1j * y1[None, :, None, None]
        z2 = x2[None, None, :, None] + 1j * y2[None, None, None, :]
        return np.broadcast_to(z1, z1.shape[:2] + z2.shape[2:]), np.broadcast_to(z2, z1.shape[:2] + z2.shape[2:])

    def lift(self, z1, z2) -> np.ndarray:
        """Homogeneous lifts of chart points, shape z1.shape + (ncoords,)."""
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        one = np.ones_like(z1)
        if self.ambient == "P2":
            k = self.chart[0]
            cols = [z1, z2]
            cols.insert(k, one)
            return np.stack(cols, axis=-1)
        kx, ky = self.chart
        xs = [z1, one] if kx == 1 else [one, z1]
        ys = [z2, one] if ky == 1 else [one, z2]
        return np.stack(xs + ys, axis=-1)

    def to_dict(self) -> dict:
        return {"ambient": self.ambient, "chart": list(self.chart),
                "center": [[complex(c).real, complex(c).imag] for c in self.center],
                "half_width": self.half_width, "n": self.n, "h": self.h,
                "exclusions": [[[complex(a).real, complex(a).imag], [complex(b).real, complex(b).imag], A]
                               for a, b, A in self.exclusions]}


def chart_for_point(ambient: str, p) -> tuple:
    """Chart setting the largest coordinate of each factor to 1, and the point's chart coordinates."""
    p = np.asarray(p, dtype=complex)
    chart, zs = [], []
    for b in factor_blocks(ambient):
        sub = p[list(b)]
        k = int(np.argmax(np.abs(sub)))
        chart.append(k)
        zs += list(np.delete(sub / sub[k], k))
    return tuple(chart), tuple(zs)


def to_chart(chart: GridChart, p):
    """Chart coordinates (z1, z2) of a projective point, or None if outside the chart."""
    p = np.asarray(p, dtype=complex)
    zs = []
    for b, k in zip(factor_blocks(chart.ambient), chart.chart):
        sub = p[list(b)]
        if abs(sub[k]) < 1e-14 * np.abs(sub).max():
            return None
        zs += list(np.delete(sub / sub[k], k))
    return tuple(zs)


# ---------------------------------------------------------------------------
# potentials


@dataclass
class GridPotential:
    chart: GridChart
    values: np.ndarray  # shape (n+2,)*4, ghost layer included
    background: str = "zero"  # zero | fubini-study | eigenclass
    background_values: np.ndarray | None = None
    clamped: int = 0

    def __post_init__(self):
        m = self.chart.n + 2
        if self.values.shape != (m,) * 4:
            raise ValueError(f"expected shape {(m,) * 4}, got {self.values.shape}")
        if np.isnan(self.values).any():
            raise ValueError("NaN in potential values")

    @classmethod
    def from_function(cls, chart: GridChart, fn, background: str = "zero", bg_fn=None,
                      clamp: float | None = None, slab: int = 4) -> "GridPotential":
        """Sample fn(z1, z2) (vectorised over arrays) on the ghosted lattice, slab by slab along x1."""
        m = chart.n + 2
        vals = np.empty((m,) * 4)
        bg = np.empty((m,) * 4) if bg_fn is not None else None
        x1 = chart.axis(0)
        y1, x2, y2 = chart.axis(1), chart.axis(2), chart.axis(3)
        z2 = x2[:, None] + 1j * y2[None, :]
        for s in range(0, m, slab):
            xs = x1[s:s + slab]
            Z1 = np.broadcast_to((xs[:, None] + 1j * y1[None, :])[:, :, None, None], (len(xs), m, m, m))
            Z2 = np.broadcast_to(z2[None, None, :, :], (len(xs), m, m, m))
            vals[s:s + slab] = fn(Z1, Z2)
            if bg is not None:
                bg[s:s + slab] = bg_fn(Z1, Z2)
        n_clamped = 0
        if clamp is not None:
            low = ~(vals >= -clamp)
            n_clamped = int(low.sum())
            vals[low] = -clamp
        return cls(chart, vals, background, bg, n_clamped)

    def total(self) -> np.ndarray:
        return self.values if self.background_values is None else self.values + self.background_values

    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1, 1:-1, 1:-1]

    def __add__(self, other: "GridPotential") -> "GridPotential":
        _same_chart(self.chart, other.chart)
        return GridPotential(self.chart, self.values + other.values, self.background, self.background_values)

    def scaled(self, c: float) -> "GridPotential":
        return GridPotential(self.chart, c * self.values, self.background,
                             None if self.background_values is None else self.background_values)

    def psh_check(self, tol: float = 1e-6, quantile: float = 0.99) -> bool:
        """Trace of the discrete complex Hessian >= -h^2 tol on the given fraction of interior cells."""
        cur = ddc(self)
        tr = (cur.a11 + cur.a22).ravel()
        return bool(np.mean(tr >= -self.chart.h**2 * tol) >= quantile)


def _same_chart(a: GridChart, b: GridChart):
    if (a.ambient, a.chart, a.center, a.half_width, a.n) != (b.ambient, b.chart, b.center, b.half_width, b.n):
        raise ValueError("chart mismatch")


# ---------------------------------------------------------------------------
# currents


@dataclass
class GridCurrent:
    """Per-cell Hermitian matrix [[a11, a12], [conj a12, a22]] of a (1,1)-form."""

    chart: GridChart
    a11: np.ndarray
    a22: np.ndarray
    a12: np.ndarray

    def positivity(self, tol: float = 0.0) -> np.ndarray:
        """PSD flag per cell: both diagonal entries and the determinant nonnegative (up to tol)."""
        det = self.a11 * self.a22 - np.abs(self.a12) ** 2
        return (self.a11 >= -tol) & (self.a22 >= -tol) & (det >= -tol)

    def is_positive(self, tol: float = 0.0) -> bool:
        return bool(self.positivity(tol).all())

    def trace(self) -> np.ndarray:
        return self.a11 + self.a22

    def __add__(self, other: "GridCurrent") -> "GridCurrent":
        _same_chart(self.chart, other.chart)
        return GridCurrent(self.chart, self.a11 + other.a11, self.a22 + other.a22, self.a12 + other.a12)

    def scaled(self, c: float) -> "GridCurrent":
        return GridCurrent(self.chart, c * self.a11, c * self.a22, c * self.a12)

    @classmethod
    def constant(cls, chart: GridChart, a11=1.0, a22=1.0, a12=0j) -> "GridCurrent":
        shp = (chart.n,) * 4
        return cls(chart, np.full(shp, float(a11)), np.full(shp, float(a22)), np.full(shp, complex(a12)))


def _d2(u, ax, h):
    s = [slice(1, -1)] * 4
    lo, hi = list(s), list(s)
    lo[ax], hi[ax] = slice(0, -2), slice(2, None)
    return (u[tuple(hi)] - 2 * u[tuple(s)] + u[tuple(lo)]) / h**2


def _dmix(u, a, b, h):
    def sl(da, db):
        s = [slice(1, -1)] * 4
        s[a] = slice(1 + da, u.shape[a] - 1 + da)
        s[b] = slice(1 + db, u.shape[b] - 1 + db)
        return tuple(s)

    return (u[sl(1, 1)] - u[sl(1, -1)] - u[sl(-1, 1)] + u[sl(-1, -1)]) / (4 * h**2)


def ddc(u: GridPotential) -> GridCurrent:
    """alpha + dd^c u on interior cells via centred second differences."""
    v = u.total()
    h = u.chart.h
    a11 = 0.25 * (_d2(v, 0, h) + _d2(v, 1, h))
    a22 = 0.25 * (_d2(v, 2, h) + _d2(v, 3, h))
    a12 = 0.25 * (_dmix(v, 0, 2, h) + _dmix(v, 1, 3, h) + 1j * (_dmix(v, 0, 3, h) - _dmix(v, 1, 2, h)))
    return GridCurrent(u.chart, a11, a22, a12)


def gradient_current(u: GridPotential) -> GridCurrent:
    """The form d u ^ d^c u, matrix phi_j conj(phi_k) with phi_j = du/dz_j (centred differences)."""
    v = u.values
    h = u.chart.h

    def d1(ax):
        s = [slice(1, -1)] * 4
        lo, hi = list(s), list(s)
        lo[ax], hi[ax] = slice(0, -2), slice(2, None)
        return (v[tuple(hi)] - v[tuple(lo)]) / (2 * h)

    p1 = 0.5 * (d1(0) - 1j * d1(1))
    p2 = 0.5 * (d1(2) - 1j * d1(3))
    return GridCurrent(u.chart, np.abs(p1) ** 2, np.abs(p2) ** 2, p1 * np.conj(p2))


# ---------------------------------------------------------------------------
# measures


@dataclass
class GridMeasure:
    chart: GridChart
    masses: np.ndarray  # per cell, >= 0
    clipped: float = 0.0
    excluded: np.ndarray | None = None  # mask of excluded cells
    excluded_bound: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(np.sum(self.masses, dtype=np.float64))

    @property
    def reliable(self) -> bool:
        return self.clipped <= CLIP_BUDGET * max(self.total, 1e-300)

    def restricted(self, mask: np.ndarray) -> "GridMeasure":
        return replace(self, masses=np.where(mask, self.masses, 0.0))

    def weighted(self, w: np.ndarray) -> "GridMeasure":
        return replace(self, masses=self.masses * w)

    def summary(self) -> dict:
        return {"total": self.total, "clipped": self.clipped, "excluded_cells": int(0 if self.excluded is None else self.excluded.sum()),
                "excluded_bound": self.excluded_bound, "reliable": self.reliable, "h": self.chart.h}


def wedge_density(S: GridCurrent, T: GridCurrent) -> np.ndarray:
    return S.a11 * T.a22 + S.a22 * T.a11 - 2.0 * np.real(S.a12 * np.conj(T.a12))


def _lambda_max(T: GridCurrent) -> np.ndarray:
    return 0.5 * (T.a11 + T.a22) + np.sqrt(0.25 * (T.a11 - T.a22) ** 2 + np.abs(T.a12) ** 2)


def _exclusion_bound(ch: GridChart, T: GridCurrent) -> tuple[np.ndarray, float]:
    """Excluded cells and the summed per-pole bound A * 2 r0^2 * lambda_max(T on the ring r0..2 r0)."""
    if not ch.exclusions:
        return np.zeros((ch.n,) * 4, dtype=bool), 0.0
    z1, z2 = ch.coords(ghost=False)
    r0 = EXCLUSION_CELLS * ch.h
    lam = _lambda_max(T)
    excl = np.zeros(z1.shape, dtype=bool)
    bound = 0.0
    for a, b, A in ch.exclusions:
        r2 = np.abs(z1 - a) ** 2 + np.abs(z2 - b) ** 2
        ball = r2 < r0**2
        if not ball.any():
            continue
        ring = ~ball & (r2 < 4 * r0**2)
        lam_ring = float(np.max(lam[ring])) if ring.any() else float(np.max(lam))
        excl |= ball
        bound += abs(A) * 2 * r0**2 * max(lam_ring, 0.0)
    return excl, bound


def wedge(S: GridCurrent, T: GridCurrent, exclude: bool = True) -> GridMeasure:
    """Cell masses of S ^ T; negative densities are clipped and the clipped mass recorded.

    Cells near declared poles are dropped; their mass is bounded by
    A * 2 r0^2 * lambda_max(T) per pole, the mass of A dd^c log|z - p| against
    a form dominated by lambda_max(T) dd^c |z|^2 over the ball of radius r0
    (lambda_max read off the ring r0 < |z - p| < 2 r0).
    """
    _same_chart(S.chart, T.chart)
    ch = S.chart
    dens = wedge_density(S, T) * WEDGE_CONST * ch.h**4
    neg = dens < 0
    clipped = float(-np.sum(dens[neg]))
    dens = np.where(neg, 0.0, dens)
    excl, bound = None, 0.0
    if exclude and ch.exclusions:
        excl, bound = _exclusion_bound(ch, T)
        dens = np.where(excl, 0.0, dens)
    return GridMeasure(ch, dens, clipped, excl, bound)


def canonical_approximant(u: GridPotential, j: float) -> GridPotential:
    """max(u, -j) pointwise."""
    if j <= 0:
        raise ValueError("level j must be positive")
    return GridPotential(u.chart, np.maximum(u.values, -j), u.background, u.background_values)


def mu_j(u: GridPotential, T: GridCurrent, j: float) -> GridMeasure:
    """1_{u > -j} [alpha + dd^c max(u, -j)] ^ T."""
    meas = wedge(ddc(canonical_approximant(u, j)), T)
    return meas.restricted(u.interior() > -j)


def mass_profile(u: GridPotential, T: GridCurrent, j_list, threshold: float = 0.01) -> dict:
    """(j, mass of mu_j, mass of [alpha + dd^c u_j] ^ T on {u <= -j}) and a membership verdict."""
    j_list = list(j_list)
    if any(b <= a for a, b in zip(j_list, j_list[1:])):
        raise ValueError("jList must increase")
    rows = []
    inner = u.interior()
    for j in j_list:
        full = wedge(ddc(canonical_approximant(u, j)), T)
        on = float(np.sum(full.masses[inner > -j]))
        off = float(np.sum(full.masses[inner <= -j]))
        rows.append({"j": j, "mu_j": on, "residual": off, "clipped": full.clipped})
    last = rows[-1]
    tot = last["mu_j"] + last["residual"]
    verdict = "E-plausible" if tot > 0 and last["residual"] < threshold * tot else "not-E-plausible"
    totals = [r["mu_j"] for r in rows]
    noise = max([r["clipped"] for r in rows] + [0.0])
    monotone = all(b >= a - CLIP_BUDGET * max(totals[-1], 1e-300) for a, b in zip(totals, totals[1:]))
    return {"rows": rows, "verdict": verdict, "h": u.chart.h, "monotone": monotone, "noise": noise}


def disk_weight(chart: GridChart, radius: float = 1.0, sub: int = 8) -> np.ndarray:
    """Fraction of each cell inside the polydisk {|z1| <= r, |z2| <= r} (subsampled per complex axis)."""
    h = chart.h
    frac = []
    for k in (0, 1):
        xs = chart.axis(2 * k, ghost=False)
        ys = chart.axis(2 * k + 1, ghost=False)
        o = (np.arange(sub) + 0.5) / sub - 0.5
        X = xs[:, None, None, None] + h * o[None, None, :, None]
        Y = ys[None, :, None, None] + h * o[None, None, None, :]
        frac.append(np.mean(X**2 + Y**2 <= radius**2, axis=(2, 3)))
    return frac[0][:, :, None, None] * frac[1][None, None, :, :]


# ---------------------------------------------------------------------------
# dumps


def dump_grid(values: np.ndarray, chart: GridChart, path, meta: dict | None = None) -> Path:
    """Flat little-endian float64 binary plus a JSON sidecar (chart, shape, h)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(values, dtype="<f8").tofile(path.with_suffix(".bin"))
    side = {"chart": chart.to_dict(), "shape": list(values.shape), "dtype": "float64-le", "h": chart.h}
    side.update(meta or {})
    path.with_suffix(".json").write_text(json.dumps(side, indent=1))
    return path.with_suffix(".bin")


def load_grid(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    vals = np.fromfile(path.with_suffix(".bin"), dtype="<f8").reshape(side["shape"])
    return vals, side


def marginal(masses: np.ndarray, keep: str = "z1") -> np.ndarray:
    """2-D heatmap of a 4-D cell field: sum over the other complex axis."""
    return masses.sum(axis=(2, 3)) if keep == "z1" else masses.sum(axis=(0, 1))


def write_heatmap(img: np.ndarray, stem, meta: dict | None = None) -> tuple[Path, Path]:
    """CSV of the raw values and a 16-bit binary PGM scaled to the value range."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv = stem.with_suffix(".csv")
    with open(csv, "w") as fh:
        if meta:
            fh.write("# " + json.dumps(meta) + "\n")
        for row in img:
            fh.write(",".join(f"{v:.10g}" for v in row) + "\n")
    lo, hi = float(np.min(img)), float(np.max(img))
    scaled = np.zeros(img.shape, dtype=">u2") if hi <= lo else ((img - lo) / (hi - lo) * 65535).round().astype(">u2")
    pgm = stem.with_suffix(".pgm")
    with open(pgm, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode())
        fh.write(scaled.tobytes())
    return csv, pgm


# ---------------------------------------------------------------------------
# cohomological mass check on P^2


def log_norm_iterate(nf, X: np.ndarray, n: int) -> np.ndarray:
    """log ||F^n(X)|| for lifts X (..., 3), iterating with renormalisation (no stripping)."""
    shp = X.shape[:-1]
    X = X.reshape(-1, X.shape[-1])
    nx = np.linalg.norm(X, axis=1)
    X = X / nx[:, None]
    L = np.log(nx)
    d = nf.degree.matrix[0][0]
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(n):
            Y = nf(X)
            ny = np.linalg.norm(Y, axis=1)
            L = d * L + np.log(ny)
            X = Y / ny[:, None]
    return L.reshape(shp)


def iterated_indeterminacy(nf, I_plus, n: int, seed: int = 0) -> list[np.ndarray]:
    """I(f^n) as the union of f^-k(I+) for k < n (valid for 1-stable maps)."""
    from .spectral import preimages
    from .surface_maps import dedupe, normalize

    rng = np.random.default_rng(seed)
    level = [normalize(p, nf.ambient) for p in I_plus]
    out = list(level)
    for _ in range(n - 1):
        nxt = []
        for w in level:
            nxt += preimages(nf, w, rng)
        level = dedupe(nxt, nf.ambient, 1e-8)
        out += level
    return dedupe(out, nf.ambient, 1e-8)


@dataclass
class MassCheck:
    n: int
    expected: float
    included: float
    signed: float
    excluded_bound: float
    clipped: float
    grid_n: int
    h: float
    seconds: float
    per_chart: list

    @property
    def rel_error(self) -> float:
        return abs(self.included - self.expected) / self.expected

    @property
    def reliable(self) -> bool:
        return self.clipped <= CLIP_BUDGET * self.included


def pullback_mass(nf, n: int, lam: float, expected: float, poles=(), grid_n: int = 32) -> MassCheck:
    """Mass of lam^-n (f^n)^* omega ^ omega on P^2 over the three unit-polydisk charts.

    Each chart k covers {|x_k| = max}; cells are weighted by their overlap with
    the unit polydisk so the three pieces partition P^2 up to measure zero.
    Cells within 4h of a declared pole are excluded and bounded separately.
    """
    import time

    if nf.ambient != "P2":
        raise ValueError("mass check is implemented on P2")
    t0 = time.monotonic()
    inc = signed = bound = clip = 0.0
    per = []
    for k in range(3):
        base = GridChart("P2", (k,), n=grid_n)
        ex = []
        for p in poles:
            z = to_chart(base, p)
            if z is not None and max(abs(c) for c in z) <= 1.0 + EXCLUSION_CELLS * base.h:
                ex.append((complex(z[0]), complex(z[1]), 1.0))
        ch = replace(base, exclusions=tuple(ex))
        u = GridPotential.from_function(ch, lambda a, b: log_norm_iterate(nf, ch.lift(a, b), n) / lam**n)
        v = GridPotential.from_function(ch, lambda a, b: log_norm_iterate(nf, ch.lift(a, b), 0), background="fubini-study")
        S, T = ddc(u), ddc(v)
        w = disk_weight(ch)
        m = wedge(S, T).weighted(w)
        keep = ~m.excluded if m.excluded is not None else True
        sg = float(np.sum(np.where(keep, wedge_density(S, T), 0.0) * w) * WEDGE_CONST * ch.h**4)
        per.append({"chart": k, "included": m.total, "signed": sg, "excluded_bound": m.excluded_bound,
                    "clipped": m.clipped, "poles": len(ex)})
        inc += m.total
        signed += sg
        bound += m.excluded_bound
        clip += m.clipped
    return MassCheck(n, expected, inc, signed, bound, clip, grid_n, 2.0 / grid_n, time.monotonic() - t0, per)
