"""Indeterminacy points, exceptional curves and their images, spurious-point flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import elimination as el
from .surface_maps import (
    COORDS,
    PARAMS,
    HomogeneousMap,
    Indeterminate,
    NumericMap,
    _output_blocks,
    _terms,
    chordal,
    dedupe,
    factor_blocks,
    jacobian_determinant,
    ncoords,
    normalize,
)

CONTRACT_TOL = 1e-8
N_CURVE_SAMPLES = 5
SPURIOUS_TOL = 1e-9
MAX_SOLVE_DEGREE = 6


class DegenerateMap(ValueError):
    """Common zero set of a factor's components is a curve."""


class NotContracted:
    """Sentinel: the curve's image is not a point."""

    def __repr__(self):
        return "NotContracted"


NOT_CONTRACTED = NotContracted()


class ClassesMissing(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# indeterminacy


def _sympy_components(f: HomogeneousMap):
    gens = sp.symbols(COORDS[f.ambient] + PARAMS)
    loc = {str(g): g for g in gens}
    return [sp.sympify(str(c).replace("^", "**"), locals=loc) for c in f.components]


def _charts(ambient):
    """Affine charts as (coordinate template, free symbols)."""
    u, v = sp.symbols("u v")
    if ambient == "P2":
        return [((u, v, 1), (u, v)), ((u, 1, 0), (u,)), ((1, 0, 0), ())]
    out = []
    for xs, fx in (((u, 1), (u,)), ((1, 0), ())):
        for ys, fy in (((v, 1), (v,)), ((1, 0), ())):
            out.append((xs + ys, fx + fy))
    return out


def exact_indeterminacy(f: HomogeneousMap) -> list[tuple]:
    """Common zeros with coordinates in the parameter field (sympy), via affine charts."""
    gens = sp.symbols(COORDS[f.ambient])
    comps = _sympy_components(f)
    pts = []
    for block in _output_blocks(f.ambient):
        eqs_all = [comps[k] for k in block]
        for template, free in _charts(f.ambient):
            eqs = [sp.expand(e.subs(dict(zip(gens, template)), simultaneous=True)) for e in eqs_all]
            eqs = [e for e in eqs if e != 0]
            if not free:
                if not eqs:
                    pts.append(tuple(sp.sympify(t) for t in template))
                continue
            if not eqs:
                raise DegenerateMap("components vanish on a whole chart")
            sols = sp.solve(eqs, list(free), dict=True)
            for s in sols:
                if any(x not in s for x in free):
                    raise DegenerateMap("map not stripped / degenerate: curve of common zeros")
                pt = tuple(sp.simplify(sp.sympify(t).subs(s)) for t in template)
                if pt not in pts:
                    pts.append(pt)
    return pts


def _block_degrees(f: HomogeneousMap):
    return [tuple(r) for r in f.degree.matrix]


def numeric_indeterminacy(nf: NumericMap, seed: int = 0, tol: float = 1e-9) -> list[np.ndarray]:
    amb = nf.ambient
    rng = np.random.default_rng(seed)
    frames = el.random_frame(amb, rng)
    scale = nf.coefficient_norm()
    found = []
    if amb == "P2":
        d = nf.degree.matrix[0][0]
        if d > MAX_SOLVE_DEGREE:
            raise ValueError(f"numeric solving limited to degree <= {MAX_SOLVE_DEGREE}")
        eqs = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
        sols = el.solve_pair(el.pair_from_functions(nf, frames, eqs, (d, d), d * d))
        found = el.solutions_to_points(nf, frames, sols)
    else:
        for b, (m, n) in zip(_output_blocks(amb), _block_degrees_numeric(nf)):
            eqs = np.zeros((2, 4), dtype=complex)
            eqs[0, b[0]] = 1
            eqs[1, b[1]] = 1
            sols = el.solve_pair(el.pair_from_functions(nf, frames, eqs, (n, n), 2 * m * n))
            found += el.solutions_to_points(nf, frames, sols)
    keep = []
    for p in cluster_mean(found, amb):
        lift = _unit_lift(p, amb)
        val = nf(lift)
        if any(np.linalg.norm(val[list(b)]) < tol * scale * 10 for b in _output_blocks(amb)):
            keep.append(p)
    return dedupe(keep, amb, 1e-7)


def cluster_mean(points, ambient, radius: float = 1e-4) -> list[np.ndarray]:
    """Average clusters of nearby normalised points (approximations of a multiple root)."""
    groups: list[list[np.ndarray]] = []
    for p in points:
        p = normalize(p, ambient)
        for g in groups:
            if chordal(p, g[0], ambient) < radius:
                g.append(p)
                break
        else:
            groups.append([p])
    return [normalize(np.mean(g, axis=0), ambient) for g in groups]


def _block_degrees_numeric(nf: NumericMap):
    return [tuple(r) for r in nf.degree.matrix]


def _unit_lift(p, ambient):
    p = np.array(p, dtype=complex)
    for b in factor_blocks(ambient):
        p[list(b)] /= np.linalg.norm(p[list(b)])
    return p


def indeterminacy_points(f: HomogeneousMap, params: dict | None = None, exact: bool | None = None, seed: int = 0):
    """Common zeros of the components of each output factor.

    Exact maps (free parameters allowed) are solved symbolically chart by chart;
    numeric maps, or ``exact=False``, go through bivariate elimination.
    Returns sympy tuples in exact mode, normalised numpy points otherwise.
    """
    if exact is None:
        exact = f.exact and not params
    if exact:
        if not f.exact:
            raise ValueError("exact solving needs an exact map")
        return exact_indeterminacy(f)
    return numeric_indeterminacy(NumericMap.from_map(f, params), seed=seed)


# ---------------------------------------------------------------------------
# exceptional curves


def _factor_terms(factor, ambient, params):
    """(exponents, coefficients) of a polynomial factor (flint or sympy Poly) in the coordinates."""
    nc = ncoords(ambient)
    acc: dict = {}
    if hasattr(factor, "to_dict"):
        for exps, coef in _terms(factor).items():
            val = complex(int(coef.p)) / int(coef.q)
            for name, e in zip(PARAMS, exps[nc:]):
                if e:
                    val *= complex(params[name]) ** e
            acc[exps[:nc]] = acc.get(exps[:nc], 0) + val
    else:
        for m, c in factor.terms():
            acc[tuple(m)] = acc.get(tuple(m), 0) + complex(c)
    e = np.array(list(acc.keys()), dtype=np.int64).reshape(-1, nc)
    return e, np.array(list(acc.values()), dtype=complex)


def _eval_terms(e, c, pts):
    pts = np.atleast_2d(pts)
    return np.array([c @ np.prod(p[None, :] ** e, axis=1) for p in pts])


def sample_curve(factor, ambient: str, params: dict | None, k: int, rng, all_roots: bool = False) -> list[np.ndarray]:
    """Generic points on the curve {factor = 0}, by slicing along a random chart direction.

    One point per slice (k slices), or every root of each slice with ``all_roots``.
    """
    e, c = _factor_terms(factor, ambient, params or {})
    frames = el.random_frame(ambient, rng)
    pts = []
    attempts = 0
    slices = 0
    while (slices if all_roots else len(pts)) < k and attempts < 20 * k:
        attempts += 1
        # slice: fix one chart coordinate, solve for the other
        fix_u = rng.integers(2) == 0
        t0 = complex(rng.normal(), rng.normal())
        deg = int(e.sum(axis=1).max()) if ambient == "P2" else int(e.max())
        K = max(deg, 1) + 1
        w = np.exp(2j * np.pi * np.arange(K) / K) * 1.3
        if fix_u:
            lift, _, _ = el.chart_lift(ambient, frames, np.full(K, t0), w)
        else:
            lift, _, _ = el.chart_lift(ambient, frames, w, np.full(K, t0))
        vals = _eval_terms(e, c, lift)
        coef = np.fft.fft(vals) / K / (1.3 ** np.arange(K))
        coef = el._trim(coef)
        if len(coef) < 2:
            continue
        for r in np.roots(coef[::-1]):
            if fix_u:
                lift, _, _ = el.chart_lift(ambient, frames, [t0], [r])
            else:
                lift, _, _ = el.chart_lift(ambient, frames, [r], [t0])
            pts.append(normalize(lift[0], ambient))
            if not all_roots:
                break
        slices += 1
    return pts


def contracted_image(f: HomogeneousMap, factor, params: dict | None = None, seed: int = 0, tol: float = CONTRACT_TOL):
    """Image point of the curve {factor = 0} if it is collapsed, else NOT_CONTRACTED."""
    nf = NumericMap.from_map(f, params)
    rng = np.random.default_rng(seed)
    images = []
    budget = 4
    while len(images) < N_CURVE_SAMPLES and budget > 0:
        for p in sample_curve(factor, f.ambient, params, N_CURVE_SAMPLES - len(images), rng):
            try:
                images.append(_evaluate_nf(nf, p))
            except Indeterminate:
                continue
        budget -= 1
    if len(images) < N_CURVE_SAMPLES:
        raise RuntimeError("could not sample the curve away from indeterminacy")
    d = max(float(chordal(images[0], q, f.ambient)) for q in images[1:])
    return images[0] if d < tol else NOT_CONTRACTED


def contracted_components(f: HomogeneousMap, factor, params: dict | None = None, seed: int = 0,
                          slices: int = 8, tol: float = CONTRACT_TOL) -> list[np.ndarray]:
    """Points to which components of {factor = 0} collapse.

    Every root of several random slices is mapped; images are clustered and a
    cluster with at least N_CURVE_SAMPLES members (from distinct slices) is a
    collapsed component. This also splits factors that are reducible only up to
    rounding, as happens for maps with floating-point coefficients.
    """
    nf = NumericMap.from_map(f, params)
    rng = np.random.default_rng(seed)
    images = []
    for p in sample_curve(factor, f.ambient, params, slices, rng, all_roots=True):
        try:
            images.append(_evaluate_nf(nf, p))
        except Indeterminate:
            continue
    groups: list[list[np.ndarray]] = []
    for q in images:
        for g in groups:
            if chordal(q, g[0], f.ambient) < tol:
                g.append(q)
                break
        else:
            groups.append([q])
    return [g[0] for g in groups if len(g) >= N_CURVE_SAMPLES]


def _evaluate_nf(nf, p, tol=1e-12):
    lift = _unit_lift(p, nf.ambient)
    val = nf(lift)
    scale = nf.coefficient_norm()
    for b in factor_blocks(nf.ambient):
        if np.linalg.norm(val[list(b)]) < tol * scale:
            raise Indeterminate(p)
    return normalize(val, nf.ambient)


# ---------------------------------------------------------------------------
# the bundle


@dataclass
class ExceptionalCurve:
    factor: str
    multiplicity: int
    images: list[np.ndarray]  # empty: not contracted

    @property
    def image(self):
        return self.images[0] if len(self.images) == 1 else None


@dataclass
class SingularLoci:
    ambient: str
    indeterminacy: list[np.ndarray]
    indeterminacy_exact: list[tuple] | None = None
    curves: list[ExceptionalCurve] = field(default_factory=list)
    spurious_plus: list[bool] | None = None
    spurious_minus: list[bool] | None = None
    image_classes: list[tuple[int, int]] | None = None

    @property
    def contracted_points(self) -> list[np.ndarray]:
        return dedupe([p for c in self.curves for p in c.images], self.ambient, 1e-7)

    def to_dict(self) -> dict:
        enc = lambda p: [[complex(z).real, complex(z).imag] for z in p]  # noqa: E731
        return {
            "ambient": self.ambient,
            "indeterminacy": [enc(p) for p in self.indeterminacy],
            "indeterminacy_exact": None if self.indeterminacy_exact is None else [[str(z) for z in p] for p in self.indeterminacy_exact],
            "exceptional_curves": [
                {"factor": c.factor, "multiplicity": c.multiplicity, "images": [enc(p) for p in c.images]}
                for c in self.curves
            ],
            "contracted_points": [enc(p) for p in self.contracted_points],
            "spurious_plus": self.spurious_plus,
            "spurious_minus": self.spurious_minus,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def table(self) -> str:
        fmt = lambda p: "[" + " : ".join(f"{complex(z).real:+.6g}{complex(z).imag:+.6g}i" for z in p) + "]"  # noqa: E731
        lines = [f"ambient {self.ambient}", "indeterminacy (I+):"]
        lines += [f"  {fmt(p)}" for p in self.indeterminacy] or ["  (none)"]
        lines.append("critical factors:")
        for c in self.curves:
            tgt = ", ".join(fmt(p) for p in c.images) if c.images else "not contracted"
            lines.append(f"  {c.factor}  (mult {c.multiplicity}) -> {tgt}")
        lines.append("contracted images (I-):")
        lines += [f"  {fmt(p)}" for p in self.contracted_points] or ["  (none)"]
        return "\n".join(lines)


def singular_loci(f: HomogeneousMap, params: dict | None = None, seed: int = 0) -> SingularLoci:
    exact_pts = None
    if f.exact:
        exact_pts = exact_indeterminacy(f)
        if f.params:
            if params is None:
                raise KeyError("numeric parameter values needed for the numeric loci")
            num_pts = [normalize(np.array([complex(sp.N(sp.sympify(z).subs(params))) for z in p]), f.ambient) for p in exact_pts]
        else:
            num_pts = [normalize(np.array([complex(sp.N(z)) for z in p]), f.ambient) for p in exact_pts]
    else:
        num_pts = numeric_indeterminacy(NumericMap.from_map(f, params), seed=seed)
    curves = []
    _, facs = jacobian_determinant(f)
    for fac, mult in facs:
        imgs = contracted_components(f, fac, params, seed=seed)
        curves.append(ExceptionalCurve(str(fac.as_expr() if hasattr(fac, "as_expr") else fac), int(mult), imgs))
    return SingularLoci(f.ambient, num_pts, exact_pts, curves)


# ---------------------------------------------------------------------------
# spurious points


def image_curve_class(f: HomogeneousMap, p, params=None, radius: float = 1e-4, samples: int = 64, max_degree: int = 6):
    """(deg of first projection, deg of second projection) of the curve f(p) on P^1 x P^1.

    The blown-up point is replaced by a circle of directions of the given radius;
    the image of each factor is fitted by the lowest-degree rational function of
    the direction that interpolates it.
    """
    nf = NumericMap.from_map(f, params)
    p = _unit_lift(p, "P1xP1")
    # directions: d = xi * e1 + e2 in the tangent space spanned by the two factors
    t1 = np.array([-np.conj(p[1]), np.conj(p[0]), 0, 0])
    t2 = np.array([0, 0, -np.conj(p[3]), np.conj(p[2])])
    xi = 1.7 * np.exp(2j * np.pi * (np.arange(samples) + 0.37) / samples)
    lifts = p[None, :] + radius * (xi[:, None] * t1[None, :] + t2[None, :]) / np.sqrt(1 + np.abs(xi[:, None]) ** 2)
    vals = nf(lifts)
    degs = []
    for b in factor_blocks("P1xP1"):
        w = vals[:, list(b)]
        degs.append(_rational_degree(xi, w, max_degree))
    return tuple(degs)


def _rational_degree(xi, w, max_degree, rel=1e-2):
    """Smallest m with A(xi) w1 - B(xi) w0 = 0 for polynomials of degree <= m."""
    w = w / np.linalg.norm(w, axis=1, keepdims=True)
    for m in range(max_degree + 1):
        V = np.vander(xi / 1.7, m + 1, increasing=True)
        M = np.hstack([V * w[:, 1:2], -V * w[:, 0:1]])
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] < rel * s[0] or (m == 0 and s[-1] < rel):
            return m
    return max_degree + 1


def spurious_flags(loci: SingularLoci, class_plus, class_minus, f: HomogeneousMap | None = None,
                   inverse: HomogeneousMap | None = None, params=None, tol: float = SPURIOUS_TOL):
    """Flags per I+ point (and per I- point when the inverse is known).

    On P^2 every flag is False. On P^1 x P^1 the class of f(p) is paired with
    the invariant class (v0, v1): pairing = v0 deg(pr1) + v1 deg(pr2).
    """
    if class_plus is None or class_minus is None:
        raise ClassesMissing("invariant classes not computed; run potentials.invariant_classes first")
    if loci.ambient == "P2":
        loci.spurious_plus = [False] * len(loci.indeterminacy)
        loci.spurious_minus = [False] * len(loci.contracted_points)
        return loci.spurious_plus, loci.spurious_minus
    if f is None:
        raise ValueError("the map is needed to classify points on P^1 x P^1")
    vp = np.asarray(class_plus, dtype=float)
    vm = np.asarray(class_minus, dtype=float)
    plus, classes = [], []
    for p in loci.indeterminacy:
        cls = image_curve_class(f, p, params)
        classes.append(cls)
        plus.append(bool(cls[0] * vp[0] + cls[1] * vp[1] <= tol * max(1.0, vp.max())))
    minus = None
    if inverse is not None:
        minus = []
        for q in loci.contracted_points:
            cls = image_curve_class(inverse, q, params)
            minus.append(bool(cls[0] * vm[0] + cls[1] * vm[1] <= tol * max(1.0, vm.max())))
    loci.spurious_plus, loci.spurious_minus, loci.image_classes = plus, minus, classes
    return plus, minus
