"""Homogeneous rational self-maps of P^2 and P^1 x P^1.

Exact maps live in a flint multivariate ring whose generators are the
homogeneous coordinates followed by the symbolic parameters ``a, b, c, s``.
Numeric maps (complex coefficients, no parameters) store their components as
``{exponent tuple: complex}`` dictionaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import permutations

import flint
import numpy as np
import sympy as sp

COORDS = {"P2": ("x", "y", "z"), "P1xP1": ("x0", "x1", "y0", "y1")}
PARAMS = ("a", "b", "c", "s")

# residual threshold for accepting a numeric common factor
NUMERIC_FACTOR_TOL = 1e-9
# chordal distance below which two numeric points are the same
POINT_TOL = 1e-9

# 62-bit prime with p = 1 (mod 4), so that sqrt(-1) exists mod p
MOD_PRIME = 4611686018427387817
MOD_SQRT_M1 = 120863620846201794


class AmbientMismatch(ValueError):
    pass


class ZeroMapError(ArithmeticError):
    """Composite vanishes identically: the image of g lies in the indeterminacy of f."""


class Indeterminate(ArithmeticError):
    def __init__(self, point):
        super().__init__(f"map is indeterminate at {np.round(point, 6)}")
        self.point = point


def ring(ambient: str):
    return flint.fmpq_mpoly_ctx.get(COORDS[ambient] + PARAMS, "degrevlex")


def ncoords(ambient: str) -> int:
    return len(COORDS[ambient])


def factor_blocks(ambient: str) -> list[tuple[int, ...]]:
    """Coordinate index blocks, one per projective factor."""
    return [(0, 1, 2)] if ambient == "P2" else [(0, 1), (2, 3)]


# ---------------------------------------------------------------------------
# cohomology bookkeeping


@dataclass(frozen=True)
class CohomologyAction:
    """Degree (P^2) or bidegree matrix (P^1 x P^1); row k is the bidegree of output factor k."""

    matrix: tuple[tuple[int, ...], ...]

    @classmethod
    def of(cls, m) -> "CohomologyAction":
        m = np.atleast_2d(np.asarray(m, dtype=object))
        return cls(tuple(tuple(int(v) for v in row) for row in m))

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    def __matmul__(self, other: "CohomologyAction") -> "CohomologyAction":
        a = np.array(self.matrix, dtype=object)
        b = np.array(other.matrix, dtype=object)
        return CohomologyAction.of(a.dot(b))

    @property
    def scalar(self) -> int:
        """Single degree summary: the degree on P^2, the sum of bidegrees on P^1 x P^1."""
        return int(sum(sum(r) for r in self.matrix))

    def spectral_radius(self) -> float:
        m = self.as_array()
        if m.shape == (1, 1):
            return float(m[0, 0])
        tr, det = np.trace(m), np.linalg.det(m)
        disc = tr * tr - 4 * det
        if disc >= 0:
            return float((tr + np.sqrt(disc)) / 2)
        return float(np.max(np.abs(np.linalg.eigvals(m))))

    def __str__(self):
        if len(self.matrix) == 1:
            return str(self.matrix[0][0])
        return str([list(r) for r in self.matrix])


# ---------------------------------------------------------------------------
# coefficient conversions


def to_fmpq(value) -> flint.fmpq:
    if isinstance(value, flint.fmpq):
        return value
    if isinstance(value, (int, np.integer)):
        return flint.fmpq(int(value))
    fr = Fraction(value) if not isinstance(value, str) else Fraction(value)
    return flint.fmpq(int(fr.numerator), int(fr.denominator))


def _is_exact_number(v) -> bool:
    if isinstance(v, (int, np.integer, Fraction, flint.fmpq)):
        return True
    if isinstance(v, str):
        try:
            Fraction(v)
            return True
        except ValueError:
            return False
    return False


def _mod_of_fraction(fr: Fraction) -> int:
    den = fr.denominator % MOD_PRIME
    if den == 0:
        raise ZeroDivisionError("denominator vanishes modulo the working prime")
    return fr.numerator % MOD_PRIME * pow(den, -1, MOD_PRIME) % MOD_PRIME


def _mod_of_complex(c: complex) -> int:
    re = _mod_of_fraction(Fraction(float(c.real)))
    im = _mod_of_fraction(Fraction(float(c.imag)))
    return (re + im * MOD_SQRT_M1) % MOD_PRIME


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HomogeneousMap:
    """Lifted components of a map of P^2 (3 components) or P^1 x P^1 (2 + 2 components).

    ``components`` are flint polynomials when ``exact`` is true, otherwise dicts
    ``{coordinate exponent tuple: complex}``.
    """

    ambient: str
    components: tuple
    stripped: bool = False
    raw_degree: CohomologyAction | None = None
    exact: bool = True
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.ambient not in COORDS:
            raise ValueError(f"unknown ambient {self.ambient!r}")
        want = 3 if self.ambient == "P2" else 4
        if len(self.components) != want:
            raise ValueError(f"{self.ambient} maps need {want} components")
        if all(_is_zero(c) for c in self.components):
            raise ZeroMapError("all components vanish")
        # triggers the homogeneity checks
        self.degree  # noqa: B018

    # -- degree bookkeeping -------------------------------------------------
    @cached_property
    def degree(self) -> CohomologyAction:
        rows = []
        for block in _output_blocks(self.ambient):
            degs = {_bidegree(self.components[k], self.ambient) for k in block if not _is_zero(self.components[k])}
            if len(degs) != 1:
                raise ValueError(f"components are not homogeneous of a common degree: {degs}")
            rows.append(degs.pop())
        return CohomologyAction.of(rows)

    @property
    def params(self) -> set[str]:
        if not self.exact:
            return set()
        nc = ncoords(self.ambient)
        used = set()
        for c in self.components:
            for exps in _terms(c):
                used.update(PARAMS[i] for i, e in enumerate(exps[nc:]) if e)
        return used

    # -- numeric evaluation ---------------------------------------------------
    def numeric_terms(self, params: dict | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
        """(exponents, coefficients) per component, parameters specialised."""
        params = params or {}
        nc = ncoords(self.ambient)
        out = []
        for comp in self.components:
            if self.exact:
                acc: dict[tuple, complex] = {}
                for exps, coef in _terms(comp).items():
                    val = complex(Fraction(int(coef.p), int(coef.q)))
                    for name, e in zip(PARAMS, exps[nc:]):
                        if e:
                            if name not in params:
                                raise KeyError(f"parameter {name!r} needs a numeric value")
                            val *= complex(params[name]) ** e
                    acc[exps[:nc]] = acc.get(exps[:nc], 0) + val
            else:
                acc = dict(comp)
            if not acc:
                acc = {(0,) * nc: 0j}
            e = np.array(list(acc.keys()), dtype=np.int64).reshape(-1, nc)
            c = np.array(list(acc.values()), dtype=complex)
            out.append((e, c))
        return out

    def numeric(self) -> "NumericMap":
        return NumericMap.from_map(self)

    def __str__(self):
        return f"{self.ambient} map {[str(c) if self.exact else _dict_str(c) for c in self.components]}"


def _terms(poly) -> dict:
    return {tuple(int(e) for e in k): v for k, v in poly.to_dict().items()}


def _dict_str(d) -> str:
    return " + ".join(f"({c:.6g})*{e}" for e, c in d.items())


def _is_zero(c) -> bool:
    return c.is_zero() if hasattr(c, "is_zero") else (not c or all(v == 0 for v in c.values()))


def _output_blocks(ambient):
    return [(0, 1, 2)] if ambient == "P2" else [(0, 1), (2, 3)]


def _monomial_exps(c):
    return list(_terms(c).keys()) if hasattr(c, "to_dict") else list(c.keys())


def _bidegree(c, ambient) -> tuple[int, ...]:
    blocks = factor_blocks(ambient)
    degs = {tuple(sum(e[i] for i in b) for b in blocks) for e in _monomial_exps(c)}
    if len(degs) != 1:
        raise ValueError("component is not (bi)homogeneous")
    return degs.pop()


class NumericMap:
    """Vectorised evaluation of a specialised map on arrays of lifts, shape (m, ncoords)."""

    def __init__(self, ambient: str, terms, degree: CohomologyAction):
        self.ambient = ambient
        self.terms = terms
        self.degree = degree
        self._maxexp = max(int(e.max(initial=0)) for e, _ in terms)

    @classmethod
    def from_map(cls, f: HomogeneousMap, params: dict | None = None) -> "NumericMap":
        return cls(f.ambient, f.numeric_terms(params), f.degree)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        # powers[k][i] = pts[:, i] ** k
        powers = [np.ones_like(pts)]
        for _ in range(self._maxexp):
            powers.append(powers[-1] * pts)
        powers = np.stack(powers)  # (maxexp+1, m, n)
        out = np.empty((pts.shape[0], len(self.terms)), dtype=complex)
        for k, (e, c) in enumerate(self.terms):
            mon = np.ones((e.shape[0], pts.shape[0]), dtype=complex)
            for i in range(pts.shape[1]):
                mon *= powers[e[:, i], :, i]
            out[:, k] = c @ mon
        return out[0] if single else out

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        """Complex Jacobian of the lifted map, shape (m, ncomp, ncoords)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        m, n = pts.shape
        jac = np.zeros((m, len(self.terms), n), dtype=complex)
        for k, (e, c) in enumerate(self.terms):
            for i in range(n):
                ei = e.copy()
                coef = c * ei[:, i]
                ei[:, i] = np.maximum(ei[:, i] - 1, 0)
                mon = np.prod(pts[:, None, :] ** ei[None, :, :], axis=2)
                jac[:, k, i] = mon @ coef
        return jac

    def coefficient_norm(self) -> float:
        return float(max(np.abs(c).max(initial=0) for _, c in self.terms))


# ---------------------------------------------------------------------------
# construction


def from_exprs(exprs, ambient: str, label: str = "") -> HomogeneousMap:
    """Build an exact map from sympy expressions in the coordinate/parameter symbols.

    Rational-function coefficients in the parameters are cleared by one common
    denominator per output factor, which does not change the projective map.
    """
    ctx = ring(ambient)
    gens = sp.symbols(COORDS[ambient] + PARAMS)
    exprs = [sp.sympify(e) for e in exprs]
    if any(e.has(sp.I) for e in exprs) or any(e.atoms(sp.Float) for e in exprs):
        return numeric_from_exprs(exprs, ambient, label)
    comps = [None] * len(exprs)
    for block in _output_blocks(ambient):
        fracs = [sp.fraction(sp.together(exprs[k])) for k in block]
        den = sp.lcm([d for _, d in fracs]) if len(fracs) > 1 else fracs[0][1]
        for k, (num, d) in zip(block, fracs):
            poly = sp.Poly(sp.cancel(num * den / d), *gens, domain="QQ")
            comps[k] = ctx.from_dict({m: to_fmpq(Fraction(int(c.p), int(c.q))) for m, c in poly.terms()})
    return HomogeneousMap(ambient, tuple(comps), label=label)


def numeric_from_exprs(exprs, ambient: str, label: str = "") -> HomogeneousMap:
    gens = sp.symbols(COORDS[ambient])
    comps = []
    for e in exprs:
        poly = sp.Poly(sp.expand(e), *gens)
        comps.append({m: complex(c) for m, c in poly.terms() if complex(c) != 0})
    return HomogeneousMap(ambient, tuple(comps), exact=False, label=label)


def identity(ambient: str = "P2") -> HomogeneousMap:
    ctx = ring(ambient)
    g = ctx.gens()
    return HomogeneousMap(ambient, tuple(g[: ncoords(ambient)]), stripped=True, label="id")


def linear_map(matrix, ambient: str = "P2") -> HomogeneousMap:
    """Linear automorphism; on P^1 x P^1 pass a pair of 2x2 matrices."""
    if ambient == "P2":
        blocks = [(np.asarray(matrix, dtype=object), (0, 1, 2))]
    else:
        blocks = [(np.asarray(matrix[0], dtype=object), (0, 1)), (np.asarray(matrix[1], dtype=object), (2, 3))]
    entries = [v for m, _ in blocks for v in m.ravel()]
    if all(_is_exact_number(v) for v in entries):
        ctx = ring(ambient)
        g = ctx.gens()
        comps = []
        for m, b in blocks:
            for row in m:
                comps.append(sum((to_fmpq(v) * g[b[i]] for i, v in enumerate(row)), ctx.constant(0)))
        return HomogeneousMap(ambient, tuple(comps), stripped=True, label="linear")
    nc = ncoords(ambient)
    comps = []
    for m, b in blocks:
        for row in m:
            d = {}
            for i, v in enumerate(row):
                e = [0] * nc
                e[b[i]] = 1
                if complex(v) != 0:
                    d[tuple(e)] = complex(v)
            comps.append(d)
    return HomogeneousMap(ambient, tuple(comps), stripped=True, exact=False, label="linear")


def specialize(f: HomogeneousMap, params: dict) -> HomogeneousMap:
    """Substitute parameter values; exact rationals keep the map exact."""
    if not f.exact:
        return f
    if all(_is_exact_number(v) for v in params.values()):
        ctx = ring(f.ambient)
        g = list(ctx.gens())
        nc = ncoords(f.ambient)
        for name, v in params.items():
            g[nc + PARAMS.index(name)] = ctx.constant(to_fmpq(v))
        comps = tuple(c.compose(*g) for c in f.components)
        return HomogeneousMap(f.ambient, comps, stripped=False, label=f.label)
    terms = f.numeric_terms(params)
    comps = tuple({tuple(int(x) for x in e): complex(v) for e, v in zip(es, cs) if v != 0} for es, cs in terms)
    return HomogeneousMap(f.ambient, comps, stripped=False, exact=False, label=f.label)


# ---------------------------------------------------------------------------
# algebra


def _substitution(g: HomogeneousMap):
    ctx = ring(g.ambient)
    gens = ctx.gens()
    return list(g.components) + list(gens[ncoords(g.ambient):])


def compose(f: HomogeneousMap, g: HomogeneousMap, strip_factors: bool = True) -> HomogeneousMap:
    """f o g, with common factors stripped (per output factor on P^1 x P^1)."""
    if f.ambient != g.ambient:
        raise AmbientMismatch(f"{f.ambient} vs {g.ambient}")
    raw = f.degree @ g.degree
    if f.exact and g.exact:
        subs = _substitution(g)
        comps = tuple(c.compose(*subs) for c in f.components)
    else:
        comps = _numeric_compose(f, g)
    for block in _output_blocks(f.ambient):
        if all(_is_zero(comps[k]) for k in block):
            raise ZeroMapError("composite vanishes identically: g maps into the indeterminacy of f")
    h = HomogeneousMap(f.ambient, comps, stripped=False, raw_degree=raw, exact=f.exact and g.exact)
    return strip(h) if strip_factors else h


def strip(f: HomogeneousMap) -> HomogeneousMap:
    """Remove the common factor of the components of each output factor."""
    if f.exact:
        comps = list(f.components)
        for block in _output_blocks(f.ambient):
            g = None
            for k in block:
                if not comps[k].is_zero():
                    g = comps[k] if g is None else g.gcd(comps[k])
            if g is not None and not _coord_constant(g, f.ambient):
                for k in block:
                    comps[k] = comps[k] / g
        return HomogeneousMap(f.ambient, tuple(comps), stripped=True, raw_degree=f.raw_degree, label=f.label)
    comps = _numeric_strip(f)
    return HomogeneousMap(f.ambient, comps, stripped=True, raw_degree=f.raw_degree, exact=False, label=f.label)


def _coord_constant(p, ambient) -> bool:
    nc = ncoords(ambient)
    return all(not any(e[:nc]) for e in _terms(p))


def _numeric_compose(f: HomogeneousMap, g: HomogeneousMap):
    gens = sp.symbols(COORDS[f.ambient])
    fs, gs = _to_sympy_exact(f), _to_sympy_exact(g)
    out = []
    for c in fs:
        e = sp.expand(c.as_expr().subs(dict(zip(gens, [q.as_expr() for q in gs])), simultaneous=True))
        out.append(_sympy_to_numeric(sp.Poly(e, *gens, domain="QQ_I") if e != 0 else None, f.ambient))
    return tuple(out)


def _to_sympy_exact(f: HomogeneousMap):
    """Components as sympy Polys over QQ<I>; floats are converted exactly (dyadic)."""
    gens = sp.symbols(COORDS[f.ambient])
    if f.exact:
        if f.params:
            raise ValueError("specialise parameters before mixing with numeric maps")
        return [sp.Poly(sp.sympify(str(c).replace("^", "**")) if not c.is_zero() else 0, *gens, domain="QQ_I") for c in f.components]
    out = []
    for comp in f.components:
        expr = sum(
            (_exact_complex(v) * sp.Mul(*[s**k for s, k in zip(gens, e)]) for e, v in comp.items()),
            sp.Integer(0),
        )
        out.append(sp.Poly(expr, *gens, domain="QQ_I"))
    return out


def _exact_complex(v: complex):
    fr, fi = Fraction(float(v.real)), Fraction(float(v.imag))
    return sp.Rational(fr.numerator, fr.denominator) + sp.I * sp.Rational(fi.numerator, fi.denominator)


def _sympy_to_numeric(poly, ambient):
    if poly is None:
        return {}
    return {m: complex(c) for m, c in poly.terms() if complex(c) != 0}


def _numeric_strip(f: HomogeneousMap):
    """Common factor over the exact dyadic image, accepted only if it divides the
    float components with residual below NUMERIC_FACTOR_TOL x leading norm."""
    polys = _to_sympy_exact(f)
    comps = list(f.components)
    for block in _output_blocks(f.ambient):
        g = None
        for k in block:
            if not polys[k].is_zero:
                g = polys[k] if g is None else sp.gcd(g, polys[k])
        if g is None or g.total_degree() == 0:
            continue
        quotients = []
        ok = True
        for k in block:
            q, r = sp.div(polys[k], g)
            lead = max(abs(complex(c)) for c in polys[k].coeffs()) if not polys[k].is_zero else 1.0
            res = max((abs(complex(c)) for c in r.coeffs()), default=0.0) if not r.is_zero else 0.0
            if res >= NUMERIC_FACTOR_TOL * lead:
                ok = False
            quotients.append(q)
        if ok:
            for k, q in zip(block, quotients):
                comps[k] = _sympy_to_numeric(q, f.ambient)
    return tuple(comps)


def is_identity(f: HomogeneousMap) -> bool:
    """Exact (or 1e-12 numeric) proportionality of each factor's components to the coordinates."""
    f = f if f.stripped else strip(f)
    for block in _output_blocks(f.ambient):
        for i, j in permutations(block, 2):
            if f.exact:
                g = ring(f.ambient).gens()
                if not (f.components[i] * g[j] - f.components[j] * g[i]).is_zero():
                    return False
            else:
                nf = f.numeric()
                rng = np.random.default_rng(0)
                pts = rng.normal(size=(5, ncoords(f.ambient))) + 1j * rng.normal(size=(5, ncoords(f.ambient)))
                val = nf(pts)
                lhs = val[:, i] * pts[:, j] - val[:, j] * pts[:, i]
                if np.max(np.abs(lhs)) > 1e-12 * np.max(np.abs(val)) * np.max(np.abs(pts)):
                    return False
    return True


def iterate(f: HomogeneousMap, n: int) -> HomogeneousMap:
    h = f
    for _ in range(n - 1):
        h = compose(f, h)
    return h


def conjugate(f: HomogeneousMap, h: HomogeneousMap, h_inv: HomogeneousMap) -> HomogeneousMap:
    """h_inv o f o h."""
    return compose(h_inv, compose(f, h))


# ---------------------------------------------------------------------------
# modular degree computations


def modular_components(f: HomogeneousMap):
    """Image of the (parameter-free) map in F_p[coords]; sqrt(-1) sent to a fixed root."""
    ctx = flint.nmod_mpoly_ctx.get(COORDS[f.ambient], modulus=MOD_PRIME)
    nc = ncoords(f.ambient)
    out = []
    for comp in f.components:
        d = {}
        if f.exact:
            if f.params:
                raise ValueError("modular reduction needs a parameter-free map")
            for exps, c in _terms(comp).items():
                d[exps[:nc]] = _mod_of_fraction(Fraction(int(c.p), int(c.q)))
        else:
            for exps, c in comp.items():
                d[tuple(exps)] = _mod_of_complex(c)
        out.append(ctx.from_dict({k: v for k, v in d.items() if v}))
    return ctx, out


def modular_degree_sequence(f: HomogeneousMap, n_max: int) -> list[CohomologyAction]:
    """Stripped (bi)degrees of f^n, n = 1..n_max, computed over F_p.

    Agrees with the characteristic-zero answer unless p divides a resultant of
    the composite components, which happens with probability ~ deg / p.
    """
    ctx, base = modular_components(f)
    cur = list(base)
    blocks = _output_blocks(f.ambient)
    seq = []
    for n in range(1, n_max + 1):
        if n > 1:
            cur = [c.compose(*cur) for c in base]
        for block in blocks:
            g = None
            for k in block:
                if not cur[k].is_zero():
                    g = cur[k] if g is None else g.gcd(cur[k])
            if g is None:
                raise ZeroMapError(f"f^{n} vanishes modulo p")
            if g.total_degree() > 0:
                for k in block:
                    cur[k] = cur[k] / g
        seq.append(CohomologyAction.of([_bidegree_mod(cur, b, f.ambient) for b in blocks]))
    return seq


def _bidegree_mod(cur, block, ambient):
    for k in block:
        if not cur[k].is_zero():
            return _bidegree(cur[k], ambient)
    raise ZeroMapError("zero factor")


# ---------------------------------------------------------------------------
# Jacobian


def _det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = None
    for j in range(n):
        if rows[0][j].is_zero():
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * _det(minor)
        total = (term if j % 2 == 0 else -term) if total is None else (total + term if j % 2 == 0 else total - term)
    return total if total is not None else rows[0][0] * 0


def jacobian_determinant(f: HomogeneousMap):
    """(content, [(factor, multiplicity), ...]) of det(dF) for the lifted components.

    Exact maps factor over Q[params]; numeric maps factor their dyadic image over
    Q(i) with sympy and return sympy Polys.
    """
    nc = ncoords(f.ambient)
    if f.exact:
        rows = [[c.derivative(i) for i in range(nc)] for c in f.components]
        det = _det(rows)
        if det.is_zero():
            return det, []
        content, facs = det.factor()
        return content, [(p, m) for p, m in facs if not _coord_constant(p, f.ambient)]
    polys = _to_sympy_exact(f)
    gens = sp.symbols(COORDS[f.ambient])
    mat = sp.Matrix([[p.diff(g).as_expr() for g in gens] for p in polys])
    det = sp.expand(mat.det(method="berkowitz"))
    if det == 0:
        return sp.Integer(0), []
    content, facs = sp.factor_list(det, *gens, gaussian=True)
    return content, [(sp.Poly(p, *gens), m) for p, m in facs if sp.Poly(p, *gens).total_degree() > 0]


def coordinate_degree(p, ambient) -> int:
    nc = ncoords(ambient)
    if hasattr(p, "to_dict"):
        return max((sum(e[:nc]) for e in _terms(p)), default=0)
    return p.total_degree()


# ---------------------------------------------------------------------------
# projective points


def normalize(p, ambient: str) -> np.ndarray:
    """Unit sup-norm per factor, first largest entry made real positive."""
    p = np.array(p, dtype=complex)
    out = p.copy()
    for b in factor_blocks(ambient):
        sub = p[..., list(b)]
        k = np.argmax(np.abs(sub), axis=-1)
        piv = np.take_along_axis(sub, k[..., None], axis=-1)
        if np.any(np.abs(piv) == 0):
            raise ValueError("zero coordinate tuple")
        out[..., list(b)] = sub / piv
    return out


def chordal(p, q, ambient: str) -> np.ndarray:
    """Fubini-Study chordal distance (max over factors on P^1 x P^1)."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    best = None
    for b in factor_blocks(ambient):
        u, v = p[..., list(b)], q[..., list(b)]
        nu = np.linalg.norm(u, axis=-1)
        nv = np.linalg.norm(v, axis=-1)
        # |u ^ v| / (|u| |v|), stable for nearby points
        n = u.shape[-1]
        wedge = sum(np.abs(u[..., i] * v[..., j] - u[..., j] * v[..., i]) ** 2 for i in range(n) for j in range(i + 1, n))
        d = np.sqrt(wedge) / (nu * nv)
        best = d if best is None else np.maximum(best, d)
    return best


def same_point(p, q, ambient, tol=POINT_TOL) -> bool:
    return bool(chordal(p, q, ambient) < tol)


def evaluate(f, p, ambient: str | None = None, params: dict | None = None, tol: float = 1e-12) -> np.ndarray:
    """f(p), normalised; raises Indeterminate if every component of a factor vanishes."""
    nf = f if isinstance(f, NumericMap) else NumericMap.from_map(f, params)
    amb = nf.ambient
    p = np.asarray(p, dtype=complex)
    lift = np.array(p)
    for b in factor_blocks(amb):
        lift[list(b)] = lift[list(b)] / np.linalg.norm(lift[list(b)])
    val = nf(lift)
    scale = nf.coefficient_norm()
    for b in factor_blocks(amb):
        if np.linalg.norm(val[list(b)]) < tol * scale:
            raise Indeterminate(p)
    return normalize(val, amb)


def dedupe(points, ambient, tol=POINT_TOL) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if not any(chordal(p, q, ambient) < tol for q in out):
            out.append(normalize(p, ambient))
    return out


# ---------------------------------------------------------------------------
# serialization


def to_json(f: HomogeneousMap) -> str:
    comps = []
    for c in f.components:
        if f.exact:
            comps.append([[list(e), f"{int(v.p)}/{int(v.q)}"] for e, v in sorted(_terms(c).items())])
        else:
            comps.append([[list(e), f"{complex(v).real!r},{complex(v).imag!r}"] for e, v in sorted(c.items())])
    return json.dumps(
        {
            "ambient": f.ambient,
            "mode": "exact" if f.exact else "numeric",
            "variables": list(COORDS[f.ambient] + (PARAMS if f.exact else ())),
            "stripped": f.stripped,
            "label": f.label,
            "components": comps,
        }
    )


def from_json(text: str) -> HomogeneousMap:
    d = json.loads(text) if isinstance(text, str) else text
    amb = d["ambient"]
    if d.get("mode", "exact") == "exact":
        ctx = ring(amb)
        comps = tuple(ctx.from_dict({tuple(e): to_fmpq(Fraction(v)) for e, v in comp}) for comp in d["components"])
        return HomogeneousMap(amb, comps, stripped=d.get("stripped", False), label=d.get("label", ""))
    comps = []
    for comp in d["components"]:
        cd = {}
        for e, v in comp:
            re, im = v.split(",")
            cd[tuple(e)] = complex(float(re), float(im))
        comps.append(cd)
    return HomogeneousMap(amb, tuple(comps), stripped=d.get("stripped", False), exact=False, label=d.get("label", ""))


def exact_values_at(f: HomogeneousMap, point) -> list:
    """Components evaluated at a point whose coordinates are sympy expressions in the parameters."""
    gens = sp.symbols(COORDS[f.ambient] + PARAMS)
    nc = ncoords(f.ambient)
    out = []
    for c in f.components:
        expr = sp.sympify(str(c).replace("^", "**"), locals={str(g): g for g in gens}) if f.exact else None
        out.append(sp.simplify(expr.subs(dict(zip(gens[:nc], point)), simultaneous=True)))
    return out
