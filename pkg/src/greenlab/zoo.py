"""Example families with self-checked facts.

Each entry carries a small ledger of facts. A fact is a closed-form claim plus
a check that recomputes it; checks run when the entry is built (``self_check``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp

from . import singular_loci as sl
from .surface_maps import (
    COORDS,
    HomogeneousMap,
    NumericMap,
    chordal,
    compose,
    from_exprs,
    is_identity,
    normalize,
)

x, y, z = sp.symbols(COORDS["P2"])
x0, x1, y0, y1 = sp.symbols(COORDS["P1xP1"])
A, B, C = sp.symbols("a b c")

ORIGIN_STATED = "stated"  # claim asserted for the family in the literature
ORIGIN_DERIVED = "derived"  # consequence we compute ourselves
GOLDEN_THETA = (math.sqrt(5) - 1) / 2


@dataclass
class Fact:
    name: str
    claim: str
    origin: str
    check: Callable[[], bool] = field(repr=False)
    verified: bool | None = None
    exact: bool = True

    def run(self) -> bool:
        self.verified = bool(self.check())
        return self.verified


@dataclass
class ZooEntry:
    id: str
    family: str
    params: dict
    map: HomogeneousMap
    inverse: HomogeneousMap | None = None
    facts: list[Fact] = field(default_factory=list)
    expectations: dict = field(default_factory=dict)
    caveat: str = ""
    theta: float | None = None
    chart: dict = field(default_factory=dict)

    def self_check(self) -> "ZooEntry":
        bad = [f.name for f in self.facts if not f.run()]
        if bad:
            raise AssertionError(f"{self.id}: facts failed self-check: {bad}")
        return self

    @property
    def numeric_params(self) -> dict:
        free = {str(p) for p in self.map.params}
        return {k: complex(v) for k, v in self.params.items() if k in free and not isinstance(v, sp.Symbol)}

    def summary(self) -> dict:
        return {
            "id": self.id,
            "family": self.family,
            "ambient": self.map.ambient,
            "mode": "exact" if self.map.exact else "numeric",
            "params": {k: str(v) for k, v in self.params.items()},
            "degree": str(self.map.degree),
            "birational": self.inverse is not None,
            "facts": [{"name": f.name, "claim": f.claim, "origin": f.origin, "verified": f.verified} for f in self.facts],
            "expectations": self.expectations,
            "caveat": self.caveat,
        }


# ---------------------------------------------------------------------------
# helpers


def _sym(v):
    """Parameter value as sympy: symbols stay symbolic, ints/Fractions exact, floats/complex numeric."""
    if isinstance(v, str):
        return sp.Symbol(v)
    if isinstance(v, sp.Basic):
        return v
    if isinstance(v, complex):
        return sp.Float(v.real, 17) + sp.I * sp.Float(v.imag, 17) if v.imag else sp.Float(v.real, 17)
    if isinstance(v, float):
        return sp.Float(v, 17)
    return sp.nsimplify(v, rational=True)


def _points_equal(found, expected, ambient, params=None) -> bool:
    """Same finite sets of projective points; exact (sympy) or to 1e-6 chordal."""
    if len(found) != len(expected):
        return False
    if found and isinstance(found[0], tuple):
        # exact: cross-ratios of coordinates vanish identically
        def same(p, q):
            return all(sp.simplify(p[i] * q[j] - p[j] * q[i]) == 0 for i in range(len(p)) for j in range(len(p)))
        return all(any(same(p, q) for q in expected) for p in found)
    exp = [normalize(np.array([complex(sp.N(sp.sympify(c).subs(params or {}))) for c in q]), ambient) for q in expected]
    return all(any(chordal(p, q, ambient) < 1e-6 for q in exp) for p in found)


def _exact_or_numeric_loci(f, params):
    if f.exact:
        return sl.exact_indeterminacy(f)
    return sl.numeric_indeterminacy(NumericMap.from_map(f, params))


def _contracted(f, params=None):
    loci = sl.singular_loci(f, params)
    return loci


# ---------------------------------------------------------------------------
# quadratic rotation family


def quadratic_rotation(a, self_check: bool = True, theta: float | None = None) -> ZooEntry:
    """f[x:y:t] = [y^2 : a y^2 + t^2 - x y : y t] (t is the third coordinate z)."""
    av = _sym(a)
    f = from_exprs([y**2, av * y**2 + z**2 - x * y, y * z], "P2", label="quadratic")
    finv = from_exprs([av * x**2 + z**2 - x * y, x**2, x * z], "P2", label="quadratic-inverse")
    params = {"a": av} if isinstance(av, sp.Symbol) else {}
    if theta is None and not params:
        ac = complex(av)
        if abs(ac.imag) < 1e-15 and -2 <= ac.real <= 2:
            theta = math.acos(ac.real / 2) / math.pi
    e = ZooEntry("quadratic", "quadratic_rotation", {"a": av}, f, finv, theta=theta,
                 chart={"ambient": "P2"})
    facts = [
        Fact("inverse", "f^-1 = sigma f sigma with sigma(x,y) = (y,x)", ORIGIN_STATED,
             lambda: is_identity(compose(f, finv)) and is_identity(compose(finv, f)), exact=f.exact),
        Fact("I+", "I+ = {[1:0:0]}", ORIGIN_STATED,
             lambda: _points_equal(_exact_or_numeric_loci(f, None), [(1, 0, 0)], "P2"), exact=f.exact),
        Fact("line-invariant", "the line t=0 is invariant", ORIGIN_STATED,
             lambda: _third_divisible_by_z(f), exact=f.exact),
    ]
    if not params:
        facts.append(Fact("I-", "I- = {[0:1:0]}", ORIGIN_STATED,
                          lambda: _points_equal(sl.singular_loci(f).contracted_points, [(0, 1, 0)], "P2"), exact=False))
    else:
        facts.append(Fact("I-", "the line y=0 is collapsed to [0:1:0]", ORIGIN_STATED,
                          lambda: _exact_line_collapse(f), exact=True))
    if theta is not None:
        facts.append(Fact("rotation", f"f restricted to t=0 is conjugate to rotation by 2 pi theta, theta={theta:.17g}",
                          ORIGIN_STATED, lambda: _rotation_on_line(f, complex(av), theta), exact=False))
    e.facts = facts
    return e.self_check() if self_check else e


def _third_divisible_by_z(f):
    if f.exact:
        from .surface_maps import ring
        zgen = ring("P2").gens()[2]
        q = f.components[2]
        return (q / zgen) * zgen == q if _divides(q, zgen) else False
    return all(e[2] >= 1 for e in f.components[2])


def _divides(p, g):
    try:
        p / g
        return True
    except Exception:
        return False


def _exact_line_collapse(f):
    vals = sl._sympy_components(f)
    at = [sp.expand(v.subs(y, 0)) for v in vals]
    return at[0] == 0 and at[2] == 0 and at[1] != 0


def _rotation_on_line(f, a, theta):
    """f maps t=0 to itself by [x:y] -> [y : a y - x]; its eigenvalue ratio is e^{2 pi i theta}."""
    nf = NumericMap.from_map(f)
    rng = np.random.default_rng(1)
    pts = np.zeros((3, 3), dtype=complex)
    pts[:, :2] = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    img = nf(pts)
    M = np.array([[0, 1], [-1, a]])
    pred = pts[:, :2] @ M.T
    if np.max(np.abs(img[:, 2])) > 1e-12 * np.max(np.abs(img)):
        return False
    # image is y * (linear action), up to scale
    if np.max(np.abs(img[:, 0] * pred[:, 1] - img[:, 1] * pred[:, 0])) > 1e-10 * np.max(np.abs(img)) ** 1.5:
        return False
    ev = np.linalg.eigvals(M)
    ang = abs(np.angle(ev[0] / ev[1])) / (2 * np.pi)
    t = theta % 1
    return min(abs(ang - t), abs(ang - (1 - t))) < 1e-9


# ---------------------------------------------------------------------------
# three invariant lines


def three_lines(a="a", b="b", c="c", self_check: bool = True) -> ZooEntry:
    """f[x:y:z] = [bcx(-cx+acy+z) : acy(x-ay+abz) : abz(bcx+y-bz)]."""
    av, bv, cv = _sym(a), _sym(b), _sym(c)
    for v in (av, bv, cv):
        if not isinstance(v, sp.Symbol) and complex(v) == 0:
            raise ValueError("three_lines parameters must be nonzero")

    def build(p, q, r, label):
        return from_exprs([q * r * x * (-r * x + p * r * y + z), p * r * y * (x - p * y + p * q * z),
                           p * q * z * (q * r * x + y - q * z)], "P2", label=label)

    f = build(av, bv, cv, "three-lines")
    finv = build(1 / av, 1 / bv, 1 / cv, "three-lines-inverse")
    params = {k: v for k, v in zip("abc", (av, bv, cv))}
    e = ZooEntry("three-lines", "three_lines", params, f, finv, chart={"ambient": "P2"})
    expected_I = [(av, 1, 0), (0, bv, 1), (1, 0, cv)]
    facts = [
        Fact("inverse", "inverse is f with parameters (1/a, 1/b, 1/c)", ORIGIN_STATED,
             lambda: is_identity(compose(f, finv)) and is_identity(compose(finv, f)), exact=f.exact),
        Fact("I_f", "I_f = {[a:1:0], [0:b:1], [1:0:c]}", ORIGIN_STATED,
             lambda: _points_equal(_exact_or_numeric_loci(f, None), expected_I, "P2"), exact=f.exact),
        Fact("lines", "[x:1:0] -> [-bcx:a:0], [0:y:1] -> [0:-acy:b], [1:0:z] -> [c:0:-baz]", ORIGIN_STATED,
             lambda: _line_actions(f, av, bv, cv), exact=f.exact),
    ]
    e.facts = facts
    return e.self_check() if self_check else e


def line_action_images(f: HomogeneousMap):
    """Images of the three parametrised lines as sympy tuples (exact) or callables (numeric)."""
    vals = [sp.expand(v) for v in _components_expr(f)]
    t = sp.Symbol("t")
    out = []
    for pt in ((t, 1, 0), (0, t, 1), (1, 0, t)):
        out.append(tuple(sp.factor(v.subs(dict(zip((x, y, z), pt)), simultaneous=True)) for v in vals))
    return out


def _components_expr(f):
    if f.exact:
        return sl._sympy_components(f)
    gens = sp.symbols(COORDS["P2"])
    return [sum((complex(v) * sp.Mul(*[g**k for g, k in zip(gens, e)]) for e, v in comp.items()), sp.Integer(0))
            for comp in f.components]


def _line_actions(f, a, b, c):
    t = sp.Symbol("t")
    targets = [(-b * c * t, a, 0), (0, -a * c * t, b), (c, 0, -b * a * t)]
    imgs = line_action_images(f)
    for img, tgt in zip(imgs, targets):
        for i in range(3):
            for j in range(i + 1, 3):
                d = sp.expand(img[i] * tgt[j] - img[j] * tgt[i])
                if f.exact:
                    if sp.simplify(d) != 0:
                        return False
                else:
                    coeffs = sp.Poly(d, t).coeffs() if d != 0 else [0]
                    scale = max(abs(complex(q)) for q in sp.Poly(sp.expand(img[i] * tgt[j]), t).coeffs()) if img[i] * tgt[j] != 0 else 1
                    if max(abs(complex(q)) for q in coeffs) > 1e-12 * max(scale, 1):
                        return False
    return True


def three_lines_slice(s: float = 2.0, theta: float = 0.3, self_check: bool = True) -> ZooEntry:
    """a = i, b = -s e^{2 pi i theta}, c = i/s."""
    b = -s * complex(math.cos(2 * math.pi * theta), math.sin(2 * math.pi * theta))
    e = three_lines(1j, b, 1j / s, self_check=self_check)
    e.id = f"three-lines-slice(s={s:g},theta={theta:g})"
    e.theta = theta
    # a rational angle lets the orbit of I- reach I+ (theta = 0.3 does so at n = 5)
    stab = "rational theta: decided by the orbit test" if abs(theta * 10**6 - round(theta * 10**6)) < 1e-9 else "stable"
    e.expectations = {"lambda2": 1, "stability": stab, "energy": "reported per theta, not asserted"}
    return e


# ---------------------------------------------------------------------------
# secant method


def secant(P, self_check: bool = True) -> ZooEntry:
    """Secant map (x, y) -> (y, z) for a polynomial P with simple roots, on P^1 x P^1."""
    w = sp.Symbol("w")
    P = sp.Poly(sp.sympify(P).subs({sp.Symbol("z"): w}) if isinstance(P, (str, sp.Basic)) else P, w)
    d = P.degree()
    if d < 2:
        raise ValueError("secant map needs deg P >= 2")
    if sp.discriminant(P) == 0:
        raise ValueError("P has a repeated root")
    X, Y = sp.symbols("X Y")
    Pe = P.as_expr()
    N = sp.cancel((X * Pe.subs(w, Y) - Y * Pe.subs(w, X)) / (X - Y))
    D = sp.cancel((Pe.subs(w, Y) - Pe.subs(w, X)) / (X - Y))
    hom = lambda e: sp.expand(x1 ** (d - 1) * y1 ** (d - 1) * e.subs({X: x0 / x1, Y: y0 / y1}, simultaneous=True))  # noqa: E731
    f = from_exprs([y0, y1, hom(N), hom(D)], "P1xP1", label=f"secant({P.as_expr()})")
    finv = None
    if d == 2:
        # z depends on x through a Moebius map; solve for x
        Zs = sp.Symbol("Zs")
        xs = sp.solve(sp.Eq(N / D, Zs), X)
        if len(xs) == 1:
            xe = sp.cancel(xs[0].subs({Y: x0 / x1, Zs: y0 / y1}, simultaneous=True))
            num, den = sp.fraction(sp.together(xe))
            finv = from_exprs([num, den, x0, x1], "P1xP1", label="secant-inverse")
    roots = [complex(r) for r in sp.Poly(Pe, w).nroots(n=30)]
    e = ZooEntry(f"secant({P.as_expr()})", "secant", {"P": str(P.as_expr())}, f, finv,
                 chart={"ambient": "P1xP1"})
    diag = [normalize(np.array([r, 1, r, 1]), "P1xP1") for r in roots]
    facts = [
        Fact("I-", "I- = {(r, r) : P(r) = 0}", ORIGIN_STATED,
             lambda: _points_equal(sl.singular_loci(f).contracted_points, [(r, 1, r, 1) for r in roots], "P1xP1"),
             exact=False),
        Fact("fixed-attracting", "each (r, r) is fixed and attracting", ORIGIN_STATED,
             lambda: all(_fixed_attracting(f, p) for p in diag), exact=False),
        Fact("kahler", "both invariant classes are Kahler (positive in both factors)", ORIGIN_STATED,
             lambda: _classes_positive(f, d), exact=True),
    ]
    if finv is not None:
        facts.insert(0, Fact("inverse", "birational for deg P = 2", ORIGIN_DERIVED,
                             lambda: is_identity(compose(f, finv)) and is_identity(compose(finv, f))))
    e.facts = facts
    e.expectations = {"lambda1": float(_secant_lambda1(d)), "lambda2": d - 1}
    return e.self_check() if self_check else e


def _secant_lambda1(d):
    M = np.array([[0, 1], [d - 1, d - 1]], dtype=float)
    return max(abs(np.linalg.eigvals(M)))


def _fixed_attracting(f, p):
    nf = NumericMap.from_map(f)
    img = normalize(nf(p), "P1xP1")
    if chordal(img, p, "P1xP1") > 1e-9:
        return False
    # affine Jacobian at the fixed point via finite differences in the (x, y) chart
    h = 1e-6
    cx, cy = p[0] / p[1], p[2] / p[3]

    def aff(u, v):
        q = nf(np.array([u, 1, v, 1]))
        return np.array([q[0] / q[1], q[2] / q[3]])

    base = aff(cx, cy)
    J = np.column_stack([(aff(cx + h, cy) - base) / h, (aff(cx, cy + h) - base) / h])
    return max(abs(np.linalg.eigvals(J))) < 1


def _classes_positive(f, d):
    M = np.array(f.degree.matrix, dtype=float)
    for mat in (M.T, M):
        w, V = np.linalg.eig(mat)
        v = np.real(V[:, np.argmax(np.abs(w))])
        v = v / v.sum()
        if not np.all(v > 0):
            return False
    return True


# ---------------------------------------------------------------------------
# polynomial maps of C^2, naive compactification

NAIVE_CAVEAT = "naive compactification in P^2; the natural compactification X of the theory may differ"


def polynomial_plane_map(p, q, inverse=None, self_check: bool = True) -> ZooEntry:
    """(x, y) -> (p(x, y), q(x, y)) extended to P^2 by homogenization with t = z."""
    p, q = sp.sympify(p), sp.sympify(q)
    d = max(sp.Poly(p, x, y).total_degree(), sp.Poly(q, x, y).total_degree())
    if d == 0:
        raise ValueError("constant map")
    hom = lambda e: sp.expand(z**d * e.subs({x: x / z, y: y / z}, simultaneous=True))  # noqa: E731
    f = from_exprs([hom(p), hom(q), z**d], "P2", label=f"poly({p}, {q})")
    finv = None
    if inverse is not None:
        pi, qi = (sp.sympify(v) for v in inverse)
        di = max(sp.Poly(pi, x, y).total_degree(), sp.Poly(qi, x, y).total_degree())
        homi = lambda e: sp.expand(z**di * e.subs({x: x / z, y: y / z}, simultaneous=True))  # noqa: E731
        finv = from_exprs([homi(pi), homi(qi), z**di], "P2", label="poly-inverse")
    e = ZooEntry(f"poly({p},{q})", "polynomial_plane_map", {"p": str(p), "q": str(q)}, f, finv,
                 caveat=NAIVE_CAVEAT, chart={"ambient": "P2"})
    facts = [Fact("homogenization", f"homogenization degree {d}", ORIGIN_DERIVED,
                  lambda: f.degree.matrix[0][0] == d)]
    if finv is not None:
        facts.append(Fact("inverse", "polynomial inverse given", ORIGIN_DERIVED,
                          lambda: is_identity(compose(f, finv)) and is_identity(compose(finv, f))))
    if d >= 2:
        if _infinity_collapsed(f):
            facts.append(Fact("I-fixed", "the line at infinity is collapsed to a fixed point", ORIGIN_STATED,
                              lambda: _contracted_fixed(f), exact=False))
        else:
            facts.append(Fact("infinity-not-collapsed", "the line at infinity is not collapsed in the naive model",
                              ORIGIN_DERIVED, lambda: not _infinity_collapsed(f), exact=False))
    e.facts = facts
    return e.self_check() if self_check else e


def _infinity_collapsed(f):
    from .surface_maps import ring
    return sl.contracted_image(f, ring("P2").gens()[2]) is not sl.NOT_CONTRACTED


def _contracted_fixed(f):
    from .surface_maps import ring
    pts = [sl.contracted_image(f, ring("P2").gens()[2])]
    nf = NumericMap.from_map(f)
    ok = True
    for p in pts:
        try:
            img = sl._evaluate_nf(nf, p)
        except Exception:
            return False
        ok &= bool(chordal(img, p, "P2") < 1e-8)
    return ok


# ---------------------------------------------------------------------------
# registry


def liouville_theta(kmax: int = 6) -> float:
    return sum(10.0 ** (-math.factorial(k)) for k in range(1, kmax + 1))


def _quad_theta(theta):
    return quadratic_rotation(2 * math.cos(math.pi * theta), theta=theta)


REGISTRY: dict[str, Callable[[], ZooEntry]] = {
    "quad-a3": lambda: quadratic_rotation(3),
    "quad-golden": lambda: _quad_theta(GOLDEN_THETA),
    "quad-third": lambda: quadratic_rotation(1, theta=1 / 3),
    "quad-liouville": lambda: _quad_theta(liouville_theta()),
    "three-lines-slice": lambda: three_lines_slice(2.0, 0.3),
    "three-lines-golden": lambda: three_lines_slice(2.0, GOLDEN_THETA),
    "secant-z2m1": lambda: secant("z**2 - 1"),
    "secant-z3mz": lambda: secant("z**3 - z"),
    "henon": lambda: polynomial_plane_map(y, y**2 + x, inverse=(y - x**2, x)),
    "poly-xy1": lambda: polynomial_plane_map(x * y + 1, x**2),
}

DESCRIPTIONS = {
    "quad-a3": "quadratic rotation family, a = 3 (outside [-2, 2])",
    "quad-golden": "quadratic rotation family, a = 2 cos(pi theta), theta golden mean",
    "quad-third": "quadratic rotation family, a = 1 = 2 cos(pi/3), rational angle",
    "quad-liouville": "quadratic rotation family, theta = sum 10^-k! (Liouville type)",
    "three-lines-slice": "three invariant lines map, a=i, b=-2 e^{0.6 pi i}, c=i/2",
    "three-lines-golden": "three invariant lines map on the same slice, theta golden mean",
    "secant-z2m1": "secant method for P = z^2 - 1 on P^1 x P^1",
    "secant-z3mz": "secant method for P = z^3 - z on P^1 x P^1",
    "henon": "(x, y) -> (y, y^2 + x) on P^2",
    "poly-xy1": "(x, y) -> (xy + 1, x^2) on P^2",
}


def ids() -> list[str]:
    return sorted(REGISTRY)


def get(entry_id: str) -> ZooEntry:
    if entry_id not in REGISTRY:
        raise KeyError(f"unknown zoo id {entry_id!r}; known: {', '.join(ids())}")
    e = REGISTRY[entry_id]()
    e.id = entry_id
    e.expectations.setdefault("description", DESCRIPTIONS[entry_id])
    return e
