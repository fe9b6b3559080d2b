"""Local potentials Gamma^+- and Green functions G^+- of the invariant currents.

Conventions. On P^2 the reference form is Fubini-Study and
    Gamma+(x) = log ||F(x)|| / lambda1 - log ||x||        (x a lift).
On P^1 x P^1 the row k of the bidegree matrix D is the bidegree of the k-th
output factor. The pullback acts on classes (c0, c1) by D^T, the pushforward
by Q D Q with Q the intersection form [[0,1],[1,0]]. With v, w the positive
eigenvectors of D^T and Q D Q,
    Gamma+(x) = sum_k v_k (log ||F_k(x)|| / lambda1 - log ||x_k||),
and Gamma- is the same expression for the inverse map with weights w. The
pair is normalised by v^T Q w = 1, i.e. {T+}.{T-} = 1.

Green functions are truncated sums
    G+_N(p) = sum_{n<N} lambda1^-n max(Gamma+(f^n p), -M).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm, qmc

from . import elimination as el
from . import spectral
from .surface_maps import (
    HomogeneousMap,
    NumericMap,
    _output_blocks,
    chordal,
    dedupe,
    factor_blocks,
    normalize,
)

Q_FORM = np.array([[0.0, 1.0], [1.0, 0.0]])
DEFAULT_N = 20
DEFAULT_M = 40.0
SUP_SAMPLES = 2**13
POLE_CHORDAL = 1e-9
POLE_RELNORM = 1e-14
PREIMAGE_CAP = 4096


class SpuriousHazard(ValueError):
    """The invariant class has a vanishing entry."""


class Unsupported(NotImplementedError):
    pass


class PreconditionError(ValueError):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


def unit_lift(pts, ambient):
    """Rescale each projective factor of the lifts to unit Euclidean norm."""
    pts = np.array(pts, dtype=complex)
    for b in factor_blocks(ambient):
        sub = pts[..., list(b)]
        pts[..., list(b)] = sub / np.linalg.norm(sub, axis=-1, keepdims=True)
    return pts


def _positive_eigvec(mat):
    w, V = np.linalg.eig(np.asarray(mat, dtype=float))
    k = int(np.argmax(w.real))
    v = np.real(V[:, k])
    if v.sum() < 0:
        v = -v
    return float(w[k].real), v


@dataclass
class InvariantClassData:
    """Class data and numeric machinery for one map (and its inverse when known)."""

    ambient: str
    lambda1: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    f: NumericMap
    inverse: NumericMap | None
    I_plus: list
    I_minus: list
    offset_plus: float = 0.0
    offset_minus: float = 0.0
    lambda2: int = 1
    notes: list[str] = field(default_factory=list)

    @property
    def pairing(self) -> float:
        if self.ambient == "P2":
            return float(self.v_plus[0] * self.v_minus[0])
        return float(self.v_plus @ Q_FORM @ self.v_minus)


def invariant_classes(f: HomogeneousMap, inverse: HomogeneousMap | None = None, params: dict | None = None,
                      loci=None, lambda1: float | None = None, normalize_sup: bool = True,
                      allow_degenerate: bool = False, seed: int = 0) -> InvariantClassData:
    """Eigenclasses, normalisation and sup offsets; loci are computed when not supplied."""
    from .singular_loci import singular_loci

    nf = NumericMap.from_map(f, params)
    ninv = NumericMap.from_map(inverse, params) if inverse is not None else None
    notes = []
    if f.ambient == "P2":
        lam = float(f.degree.matrix[0][0])
        v = np.array([1.0])
        w = np.array([1.0])
    else:
        D = np.array(f.degree.matrix, dtype=float)
        lam, v = _positive_eigvec(D.T)
        _, w = _positive_eigvec(Q_FORM @ D @ Q_FORM)
        if np.any(v <= 1e-12) or np.any(w <= 1e-12):
            if not allow_degenerate:
                raise SpuriousHazard(f"invariant class has a vanishing entry: v={v}, w={w}")
            notes.append("degenerate invariant class")
        pair = float(v @ Q_FORM @ w)
        # split the normalisation symmetrically between the two classes
        v = v / np.sqrt(pair)
        w = w / np.sqrt(pair)
    if lambda1 is not None:
        if abs(lambda1 - lam) > 1e-12:
            notes.append(f"lambda1 override {lambda1} (class eigenvalue {lam})")
        lam = float(lambda1)
    if loci is None:
        loci = singular_loci(f, params, seed=seed)
    data = InvariantClassData(f.ambient, lam, v, w, nf, ninv, list(loci.indeterminacy),
                              list(loci.contracted_points), notes=notes)
    if normalize_sup:
        data.offset_plus = _sup_raw(data, +1, seed)
        if ninv is not None:
            data.offset_minus = _sup_raw(data, -1, seed)
    return data


# ---------------------------------------------------------------------------
# Gamma


def _raw_gamma(nf: NumericMap, weights, lam, pts):
    """lambda^-1 sum_k v_k log||F_k(x)|| - sum_k v_k log||x_k||, any lifts; also the pole mask."""
    amb = nf.ambient
    pts = np.atleast_2d(np.asarray(pts, dtype=complex))
    val = nf(pts)
    out = np.zeros(pts.shape[0])
    pole = np.zeros(pts.shape[0], dtype=bool)
    scale = nf.coefficient_norm()
    for k, (bi, bo) in enumerate(zip(factor_blocks(amb), _output_blocks(amb))):
        nx = np.linalg.norm(pts[:, list(bi)], axis=1)
        nF = np.linalg.norm(val[:, list(bo)], axis=1)
        deg = np.array(nf.degree.matrix[k])
        # relative size of F_k against the natural scale of a degree-(deg) lift
        ref = scale * np.prod([np.linalg.norm(pts[:, list(b)], axis=1) ** d for b, d in zip(factor_blocks(amb), deg)], axis=0)
        pole |= nF <= POLE_RELNORM * ref
        with np.errstate(divide="ignore"):
            out += weights[k] * (np.log(nF) / lam - np.log(nx))
    return out, pole, val


def _sphere_sample(ambient, n, seed):
    dim = 2 * len(sum(factor_blocks(ambient), ()))
    u = qmc.Sobol(dim, scramble=True, seed=seed).random(n)
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    half = dim // 2
    return unit_lift(g[:, :half] + 1j * g[:, half:], ambient)


def _sup_raw(data: InvariantClassData, sign: int, seed: int) -> float:
    nf, wts = (data.f, data.v_plus) if sign > 0 else (data.inverse, data.v_minus)
    pts = _sphere_sample(data.ambient, SUP_SAMPLES, seed)
    vals, _, _ = _raw_gamma(nf, wts, data.lambda1, pts)
    best = float(np.max(vals))
    n = pts.shape[1]
    for i in np.argsort(vals)[-3:]:
        x0 = np.concatenate([pts[i].real, pts[i].imag])

        def obj(xr):
            p = (xr[:n] + 1j * xr[n:])[None, :]
            if any(np.linalg.norm(p[0, list(b)]) < 1e-8 for b in factor_blocks(data.ambient)):
                return 1e3
            return -float(_raw_gamma(nf, wts, data.lambda1, p)[0][0])

        res = minimize(obj, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return best


def gamma_plus(data: InvariantClassData, pts) -> np.ndarray:
    """Normalised Gamma+ at points (lifts, any scaling); -inf at indeterminacy."""
    vals, pole, _ = _raw_gamma(data.f, data.v_plus, data.lambda1, pts)
    vals = vals - data.offset_plus
    vals[pole] = -np.inf
    return vals


def gamma_minus(data: InvariantClassData, pts) -> np.ndarray:
    if data.inverse is None:
        raise Unsupported("Gamma- is available only through an explicit inverse map")
    vals, pole, _ = _raw_gamma(data.inverse, data.v_minus, data.lambda1, pts)
    vals = vals - data.offset_minus
    vals[pole] = -np.inf
    return vals


# ---------------------------------------------------------------------------
# Green functions


@dataclass
class GreenEvaluation:
    values: np.ndarray
    N: int
    M: float
    tail: np.ndarray
    clamped_fraction: float
    pole_hit: np.ndarray
    renormalized: bool = True
    truncated_at: int | None = None

    def to_rows(self, pts):
        for p, v, t, h in zip(np.atleast_2d(pts), self.values, self.tail, self.pole_hit):
            yield [*(f"{complex(z).real:.17g}" for z in p), *(f"{complex(z).imag:.17g}" for z in p), f"{v:.17g}", f"{t:.3g}", int(h)]


def _green_series(nf, weights, lam, offset, poles, pts, N, M):
    amb = nf.ambient
    x = unit_lift(np.atleast_2d(pts), amb)
    m = x.shape[0]
    total = np.zeros(m)
    alive = np.ones(m, dtype=bool)
    hit = np.zeros(m, dtype=bool)
    clamped = 0
    counted = 0
    last = np.zeros(m)
    for n in range(N):
        near = np.zeros(m, dtype=bool)
        for q in poles:
            near |= chordal(x, q, amb) < POLE_CHORDAL
        g, pole, val = _raw_gamma(nf, weights, lam, x)
        g = g - offset
        pole |= near
        term = np.where(pole, -M, np.maximum(g, -M))
        clamped += int(np.sum(alive & ((g < -M) | pole)))
        counted += int(np.sum(alive))
        contrib = np.where(alive, term / lam**n, 0.0)
        total += contrib
        last = np.where(alive, contrib, last)
        hit |= alive & pole
        alive &= ~pole
        if not alive.any():
            break
        with np.errstate(invalid="ignore", divide="ignore"):
            x = np.where(alive[:, None], unit_lift(np.where(pole[:, None], 1.0, val), amb), x)
    tail = np.abs(last) / (1 - 1 / lam) if lam > 1 else np.full(m, np.inf)
    return GreenEvaluation(total, N, M, tail, clamped / max(counted, 1), hit)


def green_plus(data: InvariantClassData, pts, N: int = DEFAULT_N, M: float = DEFAULT_M) -> GreenEvaluation:
    return _green_series(data.f, data.v_plus, data.lambda1, data.offset_plus, data.I_plus, pts, N, M)


def green_minus(data: InvariantClassData, pts, N: int = DEFAULT_N, M: float = DEFAULT_M,
                path: str = "inverse", seed: int = 0) -> GreenEvaluation:
    """G- by iterating the inverse map, or (path="solver") by solving f(y) = x level by level."""
    if data.inverse is None:
        raise Unsupported("G- needs an explicit inverse map (birational maps only)")
    if path == "inverse":
        return _green_series(data.inverse, data.v_minus, data.lambda1, data.offset_minus, data.I_minus, pts, N, M)
    if path != "solver":
        raise ValueError(f"unknown path {path!r}")
    pts = unit_lift(np.atleast_2d(pts), data.ambient)
    vals, tails, hits = [], [], []
    clamped = counted = 0
    truncated = None
    for i, p in enumerate(pts):
        level = [p]
        total, last, hit = 0.0, 0.0, False
        for n in range(N):
            if not level:
                hit = True
                break
            g = gamma_minus(data, np.array(level))
            near = np.array([any(chordal(y, q, data.ambient) < POLE_CHORDAL for q in data.I_minus) for y in level])
            g = np.where(near | ~np.isfinite(g), -M, np.maximum(g, -M))
            clamped += int(np.sum(g <= -M))
            counted += len(level)
            last = float(np.sum(g)) / data.lambda1**n
            total += last
            if near.any() or n == N - 1:
                hit = bool(near.any())
                break
            nxt = []
            for j, y in enumerate(level):
                rng = np.random.default_rng([seed, i, n, j])
                nxt += spectral.preimages(data.f, normalize(y, data.ambient), rng)
            if len(nxt) > PREIMAGE_CAP:
                truncated = n + 1
                break
            level = [unit_lift(y, data.ambient) for y in nxt]
        vals.append(total)
        tails.append(abs(last) / (1 - 1 / data.lambda1))
        hits.append(hit)
    return GreenEvaluation(np.array(vals), N, M, np.array(tails), clamped / max(counted, 1), np.array(hits),
                           truncated_at=truncated)


# ---------------------------------------------------------------------------
# functional equation


def orbit_clearance(data: InvariantClassData, p, N: int) -> tuple[float, int | None]:
    """Minimal chordal distance from f^n(p), n <= N, to I+; index of the first close approach."""
    x = unit_lift(np.atleast_2d(p), data.ambient)
    best, idx = np.inf, None
    for n in range(N + 1):
        d = min((float(chordal(x[0], q, data.ambient)) for q in data.I_plus), default=np.inf)
        if d < best:
            best = d
        if d < 1e-6 and idx is None:
            idx = n
        x = unit_lift(data.f(x), data.ambient)
    return best, idx


def functional_equation_residual(data: InvariantClassData, p, N: int, form: str = "shifted",
                                 M: float = DEFAULT_M, check: bool = True) -> float:
    """Residual of lambda1^-1 G+(f p) = G+(p) - Gamma+(p) at truncation N.

    ``form="shifted"`` compares lambda1^-1 G_N(f p) with G_N(p) - Gamma+(p); the
    difference equals lambda1^-N Gamma+(f^N p), so it decays like lambda1^-N away
    from the I+ orbit. ``form="literal"`` uses G_{N+1}(p) on the right, which
    telescopes to zero and only measures rounding.
    """
    p = unit_lift(np.atleast_2d(p), data.ambient)
    if check:
        d, idx = orbit_clearance(data, p[0], N + 1)
        if idx is not None:
            raise PreconditionError(f"orbit passes within 1e-6 of I+ at n={idx}", idx)
    fp = unit_lift(data.f(p), data.ambient)
    lhs = green_plus(data, fp, N, M).values[0] / data.lambda1
    rhs_N = N if form == "shifted" else N + 1
    rhs = green_plus(data, p, rhs_N, M).values[0] - gamma_plus(data, p)[0]
    return float(abs(lhs - rhs))


def residual_slope(data: InvariantClassData, n_points: int = 50, Ns=range(5, 21), seed: int = 0,
                   M: float = DEFAULT_M) -> dict:
    """Fit log(mean residual) against N over random points with clear orbits."""
    rng = np.random.default_rng(seed)
    pts = []
    tries = 0
    while len(pts) < n_points and tries < 50 * n_points:
        tries += 1
        p = unit_lift(rng.normal(size=len(sum(factor_blocks(data.ambient), ()))) +
                      1j * rng.normal(size=len(sum(factor_blocks(data.ambient), ()))), data.ambient)
        if orbit_clearance(data, p, max(Ns) + 1)[1] is None:
            pts.append(p)
    pts = np.array(pts)
    Ns = list(Ns)
    means = []
    for N in Ns:
        r = [functional_equation_residual(data, p, N, M=M, check=False) for p in pts]
        means.append(float(np.mean(r)))
    slope, intercept = np.polyfit(Ns, np.log(means), 1)
    return {"Ns": Ns, "mean_residual": means, "slope": float(slope), "target": -float(np.log(data.lambda1)),
            "relative_error": float(abs(slope + np.log(data.lambda1)) / np.log(data.lambda1)), "n_points": len(pts)}
