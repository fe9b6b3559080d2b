"""Degree growth, dynamical degrees and the 1-stability verdict."""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from . import elimination as el
from . import singular_loci as sl
from .surface_maps import (
    CohomologyAction,
    HomogeneousMap,
    Indeterminate,
    NumericMap,
    _output_blocks,
    chordal,
    compose,
    dedupe,
    factor_blocks,
    modular_degree_sequence,
    normalize,
    specialize,
    strip,
)

MAX_SYMBOLIC_N = 8
MAX_NUMERIC_N = 12
MAX_TERMS = 2_000_000
PREIMAGE_MERGE = 1e-6
ORBIT_TOL = 1e-6


@dataclass
class DegreeSequence:
    degrees: list[CohomologyAction]
    method: str  # "exact" (Q[params]) or "modular" (F_p image)
    truncated: bool = False
    requested: int = 0

    def scalars(self) -> list[int]:
        return [d.scalar for d in self.degrees]


def degree_sequence(f: HomogeneousMap, N: int, method: str = "auto", time_budget: float = 120.0) -> DegreeSequence:
    """Stripped degrees of f^n for n = 1..N.

    Exact maps compose over Q[params] (N <= 8); numeric maps, or
    ``method="modular"``, work in F_p (N <= 12). A blowup past the term or time
    budget returns the partial sequence with ``truncated`` set.
    """
    if method == "auto":
        method = "exact" if f.exact else "modular"
    if method == "exact":
        if not f.exact:
            raise ValueError("exact degree sequence needs an exact map")
        if N > MAX_SYMBOLIC_N:
            raise ValueError(f"symbolic degree sequences are limited to N <= {MAX_SYMBOLIC_N}")
        h = f if f.stripped else strip(f)
        seq, truncated = [h.degree], False
        t0 = time.monotonic()
        for _ in range(2, N + 1):
            if time.monotonic() - t0 > time_budget or sum(len(c) for c in h.components) > MAX_TERMS:
                truncated = True
                break
            h = compose(f, h)
            seq.append(h.degree)
        return DegreeSequence(seq, "exact", truncated, N)
    if N > MAX_NUMERIC_N:
        raise ValueError(f"numeric degree sequences are limited to N <= {MAX_NUMERIC_N}")
    return DegreeSequence(modular_degree_sequence(f, N), "modular", False, N)


def is_multiplicative(seq: list[CohomologyAction]) -> bool:
    base = seq[0]
    cur = base
    for d in seq[1:]:
        cur = base @ cur
        if d.matrix != cur.matrix:
            return False
    return True


def first_drop(seq: list[CohomologyAction]) -> int | None:
    """Smallest n with deg(f^n) != deg(f)^n."""
    base = cur = seq[0]
    for n, d in enumerate(seq[1:], start=2):
        cur = base @ cur
        if d.matrix != cur.matrix:
            return n
    return None


def ratio_fit(seq: list[CohomologyAction], tail: int | None = None) -> tuple[float, float]:
    """exp(slope) of a least-squares fit of log scalar degree against n, with the rms residual."""
    vals = np.log(np.array([d.scalar for d in seq], dtype=float))
    n = np.arange(1, len(vals) + 1, dtype=float)
    if tail:
        n, vals = n[-tail:], vals[-tail:]
    coef, res, *_ = np.polyfit(n, vals, 1, full=True)
    rms = float(np.sqrt(res[0] / len(n))) if len(res) else 0.0
    return float(np.exp(coef[0])), rms


# ---------------------------------------------------------------------------
# topological degree


def _random_target(ambient, rng):
    v = rng.normal(size=len(sum(factor_blocks(ambient), ()))) + 1j * rng.normal(size=len(sum(factor_blocks(ambient), ())))
    for b in factor_blocks(ambient):
        v[list(b)] /= np.linalg.norm(v[list(b)])
    return v


def _unit(p, ambient):
    p = np.array(p, dtype=complex)
    for b in factor_blocks(ambient):
        p[list(b)] /= np.linalg.norm(p[list(b)])
    return p


def preimages(nf: NumericMap, w, rng, merge: float = PREIMAGE_MERGE) -> list[np.ndarray]:
    """Distinct preimages of the point w, by elimination in a random chart."""
    amb = nf.ambient
    frames = el.random_frame(amb, rng)
    D = nf.degree.matrix
    if amb == "P2":
        d = D[0][0]
        eqs = np.zeros((2, 3), dtype=complex)
        eqs[0, 0], eqs[0, 1] = w[1], -w[0]
        eqs[1, 0], eqs[1, 2] = w[2], -w[0]
        system = el.pair_from_functions(nf, frames, eqs, (d, d), d * d)
    else:
        (m1, n1), (m2, n2) = D
        eqs = np.zeros((2, 4), dtype=complex)
        eqs[0, 0], eqs[0, 1] = w[1], -w[0]
        eqs[1, 2], eqs[1, 3] = w[3], -w[2]
        system = el.pair_from_functions(nf, frames, eqs, (n1, n2), m1 * n2 + m2 * n1)
    pts = el.solutions_to_points(nf, frames, el.solve_pair(system))
    good = []
    scale = nf.coefficient_norm()
    for p in pts:
        val = nf(_unit(p, amb))
        if any(np.linalg.norm(val[list(b)]) < 1e-8 * scale for b in _output_blocks(amb)):
            continue
        if chordal(normalize(val, amb), w, amb) < merge:
            good.append(p)
    return dedupe(good, amb, merge)


@dataclass
class TopologicalDegree:
    value: int | None
    counts: list[int]
    discarded: list[int]
    note: str

    def to_dict(self):
        return asdict(self)


def topological_degree(f: HomogeneousMap | NumericMap, trials: int = 20, seed: int = 0, params: dict | None = None) -> TopologicalDegree:
    """Modal number of distinct preimages of random points; trial k uses the RNG stream (seed, k)."""
    nf = f if isinstance(f, NumericMap) else NumericMap.from_map(f, params)
    counts, discarded = [], []
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        w = _random_target(nf.ambient, rng)
        try:
            n = len(preimages(nf, w, rng))
        except (np.linalg.LinAlgError, FloatingPointError):
            discarded.append(k)
            continue
        if n == 0:
            discarded.append(k)
            continue
        counts.append(n)
    if not counts:
        return TopologicalDegree(None, [], discarded, "all trials discarded: undetermined")
    mode, freq = Counter(counts).most_common(1)[0]
    note = f"{freq}/{len(counts)} trials agree" + (f"; discarded {len(discarded)}" if discarded else "")
    return TopologicalDegree(int(mode), counts, discarded, note)


# ---------------------------------------------------------------------------
# stability


@dataclass
class OrbitLog:
    start: list
    min_distance: float
    hit_step: int | None
    segment: list = field(default_factory=list)


@dataclass
class StabilityReport:
    degrees: list[list[list[int]]]
    degree_method: str
    truncated: bool
    multiplicative: bool
    lambda1: float
    lambda1_method: str
    lambda1_fit: float
    lambda1_fit_residual: float
    lambda2: int | None
    lambda2_evidence: dict
    small_topological_degree: bool | None
    verdict: str  # stable-up-to-N | violated-at-n | undetermined
    verdict_test: str
    N: int
    orbit_N: int
    orbits: list[OrbitLog] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, default=_jsonable)


def _jsonable(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return [_jsonable(complex(v)) for v in o]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def first_dynamical_degree(report_or_seq) -> tuple[float, str]:
    """lambda_1 with its method tag: exact spectral radius if multiplicative, else ratio fit."""
    if isinstance(report_or_seq, StabilityReport):
        return report_or_seq.lambda1, report_or_seq.lambda1_method
    seq = report_or_seq.degrees if isinstance(report_or_seq, DegreeSequence) else list(report_or_seq)
    if len(seq) < 3:
        raise ValueError("degree sequence too short (need >= 3 terms)")
    if is_multiplicative(seq):
        return seq[0].spectral_radius(), "exact"
    lam, _ = ratio_fit(seq, tail=max(3, len(seq) // 2))
    return lam, "ratio-fit"


def orbit_test(nf: NumericMap, starts, targets, n_steps: int, tol: float = ORBIT_TOL) -> list[OrbitLog]:
    """Forward orbits of the start points, watched against the target set."""
    amb = nf.ambient
    logs = []
    for q in starts:
        p = normalize(q, amb)
        seg = [p]
        best, hit = np.inf, None
        for n in range(0, n_steps + 1):
            if targets:
                dmin = min(float(chordal(p, t, amb)) for t in targets)
                best = min(best, dmin)
                if dmin < tol:
                    hit = n
                    break
            if n == n_steps:
                break
            try:
                p = sl._evaluate_nf(nf, p)
            except Indeterminate:
                hit = n
                break
            seg.append(p)
        logs.append(OrbitLog([complex(v) for v in normalize(q, amb)], best, hit,
                             [[complex(v) for v in s] for s in seg[-4:]] if hit is not None else []))
    return logs


def check_one_stability(f: HomogeneousMap, N: int = MAX_SYMBOLIC_N, params: dict | None = None,
                        loci: sl.SingularLoci | None = None, orbit_N: int = 30, trials: int = 10,
                        seed: int = 0, tol: float = ORBIT_TOL, degree_method: str = "auto") -> StabilityReport:
    if f.exact and params:
        f = specialize(f, params)
        params = None
    seq = degree_sequence(f, N, method=degree_method)
    degs = seq.degrees
    mult = is_multiplicative(degs)
    lam_fit, lam_res = ratio_fit(degs) if len(degs) >= 2 else (float("nan"), float("nan"))
    if len(degs) >= 3:
        lam1, lam_method = first_dynamical_degree(degs)
    else:
        lam1, lam_method = degs[0].spectral_radius(), "exact-first-term"
    nf = NumericMap.from_map(f, params)
    td = topological_degree(nf, trials=trials, seed=seed)
    small = None if td.value is None else bool(td.value < lam1 - 1e-9)
    warnings = []
    if td.value is not None and td.value > lam1 + 1e-9:
        warnings.append(f"lambda2 = {td.value} exceeds lambda1 = {lam1:.6g}: inconsistent, treat as a bug")
    elif td.value is not None and not small:
        warnings.append(f"lambda2 = {td.value} equals lambda1: not of small topological degree")
    if loci is None:
        loci = sl.singular_loci(f, params, seed=seed)
    orbits = orbit_test(nf, loci.contracted_points, loci.indeterminacy, orbit_N, tol)
    drop = first_drop(degs)
    hits = [o.hit_step for o in orbits if o.hit_step is not None]
    if drop is not None:
        verdict, test = f"violated-at-{drop}", "degree-multiplicativity"
    elif hits:
        verdict, test = f"violated-at-{min(hits) + 1}", "orbit of I- meets I+"
    elif seq.truncated and len(degs) < 2:
        verdict, test = "undetermined", "degree sequence truncated"
    else:
        verdict, test = f"stable-up-to-{len(degs)}", f"degrees multiplicative to n={len(degs)}; orbits avoid I+ for {orbit_N} steps"
    return StabilityReport(
        degrees=[list(map(list, d.matrix)) for d in degs], degree_method=seq.method, truncated=seq.truncated,
        multiplicative=mult, lambda1=float(lam1), lambda1_method=lam_method, lambda1_fit=lam_fit,
        lambda1_fit_residual=lam_res, lambda2=td.value, lambda2_evidence=td.to_dict(),
        small_topological_degree=small, verdict=verdict, verdict_test=test, N=N, orbit_N=orbit_N,
        orbits=orbits, warnings=warnings,
    )
