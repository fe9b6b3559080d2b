"""Numeric solution of two polynomial equations in two unknowns.

The second unknown is eliminated with a Sylvester resultant whose entries are
obtained by sampling; the resultant is interpolated on a circle, its roots come
from the companion matrix (``numpy.roots``), and each candidate is polished by
Newton's method on the original pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .surface_maps import NumericMap, factor_blocks, normalize


def _coeffs_in_v(g, u: complex, deg_v: int) -> np.ndarray:
    """Coefficients (ascending) of v -> g(u, v) for each equation, shape (2, deg_v + 1)."""
    k = deg_v + 1
    w = np.exp(2j * np.pi * np.arange(k) / k)
    vals = g(np.full(k, u), w)  # (2, k)
    return np.fft.fft(vals, axis=1) / k


def _sylvester(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Sylvester matrix of ascending coefficient vectors p (deg m), q (deg n)."""
    m, n = len(p) - 1, len(q) - 1
    size = m + n
    s = np.zeros((size, size), dtype=complex)
    pd, qd = p[::-1], q[::-1]
    for i in range(n):
        s[i, i:i + m + 1] = pd
    for i in range(m):
        s[n + i, i:i + n + 1] = qd
    return s


def _trim(c: np.ndarray, rel: float = 1e-11) -> np.ndarray:
    """Drop negligible leading coefficients of an ascending coefficient vector."""
    scale = np.max(np.abs(c)) if c.size else 0.0
    k = len(c)
    while k > 1 and abs(c[k - 1]) <= rel * scale:
        k -= 1
    return c[:k]


@dataclass
class PairSystem:
    """g(u, v) -> (2, m) values, dg(u, v) -> (2, 2, m) partials; degree data for elimination."""

    g: object
    dg: object
    deg_v: tuple[int, int]
    resultant_degree: int


def solve_pair(sys: PairSystem, tol: float = 1e-9, newton_steps: int = 40) -> list[tuple[complex, complex, float]]:
    """All (u, v, residual) with both equations vanishing; duplicates removed."""
    d1, d2 = sys.deg_v
    if d1 == 0 and d2 == 0:
        return []
    K = max(sys.resultant_degree, 0) + 1
    us = np.exp(2j * np.pi * np.arange(K) / K)
    dets = np.empty(K, dtype=complex)
    for k, u in enumerate(us):
        c = _coeffs_in_v(sys.g, u, max(d1, d2))
        p, q = c[0, : d1 + 1], c[1, : d2 + 1]
        if d1 == 0:
            dets[k] = p[0] ** d2
        elif d2 == 0:
            dets[k] = q[0] ** d1
        else:
            dets[k] = np.linalg.det(_sylvester(p, q))
    res = _trim(np.fft.fft(dets) / K)
    if len(res) <= 1:
        return []
    u_roots = np.roots(res[::-1])
    cands = []
    for u in u_roots:
        c = _coeffs_in_v(sys.g, u, max(d1, d2))
        deg_main = d1 if d1 >= 1 else d2
        row = 0 if d1 >= 1 else 1
        pc = _trim(c[row, : deg_main + 1])
        vs = np.roots(pc[::-1]) if len(pc) > 1 else np.array([], dtype=complex)
        if len(vs) == 0:
            continue
        other = sys.g(np.full(len(vs), u), vs)[1 - row]
        j = np.argsort(np.abs(other))
        # keep the best few candidates; Newton decides
        for v in vs[j[: max(1, len(vs))]]:
            cands.append((u, v))
    out = []
    for u, v in cands:
        z = np.array([u, v], dtype=complex)
        for _ in range(newton_steps):
            val = sys.g(z[:1], z[1:])[:, 0]
            jac = sys.dg(z[:1], z[1:])[:, :, 0]
            try:
                step = np.linalg.solve(jac, val)
            except np.linalg.LinAlgError:
                break
            z = z - step
            if np.linalg.norm(step) < 1e-15 * (1 + np.linalg.norm(z)):
                break
        val = sys.g(z[:1], z[1:])[:, 0]
        scale = _local_scale(sys, z)
        r = float(np.max(np.abs(val)) / scale)
        if r < tol and np.all(np.isfinite(z)):
            if not any(abs(z[0] - a) + abs(z[1] - b) < 1e-7 * (1 + abs(a) + abs(b)) for a, b, _ in out):
                out.append((complex(z[0]), complex(z[1]), r))
    return out


def _local_scale(sys, z) -> float:
    jac = sys.dg(z[:1], z[1:])[:, :, 0]
    return float(max(1.0, np.max(np.abs(jac)) * (1 + np.max(np.abs(z)))))


# ---------------------------------------------------------------------------
# charts with random coordinates


def random_frame(ambient: str, rng: np.random.Generator) -> list[np.ndarray]:
    """Random unitary frame per projective factor."""
    frames = []
    for b in factor_blocks(ambient):
        n = len(b)
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        q, _ = np.linalg.qr(a)
        frames.append(q)
    return frames


def chart_lift(ambient: str, frames, u, v):
    """Points of the random affine chart as lifts, shape (m, ncoords), and the tangent vectors."""
    u = np.atleast_1d(u)
    v = np.atleast_1d(v)
    m = len(u)
    if ambient == "P2":
        q = frames[0]
        base = np.stack([u, v, np.ones(m)], axis=1)
        return base @ q.T, np.tile(q[:, 0], (m, 1)), np.tile(q[:, 1], (m, 1))
    q1, q2 = frames
    x = np.stack([u, np.ones(m)], axis=1) @ q1.T
    y = np.stack([v, np.ones(m)], axis=1) @ q2.T
    lift = np.concatenate([x, y], axis=1)
    du = np.zeros((m, 4), dtype=complex)
    dv = np.zeros((m, 4), dtype=complex)
    du[:, :2] = q1[:, 0]
    dv[:, 2:] = q2[:, 0]
    return lift, du, dv


def pair_from_functions(nf: NumericMap, frames, eqs, deg_v, resultant_degree) -> PairSystem:
    """Equations given as linear forms on the component vector: eqs has shape (2, ncomp)."""
    eqs = np.asarray(eqs, dtype=complex)

    def g(u, v):
        lift, _, _ = chart_lift(nf.ambient, frames, u, v)
        return eqs @ nf(lift).T

    def dg(u, v):
        lift, du, dv = chart_lift(nf.ambient, frames, u, v)
        jac = nf.jacobian(lift)  # (m, ncomp, ncoords)
        gu = np.einsum("ec,mcn,mn->em", eqs, jac, du)
        gv = np.einsum("ec,mcn,mn->em", eqs, jac, dv)
        return np.stack([gu, gv], axis=1)

    return PairSystem(g, dg, deg_v, resultant_degree)


def solutions_to_points(nf: NumericMap, frames, sols) -> list[np.ndarray]:
    if not sols:
        return []
    u = np.array([s[0] for s in sols])
    v = np.array([s[1] for s in sols])
    lift, _, _ = chart_lift(nf.ambient, frames, u, v)
    return [normalize(p, nf.ambient) for p in lift]
