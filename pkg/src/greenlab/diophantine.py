"""Nearest-odd-integer distances eps(n) = min_m |2 n theta - (2m + 1)| and their record minima.

theta is held as a fixed-point integer Theta = floor(theta 2^P); then
2 n theta = 2 n Theta / 2^P up to 2n 2^-P, and the scan is exact integer
arithmetic. P starts at 256 bits and doubles until every eps(n) of the scan
is certified to relative accuracy 2^-100.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import mpmath

DEFAULT_BITS = 256
CERT_BITS = 100
MAX_BITS = 8192
RATIONAL_GUARD = 2**64


class RationalTheta(ValueError):
    """theta is rational, or effectively so at the scanned range."""


class PrecisionError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Theta:
    """A real number given by a name and an mpmath evaluator at any precision."""

    name: str
    _eval: object = field(repr=False, compare=False)

    def value(self, bits: int) -> mpmath.mpf:
        with mpmath.workprec(bits + 64):
            return +self._eval()

    def fixed(self, bits: int) -> int:
        """floor(theta 2^bits) (theta evaluated with 64 guard bits)."""
        with mpmath.workprec(bits + 64):
            return int(mpmath.floor(self._eval() * mpmath.mpf(2) ** bits))

    def __float__(self):
        return float(self.value(64))


def golden() -> Theta:
    return Theta("golden", lambda: (mpmath.sqrt(5) - 1) / 2)


def sqrt2m1() -> Theta:
    return Theta("sqrt2m1", lambda: mpmath.sqrt(2) - 1)


def liouville(k: int = 6) -> Theta:
    """sum_{j=1..k} 10^-j! (rational, but with partial quotients far beyond any scan)."""
    return Theta(f"liouville-{k}", lambda: mpmath.fsum(mpmath.mpf(10) ** (-math.factorial(j)) for j in range(1, k + 1)))


def parse_theta(spec) -> Theta:
    """Named constant (golden, sqrt2m1, liouville-k), decimal string, or p/q."""
    if isinstance(spec, Theta):
        return spec
    s = str(spec).strip()
    if s == "golden":
        return golden()
    if s == "sqrt2m1":
        return sqrt2m1()
    m = re.fullmatch(r"liouville(?:-(\d+))?", s)
    if m:
        return liouville(int(m.group(1) or 6))
    m = re.fullmatch(r"(-?\d+)/(\d+)", s)
    if m:
        p, q = int(m.group(1)), int(m.group(2))
        return Theta(s, lambda: mpmath.mpf(p) / q)
    try:
        mpmath.mpf(s)
    except (ValueError, TypeError):
        raise ValueError(f"cannot parse theta {spec!r}") from None
    return Theta(s, lambda: mpmath.mpf(s))


# ---------------------------------------------------------------------------
# continued fractions


def partial_quotients(num: int, den: int, max_terms: int = 200) -> list[int]:
    """Continued fraction of num/den (Euclid), at most max_terms quotients."""
    out = []
    while den and len(out) < max_terms:
        a, r = divmod(num, den)
        out.append(a)
        num, den = den, r
    return out


def convergents(quotients) -> list[tuple[int, int]]:
    p0, q0, p1, q1 = 1, 0, quotients[0], 1
    out = [(p1, q1)]
    for a in quotients[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return out


def continued_fraction(theta: Theta, q_max: int, bits: int = DEFAULT_BITS, scale: int = 1) -> tuple[list[int], bool]:
    """Partial quotients of scale*theta whose convergent denominators stay <= q_max.

    Returns (quotients, terminated); terminated means the expansion ended
    inside the range, i.e. scale*theta is rational there.
    """
    T = theta.fixed(bits) * scale
    D = 1 << bits
    full = partial_quotients(T, D, max_terms=10_000)
    qs = [full[0]]
    q_prev, q = 0, 1
    for a in full[1:]:
        q_next = a * q + q_prev
        if q_next > q_max:
            break
        qs.append(a)
        q_prev, q = q, q_next
    # rational in range if the last convergent survives doubled precision
    p, q = convergents(qs)[-1]
    hi = 2 * bits
    return qs, theta.fixed(hi) * scale == (p << hi) // q


def rationality_guard(theta: Theta, N: int, bits: int = DEFAULT_BITS) -> list[int]:
    """Reject theta whose expansion ends, or has a quotient > 2^64, among denominators <= 2N."""
    qs, terminated = continued_fraction(theta, 2 * N, bits)
    if terminated:
        raise RationalTheta(f"theta={theta.name} is rational (finite continued fraction)")
    big = [a for a in qs[1:] if a > RATIONAL_GUARD]
    if big:
        raise RationalTheta(f"theta={theta.name} has partial quotient {big[0]} > 2^64: effectively rational")
    return qs


# ---------------------------------------------------------------------------
# eps(n)


def _eps_fixed(X: int, bits: int) -> tuple[int, int]:
    """Distance (times 2^bits) from X / 2^bits to the nearest odd integer, and that odd integer's m."""
    one = 1 << bits
    r = X % (2 * one)
    k = (X - r) // (2 * one)  # X/2^bits lies in [2k, 2k+2)
    d = abs(r - one)
    # r == 0 is equidistant from 2k - 1 and 2k + 1: take the smaller m
    m = k - 1 if r == 0 else k
    return d, m


def epsilon(theta, n: int, bits: int = DEFAULT_BITS) -> mpmath.mpf:
    """eps(n) = min_m |2 n theta - (2m+1)|, certified to relative accuracy 2^-100."""
    theta = parse_theta(theta)
    if n < 1:
        raise ValueError("n must be >= 1")
    d, _ = _eps_fixed(2 * n * theta.fixed(bits), bits)
    if d == 0:
        raise RationalTheta(f"eps({n}) = 0: theta={theta.name} is rational")
    err = 2 * n + 1  # ulps of 2^-bits
    if err * (1 << CERT_BITS) > d:
        raise PrecisionError(f"eps({n}) not certified at {bits} bits; retry with more precision")
    with mpmath.workprec(bits + 16):
        return mpmath.mpf(d) / mpmath.mpf(2) ** bits


def _certified_bits(theta: Theta, N: int, bits: int):
    """Scan n <= N at increasing precision until the smallest eps is certified."""
    while True:
        step = 2 * theta.fixed(bits)
        X = 0
        dmin = None
        ds, ms = [], []
        for _ in range(N):
            X += step
            d, m = _eps_fixed(X, bits)
            ds.append(d)
            ms.append(m)
            if dmin is None or d < dmin:
                dmin = d
        if dmin == 0:
            raise RationalTheta(f"eps vanishes in the scan: theta={theta.name} is rational")
        if (2 * N + 1) << CERT_BITS <= dmin:
            return bits, ds, ms
        bits *= 2
        if bits > MAX_BITS:
            raise PrecisionError(f"eps not certified below {MAX_BITS} bits at N={N}")


@dataclass
class DiophantineProfile:
    theta: str
    theta_digits: str
    N: int
    bits: int
    minima: list  # (n_j, eps(n_j) as mpf, m_j, gcd(2 n_j, 2 m_j + 1))
    quotients: list
    criteria: dict = field(default_factory=dict)
    _log_eps: list = field(default_factory=list, repr=False)

    def table(self, upto: int | None = None):
        """(n, log eps(n)) for n <= upto."""
        upto = self.N if upto is None else min(upto, self.N)
        return [(n, self._log_eps[n - 1]) for n in range(1, upto + 1)]

    def to_dict(self) -> dict:
        return {"theta": self.theta, "theta_digits": self.theta_digits, "N": self.N, "bits": self.bits,
                "minima": [{"n": n, "eps": mpmath.nstr(e, 30), "m": m, "gcd": g} for n, e, m, g in self.minima],
                "partial_quotients": self.quotients[:40], "criteria": self.criteria}


def minima_sequence(theta, N: int, bits: int = DEFAULT_BITS, profile: bool = False):
    """Record minima n_0 = 1 < n_1 < ... with eps(n_j) < eps(n_{j-1}), scanning n <= N."""
    theta = parse_theta(theta)
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > 10**6:
        raise ValueError("scans are limited to N <= 10^6")
    qs = rationality_guard(theta, N, bits)
    bits, ds, ms = _certified_bits(theta, N, bits)
    recs = []
    best = None
    with mpmath.workprec(bits + 16):
        scale = mpmath.mpf(2) ** bits
        for n in range(1, N + 1):
            d = ds[n - 1]
            if best is None or d < best:
                best = d
                m = ms[n - 1]
                recs.append((n, mpmath.mpf(d) / scale, m, math.gcd(2 * n, 2 * m + 1)))
        if not profile:
            return [(n, e) for n, e, _, _ in recs]
        log_scale = bits * math.log(2)
        log_eps = [math.log(d) - log_scale if d else -math.inf for d in ds]
        return DiophantineProfile(theta.name, mpmath.nstr(theta.value(bits), 40), N, bits, recs, qs, {}, log_eps)


# ---------------------------------------------------------------------------
# criterion and model profile


def criterion(theta, q: float, N: int, lam: float = 2.0, minima=None) -> dict:
    """Running sup of lam^-n_j |log eps(n_j)|^q with a trend verdict from the last 5 records."""
    if minima is None:
        minima = minima_sequence(theta, N)
    recs = [(n, e) for n, e, *_ in minima]
    if len(recs) < 3:
        return {"q": q, "lambda1": lam, "values": [], "sup": None, "verdict": "undetermined",
                "reason": "fewer than 3 records"}
    logs = []
    for n, e in recs:
        le = abs(float(mpmath.log(e)))
        logs.append(-n * math.log(lam) + (q * math.log(le) if le > 0 else (0.0 if q == 0 else -math.inf)))
    run = []
    cur = -math.inf
    for v in logs:
        cur = max(cur, v)
        run.append(cur)
    last5 = run[-5:]
    growing = any(b > a for a, b in zip(last5, last5[1:]))
    return {"q": q, "lambda1": lam, "n": [n for n, _ in recs], "log_values": logs,
            "values": [math.exp(v) for v in logs], "sup": math.exp(run[-1]),
            "verdict": "growing" if growing else "bounded", "records": len(recs)}


def mean_profile_model(theta, lam: float, ts, bits: int = DEFAULT_BITS, cutoff: float = 1e-12) -> list[tuple[float, float]]:
    """(t, sum_{n>=0} lam^-n max{log eps(n), t}), truncated once lam^-n |t| < cutoff."""
    theta = parse_theta(theta)
    out = []
    T = theta.fixed(bits)
    cache = {}
    for t in ts:
        t = float(t)
        total = 0.0
        n = 1  # the n = 0 term is max{log 1, t} = 0 for t <= 0
        if t > 0:
            total += t
        while lam ** (-n) * max(abs(t), 1e-300) >= cutoff:
            if n not in cache:
                d, _ = _eps_fixed(2 * n * T, bits)
                cache[n] = math.log(d) - bits * math.log(2) if d else -math.inf
            total += lam ** (-n) * max(cache[n], t)
            n += 1
        out.append((t, total))
    return out


def neighbours_of_denominators(theta, N: int, bits: int = DEFAULT_BITS) -> set[int]:
    """{q_k, q_k +- q_(k-1)} over the convergent denominators of 2 theta up to 2N."""
    theta = parse_theta(theta)
    qs, _ = continued_fraction(theta, 2 * N, bits, scale=2)
    dens = [q for _, q in convergents(qs)]
    out = set(dens)
    for a, b in zip(dens, dens[1:]):
        out |= {b + a, b - a}
    return out
