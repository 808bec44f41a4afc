"""Log-space blow-up certificates for nonnegative-spectrum data.

For data with û0 >= A ŵ, ŵ >= 0 even and supported in the unit ball, the
spectrum obeys û(t) >= A^(3^k) alpha_k(t) ŵ^{*3^k} with

    log alpha_k(t) = 3^k (-(3/2) ln 3 + (1/2) ln c - t) + (3/2 + k) ln 3 - (1/2) ln c

for t >= t_k = (delta/2)(1 - 9^-k), c = 1 - exp(-4 delta).  Every such
quantity is held as a pair (lead, tail) standing for 3^k lead + tail so that
k can run far past float range.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

from .data import MIN_N, Bump, BumpSpec, ShellModel, eps_N
from .errors import InternalInconsistency, NegativeK, NonPositive, NonPositiveDelta, NTooSmall, ProbeBelowTk
from .field import Grid, _reflect, product3_spectral

__all__ = [
    "LogPair",
    "RecursionParams",
    "BlowupCertificate",
    "c_delta",
    "t_k",
    "t_k_exact",
    "log_alpha_k",
    "log_alpha_pair",
    "induction_margins",
    "verify_induction_step",
    "a_min",
    "certify",
    "tau_N",
    "tau_summand",
    "tau_N_log_threshold",
    "convolved_bump",
    "certify_theorem33",
    "smallest_certified_N",
]

LN3 = math.log(3.0)
# a float probe this close to t_k is taken to mean t_k itself
SNAP_ULPS = 2


@dataclass(frozen=True)
class LogPair:
    """The real number 3^k * lead + tail."""

    k: int
    lead: float
    tail: float

    @property
    def value(self) -> float:
        if self.lead == 0:
            return self.tail
        if self.k * LN3 + math.log(abs(self.lead)) > 709:
            return math.copysign(math.inf, self.lead)
        return 3.0**self.k * self.lead + self.tail

    def __add__(self, other: "LogPair") -> "LogPair":
        if other.k != self.k:
            raise ValueError("pairs must share the 3-adic exponent")
        return LogPair(self.k, self.lead + other.lead, self.tail + other.tail)


def c_delta(delta: float) -> float:
    if not delta > 0:
        raise NonPositiveDelta(f"delta must be positive, got {delta}")
    return -math.expm1(-4 * delta)


def t_k(k: int, delta: float) -> float:
    """4 delta sum_{j=1}^k 9^-j = (delta/2)(1 - 9^-k)."""
    if k < 0:
        raise NegativeK(f"k must be >= 0, got {k}")
    c_delta(delta)
    return -0.5 * delta * math.expm1(-k * math.log(9.0))


def t_k_exact(k: int, delta: float) -> Fraction:
    """t_k as an exact rational in the binary value of ``delta``."""
    if k < 0:
        raise NegativeK(f"k must be >= 0, got {k}")
    c_delta(delta)
    return Fraction(delta) / 2 * (1 - Fraction(1, 9**k))


def _reached(t: float, k: int, delta: float) -> bool:
    """t >= t_k, counting float probes within a few ulps of t_k as equal."""
    if Fraction(t) >= t_k_exact(k, delta):
        return True
    return abs(t - t_k(k, delta)) <= SNAP_ULPS * math.ulp(max(t, 1e-300))


def log_alpha_pair(k: int, t: float, delta: float) -> LogPair:
    c = c_delta(delta)
    lc = math.log(c)
    return LogPair(k, math.fsum([-1.5 * LN3, 0.5 * lc, -t]), (1.5 + k) * LN3 - 0.5 * lc)


def log_alpha_k(k: int, t: float, delta: float) -> float:
    """log alpha_k(t), or -inf before t_k."""
    if k < 0:
        raise NegativeK(f"k must be >= 0, got {k}")
    if t < 0:
        raise ValueError("t must be >= 0")
    if not _reached(t, k, delta):
        return -math.inf
    if k == 0:
        return -t
    return log_alpha_pair(k, t, delta).value


def _probe_offset(k: int, delta: float, t: float) -> Fraction:
    """Exact t - t_{k-1}, snapping near-t_k float probes onto t_k."""
    exact_tk = t_k_exact(k, delta)
    ft = Fraction(t)
    if ft < exact_tk:
        if abs(t - t_k(k, delta)) > SNAP_ULPS * math.ulp(t):
            raise ProbeBelowTk(f"probe t={t!r} lies below t_{k}={float(exact_tk)!r}")
        ft = exact_tk
    return ft - t_k_exact(k - 1, delta)


def induction_margins(k: int, delta: float, t_probe) -> list[float]:
    """log(LHS / RHS) of the induction inequality at each probe.

    LHS = int_{t_{k-1}}^t e^{-3^k s} e^{9^k (s - t)} ds
        = e^{-3^k t} (1 - e^{-(9^k - 3^k)(t - t_{k-1})}) / (9^k - 3^k),
    RHS = 9^-k c e^{-3^k t}.  Writing y = (9^k - 3^k)(t - t_{k-1}) - 4 delta,
    exactly in rationals,

        log(LHS / RHS) = -log1p(-3^-k) + log1p(-e^{-4 delta} expm1(-y) / c).

    At t = t_k, y = -4 delta 3^-k and the margin is of order 3^-k, so the
    offset is never formed in floating point.
    """
    if k < 1:
        raise NegativeK(f"induction steps start at k = 1, got {k}")
    c = c_delta(delta)
    e4 = math.exp(-4 * delta)
    first = -math.log1p(-(3.0**-k))
    out = []
    for t in t_probe:
        dt = _probe_offset(k, delta, float(t))
        y = float((9**k - 3**k) * dt - 4 * Fraction(delta))
        second = math.log1p(-e4 * math.expm1(-y) / c) if y > -700 else -math.inf
        out.append(first + second)
    return out


def verify_induction_step(k: int, delta: float, t_probe) -> bool:
    return all(m >= 0 for m in induction_margins(k, delta, t_probe))


def a_min(delta: float, w_l1: float) -> float:
    """Amplitude threshold 3^(3/2) c^(-1/2) e^(delta/2) / ||w_hat||_1."""
    if not w_l1 > 0:
        raise NonPositive(f"||w_hat||_1 must be positive, got {w_l1}")
    return 3**1.5 * math.exp(delta / 2) / (math.sqrt(c_delta(delta)) * w_l1)


@dataclass(frozen=True)
class RecursionParams:
    delta: float
    A: float
    log_w_l1: float
    k_max: int = 40

    def __post_init__(self):
        if not self.delta > 0:
            raise NonPositiveDelta("delta must be positive")
        if not self.A > 0:
            raise NonPositive("amplitude must be positive")
        if self.k_max < 1:
            raise NegativeK("k_max must be >= 1")
        if not math.isfinite(self.log_w_l1):
            raise NonPositive("log ||w_hat||_1 must be finite")


@dataclass
class BlowupCertificate:
    params: RecursionParams
    per_k: list[tuple[int, float, LogPair]]
    verdict: str
    margin: float
    a_min: float
    max_log_bound: float
    decided_by: str
    chain: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == "Certified"

    def to_dict(self) -> dict:
        def _finite(v):
            return v if math.isfinite(v) else None

        out = {
            "delta": self.params.delta,
            "A": self.params.A,
            "log_w_l1": self.params.log_w_l1,
            "k_max": self.params.k_max,
            "k_table": [[k, tk, _finite(L.value)] for k, tk, L in self.per_k],
            "k_table_pairs": [[k, L.lead, L.tail] for k, _, L in self.per_k],
            "a_min": self.a_min,
            "verdict": self.verdict,
            "margin": self.margin,
            "max_log_bound": _finite(self.max_log_bound),
            "decided_by": self.decided_by,
            "constants": {"c_delta": c_delta(self.params.delta), "ln3": LN3},
        }
        if self.chain:
            out["chain"] = self.chain
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _log_bound(k: int, delta: float, log_A: float, log_w: float) -> LogPair:
    """log of A^(3^k) alpha_k(delta/2) ||w_hat||_1^(3^k) as a pair."""
    alpha = log_alpha_pair(k, delta / 2, delta)
    return LogPair(k, log_A + log_w + alpha.lead, alpha.tail)


def _step_positive(a: LogPair, b: LogPair) -> bool:
    """Sign of b - a for consecutive pairs, b.k = a.k + 1, without overflow."""
    # b - a = 3^k (3 b.lead - a.lead) + (b.tail - a.tail)
    slope = 3 * b.lead - a.lead
    gap = b.tail - a.tail
    if slope == 0:
        return gap > 0
    if (slope > 0) == (gap > 0) or gap == 0:
        return slope > 0
    # opposite signs: compare a.k ln3 + ln|slope| with ln|gap|
    big = a.k * LN3 + math.log(abs(slope))
    return (big > math.log(abs(gap))) == (slope > 0)


def certify(params: RecursionParams, window: int = 5) -> BlowupCertificate:
    """Closed-form threshold check corroborated by the explicit L_k table."""
    delta = params.delta
    log_A = math.log(params.A)
    threshold = a_min(delta, math.exp(params.log_w_l1)) if abs(params.log_w_l1) < 700 else None
    lc = math.log(c_delta(delta))
    # ln(A / a_min), assembled without forming a_min
    margin = math.fsum([log_A, params.log_w_l1, -1.5 * LN3, 0.5 * lc, -delta / 2])
    closed = margin >= 0

    per_k = [(k, t_k(k, delta), _log_bound(k, delta, log_A, params.log_w_l1)) for k in range(params.k_max + 1)]
    steps = [_step_positive(per_k[i][2], per_k[i + 1][2]) for i in range(params.k_max)]
    tail = steps[-min(window, len(steps)):]
    table = all(tail)
    mixed = any(tail) and not table

    # below this |margin| the closed form cannot be resolved in double precision;
    # growth over the table's final window then decides
    resolution = 64 * math.ulp(max(abs(log_A), abs(params.log_w_l1), 1.0))
    if abs(margin) <= resolution:
        certified, decided_by = table, "table"
    elif closed != table or mixed:
        raise InternalInconsistency(
            f"closed-form threshold says {closed}, L_k table says {table} (margin {margin:.3e})"
        )
    else:
        certified, decided_by = closed, "both"

    vals = [L.value for _, _, L in per_k]
    return BlowupCertificate(
        params=params,
        per_k=per_k,
        verdict="Certified" if certified else "NotCertified",
        margin=margin,
        a_min=threshold if threshold is not None else math.nan,
        max_log_bound=max(vals),
        decided_by=decided_by,
    )


# -- the oscillating-datum chain ------------------------------------------------

TAU_DIRECT = 60
_TAIL_RATIO = 2.0 ** (-7 / 3) / 6


def _check_N(N: int) -> None:
    if N < MIN_N:
        raise NTooSmall(f"N must be >= {MIN_N}, got {N}")


def _tau_core(k: int, delta: float) -> float:
    ratio = 2.0 ** (-7 / 3) / (6 - 2.0 ** (-2 * k))
    etas = k ** (-2 / 3) * (k + 1) ** (-1 / 3)
    expo = 0.5 * delta * (1 - 3 * 2.0 ** (2 * k + 1))
    return ratio * etas * math.exp(-2 * delta) * -math.expm1(max(expo, -800.0))


def tau_summand(k: int, N: int, delta: float) -> float:
    """k-th term of tau_N."""
    _check_N(N)
    c_delta(delta)
    return eps_N(N) ** 3 * _tau_core(k, delta)


def _tail_sum(a: int, b: int) -> float:
    """sum_{k=a}^{b} k^-1 (1 + 1/k)^(-1/3) via the binomial series in 1/k."""
    if b < a:
        return 0.0
    total = 0.0
    coef = 1.0
    for m in range(0, 16):
        if m > 0:
            coef *= (-1 / 3 - (m - 1)) / m
        if m == 0:
            part = _harmonic(a, b)
        else:
            hi = 0.0 if b > 10**15 else float(special.zeta(m + 1, float(b) + 1.0))
            part = float(special.zeta(m + 1, float(a))) - hi
        total += coef * part
    return total


def _harmonic(a: int, b: int) -> float:
    if b > 10**15:
        return math.log(b) + 0.5 / b - float(special.digamma(float(a)))
    return float(special.digamma(float(b) + 1.0) - special.digamma(float(a)))


def tau_N(N: int, delta: float) -> float:
    """Lower bound factor for ||û_N(delta/2)||_1 / ||ŵ||_1^3, summed exactly as written.

    The first ``TAU_DIRECT`` terms are summed directly; past them the term
    ratio and the exponential factor equal their limits to double precision
    and the rest is a closed-form series, so any N (including huge ints)
    costs O(1).
    """
    _check_N(N)
    c_delta(delta)
    last = N - 1
    eps3 = eps_N(N) ** 3
    head = math.fsum(_tau_core(k, delta) for k in range(1, min(last, TAU_DIRECT) + 1))
    if last <= TAU_DIRECT:
        return eps3 * head
    return eps3 * (head + _TAIL_RATIO * math.exp(-2 * delta) * _tail_sum(TAU_DIRECT + 1, last))


def _tau_from_logN(log_N: float, delta: float) -> float:
    """tau_N for N = e^log_N beyond integer range (upper end in asymptotic form)."""
    eps3 = (1 / math.log(log_N)) ** 3
    head = math.fsum(_tau_core(k, delta) for k in range(1, TAU_DIRECT + 1))
    tail = 0.0
    coef = 1.0
    for m in range(0, 16):
        if m > 0:
            coef *= (-1 / 3 - (m - 1)) / m
        part = (log_N - float(special.digamma(TAU_DIRECT + 1.0))) if m == 0 else float(special.zeta(m + 1, TAU_DIRECT + 1.0))
        tail += coef * part
    return eps3 * (head + _TAIL_RATIO * math.exp(-2 * delta) * tail)


def convolved_bump(bump: BumpSpec, grid: Grid) -> dict:
    """Evenised shifted triple convolution of the bump's lobe, on the grid.

    Returns its L^1 mass, the lobe's mass and the largest |coefficient|
    found at |xi| >= 1 relative to the peak (the support test).
    """
    b = Bump(bump, grid)
    xi = grid.xi()
    lobe = b.lobe(xi)
    conv = product3_spectral(lobe.astype(complex), lobe.astype(complex), lobe.astype(complex), grid, real=False)
    # (b*b*b)(xi + e1): roll by -1/dk lattice steps along axis 0
    steps = int(round(1.0 / grid.dk))
    if abs(steps * grid.dk - 1.0) > 1e-12:
        raise ValueError("the unit shift must be a lattice vector")
    shifted = np.roll(conv, -steps, axis=0)
    even = 0.5 * (shifted + _reflect(shifted))
    peak = float(np.max(np.abs(even)))
    outside = grid.xi_abs >= 1.0 - 1e-12
    leak = float(np.max(np.abs(even[outside]))) / peak if np.any(outside) else 0.0
    cell = grid.spectral_cell
    return {
        "l1": float(np.sum(np.abs(even)) * cell),
        "lobe_l1": float(np.sum(lobe) * cell),
        "support_leak": leak,
        "min_real": float(np.min(even.real)) / peak,
    }


def _default_grid(dim: int = 3) -> Grid:
    return Grid(dim, 32)


def certify_theorem33(
    N: int | None,
    delta: float,
    bump: BumpSpec = BumpSpec(),
    grid: Grid | None = None,
    besov_grid: Grid | None = None,
    log_N: float | None = None,
) -> BlowupCertificate:
    """Blow-up certificate for the oscillating datum u_{0,N} before time delta.

    At t = delta/2 the spectrum dominates (tau_N / 8) times the evenised
    shifted triple convolution of the bump's lobe (each lobe carries half of
    the evenised bump, hence 1/8); the amplitude certificate with that
    amplitude and the remaining delta/2 finishes the chain.  ``log_N`` may
    replace ``N`` when N itself does not fit in memory.
    """
    if log_N is None:
        _check_N(N)
        log_N = math.log(N)
        tau = tau_N(N, delta)
    else:
        if log_N < math.log(MIN_N):
            raise NTooSmall("N must be >= 3")
        tau = _tau_from_logN(log_N, delta)
    grid = _default_grid() if grid is None else grid
    conv = convolved_bump(bump, grid)
    if conv["support_leak"] > 1e-12:
        raise InternalInconsistency(f"convolved bump leaks outside the unit ball ({conv['support_leak']:.2e})")
    A_eff = tau / 8
    # the second stage runs for the remaining delta/2; the threshold uses delta
    cert = certify(RecursionParams(delta, A_eff, math.log(conv["l1"])))
    chain = {
        "N": N if N is not None and N < 2**63 else None,
        "log_N": log_N,
        "eps_N": 1 / math.log(log_N),
        "tau_N": tau,
        "log_tau_N": math.log(tau),
        "lobe_factor": 1 / 8,
        "A_eff": A_eff,
        "lobe_l1": conv["lobe_l1"],
        "convolved_l1": conv["l1"],
        "support_leak": conv["support_leak"],
        "gap_log": cert.margin,
    }
    if N is not None:
        chain.update(_besov_report(N, bump, besov_grid))
    cert.chain = chain
    return cert


def _besov_report(N: int, bump: BumpSpec, grid: Grid | None) -> dict:
    grid = Grid(3, 64) if grid is None else grid
    model = ShellModel(bump, grid, 9.0)
    return {
        "besov_-2/3_9_q6": model.norm(N, -2 / 3, 6),
        "besov_-2/3_9_q3": model.norm(N, -2 / 3, 3),
        "note": "small for q > 3 as N grows; the q = 3 norm grows like eps_N (log N)^(1/3)",
    }


def tau_N_log_threshold(delta: float, target: float) -> float:
    """Smallest log N (to 1e-9 relative) with tau_N >= target, for huge N."""
    lo, hi = math.log(MIN_N) + 1e-9, 2.0
    while _tau_from_logN(hi, delta) < target:
        lo, hi = hi, hi * 2
        if hi > 1e300:
            raise OverflowError("tau_N never reaches the target")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _tau_from_logN(mid, delta) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-9 * hi:
            break
    return hi


def smallest_certified_N(delta: float, bump: BumpSpec = BumpSpec(), grid: Grid | None = None) -> dict:
    """Smallest N whose chain certifies at ``delta``, located in log N."""
    grid = _default_grid() if grid is None else grid
    conv = convolved_bump(bump, grid)
    target = 8 * a_min(delta, conv["l1"])
    log_N = tau_N_log_threshold(delta, target)
    out = {"delta": delta, "log_N_min": log_N, "tau_target": target, "convolved_l1": conv["l1"]}
    if log_N < 40:
        # exact integer search near the float estimate
        n = max(MIN_N, int(math.exp(log_N) * (1 - 1e-6)) - 2)
        while tau_N(n, delta) < target:
            n += 1
        out["N_min"] = n
        out["log_N_min"] = math.log(n)
    return out
