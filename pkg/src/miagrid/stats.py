"""ROC metrics, exact binomial intervals, DP trade-off bound, and the paired
one-sided tests with Benjamini-Yekutieli adjustment.

The special functions needed (regularized incomplete beta and its inverse)
are implemented here with a continued fraction and bracketed bisection so the
statistical layer has no dependency beyond numpy.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricError, NumericError
from .seeding import rng_for

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-14
_TINY = 1e-300

EXHAUSTIVE_LIMIT = 20  # below this, permutation tests enumerate all sign flips


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    n_pos: int
    n_neg: int


@dataclass
class TestReport:
    statistic: float
    p_value: float
    n: int
    kind: str


def roc_curve(scores, labels) -> RocCurve:
    """Empirical ROC over unique score thresholds, ties grouped."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = int(len(labels) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise MetricError("roc_curve needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    pos = labels[order]
    tps = np.cumsum(pos)
    fps = np.cumsum(~pos)
    last_of_group = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    return RocCurve(
        fpr=np.r_[0.0, fps[last_of_group] / n_neg],
        tpr=np.r_[0.0, tps[last_of_group] / n_pos],
        thresholds=np.r_[np.inf, s[last_of_group]],
        n_pos=n_pos,
        n_neg=n_neg,
    )


def tpr_at_fpr(roc: RocCurve, fpr_target: float) -> float:
    """Largest achievable TPR with empirical FPR <= target (step convention)."""
    if not 0 < fpr_target < 1:
        raise MetricError(f"fpr_target must be in (0, 1), got {fpr_target}")
    eligible = roc.fpr <= fpr_target
    return float(roc.tpr[eligible].max())


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise NumericError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise NumericError(f"reg_inc_beta needs a, b > 0, got a={a}, b={b}")
    if not 0 <= x <= 1:
        raise NumericError(f"reg_inc_beta needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return float(x)
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(ln_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(ln_front) * _betacf(b, a, 1.0 - x) / b


def reg_inc_beta_inv(a: float, b: float, q: float) -> float:
    """Inverse of I_x(a, b) in x, by bisection to 1e-10."""
    if not 0 <= q <= 1:
        raise NumericError(f"reg_inc_beta_inv needs q in [0, 1], got {q}")
    if q == 0.0 or q == 1.0:
        return float(q)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if reg_inc_beta(a, b, mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return 0.5 * (lo + hi)


def clopper_pearson(tp: int, p: int, alpha: float) -> tuple[float, float]:
    """Exact binomial interval for tp successes out of p, via beta quantiles."""
    if not 0 <= tp <= p or p < 1:
        raise MetricError(f"need 0 <= tp <= p with p >= 1, got tp={tp}, p={p}")
    if not 0 < alpha < 1:
        raise MetricError(f"alpha must be in (0, 1), got {alpha}")
    lo = 0.0 if tp == 0 else reg_inc_beta_inv(tp, p - tp + 1, alpha / 2.0)
    hi = 1.0 if tp == p else reg_inc_beta_inv(tp + 1, p - tp, 1.0 - alpha / 2.0)
    return lo, hi


def dp_tpr_bound(eps_of_delta, fpr: float) -> float:
    """Tightest distinguishing-test TPR bound over the sampled (eps, delta)
    curve: min over points of min{e^eps*fpr + delta, 1 - e^-eps*(1-delta-fpr)}."""
    if not 0 <= fpr <= 1:
        raise MetricError(f"fpr must be in [0, 1], got {fpr}")
    pairs = list(eps_of_delta)
    if not pairs:
        raise MetricError("eps_of_delta curve must be non-empty")
    best = math.inf
    for eps, delta in pairs:
        branch = min(
            math.exp(eps) * fpr + delta,
            1.0 - math.exp(-eps) * (1.0 - delta - fpr),
        )
        best = min(best, branch)
    return min(max(best, 0.0), 1.0)


def student_t_sf(t: float, df: int) -> float:
    """Upper tail of Student's t with df degrees of freedom."""
    if df < 1:
        raise MetricError(f"df must be >= 1, got {df}")
    x = df / (df + t * t)
    half = 0.5 * reg_inc_beta(df / 2.0, 0.5, x)
    return half if t >= 0 else 1.0 - half


def paired_t_test(x, y) -> TestReport:
    """One-sided paired t-test of H1: mean(x - y) > 0."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise MetricError("paired_t_test needs equal-length 1-d samples, n >= 2")
    d = x - y
    n = len(d)
    sd = float(d.std(ddof=1))
    mean = float(d.mean())
    if sd == 0.0:
        # all differences identical: p degenerates by the sign of the mean
        stat = math.inf if mean > 0 else (-math.inf if mean < 0 else 0.0)
        return TestReport(stat, 0.0 if mean > 0 else 1.0, n, "t")
    t = mean * math.sqrt(n) / sd
    return TestReport(t, student_t_sf(t, n - 1), n, "t")


def paired_permutation_test(x, y, resamples: int = 100_000, seed: int = 0) -> TestReport:
    """One-sided paired sign-flip test on the mean difference.

    Exhaustive over all 2^n flips for n <= 20, otherwise `resamples` seeded
    random flips with the identity included, so p >= 1/total.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 1:
        raise MetricError("paired_permutation_test needs equal-length 1-d samples")
    d = x - y
    n = len(d)
    if n <= EXHAUSTIVE_LIMIT:
        values = d.tolist()
        observed = math.fsum(values)
        count = 0
        total = 1 << n
        for pattern in range(total):
            flipped = [-v if (pattern >> j) & 1 else v for j, v in enumerate(values)]
            if math.fsum(flipped) >= observed:
                count += 1
        return TestReport(float(d.mean()), count / total, n, "permutation")
    if resamples < 1:
        raise MetricError(f"resamples must be >= 1, got {resamples}")
    signs = rng_for(seed, "perm").choice([-1.0, 1.0], size=(resamples, n))
    signs[0] = 1.0
    sums = signs @ d
    p = float(np.mean(sums >= sums[0]))
    return TestReport(float(d.mean()), p, n, "permutation")


def by_adjust(pvals) -> np.ndarray:
    """Benjamini-Yekutieli step-up adjustment, valid under any dependence."""
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1 or len(p) == 0:
        raise MetricError("by_adjust needs a non-empty 1-d p-value array")
    if (p < 0).any() or (p > 1).any():
        raise MetricError("p-values must lie in [0, 1]")
    m = len(p)
    c_m = sum(1.0 / k for k in range(1, m + 1))
    order = np.argsort(p, kind="stable")
    adj = np.minimum(1.0, c_m * m * p[order] / (np.arange(m) + 1.0))
    for i in range(m - 2, -1, -1):
        adj[i] = min(adj[i], adj[i + 1])
    out = np.empty(m)
    out[order] = adj
    return out
