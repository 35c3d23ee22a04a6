"""Nonparametric statistics: Spearman rank correlation, Mann-Whitney U,
Vargha-Delaney A12 effect size, and Cohen's kappa.

Categorizations follow the customary thresholds: Cohen's bands for
correlation strength and the Romano et al. bands on d = 2|A12 - 0.5| for
effect-size magnitude (Vargha & Delaney 2000).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import norm as _norm
from scipy.stats import t as _student_t

logger = logging.getLogger(__name__)

ALPHA = 0.05
MWU_SMALL_SAMPLE = 8  # below this the approximate p-value is unreliable


class StatsError(ValueError):
    """Raised for degenerate inputs (constant series, empty groups, ...)."""


class CorrelationCategory(str, Enum):
    NONE = "none"
    WEAK = "weak"
    MODERATE = "moderate"
    STRONG = "strong"


class EffectMagnitude(str, Enum):
    NEGLIGIBLE = "negligible"
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


class EffectDirection(str, Enum):
    GROUP1_LOWER = "group1_lower"
    GROUP2_LOWER = "group2_lower"
    NONE = "none"


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int
    category: CorrelationCategory

    @property
    def significant(self) -> bool:
        return self.p_value < ALPHA


@dataclass(frozen=True)
class EffectResult:
    a12: float
    u_statistic: float
    p_value: float
    n1: int
    n2: int
    magnitude: EffectMagnitude
    direction: EffectDirection

    @property
    def significant(self) -> bool:
        return self.p_value < ALPHA


@dataclass(frozen=True)
class AgreementResult:
    kappa: float
    observed_agreement: float
    n_items: int


def correlation_category(rho: float) -> CorrelationCategory:
    """Band a signed correlation; negatives fall in the 'none' band."""
    if rho < 0.10:
        return CorrelationCategory.NONE
    if rho <= 0.29:
        return CorrelationCategory.WEAK
    if rho <= 0.49:
        return CorrelationCategory.MODERATE
    return CorrelationCategory.STRONG


def effect_magnitude(a12: float) -> EffectMagnitude:
    return magnitude_from_d(2.0 * abs(a12 - 0.5))


def magnitude_from_d(d: float) -> EffectMagnitude:
    if d < 0.147:
        return EffectMagnitude.NEGLIGIBLE
    if d < 0.33:
        return EffectMagnitude.SMALL
    if d < 0.474:
        return EffectMagnitude.MEDIUM
    return EffectMagnitude.LARGE


def rankdata_average(x: np.ndarray) -> np.ndarray:
    """Ranks starting at 1, ties sharing their average rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> CorrelationResult:
    """Spearman rank correlation with a Student-t two-sided p-value."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise StatsError("series must be 1-D and equally long")
    n = len(x)
    if n < 4:
        raise StatsError(f"need at least 4 paired samples, got {n}")
    rx = rankdata_average(x)
    ry = rankdata_average(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise StatsError("correlation undefined: a series is constant")
    rho = float(dx @ dy) / np.sqrt(sx * sy)
    rho = float(np.clip(rho, -1.0, 1.0))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t_stat = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
        p = float(2.0 * _student_t.sf(abs(t_stat), n - 2))
    return CorrelationResult(rho=rho, p_value=min(p, 1.0), n=n,
                             category=correlation_category(rho))


def vargha_delaney(g1, g2) -> float:
    """A12: probability a draw from g1 exceeds one from g2, ties half-weighted.

    Computed from rank sums, which is algebraically identical to pair
    counting but O((n1+n2) log(n1+n2)).
    """
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    n1, n2 = len(g1), len(g2)
    if n1 == 0 or n2 == 0:
        raise StatsError("both groups must be non-empty")
    ranks = rankdata_average(np.concatenate([g1, g2]))
    r1 = float(ranks[:n1].sum())
    return (r1 - n1 * (n1 + 1) / 2.0) / (n1 * n2)


def _u_null_counts(n1: int, n2: int) -> np.ndarray:
    """counts[u] = number of group assignments with U statistic u (no ties).

    Builds the Gaussian binomial coefficient [n1+n2 choose n1]_x one factor
    at a time: multiply by (1 - x^(n2+j)), then divide by (1 - x^j); every
    intermediate stays a polynomial with integer coefficients.
    """
    max_u = n1 * n2
    c = np.zeros(max_u + 1, dtype=np.float64)
    c[0] = 1.0
    for j in range(1, n1 + 1):
        k = n2 + j
        d = c.copy()
        if k <= max_u:
            d[k:] -= c[:-k]
        for r in range(j):  # divide by (1 - x^j): cumulative sum per residue
            np.cumsum(d[r::j], out=d[r::j])
        c = d
    return c


def _exact_u_sf(u: float, n1: int, n2: int) -> float:
    """Two-sided exact p-value for U under the no-ties null distribution."""
    counts = _u_null_counts(n1, n2)
    total = counts.sum()
    lo = min(u, n1 * n2 - u)  # the distribution is symmetric about n1*n2/2
    p = 2.0 * counts[: int(np.floor(lo + 1e-9)) + 1].sum() / total
    return float(min(p, 1.0))


def mann_whitney_u(g1, g2, method: str = "normal") -> EffectResult:
    """Two-sided Mann-Whitney U test with the A12 effect size attached.

    ``method="normal"`` (default) uses the normal approximation with tie and
    continuity corrections. ``method="exact"`` enumerates the no-ties null
    distribution (only for n1*n2 <= 10000 and tie-free data); it exists as a
    cross-check oracle for the approximation.
    """
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    n1, n2 = len(g1), len(g2)
    if n1 == 0 or n2 == 0:
        raise StatsError("both groups must be non-empty")
    if n1 + n2 < MWU_SMALL_SAMPLE:
        logger.warning(
            "Mann-Whitney U on %d+%d samples: p-value is unreliable below %d",
            n1, n2, MWU_SMALL_SAMPLE,
        )
    combined = np.concatenate([g1, g2])
    ranks = rankdata_average(combined)
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    a12 = u1 / (n1 * n2)

    n = n1 + n2
    if method == "exact":
        if n1 * n2 > 10_000:
            raise StatsError("exact method limited to n1*n2 <= 10000")
        if len(np.unique(combined)) != n:
            raise StatsError("exact method requires tie-free data")
        p = _exact_u_sf(u1, n1, n2)
    elif method == "normal":
        mean_u = n1 * n2 / 2.0
        _, tie_counts = np.unique(combined, return_counts=True)
        tie_term = float((tie_counts**3 - tie_counts).sum())
        var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
        if var_u <= 0.0:
            p = 1.0
        else:
            # continuity correction toward the mean
            z = (u1 - mean_u - 0.5 * np.sign(u1 - mean_u)) / np.sqrt(var_u)
            p = float(min(2.0 * _norm.sf(abs(z)), 1.0))
    else:
        raise ValueError(f"unknown method '{method}'")

    if a12 > 0.5:
        direction = EffectDirection.GROUP2_LOWER
    elif a12 < 0.5:
        direction = EffectDirection.GROUP1_LOWER
    else:
        direction = EffectDirection.NONE
    return EffectResult(
        a12=a12,
        u_statistic=u1,
        p_value=p,
        n1=n1,
        n2=n2,
        magnitude=effect_magnitude(a12),
        direction=direction,
    )


def cohen_kappa(labels_a, labels_b) -> AgreementResult:
    """Chance-corrected agreement between two raters over the same items.

    Computed from integer confusion counts so that exact-fraction fixtures
    come out exact.
    """
    labels_a = list(labels_a)
    labels_b = list(labels_b)
    if len(labels_a) != len(labels_b):
        raise StatsError("label series must be equally long")
    n = len(labels_a)
    if n == 0:
        raise StatsError("no items to compare")
    cats = sorted(set(labels_a) | set(labels_b), key=str)
    index = {c: i for i, c in enumerate(cats)}
    counts = np.zeros((len(cats), len(cats)), dtype=np.int64)
    for a, b in zip(labels_a, labels_b):
        counts[index[a], index[b]] += 1
    agree = int(np.trace(counts))
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    expected = int((row * col).sum())  # scaled by n^2
    denom = n * n - expected
    if denom == 0:
        raise StatsError("agreement degenerate: both raters constant and equal")
    kappa = (n * agree - expected) / denom
    return AgreementResult(
        kappa=float(kappa),
        observed_agreement=agree / n,
        n_items=n,
    )
