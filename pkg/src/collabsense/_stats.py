"""Small estimators shared by the Monte Carlo drivers."""

from __future__ import annotations

import math

import numpy as np


def ratio_stats(num, den) -> tuple[float, float]:
    """Pooled ratio sum(num)/sum(den) over clusters, with a delta-method standard error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    total = den.sum()
    if total == 0:
        return float("nan"), float("nan")
    est = num.sum() / total
    n = len(num)
    if n < 2:
        return float(est), float("nan")
    resid = num - est * den
    se = math.sqrt((resid ** 2).sum() / (n * (n - 1))) / den.mean()
    return float(est), float(se)


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    if v.size == 1:
        return float(v[0]), float("nan")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
