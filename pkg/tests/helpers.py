"""Independent oracles used by the test-suite.

None of these call into asiaudit's numerical code paths.
"""

import math

import numpy as np


def normal_equations_ols(X, y, has_intercept=True):
    """Brute-force OLS: solve (X'X) b = X'y, then hand-computed variances."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    xtx = X.T @ X
    b = np.linalg.solve(xtx, X.T @ y)
    e = y - X @ b
    rss = float(e @ e)
    tss = float(((y - y.mean()) ** 2).sum()) if has_intercept else float(y @ y)
    sigma2 = rss / (n - k)
    se = np.sqrt(sigma2 * np.diag(np.linalg.inv(xtx)))
    return {"coef": b, "rss": rss, "tss": tss, "r2": 1 - rss / tss, "se": se, "t": b / se}


def type7_percentile(values, q):
    """Hyndman-Fan type 7 by explicit sort and interpolation."""
    s = sorted(values)
    h = (len(s) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def origin_slope_loop(cf, rest):
    """Through-origin slope of inv = cf + rest on cf, by plain loops."""
    num = sum(c * (c + r) for c, r in zip(cf, rest))
    den = sum(c * c for c in cf)
    return num / den


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


# published unrestricted/restricted R^2 pairs and the incremental-fit column
TABLE1 = [
    ("2005-RQFA", 0.0160, 0.2550, 93.73),
    ("2006-RFE", 0.0200, 0.3930, 94.91),
    ("2008-", 0.0030, 0.0340, 91.18),
    ("2012-JBF", 0.0050, 0.1160, 95.69),
    ("2014-EM", 0.0100, 0.1410, 92.91),
    ("2022-FRL", 0.0132, 0.1200, 89.00),
    ("2021-IJFE", 0.0000, 0.1350, 100.00),
    ("2022-JEB", 0.0800, 0.3780, 78.84),
    ("2025-MD", 0.0053, 0.0063, 15.87),
]
TABLE1_MEAN = 83.57
