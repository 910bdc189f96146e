"""Seeded random dyadic vectors for property checks and reports."""
from __future__ import annotations

import math

import numpy as np

from .dyadic import Dyadic, FinVec


def random_finvec(rng: np.random.Generator, hi: int, nnz: int = 3, max_num: int = 15, max_shift: int = 4,
                  lo: int = 0) -> FinVec:
    """Up to ``nnz`` nonzero coordinates in ``[lo, hi)`` with values ``±c / 2^s``."""
    k = int(rng.integers(1, nnz + 1))
    idx = lo + rng.choice(hi - lo, size=min(k, hi - lo), replace=False)
    out = {}
    for i in idx:
        c = int(rng.integers(1, max_num + 1)) * (1 if rng.integers(2) else -1)
        out[int(i)] = Dyadic(c, -int(rng.integers(0, max_shift + 1)))
    return FinVec(out)


def approx_decimal(d: Dyadic, digits: int = 6) -> str:
    """Scientific-notation approximation that survives exponents far outside float range."""
    if not d:
        return "0"
    m, e = abs(d.m), d.e
    extra = m.bit_length() - 60
    if extra > 0:
        m, e = m >> extra, e + extra
    lg = math.log10(m) + e * math.log10(2)
    exp = math.floor(lg)
    mant = 10 ** (lg - exp)
    if round(mant, digits) >= 10:
        mant, exp = mant / 10, exp + 1
    sign = "-" if d.m < 0 else ""
    return f"{sign}{mant:.{digits}f}e{exp}"
