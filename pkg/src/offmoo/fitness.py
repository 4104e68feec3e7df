"""Original and uncertainty-adjusted fitness from surrogate predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from offmoo.core import ContractError
from offmoo.surrogates.base import GAUSSIAN, QUANTILE, UncertainPrediction

# Acklam's rational approximation coefficients for the standard normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def inverse_normal_cdf(p: float) -> float:
    """Standard normal quantile ``z`` with ``Phi(z) = p``.

    Acklam's rational approximation (relative error ~1e-9) followed by one
    Halley refinement step against ``erfc``.
    """
    if not 0.0 < p < 1.0:
        raise ContractError(f"probability must lie in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        z = _tail(q)
    elif p > 1 - _P_LOW:
        q = math.sqrt(-2 * math.log1p(-p))
        z = -_tail(q)
    else:
        q = p - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1
        z = num * q / den
    e = normal_cdf(z) - p
    u = e * math.sqrt(2 * math.pi) * math.exp(z * z / 2)
    return z - u / (1 + z * u / 2)


def _tail(q: float) -> float:
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1
    return num / den


@dataclass(frozen=True)
class FitnessPair:
    """Original and adjusted objective values, each of shape ``(n, K)``."""

    original: np.ndarray
    adjusted: np.ndarray
    tau: float
    z: float


def make_fitness_pair(preds: Sequence[UncertainPrediction], tau: float = 0.9) -> FitnessPair:
    """Build ``f_ori`` and ``f_adj`` from per-objective predictions.

    Gaussian-like predictions give ``mu`` and ``mu + z * sigma`` with
    ``z = Phi^-1(tau)``; quantile predictions give the median and the upper
    quantile. Scalar predictions yield a single row.
    """
    kinds = {p.kind for p in preds}
    if len(kinds) != 1:
        raise ContractError(f"predictions mix kinds {sorted(kinds)}")
    kind = kinds.pop()
    z = inverse_normal_cdf(tau)
    center = np.column_stack([np.atleast_1d(np.asarray(p.center, dtype=float)) for p in preds])
    spread = np.column_stack([np.atleast_1d(np.asarray(p.spread, dtype=float)) for p in preds])
    if kind == QUANTILE:
        adjusted = center + spread
    else:
        assert kind == GAUSSIAN
        adjusted = center + z * spread
    return FitnessPair(center, adjusted, tau, z)
