"""Luxemburg norms, mixed space-time norms and the exponent compatibility test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .fields import SampledFunction, SpaceTimeField
from .nfunction import NFunction, eval_G

__all__ = [
    "modular",
    "luxemburg_norm",
    "slice_norms",
    "space_time_norm",
    "ModularBoundReport",
    "modular_norm_bound_check",
    "Compatibility",
    "compatibility_check",
]

_REL_TOL = 1e-13


def modular(values, weights, F: NFunction, kappa: float = 1.0) -> float:
    """``sum w F(|f| / kappa)``: the discrete modular of ``f`` at scale ``kappa``."""
    a = np.abs(np.asarray(values, dtype=float)) / kappa
    return float(np.sum(weights * eval_G(F, a)))


def _luxemburg(values, weights, F: NFunction) -> float:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite samples")
    mask = (weights > 0) & (values != 0)
    if not np.any(mask):
        return 0.0
    a = np.abs(values[mask])
    w = weights[mask]

    def m(kappa):
        return float(np.sum(w * eval_G(F, a / kappa)))

    lo = hi = float(a.max())
    # the modular is nonincreasing in kappa: widen until it straddles 1
    while m(hi) > 1.0:
        lo, hi = hi, 2.0 * hi
    while m(lo) <= 1.0:
        lo, hi = 0.5 * lo, lo
    while hi - lo > _REL_TOL * hi:
        mid = np.sqrt(lo * hi)
        if m(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return float(hi)


def luxemburg_norm(f: SampledFunction, F: NFunction, radius: float | None = None) -> float:
    """``inf{kappa > 0 : int_B F(|f|/kappa) <= 1}`` over the ball ``B_radius``.

    The infimum is located by bisection in ``log kappa`` to relative
    precision 1e-13. The zero function has norm 0.
    """
    return _luxemburg(f.values, f.weights(radius), F)


def slice_norms(field: SpaceTimeField, F: NFunction, radius: float | None = None) -> np.ndarray:
    w = field.slice(0).weights(radius)
    return np.array([_luxemburg(field.values[j], w, F) for j in range(field.slices)])


def space_time_norm(
    field: SpaceTimeField,
    F: NFunction,
    r: float,
    radius: float | None = None,
    t_from: float | None = None,
) -> float:
    """``(int ||f(., t)||_{L^F}^r dt)^(1/r)`` by the trapezoid rule in time.

    ``t_from`` restricts the integral to slices with ``t >= t_from``.
    """
    if not r > 1:
        raise ValueError(f"time exponent must satisfy r > 1, got {r}")
    vals = field.values
    times = field.times
    if t_from is not None:
        keep = times >= t_from - 1e-12 * max(1.0, abs(t_from))
        vals, times = vals[keep], times[keep]
    if times.size < 2:
        return 0.0
    w = field.slice(0).weights(radius)
    norms = np.array([_luxemburg(v, w, F) for v in vals])
    return float(trapezoid(norms**r, times) ** (1.0 / r))


@dataclass(frozen=True)
class ModularBoundReport:
    norm: float
    modular: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.norm

    @property
    def ok(self) -> bool:
        return self.norm <= self.bound * (1 + 1e-9) + 1e-300


def modular_norm_bound_check(u: SampledFunction, G: NFunction) -> ModularBoundReport:
    """Compare the Luxemburg norm with ``max(M**(1/(1+g0)), M**(1/(1+g1)))``."""
    w = u.weights()
    M = modular(u.values, w, G)
    norm = luxemburg_norm(u, G)
    bound = max(M ** (1.0 / (1.0 + G.g0)), M ** (1.0 / (1.0 + G.g1))) if M > 0 else 0.0
    return ModularBoundReport(norm, M, bound)


@dataclass(frozen=True)
class Compatibility:
    left: float
    right: float
    admissible: bool

    def message(self) -> str:
        if self.admissible:
            return "compatible"
        parts = []
        if not self.left < 1:
            parts.append(f"1/r + n/((f0+1)(g0+1)) = {self.left:.6g} is not < 1")
        if not self.right > 1:
            parts.append(f"2/r + n/(f0+1) = {self.right:.6g} is not > 1")
        return "; ".join(parts)


def compatibility_check(g0: float, f0: float, n: int, r: float) -> Compatibility:
    """Both sides of ``1/r + n/((f0+1)(g0+1)) < 1 < 2/r + n/(f0+1)``."""
    left = 1.0 / r + n / ((f0 + 1.0) * (g0 + 1.0))
    right = 2.0 / r + n / (f0 + 1.0)
    return Compatibility(left, right, bool(left < 1.0 < right))
