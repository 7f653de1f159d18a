"""Intrinsic scaling: Hölder exponents, g-cylinders and the rescaling maps."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .fields import SpaceTimeField, grid_axis
from .nfunction import NFunction
from .norms import compatibility_check, space_time_norm

__all__ = [
    "ExponentSet",
    "Cylinder",
    "NormalizationResult",
    "optimal_alpha",
    "p_laplacian_alpha",
    "theta_const",
    "theta_of_rho",
    "theta_k",
    "intrinsic_cylinder",
    "rescaled_source_exponent",
    "exponent_set",
    "write_exponent_table",
    "rescale_field",
    "normalization_exponent",
    "find_normalization",
]


def optimal_alpha(g0: float, f0: float, n: int, r: float) -> float:
    """Space Hölder exponent for growth ``g0``, source growth ``f0``, dimension ``n``, time integrability ``r``."""
    A = (g0 + 1.0) * (f0 + 1.0)
    den = (f0 + 1.0) * (g0 * r - (g0 - 1.0))
    if not den > 0:
        raise ValueError(f"nonpositive denominator {den}: need r > 1 and g0 > 1")
    return ((A - n) * r - A) / den


def p_laplacian_alpha(p: float, q: float, n: int, r: float) -> float:
    """The same exponent written for ``g = t**(p-1)`` and ``F = t**q``."""
    return ((p * q - n) * r - p * q) / (q * ((p - 1.0) * r - (p - 2.0)))


def theta_const(alpha: float, g1: float) -> float:
    """Constant intrinsic time exponent ``1 + alpha - (alpha - 1) g1``."""
    return 1.0 + alpha - (alpha - 1.0) * g1


def _check_rho(rho):
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")


def theta_of_rho(nf: NFunction, alpha: float, rho: float) -> float:
    """Radius-dependent time exponent ``1 + alpha - log_rho g(rho**(alpha-1))``.

    ``nf`` must be normalized (``g(1) = 1``).
    """
    _check_rho(rho)
    if not nf.normalized:
        raise ValueError("theta_of_rho needs a normalized N-function (g(1) = 1)")
    t = rho ** (alpha - 1.0)
    if t == 1.0:
        return 1.0 + alpha
    # log_rho g(t) = (alpha - 1) log g(t) / log t; this form keeps theta inside
    # its growth-bound sandwich under rounding
    return 1.0 + alpha + (1.0 - alpha) * nf.growth_index(t)


def theta_k(nf: NFunction, alpha: float, rho: float, k: int) -> float:
    """Time exponent for the k-th rescaling step, i.e. ``theta_of_rho`` at ``rho**k``."""
    return theta_of_rho(nf, alpha, rho**k)


@dataclass(frozen=True)
class Cylinder:
    """``B_rho x (-depth, 0]``."""

    rho: float
    depth: float

    def contains(self, radius, t):
        radius = np.asarray(radius)
        t = np.asarray(t)
        return (radius <= self.rho * (1 + 1e-12)) & (t > -self.depth * (1 + 1e-12)) & (t <= 0)


def intrinsic_cylinder(nf: NFunction, alpha: float, rho: float) -> Cylinder:
    """The g-cylinder of radius ``rho``: depth ``rho**(1+alpha) / g(rho**(alpha-1))``."""
    theta = theta_of_rho(nf, alpha, rho)
    depth = rho ** (1.0 + alpha) / nf.g(rho ** (alpha - 1.0))
    check = rho**theta
    if abs(check - depth) > 1e-12 * depth:
        raise ArithmeticError(f"cylinder depth mismatch: {depth} vs rho**theta = {check}")
    return Cylinder(rho, depth)


def rescaled_source_exponent(alpha: float, g0: float, f0: float, n: int, r: float) -> float:
    """Power of ``rho**k`` gained by the source norm after one rescaling step."""
    return 1.0 - (n / (1.0 + f0) + (1.0 + alpha) / r) + (alpha - 1.0) * g0 * (1.0 / r - 1.0)


@dataclass(frozen=True)
class ExponentSet:
    alpha: float
    beta: float
    theta: float
    r: float
    n: int
    g0: float
    g1: float
    f0: float
    f1: float
    admissible: bool
    theta_rho: float | None = None
    rho: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def exponent_set(g0, g1, f0, f1, n, r, nf: NFunction | None = None, rho: float | None = None):
    """Collect alpha, theta and beta = alpha / theta for one parameter tuple."""
    comp = compatibility_check(g0, f0, n, r)
    alpha = optimal_alpha(g0, f0, n, r)
    theta = theta_const(alpha, g1)
    th_rho = None
    if nf is not None and rho is not None and 0 < alpha < 1:
        th_rho = theta_of_rho(nf, alpha, rho)
    return ExponentSet(
        alpha=alpha,
        beta=alpha / theta,
        theta=theta,
        r=r,
        n=n,
        g0=g0,
        g1=g1,
        f0=f0,
        f1=f1,
        admissible=comp.admissible,
        theta_rho=th_rho,
        rho=rho,
    )


TABLE_COLUMNS = ("g0", "g1", "f0", "f1", "n", "r", "alpha", "beta", "theta", "admissible")


def write_exponent_table(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for e in rows:
            w.writerow([repr(float(getattr(e, c))) if c not in ("n", "admissible")
                        else (int(e.n) if c == "n" else int(e.admissible)) for c in TABLE_COLUMNS])


# field transforms ---------------------------------------------------------------


def _interpolator(u: SpaceTimeField):
    axes = (u.times,) + (u.axis,) * u.n
    return RegularGridInterpolator(axes, u.values, method="linear", bounds_error=True)


def _unit_grid(n, n_space, n_time):
    x = grid_axis(n_space, 1.0)
    t = np.linspace(-1.0, 0.0, n_time)
    return x, t


def _sample(u: SpaceTimeField, interp, xs: float, ts: float, n_space: int, n_time: int):
    """Values of ``u(xs * x, t_end + ts * t)`` on the unit cylinder grid."""
    x, t = _unit_grid(u.n, n_space, n_time)
    if u.n == 1:
        T, X = np.meshgrid(t, x, indexing="ij")
        pts = np.stack([u.t_end + ts * T, xs * X], axis=-1)
    else:
        T, X, Y = np.meshgrid(t, x, x, indexing="ij")
        pts = np.stack([u.t_end + ts * T, xs * X, xs * Y], axis=-1)
    # guard round-off at the hull
    lo_t = u.times[0]
    pts[..., 0] = np.clip(pts[..., 0], lo_t, u.t_end)
    pts[..., 1:] = np.clip(pts[..., 1:], -u.R, u.R)
    return interp(pts)


def rescale_field(
    u: SpaceTimeField,
    rho: float,
    k: int,
    alpha: float,
    theta: float,
    base_value: float,
    n_space: int | None = None,
    n_time: int = 33,
) -> SpaceTimeField:
    """``(u(rho**k x, rho**(k theta) t) - base_value) / rho**(k alpha)`` on ``Q_1``.

    Multilinear interpolation in (t, x[, y]); the source must cover
    ``B_{rho**k} x (-rho**(k theta), 0]`` around the spatial origin and ``t_end``.
    """
    xs = rho**k
    ts = rho ** (k * theta)
    tol = 1e-12
    if xs > u.R * (1 + tol) or ts > u.T * (1 + tol) + tol:
        raise ValueError(
            f"field covers B_{u.R} x (-{u.T}, 0] but the rescaling needs B_{xs} x (-{ts}, 0]"
        )
    n_space = u.N if n_space is None else n_space
    vals = _sample(u, _interpolator(u), xs, ts, n_space, n_time)
    vals = (vals - base_value) / rho ** (k * alpha)
    return SpaceTimeField(vals, 1.0, 1.0 / (n_time - 1), 0.0)


def normalization_exponent(a: float, g0: float, f0: float, n: int, r: float) -> float:
    """Lower bound on the power of ``lam`` carried by the transformed source norm.

    For ``v(x,t) = lam u(lam**a x, lam**b t)`` with the time exponent ``b``
    forced by the equation, the source norm scales at least like
    ``lam**E`` with ``E = 1 - a n/(1+f0) + (a - 1 + (a+1) g0)(1 - 1/r)``.
    """
    return 1.0 - a * n / (1.0 + f0) + (a - 1.0 + (a + 1.0) * g0) * (1.0 - 1.0 / r)


def _default_a(g0, f0, n, r):
    c0 = 1.0 + (g0 - 1.0) * (1.0 - 1.0 / r)
    c1 = (1.0 + g0) * (1.0 - 1.0 / r) - n / (1.0 + f0)
    if c1 >= 0:
        return 1.0
    return min(1.0, 0.5 * c0 / -c1)


@dataclass
class NormalizationResult:
    lam: float
    a: float
    v: SpaceTimeField | None
    f_tilde: SpaceTimeField | None
    sup_v: float
    f_norm: float
    exponent: float
    success: bool
    history: list

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "a": self.a,
            "sup_v": self.sup_v,
            "f_norm": self.f_norm,
            "exponent": self.exponent,
            "success": self.success,
            "history": self.history,
        }


def find_normalization(
    u: SpaceTimeField,
    f: SpaceTimeField,
    nf: NFunction,
    F: NFunction,
    r: float,
    eps: float,
    a: float | None = None,
    n_space: int | None = None,
    n_time: int = 33,
    j_max: int = 60,
) -> NormalizationResult:
    """Largest dyadic ``lam`` making ``v = lam u(lam**a x, ts t)`` small.

    ``ts = lam**(a-1) / g(lam**(-a-1))`` is the time scale under which ``v``
    solves the same type of equation with law ``g(d s)/g(d)``, ``d = lam**(-a-1)``,
    and source ``f~ = lam ts f(lam**a x, ts t)``. The search stops at the first
    ``lam = 2**-j`` with ``sup|v| <= 1`` and ``||f~||_{L^{F,r}(Q_1)} <= eps``.
    """
    g0, f0, n = nf.g0, F.g0, u.n
    if a is None:
        a = _default_a(g0, f0, n, r)
    E = normalization_exponent(a, g0, f0, n, r)
    if not (a > 0 and E > 0):
        raise ValueError(f"exponent condition fails for a={a}: E={E}")
    n_space = u.N if n_space is None else n_space
    iu, jf = _interpolator(u), _interpolator(f)
    history = []
    for j in range(j_max + 1):
        lam = 2.0**-j
        xs = lam**a
        ts = lam ** (a - 1.0) / nf.g(lam ** (-a - 1.0))
        if xs > min(u.R, f.R) * (1 + 1e-12) or ts > min(u.T, f.T) * (1 + 1e-12):
            history.append({"lambda": lam, "covered": False})
            continue
        v = lam * _sample(u, iu, xs, ts, n_space, n_time)
        ft = lam * ts * _sample(f, jf, xs, ts, n_space, n_time)
        vf = SpaceTimeField(v, 1.0, 1.0 / (n_time - 1), 0.0)
        ff = SpaceTimeField(ft, 1.0, 1.0 / (n_time - 1), 0.0)
        sup_v = float(np.max(np.abs(v)))
        f_norm = space_time_norm(ff, F, r)
        history.append({"lambda": lam, "covered": True, "sup_v": sup_v, "f_norm": f_norm})
        if sup_v <= 1.0 and f_norm <= eps:
            return NormalizationResult(lam, a, vf, ff, sup_v, f_norm, E, True, history)
    return NormalizationResult(2.0**-j_max, a, None, None, math.nan, math.nan, E, False, history)
