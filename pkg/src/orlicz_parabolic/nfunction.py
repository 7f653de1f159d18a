"""N-functions with Orlicz-type growth.

An :class:`NFunction` wraps a diffusion law ``g`` together with its primitive
``G``, the generalized inverse ``g~`` and the complementary function ``G~``.
Growth is controlled by the pair ``(g0, g1)`` bounding ``s g'(s) / g(s)``.

Reported values always include the normalization ``g(s0 * s) / lam``; the
constructors return the identity transform ``s0 = lam = 1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import roots_legendre

__all__ = [
    "NFunction",
    "InvalidNFunctionError",
    "GrowthBounds",
    "LemmaReport",
    "make_power",
    "make_power_modular",
    "make_power_log",
    "make_piecewise",
    "make_tabulated",
    "from_spec",
    "eval_G",
    "conjugate_g",
    "conjugate_G",
    "estimate_growth_bounds",
    "normalize",
    "verify_lemma_p1",
]

KINDS = ("power", "power-log", "piecewise-power", "tabulated")

QUAD_RTOL = 1e-10
# Gauss-Legendre rule used for vectorized primitives; the substitution
# u = v**4 removes the u**(1/g) endpoint behaviour of the integrands.
_GL_NODES, _GL_WEIGHTS = roots_legendre(64)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS
_SUB_POWER = 4


class InvalidNFunctionError(ValueError):
    """Raised when parameters do not define an admissible N-function."""


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


@dataclass(frozen=True)
class NFunction:
    """A growth function ``g`` of class ``G_{g0,g1}`` and its companions.

    Instances are immutable. Use the ``make_*`` constructors rather than
    building one directly.
    """

    kind: str
    params: tuple
    g0: float
    g1: float
    s0: float = 1.0
    lam: float = 1.0
    oracle: bool = False
    table: Any = field(default=None, compare=False, repr=False)

    @property
    def admissible(self) -> bool:
        """True when the growth bounds satisfy ``1 < g0 <= g1``."""
        return 1.0 < self.g0 <= self.g1

    @property
    def normalized(self) -> bool:
        return abs(self.g(1.0) - 1.0) <= 1e-14

    def param_dict(self) -> dict:
        names = {
            "power": ("p",),
            "power-log": ("beta", "gamma", "eta"),
            "piecewise-power": ("c1", "beta", "gamma", "t0"),
            "tabulated": (),
        }[self.kind]
        return dict(zip(names, self.params))

    # raw law, before the (s0, lam) transform -------------------------------
    def _raw_g(self, t):
        k, p = self.kind, self.params
        if k == "power":
            return t ** (p[0] - 1.0)
        if k == "power-log":
            beta, gamma, eta = p
            return t**beta * np.log(gamma * t + eta)
        if k == "piecewise-power":
            c1, beta, gamma, t0 = p
            c2, c3 = _piecewise_coefficients(c1, beta, gamma, t0)
            lo = c1 * np.minimum(t, t0) ** beta
            hi = c2 * np.maximum(t, t0) ** gamma + c3
            return np.where(t <= t0, lo, hi)
        return self.table.g(t)

    def _raw_dg(self, t):
        k, p = self.kind, self.params
        if k == "power":
            q = p[0] - 1.0
            with np.errstate(divide="ignore", invalid="ignore"):
                out = q * t ** (q - 1.0)
            return np.where(t > 0, out, 0.0 if q > 1 else (1.0 if q == 1 else np.inf))
        if k == "power-log":
            beta, gamma, eta = p
            with np.errstate(divide="ignore", invalid="ignore"):
                out = beta * t ** (beta - 1.0) * np.log(gamma * t + eta) + t**beta * gamma / (
                    gamma * t + eta
                )
            return np.where(t > 0, out, 0.0)
        if k == "piecewise-power":
            c1, beta, gamma, t0 = p
            c2, _ = _piecewise_coefficients(c1, beta, gamma, t0)
            lo = c1 * beta * np.minimum(t, t0) ** (beta - 1.0)
            hi = c2 * gamma * np.maximum(t, t0) ** (gamma - 1.0)
            return np.where(t <= t0, lo, hi)
        return self.table.dg(t)

    def _raw_G(self, t):
        """Closed-form primitive, or None when quadrature is needed."""
        k, p = self.kind, self.params
        if k == "power":
            return t ** p[0] / p[0]
        if k == "piecewise-power":
            c1, beta, gamma, t0 = p
            c2, c3 = _piecewise_coefficients(c1, beta, gamma, t0)
            tl = np.minimum(t, t0)
            th = np.maximum(t, t0)
            lo = c1 * tl ** (beta + 1.0) / (beta + 1.0)
            hi = c2 * (th ** (gamma + 1.0) - t0 ** (gamma + 1.0)) / (gamma + 1.0) + c3 * (th - t0)
            return lo + hi
        return None

    def _raw_ginv(self, s):
        if self.kind == "power":
            return s ** (1.0 / (self.params[0] - 1.0))
        return None

    def _raw_Gconj(self, s):
        if self.kind == "power":
            p = self.params[0]
            q = p / (p - 1.0)
            return s**q / q
        return None

    # public evaluation -----------------------------------------------------
    def g(self, t):
        """Diffusion law ``g(t)``, vectorized over ``t >= 0``."""
        arr, scalar = _as_array(t)
        return _ret(self._raw_g(self.s0 * arr) / self.lam, scalar)

    def dg(self, t):
        """Derivative ``g'(t)``."""
        arr, scalar = _as_array(t)
        return _ret(self.s0 * self._raw_dg(self.s0 * arr) / self.lam, scalar)

    def growth_index(self, t: float) -> float:
        """Mean growth exponent ``log g(t) / log t`` for ``t > 0, t != 1``.

        Lies in ``[g0, g1]`` when ``g`` is normalized. Exact for a
        normalized power law; otherwise excursions past a bound within the
        rounding error of the ratio are clipped to the bound.
        """
        if self.kind == "power":
            q = self.params[0] - 1.0
            if self.normalized:  # q log s0 = log lam, so the offset vanishes
                return q
            return (q * (math.log(self.s0) + math.log(t)) - math.log(self.lam)) / math.log(t)
        lt = math.log(t)
        k = math.log(float(self.g(t))) / lt
        # the ratio loses ~eps/|log t| near t = 1; excursions past a bound that
        # small are rounding, so they are snapped back. Real violations remain.
        err = 8.0 * np.finfo(float).eps * (1.0 + abs(k)) / abs(lt)
        if self.g0 - err <= k < self.g0:
            return self.g0
        if self.g1 < k <= self.g1 + err:
            return self.g1
        return k

    def G(self, t):
        """Primitive ``G(t) = int_0^t g``."""
        return eval_G(self, t)

    def g_conj(self, s):
        """Generalized inverse ``sup{t : g(t) <= s}``."""
        return conjugate_g(self, s)

    def G_conj(self, s):
        """Complementary function ``int_0^s g~``."""
        return conjugate_G(self, s)

    __call__ = g


def _piecewise_coefficients(c1, beta, gamma, t0):
    c2 = c1 * (beta / gamma) * t0 ** (beta - gamma)
    c3 = c1 * t0**beta * (1.0 - beta / gamma)
    return c2, c3


# constructors ------------------------------------------------------------


def make_power(p: float, *, oracle: bool = False) -> NFunction:
    """``g(t) = t**(p-1)`` with ``g0 = g1 = p - 1``.

    Diffusion laws need ``p > 2``. With ``oracle=True`` any ``p > 1`` is
    accepted (heat equation, source growth functions); otherwise values in
    ``(1, 2]`` emit a warning and carry the oracle flag.
    """
    p = float(p)
    if not p > 1.0:
        raise InvalidNFunctionError(f"power kind needs p > 1, got p={p}")
    if p <= 2.0 and not oracle:
        warnings.warn(
            f"p={p} gives g0={p - 1} <= 1: not an admissible diffusion law; flagged as oracle",
            stacklevel=2,
        )
        oracle = True
    return NFunction("power", (p,), p - 1.0, p - 1.0, oracle=oracle)


def make_power_modular(q: float) -> NFunction:
    """N-function whose primitive is exactly ``t**q`` (so ``L^F = L^q``).

    Built as ``g(t) = q t**(q-1)``; its growth bounds are ``f0 = f1 = q - 1``.
    """
    nf = make_power(q, oracle=True)
    return replace(nf, lam=1.0 / float(q))


def make_power_log(beta: float, gamma: float, eta: float) -> NFunction:
    """``g(t) = t**beta * log(gamma t + eta)`` with ``(g0, g1) = (beta, beta + 1)``.

    ``eta >= e`` is required: below it the growth ratio can exceed
    ``beta + 1``. The declared bounds are certified on a log grid.
    """
    beta, gamma, eta = float(beta), float(gamma), float(eta)
    if not beta > 1.0:
        raise InvalidNFunctionError(f"power-log needs beta > 1, got {beta}")
    if not gamma > 0.0:
        raise InvalidNFunctionError(f"power-log needs gamma > 0, got {gamma}")
    if not eta >= math.e:
        raise InvalidNFunctionError(f"power-log needs eta >= e (~2.71828), got {eta}")
    nf = NFunction("power-log", (beta, gamma, eta), beta, beta + 1.0)
    lo, hi = estimate_growth_bounds(nf)
    if lo < beta - 1e-9 or hi > beta + 1.0 + 1e-9:
        raise InvalidNFunctionError(
            f"growth ratio range [{lo}, {hi}] leaves [{beta}, {beta + 1}]"
        )
    return nf


def make_piecewise(c1: float, beta: float, gamma: float, t0: float) -> NFunction:
    """C^1 power transition: ``c1 t**beta`` below ``t0``, ``c2 t**gamma + c3`` above.

    ``c2`` and ``c3`` are fixed by matching value and slope at ``t0``.
    ``beta == gamma`` degenerates to a single scaled power and is returned as
    the equivalent power kind.
    """
    c1, beta, gamma, t0 = float(c1), float(beta), float(gamma), float(t0)
    if not c1 > 0 or not t0 > 0:
        raise InvalidNFunctionError("piecewise kind needs c1 > 0 and t0 > 0")
    if not (beta > 1.0 and gamma > 1.0):
        raise InvalidNFunctionError(f"piecewise kind needs beta, gamma > 1, got {beta}, {gamma}")
    if beta == gamma:
        return replace(make_power(beta + 1.0, oracle=True), lam=1.0 / c1, oracle=False)
    return NFunction(
        "piecewise-power", (c1, beta, gamma, t0), min(beta, gamma), max(beta, gamma)
    )


class _LogLogTable:
    """Monotone interpolation of ``log g`` against ``log t`` with power tails."""

    def __init__(self, t, gv):
        self.lt = np.log(t)
        self.lg = np.log(gv)
        self.interp = PchipInterpolator(self.lt, self.lg, extrapolate=False)
        self.slope = self.interp.derivative()
        self.k_lo = float(self.slope(self.lt[0]))
        self.k_hi = float(self.slope(self.lt[-1]))

    def _log_g(self, lt):
        out = self.interp(np.clip(lt, self.lt[0], self.lt[-1]))
        out = np.where(lt < self.lt[0], self.lg[0] + self.k_lo * (lt - self.lt[0]), out)
        return np.where(lt > self.lt[-1], self.lg[-1] + self.k_hi * (lt - self.lt[-1]), out)

    def _ratio(self, lt):
        out = self.slope(np.clip(lt, self.lt[0], self.lt[-1]))
        out = np.where(lt < self.lt[0], self.k_lo, out)
        return np.where(lt > self.lt[-1], self.k_hi, out)

    def g(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            lt = np.log(t)
        return np.where(t > 0, np.exp(self._log_g(lt)), 0.0)

    def dg(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.log(t)
            out = np.exp(self._log_g(lt)) * self._ratio(lt) / t
        return np.where(t > 0, out, 0.0)


def make_tabulated(t, g_values) -> NFunction:
    """User-supplied law from a strictly increasing positive sample table.

    Interpolation is monotone (PCHIP) in log-log coordinates, with power-law
    tails outside the table; ``g0``/``g1`` are the extreme growth ratios of the
    interpolant.
    """
    t = np.asarray(t, dtype=float)
    gv = np.asarray(g_values, dtype=float)
    if t.ndim != 1 or t.shape != gv.shape or t.size < 2:
        raise InvalidNFunctionError("table needs matching 1-D arrays with >= 2 samples")
    if np.any(t <= 0) or np.any(gv <= 0):
        raise InvalidNFunctionError("table samples must be positive")
    if np.any(np.diff(t) <= 0) or np.any(np.diff(gv) <= 0):
        raise InvalidNFunctionError("table must be strictly increasing in t and g")
    table = _LogLogTable(t, gv)
    lt = np.linspace(table.lt[0], table.lt[-1], 20 * t.size + 1)
    ratios = table._ratio(lt)
    if np.any(ratios <= 0):
        raise InvalidNFunctionError("interpolated growth ratio must stay positive")
    nf = NFunction(
        "tabulated",
        (),
        float(ratios.min()),
        float(ratios.max()),
        table=table,
    )
    return nf


def from_spec(kind: str, **params) -> NFunction:
    """Build a catalog N-function from a kind name and keyword parameters."""
    if kind == "power":
        return make_power(**params)
    if kind == "power-modular":
        return make_power_modular(**params)
    if kind == "power-log":
        return make_power_log(**params)
    if kind in ("piecewise", "piecewise-power"):
        return make_piecewise(**params)
    if kind == "tabulated":
        return make_tabulated(params["t"], params["g"])
    raise InvalidNFunctionError(f"unknown N-function kind {kind!r}")


# primitives and conjugates ---------------------------------------------------


def _gl_integral(fun, upper):
    """``int_0^upper fun`` for an array of upper limits, via ``u = v**4``."""
    v = _GL_NODES
    u = v**_SUB_POWER
    jac = _SUB_POWER * v ** (_SUB_POWER - 1)
    pts = upper[..., None] * u
    vals = fun(pts)
    return upper * np.sum(vals * (_GL_WEIGHTS * jac), axis=-1)


def eval_G(nf: NFunction, t):
    """``G(t) = int_0^t g(s) ds``.

    Closed forms are used for the power and piecewise kinds. Scalars go
    through adaptive quadrature at relative tolerance 1e-10; arrays use a
    64-point Gauss-Legendre rule after an endpoint-regularizing substitution.
    """
    arr, scalar = _as_array(t)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("G is evaluated at finite t >= 0 only")
    closed = nf._raw_G(nf.s0 * arr)
    if closed is not None:
        return _ret(closed / (nf.s0 * nf.lam), scalar)
    if scalar:
        tv = float(arr)
        if tv == 0.0:
            return 0.0
        val, _ = integrate.quad(nf.g, 0.0, tv, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
        return float(val)
    return _gl_integral(nf.g, arr)


def conjugate_g(nf: NFunction, s):
    """Generalized inverse ``g~(s) = sup{t : g(t) <= s}``.

    Monotone bisection on a bracket grown geometrically from ``[0, 1]``.
    Closed form for the power kind.
    """
    arr, scalar = _as_array(s)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("g~ is evaluated at finite s >= 0 only")
    closed = nf._raw_ginv(nf.lam * arr)
    if closed is not None:
        return _ret(closed / nf.s0, scalar)
    return _ret(_bisect_inverse(nf.g, arr), scalar)


def _bisect_inverse(g, s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    if not np.any(pos):
        return out
    target = s[pos]
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    # grow: hi doubles while g(hi) <= s
    while True:
        need = g(hi) <= target
        if not np.any(need):
            break
        if np.any(hi[need] > 1e300):
            raise RuntimeError("bracket growth failed: g appears bounded above")
        lo = np.where(need, hi, lo)
        hi = np.where(need, 2.0 * hi, hi)
    # shrink: hi halves while g(hi/2) > s, so the bracket is [hi/2, hi]
    for _ in range(2100):
        half = 0.5 * hi
        need = (lo == 0.0) & (g(half) > target) & (half > 0)
        if not np.any(need):
            break
        hi = np.where(need, half, hi)
    lo = np.where(lo == 0.0, 0.5 * hi, lo)
    lo = np.where(g(lo) > target, 0.0, lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if np.all(done):
            break
        up = g(mid) <= target
        lo = np.where(up & ~done, mid, lo)
        hi = np.where(~up & ~done, mid, hi)
    out[pos] = lo
    return out


def conjugate_G(nf: NFunction, s):
    """Complementary function ``G~(s) = int_0^s g~``, by quadrature of ``g~``."""
    arr, scalar = _as_array(s)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("G~ is evaluated at finite s >= 0 only")
    closed = nf._raw_Gconj(nf.lam * arr)
    if closed is not None:
        return _ret(closed / (nf.lam * nf.s0), scalar)
    if scalar:
        sv = float(arr)
        if sv == 0.0:
            return 0.0
        val, _ = integrate.quad(
            lambda x: conjugate_g(nf, x), 0.0, sv, epsabs=0.0, epsrel=QUAD_RTOL, limit=200
        )
        return float(val)
    return _gl_integral(lambda x: conjugate_g(nf, x), arr)


# growth certification and normalization ---------------------------------


@dataclass(frozen=True)
class GrowthBounds:
    g0_hat: float
    g1_hat: float

    def __iter__(self):
        return iter((self.g0_hat, self.g1_hat))

    def contains(self, g0, g1, tol=1e-4) -> bool:
        """Whether the empirical range sits inside the declared ``[g0, g1]``."""
        return self.g0_hat >= g0 - tol and self.g1_hat <= g1 + tol


def default_grid() -> np.ndarray:
    return np.logspace(-6.0, 6.0, 20001)


def estimate_growth_bounds(nf: NFunction, grid=None) -> GrowthBounds:
    """Empirical range of ``s g'(s) / g(s)`` over a log-spaced grid.

    The derivative is a central difference of ``log g`` in ``log s``; the grid
    must cover ``[1e-6, 1e6]`` with at least ``10**4`` points.
    """
    s = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if s.size < 10_000 or s.min() > 1e-6 or s.max() < 1e6 or np.any(s <= 0):
        raise ValueError("growth grid must span [1e-6, 1e6] with >= 1e4 positive points")
    s = np.sort(s)
    gv = nf.g(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log(gv)
        ls = np.log(s)
        ratio = (lg[2:] - lg[:-2]) / (ls[2:] - ls[:-2])
    if not np.all(np.isfinite(ratio)):
        raise InvalidNFunctionError("growth ratio undefined: g vanishes or overflows on the grid")
    return GrowthBounds(float(ratio.min()), float(ratio.max()))


def normalize(nf: NFunction, s0: float = 1.0) -> NFunction:
    """Return ``s -> g(s0 s) / g(s0)``; the result has value 1 at ``s = 1``."""
    s0 = float(s0)
    if not s0 > 0:
        raise ValueError("anchor s0 must be positive")
    lam = nf.g(s0)
    if not lam > 0:
        raise InvalidNFunctionError(f"g(s0) = {lam} must be positive to normalize")
    return replace(nf, s0=nf.s0 * s0, lam=nf.lam * lam)


# Lemma-style inequality audit ------------------------------------------------


@dataclass
class LemmaReport:
    """Worst relative slack per inequality; negative beyond ``tol`` is a violation."""

    kind: str
    samples: int
    worst_slack: dict
    violations: dict
    tol: float

    @property
    def total_violations(self) -> int:
        return int(sum(self.violations.values()))

    @property
    def ok(self) -> bool:
        return self.total_violations == 0

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "samples": self.samples,
            "tol": self.tol,
            "worst_slack": dict(self.worst_slack),
            "violations": dict(self.violations),
            "ok": self.ok,
        }


def _sandwich(lo, mid, hi):
    scale = np.maximum(np.abs(mid), np.finfo(float).tiny)
    return (mid - lo) / scale, (hi - mid) / scale


def verify_lemma_p1(nf: NFunction, sample_count: int = 10_000, seed: int = 0, tol: float = 1e-8):
    """Check the pointwise growth inequalities at random ``(s, t)`` pairs.

    Items ``a``-``f`` cover scaling of ``g``, ``G``, ``g~``, ``G~``, the
    ``t g(t)`` sandwich on ``G`` and the Young-type bound ``G~(g(t)) <= g1 G(t)``.
    Item ``g`` is the power sandwich of the normalized law. Samples are
    log-uniform on ``[1e-4, 1e4]``.
    """
    rng = np.random.default_rng(seed)
    s = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), sample_count))
    t = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), sample_count))
    g0, g1 = nf.g0, nf.g1
    st = s * t

    def mm(a, b):
        return np.minimum(a, b), np.maximum(a, b)

    checks = {}
    gt = nf.g(t)
    lo, hi = mm(s**g0, s**g1)
    checks["a"] = _sandwich(lo * gt, nf.g(st), hi * gt)

    Gt = nf.G(t)
    lo, hi = mm(s ** (1 + g0), s ** (1 + g1))
    checks["b"] = _sandwich(lo * Gt, nf.G(st), hi * Gt)

    checks["c"] = _sandwich(t * gt / (1 + g1), Gt, t * gt)

    gct = nf.g_conj(t)
    lo, hi = mm(s ** (1 / g0), s ** (1 / g1))
    checks["d"] = _sandwich(lo * gct, nf.g_conj(st), hi * gct)

    Gct = nf.G_conj(t)
    lo, hi = mm(s ** (1 + 1 / g0), s ** (1 + 1 / g1))
    checks["e"] = _sandwich(lo * Gct, nf.G_conj(st), hi * Gct)

    young = nf.G_conj(gt)
    upper = (g1 * Gt - young) / np.maximum(g1 * Gt, np.finfo(float).tiny)
    checks["f"] = (upper,)

    nrm = nf if nf.normalized else normalize(nf, 1.0)
    lo, hi = mm(s**g0, s**g1)
    checks["g"] = _sandwich(lo, nrm.g(s), hi)

    worst, viol = {}, {}
    for name, parts in checks.items():
        for side, arr in zip(("lower", "upper"), parts) if len(parts) == 2 else [("upper", parts[0])]:
            key = f"{name}.{side}"
            worst[key] = float(np.min(arr))
            viol[key] = int(np.count_nonzero(~(arr >= -tol)))
    return LemmaReport(nf.kind, sample_count, worst, viol, tol)
