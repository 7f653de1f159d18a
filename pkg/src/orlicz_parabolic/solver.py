"""Finite-difference solvers for ``u_t - div(g(|grad u|) grad u / |grad u|) = f``.

Nodes sit on ``[-R, R]^n`` (``n`` in {1, 2}) with Dirichlet data on the box
boundary and time runs over ``(-T, 0]``. Fluxes live on cell faces; in 2-D the
gradient at a face combines the normal difference with the average of the
tangential central differences at the two adjacent nodes.

The degenerate flux is regularized as ``g(s_eps) xi / s_eps`` with
``s_eps = sqrt(|xi|**2 + eps**2)``; the same regularization enters the energy
``sum G(s_eps)`` minimized by the implicit step, whose gradient is exactly the
explicit 1-D divergence operator.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .fields import SampledFunction, SpaceTimeField, grid_axis
from .nfunction import NFunction, eval_G

__all__ = [
    "NumericalError",
    "Problem",
    "SchemeOptions",
    "flux",
    "stable_dt",
    "step_explicit",
    "step_implicit_variational",
    "discrete_energy",
    "boundary_flux",
    "manufactured_problem",
    "solve",
]

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """A time step produced non-finite values or an inner solve failed."""


def _coefficient(nf: NFunction, s_eps):
    """``g(s)/s`` with its limit ``g'(0)`` at ``s = 0``."""
    s_eps = np.asarray(s_eps, dtype=float)
    pos = s_eps > 0
    out = np.empty_like(s_eps)
    out[pos] = nf.g(s_eps[pos]) / s_eps[pos]
    if np.any(~pos):
        out[~pos] = nf.dg(0.0)
    return out


def flux(nf: NFunction, grad, epsilon: float = 0.0):
    """Regularized flux ``g(s_eps) xi / s_eps`` for gradients ``xi`` of shape ``(..., n)``."""
    xi = np.asarray(grad, dtype=float)
    s_eps = np.sqrt(np.sum(xi * xi, axis=-1) + epsilon**2)
    return _coefficient(nf, s_eps)[..., None] * xi


# discrete operators -------------------------------------------------------------


def _diff_1d(N, dx):
    """Forward differences (N-1, N)."""
    return sp.diags([-np.ones(N - 1), np.ones(N - 1)], [0, 1], shape=(N - 1, N)) / dx


def _central_1d(N, dx):
    """Central differences at nodes 1..N-2, shape (N-2, N)."""
    return sp.diags([-np.ones(N - 2), np.ones(N - 2)], [0, 2], shape=(N - 2, N)) / (2 * dx)


class _Grid:
    """Face-difference operators acting on flattened node vectors."""

    def __init__(self, n: int, N: int, R: float):
        if n not in (1, 2):
            raise ValueError("only n in {1, 2} is supported")
        self.n, self.N, self.R = n, N, R
        self.x = grid_axis(N, R)
        self.dx = self.x[1] - self.x[0]
        dx = self.dx
        if n == 1:
            self.faces = [(_diff_1d(N, dx).tocsr(), None, 1.0)]
            interior = np.zeros(N, bool)
            interior[1:-1] = True
        else:
            # x-faces between (i, j) and (i+1, j) for interior rows j = 1..N-2
            D = _diff_1d(N, dx)
            C = _central_1d(N, dx)
            S = sp.eye(N, format="csr")[1:-1]  # selects rows 1..N-2
            A = (sp.eye(N - 1, N) + sp.eye(N - 1, N, 1)) * 0.5  # node average onto faces
            # flattened index = i * N + j (ij indexing)
            nx = sp.kron(D, S)
            tx = sp.kron(A, C)
            ny = sp.kron(S, D)
            ty = sp.kron(C, A)
            self.faces = [(nx.tocsr(), tx.tocsr(), 0.5), (ny.tocsr(), ty.tocsr(), 0.5)]
            interior = np.zeros((N, N), bool)
            interior[1:-1, 1:-1] = True
        self.interior = interior.ravel()
        self.shape = (N,) * n
        self.cell = dx**n

    def face_gradients(self, u):
        out = []
        for Dn, Dt, _ in self.faces:
            a = Dn @ u
            b = None if Dt is None else Dt @ u
            out.append((a, b))
        return out

    def face_speeds(self, u, eps):
        speeds = []
        for a, b in self.face_gradients(u):
            s2 = a * a if b is None else a * a + b * b
            speeds.append(np.sqrt(s2 + eps * eps))
        return speeds


_GRIDS: dict = {}


def _grid(n, N, R) -> _Grid:
    key = (n, N, float(R))
    if key not in _GRIDS:
        _GRIDS[key] = _Grid(n, N, R)
    return _GRIDS[key]


# problem description -------------------------------------------------------------


def _mesh(grid: _Grid):
    if grid.n == 1:
        return (grid.x,)
    return tuple(np.meshgrid(grid.x, grid.x, indexing="ij"))


@dataclass
class Problem:
    """A Dirichlet problem on ``[-R, R]^n x (-T, 0]``.

    ``initial``, ``boundary`` and ``source`` may be callables ``fun(x[, y], t)``
    (``initial`` without ``t``); ``source`` may also be a sampled field, read
    piecewise-constant in time. ``boundary=None`` freezes the initial boundary
    values. ``epsilon=None`` means one grid spacing.
    """

    nf: NFunction
    N: int
    initial: Callable | np.ndarray
    R: float = 1.0
    n: int = 1
    T: float = 1.0
    boundary: Callable | None = None
    source: Callable | SpaceTimeField | None = None
    epsilon: float | None = None
    exact: Callable | None = None

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.N < 3:
            raise ValueError("need at least 3 nodes per axis")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")

    @property
    def grid(self) -> _Grid:
        return _grid(self.n, self.N, self.R)

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def eps(self) -> float:
        return self.dx if self.epsilon is None else float(self.epsilon)

    def mesh(self):
        return _mesh(self.grid)

    def initial_values(self) -> np.ndarray:
        if callable(self.initial):
            u0 = np.asarray(self.initial(*self.mesh()), dtype=float) * np.ones(self.grid.shape)
        else:
            u0 = np.asarray(self.initial, dtype=float)
            if u0.shape != self.grid.shape:
                raise ValueError(f"initial data has shape {u0.shape}, grid is {self.grid.shape}")
        if not np.all(np.isfinite(u0)):
            raise ValueError("initial data must be finite")
        return u0.ravel().copy()

    def source_at(self, t: float) -> np.ndarray:
        size = self.N**self.n
        src = self.source
        if src is None:
            return np.zeros(size)
        if isinstance(src, SpaceTimeField):
            if src.N != self.N or src.n != self.n:
                raise ValueError("source field grid does not match the problem grid")
            j = int(math.floor((t - src.times[0]) / src.dt + 1e-9))
            j = min(max(j, 0), src.slices - 1)
            return src.values[j].ravel()
        return (np.asarray(src(*self.mesh(), t), dtype=float) * np.ones(self.grid.shape)).ravel()

    def apply_boundary(self, u: np.ndarray, t: float, u_init: np.ndarray) -> None:
        bd = ~self.grid.interior
        if self.boundary is None:
            u[bd] = u_init[bd]
        else:
            vals = np.asarray(self.boundary(*self.mesh(), t), dtype=float) * np.ones(self.grid.shape)
            u[bd] = vals.ravel()[bd]


@dataclass
class SchemeOptions:
    """Time-stepping controls.

    ``dt=None`` lets the explicit scheme pick ``stable_dt`` each step; the
    implicit scheme then steps at the output cadence.
    """

    scheme: str = "explicit"
    sigma: float = 0.9
    dt: float | None = None
    tol: float = 1e-11
    max_iter: int = 500

    def __post_init__(self):
        if self.scheme not in ("explicit", "implicit-variational"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.sigma <= 1:
            raise ValueError("CFL safety factor sigma must lie in (0, 1]")


# explicit scheme -------------------------------------------------------------------


def _divergence(grid: _Grid, nf: NFunction, u: np.ndarray, eps: float) -> np.ndarray:
    """Nodal values of ``-sum_faces D^T (coef * normal gradient)`` (the discrete div A)."""
    out = np.zeros_like(u)
    for (Dn, Dt, _), (a, b) in zip(grid.faces, grid.face_gradients(u)):
        s = np.sqrt(a * a + (0.0 if b is None else b * b) + eps * eps)
        out -= Dn.T @ (_coefficient(nf, s) * a)
    return out


def boundary_flux(u, problem: Problem, eps: float | None = None) -> float:
    """Integrated flux entering the interior through the boundary layer of faces."""
    grid = problem.grid
    eps = problem.eps if eps is None else eps
    u = np.asarray(u, dtype=float).ravel()
    div = _divergence(grid, problem.nf, u, eps)
    return float(np.sum(div[grid.interior]) * grid.cell)


def stable_dt(
    state: SampledFunction | np.ndarray,
    nf: NFunction,
    epsilon: float,
    sigma: float = 0.9,
    cap: float = math.inf,
    dx: float | None = None,
) -> float:
    """``sigma dx**2 / (2 n D_max)`` with ``D_max = max(g(s)/s, g'(s))`` over faces.

    A flat state of a degenerate law has ``D_max = 0``; ``cap`` is returned then.
    """
    if isinstance(state, SampledFunction):
        vals, R, n, N = state.values, state.R, state.n, state.N
    else:
        vals = np.asarray(state, dtype=float)
        n, N = vals.ndim, vals.shape[0]
        if dx is None:
            raise ValueError("dx is required for raw arrays")
        R = 0.5 * dx * (N - 1)
    grid = _grid(n, N, R)
    dmax = 0.0
    for s in grid.face_speeds(vals.ravel(), epsilon):
        if s.size:
            d = np.maximum(_coefficient(nf, s), nf.dg(s))
            dmax = max(dmax, float(np.max(d)))
    if not dmax > 0:
        return float(cap)
    return min(float(cap), sigma * grid.dx**2 / (2 * n * dmax))


def _check_finite(u, t, dt, what):
    if not np.all(np.isfinite(u)):
        bad = int(np.count_nonzero(~np.isfinite(u)))
        raise NumericalError(f"{what} step at t={t:.6g}, dt={dt:.3g}: {bad} non-finite values")


def step_explicit(state, t: float, dt: float, problem: Problem, u_init=None) -> np.ndarray:
    """Forward Euler face-flux update from ``t`` to ``t + dt`` (flattened nodes)."""
    grid = problem.grid
    u = np.asarray(state, dtype=float).ravel()
    u_init = u if u_init is None else u_init
    rate = _divergence(grid, problem.nf, u, problem.eps) + problem.source_at(t)
    new = u + dt * rate
    problem.apply_boundary(new, t + dt, u_init)
    _check_finite(new, t, dt, "explicit")
    return new


# implicit variational scheme ------------------------------------------------------


def discrete_energy(u, problem: Problem, f=None) -> float:
    """``sum_faces w G(s_eps) dx**n - sum_interior f u dx**n``."""
    grid = problem.grid
    u = np.asarray(u, dtype=float).ravel()
    e = 0.0
    for (_, _, w), s in zip(grid.faces, grid.face_speeds(u, problem.eps)):
        e += w * float(np.sum(eval_G(problem.nf, s)))
    e *= grid.cell
    if f is not None:
        e -= float(np.sum(f[grid.interior] * u[grid.interior])) * grid.cell
    return e


def _energy_parts(problem: Problem, w_full, u_old, f, dt):
    grid = problem.grid
    nf, eps = problem.nf, problem.eps
    I = grid.interior
    J = 0.0
    grad = np.zeros_like(w_full)
    coefs = []
    for (Dn, Dt, wt), (a, b) in zip(grid.faces, grid.face_gradients(w_full)):
        s = np.sqrt(a * a + (0.0 if b is None else b * b) + eps * eps)
        c = _coefficient(nf, s)
        coefs.append(c)
        J += wt * float(np.sum(eval_G(nf, s)))
        grad += wt * (Dn.T @ (c * a))
        if Dt is not None:
            grad += wt * (Dt.T @ (c * b))
    d = w_full[I] - u_old[I]
    J = grid.cell * (J - float(np.sum(f[I] * w_full[I])) + float(np.sum(d * d)) / (2 * dt))
    g_int = grid.cell * (grad[I] - f[I] + d / dt)
    return J, g_int, coefs


def _preconditioner(problem: Problem, coefs, dt):
    """Lagged-diffusivity matrix ``cell * (I/dt + sum_faces w D^T diag(coef) D)`` on interior nodes."""
    grid = problem.grid
    I = np.flatnonzero(grid.interior)
    K = None
    for (Dn, Dt, wt), c in zip(grid.faces, coefs):
        Cm = sp.diags(wt * c)
        term = Dn.T @ Cm @ Dn
        if Dt is not None:
            term = term + Dt.T @ Cm @ Dt
        K = term if K is None else K + term
    K = K.tocsr()[I][:, I]
    P = grid.cell * (K + sp.eye(I.size) / dt)
    return splu(P.tocsc())


@dataclass
class InnerSolveReport:
    iterations: int
    residual: float
    energy_old: float
    energy_new: float


def step_implicit_variational(
    state, t: float, dt: float, problem: Problem, opts: SchemeOptions | None = None, u_init=None,
    report: list | None = None,
) -> np.ndarray:
    """Backward Euler step as the minimizer of the incremental energy.

    ``J(w) = cell * [sum w_face G(s_eps(grad w)) - sum f w + sum (w - u)**2 / (2 dt)]``
    over interior values, boundary rows fixed at ``t + dt``. The minimizer is
    found by preconditioned gradient descent (lagged-diffusivity
    preconditioner) with Armijo backtracking.
    """
    opts = opts or SchemeOptions(scheme="implicit-variational")
    grid = problem.grid
    I = grid.interior
    u_old = np.asarray(state, dtype=float).ravel()
    u_init = u_old if u_init is None else u_init
    f = problem.source_at(t + dt)
    w = u_old.copy()
    problem.apply_boundary(w, t + dt, u_init)
    # reference energy of the old interior state with the new boundary values
    ref = u_old.copy()
    problem.apply_boundary(ref, t + dt, u_init)
    J_ref, _, _ = _energy_parts(problem, ref, u_old, f, dt)
    J, g, coefs = _energy_parts(problem, w, u_old, f, dt)
    scale = max(1.0, float(np.max(np.abs(u_old))))
    it = 0
    res = math.inf
    for it in range(1, opts.max_iter + 1):
        lu = _preconditioner(problem, coefs, dt)
        direction = lu.solve(g)
        res = float(np.max(np.abs(direction))) if direction.size else 0.0
        if res <= opts.tol * scale:
            break
        slope = float(g @ direction)
        step = 1.0
        for _ in range(60):
            trial = w.copy()
            trial[I] = w[I] - step * direction
            Jt, gt, ct = _energy_parts(problem, trial, u_old, f, dt)
            if Jt <= J - 1e-4 * step * slope or abs(Jt - J) <= 1e-15 * max(1.0, abs(J)):
                break
            step *= 0.5
        else:
            raise NumericalError(
                f"line search failed at t={t:.6g}: residual {res:.3e} after {it} iterations"
            )
        w, J, g, coefs = trial, Jt, gt, ct
    else:
        raise NumericalError(
            f"implicit step at t={t:.6g} did not converge: residual {res:.3e} after {opts.max_iter} iterations"
        )
    if J > J_ref + 1e-12 * max(1.0, abs(J_ref)):
        raise NumericalError(f"energy increased in implicit step: {J_ref} -> {J}")
    _check_finite(w, t, dt, "implicit")
    if report is not None:
        report.append(InnerSolveReport(it, res, J_ref, J))
    return w


# manufactured solutions -------------------------------------------------------------


def _d4(fun, h):
    """Fourth-order central difference operator for a one-argument callable."""
    return lambda z: (-fun(z + 2 * h) + 8 * fun(z + h) - 8 * fun(z - h) + fun(z - 2 * h)) / (12 * h)


def manufactured_source(u_exact: Callable, nf: NFunction, epsilon: float, h: float, n: int = 1,
                        h_t: float = 1e-3) -> Callable:
    """``f = u_t - div A(grad u)`` by nested fourth-order differences of ``u_exact``."""
    if n == 1:

        def f(x, t):
            ux = _d4(lambda z: u_exact(z, t), h)
            ax = lambda z: flux(nf, ux(z)[..., None], epsilon)[..., 0]
            ut = _d4(lambda s: u_exact(x, s), h_t)(t)
            return ut - _d4(ax, h)(x)

        return f

    def grad(x, y, t):
        gx = _d4(lambda z: u_exact(z, y, t), h)(x)
        gy = _d4(lambda z: u_exact(x, z, t), h)(y)
        return np.stack(np.broadcast_arrays(gx, gy), axis=-1)

    def f(x, y, t):
        ax = _d4(lambda z: flux(nf, grad(z, y, t), epsilon)[..., 0], h)(x)
        ay = _d4(lambda z: flux(nf, grad(x, z, t), epsilon)[..., 1], h)(y)
        ut = _d4(lambda s: u_exact(x, y, s), h_t)(t)
        return ut - ax - ay

    return f


def manufactured_problem(
    u_exact: Callable, nf: NFunction, epsilon: float | None, N: int, R: float = 1.0, n: int = 1,
    T: float = 1.0
) -> Problem:
    """Problem whose exact solution is ``u_exact(x[, y], t)``.

    The source is differenced at one tenth of the grid spacing; initial and
    boundary data come from ``u_exact``.
    """
    dx = 2.0 * R / (N - 1)
    eps = dx if epsilon is None else epsilon
    src = manufactured_source(u_exact, nf, eps, dx / 10.0, n)
    return Problem(
        nf=nf,
        N=N,
        R=R,
        n=n,
        T=T,
        initial=lambda *xs: u_exact(*xs, -T),
        boundary=u_exact,
        source=src,
        epsilon=eps,
        exact=u_exact,
    )


# time marching --------------------------------------------------------------------


def solve(problem: Problem, opts: SchemeOptions | None = None, cadence: float | None = None,
          stats: dict | None = None) -> SpaceTimeField:
    """March from ``t = -T`` to ``t = 0`` and sample every ``cadence`` time units.

    ``T / cadence`` must be an integer. Deterministic given its inputs.
    """
    opts = opts or SchemeOptions()
    T = problem.T
    cadence = T if cadence is None else float(cadence)
    m = T / cadence
    n_out = int(round(m))
    if n_out < 1 or abs(m - n_out) > 1e-9 * max(1.0, m):
        raise ValueError(f"T={T} is not an integer multiple of the cadence {cadence}")
    u_init = problem.initial_values()
    u = u_init.copy()
    t0 = -T
    problem.apply_boundary(u, t0, u_init)
    out = [u.copy()]
    steps = 0
    inner = [] if opts.scheme == "implicit-variational" else None
    grid = problem.grid
    for j in range(1, n_out + 1):
        t_target = t0 + j * cadence
        if j == n_out:
            t_target = 0.0
        t = t0 + (j - 1) * cadence
        while t < t_target - 1e-14 * max(1.0, abs(t_target)):
            remaining = t_target - t
            if opts.scheme == "explicit":
                dt_max = stable_dt(u.reshape(grid.shape), problem.nf, problem.eps, 1.0,
                                   cap=cadence, dx=grid.dx)
                if opts.dt is not None:
                    dt = opts.dt
                    if dt > dt_max * (1 + 1e-12):
                        raise NumericalError(
                            f"fixed dt={dt:.3g} exceeds the stability bound {dt_max:.3g} at t={t:.6g}"
                        )
                else:
                    dt = opts.sigma * dt_max
                # land exactly on the output time
                k = max(1, math.ceil(remaining / dt - 1e-9))
                dt = remaining / k
                u = step_explicit(u, t, dt, problem, u_init)
            else:
                dt = min(remaining, opts.dt if opts.dt is not None else cadence)
                k = max(1, math.ceil(remaining / dt - 1e-9))
                dt = remaining / k
                u = step_implicit_variational(u, t, dt, problem, opts, u_init, inner)
            t += dt
            steps += 1
        out.append(u.copy())
    if stats is not None:
        stats["steps"] = steps
        if inner:
            stats["inner_iterations"] = sum(r.iterations for r in inner)
    vals = np.stack(out).reshape((n_out + 1,) + grid.shape)
    return SpaceTimeField(vals, problem.R, cadence, 0.0)
