"""Independent reference computations used by the tests.

Nothing here imports the package: each oracle recomputes its quantity from
first principles (closed forms, exact rationals, mpmath quadrature, direct
linear solves, brute-force search).
"""
from fractions import Fraction

import mpmath
import numpy as np
from scipy.linalg import solve_banded


def trapezoid_weights(N, R):
    """Exact 1-D cell-clipped lengths of ``[-R, R]`` on ``N`` nodes."""
    dx = 2.0 * R / (N - 1)
    w = np.full(N, dx)
    w[0] = w[-1] = dx / 2
    return w


def lq_norm(values, weights, q):
    """Discrete ``L^q`` norm ``(sum w |f|**q)**(1/q)``."""
    return float(np.sum(weights * np.abs(values) ** q) ** (1.0 / q))


def alpha_exact(g0, f0, n, r):
    """The space exponent as an exact fraction for rational inputs."""
    g0, f0, r = Fraction(g0), Fraction(f0), Fraction(r)
    A = (g0 + 1) * (f0 + 1)
    return ((A - n) * r - A) / ((f0 + 1) * (g0 * r - (g0 - 1)))


def plap_alpha_exact(p, q, n, r):
    p, q, r = Fraction(p), Fraction(q), Fraction(r)
    return ((p * q - n) * r - p * q) / (q * ((p - 1) * r - (p - 2)))


def power_log_G(beta, gamma, eta, t, dps=30):
    """``int_0^t s**beta log(gamma s + eta) ds`` in extended precision."""
    with mpmath.workdps(dps):
        f = lambda s: s**beta * mpmath.log(gamma * s + eta)
        return float(mpmath.quad(f, [0, t]))


def power_log_g(beta, gamma, eta, t):
    return t**beta * np.log(gamma * t + eta)


def inverse_brute(g, s, t_max, points=2_000_001):
    """``sup{t in grid : g(t) <= s}`` on a dense uniform grid of ``[0, t_max]``."""
    t = np.linspace(0.0, t_max, points)
    ok = np.flatnonzero(g(t) <= s)
    return float(t[ok[-1]]) if ok.size else 0.0


def conjugate_G_quad(ginv, s, dps=20):
    with mpmath.workdps(dps):
        return float(mpmath.quad(lambda x: ginv(float(x)), [0, s]))


def backward_euler_heat(u, dt, dx, f=None):
    """One backward Euler step of ``u_t = u_xx + f``, boundary values of ``u`` kept.

    Solves ``(I/dt - D2) w = u/dt + f`` on interior nodes with a banded solver.
    """
    u = np.asarray(u, dtype=float)
    m = u.size - 2
    f = np.zeros(u.size) if f is None else np.asarray(f, dtype=float)
    c = 1.0 / dx**2
    ab = np.zeros((3, m))
    ab[0, 1:] = -c
    ab[1, :] = 1.0 / dt + 2 * c
    ab[2, :-1] = -c
    rhs = u[1:-1] / dt + f[1:-1]
    rhs[0] += c * u[0]
    rhs[-1] += c * u[-1]
    w = u.copy()
    w[1:-1] = solve_banded((1, 1), ab, rhs)
    return w


def least_squares_slope(x, y):
    """Slope and intercept of ``log y`` on ``log x`` by the normal equations."""
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (a, b), *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(a), float(b)
