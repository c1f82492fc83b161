"""Shared numerical kernels: adaptive ODE integration, radial eigenvalue
shooting on a uniform grid, and the spherically symmetric Poisson solve.

All radial work uses the substitution u(r) = r * phi(r), which turns the
spherical Laplacian into a plain second derivative and removes the 2/r
coordinate singularity.  The discrete radial operator used consistently by
solvers and residual checks is the three-point form

    L[phi]_j = (r_{j+1} phi_{j+1} - 2 r_j phi_j + r_{j-1} phi_{j-1}) / (r_j h^2),

i.e. the central second difference applied to u = r*phi, divided by r_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NoBracket,
    NonDecayingSource,
    NonFiniteState,
    NotTrapped,
    StepUnderflow,
)

__all__ = [
    "RadialGrid",
    "RadialField",
    "radial_laplacian",
    "integrate_ivp",
    "IvpResult",
    "solve_radial_eigen",
    "solve_radial_poisson",
]


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid including r = 0."""

    r_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("n_points must be >= 16")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

    @property
    def spacing(self) -> float:
        return self.r_max / (self.n_points - 1)

    @property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.n_points)


@dataclass(frozen=True)
class RadialField:
    """Real sampled function on a RadialGrid."""

    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_points,):
            raise ValueError("values length must equal n_points")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def radial_laplacian(field: RadialField) -> np.ndarray:
    """Discrete spherical Laplacian of phi on interior nodes (j = 1..N-2)."""
    r = field.grid.r
    h = field.grid.spacing
    u = r * field.values
    return (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (r[1:-1] * h * h)


# ---------------------------------------------------------------------------
# Adaptive Dormand-Prince 4(5) initial-value integration
# ---------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


@dataclass
class IvpResult:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), dim)

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1]


def integrate_ivp(field, y0, span, tol=1e-8, max_steps=2_000_000) -> IvpResult:
    """Integrate dy/ds = field(s, y) over span with an embedded 4(5) pair.

    Accepts real or complex state vectors; returns the accepted step points.
    Raises StepUnderflow when the controller needs a step below
    1e-14 * |span| and NonFiniteState if the state leaves floating range.
    """
    s0, s1 = float(span[0]), float(span[1])
    y = np.atleast_1d(np.asarray(y0))
    if not np.issubdtype(y.dtype, np.complexfloating):
        y = y.astype(float)
    if tol <= 0:
        raise ValueError("tol must be positive")
    width = abs(s1 - s0)
    if width == 0.0:
        return IvpResult(np.array([s0]), y[None, :].copy())
    direction = 1.0 if s1 >= s0 else -1.0
    atol = tol * 1e-3 * max(1.0, float(np.max(np.abs(y))))
    h = direction * min(width / 100.0, 1.0)
    h_floor = 1e-14 * width

    ts = [s0]
    ys = [y.copy()]
    s = s0
    k = np.empty((7,) + y.shape, dtype=y.dtype)
    for _ in range(max_steps):
        if direction * (s + h - s1) > 0:
            h = s1 - s
        if abs(h) < h_floor:
            raise StepUnderflow(
                f"step size {abs(h):.3e} below 1e-14*|span| at s={s:.6g}"
            )
        with np.errstate(invalid="ignore", over="ignore"):
            k[0] = field(s, y)
            for i in range(1, 7):
                yi = y + h * sum(a * k[j] for j, a in enumerate(_DP_A[i]))
                k[i] = field(s + _DP_C[i] * h, yi)
            y5 = y + h * np.tensordot(_DP_B5, k, axes=1)
            y4 = y + h * np.tensordot(_DP_B4, k, axes=1)
        if not np.all(np.isfinite(y5.view(float))):
            raise NonFiniteState(f"non-finite state at s={s:.6g}")
        scale = atol + tol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.max(np.abs(y5 - y4) / scale))
        if err <= 1.0:
            s = s + h
            y = y5
            ts.append(s)
            ys.append(y.copy())
            if direction * (s - s1) >= 0 or abs(s - s1) < h_floor:
                return IvpResult(np.asarray(ts), np.asarray(ys))
            factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.1, 0.9 * err ** -0.2)
        h = h * factor
    raise NonFiniteState("max_steps exhausted without reaching span end")


# ---------------------------------------------------------------------------
# Radial eigenvalue shooting
# ---------------------------------------------------------------------------

def _count_nodes(u):
    """Raw interior sign-change count used by the eigenvalue search.

    Near an eigenvalue the count may flicker by one inside an exponentially
    thin band while the far tail changes sign; the bisection only needs the
    count to be a monotone step function away from that band.
    """
    x = u[1:]
    s = np.sign(x)
    if np.any(s == 0.0):  # carry the previous sign across exact zeros
        for i in range(1, len(s)):
            if s[i] == 0.0:
                s[i] = s[i - 1]
    return int(np.count_nonzero(s[1:] * s[:-1] < 0))


def _count_nodes_floor(u, rel=1e-8):
    """Node count of a converged (decaying) solution, ignoring values below
    rel * max|u| so that roundoff wiggle in the evanescent tail is not
    mistaken for structure."""
    x = u[1:]
    keep = np.abs(x) > rel * np.max(np.abs(x))
    s = np.sign(x[keep])
    return int(np.count_nonzero(s[1:] * s[:-1] < 0))


def _decay_mismatch(u, kappa_sq_vals, grid):
    h = grid.spacing
    r_max = grid.r_max
    kr = np.sqrt(max(-kappa_sq_vals[-1], 0.0))
    du = (u[-1] - u[-2]) / h
    return du - u[-1] * (1.0 / r_max - kr)


def solve_radial_eigen(kappa_sq, node_count, bracket, tol=1e-12, grid=None):
    """Find the radial eigenfrequency with a prescribed interior node count.

    kappa_sq(r_array, omega) must be monotone increasing in omega^2.  The
    solver shoots the regular solution outward to just past the outer
    turning point and the decaying solution (local WKB boundary condition
    phi'/phi = -|kappa| at r_max) inward to the same node, both with the
    same three-point recurrence; one-sided marches across a long forbidden
    region would require omega resolution below double precision.  The
    eigenvalue is bisected on the discrete Wronskian of the two pieces,
    which is grid-node independent for solutions of the recurrence.
    Returns (omega, RadialField), normalized to max|phi| = 1.
    """
    if grid is None:
        grid = RadialGrid(30.0, 2001)
    if node_count < 0:
        raise ValueError("node_count must be >= 0")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise ValueError("bracket must satisfy lo < hi")
    r = grid.r
    h = grid.spacing
    n = grid.n_points
    r_mid = r[1:]  # kappa^2 sampled from node 1 on; node 0 uses the r->0 limit

    def ks(omega):
        vals = np.empty(n)
        vals[1:] = kappa_sq(r_mid, omega)
        vals[0] = kappa_sq(np.array([h * 1e-6]), omega)[0]
        return vals

    def prep(omega):
        kv = ks(omega)
        allowed = np.where(kv[1:-1] > 0.0)[0]
        jm = int(allowed[-1]) + 3 if allowed.size else n // 2
        jm = min(max(jm, 2), n - 3)
        c = (2.0 - h * h * kv).tolist()
        return kv, jm, c

    def march_out(kv, jm, c):
        # plain-float recurrence: much faster than ndarray scalar indexing
        u = [0.0] * (jm + 2)
        u[1] = h * (1.0 - kv[0] * h * h / 6.0)
        um, uj = u[0], u[1]
        for j in range(1, jm + 1):
            un = c[j] * uj - um
            if un > 1e200 or un < -1e200:
                inv = 1e-200
                for i in range(j + 1):
                    u[i] *= inv
                um, uj, un = um * inv, uj * inv, un * inv
            u[j + 1] = un
            um, uj = uj, un
        return u

    def march_in(kv, jm, c):
        v = [0.0] * n
        kr = float(np.sqrt(max(-kv[-1], 0.0)))
        v[n - 1] = 1.0
        v[n - 2] = 1.0 + h * kr - h / grid.r_max  # u'/u = 1/R - |kappa| at R
        vp, vj = v[n - 1], v[n - 2]
        for j in range(n - 2, jm - 1, -1):
            vm = c[j] * vj - vp
            if vm > 1e200 or vm < -1e200:
                inv = 1e-200
                for i in range(j, n):
                    v[i] *= inv
                vp, vj, vm = vp * inv, vj * inv, vm * inv
            v[j - 1] = vm
            vp, vj = vj, vm
        return v

    def pieces(omega):
        kv, jm, c = prep(omega)
        u = march_out(kv, jm, c)
        v = march_in(kv, jm, c)
        return kv, jm, np.asarray(u), np.asarray(v)

    def wronskian(omega):
        # scale both pieces to O(1) at the match node: only the sign and
        # zero of the cross product matter, and raw magnitudes can overflow
        kv, jm, c = prep(omega)
        u = march_out(kv, jm, c)
        v = march_in(kv, jm, c)
        mu = max(abs(u[jm]), abs(u[jm + 1])) or 1.0
        mv = max(abs(v[jm]), abs(v[jm + 1])) or 1.0
        return (u[jm] / mu) * (v[jm + 1] / mv) - (u[jm + 1] / mu) * (v[jm] / mv)

    def count_out(omega):
        kv, jm, c = prep(omega)
        u = np.asarray(march_out(kv, jm, c))
        s = np.sign(u[1 : jm + 1])
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] * s[:-1] < 0))

    if np.all(ks(hi) <= 0.0):
        raise NotTrapped("kappa^2 <= 0 everywhere: no classically allowed region")

    c_lo, c_hi = count_out(lo), count_out(hi)
    if c_lo > node_count or c_hi <= node_count:
        exc = NoBracket(
            f"bracket node counts ({c_lo}, {c_hi}) do not straddle mode {node_count}"
        )
        exc.counts = (c_lo, c_hi)
        raise exc

    def transition(target, a, b, ca, cb):
        """Largest omega with count < target and smallest with count >= target."""
        while b - a > max(tol, 1e-14) * max(1.0, abs(hi)):
            mid = 0.5 * (a + b)
            cm = count_out(mid)
            if cm < target:
                a, ca = mid, cm
            else:
                b, cb = mid, cm
        return a, b

    # plateau where the outward count equals node_count: the eigenvalue is
    # its single interior Wronskian zero
    if c_lo == node_count:
        w_a = lo
    else:
        _, w_a = transition(node_count, lo, hi, c_lo, c_hi)
    _, w_b0 = transition(node_count + 1, w_a, hi, count_out(w_a), c_hi)
    w_b = w_b0
    fa, fb = wronskian(w_a), wronskian(w_b)
    # step the upper end just below the count transition if needed
    if fa * fb > 0:
        shrink = 0.5 * (w_b - w_a)
        for _ in range(60):
            w_try = w_b - shrink
            if w_try <= w_a:
                break
            ft = wronskian(w_try)
            if fa * ft <= 0 and count_out(w_try) == node_count:
                w_b, fb = w_try, ft
                break
            shrink *= 0.5
        if fa * fb > 0:
            raise NoBracket("matching Wronskian has equal signs on the plateau")
    a, b = w_a, w_b
    while b - a > tol * max(1.0, abs(hi)):
        mid = 0.5 * (a + b)
        fm = wronskian(mid)
        if fa * fm <= 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    omega = 0.5 * (a + b)

    kv, jm, u, v = pieces(omega)
    full = np.empty(n)
    full[: jm + 1] = u[: jm + 1]
    scale = u[jm] / v[jm] if v[jm] != 0 else 0.0
    full[jm + 1 :] = scale * v[jm + 1 :]
    phi = np.empty(n)
    phi[1:] = full[1:] / r[1:]
    phi[0] = full[1] / h / (1.0 - kv[0] * h * h / 6.0)
    peak = np.max(np.abs(phi))
    phi /= peak
    if _count_nodes_floor(r * phi) != node_count:
        raise NotTrapped("converged solution has the wrong node count")
    if abs(phi[-1]) > 1e-3:
        raise NotTrapped(
            f"tail magnitude {abs(phi[-1]):.2e} exceeds 1e-3 of the peak"
        )
    return omega, RadialField(grid, phi)


# ---------------------------------------------------------------------------
# Spherically symmetric Poisson solve
# ---------------------------------------------------------------------------

def solve_radial_poisson(source: RadialField, sign=1) -> RadialField:
    """Solve laplacian(phi0) = -sign*source with phi0 -> 0 as r -> infinity.

    Tridiagonal solve for u = r*phi0 with u(0)=0 and u'(r_max)=0 (the
    exterior solution is u = const, i.e. the Coulomb tail).  The returned
    field satisfies the discrete operator identity exactly on interior
    nodes.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    grid = source.grid
    s = source.values
    smax = np.max(np.abs(s))
    if smax == 0.0:
        return RadialField(grid, np.zeros(grid.n_points))
    if np.max(np.abs(s[-5:])) > 1e-6 * smax:
        raise NonDecayingSource(
            "source tail exceeds 1e-6 of its maximum; 1/r matching invalid"
        )
    n = grid.n_points
    h = grid.spacing
    r = grid.r
    rhs = -sign * h * h * (-r * s)  # u'' = -sign*r*s  ->  -u'' = sign*r*s
    # assemble tridiagonal for -u'' = sign*r*s on j=1..n-2, u0=0, u_{n-1}=u_{n-2}
    from scipy.linalg import solve_banded

    m = n - 1  # unknowns u_1..u_{n-1}
    ab = np.zeros((3, m))
    ab[0, 1:] = -1.0  # superdiagonal
    ab[1, :] = 2.0  # diagonal
    ab[2, :-1] = -1.0  # subdiagonal
    b = sign * h * h * r[1:] * s[1:]
    # last row: u_{n-1} - u_{n-2} = 0
    ab[1, -1] = 1.0
    ab[2, -2] = -1.0
    b[-1] = 0.0
    u = solve_banded((1, 1), ab, b)
    u = np.concatenate(([0.0], u))
    phi = np.empty(n)
    phi[1:] = u[1:] / r[1:]
    phi[0] = phi[1] + sign * s[0] * h * h / 6.0
    return RadialField(grid, phi)
