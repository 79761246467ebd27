"""Flow profiles on the semiaxis and their bound constants.

A profile provides ``V``, ``V'`` and ``V''`` at any ``x >= 0`` together with
its limit value ``c = lim V(x)``. The Blasius profile is obtained by shooting
on ``f''(0)`` for ``2 f''' + f f'' = 0``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "BlasiusError",
    "BlasiusSolution",
    "FlowProfile",
    "ConstantProfile",
    "TabulatedProfile",
    "BlasiusProfile",
    "AnalyticProfile",
    "ProfileBounds",
    "solve_blasius",
    "make_constant_profile",
    "make_tabulated_profile",
    "make_blasius_profile",
    "profile_bounds",
    "read_profile_csv",
    "write_profile_csv",
]

BRACKET = (0.1, 1.0)
DEFAULT_MARGIN = 1e-6


class BlasiusError(RuntimeError):
    """Shooting for the Blasius equation failed."""


# --------------------------------------------------------------------------
# Blasius equation
# --------------------------------------------------------------------------


def _rk4_blasius(s: float, x_max: float, h: float, keep: bool = False):
    """Integrate (f, f', f'') with f''' = -f f''/2 by classical RK4.

    Returns the end state, or the full trajectory when ``keep`` is set.
    Plain floats are used on purpose: the state is three numbers and numpy
    call overhead would dominate.
    """
    n = int(round(x_max / h))
    h = x_max / n
    f, g, p = 0.0, 0.0, s
    if keep:
        out = np.empty((n + 1, 3))
        out[0] = f, g, p
    half = 0.5 * h
    for i in range(n):
        k1f, k1g, k1p = g, p, -0.5 * f * p
        f2, g2, p2 = f + half * k1f, g + half * k1g, p + half * k1p
        k2f, k2g, k2p = g2, p2, -0.5 * f2 * p2
        f3, g3, p3 = f + half * k2f, g + half * k2g, p + half * k2p
        k3f, k3g, k3p = g3, p3, -0.5 * f3 * p3
        f4, g4, p4 = f + h * k3f, g + h * k3g, p + h * k3p
        k4f, k4g, k4p = g4, p4, -0.5 * f4 * p4
        f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
        g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        if keep:
            out[i + 1] = f, g, p
    if not (math.isfinite(f) and math.isfinite(g) and math.isfinite(p)):
        raise BlasiusError(f"integration blew up for f''(0)={s}")
    if keep:
        return np.linspace(0.0, x_max, n + 1), out
    return f, g, p


@dataclass(frozen=True)
class BlasiusSolution:
    """Converged shooting solution sampled on a uniform grid."""

    shoot_parameter: float
    x: np.ndarray
    f: np.ndarray
    df: np.ndarray
    d2f: np.ndarray
    d3f: np.ndarray
    step: float
    far_error: float
    iterations: int
    interpolation_order: int = 3

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    def ode_residual(self) -> float:
        """max |2 f''' + f f''| at the cell midpoints.

        On the nodes the identity holds by construction, so f and f'' come
        from their cubic Hermite interpolants and f''' is the derivative of
        the f'' interpolant.
        """
        xm = 0.5 * (self.x[1:] + self.x[:-1])
        f = CubicHermiteSpline(self.x, self.f, self.df)
        g = CubicHermiteSpline(self.x, self.d2f, self.d3f)
        return float(np.max(np.abs(2.0 * g.derivative()(xm) + f(xm) * g(xm))))


def solve_blasius(
    x_max: float = 20.0,
    tol_far: float = 1e-10,
    tol_root: float = 1e-12,
    step: float = 1e-3,
    max_iter: int = 200,
) -> BlasiusSolution:
    """Solve 2f''' + f f'' = 0, f(0) = f'(0) = 0, f'(inf) = 1 by shooting.

    The far condition is imposed as f'(x_max) = 1 and the shooting parameter
    s = f''(0) is found in the bracket [0.1, 1.0] with Brent's method.
    """
    if x_max < 10:
        raise ValueError("x_max must be at least 10")
    if tol_far <= 0 or tol_root <= 0 or step <= 0:
        raise ValueError("tolerances and step must be positive")

    def miss(s: float) -> float:
        return _rk4_blasius(s, x_max, step)[1] - 1.0

    lo, hi = BRACKET
    m_lo, m_hi = miss(lo), miss(hi)
    if m_lo * m_hi > 0:
        raise BlasiusError(f"f'(x_max) - 1 does not change sign on [{lo}, {hi}]")
    try:
        s, info = brentq(
            miss, lo, hi, xtol=tol_root, rtol=4 * np.finfo(float).eps,
            maxiter=max_iter, full_output=True,
        )
    except RuntimeError as exc:
        raise BlasiusError(str(exc)) from exc
    if not info.converged:
        raise BlasiusError(f"root finder did not converge: {info.flag}")

    x, y = _rk4_blasius(s, x_max, step, keep=True)
    f, df, d2f = y[:, 0], y[:, 1], y[:, 2]
    # f(0) = f'(0) = 0 are imposed exactly by the initial state.
    d3f = -0.5 * f * d2f + 0.0  # + 0.0 turns -0.0 at x = 0 into 0.0
    far = abs(df[-1] - 1.0)
    if far > tol_far:
        raise BlasiusError(f"|f'(x_max) - 1| = {far:.3e} exceeds tol_far={tol_far:.1e}")
    return BlasiusSolution(
        shoot_parameter=float(s), x=x, f=f, df=df, d2f=d2f, d3f=d3f,
        step=float(x[1] - x[0]), far_error=float(far), iterations=info.iterations,
    )


# --------------------------------------------------------------------------
# Profiles
# --------------------------------------------------------------------------


class FlowProfile:
    """A real flow profile V on [0, inf) with limit value ``c``.

    Subclasses implement :meth:`_eval`. Instances are immutable.
    """

    kind: str = "abstract"

    def __init__(self, c: float):
        self._c = float(c)

    @property
    def c(self) -> float:
        return self._c

    @property
    def nodes(self) -> np.ndarray | None:
        """Tabulation abscissae, if the profile has any."""
        return None

    def eval(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValueError("profile evaluated outside [0, inf)")
        return self._eval(x)

    __call__ = eval

    def _eval(self, x: np.ndarray):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind!r}, c={self.c})"


class ConstantProfile(FlowProfile):
    kind = "constant"

    def _eval(self, x):
        z = np.zeros_like(x)
        return np.full_like(x, self.c), z, z.copy()


class AnalyticProfile(FlowProfile):
    """Profile given by vectorised callables for V, V', V''."""

    kind = "analytic-expression"

    def __init__(self, v, dv, d2v, c: float, label: str = ""):
        super().__init__(c)
        self._fns = (v, dv, d2v)
        self.label = label

    def _eval(self, x):
        return tuple(np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape).copy()
                     for fn in self._fns)


class TabulatedProfile(FlowProfile):
    """Piecewise interpolation of (x, V, V', V'') samples.

    V is cubic Hermite with slopes V', V' is cubic Hermite with slopes V'',
    V'' is piecewise linear. Beyond the last sample the profile is (c, 0, 0).
    """

    kind = "tabulated"

    def __init__(self, x, v, dv, d2v, c: float):
        super().__init__(c)
        x, v, dv, d2v = (np.asarray(a, dtype=float) for a in (x, v, dv, d2v))
        if x.size == 0:
            raise ValueError("empty profile table")
        if not (x.shape == v.shape == dv.shape == d2v.shape) or x.ndim != 1:
            raise ValueError("table columns must be 1-D and of equal length")
        if x[0] != 0.0:
            raise ValueError("table must start at x = 0")
        if x.size > 1 and np.any(np.diff(x) <= 0):
            raise ValueError("table abscissae must be strictly increasing")
        if not all(np.all(np.isfinite(a)) for a in (v, dv, d2v)):
            raise ValueError("table contains non-finite values")
        self._x, self._v, self._dv, self._d2v = x, v, dv, d2v
        for a in (self._x, self._v, self._dv, self._d2v):
            a.setflags(write=False)
        if x.size > 1:
            self._v_spline = CubicHermiteSpline(x, v, dv, extrapolate=False)
            self._dv_spline = CubicHermiteSpline(x, dv, d2v, extrapolate=False)

    @property
    def nodes(self):
        return self._x

    @property
    def table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self._x, self._v, self._dv, self._d2v

    def _inside(self, x):
        return self._v_spline(x), self._dv_spline(x), np.interp(x, self._x, self._d2v)

    def _eval(self, x):
        v = np.full_like(x, self.c)
        dv = np.zeros_like(x)
        d2v = np.zeros_like(x)
        if self._x.size == 1:
            at = x == 0.0
            v[at], dv[at], d2v[at] = self._v[0], self._dv[0], self._d2v[0]
            return v, dv, d2v
        # Exact node hits are copied from the table so interpolation round-off
        # never touches tabulated values.
        inside = x <= self._x[-1]
        if np.any(inside):
            xi = x[inside]
            vi, dvi, d2vi = self._inside(xi)
            idx = np.searchsorted(self._x, xi)
            idx = np.minimum(idx, self._x.size - 1)
            hit = self._x[idx] == xi
            vi[hit], dvi[hit], d2vi[hit] = self._v[idx[hit]], self._dv[idx[hit]], self._d2v[idx[hit]]
            v[inside], dv[inside], d2v[inside] = vi, dvi, d2vi
        return v, dv, d2v


class BlasiusProfile(TabulatedProfile):
    """V = f' from a :class:`BlasiusSolution`.

    Between grid points V'' = -f f''/2 is rebuilt from Hermite interpolants
    of f and f'' instead of linear interpolation, so the sign V'' < 0 and
    the ODE relation survive interpolation.
    """

    kind = "blasius"

    def __init__(self, solution: BlasiusSolution, c: float = 1.0):
        super().__init__(solution.x, solution.df, solution.d2f, solution.d3f, c)
        self.solution = solution
        self._f_spline = CubicHermiteSpline(solution.x, solution.f, solution.df, extrapolate=False)

    def _inside(self, x):
        f = self._f_spline(x)
        d2f = self._dv_spline(x)
        return self._v_spline(x), d2f, -0.5 * f * d2f


def make_constant_profile(c: float) -> ConstantProfile:
    return ConstantProfile(c)


def make_tabulated_profile(samples, c: float) -> TabulatedProfile:
    """Build a profile from rows ``(x, V, V', V'')`` (or a 4-column array)."""
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("empty profile table")
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError("samples must be rows of (x, V, dV, d2V)")
    return TabulatedProfile(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], c)


def make_blasius_profile(solution: BlasiusSolution | None = None, **kwargs) -> BlasiusProfile:
    if solution is None:
        solution = solve_blasius(**kwargs)
    return BlasiusProfile(solution)


# --------------------------------------------------------------------------
# Bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileBounds:
    """Constants with V_min <= V <= V_max, |V'| <= dv_abs_max and
    d2v_min <= V'' <= d2v_max on [0, inf).

    ``margin`` records how far the sampled extremes were widened; the bounds
    are heuristic unless ``margin == 0`` (exact profiles).
    """

    v_min: float
    v_max: float
    dv_abs_max: float
    d2v_min: float
    d2v_max: float
    c: float
    margin: float = 0.0

    def __post_init__(self):
        if not (self.v_min <= self.v_max and self.d2v_min <= self.d2v_max and self.dv_abs_max >= 0):
            raise ValueError(f"inconsistent bounds {self}")

    @property
    def concave(self) -> bool:
        """Whether V'' <= 0 holds, up to the widening margin."""
        return self.d2v_max - self.margin <= 0.0

    def violations(self, v, dv, d2v, tol: float = 0.0) -> int:
        v, dv, d2v = (np.asarray(a) for a in (v, dv, d2v))
        bad = (
            (v < self.v_min - tol) | (v > self.v_max + tol)
            | (np.abs(dv) > self.dv_abs_max + tol)
            | (d2v < self.d2v_min - tol) | (d2v > self.d2v_max + tol)
        )
        return int(np.count_nonzero(bad))

    def to_dict(self) -> dict:
        return {
            "v_min": self.v_min, "v_max": self.v_max, "dv_abs_max": self.dv_abs_max,
            "d2v_min": self.d2v_min, "d2v_max": self.d2v_max, "c": self.c,
            "margin": self.margin,
        }


def _scan_points(p: FlowProfile, n_scan: int, length: float) -> np.ndarray:
    # x = L t/(1-t) spreads n_scan points over [0, inf); the limit itself is
    # added separately as (c, 0, 0).
    t = np.linspace(0.0, 1.0, n_scan, endpoint=False)
    x = length * t / (1.0 - t)
    extra = [x]
    if p.nodes is not None:
        extra.append(p.nodes)
    return np.unique(np.concatenate(extra))


def _refine(fun, x: np.ndarray, vals: np.ndarray) -> float:
    """Minimum of ``fun`` polished by a bounded search around the best sample."""
    i = int(np.argmin(vals))
    best = float(vals[i])
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, x.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: float(fun(t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, hi)})
        if np.isfinite(res.fun):
            best = min(best, float(res.fun))
    return best


def profile_bounds(
    p: FlowProfile, n_scan: int = 4000, margin: float = DEFAULT_MARGIN, length: float = 5.0
) -> ProfileBounds:
    """Sample V, V', V'' densely, polish each extreme locally and widen it
    outward by ``margin``.

    Constant profiles are exact and get no widening.
    """
    if n_scan < 100:
        raise ValueError("n_scan must be at least 100")
    if isinstance(p, ConstantProfile):
        return ProfileBounds(p.c, p.c, 0.0, 0.0, 0.0, p.c, margin=0.0)
    x = _scan_points(p, n_scan, length)
    v, dv, d2v = p.eval(x)
    if not all(np.all(np.isfinite(a)) for a in (v, dv, d2v)):
        raise ValueError("profile produced non-finite samples")

    def comp(k, sign):
        return lambda t: sign * p.eval(t)[k]

    v_min = _refine(comp(0, 1.0), x, v)
    v_max = -_refine(comp(0, -1.0), x, -v)
    dv_abs = -_refine(lambda t: -abs(p.eval(t)[1]), x, -np.abs(dv))
    d2v_min = _refine(comp(2, 1.0), x, d2v)
    d2v_max = -_refine(comp(2, -1.0), x, -d2v)
    # the limit (c, 0, 0) belongs to the closure of the sampled set
    return ProfileBounds(
        v_min=min(v_min, p.c) - margin,
        v_max=max(v_max, p.c) + margin,
        dv_abs_max=max(dv_abs, 0.0) + margin,
        d2v_min=min(d2v_min, 0.0) - margin,
        d2v_max=max(d2v_max, 0.0) + margin,
        c=p.c,
        margin=margin,
    )


# --------------------------------------------------------------------------
# CSV + JSON sidecar
# --------------------------------------------------------------------------

CSV_HEADER = ("x", "V", "dV", "d2V")


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_sidecar(path, c: float, **extra) -> Path:
    side = sidecar_path(path)
    side.write_text(json.dumps({"c": c, **extra}) + "\n")
    return side


def write_profile_csv(path, p: FlowProfile, x: Sequence[float] | None = None) -> Path:
    """Write ``x,V,dV,d2V`` rows plus a ``{"c": ...}`` sidecar next to it."""
    path = Path(path)
    if x is None:
        if p.nodes is None:
            raise ValueError("x grid required for profiles without nodes")
        x = p.nodes
    x = np.asarray(x, dtype=float)
    v, dv, d2v = p.eval(x)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in zip(x, v, dv, d2v):
            w.writerow([repr(float(a)) for a in row])
    write_sidecar(path, p.c)
    return path


def read_profile_csv(path, c: float | None = None) -> TabulatedProfile:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(ln for ln in fh if not ln.startswith("#"))
        header = tuple(h.strip() for h in next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
        rows: Iterable = [[float(a) for a in r] for r in reader if r]
    if c is None:
        side = sidecar_path(path)
        if not side.exists():
            raise FileNotFoundError(f"missing sidecar {side}")
        c = float(json.loads(side.read_text())["c"])
    return make_tabulated_profile(rows, c)
