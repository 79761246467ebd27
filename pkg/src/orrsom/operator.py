"""Collocation of the Orr-Sommerfeld pencil on the semiaxis.

Two realisations of [0, inf) are available:

* ``truncated``: Chebyshev-Gauss-Lobatto nodes on [0, X_max] with u = u' = 0
  at both ends (default);
* ``algebraic``: x = L (1 + t) / (1 - t), the node at infinity is dropped
  (u = 0 there) and u_t(t=1) = 0 stands in for the far clamped condition.
  Its matrices therefore only act correctly on functions vanishing at
  infinity.

Clamped conditions are imposed by replacing equation rows (boundary
bordering); the matching rows of B are zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from .profiles import FlowProfile

__all__ = [
    "SCHEMES",
    "Grid",
    "DiffOps",
    "Pencil",
    "TestFunction",
    "chebyshev_diff_matrix",
    "clenshaw_curtis_weights",
    "build_grid",
    "diff_ops",
    "assemble_pencil",
    "assemble_a0",
    "inner_product",
    "norm",
    "apply_binv_a0",
    "write_matrix",
    "read_matrix",
    "export_pencil",
]

SCHEMES = ("truncated", "algebraic")


def chebyshev_diff_matrix(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes t_k = -cos(pi k/(n-1)) (increasing) and the first-derivative matrix."""
    k = np.arange(n)
    # sin form keeps the nodes exactly symmetric
    t = np.sin(np.pi * (2 * k - (n - 1)) / (2 * (n - 1)))
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** k
    dt = t[:, None] - t[None, :]
    d = np.outer(c, 1.0 / c) / (dt + np.eye(n))
    d -= np.diag(d.sum(axis=1))
    return t, d


def clenshaw_curtis_weights(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] for the n Chebyshev-Gauss-Lobatto nodes."""
    m = n - 1
    theta = np.pi * np.arange(n) / m
    w = np.zeros(n)
    v = np.ones(n - 2)
    inner = theta[1:-1]
    if m % 2 == 0:
        w[0] = w[-1] = 1.0 / (m * m - 1)
        for j in range(1, m // 2):
            v -= 2.0 * np.cos(2 * j * inner) / (4 * j * j - 1)
        v -= np.cos(m * inner) / (m * m - 1)
    else:
        w[0] = w[-1] = 1.0 / (m * m)
        for j in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * j * inner) / (4 * j * j - 1)
    w[1:-1] = 2.0 * v / m
    # theta runs 0..pi, i.e. t from +1 to -1; the weights are symmetric.
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Collocation nodes on [0, inf) and quadrature weights for int_0^inf."""

    scheme: str
    n: int
    nodes: np.ndarray
    map_param: float
    weights: np.ndarray
    t: np.ndarray  # reference coordinate in [-1, 1)
    dt_dx: np.ndarray

    @property
    def x_max(self) -> float:
        """Right end of the computational domain (inf for the algebraic map)."""
        return self.map_param if self.scheme == "truncated" else float("inf")

    def integrate(self, values) -> complex | float:
        return np.dot(self.weights, values)

    def describe(self) -> dict:
        return {"scheme": self.scheme, "N": self.n, "map_param": self.map_param}


def build_grid(scheme: str = "truncated", n: int = 128, map_param: float = 100.0) -> Grid:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if n < 16:
        raise ValueError("need at least 16 nodes")
    if not map_param > 0:
        raise ValueError("map parameter must be positive")
    if scheme == "truncated":
        t, _ = chebyshev_diff_matrix(n)
        x = map_param * (1.0 + t) / 2.0
        x[0], x[-1] = 0.0, map_param
        w = clenshaw_curtis_weights(n) * (map_param / 2.0)
        dt_dx = np.full(n, 2.0 / map_param)
    else:
        t_full, _ = chebyshev_diff_matrix(n + 1)
        t = t_full[:-1]
        x = map_param * (1.0 + t) / (1.0 - t)
        x[0] = 0.0
        jac = 2.0 * map_param / (1.0 - t) ** 2
        w = clenshaw_curtis_weights(n + 1)[:-1] * jac
        dt_dx = 1.0 / jac
    for a in (x, w, t, dt_dx):
        a.setflags(write=False)
    return Grid(scheme, n, x, float(map_param), w, t, dt_dx)


@dataclass(frozen=True, eq=False)
class DiffOps:
    """Nodal differentiation matrices and the clamped boundary bordering.

    ``constraints`` holds one row per entry of ``boundary_rows``; a vector u
    satisfies the clamped conditions iff ``constraints @ u == 0``.
    """

    d1: np.ndarray
    d2: np.ndarray
    d4: np.ndarray
    constraints: np.ndarray
    boundary_rows: tuple[int, ...]

    @property
    def interior_rows(self) -> np.ndarray:
        mask = np.ones(self.d1.shape[0], dtype=bool)
        mask[list(self.boundary_rows)] = False
        return np.flatnonzero(mask)

    def border(self, m: np.ndarray) -> np.ndarray:
        """Copy of ``m`` with boundary rows replaced by the constraint rows."""
        out = np.array(m, dtype=np.result_type(m, self.constraints), copy=True)
        out[list(self.boundary_rows)] = self.constraints
        return out

    @property
    def d4_clamped(self) -> np.ndarray:
        return self.border(self.d4)


def diff_ops(g: Grid) -> DiffOps:
    n = g.n
    if g.scheme == "truncated":
        _, dt = chebyshev_diff_matrix(n)
        d1 = dt * (2.0 / g.map_param)
        d2 = d1 @ d1
        d4 = d2 @ d2
        constraints = np.zeros((4, n))
        constraints[0, 0] = 1.0
        constraints[1] = d1[0]
        constraints[2] = d1[-1]
        constraints[3, -1] = 1.0
        rows = (0, 1, n - 2, n - 1)
    else:
        _, dt = chebyshev_diff_matrix(n + 1)
        t_full = np.append(g.t, 1.0)
        d1_full = ((1.0 - t_full) ** 2 / (2.0 * g.map_param))[:, None] * dt
        # Row n (t = 1) of d1_full vanishes, so dropping the node at infinity
        # (where u = 0) commutes with forming products.
        d1 = d1_full[:n, :n]
        d2 = d1 @ d1
        d4 = d2 @ d2
        constraints = np.zeros((3, n))
        constraints[0, 0] = 1.0
        constraints[1] = d1[0]
        constraints[2] = dt[n, :n]
        rows = (0, 1, n - 1)
    for a in (d1, d2, d4, constraints):
        a.setflags(write=False)
    return DiffOps(d1, d2, d4, constraints, rows)


# --------------------------------------------------------------------------
# Pencil
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Pencil:
    """Dense complex pair (A, B) with A u = lambda B u."""

    A: np.ndarray
    B: np.ndarray
    a: float = float("nan")
    R: float = float("nan")
    profile: FlowProfile | None = None
    grid: Grid | None = None
    ops: DiffOps | None = None
    boundary_rows: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.A.shape != self.B.shape or self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError("A and B must be square matrices of equal size")

    @classmethod
    def from_matrices(cls, A, B) -> "Pencil":
        """Wrap raw matrices; zero rows of B are treated as constraint rows."""
        A = np.asarray(A, dtype=complex)
        B = np.asarray(B, dtype=complex)
        zero = tuple(int(i) for i in np.flatnonzero(~B.any(axis=1)))
        return cls(A, B, boundary_rows=zero)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def coupling(self) -> complex:
        """The factor i a R multiplying the flow terms."""
        return 1j * self.a * self.R

    def interior_condition(self) -> float:
        """2-norm condition number of B on the equation rows, restricted to
        vectors satisfying the boundary constraints."""
        from .eigensolver import reduce_pencil

        return reduce_pencil(self).cond


def _helmholtz(ops: DiffOps, a: float) -> np.ndarray:
    n = ops.d2.shape[0]
    return -ops.d2 + a * a * np.eye(n)


def assemble_a0(g: Grid, ops: DiffOps, a: float, R: float) -> np.ndarray:
    """Unbordered nodal (-D^2 + a^2)^2 + i a R (-D^2 + a^2)."""
    L = _helmholtz(ops, a)
    return (L @ L).astype(complex) + 1j * a * R * L


def assemble_pencil(
    p: FlowProfile, a: float, R: float, g: Grid, ops: DiffOps | None = None
) -> Pencil:
    """Collocate the pencil at the nodes of ``g``.

    A is built as A0 + i a R [diag(V - 1)(-D^2 + a^2) + diag(V'')] so that a
    profile identically equal to 1 reproduces A0 bit for bit.
    """
    if not (a > 0 and R > 0):
        raise ValueError("wave number a and Reynolds number R must be positive")
    if ops is None:
        ops = diff_ops(g)
    v, _, d2v = p.eval(g.nodes)
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(d2v))):
        raise ValueError("profile is not finite at every node")
    L = _helmholtz(ops, a)
    A = assemble_a0(g, ops, a, R)
    vm1 = v - 1.0
    if np.any(vm1) or np.any(d2v):
        A = A + 1j * a * R * (vm1[:, None] * L + np.diag(d2v))
    A = ops.border(A)
    B = L.astype(complex)
    rows = list(ops.boundary_rows)
    B[rows] = 0.0
    meta = {"scheme": g.scheme, "N": g.n, "map_param": g.map_param}
    return Pencil(A, B, a=float(a), R=float(R), profile=p, grid=g, ops=ops,
                  boundary_rows=ops.boundary_rows, meta=meta)


def inner_product(g: Grid, u, v) -> complex:
    """Quadrature approximation of int_0^inf u conj(v) dx."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != (g.n,) or v.shape != (g.n,):
        raise ValueError(f"expected vectors of length {g.n}, got {u.shape} and {v.shape}")
    return complex(np.sum(g.weights * u * np.conj(v)))


def norm(g: Grid, u) -> float:
    return float(np.sqrt(inner_product(g, u, u).real))


# --------------------------------------------------------------------------
# Test functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """u(x) = amp x^power e^{-decay x} (offset + wiggle sin(freq x)).

    With power >= 2 the clamped conditions u(0) = u'(0) = 0 hold exactly.
    Derivatives are exact (Leibniz rule), up to any order.
    """

    __test__ = False  # not a pytest class

    power: int = 2
    decay: float = 1.0
    amp: float = 1.0
    offset: float = 1.0
    wiggle: float = 0.0
    freq: float = 1.0

    def __post_init__(self):
        if self.power < 2:
            raise ValueError("power >= 2 is needed for u(0) = u'(0) = 0")
        if not self.decay > 0:
            raise ValueError("decay rate must be positive")

    def _poly_exp(self, x, k):
        # k-th derivative of x^m e^{-b x}
        m, b = self.power, self.decay
        e = np.exp(-b * x)
        out = np.zeros_like(x, dtype=float)
        for j in range(min(k, m) + 1):
            ff = np.prod(np.arange(m - j + 1, m + 1), dtype=float)  # m!/(m-j)!
            out += comb(k, j) * ff * x ** (m - j) * (-b) ** (k - j)
        return out * e

    def _trig(self, x, k):
        s = self.freq
        base = np.sin(s * x + k * np.pi / 2.0) * s**k * self.wiggle
        return base + (self.offset if k == 0 else 0.0)

    def derivative(self, x, k: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for j in range(k + 1):
            out += comb(k, j) * self._poly_exp(x, j) * self._trig(x, k - j)
        return self.amp * out

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivatives(self, x, order: int = 4) -> list[np.ndarray]:
        return [self.derivative(x, k) for k in range(order + 1)]

    def d2_at_zero(self) -> float:
        return float(self.derivative(np.array([0.0]), 2)[0])

    def decayed_by(self, x_max: float, rel: float = 1e-6) -> bool:
        x = np.linspace(0.0, x_max, 4001)
        peak = np.max(np.abs(self(x)))
        return abs(float(self(np.array([x_max]))[0])) <= rel * peak


def apply_binv_a0(g: Grid, a: float, R: float, u: TestFunction, ops: DiffOps | None = None):
    """Solve B w = A0 u numerically and evaluate the closed form
    -u'' + (a^2 + i a R) u + u''(0) e^{-a x}.

    A0 u is formed from the exact derivatives of ``u``; B is inverted on the
    grid with w(0) = 0 and w = 0 at the far end. Returns ``(lhs, rhs)``.
    """
    if ops is None:
        ops = diff_ops(g)
    x = g.nodes
    d = u.derivatives(x, 4)
    bu = -d[2] + a * a * d[0]
    bbu = d[4] - 2.0 * a * a * d[2] + a**4 * d[0]
    a0u = bbu + 1j * a * R * bu
    L = _helmholtz(ops, a).astype(complex)
    rhs_vec = a0u.astype(complex)
    dirichlet = [0] if g.scheme == "algebraic" else [0, g.n - 1]
    for i in dirichlet:
        L[i] = 0.0
        L[i, i] = 1.0
        rhs_vec[i] = 0.0
    try:
        lhs = np.linalg.solve(L, rhs_vec)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular B in B^{-1} A0 u solve") from exc
    closed = -d[2] + (a * a + 1j * a * R) * d[0] + u.d2_at_zero() * np.exp(-a * x)
    return lhs, closed


# --------------------------------------------------------------------------
# Debug export
# --------------------------------------------------------------------------


def write_matrix(path, m: np.ndarray, comment: str = "") -> Path:
    """Row-major ``re im`` pairs after a MatrixMarket-style banner."""
    path = Path(path)
    m = np.asarray(m, dtype=complex)
    with path.open("w") as fh:
        fh.write("%%MatrixMarket matrix array complex general row-major\n")
        if comment:
            fh.write(f"% {comment}\n")
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for z in m.ravel(order="C"):
            fh.write(f"{float(z.real)!r} {float(z.imag)!r}\n")
    return path


def read_matrix(path) -> np.ndarray:
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("%")]
    rows, cols = (int(s) for s in lines[0].split())
    vals = np.loadtxt(lines[1:], ndmin=2)
    if vals.shape != (rows * cols, 2):
        raise ValueError(f"{path}: expected {rows * cols} entries")
    return (vals[:, 0] + 1j * vals[:, 1]).reshape(rows, cols)


def export_pencil(P: Pencil, directory) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    note = f"a={P.a!r} R={P.R!r} boundary_rows={list(P.boundary_rows)}"
    return (
        write_matrix(directory / "A.mtx", P.A, "A " + note),
        write_matrix(directory / "B.mtx", P.B, "B " + note),
    )
