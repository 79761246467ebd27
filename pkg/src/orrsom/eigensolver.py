"""Dense generalized eigensolution of A u = lambda B u with spurious-mode control.

Default path: eliminate the boundary-bordered rows (where B vanishes) by
restricting to the null space of the constraint rows, then reduce the square
remainder to a standard problem ``(B_I Z)^{-1} A_I Z``. If that reduction is
ill-conditioned the full pencil goes to QZ instead.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .operator import Pencil

__all__ = [
    "Spectrum",
    "Reduction",
    "reduce_pencil",
    "solve_pencil",
    "filter_spectrum",
    "residual",
    "spectrum_from_json",
    "two_grid_spectrum",
]

log = logging.getLogger(__name__)

MAGNITUDE_CUTOFF = 1e8
RESIDUAL_RTOL = 1e-8
DRIFT_TOL = 1e-4
COND_THRESHOLD = 1e10
TIKHONOV = 1e-12


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Finite eigenvalues sorted by real part.

    ``drift`` is NaN until a two-grid comparison has been made.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    kept: np.ndarray
    drift: np.ndarray
    meta: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.eigenvalues.size

    @property
    def kept_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[self.kept]

    @property
    def resolution(self) -> int | None:
        return self.meta.get("N")

    def to_dict(self, **extra) -> dict:
        out = {"schema": 1}
        for key in ("a", "R", "N", "X_max"):
            out[key] = _plain(self.meta.get(key))
        out.update(extra)
        out["solver"] = {k: _plain(v) for k, v in self.meta.items() if k not in ("a", "R", "N", "X_max")}
        out["thresholds"] = {k: _plain(v) for k, v in self.thresholds.items()}
        out["eigenvalues"] = [
            {
                "re": float(z.real),
                "im": float(z.imag),
                "residual": float(r),
                "kept": bool(k),
                "drift": None if np.isnan(d) else float(d),
            }
            for z, r, k, d in zip(self.eigenvalues, self.residuals, self.kept, self.drift)
        ]
        return out

    def to_json(self, **extra) -> str:
        return json.dumps(self.to_dict(**extra), indent=2) + "\n"


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def spectrum_from_json(data: dict | str) -> Spectrum:
    if isinstance(data, str):
        data = json.loads(data)
    rows = data.get("eigenvalues", [])
    lam = np.array([complex(r["re"], r["im"]) for r in rows], dtype=complex)
    res = np.array([r.get("residual", 0.0) for r in rows], dtype=float)
    kept = np.array([r.get("kept", True) for r in rows], dtype=bool)
    drift = np.array([np.nan if r.get("drift") is None else r["drift"] for r in rows], dtype=float)
    meta = {k: data.get(k) for k in ("a", "R", "N", "X_max")}
    return Spectrum(lam, res, kept, drift, meta, dict(data.get("thresholds", {})))


@dataclass(frozen=True, eq=False)
class Reduction:
    """Restriction of a bordered pencil to the constraint null space."""

    basis: np.ndarray  # Z, columns span {u : constraint rows of A annihilate u}
    A: np.ndarray  # A_I Z
    B: np.ndarray  # B_I Z
    cond: float


def reduce_pencil(P: Pencil) -> Reduction:
    n = P.n
    rows = list(P.boundary_rows)
    if rows:
        Z = sla.null_space(P.A[rows])
        interior = np.setdiff1d(np.arange(n), rows)
    else:
        Z = np.eye(n)
        interior = np.arange(n)
    Ar = P.A[interior] @ Z
    Br = P.B[interior] @ Z
    if Ar.shape[0] != Ar.shape[1]:
        raise np.linalg.LinAlgError("constraint rows are not independent")
    cond = float(np.linalg.cond(Br))
    return Reduction(Z, Ar, Br, cond)


def residual(P: Pencil, lam: complex, v) -> float:
    """||(A - lam B) v|| / ||v||."""
    v = np.asarray(v)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("residual of the zero vector is undefined")
    return float(np.linalg.norm(P.A @ v - lam * (P.B @ v)) / nv)


def _inverse_iteration_residual(P: Pencil, lam: complex, start: np.ndarray) -> float:
    M = P.A - lam * P.B
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu = sla.lu_factor(M, check_finite=False)
        if np.any(np.diag(lu[0]) == 0):
            shift = TIKHONOV * max(np.linalg.norm(M, 1), 1.0)
            lu = sla.lu_factor(M + shift * np.eye(P.n), check_finite=False)
    v = sla.lu_solve(lu, start, check_finite=False)
    if not np.all(np.isfinite(v)) or not np.any(v):
        return residual(P, lam, start)
    return min(residual(P, lam, v), residual(P, lam, start))


def _residual_scale(P: Pencil) -> float:
    nb = np.linalg.norm(P.B)
    return np.linalg.norm(P.A) / nb if nb > 0 else np.linalg.norm(P.A)


def solve_pencil(
    P: Pencil,
    magnitude_cutoff: float = MAGNITUDE_CUTOFF,
    residual_rtol: float = RESIDUAL_RTOL,
    cond_threshold: float = COND_THRESHOLD,
    method: str = "auto",
) -> Spectrum:
    """All finite eigenvalues of the pencil with residuals and keep flags.

    ``kept`` requires |lambda| <= magnitude_cutoff and a residual no larger
    than residual_rtol * (||A||_F/||B||_F + |lambda|).
    """
    if method not in ("auto", "reduction", "qz"):
        raise ValueError(f"unknown method {method!r}")
    n_inf = 0
    path = method
    cond = float("nan")
    if method in ("auto", "reduction"):
        red = reduce_pencil(P)
        cond = red.cond
        if method == "reduction" or cond <= cond_threshold:
            path = "reduction"
            M = np.linalg.solve(red.B, red.A)
            lam, Y = sla.eig(M)
            U = red.basis @ Y
            n_inf = P.n - lam.size
        else:
            log.info("reduction ill-conditioned (cond=%.3e), using QZ", cond)
            path = "qz"
    if path == "qz":
        ab, U = sla.eig(P.A, P.B, homogeneous_eigvals=True)
        alpha, beta = ab
        small = np.abs(beta) <= np.finfo(float).eps * np.abs(alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(small, np.inf, alpha / np.where(small, 1.0, beta))
        finite = np.isfinite(lam)
        n_inf = int(np.count_nonzero(~finite))
        lam, U = lam[finite], U[:, finite]

    scale = _residual_scale(P)
    order = np.lexsort((lam.imag, lam.real))
    lam, U = lam[order], U[:, order]
    res = np.full(lam.size, np.inf)
    small_enough = np.abs(lam) <= magnitude_cutoff
    for i in np.flatnonzero(small_enough):
        u = U[:, i] / np.linalg.norm(U[:, i])
        res[i] = _inverse_iteration_residual(P, lam[i], u)
    kept = small_enough & (res <= residual_rtol * (scale + np.abs(lam)))
    meta = dict(P.meta)
    meta.update({
        "a": None if np.isnan(P.a) else P.a,
        "R": None if np.isnan(P.R) else P.R,
        "n": P.n,
        "path": path,
        "cond_estimate": cond,
        "n_infinite": n_inf,
        "residual_scale": scale,
    })
    if P.grid is not None:
        meta["N"] = P.grid.n
        meta["X_max"] = P.grid.map_param
    thresholds = {"magnitude_cutoff": magnitude_cutoff, "residual_rtol": residual_rtol,
                  "cond_threshold": cond_threshold}
    return Spectrum(lam, res, kept, np.full(lam.size, np.nan), meta, thresholds)


def filter_spectrum(s: Spectrum, s2: Spectrum, drift_tol: float = DRIFT_TOL) -> Spectrum:
    """Keep eigenvalues of ``s`` that reappear in the finer ``s2``.

    drift = |lam - lam'| / (1 + |lam|) with lam' the nearest kept eigenvalue
    of ``s2``.
    """
    n1, n2 = s.resolution, s2.resolution
    if n1 is not None and n2 is not None and n2 != 2 * n1:
        raise ValueError(f"second spectrum must have twice the resolution ({n2} != 2*{n1})")
    partners = s2.kept_eigenvalues
    drift = np.full(len(s), np.nan)
    kept = s.kept.copy()
    for i in np.flatnonzero(s.kept):
        if partners.size == 0:
            drift[i] = np.inf
        else:
            drift[i] = np.min(np.abs(partners - s.eigenvalues[i])) / (1.0 + abs(s.eigenvalues[i]))
        kept[i] = drift[i] <= drift_tol
    thresholds = dict(s.thresholds, drift_tol=drift_tol)
    meta = dict(s.meta, N_fine=n2)
    return replace(s, kept=kept, drift=drift, thresholds=thresholds, meta=meta)


def two_grid_spectrum(
    profile,
    a: float,
    R: float,
    n: int = 128,
    scheme: str = "truncated",
    map_param: float = 100.0,
    drift_tol: float = DRIFT_TOL,
    **solver_kw,
) -> Spectrum:
    """Solve at n and 2n nodes and keep the eigenvalues that agree."""
    from .operator import assemble_pencil, build_grid

    coarse, fine = (
        solve_pencil(assemble_pencil(profile, a, R, build_grid(scheme, m, map_param)), **solver_kw)
        for m in (n, 2 * n)
    )
    return filter_spectrum(coarse, fine, drift_tol)
