"""Essential-spectrum ray, eigenvalue enclosure regions and the beta identities.

With r = (R/2)|V'|_max and the half strip

    S = [a^2, inf) x i a R [V_min, V_max],

the regions are

    thm31   S + r * (closed unit disc)
    thm33   S + r * (lower closed half disc), requires V'' <= 0
    cor32-box            Re >= a^2 - r,  a R V_min - r <= Im <= a R V_max + r
    cor32-box-improved   as above with Im <= a R V_max, requires V'' <= 0
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .eigensolver import Spectrum
from .operator import DiffOps, Grid, TestFunction, diff_ops, inner_product
from .profiles import FlowProfile, ProfileBounds

__all__ = [
    "VARIANTS",
    "HypothesisError",
    "EssentialRay",
    "EnclosureRegion",
    "BetaDecomposition",
    "VerifyReport",
    "essential_ray",
    "region",
    "contains",
    "box_bounds",
    "region_boundary",
    "beta_decomposition",
    "verify_spectrum",
]

VARIANTS = ("thm31", "thm33", "cor32-box", "cor32-box-improved")
NEEDS_CONCAVE = ("thm33", "cor32-box-improved")
SLACK = 1e-6


class HypothesisError(ValueError):
    """A region needing V'' <= 0 was requested for a profile violating it."""


@dataclass(frozen=True)
class EssentialRay:
    """{base + mu : mu >= 0} with base = a^2 + i a R c."""

    a: float
    R: float
    c: float

    @property
    def base(self) -> complex:
        return complex(self.a * self.a, self.a * self.R * self.c)

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        b = self.base
        return np.hypot(np.maximum(b.real - z.real, 0.0), z.imag - b.imag)

    def points(self, re_cap: float, n: int = 2) -> np.ndarray:
        b = self.base
        return b.real + np.linspace(0.0, max(re_cap - b.real, 0.0), n) + 1j * b.imag


def essential_ray(a: float, R: float, c: float) -> EssentialRay:
    if not (a > 0 and R > 0):
        raise ValueError("a and R must be positive")
    return EssentialRay(float(a), float(R), float(c))


@dataclass(frozen=True)
class EnclosureRegion:
    variant: str
    a: float
    R: float
    bounds: ProfileBounds

    @property
    def r(self) -> float:
        return 0.5 * self.R * self.bounds.dv_abs_max

    @property
    def re0(self) -> float:
        return self.a * self.a

    @property
    def im_lo(self) -> float:
        return self.a * self.R * self.bounds.v_min

    @property
    def im_hi(self) -> float:
        return self.a * self.R * self.bounds.v_max

    def strip_distance(self, z):
        """Euclidean distance from z to the half strip S."""
        z = np.asarray(z, dtype=complex)
        dx = np.maximum(self.re0 - z.real, 0.0)
        dy = np.maximum(self.im_lo - z.imag, 0.0) + np.maximum(z.imag - self.im_hi, 0.0)
        return np.hypot(dx, dy)

    def box(self) -> tuple[float, float, float]:
        """(re_min, im_min, im_max) of the separate real/imaginary bounds."""
        r = self.r
        im_max = self.im_hi if self.variant in NEEDS_CONCAVE else self.im_hi + r
        return self.re0 - r, self.im_lo - r, im_max

    def contains(self, z, tol: float | np.ndarray = 0.0):
        z = np.asarray(z, dtype=complex)
        r = self.r
        if self.variant == "thm31":
            out = self.strip_distance(z) <= r + tol
        elif self.variant == "thm33":
            # Below the top edge the nearest strip point is never lower than z,
            # so the offset lies in the lower half disc.
            out = (z.imag <= self.im_hi + tol) & (self.strip_distance(z) <= r + tol)
        else:
            re_min, im_min, im_max = self.box()
            out = (z.real >= re_min - tol) & (z.imag >= im_min - tol) & (z.imag <= im_max + tol)
        return out if out.ndim else bool(out)

    def describe(self) -> dict:
        re_min, im_min, im_max = self.box()
        return {
            "variant": self.variant, "a": self.a, "R": self.R, "r": self.r,
            "strip": {"re_min": self.re0, "im_min": self.im_lo, "im_max": self.im_hi},
            "box": {"re_min": re_min, "im_min": im_min, "im_max": im_max},
            "bounds": self.bounds.to_dict(),
        }


def _check_variant(variant: str, b: ProfileBounds) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant in NEEDS_CONCAVE and not b.concave:
        raise HypothesisError(
            f"{variant} needs V'' <= 0 but the profile has V''_max = {b.d2v_max:.3e}"
        )


def region(variant: str, a: float, R: float, b: ProfileBounds) -> EnclosureRegion:
    if not (a > 0 and R > 0):
        raise ValueError("a and R must be positive")
    _check_variant(variant, b)
    return EnclosureRegion(variant, float(a), float(R), b)


def contains(reg: EnclosureRegion, z, tol=0.0):
    return reg.contains(z, tol)


def box_bounds(variant: str, a: float, R: float, b: ProfileBounds) -> tuple[float, float, float]:
    """Separate bounds re_min <= Re, im_min <= Im <= im_max.

    ``thm31``/``cor32-box`` give the plain box, ``thm33``/``cor32-box-improved``
    the one with the top lowered to a R V_max.
    """
    return region(variant, a, R, b).box()


def default_re_cap(reg: EnclosureRegion) -> float:
    return reg.re0 + 3.0 * reg.r + 10.0


def _arc(center: complex, r: float, start: float, stop: float, n: int) -> np.ndarray:
    th = np.linspace(start, stop, n)
    return center + r * np.exp(1j * th)


def region_boundary(reg: EnclosureRegion, re_cap: float | None = None, n_pts: int = 64) -> np.ndarray:
    """Closed counter-clockwise polyline of the region clipped to Re <= re_cap.

    The last point repeats the first. Circular pieces get ``n_pts`` samples.
    """
    if re_cap is None:
        re_cap = default_re_cap(reg)
    if re_cap <= reg.re0:
        raise ValueError("re_cap must exceed a^2")
    r, x0, lo, hi = reg.r, reg.re0, reg.im_lo, reg.im_hi
    if reg.variant in ("cor32-box", "cor32-box-improved") or r == 0.0:
        re_min, im_min, im_max = reg.box()
        corners = [re_cap + 1j * im_max, re_min + 1j * im_max, re_min + 1j * im_min, re_cap + 1j * im_min]
        pts = np.array(corners)
    elif reg.variant == "thm31":
        pts = np.concatenate([
            [re_cap + 1j * (hi + r)],
            _arc(complex(x0, hi), r, np.pi / 2, np.pi, n_pts),
            _arc(complex(x0, lo), r, np.pi, 1.5 * np.pi, n_pts),
            [re_cap + 1j * (lo - r)],
        ])
    else:  # thm33
        pts = np.concatenate([
            [re_cap + 1j * hi, (x0 - r) + 1j * hi],
            _arc(complex(x0, lo), r, np.pi, 1.5 * np.pi, n_pts),
            [re_cap + 1j * (lo - r)],
        ])
    return np.append(pts, pts[0])


# --------------------------------------------------------------------------
# Rayleigh quotient decomposition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BetaDecomposition:
    beta1: complex
    beta2: complex
    beta3: complex
    lam_direct: complex
    bu_u: complex  # <Bu, u>
    u_u: float  # <u, u>
    aR: float

    @property
    def lam(self) -> complex:
        return self.beta1 + 1j * self.aR * (self.beta2 - self.beta3)

    def identity_error(self) -> float:
        """|lam_direct - (beta1 + i a R (beta2 - beta3))| / (1 + |lam_direct|)."""
        return abs(self.lam_direct - self.lam) / (1.0 + abs(self.lam_direct))


def beta_decomposition(
    g: Grid, p: FlowProfile, a: float, R: float, u: TestFunction, ops: DiffOps | None = None
) -> BetaDecomposition:
    """Split the Rayleigh quotient <Au,u>/<Bu,u> of a test function.

    beta1 = ||Bu||^2/<Bu,u>, beta2 = (<Vu',u'> + a^2<Vu,u>)/<Bu,u>,
    beta3 = <V'u,u'>/<Bu,u>. B and A act on nodal values through the
    differentiation matrices; u and u' enter the beta terms exactly.
    """
    if ops is None:
        ops = diff_ops(g)
    x = g.nodes
    uu = u(x)
    du = u.derivative(x, 1)
    v, dv, d2v = p.eval(x)
    bu = -(ops.d2 @ uu) + a * a * uu
    bbu = -(ops.d2 @ bu) + a * a * bu
    au = bbu + 1j * a * R * (v * bu + d2v * uu)
    denom = inner_product(g, bu, uu)
    u_u = inner_product(g, uu, uu).real
    if not abs(denom) > 1e-14 * max(u_u, 1e-300):
        raise ValueError("<Bu, u> vanishes; test function is not admissible")
    beta1 = inner_product(g, bu, bu) / denom
    beta2 = (inner_product(g, v * du, du) + a * a * inner_product(g, v * uu, uu)) / denom
    beta3 = inner_product(g, dv * uu, du) / denom
    lam_direct = inner_product(g, au, uu) / denom
    return BetaDecomposition(beta1, beta2, beta3, lam_direct, denom, u_u, a * R)


# --------------------------------------------------------------------------
# Verification of computed spectra
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyReport:
    region: dict
    ray: dict
    slack: float
    entries: list
    summary: dict

    @property
    def all_inside(self) -> bool:
        return self.summary["all_inside"]

    def to_dict(self, **extra) -> dict:
        out = {"schema": 1}
        out.update(extra)
        out.update({"region": self.region, "ray": self.ray, "slack": self.slack,
                    "summary": self.summary, "eigenvalues": self.entries})
        return out

    def to_json(self, **extra) -> str:
        return json.dumps(self.to_dict(**extra), indent=2) + "\n"


def verify_spectrum(
    s: Spectrum | np.ndarray, reg: EnclosureRegion, ray: EssentialRay, slack: float = SLACK
) -> VerifyReport:
    """Check every kept eigenvalue against ``reg`` and ``ray``.

    The tolerance for eigenvalue lam is slack * (1 + |lam|).
    """
    lam = s.kept_eigenvalues if isinstance(s, Spectrum) else np.asarray(s, dtype=complex).ravel()
    tol = slack * (1.0 + np.abs(lam))
    inside = np.atleast_1d(reg.contains(lam, tol))
    dist = np.atleast_1d(ray.distance(lam))
    below = lam.imag <= ray.base.imag + tol
    entries = [
        {"re": float(z.real), "im": float(z.imag), "inside": bool(i),
         "ray_distance": float(d), "below_ray": bool(b)}
        for z, i, d, b in zip(lam, inside, dist, below)
    ]
    n = int(lam.size)
    summary = {
        "n_kept": n,
        "n_inside": int(np.count_nonzero(inside)),
        "n_outside": int(n - np.count_nonzero(inside)),
        "n_below_ray": int(np.count_nonzero(below)),
        "max_ray_distance": float(dist.max()) if n else 0.0,
        "all_inside": bool(np.all(inside)),
        "all_below_ray": bool(np.all(below)),
    }
    ray_info = {"base_re": ray.base.real, "base_im": ray.base.imag, "c": ray.c}
    return VerifyReport(reg.describe(), ray_info, slack, entries, summary)
