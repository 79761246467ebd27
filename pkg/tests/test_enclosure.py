import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orrsom.eigensolver import Spectrum, two_grid_spectrum
from orrsom.enclosure import (
    VARIANTS,
    HypothesisError,
    box_bounds,
    beta_decomposition,
    contains,
    essential_ray,
    region,
    region_boundary,
    verify_spectrum,
)
from orrsom.operator import TestFunction, build_grid, diff_ops
from orrsom.profiles import (
    AnalyticProfile,
    ProfileBounds,
    make_constant_profile,
    profile_bounds,
)

from conftest import A_REF, R_REF
from oracles import minkowski_gap

AR = A_REF * R_REF
A2 = A_REF**2


# -- essential ray ----------------------------------------------------------


def test_ray_base():
    ray = essential_ray(A_REF, R_REF, 1.0)
    assert ray.base.real == pytest.approx(0.032041, abs=1e-12)
    assert ray.base.imag == pytest.approx(103.82, abs=1e-12)


def test_ray_on_real_axis_for_zero_limit():
    assert essential_ray(0.3, 100.0, 0.0).base == complex(0.09, 0.0)


def test_ray_distance():
    ray = essential_ray(A_REF, R_REF, 1.0)
    assert ray.distance(ray.base + 5) == 0.0
    assert ray.distance(ray.base - 3) == pytest.approx(3.0)
    assert ray.distance(ray.base + 7 + 4j) == pytest.approx(4.0)
    assert ray.distance(ray.base - 3 - 4j) == pytest.approx(5.0)


@given(st.floats(0.01, 2.0), st.floats(1.0, 5000.0), st.floats(-2.0, 2.0))
def test_ray_shift_is_exact(a, R, c):
    d = essential_ray(a, R, c).base - essential_ray(a, R, 0.0).base
    assert d == 1j * a * R * c


def test_ray_rejects_bad_parameters():
    with pytest.raises(ValueError):
        essential_ray(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        essential_ray(1.0, -1.0, 1.0)


# -- regions ----------------------------------------------------------------


def test_region_constants(blasius_bounds):
    reg = region("thm31", A_REF, R_REF, blasius_bounds)
    assert reg.r == pytest.approx(290 * 0.332057, abs=5e-3)
    assert reg.re0 == pytest.approx(0.032041)
    assert reg.im_lo == pytest.approx(0.0, abs=1e-3)
    assert reg.im_hi == pytest.approx(103.82, abs=1e-3)


def test_constant_region_is_strip():
    b = profile_bounds(make_constant_profile(1.0))
    for v in VARIANTS:
        reg = region(v, A_REF, R_REF, b)
        assert reg.r == 0.0
        assert reg.contains(A2 + 1j * AR)
        assert reg.contains(A2 + 50 + 1j * AR)
        assert not reg.contains(A2 - 1e-9 + 1j * AR)
        assert not reg.contains(A2 + 1j * (AR + 1e-9))


def test_hypothesis_violation():
    p = AnalyticProfile(
        lambda x: x * np.exp(-x), lambda x: (1 - x) * np.exp(-x), lambda x: (x - 2) * np.exp(-x), c=0.0
    )
    b = profile_bounds(p)
    assert not b.concave
    for v in ("thm33", "cor32-box-improved"):
        with pytest.raises(HypothesisError):
            region(v, 0.5, 100.0, b)
        with pytest.raises(HypothesisError):
            box_bounds(v, 0.5, 100.0, b)
    region("thm31", 0.5, 100.0, b)
    with pytest.raises(ValueError):
        region("thm99", 0.5, 100.0, b)


def test_contains_examples(blasius_bounds):
    t31 = region("thm31", A_REF, R_REF, blasius_bounds)
    t33 = region("thm33", A_REF, R_REF, blasius_bounds)
    corner = t31.re0 + 1j * t31.im_hi
    assert contains(t31, corner) and contains(t33, corner)
    assert contains(t31, 1 + 110j)
    assert not contains(t33, 1 + 110j)
    r = t33.r
    low_corner = complex(t33.re0 - r, t33.im_lo - r)
    assert not contains(t33, low_corner)
    assert not contains(t31, low_corner)
    # sharp top-left corner of thm33 belongs to it; the rounded one of thm31 does not
    top_left = complex(t33.re0 - r, t33.im_hi)
    assert contains(t33, top_left)
    assert contains(t31, top_left)
    assert not contains(t31, top_left + 1j * r * 0.5)


def test_contains_vectorized(blasius_bounds):
    reg = region("thm33", A_REF, R_REF, blasius_bounds)
    z = np.array([1 + 10j, 1 + 110j, -200 + 0j])
    np.testing.assert_array_equal(reg.contains(z), [True, False, False])


def test_box_bounds(blasius_bounds):
    re_min, im_min, im_max = box_bounds("cor32-box", A_REF, R_REF, blasius_bounds)
    assert re_min == pytest.approx(-96.26, abs=5e-3)
    assert im_min == pytest.approx(-96.30, abs=5e-3)
    assert im_max == pytest.approx(200.12, abs=5e-3)
    _, _, top = box_bounds("cor32-box-improved", A_REF, R_REF, blasius_bounds)
    assert top == pytest.approx(103.82, abs=2e-4)


def test_constant_box_is_exact():
    b = profile_bounds(make_constant_profile(1.0))
    for v in ("cor32-box", "cor32-box-improved"):
        assert box_bounds(v, A_REF, R_REF, b) == (A2, AR, AR)


# -- boundary polylines -----------------------------------------------------


def _outward_normals(pts):
    """Outward unit normals of a closed counter-clockwise polyline."""
    ring = pts[:-1]
    prev_seg = ring - np.roll(ring, 1)
    next_seg = np.roll(ring, -1) - ring
    n = -1j * (prev_seg / np.abs(prev_seg) + next_seg / np.abs(next_seg))
    return ring, n / np.abs(n)


@pytest.mark.parametrize("variant", VARIANTS)
def test_boundary_self_consistency(variant, blasius_bounds):
    reg = region(variant, A_REF, R_REF, blasius_bounds)
    pts = region_boundary(reg, n_pts=97)
    assert pts[0] == pts[-1]
    ring, normal = _outward_normals(pts)
    # signed area positive for counter-clockwise orientation
    x, y = ring.real, ring.imag
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) > 0
    cap = ring.real.max()
    scale = 1.0 + np.abs(ring).max()
    free = ring.real < cap - 1e-9 * scale
    assert np.all(reg.contains(ring, 1e-9 * scale))
    eps = 1e-6 * scale
    assert not np.any(reg.contains(ring[free] + eps * normal[free]))


def test_boundary_arc_radius(blasius_bounds):
    reg = region("thm31", A_REF, R_REF, blasius_bounds)
    pts = region_boundary(reg)
    d = np.abs(pts - complex(reg.re0, reg.im_lo))
    assert np.any(np.isclose(d, reg.r, rtol=0, atol=1e-12 * reg.r))
    assert np.isclose(d.min(), reg.r, rtol=1e-12)


def test_boundary_constant_rectangle():
    b = profile_bounds(make_constant_profile(1.0))
    pts = region_boundary(region("thm31", A_REF, R_REF, b), re_cap=5.0)
    assert pts.size == 5
    assert set(pts.real) == {A2, 5.0}
    assert set(pts.imag) == {AR}


def test_boundary_rejects_small_cap(blasius_bounds):
    with pytest.raises(ValueError):
        region_boundary(region("thm31", A_REF, R_REF, blasius_bounds), re_cap=0.0)


# -- geometry properties ----------------------------------------------------


def _window(reg, rng, n):
    r = reg.r
    re = rng.uniform(reg.re0 - 1.5 * r, reg.re0 + 1.5 * r, n)
    im = rng.uniform(reg.im_lo - 1.5 * r, reg.im_hi + 1.5 * r, n)
    return re + 1j * im


def test_inclusion_chain(rng, blasius_bounds):
    regs = {v: region(v, A_REF, R_REF, blasius_bounds) for v in VARIANTS}
    z = _window(regs["thm31"], rng, 100_000)
    m = {v: regs[v].contains(z) for v in VARIANTS}
    assert not np.any(m["thm33"] & ~m["thm31"])
    assert not np.any(m["thm31"] & ~m["cor32-box"])
    assert not np.any(m["thm33"] & ~m["cor32-box-improved"])
    assert not np.any(m["cor32-box-improved"] & ~m["cor32-box"])
    assert m["thm33"].any() and (m["thm31"] & ~m["thm33"]).any()


def _signed_margin(reg, z):
    """Distance of z to the region boundary; used only to define the band."""
    return abs(reg.strip_distance(z) - reg.r), abs(z.imag - reg.im_hi)


@pytest.mark.parametrize("variant", ["thm31", "thm33"])
def test_membership_matches_minkowski_oracle(variant, rng, blasius_bounds):
    reg = region(variant, A_REF, R_REF, blasius_bounds)
    scale = 1.0 + abs(complex(reg.re0 + reg.r, reg.im_hi + reg.r))
    band = 1e-9 * scale
    z = _window(reg, rng, 1000)
    disagreements = 0
    for zi in z:
        d_disc, d_top = _signed_margin(reg, zi)
        if d_disc < band or (variant == "thm33" and d_top < band):
            continue
        gap = minkowski_gap(zi, reg.re0, reg.im_lo, reg.im_hi, reg.r, variant == "thm33", rng)
        disagreements += bool(reg.contains(zi)) != (gap <= 0.5 * band)
    assert disagreements == 0


# -- beta decomposition -----------------------------------------------------


@pytest.fixture(scope="module")
def grid256():
    g = build_grid("truncated", 256, 100.0)
    return g, diff_ops(g)


def test_beta_constant_profile(grid256):
    g, ops = grid256
    b = beta_decomposition(g, make_constant_profile(1.0), A_REF, R_REF, TestFunction(), ops)
    assert b.beta2 == pytest.approx(1.0, abs=1e-12)
    assert b.beta3 == 0
    assert b.identity_error() <= 1e-8


def test_beta_blasius_identity(grid256, blasius):
    g, ops = grid256
    b = beta_decomposition(g, blasius, A_REF, R_REF, TestFunction(), ops)
    assert b.identity_error() <= 1e-8
    assert abs(b.beta1.imag) <= 1e-10 * abs(b.beta1)
    assert abs(b.beta2.imag) <= 1e-10 * abs(b.beta2)
    # refined grid oracle
    g2 = build_grid("truncated", 384, 100.0)
    b2 = beta_decomposition(g2, blasius, A_REF, R_REF, TestFunction())
    assert abs(b.lam_direct - b2.lam_direct) <= 1e-8 * (1 + abs(b2.lam_direct))


def test_beta_inadmissible(grid256):
    g, ops = grid256
    with pytest.raises(ValueError):
        beta_decomposition(g, make_constant_profile(1.0), A_REF, R_REF, TestFunction(amp=0.0), ops)


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(0.1, 10.0),
    beta=st.floats(0.5, 3.0),
    gamma=st.floats(-0.9, 0.9),
    a=st.floats(0.05, 1.0),
    R=st.floats(10.0, 2000.0),
)
def test_beta_bounds_property(alpha, beta, gamma, a, R, blasius, blasius_bounds):
    g = build_grid("truncated", 192, 100.0)
    u = TestFunction(power=2, decay=beta, amp=alpha, offset=1.0, wiggle=gamma)
    b = beta_decomposition(g, blasius, a, R, u)
    bd = blasius_bounds
    assert b.identity_error() <= 1e-8
    assert b.beta1.real >= a * a - 1e-10
    assert bd.v_min - 1e-8 <= b.beta2.real <= bd.v_max + 1e-8
    assert abs(b.beta3) <= bd.dv_abs_max / (2 * a) + 1e-8
    assert -1e-8 <= b.beta3.real <= -bd.d2v_min / (2 * a * a) + 1e-8


# -- verification -----------------------------------------------------------


def test_verify_empty(blasius_bounds):
    reg = region("thm33", A_REF, R_REF, blasius_bounds)
    rep = verify_spectrum(np.array([], dtype=complex), reg, essential_ray(A_REF, R_REF, 1.0))
    assert rep.summary["n_kept"] == 0 and rep.summary["n_inside"] == 0
    assert rep.all_inside
    json.loads(rep.to_json())


def test_verify_constant_spectrum_on_ray():
    p = make_constant_profile(1.0)
    s = two_grid_spectrum(p, A_REF, R_REF, 64)
    ray = essential_ray(A_REF, R_REF, 1.0)
    reg = region("thm33", A_REF, R_REF, profile_bounds(p))
    rep = verify_spectrum(s, reg, ray)
    lam = s.kept_eigenvalues
    assert rep.summary["n_kept"] == lam.size > 0
    assert np.all(ray.distance(lam) <= 1e-6 * (1 + np.abs(lam)))
    assert rep.all_inside and rep.summary["all_below_ray"]


def test_verify_flags_outside(blasius_bounds):
    reg = region("thm33", A_REF, R_REF, blasius_bounds)
    ray = essential_ray(A_REF, R_REF, 1.0)
    lam = np.array([1 + 10j, 1 + 300j])
    s = Spectrum(lam, np.zeros(2), np.ones(2, bool), np.full(2, np.nan), {})
    rep = verify_spectrum(s, reg, ray)
    assert rep.summary["n_outside"] == 1 and not rep.all_inside
    assert [e["inside"] for e in rep.entries] == [True, False]
    assert rep.summary["n_below_ray"] == 1
