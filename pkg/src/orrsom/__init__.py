"""Orr-Sommerfeld spectra on the semiaxis: Blasius profile, collocated pencil,
essential-spectrum ray and analytic eigenvalue enclosures."""

__version__ = "0.1.0"

from .profiles import (  # noqa: E402
    BlasiusSolution,
    FlowProfile,
    ProfileBounds,
    make_blasius_profile,
    make_constant_profile,
    make_tabulated_profile,
    profile_bounds,
    solve_blasius,
)
from .operator import Grid, Pencil, TestFunction, assemble_pencil, build_grid, diff_ops  # noqa: E402
from .eigensolver import Spectrum, filter_spectrum, solve_pencil, two_grid_spectrum  # noqa: E402
from .enclosure import (  # noqa: E402
    EnclosureRegion,
    EssentialRay,
    beta_decomposition,
    box_bounds,
    essential_ray,
    region,
    region_boundary,
    verify_spectrum,
)
